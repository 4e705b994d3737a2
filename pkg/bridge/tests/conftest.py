import pytest
import torch

from _fixture_lm import (
    EXTRA_WORDS,
    PUNCT,
    WORD_PALETTE,
    WireClient,
    artifact_vocab_tokens,
    warmup_text,
)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small causal LM saved locally, seeded and lightly warmed; no downloads needed."""
    from tokenizers import Tokenizer, decoders, models, pre_tokenizers
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    words = ["[UNK]", "[PAD]", "</s>"] + [str(d) for d in range(10)]
    words += PUNCT + EXTRA_WORDS + WORD_PALETTE
    vocab = {w: i for i, w in enumerate(words)}
    tok = Tokenizer(models.WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    tok.decoder = decoders.WordPiece(prefix="##", cleanup=False)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="[UNK]", pad_token="[PAD]", eos_token="</s>"
    )
    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=len(vocab), n_positions=512, n_embd=32, n_layer=2, n_head=2,
        bos_token_id=vocab["</s>"], eos_token_id=vocab["</s>"],
    )
    model = GPT2LMHeadModel(config)

    ids = fast.encode(warmup_text(), add_special_tokens=False)
    batch = torch.tensor([ids], dtype=torch.long)
    optimizer = torch.optim.Adam(model.parameters(), lr=5e-3)
    model.train()
    for _ in range(60):
        optimizer.zero_grad()
        loss = model(input_ids=batch, labels=batch).loss
        loss.backward()
        optimizer.step()
    model.eval()

    out = tmp_path_factory.mktemp("tinylm")
    model.save_pretrained(out)
    fast.save_pretrained(out)
    return str(out)


@pytest.fixture(scope="session")
def backend(tiny_model_dir):
    from lmbridge.backend import CausalLMBackend

    return CausalLMBackend(tiny_model_dir, max_prompt_tokens=400)


@pytest.fixture(scope="session")
def artifact_vocab_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("artifact") / "vocab.tsv"
    lines = [f"{tok}\t{i}" for i, tok in enumerate(artifact_vocab_tokens())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def bridge_server(backend, artifact_vocab_path):
    from lmbridge.server import BridgeServer
    from lmbridge.vocab import load_artifact_vocab

    return BridgeServer(backend, load_artifact_vocab(artifact_vocab_path), max_new_tokens=32)


@pytest.fixture(scope="session")
def tcp_bridge(bridge_server):
    from lmbridge.server import serve_tcp

    tcp = serve_tcp(bridge_server, "127.0.0.1", 0)
    yield tcp
    tcp.shutdown()
    tcp.server_close()


@pytest.fixture
def client(tcp_bridge):
    host, port = tcp_bridge.server_address
    c = WireClient(host, port)
    yield c
    c.close()
