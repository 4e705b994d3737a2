"""Causal LM wrapper: continuation scoring and greedy generation."""

from __future__ import annotations

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer


class BackendError(Exception):
    pass


class CausalLMBackend:
    """Loads a pretrained causal LM and scores text continuations under it."""

    def __init__(self, model_id: str, device: str = "cpu", max_prompt_tokens: int = 512):
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id)
        self.model.eval()
        self.device = torch.device(device)
        self.model.to(self.device)
        if self.tokenizer.pad_token_id is None:
            fallback = self.tokenizer.eos_token or self.tokenizer.unk_token
            if fallback is None:
                raise BackendError("tokenizer defines no pad, eos, or unk token")
            self.tokenizer.pad_token = fallback
        self.max_prompt_tokens = max_prompt_tokens

    @property
    def eos_text(self) -> str:
        return self.tokenizer.eos_token or "\n"

    def _prompt_ids(self, prompt: str) -> list[int]:
        ids = self.tokenizer.encode(prompt, add_special_tokens=False)
        if len(ids) > self.max_prompt_tokens:
            ids = ids[-self.max_prompt_tokens :]  # keep the live query end
        if not ids:
            ids = [self.tokenizer.pad_token_id]
        return ids

    @torch.no_grad()
    def continuation_logprobs(self, prompt: str, continuations: list[str]) -> list[float]:
        """Sum of subtoken log probabilities of each continuation after the prompt."""
        prompt_ids = self._prompt_ids(prompt)
        cont_ids = [self.tokenizer.encode(c, add_special_tokens=False) for c in continuations]
        for text, ids in zip(continuations, cont_ids):
            if not ids:
                raise BackendError(f"continuation {text!r} tokenizes to nothing")
        pad = self.tokenizer.pad_token_id
        total_len = max(len(prompt_ids) + len(c) for c in cont_ids)
        rows, masks = [], []
        for c in cont_ids:
            seq = prompt_ids + c
            rows.append(seq + [pad] * (total_len - len(seq)))
            masks.append([1] * len(seq) + [0] * (total_len - len(seq)))
        input_ids = torch.tensor(rows, dtype=torch.long, device=self.device)
        attention = torch.tensor(masks, dtype=torch.long, device=self.device)
        logits = self.model(input_ids=input_ids, attention_mask=attention).logits
        logprobs = torch.log_softmax(logits.float(), dim=-1)
        start = len(prompt_ids)
        scores = []
        for row, c in enumerate(cont_ids):
            total = 0.0
            for offset, token_id in enumerate(c):
                total += logprobs[row, start + offset - 1, token_id].item()
            scores.append(total)
        return scores

    @torch.no_grad()
    def generate(self, prompt: str, max_new_tokens: int = 96, min_new_tokens: int = 8) -> str:
        prompt_ids = self._prompt_ids(prompt)
        input_ids = torch.tensor([prompt_ids], dtype=torch.long, device=self.device)
        output = self.model.generate(
            input_ids=input_ids,
            attention_mask=torch.ones_like(input_ids),
            max_new_tokens=max_new_tokens,
            min_new_tokens=min_new_tokens,
            do_sample=False,
            pad_token_id=self.tokenizer.pad_token_id,
        )
        return self.tokenizer.decode(output[0][len(prompt_ids):], skip_special_tokens=True)
