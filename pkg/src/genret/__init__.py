"""Generative retrieval toolkit.

Builds content-based and cluster-based document IDs, indexes them in a prefix
trie, decodes relevant IDs from queries with trie-constrained beam search
(optionally mixing two scorers), and evaluates recall@k.
"""

from .augment import IndexingPair, TfidfQueryGenerator, random_spans, synthetic_queries
from .cluster import ClusterNode, cluster_ids, cluster_tree, embed_document, kmeans
from .config import Config, make_config
from .corpus import (
    CorpusStats,
    Document,
    QueryDocPair,
    compute_stats,
    deduplicate,
    load_corpus,
    prefix_overlap,
    save_corpus,
    truncate,
)
from .decode import (
    Hypothesis,
    RankedResults,
    constrained_beam_search,
    exhaustive_rank,
    joint_decode,
)
from .docid import (
    Bm25Stats,
    DocId,
    IdAssignment,
    acid_id,
    bm25_score,
    bm25_top_k_id,
    build_bm25_stats,
    eligible_terms,
    ensure_unique,
    first_k_tokens_id,
    tfidf_weights,
)
from .errors import (
    CorpusError,
    DecodeError,
    DocIdError,
    EvalError,
    GenRetError,
    ProtocolError,
    ScorerTransportError,
    StageError,
    TrieError,
)
from .evaluate import RecallReport, recall_at_k, run_experiment
from .keyphrase import (
    FixtureKeyphraseGenerator,
    KeyphraseGenerator,
    RemoteKeyphraseClient,
    TfidfKeyphraseGenerator,
)
from .scorer import (
    MemorizingScorer,
    OverlapScorer,
    RemoteScorer,
    Scorer,
    ScoreRequest,
    ScoreResponse,
    UniformScorer,
    overlap_scorer,
    train_memorizing,
)
from .tokenizer import BOS, EOS, SEP, UNK, Vocabulary, build_vocab, normalize, tokenize
from .trie import IdTrie

__version__ = "0.1.0"
