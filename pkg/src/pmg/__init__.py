"""Phase-based Minimalist Grammar derivations with LIFO or trie memory."""
from .binding import AnaphorKind, CoindexTable, process_discourse
from .engine import (
    DerivationTrace, Result, Verdict, enumerate_language, generate, parse, replay,
)
from .features import DEFAULT_ORDER, FeatureOrder, FeaturePath, bundle, path_of, unify
from .lexicon import Lexicon, load_lexicon, parse_lexicon, serialize
from .memory import LifoMemory, ReferentStore, Trie, TrieMemory, confusability, insertion_cost

__all__ = [
    "AnaphorKind", "CoindexTable", "process_discourse", "DerivationTrace", "Result", "Verdict",
    "enumerate_language", "generate", "parse", "replay", "DEFAULT_ORDER", "FeatureOrder",
    "FeaturePath", "bundle", "path_of", "unify", "Lexicon", "load_lexicon", "parse_lexicon",
    "serialize", "LifoMemory", "ReferentStore", "Trie", "TrieMemory", "confusability",
    "insertion_cost",
]
