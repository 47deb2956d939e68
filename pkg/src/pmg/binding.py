"""Anaphora resolution over the referential store.

A discourse is parsed sentence by sentence; each parse trace is then
replayed against one persistent ``ReferentStore``. Referential DPs are
registered where they are first merged; "si" and "lo" are resolved at their
merge, the null subject at its remerge, once the verb has supplied its
agreement features.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .engine import parse
from .features import CATEGORY, PATH_DEFAULTS, FeaturePath, Label, as_dict, bundle, path_of
from .lexicon import Lexicon
from .memory import GLOBAL, Ambiguous, ReferentRecord, ReferentStore

PHI = ("pers", "num", "gen", "anim")


class AnaphorKind(str, Enum):
    REFLEXIVE = "reflexive"
    PRONOUN = "pronoun"
    NULL_SUBJECT = "null-subject"


@dataclass(frozen=True)
class ResolutionCue:
    phi: tuple  # sorted (class, value) pairs
    topicality: str  # require-topic | exclude-local-topic | any
    domain: str  # local-scope | accessible-scopes

    @classmethod
    def for_kind(cls, kind: AnaphorKind, phi: dict) -> "ResolutionCue":
        kind = AnaphorKind(kind)
        policy = {
            AnaphorKind.REFLEXIVE: ("require-topic", "local-scope"),
            AnaphorKind.PRONOUN: ("exclude-local-topic", "accessible-scopes"),
            AnaphorKind.NULL_SUBJECT: ("require-topic", "accessible-scopes"),
        }[kind]
        return cls(tuple(sorted(phi.items(), key=lambda kv: (kv[0], kv[1] or ""))), *policy)

    def as_query(self) -> dict:
        return {CATEGORY: "D", **dict(self.phi)}


def phi_of(attrs, defaults: bool = True) -> dict:
    """Phi features of a bundle, as a trie cue (label class -> value)."""
    d = as_dict(attrs)
    phi = {a: d[a] for a in PHI if a in d and not (d[a] is None and a in PATH_DEFAULTS)}
    if defaults:
        for a, v in PATH_DEFAULTS.items():
            phi.setdefault(a, v)
    return phi


@dataclass(frozen=True)
class Coindexation:
    sentence: int
    position: int  # step index in the sentence's trace
    kind: str
    anaphor: str
    antecedent: Optional[str]
    chain: tuple
    status: str  # resolved | unresolved | ambiguous
    candidates: tuple = ()

    @property
    def referent(self) -> Optional[str]:
        """Surface form at the end of the chain."""
        return self.chain[-1].split(":", 1)[1] if self.chain else None

    def to_record(self) -> dict:
        return {"sentence": self.sentence, "position": self.position, "kind": self.kind,
                "anaphor": self.anaphor, "antecedent": self.antecedent,
                "chain": list(self.chain), "status": self.status}


@dataclass
class CoindexTable:
    lines: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    aborted: Optional[int] = None  # sentence that failed to parse

    def lookup(self, anaphor: str, sentence: Optional[int] = None) -> Coindexation:
        for line in self.lines:
            if line.anaphor.split(":", 1)[1] == anaphor and sentence in (None, line.sentence):
                return line
        raise KeyError(anaphor)

    def summary(self) -> dict:
        """anaphor surface -> chain of surfaces, e.g. ``{"si": ("pro", "gianni")}``."""
        return {l.anaphor.split(":", 1)[1]: tuple(c.split(":", 1)[1] for c in l.chain)
                for l in self.lines}

    @property
    def ok(self) -> bool:
        return self.aborted is None and all(l.status == "resolved" for l in self.lines)

    def to_text(self) -> str:
        out = []
        for l in self.lines:
            chain = " -> ".join(l.chain) or "-"
            out.append(f"s{l.sentence} @{l.position:<3d} {l.kind:<12} {l.anaphor:<10} "
                       f"{l.status:<10} {chain}")
        out.extend(f"warning: {w}" for w in self.warnings)
        if self.aborted is not None:
            out.append(f"aborted: sentence {self.aborted} has no parse")
        return "\n".join(out) + "\n" if out else ""

    def to_jsonl(self) -> str:
        rows = [l.to_record() for l in self.lines]
        rows += [{"warning": w} for w in self.warnings]
        if self.aborted is not None:
            rows.append({"aborted": self.aborted})
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)


class Binder:
    """Referential store plus coindexation bookkeeping for one discourse."""

    def __init__(self, lex: Lexicon, lifo: bool = False):
        self.lex = lex
        self.store = ReferentStore(lex.order, lifo=lifo)
        self.table = CoindexTable()
        self.antecedent = {}  # record id -> record id it is coindexed with

    def chain(self, rid: str) -> tuple:
        out = []
        while rid is not None and rid not in out:
            out.append(rid)
            rid = self.antecedent.get(rid)
        return tuple(out)

    def local_topic_chain(self, scope: str) -> set:
        """Topics of ``scope`` and everything coindexed with them."""
        chain = set()
        for rec in self.store.visible(scope, local_only=True):
            if rec.topic:
                chain.update(self.chain(rec.id))
        changed = True
        while changed:
            changed = False
            for rid, ant in self.antecedent.items():
                if ant in chain and rid not in chain:
                    chain.add(rid)
                    changed = True
        return chain

    def register_referent(self, rid: str, surface: str, path: FeaturePath, scope: str,
                          sentence: int = 0) -> ReferentRecord:
        rec = ReferentRecord(rid, surface, path, sentence=sentence)
        warning = self.nonredundancy_check(rec, scope)
        if warning:
            self.table.warnings.append(warning)
        self.store.store_referent(rec, scope)
        return rec

    def nonredundancy_check(self, rec: ReferentRecord, scope: str) -> Optional[str]:
        for other in self.store.visible(scope):
            if other.path == rec.path and other.surface == rec.surface:
                return (f"{rec.id} re-inserts {other.id} ({rec.surface}, {rec.path}); "
                        f"an anaphor would do")
        return None

    def resolve(self, kind, phi: dict, scope: str):
        """Record id, None (unresolved) or ``Ambiguous``."""
        cue = ResolutionCue.for_kind(kind, phi)
        exclude = self.local_topic_chain(scope) if cue.topicality == "exclude-local-topic" else ()
        hit = self.store.retrieve_referent(
            cue.as_query(), scope,
            topic=True if cue.topicality == "require-topic" else None,
            local_only=cue.domain == "local-scope", exclude=exclude)
        if isinstance(hit, Ambiguous):
            return hit
        return None if hit is None else hit.id

    def note(self, sentence, position, kind, anaphor, hit):
        if isinstance(hit, Ambiguous):
            line = Coindexation(sentence, position, kind, anaphor, None, (), "ambiguous", hit.ids)
        elif hit is None:
            line = Coindexation(sentence, position, kind, anaphor, None, (), "unresolved")
        else:
            self.antecedent[anaphor] = hit
            line = Coindexation(sentence, position, kind, anaphor, hit, self.chain(hit), "resolved")
        self.table.lines.append(line)
        return line


def _is_referential(entry) -> bool:
    cats = {f.category for f in entry.category_features}
    return entry.anaphor is None and {"D", "N"} <= cats


def bind_sentence(binder: Binder, trace, sentence: int):
    """Replay one parse trace against the binder's store."""
    lex = binder.lex
    scope_map = {"g": GLOBAL}
    waiting = {}  # null-subject item id -> (scope, position)

    def scope_of(engine_scopes):
        parent = GLOBAL
        for sid in engine_scopes:
            if sid not in scope_map:
                scope_map[sid] = f"s{sentence}.{sid}"
                binder.store.open_scope(scope_map[sid], parent)
            parent = scope_map[sid]
        return parent

    for step in trace:
        p = step.payload
        if step.op in ("merge", "postulate-covert"):
            entry = lex.by_sem(p["entry"])
            scope = scope_of(p["scopes"])
            rid = f"s{sentence}:{p['id']}"
            if entry.anaphor in ("reflexive", "pronoun"):
                phi = phi_of(entry.attributes)
                binder.note(sentence, step.index, entry.anaphor, rid, binder.resolve(entry.anaphor, phi, scope))
            elif entry.anaphor == "null-subject":
                waiting[p["id"]] = (scope, p["position"])
            elif _is_referential(entry):
                cats = tuple(f.category for f in entry.category_features)
                path = path_of(cats, entry.attributes, lex.order, p["position"],
                               defaults=not entry.covert)
                binder.register_referent(rid, entry.phon or entry.sem, path, scope, sentence)
        elif step.op == "merge-from-memory" and p["item"] in waiting:
            scope, position = waiting.pop(p["item"])
            rid = f"s{sentence}:{p['item']}"
            # the verb's agreement is now part of the item
            phi = phi_of(bundle(*p["attrs"]))
            binder.note(sentence, step.index, "null-subject", rid,
                        binder.resolve("null-subject", phi, scope))
            labels = ([Label("position", position)] if position else []) + [Label(CATEGORY, "D")]
            labels += [Label(c, phi[c]) for c in lex.order.classes if c in phi]
            binder.register_referent(rid, p["item"], FeaturePath(tuple(labels)), scope, sentence)
    binder.store.promote(sorted(set(scope_map.values()) - {GLOBAL}))


def process_discourse(lex: Lexicon, sentences, backend: str = "trie", lifo: Optional[bool] = None,
                      max_steps=None):
    """Parse and bind a discourse. Returns ``(results, table)``.

    ``lifo`` selects the most-recent-first referential store; by default it
    follows ``backend``. Parsing stops at the first sentence without a parse.
    """
    binder = Binder(lex, lifo=(backend == "lifo") if lifo is None else lifo)
    results = []
    for k, sent in enumerate(sentences, 1):
        tokens = sent.split() if isinstance(sent, str) else list(sent)
        res = parse(lex, tokens, backend=backend, max_steps=max_steps)
        results.append(res)
        if not res.verdict.grammatical:
            binder.table.aborted = k
            break
        bind_sentence(binder, res.trace, k)
    return results, binder.table
