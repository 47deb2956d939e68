"""Memory for non-local dependencies.

Two stores for moved items share one interface (``LifoMemory`` and
``TrieMemory``); ``ReferentStore`` keeps referential expressions around for
binding, partitioned into phase scopes. Both trie-backed stores use ``Trie``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .features import (
    CAT, DEFAULT_ORDER, POSITION, AttributeValue, FeatureOrder, FeaturePath, Label, cue_of, label_matches,
    path_matches, unify,
)


class StoreError(KeyError):
    pass


@dataclass(frozen=True)
class Ambiguous:
    """More than one stored item answers the cue."""
    ids: tuple

    def __bool__(self):
        return False


@dataclass
class MemoryItem:
    id: str
    categories: tuple
    attrs: frozenset
    path: FeaturePath
    marks: frozenset = frozenset()
    retrieval_count: int = 0
    covert: bool = False

    def __post_init__(self):
        if not self.marks:
            self.marks = frozenset(l for l in self.path if l.cls != POSITION)
        if not self.marks <= set(self.path.labels):
            raise ValueError("marks must be labels of the item's path")

    @property
    def bundle(self) -> frozenset:
        return self.attrs | {AttributeValue(CAT, self.categories[0])}


# ---------------------------------------------------------------- trie

class TrieNode:
    __slots__ = ("children", "ids", "marks")

    def __init__(self):
        self.children = {}
        self.ids = set()
        self.marks = 0

    def copy(self):
        n = TrieNode()
        n.ids = set(self.ids)
        n.marks = self.marks
        n.children = {k: v.copy() for k, v in self.children.items()}
        return n


def _label_key(label: Label):
    return (label.cls, label.value or "")


class Trie:
    def __init__(self):
        self.root = TrieNode()

    def copy(self):
        t = Trie()
        t.root = self.root.copy()
        return t

    def shared_prefix(self, path) -> int:
        node, n = self.root, 0
        for label in path:
            node = node.children.get(label)
            if node is None:
                break
            n += 1
        return n

    def insertion_cost(self, path) -> int:
        return len(path) - self.shared_prefix(path)

    def insert(self, path, rid: str, mark: bool = False) -> int:
        """Add ``rid`` at the end of ``path``; returns the number of new nodes."""
        node, created = self.root, 0
        for label in path:
            child = node.children.get(label)
            if child is None:
                child = node.children[label] = TrieNode()
                created += 1
            node = child
            if mark:
                node.marks += 1
        node.ids.add(rid)
        return created

    def unmark(self, path):
        node = self.root
        for label in path:
            node = node.children[label]
            node.marks -= 1

    def remove(self, path, rid: str):
        node = self.root
        for label in path:
            node = node.children[label]
        node.ids.discard(rid)

    def search(self, cue: dict, skip_positions: bool = True, marked_only: bool = False) -> set:
        """Ids on every node reachable from the root by labels the cue accepts."""
        found = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            for label, child in node.children.items():
                if marked_only and child.marks <= 0:
                    continue
                # a cue naming a position only enters through that position
                if node is self.root and POSITION in cue and label.cls != POSITION:
                    continue
                if label.cls == POSITION and POSITION not in cue:
                    if not skip_positions:
                        continue
                elif not label_matches(label, cue):
                    continue
                found |= child.ids
                stack.append(child)
        return found

    def paths(self) -> dict:
        out = {}
        stack = [(self.root, ())]
        while stack:
            node, prefix = stack.pop()
            for rid in node.ids:
                out[rid] = FeaturePath(prefix)
            for label, child in node.children.items():
                stack.append((child, prefix + (label,)))
        return out

    def dump(self, counts=None) -> str:
        """One node per line, children sorted by label, two-space indent."""
        counts = counts or {}
        lines = ["ε"]

        def walk(node, depth):
            for label in sorted(node.children, key=_label_key):
                child = node.children[label]
                line = "  " * depth + str(label)
                if child.ids:
                    line += "  ids=" + ",".join(f"{i}({counts.get(i, 0)})" for i in sorted(child.ids))
                if child.marks:
                    line += f"  marked={child.marks}"
                lines.append(line)
                walk(child, depth + 1)

        walk(self.root, 1)
        return "\n".join(lines) + "\n"


def shared_prefix_length(a, b) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def insertion_cost(trie: Trie, path) -> int:
    return trie.insertion_cost(path)


def confusability(a, b) -> Fraction:
    """Shared-prefix length over the longer path length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return Fraction(1)
    return Fraction(shared_prefix_length(a, b), longest)


# ---------------------------------------------------------------- moved items

class LifoMemory:
    """The classical M-buffer: last stored is most prominent."""

    kind = "lifo"

    def __init__(self, order: FeatureOrder = DEFAULT_ORDER):
        self.order = order
        self.items = []

    def copy(self):
        m = LifoMemory(self.order)
        m.items = list(self.items)
        return m

    def store_moved(self, item: MemoryItem) -> int:
        if not item.marks:
            raise ValueError("nothing unexpected to store")
        if any(i.id == item.id for i in self.items):
            raise StoreError(f"duplicate id {item.id}")
        self.items.append(item)
        return len(item.path)

    def retrieve_for_remerge(self, cue: frozenset):
        for item in reversed(self.items):
            if unify(cue, item.bundle) is not None:
                return item
        return None

    def discharge(self, rid: str):
        for k, item in enumerate(self.items):
            if item.id == rid:
                del self.items[k]
                return
        raise StoreError(f"no pending item {rid}")

    def is_discharged(self) -> bool:
        return not self.items

    def snapshot(self) -> tuple:
        return tuple(i.id for i in self.items)


class TrieMemory:
    """Moved items live on marked trie paths; remerge clears the marks."""

    kind = "trie"

    def __init__(self, order: FeatureOrder = DEFAULT_ORDER):
        self.order = order
        self.trie = Trie()
        self.items = {}
        self.pending = []  # insertion order, for snapshots only
        self._own = True

    def copy(self):
        # the trie is shared until one side writes to it
        m = TrieMemory(self.order)
        m.trie = self.trie
        m.items = dict(self.items)
        m.pending = list(self.pending)
        m._own = self._own = False
        return m

    def _writable(self):
        if not self._own:
            self.trie = self.trie.copy()
            self._own = True

    def store_moved(self, item: MemoryItem) -> int:
        if not item.marks:
            raise ValueError("nothing unexpected to store")
        if item.id in self.items:
            raise StoreError(f"duplicate id {item.id}")
        self._writable()
        self.items[item.id] = item
        self.pending.append(item.id)
        return self.trie.insert(item.path, item.id, mark=True)

    def _lookup(self, cue: dict, skip_positions: bool) -> list:
        ids = self.trie.search(cue, skip_positions=skip_positions, marked_only=True)
        return sorted(i for i in ids if i in self.pending)

    def retrieve(self, cue: dict, accept=None):
        """Unique marked item whose path answers ``cue`` (label class -> value).

        Position labels must match first; only if nothing does are they
        passed over, so an item fronted to F still answers a bare D cue.
        Returns the item, ``Ambiguous`` or None.
        """
        for skip in (False, True):
            ids = self._lookup(cue, skip)
            if accept is not None:
                ids = [i for i in ids if accept(self.items[i])]
            if len(ids) == 1:
                return self.items[ids[0]]
            if len(ids) > 1:
                return Ambiguous(tuple(ids))
        return None

    def retrieve_for_remerge(self, cue: frozenset):
        return self.retrieve(cue_of(cue, self.order),
                             accept=lambda item: unify(cue, item.bundle) is not None)

    def discharge(self, rid: str):
        if rid not in self.pending:
            raise StoreError(f"no pending item {rid}")
        self._writable()
        self.pending.remove(rid)
        self.trie.unmark(self.items[rid].path)
        done = copy.copy(self.items[rid])
        done.marks = frozenset()
        done.retrieval_count += 1
        self.items[rid] = done

    def is_discharged(self) -> bool:
        return not self.pending

    def snapshot(self) -> tuple:
        return tuple(self.pending)

    def dump(self) -> str:
        return self.trie.dump({k: v.retrieval_count for k, v in self.items.items()})


def make_memory(backend: str, order: FeatureOrder = DEFAULT_ORDER):
    if backend == "lifo":
        return LifoMemory(order)
    if backend == "trie":
        return TrieMemory(order)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------- referents

GLOBAL = "g"


@dataclass(frozen=True)
class PhaseScope:
    id: str
    parent: Optional[str] = None
    is_global: bool = False


@dataclass
class ReferentRecord:
    id: str
    surface: str
    path: FeaturePath
    scope: str = GLOBAL
    sentence: int = 0
    retrieval_count: int = 0
    seq: int = 0

    @property
    def topic(self) -> bool:
        return self.path.topic


class ReferentStore:
    """Referential memory: records are never removed.

    A query from a scope sees that scope, its ancestors and the global
    scope. With ``lifo=True`` retrieval ignores the trie and topicality and
    returns the most recent phi-compatible record instead.
    """

    def __init__(self, order: FeatureOrder = DEFAULT_ORDER, lifo: bool = False):
        self.order = order
        self.lifo = lifo
        self.scopes = {GLOBAL: PhaseScope(GLOBAL, None, True)}
        self.tries = {GLOBAL: Trie()}
        self.records = {}
        self._seq = 0

    def open_scope(self, sid: str, parent: str = GLOBAL):
        if sid in self.scopes:
            return self.scopes[sid]
        if parent not in self.scopes:
            raise StoreError(f"unknown scope {parent}")
        self.scopes[sid] = PhaseScope(sid, parent)
        self.tries[sid] = Trie()
        return self.scopes[sid]

    def accessible(self, sid: str) -> list:
        chain = []
        while sid is not None:
            chain.append(sid)
            sid = self.scopes[sid].parent
        if GLOBAL not in chain:
            chain.append(GLOBAL)
        return chain

    def store_referent(self, rec: ReferentRecord, scope: str) -> int:
        if scope not in self.scopes:
            raise StoreError(f"unknown scope {scope}")
        if rec.id in self.records:
            raise StoreError(f"duplicate id {rec.id}")
        self._seq += 1
        rec.scope, rec.seq = scope, self._seq
        self.records[rec.id] = rec
        return self.tries[scope].insert(rec.path, rec.id)

    def promote(self, scopes) -> None:
        """Move every record of ``scopes`` into the global scope."""
        for sid in scopes:
            if sid == GLOBAL or sid not in self.scopes:
                continue
            for rid in list(self.tries[sid].paths()):
                rec = self.records[rid]
                self.tries[sid].remove(rec.path, rid)
                self.tries[GLOBAL].insert(rec.path, rid)
                rec.scope = GLOBAL

    def visible(self, scope: str, local_only: bool = False) -> list:
        chain = [scope] if local_only else self.accessible(scope)
        return [r for r in self.records.values() if r.scope in chain]

    def retrieve_referent(self, phi: dict, scope: str, topic: Optional[bool] = None,
                          local_only: bool = False, exclude=()):
        """Record matching ``phi`` (label class -> value) and the topicality
        requirement; None if nothing matches, ``Ambiguous`` if several do."""
        chain = [scope] if local_only else self.accessible(scope)
        if self.lifo:
            pool = sorted(self.visible(scope, local_only), key=lambda r: -r.seq)
            hit = next((r for r in pool if path_matches(r.path, phi)), None)
        else:
            ids = set()
            for sid in chain:
                ids |= self.tries[sid].search(phi, skip_positions=True)
            hits = sorted(
                rid for rid in ids
                if rid not in exclude and (topic is None or self.records[rid].topic == topic))
            if len(hits) > 1:
                return Ambiguous(tuple(hits))
            hit = self.records[hits[0]] if hits else None
        if hit is not None:
            hit.retrieval_count += 1
        return hit

    def dump(self, scope: str = GLOBAL) -> str:
        counts = {k: r.retrieval_count for k, r in self.records.items()}
        return self.tries[scope].dump(counts)
