"""Top-down, left-to-right derivations with Merge, Expect and Move.

The pending list is a stack whose last element is the edge. Expectation
nodes wait for lexicalization; ``Select`` entries are select features that
still have to be expanded by ``expect``. A derivation runs the forced steps
(move, expect, remerge from memory) by itself and stops at the points where
a lexical item has to be chosen; generation, parsing and enumeration only
differ in how they make that choice.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional

from .features import (
    PHASE_EDGE, AttributeValue, FeatureTerm, as_dict, path_of, unify,
)
from .lexicon import Lexicon, candidates_for, lookup_by_phon
from .memory import Ambiguous, MemoryItem, make_memory

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = int(os.environ.get("PMG_MAX_STEPS", "1000"))

OPS = ("init", "merge", "expect", "move", "merge-from-memory", "postulate-covert")
REASONS = ("pending-expectations", "undischarged-memory", "no-parse", "ambiguous-remerge",
           "step-budget-exceeded")

# a nominative select borrows these from the selecting verb
AGREEMENT = ("pers", "num")
SUBJECT_CASE = AttributeValue("case", "nom")


class DerivationError(Exception):
    pass


def _fmt(category, constraints):
    attrs = " ".join(sorted(str(c) for c in constraints))
    return f"{category} {attrs}".strip()


@dataclass(frozen=True)
class Expectation:
    category: str
    constraints: frozenset
    source: str
    node: int
    head: Optional[int] = None

    @cached_property
    def term(self) -> FeatureTerm:
        return FeatureTerm("category", self.category, self.constraints)

    @cached_property
    def bundle(self):
        return self.term.bundle

    def __str__(self):
        return f"[{_fmt(self.category, self.constraints)}]"


@dataclass(frozen=True)
class Select:
    category: str
    constraints: frozenset
    source: str
    node: int
    head: Optional[int] = None

    def __str__(self):
        return str(FeatureTerm("select", self.category, self.constraints))


@dataclass(frozen=True)
class CloseScope:
    scope: str


class Node(NamedTuple):
    category: str
    parent: Optional[int]
    lexeme: Optional[str] = None
    how: Optional[str] = None  # merge | remerge


class Leaf(NamedTuple):
    phon: str
    sem: str
    covert: bool
    proclitic: bool
    head: Optional[int]


def _plain(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return str(v)


@dataclass(frozen=True)
class DerivationStep:
    index: int
    op: str
    raw_payload: dict
    memory: tuple
    raw_pending: tuple

    @cached_property
    def payload(self) -> dict:
        return _plain(self.raw_payload)

    @cached_property
    def pending(self) -> tuple:
        return tuple(str(p) for p in self.raw_pending if not isinstance(p, CloseScope))

    def to_record(self) -> dict:
        return {"index": self.index, "op": self.op, "payload": self.payload,
                "pending": list(self.pending), "memory": list(self.memory)}

    def to_text(self) -> str:
        p = self.payload
        what = p.get("entry") or p.get("item") or p.get("category") or p.get("root") or ""
        mem = "M:<" + ", ".join(self.memory) + ">"
        return f"{self.index:3d}. {self.op:<18} {what:<12} {' '.join(self.pending) or '-':<30} {mem}"


class Verdict(NamedTuple):
    grammatical: bool
    reason: Optional[str] = None

    def __str__(self):
        return "grammatical" if self.grammatical else f"ungrammatical ({self.reason})"


class DerivationTrace(tuple):
    """Immutable sequence of ``DerivationStep``."""

    @property
    def ops(self):
        return [s.op for s in self]

    def to_text(self) -> str:
        return "\n".join(s.to_text() for s in self) + "\n"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_record(), sort_keys=True, ensure_ascii=False) + "\n" for s in self)


class DerivationState:
    def __init__(self, lex: Lexicon, backend: str = "trie", tokens=None, max_steps=None):
        self.lex = lex
        self.backend = backend
        self.memory = make_memory(backend, lex.order)
        self.pending = []
        self.nodes = []
        self.leaves = []
        self.scopes = ()
        self.scope_count = 0
        self.steps = []
        self.tokens = tuple(tokens) if tokens is not None else None
        self.cursor = 0
        self.to_move = None
        self.ids = {}
        self.failure = None
        self.max_steps = DEFAULT_MAX_STEPS if max_steps is None else max_steps

    def clone(self) -> "DerivationState":
        s = DerivationState.__new__(DerivationState)
        s.__dict__.update(self.__dict__)
        s.memory = self.memory.copy()
        s.pending = list(self.pending)
        s.nodes = list(self.nodes)
        s.leaves = list(self.leaves)
        s.steps = list(self.steps)
        s.ids = dict(self.ids)
        return s

    @property
    def edge(self):
        return self.pending[-1] if self.pending else None

    @property
    def halted(self) -> bool:
        return self.failure is not None or (not self.pending and self.to_move is None)

    @property
    def trace(self) -> DerivationTrace:
        return DerivationTrace(self.steps)

    def fresh_id(self, sem: str) -> str:
        n = self.ids.get(sem, 0) + 1
        self.ids[sem] = n
        return sem if n == 1 else f"{sem}.{n}"

    def record(self, op: str, **payload):
        self.steps.append(DerivationStep(
            len(self.steps) + 1, op, payload, self.memory.snapshot(), tuple(self.pending)))

    def surface(self) -> tuple:
        return linearize(self.leaves)

    def tree(self) -> str:
        return render_tree(self.nodes)


# ---------------------------------------------------------------- operations

def init_derivation(lex: Lexicon, root: str, backend: str = "trie", tokens=None, max_steps=None):
    cat = lex.categories.get(root)
    if cat is None or cat.cls != PHASE_EDGE:
        raise DerivationError(f"{root} is not a phase edge")
    state = DerivationState(lex, backend, tokens, max_steps)
    state.nodes.append(Node(root, None))
    state.pending.append(Expectation(root, frozenset(), "root", 0))
    state.scope_count = 1
    state.scopes = ("g", "p1")
    state.record("init", root=root, scopes=state.scopes)
    return state


def expect(state: DerivationState):
    sel = state.pending.pop()
    if not isinstance(sel, Select):
        raise DerivationError("edge is not a select feature")
    state.nodes.append(Node(sel.category, sel.node))
    exp = Expectation(sel.category, sel.constraints, sel.source, len(state.nodes) - 1, sel.head)
    state.pending.append(exp)
    state.record("expect", category=exp, source=sel.source)


def _enriched_selects(entry):
    attrs = as_dict(entry.attributes)
    out = []
    for f in entry.select_features:
        cons = f.constraints
        if SUBJECT_CASE in cons:
            have = {c.attribute for c in cons}
            cons = cons | {AttributeValue(a, attrs[a]) for a in AGREEMENT
                           if a in attrs and a not in have and attrs[a] is not None}
        out.append((f.category, frozenset(cons)))
    return out


class _Plan(NamedTuple):
    selects: tuple      # (category, constraints, source), bottom of stack first
    phase_edge: bool
    position: Optional[str]
    moved: Optional[tuple]  # (categories, path) if anything is left unexpected
    payload: dict


def _plan(lex: Lexicon, entry, term: FeatureTerm):
    key = ("plan", entry, term)
    if key in lex._memo:
        return lex._memo[key]
    split = lex.split(entry, term)
    plan = None
    if split is not None:
        selects = []
        last = split.consumed[-1].category
        if lex.select_of(last) is not None:
            selects.append((lex.select_of(last), frozenset(), last))
        for cat, cons in reversed(_enriched_selects(entry)):
            selects.append((cat, cons, entry.sem))
        position = next((f.category for f in split.consumed if f.category in lex.order.positions), None)
        moved = None
        if split.unexpected:
            cats = tuple(f.category for f in split.unexpected)
            moved = (cats, path_of(cats, entry.attributes, lex.order, position, defaults=not entry.covert))
        payload = {"entry": entry.sem, "consumed": [f.category for f in split.consumed],
                   "unexpected": [f.category for f in split.unexpected], "position": position,
                   "attrs": sorted(str(a) for a in split.bundle)}
        plan = _Plan(tuple(selects), lex.categories[split.consumed[0].category].cls == PHASE_EDGE,
                     position, moved, payload)
    lex._memo[key] = plan
    return plan


def merge(state: DerivationState, entry, op: str = "merge"):
    """Lexicalize the edge expectation with ``entry``.

    The consumed features fill the expectation; the entry's own selects, and
    the select of the last consumed category, become pending. Left-over
    category features are queued for ``move``.
    """
    exp = state.edge
    if not isinstance(exp, Expectation):
        raise DerivationError("edge is not an expectation")
    if entry.root_only and exp.node != 0:
        raise DerivationError(f"{entry.sem} only lexicalizes the root")
    plan = _plan(state.lex, entry, exp.term)
    if plan is None:
        raise DerivationError(f"{entry.sem} does not unify with {exp}")
    state.pending.pop()
    enclosing = state.scopes
    state.nodes[exp.node] = state.nodes[exp.node]._replace(lexeme=entry.sem, how="merge")
    state.leaves.append(Leaf(entry.phon, entry.sem, entry.covert, entry.proclitic, exp.head))
    li = len(state.leaves) - 1

    if plan.selects and exp.node != 0 and plan.phase_edge:
        state.scope_count += 1
        sid = f"p{state.scope_count}"
        state.pending.append(CloseScope(sid))
        state.scopes = state.scopes + (sid,)
    state.pending.extend(Select(cat, cons, src, exp.node, li) for cat, cons, src in plan.selects)
    if state.tokens is not None and not entry.covert:
        state.cursor += 1

    item_id = state.fresh_id(entry.sem)
    if plan.moved is not None:
        cats, path = plan.moved
        state.to_move = MemoryItem(item_id, cats, entry.attributes, path, covert=entry.covert)
    state.record(op, id=item_id, at=exp, scopes=enclosing, leaf=li, head=exp.head, **plan.payload)


def move(state: DerivationState):
    item = state.to_move
    if item is None:
        raise DerivationError("nothing to move")
    state.to_move = None
    cost = state.memory.store_moved(item)
    state.record("move", item=item.id, path=item.path, cost=cost)


def remerge(state: DerivationState, item: MemoryItem):
    exp = state.pending.pop()
    unified = unify(exp.bundle, item.bundle)
    if unified is None:
        raise DerivationError(f"{item.id} does not unify with {exp}")
    state.memory.discharge(item.id)
    state.nodes[exp.node] = state.nodes[exp.node]._replace(lexeme=item.id, how="remerge")
    # a stored D N item also covers the N that D would select
    cat = exp.category
    while True:
        nxt = state.lex.select_of(cat)
        if nxt is None or nxt not in item.categories:
            break
        cat = nxt
    sel = state.lex.select_of(cat)
    if sel is not None:
        state.pending.append(Select(sel, frozenset(), cat, exp.node, exp.head))
    attrs = sorted(str(a) for a in unified if a.attribute != "cat")
    state.record("merge-from-memory", item=item.id, at=exp, path=item.path,
                 attrs=attrs, scopes=state.scopes, head=exp.head)


def advance(state: DerivationState):
    """Run forced steps until a lexical choice is needed or the run halts."""
    while state.failure is None:
        if state.to_move is not None:
            move(state)
            continue
        top = state.edge
        if top is None:
            return
        if isinstance(top, CloseScope):
            state.pending.pop()
            state.scopes = state.scopes[:-1]
            continue
        if len(state.steps) >= state.max_steps:
            state.failure = "step-budget-exceeded"
            return
        if isinstance(top, Select):
            expect(state)
            continue
        got = state.memory.retrieve_for_remerge(top.bundle)
        if isinstance(got, Ambiguous):
            log.debug("ambiguous remerge at %s: %s", top, got.ids)
            state.failure = "ambiguous-remerge"
            return
        if got is None:
            return
        remerge(state, got)


def verdict(state: DerivationState) -> Verdict:
    if state.failure is not None:
        return Verdict(False, state.failure)
    if state.pending or state.to_move is not None:
        return Verdict(False, "pending-expectations")
    if not state.memory.is_discharged():
        return Verdict(False, "undischarged-memory")
    if state.tokens is not None and state.cursor < len(state.tokens):
        return Verdict(False, "no-parse")
    return Verdict(True)


# ---------------------------------------------------------------- output

def linearize(leaves) -> tuple:
    """Overt leaves in merge order, proclitics moved before their head."""
    order = [i for i, l in enumerate(leaves) if not l.covert and not l.proclitic]
    for i, l in enumerate(leaves):
        if l.covert or not l.proclitic:
            continue
        if l.head in order:
            order.insert(order.index(l.head), i)
        else:
            order.append(i)
    return tuple(leaves[i].phon for i in order)


def render_tree(nodes) -> str:
    children = {}
    for i, n in enumerate(nodes):
        children.setdefault(n.parent, []).append(i)

    def show(i):
        n = nodes[i]
        lex = ""
        if n.lexeme is not None:
            lex = f" <{n.lexeme}>" if n.how == "remerge" else f" {n.lexeme}"
        kids = "".join(" " + show(k) for k in children.get(i, []))
        return f"[{n.category}{lex}{kids}]"

    return show(0) if nodes else "[]"


# ---------------------------------------------------------------- drivers

class Result(NamedTuple):
    trace: DerivationTrace
    verdict: Verdict
    surface: tuple
    tree: str
    root: Optional[str] = None
    tried: tuple = ()
    backtracks: int = 0
    state: Optional[DerivationState] = None


def _result(state, tried=(), backtracks=0):
    return Result(state.trace, verdict(state), state.surface(), state.tree(),
                  state.nodes[0].category if state.nodes else None, tuple(tried), backtracks, state)


def resolve_choice(lex: Lexicon, ref) -> object:
    if not isinstance(ref, str):
        return ref
    try:
        return lex.by_sem(ref)
    except KeyError:
        found = lookup_by_phon(lex, ref)
        if not found:
            raise DerivationError(f"no entry {ref!r}")
        return found[0]


def generate(lex: Lexicon, choices, backend: str = "trie", max_steps=None) -> Result:
    """Derive with an explicit sequence of lexical choices.

    At each expectation memory comes first, then the next choice. Roots that
    the first choice can lexicalize are tried first, in declaration order.
    """
    entries = [resolve_choice(lex, c) for c in choices]
    if not entries:
        raise DerivationError("generate needs at least one choice")
    first = entries[0]
    fits = [r for r in lex.roots
            if lex.split(first, FeatureTerm("category", r))]
    if not lex.roots:
        raise DerivationError("lexicon has no root")
    roots = fits + [r for r in lex.roots if r not in fits]
    results = []
    for root in roots:
        state = init_derivation(lex, root, backend, max_steps=max_steps)
        k = 0
        while True:
            advance(state)
            if state.halted:
                break
            if k >= len(entries):
                break
            if lex.split(entries[k], state.edge.term) is None or \
                    (entries[k].root_only and state.edge.node != 0):
                state.failure = "no-parse"
                break
            merge(state, entries[k])
            k += 1
        if k < len(entries) and state.failure is None:
            state.failure = "no-parse"
        res = _result(state, roots[:len(results) + 1])
        if res.verdict.grammatical:
            return res
        results.append(res)
    return results[0]


def proclitic_order(lex: Lexicon, tokens) -> list:
    """Put each run of proclitic tokens after the word that hosts them."""
    out, held = [], []
    for t in tokens:
        entries = lookup_by_phon(lex, t)
        if entries and all(e.proclitic for e in entries):
            held.append(t)
            continue
        out.append(t)
        out.extend(held)
        held = []
    return out + held


def _options(state: DerivationState, mode: str):
    lex, exp = state.lex, state.edge
    root = exp.node == 0
    overt = candidates_for(lex, exp.term, root=root)
    covert = candidates_for(lex, exp.term, covert=True, root=root)
    if mode == "parse":
        tok = state.tokens[state.cursor] if state.cursor < len(state.tokens) else None
        overt = [e for e in overt if e.phon == tok]
        if overt:
            return [(e, "merge") for e in overt]
    return [(e, "merge") for e in overt] + [(e, "postulate-covert") for e in covert]


def min_costs(lex: Lexicon) -> dict:
    """Fewest steps needed to fill an expectation of each category.

    Constraints are ignored, so the figures are lower bounds. Categories a
    moved item may carry cost one step (a remerge).
    """
    if "min_costs" in lex._memo:
        return lex._memo["min_costs"]
    movable = set()
    for e in lex.entries:
        for c in lex.categories:
            plan = _plan(lex, e, FeatureTerm("category", c))
            if plan is not None and plan.moved is not None:
                movable.update(plan.moved[0])
    inf = float("inf")
    cost = {c: (1 if c in movable else inf) for c in lex.categories}
    changed = True
    while changed:
        changed = False
        for c in lex.categories:
            for e in lex.entries:
                plan = _plan(lex, e, FeatureTerm("category", c))
                if plan is None:
                    continue
                total = 1 + (plan.moved is not None) + sum(1 + cost[sel] for sel, _, _ in plan.selects)
                if total < cost[c]:
                    cost[c] = total
                    changed = True
    lex._memo["min_costs"] = cost
    return cost


def steps_needed(state: DerivationState) -> int:
    """Lower bound on the steps left before the derivation can halt."""
    cost = min_costs(state.lex)
    need = 0 if state.to_move is None else 1
    for p in state.pending:
        if isinstance(p, Select):
            need += 1 + cost[p.category]
        elif isinstance(p, Expectation):
            need += cost[p.category]
    return need


def _search(state: DerivationState, mode: str):
    """Depth-first over lexical choices. Yields halted states in order."""
    stack = [state]
    while stack:
        s = stack.pop()
        advance(s)
        if s.halted:
            yield s
            continue
        if len(s.steps) + steps_needed(s) > s.max_steps:
            s.failure = "step-budget-exceeded"
            yield s
            continue
        opts = _options(s, mode)
        if not opts:
            s.failure = s.failure or "no-parse"
            yield s
            continue
        for entry, op in reversed(opts):
            child = s.clone() if len(opts) > 1 else s
            merge(child, entry, op)
            stack.append(child)


def parse(lex: Lexicon, tokens, backend: str = "trie", max_steps=None) -> Result:
    """Parse a token sequence, trying each root in declaration order."""
    surface = tuple(t.casefold() for t in tokens)
    toks = proclitic_order(lex, surface)
    best, tried = None, []
    for root in lex.roots:
        tried.append(root)
        if not toks:
            break
        state = init_derivation(lex, root, backend, tokens=toks, max_steps=max_steps)
        failures = 0
        for final in _search(state, "parse"):
            # clitics must also end up where the input has them
            if verdict(final).grammatical and final.surface() == surface:
                return _result(final, tried, failures)
            failures += 1
            if best is None or (final.cursor, len(final.steps)) > (best.cursor, len(best.steps)):
                best = final
    if best is None:
        best = DerivationState(lex, backend, tokens=toks)
    res = _result(best, tried)
    return res._replace(verdict=Verdict(False, "no-parse"))


def enumerate_language(lex: Lexicon, max_steps: int, backend: str = "trie") -> frozenset:
    """All nonempty surfaces with a grammatical derivation of at most
    ``max_steps`` steps."""
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    out = set()
    for root in lex.roots:
        state = init_derivation(lex, root, backend, max_steps=max_steps)
        for final in _search(state, "enumerate"):
            # a derivation with nothing pronounced is not a sentence
            if verdict(final).grammatical and final.surface():
                out.add(final.surface())
    return frozenset(out)


def enumerate_derivations(lex: Lexicon, max_steps: int, backend: str = "trie"):
    """Every halted derivation (grammatical or not) within the step budget."""
    for root in lex.roots:
        state = init_derivation(lex, root, backend, max_steps=max_steps)
        yield from _search(state, "enumerate")


def replay(lex: Lexicon, steps, backend: str = "trie") -> DerivationState:
    """Re-run a recorded trace: choices from the payloads, forced steps by themselves."""
    steps = list(steps)
    state = init_derivation(lex, steps[0].payload["root"], backend)
    for step in steps[1:]:
        if step.op in ("merge", "postulate-covert"):
            merge(state, lex.by_sem(step.payload["entry"]), step.op)
        else:
            _forced_step(state)
        if state.steps[-1].op != step.op:
            raise DerivationError(f"replay diverged at step {step.index}")
    return state


def _forced_step(state):
    top = state.edge
    if state.to_move is not None:
        move(state)
    elif isinstance(top, CloseScope):
        state.pending.pop()
        state.scopes = state.scopes[:-1]
        _forced_step(state)
    elif isinstance(top, Select):
        expect(state)
    elif isinstance(top, Expectation):
        got = state.memory.retrieve_for_remerge(top.bundle)
        if got is None or isinstance(got, Ambiguous):
            raise DerivationError("replay diverged")
        remerge(state, got)
