import json

import pytest
from hypothesis import given, settings, strategies as st

from pmg.engine import (
    DerivationError, Verdict, advance, enumerate_derivations, enumerate_language, generate, init_derivation,
    linearize, merge, min_costs, parse, proclitic_order, replay, verdict,
)

# the reference derivation of "cosa (tu) pensi che (io) mangi"
REFERENCE_OPS = ["init", "merge", "move", "expect", "merge", "move", "expect", "merge", "expect",
             "merge-from-memory", "expect", "merge", "expect", "merge", "move", "expect", "merge",
             "expect", "merge-from-memory", "expect", "merge-from-memory"]
CHOICES = ["cosa", "tu", "pensi", "che", "io", "mangi"]
TREE = "[F cosa [S tu [T pensi [D <tu>] [C che [S io [T mangi [D <io>] [D <cosa>]]]]]]]"


@pytest.mark.parametrize("backend", ["lifo", "trie"])
def test_generation_follows_the_worked_example(lex, backend):
    res = generate(lex, CHOICES, backend=backend)
    assert res.verdict == Verdict(True)
    assert res.trace.ops == REFERENCE_OPS
    assert res.tree == TREE
    mem = {s.index: s.memory for s in res.trace}
    assert mem[3] == ("cosa",)
    assert mem[6] == ("cosa", "tu")
    assert mem[15] == ("cosa", "io")
    assert mem[21] == ()


def test_trie_remerges_by_cue(lex):
    res = generate(lex, CHOICES, backend="trie")
    steps = {s.index: s.payload for s in res.trace}
    assert steps[10]["item"] == "tu" and "pers:2" in steps[10]["attrs"]
    assert steps[19]["item"] == "io" and "pers:1" in steps[19]["attrs"]
    assert steps[21]["item"] == "cosa"
    assert steps[21]["path"] == "F·D·3p·sg·fem"


def test_root_trial_order(lex):
    res = parse(lex, "cosa pensi che mangi".split())
    assert res.verdict.grammatical
    assert res.root == "F"
    assert res.tried == ("C", "F")
    assert res.surface == ("cosa", "pensi", "che", "mangi")


@pytest.mark.parametrize("sentence,tree", [
    ("gianni saluta mario", "[C C0 [S gianni [T saluta [D <gianni>] [D mario]]]]"),
    ("poi si lava", "[C poi [S pro [T lava.refl [D <pro>] [D si]]]]"),
    ("poi lo lava", "[C poi [S pro [T lava.tr [D <pro>] [D lo]]]]"),
])
def test_discourse_sentences_parse(lex, sentence, tree):
    res = parse(lex, sentence.split())
    assert res.verdict.grammatical
    assert res.tree == tree


@pytest.mark.parametrize("sentence", ["", "che pensi", "lava si", "mangi lo", "pensi pensi mario",
                                      "cosa cosa", "lava"])
def test_rejections(lex, sentence):
    res = parse(lex, sentence.split())
    assert not res.verdict.grammatical
    assert res.verdict.reason == "no-parse"


def test_silent_c_only_at_the_root(lex):
    assert not parse(lex, "pensi gianni saluta mario".split()).verdict.grammatical
    assert parse(lex, "pensi che gianni saluta mario".split()).verdict.grammatical


def test_proclitics_are_pronounced_before_the_verb(lex):
    assert proclitic_order(lex, ["poi", "lo", "lava"]) == ["poi", "lava", "lo"]
    res = generate(lex, ["poi", "pro", "lava.tr", "lo"])
    assert res.surface == ("poi", "lo", "lava")


def test_undischarged_memory(lex):
    res = generate(lex, ["cosa", "tu", "pensi", "che"])
    assert not res.verdict.grammatical


def test_wrong_choice_is_no_parse(lex):
    res = generate(lex, ["che", "mangi"])
    assert res.verdict == Verdict(False, "no-parse")
    with pytest.raises(DerivationError):
        generate(lex, ["frobnicate"])
    with pytest.raises(DerivationError):
        generate(lex, [])


def test_step_budget(lex):
    res = generate(lex, CHOICES, max_steps=10)
    assert res.verdict == Verdict(False, "step-budget-exceeded")
    res = parse(lex, "cosa pensi che mangi".split(), max_steps=10)
    assert not res.verdict.grammatical


def test_init_requires_phase_edge(lex):
    with pytest.raises(DerivationError):
        init_derivation(lex, "T")


def test_merge_checks_unification(lex):
    st_ = init_derivation(lex, "C")
    advance(st_)
    with pytest.raises(DerivationError):
        merge(st_, lex.by_sem("mangi"))
    st_ = init_derivation(lex, "F")
    advance(st_)
    with pytest.raises(DerivationError):
        merge(st_, lex.by_sem("C0"))


def test_trace_serialization_is_stable(lex):
    a = generate(lex, CHOICES).trace.to_jsonl()
    b = generate(lex, CHOICES).trace.to_jsonl()
    assert a == b
    rows = [json.loads(l) for l in a.splitlines()]
    assert [r["index"] for r in rows] == list(range(1, 22))
    assert set(rows[0]) == {"index", "op", "payload", "pending", "memory"}
    assert "merge" in generate(lex, CHOICES).trace.to_text()


@pytest.mark.parametrize("backend", ["lifo", "trie"])
def test_replay_reproduces_trace(lex, backend):
    for sentence in ["cosa pensi che mangi", "poi lo lava", "gianni saluta mario"]:
        res = parse(lex, sentence.split(), backend=backend)
        again = replay(lex, res.trace, backend)
        assert again.trace.to_jsonl() == res.trace.to_jsonl()


def test_linearize_puts_clitic_before_head():
    from pmg.engine import Leaf
    leaves = [Leaf("poi", "poi", False, False, None), Leaf("", "pro", True, False, 0),
              Leaf("lava", "lava", False, False, 1), Leaf("lo", "lo", False, True, 2)]
    assert linearize(leaves) == ("poi", "lo", "lava")


def test_min_costs_are_lower_bounds(lex):
    cost = min_costs(lex)
    assert cost["D"] == 1 and cost["N"] == 1
    for d in enumerate_derivations(lex, 16):
        if verdict(d).grammatical:
            assert len(d.steps) >= 1 + cost[d.nodes[0].category]


def test_small_language(lex):
    assert enumerate_language(lex, 3) == {("gianni",), ("mario",), ("si",), ("lo",)}
    with pytest.raises(ValueError):
        enumerate_language(lex, 0)


def test_enumerated_surfaces_parse(lex):
    for s in enumerate_language(lex, 18):
        res = parse(lex, list(s))
        assert res.verdict.grammatical and res.surface == s


def test_grammatical_iff_nothing_left(lex):
    for d in enumerate_derivations(lex, 14):
        v = verdict(d)
        clean = not d.pending and d.to_move is None and d.memory.is_discharged() and d.failure is None
        assert v.grammatical == clean


SEMS = ["gianni", "mario", "cosa", "si", "io", "tu", "pro", "che", "poi", "mangi", "pensi",
        "lava.refl", "lava.tr", "saluta", "lo", "C0"]


@settings(max_examples=300)
@given(st.lists(st.sampled_from(SEMS), min_size=1, max_size=9), st.sampled_from(["lifo", "trie"]))
def test_fuzzed_generation_verdicts(lex, choices, backend):
    res = generate(lex, choices, backend=backend)
    s = res.state
    consumed = s.failure is None and len([x for x in res.trace if x.op in ("merge", "postulate-covert")]) == len(choices)
    clean = not s.pending and s.to_move is None and s.memory.is_discharged()
    assert res.verdict.grammatical == (clean and consumed)


def test_moves_match_remerges_and_memory_has_priority(lex):
    from pmg.engine import Expectation
    checked = 0
    for d in enumerate_derivations(lex, 16):
        if not verdict(d).grammatical:
            continue
        ops = [s.op for s in d.steps]
        assert ops.count("move") == ops.count("merge-from-memory")
        for k, s in enumerate(d.steps):
            if s.op == "move":
                assert d.steps[k - 1].op in ("merge", "postulate-covert")
                assert d.steps[k - 1].payload["unexpected"]
            if s.op in ("merge", "postulate-covert") and k > 1:
                before = replay(lex, d.steps[:k], "trie")
                edge = before.pending[-1]
                assert isinstance(edge, Expectation)
                assert not before.memory.retrieve_for_remerge(edge.bundle)
                checked += 1
    assert checked > 50


def test_prefix_replay_reproduces_snapshots(lex):
    res = generate(lex, CHOICES, backend="lifo")
    for k in (3, 6, 10, 15, 21):
        assert replay(lex, res.trace[:k], "lifo").memory.snapshot() == res.trace[k - 1].memory
