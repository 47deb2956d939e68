from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from pmg.features import FeaturePath, bundle, path_of
from pmg.memory import (
    GLOBAL, Ambiguous, LifoMemory, MemoryItem, ReferentRecord, ReferentStore, StoreError, Trie,
    TrieMemory, confusability, insertion_cost, make_memory, shared_prefix_length,
)


def item(rid, cats, *attrs, position=None):
    return MemoryItem(rid, tuple(cats), bundle(*attrs), path_of(cats, bundle(*attrs), position=position))


def P(text):
    return FeaturePath.parse(text)


# ---- trie basics

def test_insert_reports_new_nodes():
    t = Trie()
    assert t.insert(P("S.D.2p.sg"), "tu") == 4
    assert t.insert(P("S.D.1p.sg"), "io") == 2
    assert t.insert(P("S.D.1p.sg"), "io2") == 0


def test_insertion_cost_of_similar_items():
    tu, voi, io = (path_of(["D"], bundle(f"pers:{p}", f"num:{n}"), position="S", defaults=False)
                   for p, n in [("2", "sg"), ("2", "pl"), ("1", "sg")])
    t = Trie()
    t.insert(voi, "voi")
    assert insertion_cost(t, tu) == 1
    t = Trie()
    t.insert(tu, "tu")
    assert insertion_cost(t, io) == 2
    assert confusability(tu, voi) == Fraction(3, 4)
    assert confusability(tu, io) == Fraction(1, 2)


paths = st.lists(st.sampled_from(["S", "D", "2p", "1p", "sg", "pl", "nom"]), max_size=6).map(
    lambda ls: FeaturePath.parse(".".join(sorted(set(ls), key=["S", "D", "2p", "1p", "sg", "pl", "nom"].index)))
    if len({l for l in ls if l.endswith("p")}) < 2 and len({l for l in ls if l in ("sg", "pl")}) < 2
    else FeaturePath(()))


@given(paths, paths)
def test_cost_plus_shared_prefix_is_length(a, b):
    t = Trie()
    t.insert(a, "a")
    assert insertion_cost(t, b) + shared_prefix_length(a, b) == len(b)


@given(paths, paths)
def test_confusability_bounds(a, b):
    c = confusability(a, b)
    assert 0 <= c <= 1
    assert c == confusability(b, a)
    if a == b:
        assert c == 1


def test_dump_format():
    t = Trie()
    t.insert(P("S.D.2p"), "tu")
    t.insert(P("F.D"), "cosa")
    assert t.dump({"tu": 1}) == "ε\n  F\n    D  ids=cosa(0)\n  S\n    D\n      2p  ids=tu(1)\n"


# ---- moved items

def test_lifo_is_most_recent_first():
    m = LifoMemory()
    m.store_moved(item("a", ["D"], "pers:2"))
    m.store_moved(item("b", ["D"], "pers:2"))
    assert m.retrieve_for_remerge(bundle("D")).id == "b"
    assert m.snapshot() == ("a", "b")
    m.discharge("b")
    assert m.retrieve_for_remerge(bundle("D")).id == "a"


def test_duplicate_and_unknown_ids():
    for backend in ("lifo", "trie"):
        m = make_memory(backend)
        m.store_moved(item("a", ["D"]))
        with pytest.raises(StoreError):
            m.store_moved(item("a", ["D"]))
        with pytest.raises(StoreError):
            m.discharge("zzz")
    with pytest.raises(ValueError):
        make_memory("stack")


def test_trie_ambiguity_and_distinctness():
    m = TrieMemory()
    m.store_moved(item("cosa", ["D"], "gen:f"))
    m.store_moved(item("casa", ["D"], "gen:f"))
    got = m.retrieve_for_remerge(bundle("D", "gen:f", "num:sg"))
    assert isinstance(got, Ambiguous) and got.ids == ("casa", "cosa")
    assert not got

    m = TrieMemory()
    m.store_moved(item("cosa", ["D"], "gen:f", position="F"))
    m.store_moved(item("casa", ["D"], "gen:f"))
    assert m.retrieve({"position": "F", "category": "D", "gen": "f", "num": "sg"}).id == "cosa"
    assert m.retrieve({"category": "D", "gen": "f", "num": "sg"}).id == "casa"


def test_position_label_is_a_second_resort():
    m = TrieMemory()
    m.store_moved(item("cosa", ["D"], "gen:f", position="F"))
    assert m.retrieve_for_remerge(bundle("D", "case:acc")).id == "cosa"


def test_trie_discharge_clears_marks_and_counts():
    m = TrieMemory()
    m.store_moved(item("tu", ["D"], "pers:2", position="S"))
    m.discharge("tu")
    assert m.is_discharged()
    assert m.retrieve_for_remerge(bundle("D")) is None
    assert "tu(1)" in m.dump() and "marked" not in m.dump()


def test_trie_copy_is_independent():
    m = TrieMemory()
    m.store_moved(item("a", ["D"], "pers:1"))
    c = m.copy()
    c.store_moved(item("b", ["D"], "pers:2"))
    c.discharge("a")
    assert m.snapshot() == ("a",) and m.retrieve_for_remerge(bundle("D")).id == "a"
    assert "b" not in m.dump()


def test_marks_must_be_on_path():
    with pytest.raises(ValueError):
        MemoryItem("x", ("D",), frozenset(), P("D"), marks=frozenset(P("S.D").labels))


# ---- permutation invariance

PHI = st.tuples(st.sampled_from([None, "S", "F"]), st.sampled_from(["1", "2", "3"]),
                st.sampled_from(["sg", "pl"]), st.sampled_from([None, "m", "f"]))


def make_items(specs):
    out = []
    for k, (pos, pers, num, gen) in enumerate(specs):
        attrs = [f"pers:{pers}", f"num:{num}"] + ([f"gen:{gen}"] if gen else [])
        out.append(item(f"i{k}", ["D"], *attrs, position=pos))
    return out


@given(st.lists(PHI, min_size=1, max_size=5, unique=True), st.data())
def test_trie_retrieval_is_order_free(specs, data):
    items = make_items(specs)
    cues = [bundle("D", f"pers:{p}") for p in "123"] + [bundle("S"), bundle("F"), bundle("D", "num:pl")]
    baseline = None
    for perm in list(permutations(items))[:24]:
        m = TrieMemory()
        for it in perm:
            m.store_moved(it)
        got = [m.retrieve_for_remerge(c) for c in cues]
        got = [g.ids if isinstance(g, Ambiguous) else (g and g.id) for g in got]
        if baseline is None:
            baseline = got
        assert got == baseline


# ---- referential store

def rec(rid, text):
    return ReferentRecord(rid, rid, P(text))


def test_scopes_and_accessibility():
    s = ReferentStore()
    s.open_scope("p1")
    s.open_scope("p2", "p1")
    s.open_scope("q", GLOBAL)
    assert s.accessible("p2") == ["p2", "p1", GLOBAL]
    s.store_referent(rec("gianni", "S.D.3p.sg.m"), "p1")
    s.store_referent(rec("mario", "D.3p.sg.m"), "q")
    assert s.retrieve_referent({"category": "D"}, "p2").id == "gianni"
    assert s.retrieve_referent({"category": "D"}, "p2", local_only=True) is None
    with pytest.raises(StoreError):
        s.store_referent(rec("x", "D"), "nowhere")


def test_topic_filter_and_ambiguity():
    s = ReferentStore()
    s.store_referent(rec("gianni", "S.D.3p.sg.m"), GLOBAL)
    s.store_referent(rec("mario", "D.3p.sg.m"), GLOBAL)
    phi = {"category": "D", "pers": "3"}
    assert isinstance(s.retrieve_referent(phi, GLOBAL), Ambiguous)
    assert s.retrieve_referent(phi, GLOBAL, topic=True).id == "gianni"
    assert s.retrieve_referent(phi, GLOBAL, topic=True).retrieval_count == 2
    assert s.retrieve_referent({"category": "D", "pers": "1"}, GLOBAL) is None
    assert s.retrieve_referent(phi, GLOBAL, topic=False).id == "mario"


def test_lifo_referents_follow_recency():
    s = ReferentStore(lifo=True)
    s.store_referent(rec("gianni", "S.D.3p.sg.m"), GLOBAL)
    s.store_referent(rec("mario", "D.3p.sg.m"), GLOBAL)
    assert s.retrieve_referent({"category": "D", "pers": "3"}, GLOBAL, topic=True).id == "mario"


def test_promote_moves_to_global():
    s = ReferentStore()
    s.open_scope("p1")
    s.store_referent(rec("gianni", "S.D"), "p1")
    s.promote(["p1"])
    assert s.records["gianni"].scope == GLOBAL
    assert "gianni" in s.dump()
