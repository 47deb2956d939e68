"""Insertion cost and confusability for the pronoun paradigm.

Shows that storing an item next to a similar one is cheap but makes the two
harder to tell apart.
"""
from itertools import combinations

from pmg import Trie, bundle, confusability, path_of

PRONOUNS = {"io": ("1", "sg"), "tu": ("2", "sg"), "lui": ("3", "sg"),
            "noi": ("1", "pl"), "voi": ("2", "pl"), "loro": ("3", "pl")}

paths = {w: path_of(["D"], bundle(f"pers:{p}", f"num:{n}"), position="S") for w, (p, n) in PRONOUNS.items()}

print("insertion cost, one item already stored:")
words = list(paths)
print("       " + "".join(f"{w:>6}" for w in words))
for old in words:
    row = []
    for new in words:
        t = Trie()
        t.insert(paths[old], old)
        row.append(t.insertion_cost(paths[new]))
    print(f"{old:>6} " + "".join(f"{c:>6}" for c in row))

print("\nmost confusable pairs:")
pairs = sorted(combinations(words, 2), key=lambda ab: -confusability(paths[ab[0]], paths[ab[1]]))
for a, b in pairs[:6]:
    print(f"  {a:>4} ~ {b:<4} {confusability(paths[a], paths[b])}  ({paths[a]} / {paths[b]})")
