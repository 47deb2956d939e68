"""Generate the worked example with both memories and show the traces side by side.

    python3 scripts/run_derivation.py [choice ...]
"""
import sys

from pmg import generate, load_lexicon

choices = sys.argv[1:] or ["cosa", "tu", "pensi", "che", "io", "mangi"]
lex = load_lexicon("fixture")
for backend in ("lifo", "trie"):
    res = generate(lex, choices, backend=backend)
    print(f"== {backend}: {res.verdict}")
    print(res.trace.to_text(), end="")
    print(res.tree)
    if backend == "trie":
        print(res.state.memory.dump(), end="")
