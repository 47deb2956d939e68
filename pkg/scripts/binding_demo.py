"""Resolve the discourse pairs with the trie and with a LIFO referential store."""
from pmg import load_lexicon, process_discourse

lex = load_lexicon("fixture")
for second in ("poi si lava", "poi lo lava"):
    for lifo in (False, True):
        _, table = process_discourse(lex, ["gianni saluta mario", second], lifo=lifo)
        print(f"== gianni saluta mario / {second}  ({'lifo' if lifo else 'trie'})")
        print(table.to_text(), end="")
