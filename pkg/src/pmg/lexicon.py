"""Line-oriented lexicon format.

::

    # comment
    order position category pers num gen anim case     (optional)
    positions S F                                      (optional)
    category phase-edge C selects S
    category lexical N
    roots C F D                                        (optional; default: phase edges in order)
    item "cosa" : F D gen:fem N
    item "tu"   : (S) D pers:2 case:nom N | covert
    item "pensi": T pers:2 V =D:case:nom =C

Attributes attach to the category written before them (or, if they come
first, to the next one). Bare lowercase words are valueless attributes.
Flags after ``|``: ``covert``, ``proclitic``, ``root`` (only lexicalizes
the root expectation), ``reflexive``, ``pronoun``, ``null-subject`` and
``sem=<id>``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

from .features import (
    CATEGORY_CLASSES, DEFAULT_ORDER, PHASE_EDGE, AttributeValue, Category, FeatureOrder,
    FeatureTerm, LexicalEntry, split_consumed_unexpected,
)

IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-+.']*$")
VALUE = re.compile(r"^[A-Za-z0-9_\-+.']+$")
ANAPHOR_FLAGS = ("reflexive", "pronoun", "null-subject")


class LexiconDiagnostic(NamedTuple):
    severity: str
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.severity}: {self.message}"


class LexiconError(Exception):
    def __init__(self, diagnostics, source=None):
        self.diagnostics = list(diagnostics)
        head = f"{source}: " if source else ""
        super().__init__(head + "; ".join(str(d) for d in self.diagnostics if d.severity == "error"))


@dataclass(frozen=True)
class Lexicon:
    categories: dict = field(default_factory=dict)
    entries: tuple = ()
    roots: tuple = ()
    order: FeatureOrder = DEFAULT_ORDER

    def __eq__(self, other):
        if not isinstance(other, Lexicon):
            return NotImplemented
        return (self.categories == other.categories and self.entries == other.entries
                and self.roots == other.roots and self.order == other.order)

    def __hash__(self):
        return hash((self.entries, self.roots))

    def __post_init__(self):
        object.__setattr__(self, "_memo", {})

    def split(self, entry: LexicalEntry, expected: FeatureTerm):
        """``split_consumed_unexpected`` against this lexicon's categories, memoized."""
        key = (entry, expected)
        if key not in self._memo:
            self._memo[key] = split_consumed_unexpected(entry, expected, self.categories)
        return self._memo[key]

    def by_sem(self, sem: str) -> LexicalEntry:
        for e in self.entries:
            if e.sem == sem:
                return e
        raise KeyError(sem)

    def select_of(self, category: str) -> Optional[str]:
        c = self.categories.get(category)
        return c.select if c else None


class ParseResult(NamedTuple):
    lexicon: Optional[Lexicon]
    diagnostics: list

    @property
    def errors(self):
        return [d for d in self.diagnostics if d.severity == "error"]


def _attr(tok: str):
    parts = tok.split(":")
    if len(parts) > 2 or not IDENT.match(parts[0]) or not all(VALUE.match(p) for p in parts[1:]):
        return None
    return AttributeValue(parts[0], parts[1] if len(parts) == 2 else None)


def _parse_item(rest, lineno, declared, diags):
    m = re.match(r'^"([^"]*)"\s*:\s*(.*)$', rest)
    if not m:
        diags.append(LexiconDiagnostic("error", lineno, 'expected item "<phon>" : <features>'))
        return None
    phon, body = m.group(1), m.group(2)
    feats, _, flagtext = body.partition("|")
    flags = {"covert": False, "proclitic": False, "root": False, "anaphor": None, "sem": ""}
    for fl in flagtext.split():
        if fl in ("covert", "proclitic", "root"):
            flags[fl] = True
        elif fl in ANAPHOR_FLAGS:
            flags["anaphor"] = fl
        elif fl.startswith("sem=") and IDENT.match(fl[4:]):
            flags["sem"] = fl[4:]
        else:
            diags.append(LexiconDiagnostic("error", lineno, f"unknown flag {fl!r}"))

    terms = []  # [kind, category, attrs, optional]
    leading = []
    ok = True
    seen_select = False
    for tok in feats.split():
        if tok.startswith("="):
            seen_select = True
            name, _, cons = tok[1:].partition(":")
            if not IDENT.match(name or "-"):
                diags.append(LexiconDiagnostic("error", lineno, f"malformed select {tok!r}"))
                ok = False
                continue
            attrs = []
            for c in filter(None, cons.split(",")):
                av = _attr(c)
                if av is None:
                    diags.append(LexiconDiagnostic("error", lineno, f"malformed attribute {c!r}"))
                    ok = False
                else:
                    attrs.append(av)
            if name not in declared:
                diags.append(LexiconDiagnostic("error", lineno, f"unknown category {name!r}"))
                ok = False
            terms.append(["select", name, attrs, False])
        elif tok[:1].isupper() or (tok.startswith("(") and tok.endswith(")")):
            optional = tok.startswith("(")
            name = tok.strip("()") if optional else tok
            if seen_select:
                diags.append(LexiconDiagnostic(
                    "error", lineno, f"category feature {name!r} after a select feature"))
                ok = False
            if name not in declared:
                diags.append(LexiconDiagnostic("error", lineno, f"unknown category {name!r}"))
                ok = False
            terms.append(["category", name, leading, optional])
            leading = []
        else:
            av = _attr(tok)
            if av is None:
                diags.append(LexiconDiagnostic("error", lineno, f"malformed attribute {tok!r}"))
                ok = False
                continue
            if seen_select:
                diags.append(LexiconDiagnostic("error", lineno, f"attribute {tok!r} after a select feature"))
                ok = False
            elif terms and not leading:
                terms[-1][2].append(av)
            else:
                leading.append(av)
    if leading:
        diags.append(LexiconDiagnostic("error", lineno, "attributes with no category to attach to"))
        ok = False
    if not any(t[0] == "category" for t in terms):
        diags.append(LexiconDiagnostic("error", lineno, "entry has no category feature"))
        ok = False
    if not phon and not flags["covert"]:
        diags.append(LexiconDiagnostic("error", lineno, "overt entry with empty phonetic form"))
        ok = False
    elif not phon and not flags["sem"]:
        diags.append(LexiconDiagnostic("error", lineno, "silent entry needs a sem= identifier"))
        ok = False
    if not ok:
        return None
    built = []
    for kind, name, attrs, optional in terms:
        names = [a.attribute for a in attrs]
        if len(set(names)) != len(names):
            diags.append(LexiconDiagnostic("error", lineno, f"attribute repeated on {name}"))
            return None
        built.append(FeatureTerm(kind, name, frozenset(attrs), optional))
    return LexicalEntry(tuple(built), phon=phon.lower(), sem=flags["sem"] or phon.lower(),
                        covert=flags["covert"], proclitic=flags["proclitic"],
                        anaphor=flags["anaphor"], root_only=flags["root"])


def parse_lexicon(text: str) -> ParseResult:
    """Parse lexicon source. Never raises; problems come back as diagnostics."""
    diags = []
    categories = {}
    entries = []
    roots = None
    order = DEFAULT_ORDER
    cat_lines = {}
    lines = text.replace("\r\n", "\n").split("\n")

    # categories first, so entries may precede their declarations
    for lineno, raw in enumerate(lines, 1):
        words = raw.split("#", 1)[0].split()
        if not words or words[0] != "category":
            continue
        if not (len(words) in (3, 5)) or words[1] not in CATEGORY_CLASSES or \
                not IDENT.match(words[2]) or (len(words) == 5 and words[3] != "selects"):
            diags.append(LexiconDiagnostic("error", lineno, "expected: category <class> <Name> [selects <Name>]"))
            continue
        name = words[2]
        if name in categories:
            diags.append(LexiconDiagnostic("error", lineno, f"duplicate declaration of {name}"))
            continue
        try:
            categories[name] = Category(name, words[1], words[4] if len(words) == 5 else None)
        except ValueError as exc:
            diags.append(LexiconDiagnostic("error", lineno, str(exc)))
            continue
        cat_lines[name] = lineno

    for name, c in categories.items():
        if c.select is not None and c.select not in categories:
            diags.append(LexiconDiagnostic("error", cat_lines[name], f"{name} selects undeclared {c.select}"))

    sems = set()
    for lineno, raw in enumerate(lines, 1):
        line = _strip_comment(raw)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "category":
            continue
        if head == "item":
            e = _parse_item(rest, lineno, categories, diags)
            if e is None:
                continue
            if e.sem in sems:
                diags.append(LexiconDiagnostic("error", lineno, f"duplicate entry {e.sem!r} (use sem=)"))
                continue
            sems.add(e.sem)
            entries.append(e)
        elif head == "roots":
            roots = tuple(rest.split())
            for r in roots:
                if r not in categories or categories[r].cls != PHASE_EDGE:
                    diags.append(LexiconDiagnostic("error", lineno, f"root {r} is not a phase edge"))
        elif head == "order":
            try:
                order = FeatureOrder(tuple(rest.split()), order.positions)
            except ValueError as exc:
                diags.append(LexiconDiagnostic("error", lineno, str(exc)))
        elif head == "positions":
            order = FeatureOrder(order.classes, frozenset(rest.split()))
        else:
            diags.append(LexiconDiagnostic("error", lineno, f"unknown declaration {head!r}"))

    if roots is None:
        roots = tuple(n for n, c in categories.items() if c.cls == PHASE_EDGE)
    for e in entries:
        if not e.covert and e.anaphor == "null-subject":
            diags.append(LexiconDiagnostic("warning", 0, f"null subject {e.sem} is overt"))
    if any(d.severity == "error" for d in diags):
        return ParseResult(None, diags)
    return ParseResult(Lexicon(categories, tuple(entries), roots, order), diags)


def _strip_comment(raw: str) -> str:
    inside = False
    for i, ch in enumerate(raw):
        if ch == '"':
            inside = not inside
        elif ch == "#" and not inside:
            return raw[:i].strip()
    return raw.strip()


def serialize(lex: Lexicon) -> str:
    out = []
    if lex.order != DEFAULT_ORDER:
        out.append("order " + " ".join(lex.order.classes))
        out.append("positions " + " ".join(sorted(lex.order.positions)))
    for c in lex.categories.values():
        out.append(f"category {c.cls} {c.name}" + (f" selects {c.select}" if c.select else ""))
    out.append("roots " + " ".join(lex.roots))
    for e in lex.entries:
        flags = []
        if e.covert:
            flags.append("covert")
        if e.proclitic:
            flags.append("proclitic")
        if e.root_only:
            flags.append("root")
        if e.anaphor:
            flags.append(e.anaphor)
        if e.sem != e.phon:
            flags.append(f"sem={e.sem}")
        feats = []
        for f in e.features:
            if f.kind == "select":
                feats.append(str(f))
            else:
                feats.append(f"({f.category})" if f.optional else f.category)
                feats.extend(sorted(str(a) for a in f.constraints))
        line = f'item "{e.phon}" : ' + " ".join(feats)
        if flags:
            line += " | " + " ".join(flags)
        out.append(line)
    return "\n".join(out) + "\n"


def load_lexicon(path) -> Lexicon:
    """Load a grammar file, or a shipped one by name (``fixture``)."""
    p = Path(path)
    if not p.exists():
        name = str(path)
        if not name.endswith(".pmg"):
            name += ".pmg"
        shipped = resources.files("pmg") / "data" / name
        if not shipped.is_file():
            raise FileNotFoundError(path)
        text = shipped.read_text(encoding="utf-8")
    else:
        text = p.read_text(encoding="utf-8")
    res = parse_lexicon(text)
    if res.lexicon is None:
        raise LexiconError(res.diagnostics, source=path)
    return res.lexicon


def candidates_for(lex: Lexicon, expected: FeatureTerm, covert: bool = False, root: bool = False) -> list:
    """Overt entries (or covert ones, with ``covert=True``) whose edge unifies
    with ``expected``, in declaration order. Root-only entries are included
    only when ``root`` is set."""
    key = ("candidates", expected, covert, root)
    if key not in lex._memo:
        lex._memo[key] = [e for e in lex.entries
                          if e.covert == covert and (root or not e.root_only)
                          and lex.split(e, expected) is not None]
    return list(lex._memo[key])


def lookup_by_phon(lex: Lexicon, form: str) -> list:
    form = form.casefold()
    return [e for e in lex.entries if not e.covert and e.phon.casefold() == form]
