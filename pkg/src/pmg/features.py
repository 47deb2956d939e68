"""Categories, attribute-value bundles, unification and feature paths.

A bundle is a frozenset of ``AttributeValue``. The category of a bundle is
carried by the reserved attribute ``cat`` so that category matching and
value matching go through the same unification routine.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Optional

PHASE_EDGE = "phase-edge"
FUNCTIONAL = "functional"
LEXICAL = "lexical"
CATEGORY_CLASSES = (PHASE_EDGE, FUNCTIONAL, LEXICAL)

CAT = "cat"


@dataclass(frozen=True)
class Category:
    name: str
    cls: str
    select: Optional[str] = None

    def __post_init__(self):
        if self.cls not in CATEGORY_CLASSES:
            raise ValueError(f"unknown category class {self.cls!r}")
        if self.cls == LEXICAL and self.select is not None:
            raise ValueError(f"lexical category {self.name} cannot select")
        if self.cls != LEXICAL and self.select is None:
            raise ValueError(f"{self.cls} category {self.name} needs a select target")


class AttributeValue(NamedTuple):
    attribute: str
    value: Optional[str] = None

    def __str__(self):
        return self.attribute if self.value is None else f"{self.attribute}:{self.value}"


def bundle(*items, **kw) -> frozenset:
    """Build a bundle from ``"D"``-style category strings, ``"attr:val"`` strings
    or keyword pairs. Mostly a convenience for tests and scripts."""
    out = []
    for it in items:
        if isinstance(it, AttributeValue):
            out.append(it)
        elif ":" in it:
            a, v = it.split(":", 1)
            out.append(AttributeValue(a, v))
        elif it[:1].isupper():
            out.append(AttributeValue(CAT, it))
        else:
            out.append(AttributeValue(it, None))
    out.extend(AttributeValue(a, v) for a, v in kw.items())
    return frozenset(out)


def as_dict(b: Iterable[AttributeValue]) -> dict:
    d = {}
    for av in b:
        if av.attribute in d:
            raise ValueError(f"attribute {av.attribute} appears twice")
        d[av.attribute] = av.value
    return d


def unify(a: Iterable[AttributeValue], b: Iterable[AttributeValue]) -> Optional[frozenset]:
    """Unify two bundles; returns the merged bundle, or None on a value clash.

    An attribute missing from one side is unconstrained, and so is an
    attribute present with no value.
    """
    merged = as_dict(a)
    for attr, val in as_dict(b).items():
        if attr not in merged or merged[attr] is None:
            merged[attr] = val
        elif val is not None and val != merged[attr]:
            return None
    return frozenset(AttributeValue(k, v) for k, v in merged.items())


@dataclass(frozen=True)
class FeatureTerm:
    kind: str  # "category" | "select"
    category: str
    constraints: frozenset = frozenset()
    optional: bool = False

    def __post_init__(self):
        if self.kind not in ("category", "select"):
            raise ValueError(self.kind)
        if self.kind == "select" and self.optional:
            raise ValueError("select features cannot be optional")
        if any(av.attribute == CAT for av in self.constraints):
            raise ValueError("constraints must not carry the category attribute")

    @property
    def bundle(self) -> frozenset:
        return self.constraints | {AttributeValue(CAT, self.category)}

    def __str__(self):
        attrs = ",".join(sorted(str(c) for c in self.constraints))
        if self.kind == "select":
            return f"={self.category}" + (f":{attrs}" if attrs else "")
        body = " ".join([self.category] + sorted(str(c) for c in self.constraints))
        return f"({body})" if self.optional else body


@dataclass(frozen=True)
class LexicalEntry:
    features: tuple
    phon: str = ""
    sem: str = ""
    covert: bool = False
    proclitic: bool = False
    anaphor: Optional[str] = None  # reflexive | pronoun | null-subject
    root_only: bool = False

    def __post_init__(self):
        seen_select = False
        for f in self.features:
            if f.kind == "select":
                seen_select = True
            elif seen_select:
                raise ValueError("category feature after a select feature")
        if not self.covert and not self.phon:
            raise ValueError("overt entries need a phonetic form")
        if not self.sem:
            object.__setattr__(self, "sem", self.phon)

    @cached_property
    def category_features(self) -> tuple:
        return tuple(f for f in self.features if f.kind == "category")

    @cached_property
    def select_features(self) -> tuple:
        return tuple(f for f in self.features if f.kind == "select")

    @cached_property
    def attributes(self) -> frozenset:
        """All attribute constraints of the category features, merged."""
        out = frozenset()
        for f in self.category_features:
            out = unify(out, f.constraints) or out
        return out

    def bundle_at(self, category: str) -> frozenset:
        return self.attributes | {AttributeValue(CAT, category)}

    @property
    def name(self) -> str:
        return self.sem

    def __str__(self):
        return f"[{' '.join(str(f) for f in self.features)} {self.phon or '∅'}]"


def edge_of_entry(e: LexicalEntry) -> FeatureTerm:
    """Left-most feature of the entry; an optional first feature is the edge."""
    if not e.features:
        raise ValueError("entry has no features")
    return e.features[0]


def edge_candidates(e: LexicalEntry):
    """Edges to try in order: the left-most feature, then, if that one is
    optional, its successor. Yields (index, term)."""
    cats = e.category_features
    for i, f in enumerate(cats):
        yield i, f
        if not f.optional:
            break


class Split(NamedTuple):
    consumed: tuple
    unexpected: tuple
    skipped: tuple
    bundle: frozenset  # unified expectation + entry bundle


def split_consumed_unexpected(e: LexicalEntry, expected: FeatureTerm, categories=None) -> Optional[Split]:
    """Match ``e`` against an expectation.

    The matched edge is consumed together with any chain of category-level
    selections the entry already carries (``T`` selects ``V`` and the entry
    has ``V`` next). Whatever category features remain are unexpected.
    Returns None if no edge unifies.
    """
    cats = e.category_features
    for i, f in edge_candidates(e):
        if f.category != expected.category:
            continue
        u = unify(expected.bundle, e.bundle_at(f.category))
        if u is None:
            continue
        j = i + 1
        if categories is not None:
            cur = f.category
            while j < len(cats):
                sel = categories[cur].select if cur in categories else None
                if sel is None or cats[j].category != sel:
                    break
                cur = sel
                j += 1
        return Split(cats[i:j], cats[j:], cats[:i], u)
    return None


# ---------------------------------------------------------------- paths

POSITION = "position"
CATEGORY = "category"
DEFAULT_CLASSES = (POSITION, CATEGORY, "pers", "num", "gen", "anim", "case")
PATH_DEFAULTS = {"pers": "3", "num": "sg"}


class Label(NamedTuple):
    cls: str
    value: Optional[str]

    def __str__(self):
        if self.cls == "pers" and self.value is not None:
            return f"{self.value}p"
        if self.value is None:
            return self.cls
        return self.value


@dataclass(frozen=True)
class FeatureOrder:
    classes: tuple = DEFAULT_CLASSES
    positions: frozenset = frozenset({"S", "F"})

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("feature order repeats a class")
        for required in (POSITION, CATEGORY):
            if required not in self.classes:
                raise ValueError(f"feature order lacks {required}")

    def rank(self, cls: str) -> int:
        return self.classes.index(cls)


DEFAULT_ORDER = FeatureOrder()


@dataclass(frozen=True)
class FeaturePath:
    labels: tuple = ()

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __str__(self):
        return "·".join(str(l) for l in self.labels) or "ε"

    def check(self, order: FeatureOrder = DEFAULT_ORDER):
        ranks = [order.rank(l.cls) for l in self.labels]
        if ranks != sorted(set(ranks)):
            raise ValueError(f"path {self} violates the feature order")
        return self

    @property
    def topic(self) -> bool:
        return bool(self.labels) and self.labels[0].cls == POSITION

    @classmethod
    def parse(cls, text: str, order: FeatureOrder = DEFAULT_ORDER) -> "FeaturePath":
        """Parse ``S.D.2p.sg``-style text, inferring label classes by shape."""
        labels = []
        for tok in text.replace("·", ".").split("."):
            if not tok:
                continue
            if tok in order.positions:
                labels.append(Label(POSITION, tok))
            elif tok[:1].isupper():
                labels.append(Label(CATEGORY, tok))
            elif tok[:-1].isdigit() and tok.endswith("p"):
                labels.append(Label("pers", tok[:-1]))
            elif tok in ("sg", "pl"):
                labels.append(Label("num", tok))
            elif tok in ("m", "f", "fem", "masc", "n"):
                labels.append(Label("gen", tok))
            elif tok in ("anim",):
                labels.append(Label("anim", None))
            else:
                labels.append(Label("case", tok))
        return cls(tuple(labels)).check(order)


def path_of(categories: Iterable[str], attrs: Iterable[AttributeValue],
            order: FeatureOrder = DEFAULT_ORDER, position: Optional[str] = None,
            defaults: bool = True) -> FeaturePath:
    """Build the trie path for an item.

    ``categories`` are the item's category labels; the first one that is not
    a position label gives the category class. ``position`` is the position
    category the item was merged in, if any.
    """
    values = {}
    for c in categories:
        if c in order.positions:
            continue
        values.setdefault(CATEGORY, c)
    if CATEGORY not in values:
        raise ValueError("path needs a category label")
    if position is not None:
        values[POSITION] = position
    attrs = as_dict(attrs)
    attrs.pop(CAT, None)
    for a, v in attrs.items():
        if a in order.classes and a not in (POSITION, CATEGORY):
            if v is None and a in PATH_DEFAULTS:
                continue
            values[a] = v
    if defaults:
        for a, v in PATH_DEFAULTS.items():
            if a in order.classes:
                values.setdefault(a, v)
    return FeaturePath(tuple(Label(c, values[c]) for c in order.classes if c in values))


def cue_of(b: Iterable[AttributeValue], order: FeatureOrder = DEFAULT_ORDER) -> dict:
    """Turn an expectation bundle into a trie cue: label class -> value."""
    cue = {}
    for a, v in as_dict(b).items():
        if a == CAT:
            if v in order.positions:
                cue[POSITION] = v
            else:
                cue[CATEGORY] = v
        elif a in order.classes:
            cue[a] = v
    return cue


def label_matches(label: Label, cue: dict) -> bool:
    if label.cls not in cue:
        return True
    want = cue[label.cls]
    return want is None or label.value is None or want == label.value


def path_matches(path: FeaturePath, cue: dict, skip_positions: bool = True) -> bool:
    """Label-by-label check of a stored path against a cue.

    Classes the path lacks are unconstrained. A position label the cue does
    not name is passed over only when ``skip_positions`` is set; a position
    the cue does name must head the path.
    """
    if POSITION in cue and not (path.labels and path.labels[0].cls == POSITION):
        return False
    for label in path:
        if label.cls == POSITION and POSITION not in cue:
            if not skip_positions:
                return False
            continue
        if not label_matches(label, cue):
            return False
    return True
