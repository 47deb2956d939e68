"""Command-line front end.

    pmg parse --grammar fixture --backend trie -- "cosa pensi che mangi"
    pmg generate --grammar fixture -- cosa tu pensi che io mangi
    pmg enumerate --grammar fixture --max-steps 12
    pmg bind --grammar fixture --discourse b-bprime
    pmg compare --grammar fixture --discourse b-bprime
    pmg trie-dump --grammar fixture -- "cosa pensi che mangi"
    pmg metrics -- S.D.2p.pl S.D.2p.sg S.D.1p.sg

Exit codes: 0 success, 1 ungrammatical or unresolved, 2 usage, 3 grammar error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .binding import Binder, bind_sentence, process_discourse
from .engine import DerivationError, enumerate_language, generate, parse
from .features import FeaturePath
from .lexicon import LexiconError, load_lexicon
from .memory import Trie, confusability

OK, UNGRAMMATICAL, USAGE, GRAMMAR = 0, 1, 2, 3
COMMANDS = ("parse", "generate", "enumerate", "bind", "trie-dump", "compare", "metrics")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    grammar: str = "fixture"
    backend: str = "trie"
    trace_format: str = "text"
    max_steps: Optional[int] = None
    discourse: Optional[str] = None
    tokens: list = field(default_factory=list)

    def validate(self):
        if self.command in ("parse", "generate") and not self.tokens:
            raise UsageError(f"{self.command} needs input tokens after --")
        if self.command == "trie-dump" and not self.tokens and not self.discourse:
            raise UsageError("trie-dump needs input tokens or --discourse")
        if self.command in ("bind", "compare") and not self.discourse and not self.tokens:
            raise UsageError(f"{self.command} needs --discourse or input after --")
        if self.command == "metrics" and not self.tokens:
            raise UsageError("metrics needs feature paths after --")
        if self.max_steps is not None and self.max_steps < 1:
            raise UsageError("--max-steps must be positive")
        return self


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmg", description="Minimalist grammar derivations with trie memory.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--grammar", default="fixture", help="grammar file, or a shipped name")
        p.add_argument("--backend", choices=("lifo", "trie"), default="trie")
        p.add_argument("--trace-format", choices=("text", "structured"), default="text")
        p.add_argument("--max-steps", type=int, default=None)
        p.add_argument("--discourse", help="one sentence per line, or b-bprime / b-bsecond")
        p.add_argument("tokens", nargs="*")
    return ap


def config_from(argv) -> RunConfig:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("bad arguments") from exc
    # "cosa pensi" and cosa pensi mean the same thing
    tokens = [t for arg in ns.tokens for t in arg.split()]
    return RunConfig(ns.command, ns.grammar, ns.backend, ns.trace_format, ns.max_steps,
                     ns.discourse, tokens).validate()


def read_discourse(ref: str) -> list:
    p = Path(ref)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    else:
        shipped = resources.files("pmg") / "data" / (ref if ref.endswith(".txt") else ref + ".txt")
        if not shipped.is_file():
            raise UsageError(f"no discourse {ref!r}")
        text = shipped.read_text(encoding="utf-8")
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    return [l for l in lines if l]


def _sentences(cfg: RunConfig) -> list:
    if cfg.discourse:
        return read_discourse(cfg.discourse)
    return [" ".join(cfg.tokens)]


def _emit_result(res, cfg, out):
    if cfg.trace_format == "structured":
        out.write(res.trace.to_jsonl())
        out.write(json.dumps({"verdict": str(res.verdict), "root": res.root,
                              "tried": list(res.tried), "surface": list(res.surface),
                              "tree": res.tree}, sort_keys=True, ensure_ascii=False) + "\n")
        return
    out.write(res.trace.to_text())
    out.write(f"verdict: {res.verdict}\n")
    out.write(f"root: {res.root} (tried {', '.join(res.tried)})\n")
    out.write(f"tree: {res.tree}\n")
    out.write(f"surface: {' '.join(res.surface)}\n")


def cmd_parse(lex, cfg, out):
    res = parse(lex, cfg.tokens, backend=cfg.backend, max_steps=cfg.max_steps)
    _emit_result(res, cfg, out)
    return OK if res.verdict.grammatical else UNGRAMMATICAL


def cmd_generate(lex, cfg, out):
    try:
        res = generate(lex, cfg.tokens, backend=cfg.backend, max_steps=cfg.max_steps)
    except DerivationError as exc:
        raise UsageError(str(exc)) from exc
    _emit_result(res, cfg, out)
    return OK if res.verdict.grammatical else UNGRAMMATICAL


def cmd_enumerate(lex, cfg, out):
    lang = enumerate_language(lex, cfg.max_steps or 25, backend=cfg.backend)
    for s in sorted(lang):
        out.write(" ".join(s) + "\n")
    out.write(f"# {len(lang)} sentences\n")
    return OK


def _emit_table(table, cfg, out):
    out.write(table.to_jsonl() if cfg.trace_format == "structured" else table.to_text())


def cmd_bind(lex, cfg, out):
    results, table = process_discourse(lex, _sentences(cfg), backend=cfg.backend, max_steps=cfg.max_steps)
    _emit_table(table, cfg, out)
    return OK if table.ok else UNGRAMMATICAL


def cmd_trie_dump(lex, cfg, out):
    if cfg.discourse:
        binder = Binder(lex)
        for k, sent in enumerate(read_discourse(cfg.discourse), 1):
            res = parse(lex, sent.split(), backend="trie", max_steps=cfg.max_steps)
            if not res.verdict.grammatical:
                out.write(f"# sentence {k} has no parse\n")
                return UNGRAMMATICAL
            bind_sentence(binder, res.trace, k)
        out.write(binder.store.dump())
        return OK
    res = parse(lex, cfg.tokens, backend="trie", max_steps=cfg.max_steps)
    out.write(res.state.memory.dump())
    return OK if res.verdict.grammatical else UNGRAMMATICAL


def cmd_compare(lex, cfg, out):
    sentences = _sentences(cfg)
    summaries = {}
    for backend in ("trie", "lifo"):
        results, table = process_discourse(lex, sentences, backend=backend, max_steps=cfg.max_steps)
        verdicts = [str(r.verdict) for r in results]
        chains = {l.anaphor: " -> ".join(l.chain) or l.status for l in table.lines}
        summaries[backend] = (verdicts, chains)
        out.write(f"[{backend}]\n")
        for k, v in enumerate(verdicts, 1):
            out.write(f"  s{k}: {v}\n")
        for a, c in chains.items():
            out.write(f"  {a} -> {c}\n")
    diffs = []
    (tv, tc), (lv, lc) = summaries["trie"], summaries["lifo"]
    for k, (a, b) in enumerate(zip(tv, lv), 1):
        if a != b:
            diffs.append(f"s{k} verdict: trie {a} | lifo {b}")
    for a in sorted(set(tc) | set(lc)):
        if tc.get(a) != lc.get(a):
            diffs.append(f"{a}: trie {tc.get(a)} | lifo {lc.get(a)}")
    out.write("[diff]\n")
    out.write("".join(f"  {d}\n" for d in diffs) or "  none\n")
    return OK


def cmd_metrics(lex, cfg, out):
    try:
        paths = [FeaturePath.parse(t, lex.order) for t in cfg.tokens]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    trie = Trie()
    out.write("insertion cost (in order):\n")
    for p in paths:
        out.write(f"  {p}  {trie.insertion_cost(p)}\n")
        trie.insert(p, str(p))
    out.write("confusability:\n")
    for i, a in enumerate(paths):
        for b in paths[i + 1:]:
            out.write(f"  {a} ~ {b}  {confusability(a, b)}\n")
    return OK


HANDLERS = {"parse": cmd_parse, "generate": cmd_generate, "enumerate": cmd_enumerate,
            "bind": cmd_bind, "trie-dump": cmd_trie_dump, "compare": cmd_compare,
            "metrics": cmd_metrics}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg = config_from(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        err.write(f"pmg: {exc}\n")
        return USAGE
    try:
        lex = load_lexicon(cfg.grammar)
    except FileNotFoundError:
        err.write(f"pmg: no grammar {cfg.grammar!r}\n")
        return GRAMMAR
    except LexiconError as exc:
        err.write(f"pmg: {exc}\n")
        return GRAMMAR
    try:
        return HANDLERS[cfg.command](lex, cfg, out)
    except UsageError as exc:
        err.write(f"pmg: {exc}\n")
        return USAGE


def main():
    sys.exit(run())
