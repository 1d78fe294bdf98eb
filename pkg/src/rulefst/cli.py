"""Command-line interface: ``rulefst compile|apply|inspect|trace|oracle``."""

from __future__ import annotations

import argparse
import logging
import sys

from .automata import ApplyError
from .compiler import CompileError, compile_ruleset
from .features import SchemaError
from .fsttext import FormatError, deserialize_compiled, serialize_compiled
from .pattern import PatternError
from .rulefile import RuleSyntaxError, parse_rule_file
from .rules import MODES
from .runtime import apply_composed, apply_items, apply_staged, oracle_apply, oracle_items
from .symbols import SymbolError

EXIT_OK, EXIT_PARSE, EXIT_COMPILE, EXIT_APPLY = 0, 2, 3, 4

log = logging.getLogger("rulefst")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _read_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_PARSE) from e


def _load_rules(path, mode):
    try:
        return parse_rule_file(_read_text(path), mode)
    except RuleSyntaxError as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE) from e


def _load_compiled(path):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_PARSE) from e
    try:
        return deserialize_compiled(data)
    except (FormatError, SymbolError) as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE) from e


def read_symbol_lines(text, mode, split_chars=False):
    """One input per line: whitespace-separated symbols, or characters with ``split_chars``."""
    for line in text.splitlines():
        if mode == "char" and split_chars:
            yield [c for c in line if not c.isspace()]
        else:
            yield line.split()


def read_item_sequences(text):
    """Items are ``feature=value`` lines; blank lines separate sequences."""
    seqs, current = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            if current:
                seqs.append(current)
                current = []
            continue
        item = {}
        for pair in line.split():
            feat, sep, value = pair.partition("=")
            if not sep or not feat or not value:
                raise CliError(f"line {lineno}: expected feature=value, got {pair!r}", EXIT_APPLY)
            item[feat] = value
        current.append(item)
    if current:
        seqs.append(current)
    return seqs


def format_items(items):
    return "\n".join(" ".join(f"{f}={v}" for f, v in item.items()) for item in items)


def _run_batch(mode, text, split_chars, run_symbols, run_items, out):
    if mode == "item":
        for k, seq in enumerate(read_item_sequences(text)):
            if k:
                out.write("\n")
            out.write(format_items(run_items(seq)) + "\n")
    else:
        for lineno, symbols in enumerate(read_symbol_lines(text, mode, split_chars), 1):
            try:
                out.write(" ".join(run_symbols(symbols)) + "\n")
            except ApplyError as e:
                raise CliError(f"input line {lineno}: {e}", EXIT_APPLY) from e


def cmd_compile(args):
    rules = _load_rules(args.rules, args.mode)
    try:
        compiled = compile_ruleset(rules, compose=args.compose,
                                   complete_with_identity=args.complete_with_identity)
    except (CompileError, PatternError, SchemaError, SymbolError) as e:
        raise CliError(f"{args.rules}: {e}", EXIT_COMPILE) from e
    with open(args.output, "wb") as fh:
        fh.write(serialize_compiled(compiled))
    log.info("compiled %d rules into %s", compiled.rule_count, args.output)


def cmd_apply(args):
    c = _load_compiled(args.compiled)
    if args.composed and c.composed is None:
        raise CliError("no composed machine; recompile with --compose", EXIT_APPLY)
    run = (lambda s: apply_composed(c, s)) if args.composed else (lambda s: apply_staged(c, s))
    _run_batch(c.mode, _read_text(args.input), args.split_chars, run,
               lambda items: apply_items(c, items), sys.stdout)


def cmd_trace(args):
    c = _load_compiled(args.compiled)
    text = _read_text(args.input)
    if c.mode == "item":
        for k, seq in enumerate(read_item_sequences(text)):
            _, record = apply_items(c, seq, trace=True)
            print(("\n" if k else "") + record.format())
        return
    for k, symbols in enumerate(read_symbol_lines(text, c.mode, args.split_chars), 1):
        try:
            _, record = apply_staged(c, symbols, trace=True)
        except ApplyError as e:
            raise CliError(f"input line {k}: {e}", EXIT_APPLY) from e
        print(("\n" if k > 1 else "") + "input\t" + " ".join(symbols))
        print(record.format())


def cmd_inspect(args):
    c = _load_compiled(args.compiled)
    print(f"mode\t{c.mode}")
    print(f"rules\t{c.rule_count}")
    print(f"symbols\t{len(c.symbols) - 1}")
    print("stage\tkind\tstates\tarcs")
    for label, m in c.stages():
        print(f"{label}\t{type(m).__name__.lower()}\t{m.num_states}\t{m.num_arcs}")


def cmd_oracle(args):
    rules = _load_rules(args.rules, args.mode)
    complete = args.complete_with_identity
    try:
        _run_batch(rules.mode, _read_text(args.input), args.split_chars,
                   lambda s: oracle_apply(rules, s, complete),
                   lambda items: oracle_items(rules, items, complete), sys.stdout)
    except (CompileError, PatternError, SchemaError, SymbolError) as e:
        raise CliError(f"{args.rules}: {e}", EXIT_COMPILE) from e


def build_parser():
    parser = argparse.ArgumentParser(prog="rulefst", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a rule file")
    p.add_argument("rules")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--complete-with-identity", action="store_true",
                   help="append identity default rules for uncovered input symbols")
    p.add_argument("--compose", action="store_true", help="also build the single composed FST")
    p.set_defaults(func=cmd_compile)

    for name, func, help_ in (("apply", cmd_apply, "apply a compiled ruleset"),
                              ("trace", cmd_trace, "show every intermediate stage")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("compiled")
        p.add_argument("--input", default="-")
        p.add_argument("--split-chars", action="store_true",
                       help="char mode: split each input line into characters")
        if name == "apply":
            p.add_argument("--composed", action="store_true", help="use the composed machine")
        p.set_defaults(func=func)

    p = sub.add_parser("inspect", help="print stage sizes")
    p.add_argument("compiled")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("oracle", help="run the reference interpreter on a rule file")
    p.add_argument("rules")
    p.add_argument("--input", default="-")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--complete-with-identity", action="store_true")
    p.add_argument("--split-chars", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as e:
        print(f"rulefst: {e}", file=sys.stderr)
        return e.code
    except ApplyError as e:
        print(f"rulefst: {e}", file=sys.stderr)
        return EXIT_APPLY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
