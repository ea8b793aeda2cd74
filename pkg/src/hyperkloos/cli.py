"""Command-line interface: ``hyperkloos {kloosterman, verify, formula}``.

Every command prints a versioned header line followed by one row per result,
as CSV, JSON lines or an aligned table. Floats are written with 17
significant digits. Options may also come from a JSON config file given with
``--config``; command-line flags take precedence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace

from . import __version__
from . import exactsums as es
from .errors import HyperKloosError
from .formula import (
    FormulaInstance,
    ingest_dataset,
    lhs_hyper_sum,
    long_element_term,
    spectral_rhs,
    tilde_F_d,
    tilde_F_d0,
    x_threshold,
)
from .suites import SUITES, run_suite
from .testfun import default_config, make_plateau_bump
from .weylalg import SpectralParameter

SCHEMA_VERSION = 1
FORMATS = ("csv", "json-lines", "pretty")
KINDS = ("kl2", "kl3", "w5", "w4", "wl")
PARAM_KEYS = ("m", "n", "c", "c1", "c2", "C", "X", "T1", "T2", "d", "r", "mu", "dataset", "tol")
CONFIG_KEYS = frozenset(PARAM_KEYS) | {"format", "seed"}


class UsageError(Exception):
    """Bad command-line input; exits with status 2."""


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: verb, parameter map, output format and seed."""

    command: str
    params: dict = field(default_factory=dict)
    output_format: str = "csv"
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.params) - set(PARAM_KEYS)
        if unknown:
            raise UsageError(f"unknown keys: {', '.join(sorted(unknown))}")
        if self.output_format not in FORMATS:
            raise UsageError(f"--format must be one of {', '.join(FORMATS)}")

    def get(self, key, default=None):
        value = self.params.get(key)
        return default if value is None else value


# ---------------------------------------------------------------- parsing helpers

def _parse_int_list(text, name, length=None) -> tuple:
    if isinstance(text, (list, tuple)):
        items = list(text)
    elif isinstance(text, int):
        items = [text]
    else:
        items = [p for p in str(text).replace(" ", "").split(",") if p]
    try:
        vals = tuple(int(v) for v in items)
    except (TypeError, ValueError):
        raise UsageError(f"--{name}: expected integers, got {text!r}") from None
    if length is not None and len(vals) != length:
        raise UsageError(f"--{name}: expected {length} integer(s), got {text!r}")
    return vals


def _parse_range(text, name) -> list:
    """``"a..b"`` (inclusive), ``"a,b,c"`` or a single integer."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return list(_parse_int_list(text, name))
    s = str(text).replace(" ", "")
    if ".." in s:
        lo, _, hi = s.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise UsageError(f"--{name}: bad range {text!r}") from None
        if a > b:
            raise UsageError(f"--{name}: empty range {text!r}")
        return list(range(a, b + 1))
    return list(_parse_int_list(s, name))


def _parse_complex(text, name) -> complex:
    try:
        return complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError:
        raise UsageError(f"--{name}: expected a complex number, got {text!r}") from None


def _parse_float(text, name) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise UsageError(f"--{name}: expected a number, got {text!r}") from None


# ---------------------------------------------------------------- output

def _fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt_float(value)
    if value is None:
        return ""
    return str(value)


def _json_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return _fmt_float(value) if math.isfinite(value) else "null"
    if isinstance(value, int):
        return str(value)
    if value is None:
        return "null"
    return json.dumps(str(value))


def render(header: dict, columns: list, rows: list, fmt: str) -> str:
    """Render rows (dicts keyed by ``columns``) after a versioned header line."""
    head = {"schema": f"hyperkloos/{header['command']}", "version": SCHEMA_VERSION,
            "package": __version__}
    head.update(header)
    if fmt == "json-lines":
        lines = ["{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in head.items()) + "}"]
        for row in rows:
            lines.append("{" + ", ".join(f"{json.dumps(c)}: {_json_value(row.get(c))}"
                                         for c in columns) + "}")
        return "\n".join(lines) + "\n"
    banner = "# " + " ".join(f"{k}={_cell(v)}" for k, v in head.items())
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
        return banner + "\n" + buf.getvalue()
    table = [columns] + [[_cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(columns))]
    lines = [banner] + ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in table]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands

def _divisor_count(n: int) -> int:
    n = abs(n)
    count, p = 1, 2
    while p * p <= n:
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        count *= k + 1
        p += 1
    return count * (2 if n > 1 else 1)


def _d3(n: int) -> int:
    """Number of ordered factorizations of ``|n|`` into three factors."""
    n = abs(n)
    total, p = 1, 2
    while p * p <= n:
        k = 0
        while n % p == 0:
            n //= p
            k += 1
        total *= (k + 1) * (k + 2) // 2
        p += 1
    return total * (3 if n > 1 else 1)


def _kloosterman_rows(kind: str, run: RunConfig) -> list:
    rows = []
    if kind in ("kl2", "kl3"):
        if run.get("c") is None:
            raise UsageError(f"{kind} needs --c")
        cs = sorted(_parse_range(run.get("c"), "c"))
        if 0 in cs:
            raise UsageError("--c: moduli must be nonzero")
        if kind == "kl2":
            m = _parse_int_list(run.get("m", 1), "m", 1)[0]
            n = _parse_int_list(run.get("n", 1), "n", 1)[0]
            for c in cs:
                s = es.kl2(m, n, c)
                bound = _divisor_count(c) * math.sqrt(abs(c))
                rows.append(dict(m=f"{m}", n=f"{n}", c1=c, c2=None, re=s.value.real,
                                 im=s.value.imag, term_count=s.term_count,
                                 bound_ratio=abs(s.value) / bound))
        else:
            m1, m2 = _parse_int_list(run.get("m", "1,1"), "m", 2)
            n1 = _parse_int_list(run.get("n", 1), "n")[0]
            for c in cs:
                s = es.kl3(n1, m1, m2, c)
                bound = _d3(c) * abs(c)
                rows.append(dict(m=f"{m1},{m2}", n=f"{n1}", c1=c, c2=None, re=s.value.real,
                                 im=s.value.imag, term_count=s.term_count,
                                 bound_ratio=abs(s.value) / bound))
        return rows
    m = _parse_int_list(run.get("m", "1,1"), "m", 2)
    n = _parse_int_list(run.get("n", "1,1"), "n", 2)
    if run.get("c1") is None or run.get("c2") is None:
        raise UsageError(f"{kind} needs --c1 and --c2")
    c1s = _parse_range(run.get("c1"), "c1")
    c2s = _parse_range(run.get("c2"), "c2")
    if 0 in c1s or 0 in c2s:
        raise UsageError("moduli must be nonzero")
    fn = {"w5": es.s_w5, "w4": es.s_w4, "wl": es.s_wl}[kind]
    for c1, c2 in sorted((a, b) for a in c1s for b in c2s):
        s = fn(m, n, (c1, c2))
        if kind == "w5":
            bound = _divisor_count(c1) * c1 * c1
        elif kind == "w4":
            bound = _divisor_count(c2) * c2 * c2
        else:
            lcm = abs(c1 * c2) // math.gcd(c1, c2)
            g = math.gcd(m[0] * n[1], lcm) * math.gcd(m[1] * n[0], lcm) * math.gcd(c1, c2)
            bound = _divisor_count(c1) * _divisor_count(c2) * math.sqrt(abs(c1 * c2) * g)
        rows.append(dict(m=f"{m[0]},{m[1]}", n=f"{n[0]},{n[1]}", c1=c1, c2=c2,
                         re=s.value.real, im=s.value.imag, term_count=s.term_count,
                         bound_ratio=abs(s.value) / bound))
    return rows


def cmd_kloosterman(kind: str, run: RunConfig) -> tuple:
    """One row per modulus: inputs, value, term count and ratio to the classical bound.

    Bounds: ``d(c) sqrt|c|`` for kl2, ``d3(c) |c|`` for kl3, ``d(c1) c1^2`` for
    w5 (``d(c2) c2^2`` for w4), and
    ``d(c1) d(c2) sqrt(|c1 c2| (m1 n2, L) (m2 n1, L) (c1, c2))`` with
    ``L = lcm(c1, c2)`` for wl.
    """
    if kind not in KINDS:
        raise UsageError(f"kind must be one of {', '.join(KINDS)}")
    rows = _kloosterman_rows(kind, run)
    cols = ["m", "n", "c1", "c2", "re", "im", "term_count", "bound_ratio"]
    return {"command": "kloosterman", "kind": kind}, cols, rows, 0


def cmd_verify(suite: str, run: RunConfig) -> tuple:
    """Run an invariant suite; status 1 if any check fails."""
    if suite not in SUITES:
        raise UsageError(f"suite must be one of {', '.join(sorted(SUITES))}")
    checks = run_suite(suite, run.seed)
    rows = [dict(check=c.name, measured=float(c.measured), threshold=float(c.threshold),
                 relation="<=" if c.upper else ">=", passed=c.passed) for c in checks]
    failed = sum(not c.passed for c in checks)
    header = {"command": "verify", "suite": suite, "seed": run.seed, "failed": failed}
    return header, ["check", "measured", "threshold", "relation", "passed"], rows, 1 if failed else 0


def _formula_config(run: RunConfig):
    C = _parse_float(run.get("C", 1.0), "C")
    X = _parse_float(run.get("X", 1.0), "X")
    cfg = default_config(C, X)
    t1 = run.get("T1")
    t2 = run.get("T2")
    if t1 is not None or t2 is not None:
        t1 = _parse_float(t1 if t1 is not None else cfg.T1, "T1")
        t2 = _parse_float(t2 if t2 is not None else cfg.T2, "T2")
        if not 0 < t1 < t2:
            raise UsageError("need 0 < T1 < T2")
        w = t2 - t1
        f = make_plateau_bump((t1, t2), (t1 + 0.3 * w, t1 + 0.7 * w))
        cfg = replace(cfg, f=f, T1=t1, T2=t2)
    return cfg


def _term_rows(block: str, res) -> list:
    by_mod = {(t.c1, t.c2): t for t in res.terms}
    rows = []
    for c1, c2 in res.moduli:
        t = by_mod.get((c1, c2))
        if t is None:
            rows.append(dict(block=block, c1=c1, c2=c2, re=0.0, im=0.0, note="weight vanishes"))
        else:
            rows.append(dict(block=block, c1=c1, c2=c2, re=t.value.real, im=t.value.imag,
                             kl_re=t.kloosterman.real, kl_im=t.kloosterman.imag,
                             weight_re=t.weight.real, weight_im=t.weight.imag,
                             term_count=t.term_count))
    return rows


def cmd_formula(run: RunConfig) -> tuple:
    """Both sides of the formula for one instance, with termwise rows.

    Summary rows have ``block`` in {threshold, lhs, long-element, rhs,
    transform}; termwise rows use ``lhs-term`` and ``long-element-term``, one
    per enumerated modulus. The long-element term is reported as its own sum;
    it enters the formula with a minus sign.
    """
    m = _parse_int_list(run.get("m", "1,1"), "m", 2)
    n = _parse_int_list(run.get("n", "1,1"), "n", 2)
    cfg = _formula_config(run)
    tol = _parse_float(run.get("tol", 1e-12), "tol")
    try:
        inst = FormulaInstance(m, n, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = []
    thr = x_threshold(inst)
    rows.append(dict(block="threshold", re=thr, note=f"X = {_fmt_float(cfg.X)}"))
    lhs = lhs_hyper_sum(inst)
    rows.append(dict(block="lhs", re=lhs.value.real, im=lhs.value.imag,
                     note=f"{lhs.enumerated} moduli enumerated, {len(lhs.terms)} with nonzero weight"))
    wl = long_element_term(inst, tol=tol)
    if cfg.X > thr and wl.value == 0:
        rows.append(dict(block="long-element", re=0.0, im=0.0, note="0 (vanishing regime)"))
    else:
        rows.append(dict(block="long-element", re=wl.value.real, im=wl.value.imag,
                         note=f"{wl.enumerated} moduli enumerated; enters with a minus sign"))
    if run.get("dataset") is None:
        rows.append(dict(block="rhs", note="unavailable: dataset required"))
    else:
        ds = ingest_dataset(run.get("dataset"))
        spectral = spectral_rhs(inst, ds)
        rows.append(dict(block="rhs", re=spectral.value.real, im=spectral.value.imag,
                         note=(f"evaluator {spectral.evaluator}; {len(spectral.terms)} forms, "
                               f"{spectral.negligible} outside the asymptotic range; completeness "
                               f"{_fmt_float(spectral.completeness)}; tail bound {_fmt_float(spectral.tail_bound)} "
                               "(order of magnitude)")))
    if run.get("d") is not None:
        d = _parse_int_list(run.get("d"), "d", 1)[0]
        if run.get("mu") is not None:
            mu_vals = [_parse_complex(v, "mu") for v in str(run.get("mu")).split(",")]
            if len(mu_vals) != 3:
                raise UsageError("--mu: expected three comma-separated complex numbers")
            try:
                param = SpectralParameter(tuple(mu_vals), d)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"--mu: {exc}") from None
        else:
            param = _parse_complex(run.get("r", 0.0), "r")
        for name, fn in (("tilde", tilde_F_d), ("tilde0", tilde_F_d0)):
            try:
                val = fn(d, param, inst)
                rows.append(dict(block="transform", key=name, re=val.real, im=val.imag))
            except HyperKloosError as exc:
                rows.append(dict(block="transform", key=name, note=f"{type(exc).__name__}: {exc}"))
    rows.extend(_term_rows("lhs-term", lhs))
    rows.extend(_term_rows("long-element-term", wl))
    cols = ["block", "key", "c1", "c2", "re", "im", "kl_re", "kl_im", "weight_re", "weight_im",
            "term_count", "note"]
    header = {"command": "formula", "m": f"{m[0]},{m[1]}", "n": f"{n[0]},{n[1]}",
              "C": cfg.C, "X": cfg.X, "T1": cfg.T1, "T2": cfg.T2}
    return header, cols, rows, 0


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON file with any of the flags below")
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--seed", type=int)
    g.add_argument("--tol")
    for key in ("m", "n", "c", "c1", "c2", "C", "X", "T1", "T2", "d", "r", "mu", "dataset"):
        g.add_argument(f"--{key}", dest=key)
    parser = _Parser(prog="hyperkloos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hyperkloos {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    k = sub.add_parser("kloosterman", parents=[common], help="exact Kloosterman sums")
    k.add_argument("kind", choices=KINDS)
    v = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    v.add_argument("suite", choices=sorted(SUITES))
    sub.add_parser("formula", parents=[common], help="both sides of the formula")
    return parser


def _load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def make_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file (if any) with flags; flags win."""
    file_values = _load_config(args.config) if args.config else {}
    params = {k: file_values.get(k) for k in PARAM_KEYS}
    for k in PARAM_KEYS:
        if getattr(args, k, None) is not None:
            params[k] = getattr(args, k)
    fmt = args.format or file_values.get("format", "csv")
    seed = args.seed if args.seed is not None else file_values.get("seed", 0)
    if not isinstance(seed, int):
        raise UsageError("seed must be an integer")
    return RunConfig(args.command, {k: v for k, v in params.items() if v is not None}, fmt, seed)


def main(argv=None) -> int:
    """Run the CLI; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        run = make_run_config(args)
        if run.command == "kloosterman":
            header, cols, rows, status = cmd_kloosterman(args.kind, run)
        elif run.command == "verify":
            header, cols, rows, status = cmd_verify(args.suite, run)
        else:
            header, cols, rows, status = cmd_formula(run)
    except UsageError as exc:
        print(f"hyperkloos: usage error: {exc}", file=sys.stderr)
        return 2
    except HyperKloosError as exc:
        print(f"hyperkloos: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    try:
        sys.stdout.write(render(header, cols, rows, run.output_format))
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return status


if __name__ == "__main__":
    sys.exit(main())
