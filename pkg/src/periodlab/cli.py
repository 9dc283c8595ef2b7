"""periodlab command line: lvalue, check and suite.

Exit codes: 0 all identities pass, 1 some identity fails, 2 usage error,
3 numerical or budget failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .cocycles import depth_cocycle_residual, lincomb_report
from .congruence_group import Cusp, GroupElement, random_pairs, random_word, tau_point
from .eichler import bkm_residual, fin0_residual
from .hp_kernel import DomainError, PrecisionBudget
from .iterated_integrals import (DivergentParameters, PathConflict, RefinementError, lambda_completed,
                                 mellin_identity_residual, multiple_l_partial, route_equivalence_report)
from .modular_forms import InsufficientCoefficients, NotModular, QExpParseError, parse_form

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
IDENTITIES = ("cocycle1", "cocycle2", "cocycle3", "bkm", "fin0", "lincomb", "mellin")
CSV_COLUMNS = ("identity", "depth", "level", "gamma1", "gamma2", "residual", "tolerance", "pass", "seconds")
NUMERIC_ERRORS = (RefinementError, InsufficientCoefficients, DivergentParameters, DomainError,
                  NotModular, ZeroDivisionError)


class UsageError(ValueError):
    pass


def default_digits() -> int:
    raw = os.environ.get("PERIODLAB_DIGITS")
    if raw is None:
        return 30
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PERIODLAB_DIGITS={raw!r} is not an integer")


@dataclass
class RunConfig:
    digits: int = 30
    quad_level: int | None = None
    n_max: int | None = None
    seed: int = 1
    forms: list = field(default_factory=list)
    level: int = 1
    fmt: str = "json"
    output: str | None = None

    def __post_init__(self):
        if self.digits < 15:
            raise UsageError("--digits must be at least 15")
        if self.fmt not in ("json", "csv"):
            raise UsageError("--format must be json or csv")

    def budget(self) -> PrecisionBudget:
        return PrecisionBudget(self.digits, quad_level=self.quad_level)

    def stamp(self) -> dict:
        return {"digits": self.digits, "seed": self.seed, "quad_level": self.quad_level, "n_max": self.n_max}


# ------------------------------------------------------------------ row records

@dataclass
class Row:
    """One emitted line: a report, or an explicitly skipped check."""

    identity: str
    depth: int
    level: int
    gamma1: str = ""
    gamma2: str = ""
    report: object = None
    skipped: str = ""

    @property
    def passed(self) -> bool:
        return self.report is not None and self.report.passed

    def to_json(self, digits: int, timings: bool, stamp: dict) -> str:
        if self.report is None:
            out = {"identity": self.identity, "skipped": True, "reason": self.skipped,
                   "inputs": {"gamma1": self.gamma1, "gamma2": self.gamma2}, "config": stamp}
            return json.dumps(out, sort_keys=True)
        d = self.report.to_dict(digits, timings)
        d["config"] = {**d["config"], **stamp}
        return json.dumps(d, sort_keys=True)

    def csv_row(self, timings: bool) -> list:
        if self.report is None:
            return [self.identity, self.depth, self.level, self.gamma1, self.gamma2, "", "", "skipped", ""]
        r = self.report
        return [self.identity, self.depth, self.level, self.gamma1, self.gamma2, f"{r.residual:.6e}",
                f"{r.tolerance:.6e}", "pass" if r.passed else "fail", f"{r.seconds:.3f}" if timings else ""]


def render(rows, cfg: RunConfig, timings: bool, fmt: str | None = None) -> str:
    fmt = fmt or cfg.fmt
    digits = min(cfg.digits, 40)
    if fmt == "json":
        return "".join(r.to_json(digits, timings, cfg.stamp()) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row(timings))
    return buf.getvalue()


def emit(text: str, path: str | None):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ argument helpers

def _forms(spec_list, n_max):
    out = []
    for s in spec_list:
        try:
            out.append(parse_form(s, n_max))
        except (QExpParseError, FileNotFoundError) as exc:
            raise UsageError(str(exc))
    return out


def _split(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _ints(text: str) -> list:
    try:
        return [int(t) for t in _split(text)]
    except ValueError:
        raise UsageError(f"expected comma separated integers, got {text!r}")


def _gamma(text: str, N: int) -> GroupElement:
    try:
        g = GroupElement.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc))
    if not g.in_gamma0(N):
        raise UsageError(f"{g} is not in Gamma_0({N})")
    return g


def _taus(values, default):
    texts = values or default
    try:
        pts = [tau_point(t) for t in texts]
    except ValueError as exc:
        raise UsageError(str(exc))
    return pts


def _single_gammas(args, N):
    if args.gamma:
        return [_gamma(t, N) for t in args.gamma]
    out, k = [], 0
    while len(out) < args.count:
        g = random_word(N, args.max_len, args.seed * 7919 + k)
        k += 1
        if g.c != 0:
            out.append(g)
    return out


def _pairs(args, N):
    if args.gamma1 or args.gamma2:
        if not (args.gamma1 and args.gamma2):
            raise UsageError("--gamma1 and --gamma2 go together")
        return [(_gamma(args.gamma1, N), _gamma(args.gamma2, N))]
    return random_pairs(N, args.pairs, args.max_len, args.seed)


# ------------------------------------------------------------------ identity runners

def run_identity(identity: str, args, cfg: RunConfig, perturb: float = 0.0) -> list:
    """Evaluate one identity family; returns Rows."""
    budget = cfg.budget()
    forms = _forms(cfg.forms, cfg.n_max)
    N = cfg.level
    rows = []
    tol = args.tolerance
    if identity.startswith("cocycle"):
        depth = int(identity[-1])
        if len(forms) == 1:
            forms = forms * depth
        if len(forms) != depth:
            raise UsageError(f"{identity} needs {depth} forms, got {len(forms)}")
        taus = _taus(args.tau, None) if args.tau else None
        for g1, g2 in _pairs(args, N):
            try:
                rep = depth_cocycle_residual(forms, g1, g2, budget, mode=args.mode, taus=taus,
                                             tolerance=tol, perturb=perturb)
                rows.append(Row(identity, depth, N, str(g1), str(g2), rep))
            except PathConflict as exc:
                rows.append(Row(identity, depth, N, str(g1), str(g2), skipped=f"path conflict: {exc}"))
    elif identity == "bkm":
        if len(forms) != 1:
            raise UsageError("bkm takes exactly one form")
        for g in _single_gammas(args, N):
            for t in _taus(args.tau, ["-0.2-1.1i"]):
                rep = bkm_residual(forms[0], g, t, budget, tolerance=tol, perturb=perturb)
                rows.append(Row("bkm", 1, N, str(g), "", rep))
    elif identity == "fin0":
        if len(forms) == 1:
            forms = forms * 2
        if len(forms) != 2:
            raise UsageError("fin0 takes two forms")
        for g in _single_gammas(args, N):
            for t in _taus(args.tau, ["-0.1-0.9i"]):
                rep = fin0_residual(forms[0], forms[1], g, t, budget, tolerance=tol, perturb=perturb)
                rows.append(Row("fin0", 2, N, str(g), "", rep))
    elif identity == "lincomb":
        if len(forms) == 1:
            forms = forms * 2
        if len(forms) != 2:
            raise UsageError("lincomb takes two forms")
        for g1, g2 in _pairs(args, N):
            for rep in lincomb_report(forms[0], forms[1], g1, g2, budget, ks=_ints(args.k), N=N,
                                      tolerance=tol, perturb=perturb):
                rows.append(Row(rep.identity, 2, N, str(g1), str(g2), rep))
    elif identity == "mellin":
        if args.s is None:
            raise UsageError("mellin needs --s")
        s = _ints(args.s)
        if len(s) == 1 and len(forms) > 1:
            s = s * len(forms)
        if len(s) != len(forms):
            raise UsageError("--s needs one entry per form")
        cusp = _cusp(args.basepoint)
        rep = mellin_identity_residual(forms, cusp, s, budget, tolerance=tol, perturb=perturb)
        rows.append(Row("mellin", len(forms), N, "", "", rep))
    elif identity == "route":
        for g in _single_gammas(args, N):
            taus = _taus(args.tau, ROUTE_TAUS)
            rep = route_equivalence_report(forms, g, taus, budget, tolerance=tol, perturb=perturb)
            rows.append(Row("route", len(forms), N, str(g), "", rep))
    else:
        raise UsageError(f"unknown identity {identity!r}")
    return rows


def _cusp(text: str) -> Cusp:
    try:
        c = Cusp.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc))
    if c.is_infinity:
        raise UsageError("basepoint must be a rational cusp")
    return c


ROUTE_TAUS = ["-0.3-0.8i", "0.2-1.1i", "-1-0.5i", "0.5-0.6i", "0.1-1.5i"]


# ------------------------------------------------------------------ subcommands

def cmd_lvalue(args) -> int:
    cfg = _config(args)
    if args.s is None:
        raise UsageError("lvalue needs --s")
    forms = _forms(cfg.forms, cfg.n_max)
    s = _ints(args.s)
    if len(s) != len(forms):
        raise UsageError("--s needs one entry per form")
    if min(s) < 1:
        raise UsageError("--s entries must be positive integers")
    cusp = _cusp(args.basepoint)
    val = lambda_completed(forms, cusp, s, cfg.budget())
    d = val.to_dict()
    d["config"] = cfg.stamp()
    if args.series:
        L, tail = multiple_l_partial(forms, cusp, s, args.series)
        from .report import fmt
        d["l_partial"] = {"n_terms": args.series, "value": fmt(L, cfg.digits), "tail": f"{tail:.3e}"}
    if cfg.fmt == "csv":
        text = "depth,forms,basepoint,s,re,im,err,digits\n" + ",".join(
            [str(d["depth"]), "|".join(d["forms"]), d["basepoint"], "|".join(map(str, d["s"])),
             d["value"]["re"], d["value"]["im"], d["err"], str(d["digits"])]) + "\n"
    else:
        text = json.dumps(d, sort_keys=True) + "\n"
    emit(text, cfg.output)
    return EXIT_PASS


def cmd_check(args) -> int:
    cfg = _config(args)
    if args.identity not in IDENTITIES:
        raise UsageError(f"identity must be one of {', '.join(IDENTITIES)}")
    rows = run_identity(args.identity, args, cfg, perturb=args.perturb)
    emit(render(rows, cfg, args.timings), cfg.output)
    failed = [r for r in rows if r.report is not None and not r.passed]
    for r in failed:
        print(f"FAIL {r.identity} {r.gamma1} {r.gamma2} residual={r.report.residual:.3e} "
              f"tolerance={r.report.tolerance:.3e}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_PASS


# the canned matrix: (row id, identity, forms, level, tolerance, extra flags)
SUITE = [
    ("c1", "cocycle1", ["delta"], 1, 1e-30, {"pairs": 20, "max_len": 6}),
    ("c2", "cocycle2", ["delta", "delta"], 1, 1e-20, {"pairs": 10, "max_len": 6}),
    ("lin", "lincomb", ["delta", "delta"], 1, 1e-20, {"pairs": 1, "max_len": 6, "k": "1,2"}),
    ("mel1", "mellin", ["delta"], 1, 1e-25, {"s": "15", "basepoint": "0"}),
    ("mel2", "mellin", ["delta", "delta"], 1, 1e-15, {"s": "15,15", "basepoint": "0"}),
    ("route1", "route", ["delta"], 1, 1e-18, {"count": 1, "max_len": 6}),
    ("route2", "route", ["delta", "delta"], 1, 1e-18, {"count": 1, "max_len": 6}),
    ("bkm", "bkm", ["delta"], 1, 1e-25, {"count": 10, "max_len": 6,
                                        "tau": ["-0.3-0.8i", "-0.2-1.1i", "0.25-1.3i"]}),
    ("bkm-half", "bkm", ["theta:1:2"], 8, 1e-12, {"count": 4, "max_len": 4,
                                                 "tau": ["-0.2-1.1i", "-0.3-0.8i", "0.25-1.3i"]}),
    ("fin0", "fin0", ["delta", "delta"], 1, 1e-15, {"count": 1, "max_len": 6,
                                                    "tau": ["-1.5i", "-0.1-0.9i", "0.3-0.7i"]}),
    ("fin0-half", "fin0", ["theta:1:2", "theta:1:2"], 8, 1e-8,
     {"count": 1, "max_len": 4, "tau": ["-0.1-0.9i", "-1.5i", "0.3-0.7i"]}),
    ("c3", "cocycle3", ["delta", "delta", "delta"], 1, 1e-8, {"pairs": 3, "max_len": 6}),
]
SUITE_MARGIN = 10


def _suite_args(seed: int, extra: dict):
    ns = argparse.Namespace(gamma=None, gamma1=None, gamma2=None, pairs=1, count=1, max_len=6, seed=seed,
                            tau=None, mode="auto", k="1,2", s=None, basepoint="0", tolerance=None)
    for k, v in extra.items():
        setattr(ns, k, v)
    return ns


def suite_rows(digits: int, seed: int, quad_level=None, n_max=None, matrix=None, negatives: bool = True):
    """Run the matrix; rows whose tolerance is out of reach at ``digits`` are skipped."""
    rows = []
    for row_id, identity, forms, N, tol, extra in (matrix or SUITE):
        cfg = RunConfig(digits=digits, quad_level=quad_level, n_max=n_max, seed=seed, forms=forms, level=N)
        ns = _suite_args(seed, {**extra, "tolerance": tol})
        depth = len(forms)
        if tol < 10.0 ** (-(digits - SUITE_MARGIN)):
            rows.append(Row(identity, depth, N, skipped=f"tolerance {tol:g} needs more than {digits} digits"))
            continue
        try:
            rows += run_identity(identity, ns, cfg)
            if negatives:
                neg = _suite_args(seed, {**extra, "tolerance": tol, "pairs": 1, "count": 1})
                if "tau" in extra:
                    neg.tau = extra["tau"][:1]
                for r in run_identity(identity, neg, cfg, perturb=1e-6)[:1]:
                    rows.append(_negated(r))
        except NUMERIC_ERRORS as exc:
            rows.append(Row(identity, depth, N, skipped=f"numeric failure: {exc}"))
    return rows


class _Negative:
    """A perturbed report read as a negative control: it passes when the check fails."""

    def __init__(self, rep):
        self._rep = rep
        self.residual = rep.residual
        self.tolerance = rep.tolerance
        self.seconds = rep.seconds
        self.passed = not rep.passed

    def to_dict(self, digits, timings):
        d = self._rep.to_dict(digits, timings)
        d["identity"] = d["identity"] + ":perturbed"
        d["pass"] = self.passed
        d["negative_control"] = True
        return d


def _negated(row: Row) -> Row:
    if row.report is None:
        return row
    return Row(row.identity + ":perturbed", row.depth, row.level, row.gamma1, row.gamma2, _Negative(row.report))


def cmd_suite(args) -> int:
    digits = args.digits if args.digits is not None else default_digits()
    if digits < 15:
        raise UsageError("--digits must be at least 15")
    matrix = None
    if args.manifest:
        matrix = load_manifest(args.manifest)
    rows = suite_rows(digits, args.seed, args.quad_level, args.n_max, matrix)
    cfg = RunConfig(digits=digits, quad_level=args.quad_level, n_max=args.n_max, seed=args.seed)
    table = render(rows, cfg, args.timings, "csv")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(table, encoding="utf-8")
        (out / "reports.jsonl").write_text(render(rows, cfg, args.timings, "json"), encoding="utf-8")
    sys.stdout.write(table)
    bad = [r for r in rows if r.report is not None and not r.passed]
    return EXIT_FAIL if bad else EXIT_PASS


def load_manifest(path: str) -> list:
    """JSON list of {"id", "identity", "forms", "level", "tolerance", ...flags}."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest: {exc}")
    if not isinstance(data, list):
        raise UsageError("manifest must be a JSON list")
    out = []
    for i, spec in enumerate(data):
        spec = dict(spec)
        try:
            identity = spec.pop("identity")
            forms = spec.pop("forms")
            tol = float(spec.pop("tolerance"))
        except KeyError as exc:
            raise UsageError(f"manifest entry {i} lacks {exc}")
        if identity not in IDENTITIES + ("route",):
            raise UsageError(f"manifest entry {i}: unknown identity {identity!r}")
        if isinstance(forms, str):
            forms = _split(forms)
        out.append((spec.pop("id", f"row{i}"), identity, forms, int(spec.pop("level", 1)), tol, spec))
    return out


# ------------------------------------------------------------------ parser

def _config(args) -> RunConfig:
    digits = args.digits if args.digits is not None else default_digits()
    forms = []
    for f in (args.form or []):
        forms += _split(f) if not f.startswith("file:") else [f]
    if not forms:
        forms = ["delta"]
    return RunConfig(digits=digits, quad_level=args.quad_level, n_max=args.n_max, seed=getattr(args, "seed", 1),
                     forms=forms, level=getattr(args, "level", 1), fmt=args.format, output=args.output)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="periodlab", description="Numerical checks for period integrals of cusp forms.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp):
        sp.add_argument("--digits", type=int, default=None, help="working digits (env PERIODLAB_DIGITS)")
        sp.add_argument("--quad-level", type=int, default=None)
        sp.add_argument("--n-max", type=int, default=None, help="initial number of q-expansion coefficients")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", default=None)

    lv = sub.add_parser("lvalue", help="completed multiple L-value Lambda")
    common(lv)
    lv.add_argument("--form", "--forms", dest="form", action="append", help="delta | zero | theta:j:N | file:path")
    lv.add_argument("--basepoint", default="0")
    lv.add_argument("--s", default=None, help="comma separated positive integers")
    lv.add_argument("--series", type=int, default=0, help="also sum the L-series up to this exponent")
    lv.set_defaults(func=cmd_lvalue)

    ck = sub.add_parser("check", help="verify one identity family")
    common(ck)
    ck.add_argument("identity")
    ck.add_argument("--form", "--forms", dest="form", action="append")
    ck.add_argument("--level", type=int, default=1)
    ck.add_argument("--pairs", type=int, default=5)
    ck.add_argument("--count", type=int, default=1, help="random elements for bkm/fin0")
    ck.add_argument("--max-len", type=int, default=6)
    ck.add_argument("--seed", type=int, default=1)
    ck.add_argument("--gamma", action="append", help="explicit element a,b,c,d (bkm/fin0)")
    ck.add_argument("--gamma1")
    ck.add_argument("--gamma2")
    ck.add_argument("--tau", action="append", help="sample point such as -0.2-1.1i")
    ck.add_argument("--mode", choices=("auto", "polynomial", "samples"), default="auto")
    ck.add_argument("--k", default="1,2", help="specialisation exponents for lincomb")
    ck.add_argument("--s", default=None)
    ck.add_argument("--basepoint", default="0")
    ck.add_argument("--tolerance", type=float, default=None)
    ck.add_argument("--perturb", type=float, default=0.0, help="negative control: offset the left side")
    ck.add_argument("--timings", action="store_true")
    ck.set_defaults(func=cmd_check)

    st = sub.add_parser("suite", help="run the acceptance matrix")
    st.add_argument("--digits", type=int, default=None)
    st.add_argument("--seed", type=int, default=1)
    st.add_argument("--quad-level", type=int, default=None)
    st.add_argument("--n-max", type=int, default=None)
    st.add_argument("--out-dir", default=None)
    st.add_argument("--manifest", default=None, help="JSON list of rows replacing the canned matrix")
    st.add_argument("--timings", action="store_true")
    st.set_defaults(func=cmd_suite)
    return p


# options whose values may start with a minus sign
_SIGNED = ("--tau", "--gamma", "--gamma1", "--gamma2", "--basepoint")


def _glue(argv):
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"periodlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PathConflict, *NUMERIC_ERRORS) as exc:
        print(f"periodlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"periodlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
