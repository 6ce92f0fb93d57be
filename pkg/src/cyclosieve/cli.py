"""Command-line front end.

Every subcommand prints deterministic output (JSON with sorted keys, or CSV
with a leading ``#`` provenance line).  Exit codes: 0 ok, 2 validation
error, 3 resource cap, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .cyclotomic import prime_count
from .errors import CyclosieveError, InvariantViolation, ValidationError
from .field_core import make_field
from .matrix_groups import (
    GroupSpec,
    enumerate_group,
    fitted_exponent,
    gauss_sum_max,
    group_metadata,
)
from .ring_formulas import cdm_scan, parse_formula, parse_prime_range
from .sieve_engine import SieveConfig, density_report
from .trace_functions import (
    CACHE_ENV,
    Embedding,
    kloosterman_table,
    normalize,
    write_table_cache,
)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _envelope(command, config, result):
    return {"tool": "cyclosieve", "version": __version__, "command": command,
            "config": config, "result": result}


# ---------------------------------------------------------------------------
# subcommands


def cmd_kloosterman(args):
    F = make_field(args.p, args.e)
    if args.residue is not None:
        emb = Embedding.residue(args.p, args.residue)
    else:
        emb = Embedding.complex(args.p, args.complex)
    table = kloosterman_table(args.n, F, emb)
    if args.normalized:
        table = normalize(table)
    if args.format == "tfs":
        if not args.out:
            raise ValidationError("--format tfs needs --out")
        write_table_cache(args.out, table)
        return
    mode = f"residue l={emb.ell} omega={emb.ideal.omega}" if emb.is_residue else f"complex k={emb.k}"
    lines = [f"# cyclosieve {__version__} kloosterman p={args.p} e={args.e} n={args.n} "
             f"{mode} normalized={args.normalized}"]
    if emb.is_residue:
        lines.append("x,value")
        lines += [f"{x},{v}" for x, v in zip(table.xs.tolist(), table.values.tolist())]
    else:
        lines.append("x,re,im")
        lines += [f"{x},{v.real:.12g},{v.imag:.12g}" for x, v in zip(table.xs.tolist(), table.values)]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_gauss_sum(args):
    spec = GroupSpec(args.family, args.n, args.ell, args.cap)
    order, hist = enumerate_group(spec)
    value, c = gauss_sum_max(hist)
    result = group_metadata(spec, order)
    result.update(gauss_sum_max=value, attaining_c=c, fitted_exponent=fitted_exponent(value, args.ell))
    config = {"family": args.family, "n": args.n, "ell": args.ell, "cap": args.cap}
    if args.histogram:
        Path(args.histogram).write_text(hist.to_csv())
    _emit(_json(_envelope("gauss-sum", config, result)), args.out)


def cmd_formula_density(args):
    phi = parse_formula(args.formula)
    primes = parse_prime_range(args.primes)
    scan = cdm_scan(phi, primes)
    if args.csv:
        _emit(f"# cyclosieve {__version__} formula-density {args.formula!r} {args.primes}\n"
              + scan.to_csv(), args.out)
        return
    result = {
        "rows": [{"ell": ell, "count": c, "density": [d.numerator, d.denominator]}
                 for ell, c, d in scan.rows],
        "clusters": scan.clusters,
        "max_scaled_deviation": scan.max_scaled_deviation,
    }
    _emit(_json(_envelope("formula-density", {"formula": args.formula, "primes": args.primes},
                          result)), args.out)


def cmd_primes(args):
    count = prime_count(args.a, args.m, args.L)
    _emit(_json(_envelope("primes", {"a": args.a, "m": args.m, "L": args.L}, {"count": count})),
          args.out)


@dataclass
class RunConfig:
    """A sieve run: the computational config plus where results go.

    Only ``sieve`` is embedded in reports; jobs, paths and timing never change
    the computed numbers, so reports stay byte-identical across them.
    """

    sieve: SieveConfig
    out: str | None = None
    mask_csv: str | None = None
    cache_dir: str | None = None
    jobs: int = 1
    timing: bool = False

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        """Merge an optional JSON config file with flags; flags win."""
        rec = {}
        if args.config:
            rec = json.loads(Path(args.config).read_text())
        for key in ("p", "e", "L"):
            val = getattr(args, key)
            if val is not None:
                rec[key] = val
        if args.m is not None:
            rec["target"] = {"kind": "mth_powers", "m": args.m}
        if args.n is not None:
            rec["family"] = {"kind": "kloosterman", "n": args.n}
        if args.normalized:
            rec["normalized"] = True
        missing = [k for k in ("family", "p", "target") if k not in rec]
        if missing:
            raise ValidationError(f"sieve config is missing {missing}")
        jobs = args.jobs if args.jobs is not None else int(rec.get("jobs", os.cpu_count() or 1))
        if jobs < 1:
            raise ValidationError("jobs must be >= 1")
        return cls(SieveConfig.from_dict(rec), args.out, args.mask_csv, args.cache_dir, jobs,
                   args.timing)


def cmd_sieve(args):
    run = RunConfig.from_args(args)
    report = density_report(run.sieve, jobs=run.jobs, cache_dir=run.cache_dir, timing=run.timing)
    if run.mask_csv:
        Path(run.mask_csv).write_text(report.mask_csv())
    _emit(report.to_json() + "\n", run.out)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cyclosieve", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"cyclosieve {__version__}")
    ap.add_argument("--cache-dir", help=f"trace-table cache directory (default ${CACHE_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kloosterman", help="table of Kl_n over F_q^x")
    k.add_argument("-p", type=int, required=True)
    k.add_argument("-e", type=int, default=1)
    k.add_argument("-n", type=int, default=2)
    mode = k.add_mutually_exclusive_group()
    mode.add_argument("--complex", type=int, nargs="?", const=1, default=1, metavar="K",
                      help="complex embedding zeta_{4p} -> exp(2 pi i K/4p) (default)")
    mode.add_argument("--residue", type=int, metavar="ELL", help="reduce modulo the ideal above ELL")
    k.add_argument("--normalized", action="store_true")
    k.add_argument("--format", choices=("csv", "tfs"), default="csv")
    k.add_argument("--out")
    k.set_defaults(func=cmd_kloosterman)

    g = sub.add_parser("gauss-sum", help="group order, trace histogram and Gaussian-sum maximum")
    g.add_argument("--family", required=True)
    g.add_argument("-n", type=int, required=True)
    g.add_argument("-l", "--ell", type=int, required=True)
    g.add_argument("--cap", type=int, default=10**7)
    g.add_argument("--histogram", help="write the (t, count) CSV here")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gauss_sum)

    f = sub.add_parser("formula-density", help="densities of a definable set over a prime range")
    f.add_argument("formula")
    f.add_argument("--primes", required=True, help="range a..b")
    f.add_argument("--csv", action="store_true")
    f.add_argument("--out")
    f.set_defaults(func=cmd_formula_density)

    pr = sub.add_parser("primes", help="count primes l <= L with l = a mod m")
    pr.add_argument("-a", type=int, required=True)
    pr.add_argument("-m", type=int, required=True)
    pr.add_argument("-L", type=int, required=True)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_primes)

    s = sub.add_parser("sieve", help="end-to-end density report from a JSON config")
    s.add_argument("config", nargs="?")
    s.add_argument("-p", type=int)
    s.add_argument("-e", type=int)
    s.add_argument("-n", type=int, help="Kloosterman rank (overrides the family)")
    s.add_argument("-m", type=int, help="m-th power target (overrides the target)")
    s.add_argument("-L", type=int)
    s.add_argument("--normalized", action="store_true")
    s.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    s.add_argument("--timing", action="store_true", help="include wall-clock timings")
    s.add_argument("--mask-csv", help="write the per-x survivor mask here")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sieve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cache_dir:
        os.environ[CACHE_ENV] = args.cache_dir
    try:
        args.func(args)
    except CyclosieveError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except AssertionError as exc:
        print(f"{InvariantViolation.__name__}: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
