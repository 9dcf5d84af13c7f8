"""Command line entry point: ``mfunc {factor,density,moments,sample,verify}``.

Settings are merged as flags > ``--config`` JSON file > defaults, validated in
full, and only then handed to the numerical modules. Output files are pure
functions of the settings, so identical invocations write identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import io as mio
from .core import ParameterError, PrimeSet, SymPowerParams, support_interval
from .density import compute_density, density_invert, large_prime_count, mass_outside, plan_grids
from .fourier import NEAR_ONE_K, fourier_limit, fourier_product, symmetric_grid
from .moments import MomentReport, first_moment_sum, first_moment_tail, moment_from_density
from .montecarlo import characteristic_check, empirical_vs_density, sample_batch

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 1, 2, 3


@dataclass
class RunConfig:
    r: int = 1
    sigma: float = 1.0
    primes_upto: Optional[float] = None
    primes: Optional[list] = None
    first_primes: Optional[int] = None
    exclude_q: Optional[int] = None
    xmax: float = 200.0
    xn: int = 4001
    target_tol: Optional[float] = None
    u_min: Optional[float] = None
    u_max: Optional[float] = None
    u_n: Optional[int] = None
    tol: float = 1e-7
    quad_tol: float = 1e-11
    seed: int = 0
    n_samples: int = 100000
    out: Optional[str] = None
    format: str = "json"
    preset: str = "desk"
    only: Optional[list] = None
    extras: dict = field(default_factory=dict)

    def params(self) -> SymPowerParams:
        return SymPowerParams(self.r, self.sigma)

    def prime_set(self, required: bool = True) -> Optional[PrimeSet]:
        chosen = [k for k in ("primes_upto", "primes", "first_primes")
                  if getattr(self, k) is not None]
        if len(chosen) > 1:
            raise ParameterError(f"choose one of --primes-upto, --primes, --first-primes "
                                 f"(got {', '.join(chosen)})")
        if not chosen:
            if required:
                raise ParameterError("no primes selected; use --primes-upto, --primes "
                                     "or --first-primes")
            return None
        q = self.exclude_q
        if self.primes_upto is not None:
            P = PrimeSet.upto(self.primes_upto, q)
        elif self.first_primes is not None:
            if self.first_primes < 1:
                raise ParameterError("--first-primes must be positive")
            P = PrimeSet.first(self.first_primes, q)
        else:
            ps = sorted(int(p) for p in self.primes)
            P = PrimeSet(tuple(ps)) if q is None else PrimeSet(tuple(ps)).without(q)
        P.require_nonempty()
        return P

    def validate(self, command: str):
        self.params()
        if self.format not in ("json", "csv"):
            raise ParameterError(f"--format must be json or csv, got {self.format!r}")
        for name in ("tol", "quad_tol", "xmax"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"--{name.replace('_', '-')} must be positive")
        if self.target_tol is not None and not self.target_tol > 0:
            raise ParameterError("--target-tol must be positive")
        if self.xn < 3 or self.xn % 2 == 0:
            raise ParameterError(f"--xn must be odd and at least 3, got {self.xn}")
        if self.n_samples < 1:
            raise ParameterError("--n-samples must be positive")
        if not 0 <= self.seed < 1 << 64:
            raise ParameterError("--seed must be a 64-bit unsigned integer")
        u = (self.u_min, self.u_max, self.u_n)
        if any(v is not None for v in u):
            if any(v is None for v in u):
                raise ParameterError("--u-min, --u-max and --u-n go together")
            if not self.u_max > self.u_min or self.u_n < 2:
                raise ParameterError("need u-max > u-min and u-n >= 2")
        if command == "factor":
            if self.target_tol is None:
                self.prime_set()
            else:
                self.prime_set(required=False)
        elif command in ("density", "sample"):
            self.prime_set()
            self.params().require_density_degree()
        elif command == "moments":
            self.prime_set()
            if self.extras.get("with_density") or self.extras.get("mc"):
                self.params().require_density_degree()
        elif command == "verify":
            from .acceptance import PRESETS
            if self.preset not in PRESETS:
                raise ParameterError(f"unknown preset {self.preset!r}; "
                                     f"choose from {sorted(PRESETS)}")


def _parse_primes(text: str) -> list:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _parse_only(text: str) -> list:
    return _parse_primes(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="JSON file with RunConfig fields (flags win)")
    g.add_argument("--r", type=int, help="symmetric power degree")
    g.add_argument("--sigma", type=float, help="real point sigma > 1/2")
    g.add_argument("--primes-upto", type=float, help="all primes <= y")
    g.add_argument("--primes", type=_parse_primes, help="explicit list, e.g. 2,3,5")
    g.add_argument("--first-primes", type=int, help="the first k primes")
    g.add_argument("--exclude-q", type=int, help="drop the prime q (Case I)")
    g.add_argument("--tol", type=float, help="density tail tolerance")
    g.add_argument("--quad-tol", type=float, help="per-prime quadrature tolerance")
    g.add_argument("--out", help="output directory (default: stdout only)")
    g.add_argument("--format", choices=("json", "csv"))

    parser = argparse.ArgumentParser(prog="mfunc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("factor", parents=[common], help="Fourier product table")
    f.add_argument("--xmax", type=float)
    f.add_argument("--xn", type=int, help="odd number of symmetric x nodes")
    f.add_argument("--target-tol", type=float,
                   help="approximate the infinite product to this accuracy")

    d = sub.add_parser("density", parents=[common], help="density on a u grid (r = 1, 2)")
    for name, typ in (("--u-min", float), ("--u-max", float), ("--u-n", int)):
        d.add_argument(name, type=typ)

    m = sub.add_parser("moments", parents=[common], help="first moment identities")
    m.add_argument("--with-density", action="store_true",
                   help="also integrate u against the inverted density (r = 1, 2)")
    m.add_argument("--n-samples", type=int, help="add a Monte Carlo mean with this many draws")
    m.add_argument("--seed", type=int)

    s = sub.add_parser("sample", parents=[common], help="Monte Carlo batch and law check")
    s.add_argument("--n-samples", type=int)
    s.add_argument("--seed", type=int)

    v = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    v.add_argument("--preset", help="desk (full size) or quick")
    v.add_argument("--only", type=_parse_only, help="criterion numbers, e.g. 1,7")
    return parser


_FLAG_KEYS = {f for f in RunConfig.__dataclass_fields__ if f != "extras"}


def load_config(args: argparse.Namespace) -> RunConfig:
    merged = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {args.config}: {exc}")
        if not isinstance(doc, dict):
            raise ParameterError("config file must hold a JSON object")
        unknown = sorted(set(doc) - _FLAG_KEYS)
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(unknown)}")
        merged.update(doc)
    for key in _FLAG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    cfg = RunConfig(**merged)
    cfg.extras = {"with_density": bool(getattr(args, "with_density", False)),
                  "mc": getattr(args, "n_samples", None) is not None
                  or "n_samples" in merged}
    return cfg


class Output:
    """Routes artifacts to ``--out`` and the summary to stdout."""

    def __init__(self, cfg: RunConfig, stdout=None):
        self.dir = Path(cfg.out) if cfg.out else None
        self.stdout = stdout or sys.stdout
        self.written = []

    def text(self, name: str, text: str):
        if self.dir is not None:
            mio.write_text(self.dir / name, text)
            self.written.append(name)

    def binary(self, name: str, data: bytes):
        if self.dir is not None:
            mio.write_bytes(self.dir / name, data)
            self.written.append(name)

    def summary(self, obj):
        self.stdout.write(mio.dumps(obj))


def _config_block(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d.pop("extras")
    d.pop("out")
    return d


def cmd_factor(cfg: RunConfig, out: Output) -> int:
    params = cfg.params()
    x = symmetric_grid(cfg.xmax, cfg.xn)
    P = cfg.prime_set(required=cfg.target_tol is None)
    if cfg.target_tol is not None and P is None:
        table = fourier_limit(params, cfg.target_tol, x, exclusion=cfg.exclude_q,
                              quad_tol=cfg.quad_tol)
    else:
        table = fourier_product(P, params, x, quad_tol=cfg.quad_tol)
    if cfg.format == "json":
        out.text("factor.json", mio.dumps(mio.table_to_dict(table)))
    else:
        out.text("factor.csv", mio.table_to_csv(table))
    i0 = int(np.argmin(np.abs(x)))
    out.summary({
        "command": "factor", "config": _config_block(cfg), "files": out.written,
        "n_primes": len(table.prime_set), "largest_prime": table.prime_set.primes[-1],
        "value_at_zero": [table.values[i0].real, table.values[i0].imag],
        "max_modulus": float(np.max(np.abs(table.values))),
        "tail_bound_x": table.tail_bound_x,
        "truncation": {"y": table.cutoff, "bound": table.truncation_bound,
                       "near_one_K": NEAR_ONE_K,
                       "K_status": "regression constant fitted numerically, not proven"},
    })
    return EXIT_OK


def _density_for(cfg: RunConfig, P: PrimeSet, params: SymPowerParams):
    if cfg.u_min is None:
        return compute_density(P, params, tol=cfg.tol, quad_tol=cfg.quad_tol)
    plan = plan_grids(P, params, cfg.tol, quad_tol=cfg.quad_tol)
    table = fourier_product(P, params, plan.x_grid(), quad_tol=cfg.quad_tol)
    u = np.linspace(cfg.u_min, cfg.u_max, cfg.u_n)
    return table, density_invert(table, u, tol=cfg.tol)


def cmd_density(cfg: RunConfig, out: Output) -> int:
    params, P = cfg.params(), cfg.prime_set()
    _, grid = _density_for(cfg, P, params)
    if cfg.format == "json":
        out.text("density.json", mio.dumps(mio.density_to_dict(grid)))
    else:
        out.text("density.csv", mio.density_to_csv(grid))
    lo, hi = support_interval(P, params)
    out.summary({
        "command": "density", "config": _config_block(cfg), "files": out.written,
        "mass": grid.mass,
        "min_value": float(np.min(grid.values)),
        "end_values": [float(grid.values[0]), float(grid.values[-1])],
        "support": {"interval": [lo, hi], "mass_outside": mass_outside(grid, lo, hi),
                    "compact": True},
        "inversion": grid.meta,
    })
    return EXIT_OK


def cmd_moments(cfg: RunConfig, out: Output) -> int:
    params, P = cfg.params(), cfg.prime_set()
    closed = first_moment_sum(P, params)
    tail = first_moment_tail(cfg.primes_upto, params) if cfg.primes_upto is not None else None
    numeric = mc_mean = mc_se = None
    if cfg.extras.get("with_density"):
        params.require_density_degree()
        _, grid = compute_density(P, params, tol=cfg.tol, quad_tol=cfg.quad_tol)
        numeric = moment_from_density(grid, grid.u_grid)
    if cfg.extras.get("mc"):
        batch = sample_batch(P, params, cfg.n_samples, cfg.seed)
        mc_mean = float(np.mean(batch.values))
        mc_se = float(np.std(batch.values) / np.sqrt(batch.n_samples))
    report = MomentReport(params, P.primes, cfg.primes_upto, closed, numeric, mc_mean, mc_se,
                          tail)
    doc = report.to_dict()
    doc["parity"] = "odd" if params.r % 2 else "even"
    out.text("moments.json", mio.dumps(doc))
    out.summary({"command": "moments", "config": _config_block(cfg), "files": out.written,
                 "report": doc})
    return EXIT_OK


def cmd_sample(cfg: RunConfig, out: Output) -> int:
    params, P = cfg.params(), cfg.prime_set()
    batch = sample_batch(P, params, cfg.n_samples, cfg.seed)
    if cfg.format == "json":
        out.binary("samples.bin", mio.batch_to_bytes(batch))
    else:
        out.text("samples.csv", mio.batch_to_csv(batch))
    lo, hi = batch.support()
    report = {
        "n_samples": batch.n_samples, "seed": batch.seed,
        "mean": float(np.mean(batch.values)),
        "closed_form_mean": first_moment_sum(P, params),
        "sample_range": [float(np.min(batch.values)), float(np.max(batch.values))],
        "support": [lo, hi],
    }
    if large_prime_count(P) >= 3:
        _, grid = compute_density(P, params, tol=cfg.tol, quad_tol=cfg.quad_tol)
        report["law"] = empirical_vs_density(batch, grid).to_dict()
    xs = np.concatenate((-np.arange(10.0, 0.0, -1.0), np.arange(1.0, 11.0)))
    cf_table = fourier_product(P, params, symmetric_grid(10.0, 21), quad_tol=cfg.quad_tol)
    cf = characteristic_check(batch, cf_table, xs)
    report["characteristic"] = {"x": xs.tolist(), **cf}
    out.text("sample_report.json", mio.dumps(report))
    out.summary({"command": "sample", "config": _config_block(cfg), "files": out.written,
                 "report": report})
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Output) -> int:
    from .acceptance import run_all

    results = run_all(cfg.preset, only=set(cfg.only) if cfg.only else None,
                      echo=lambda line: print(line, file=sys.stderr, flush=True))
    passed = all(r.passed for r in results)
    doc = {"preset": cfg.preset, "passed": passed, "criteria": [r.to_dict() for r in results]}
    out.text("verify.json", mio.dumps(doc))
    out.summary({"command": "verify", "preset": cfg.preset, "passed": passed,
                 "results": {str(r.number): r.passed for r in results}})
    return EXIT_OK if passed else EXIT_ACCEPTANCE


COMMANDS = {"factor": cmd_factor, "density": cmd_density, "moments": cmd_moments,
            "sample": cmd_sample, "verify": cmd_verify}


def main(argv=None, stdout=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        cfg.validate(args.command)
    except (ParameterError, TypeError, ValueError) as exc:
        print(f"mfunc {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return COMMANDS[args.command](cfg, Output(cfg, stdout))
    except ParameterError as exc:
        print(f"mfunc {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ArithmeticError as exc:
        print(f"mfunc {args.command}: numerical failure ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
