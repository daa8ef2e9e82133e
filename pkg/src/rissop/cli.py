"""Command line experiment runner.

Each ``fig*`` subcommand sweeps one parameter and writes CSV (stdout or
``--out``) with an optional JSON manifest. ``validate`` cross-checks the
evaluators at one configuration and ``sop`` evaluates a single point.

Exit codes: 0 success, 1 usage or domain error, 2 numerical failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytic import sop_closed_form, sop_compact, sop_exact_quadrature
from .channel import LINKS, SystemConfig, derive_stats
from .exceptions import DomainError, NumericalError
from .montecarlo import (
    MAX_CDF_SAMPLES,
    empirical_cdf_gamma_d,
    empirical_cdf_gamma_e,
    estimate_sop,
)
from .optimizer import (
    METHODS,
    alpha_star_closed_form,
    alpha_star_numeric,
    certify_convexity,
    sop_by_method,
)

logger = logging.getLogger(__name__)

VARIABLES = ("gamma0_db", "n_elements", "d_re", "d_sr", "alpha", "distance_ratio")

# Checks used by ``validate``. The Monte Carlo and Gamma_D tolerances include
# a model term: the analytic SOP treats the two SINRs as independent and
# Gamma_D as Gaussian, so it differs from simulation by a few percent and the
# Gamma_D CDF differs by roughly 0.11 / sqrt(N) in KS distance.
CLOSED_FORM_ENVELOPE = 0.10
MC_MODEL_TOLERANCE = 0.15
ALPHA_TOLERANCE = 1e-3
KS_GAMMA_E_FLOOR = 0.005
KS_GAMMA_D_RATE = 0.15
KS_CRITICAL_99 = 1.63


@dataclass(frozen=True)
class SweepSpec:
    """One swept variable on ``start, start + step, ... <= stop``."""

    variable: str
    start: float
    stop: float
    step: float
    fixed: SystemConfig = field(default_factory=SystemConfig)
    methods: tuple = ("closed_form", "quadrature")
    mc_trials: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise DomainError(f"unknown sweep variable {self.variable!r}")
        if not self.step > 0:
            raise DomainError("step must be positive")
        if not self.start < self.stop:
            raise DomainError("start must be below stop")
        if not self.methods:
            raise DomainError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise DomainError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if self.mc_trials < 1:
            raise DomainError("mc_trials must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def values(self) -> list[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 12) for i in range(count)]


def _require(spec: SweepSpec, variable: str):
    if spec.variable != variable:
        raise DomainError(f"this runner sweeps {variable}, got {spec.variable}")


def _parallel(fn, items, n_jobs):
    if n_jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))


def _sop(cfg, method, spec):
    return sop_by_method(cfg, method, trials=spec.mc_trials, seed=spec.seed)


def run_fig1(spec: SweepSpec, n_values=(16, 32, 64), n_jobs: int = 1):
    """SOP against Gamma_0 for several RIS sizes, equal and optimal allocation."""
    _require(spec, "gamma0_db")
    points = [(g, n, policy, m) for g in spec.values() for n in n_values
              for policy in ("EPA", "OPA") for m in spec.methods]

    def row(point):
        g, n, policy, method = point
        cfg = spec.fixed.replace(gamma0_db=g, n_elements=int(n))
        alpha = 0.5 if policy == "EPA" else alpha_star_closed_form(cfg)
        sop = _sop(cfg.replace(alpha=alpha), method, spec)
        return {"gamma0_db": g, "n": int(n), "policy": policy, "alpha": alpha,
                "method": method, "sop": sop}

    rows = _parallel(row, points, n_jobs)
    rows.sort(key=lambda r: (r["gamma0_db"], r["n"], r["policy"], r["method"]))
    return ["gamma0_db", "n", "policy", "alpha", "method", "sop"], rows


def run_fig2(spec: SweepSpec, gamma0_db=None, n_jobs: int = 1):
    """SOP against Gamma_0 for several d_RD / d_RE ratios at fixed d_RE."""
    _require(spec, "distance_ratio")
    gammas = tuple(np.arange(0.0, 60.0 + 1e-9, 2.0)) if gamma0_db is None else tuple(gamma0_db)
    d_re = spec.fixed.distances["RE"]
    points = [(r, float(g), m) for r in spec.values() for g in gammas for m in spec.methods]

    def row(point):
        ratio, g, method = point
        cfg = spec.fixed.replace(gamma0_db=g, d_rd=ratio * d_re)
        return {"distance_ratio": ratio, "d_rd": ratio * d_re, "gamma0_db": g,
                "method": method, "sop": _sop(cfg, method, spec)}

    rows = _parallel(row, points, n_jobs)
    rows.sort(key=lambda r: (r["distance_ratio"], r["gamma0_db"], r["method"]))
    return ["distance_ratio", "d_rd", "gamma0_db", "method", "sop"], rows


def run_fig3(spec: SweepSpec, gamma0_db=(10.0, 20.0, 30.0), n_jobs: int = 1):
    """Optimal allocation against the RIS size at several Gamma_0."""
    _require(spec, "n_elements")
    points = [(int(round(n)), float(g)) for n in spec.values() for g in gamma0_db]

    def row(point):
        n, g = point
        cfg = spec.fixed.replace(n_elements=n, gamma0_db=g)
        return {"n_elements": n, "gamma0_db": g, "alpha_star": alpha_star_closed_form(cfg)}

    rows = _parallel(row, points, n_jobs)
    rows.sort(key=lambda r: (r["n_elements"], r["gamma0_db"]))
    return ["n_elements", "gamma0_db", "alpha_star"], rows


def run_fig4(spec: SweepSpec, d_sr=(20.0, 30.0, 40.0), n_jobs: int = 1):
    """Optimal allocation against d_RE for several source distances."""
    _require(spec, "d_re")
    points = [(d, float(s)) for d in spec.values() for s in d_sr]

    def row(point):
        d, s = point
        cfg = spec.fixed.replace(d_re=d, d_sr=s)
        return {"d_re": d, "d_sr": s, "alpha_star": alpha_star_closed_form(cfg)}

    rows = _parallel(row, points, n_jobs)
    rows.sort(key=lambda r: (r["d_re"], r["d_sr"]))
    return ["d_re", "d_sr", "alpha_star"], rows


def _fmt(value):
    if isinstance(value, (bool, str)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.10g}"


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


def _check(passed, **values):
    return {"pass": bool(passed), **values}


def run_validate(cfg: SystemConfig, trials: int = 100_000, seed: int = 0, *, n_jobs: int = 1,
                 zeta_override=None) -> dict:
    """Cross-method consistency report for one configuration.

    ``zeta_override`` replaces path losses in the closed-form evaluation
    only, so a corrupted table shows up as a failed envelope check.
    """
    if trials < 100_000:
        raise DomainError("validate needs at least 1e5 trials")
    stats = derive_stats(cfg)
    exact = sop_exact_quadrature(cfg, stats)
    checks = {}

    mc = estimate_sop(cfg, trials, seed, n_jobs=n_jobs)
    delta = mc.sop_hat - exact
    allowed = mc.ci95_half_width + MC_MODEL_TOLERANCE * exact
    checks["monte_carlo_vs_quadrature"] = _check(
        abs(delta) <= allowed, monte_carlo=mc.sop_hat, ci95_half_width=mc.ci95_half_width,
        quadrature=exact, delta=delta, allowed=allowed, outages=mc.outages,
    )

    cf_stats = stats if zeta_override is None else derive_stats(cfg, zeta_override)
    closed = sop_closed_form(cfg, cf_stats)
    rel = closed.sop / exact - 1.0
    in_regime = exact < 0.1
    checks["closed_form_envelope"] = _check(
        (abs(rel) <= CLOSED_FORM_ENVELOPE) if in_regime else True, closed_form=closed.sop,
        quadrature=exact, relative_error=rel, envelope=CLOSED_FORM_ENVELOPE,
        applies=in_regime, regime_valid=closed.regime_valid,
    )

    if cfg.rho > 1.0:
        a_closed = alpha_star_closed_form(cfg, stats)
        a_numeric = alpha_star_numeric(cfg, "compact")
        checks["alpha_star"] = _check(abs(a_closed - a_numeric) <= ALPHA_TOLERANCE,
                                      closed_form=a_closed, golden_section=a_numeric,
                                      tolerance=ALPHA_TOLERANCE)
        checks["convexity"] = _check(certify_convexity(cfg), grid_points=999)

    n_cdf = min(trials, MAX_CDF_SAMPLES)
    noise = KS_CRITICAL_99 / math.sqrt(n_cdf)
    ks_e = empirical_cdf_gamma_e(cfg, n_cdf, seed + 1 if seed < 2**64 - 1 else 0, n_jobs=n_jobs)
    ks_d = empirical_cdf_gamma_d(cfg, n_cdf, seed + 2 if seed < 2**64 - 2 else 1, n_jobs=n_jobs)
    limit_e = max(KS_GAMMA_E_FLOOR, noise)
    limit_d = KS_GAMMA_D_RATE / math.sqrt(cfg.n_elements) + noise
    checks["ks_gamma_e"] = _check(ks_e.ks_distance < limit_e, distance=ks_e.ks_distance,
                                  limit=limit_e, samples=n_cdf)
    checks["ks_gamma_d"] = _check(ks_d.ks_distance < limit_d, distance=ks_d.ks_distance,
                                  limit=limit_d, samples=n_cdf)

    failures = sorted(name for name, c in checks.items() if not c["pass"])
    compact = sop_compact(cfg, stats)
    return {
        "config": cfg.to_dict(),
        "trials": trials,
        "seed": seed,
        "zeta_override": None if zeta_override is None else dict(sorted(zeta_override.items())),
        "checks": checks,
        "diagnostics": {
            "compact": compact,
            "compact_to_closed_form": compact / closed.sop if closed.sop > 0 else None,
            "compact_within_factor_2": bool(closed.sop > 0 and 0.5 <= compact / closed.sop <= 2.0),
        },
        "failures": failures,
        "passed": not failures,
    }


def format_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _methods(text):
    items = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in items if m not in METHODS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"methods must be a nonempty subset of {','.join(METHODS)}")
    return items


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _assignment(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def _apply_overrides(cfg, pairs):
    changes = {}
    for key, value in pairs:
        if key == "n_elements":
            changes[key] = int(value)
        else:
            changes[key] = float(value)
    return cfg.replace(**changes) if changes else cfg


def _zeta_override(pairs):
    if not pairs:
        return None
    out = {}
    for key, value in pairs:
        if key.upper() not in LINKS:
            raise DomainError(f"unknown link {key!r}; expected one of {LINKS}")
        out[key.upper()] = float(value)
    return out


_SWEEPS = {
    "fig1": ("gamma0_db", (0.0, 60.0, 2.0), "series", (16.0, 32.0, 64.0)),
    "fig2": ("distance_ratio", (1.0, 3.0, 1.0), "series", None),
    "fig3": ("n_elements", (10.0, 200.0, 10.0), "series", (10.0, 20.0, 30.0)),
    "fig4": ("d_re", (5.0, 50.0, 5.0), "series", (20.0, 30.0, 40.0)),
}
_SERIES_HELP = {
    "fig1": "RIS sizes, one curve each",
    "fig2": "Gamma_0 grid in dB (default 0..60 step 2)",
    "fig3": "Gamma_0 values in dB, one curve each",
    "fig4": "d_SR values in m, one curve each",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rissop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="SystemConfig JSON file")
    common.add_argument("--set", dest="overrides", action="append", type=_assignment, default=[],
                        metavar="KEY=VALUE", help="override a config field, e.g. d_re=10")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials")
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    for name, (variable, rng, _, _) in _SWEEPS.items():
        p = sub.add_parser(name, parents=[common], help=f"sweep {variable}")
        p.add_argument("--methods", type=_methods, default=("closed_form", "quadrature"))
        p.add_argument("--start", type=float, default=rng[0])
        p.add_argument("--stop", type=float, default=rng[1])
        p.add_argument("--step", type=float, default=rng[2])
        p.add_argument("--series", type=_float_list, help=_SERIES_HELP[name])
        p.add_argument("--manifest", help="write a JSON manifest describing the CSV")

    p = sub.add_parser("validate", parents=[common], help="cross-check all evaluators")
    p.add_argument("--zeta-override", action="append", type=_assignment, default=[],
                   metavar="LINK=VALUE", help="corrupt a path loss in the closed form only")

    p = sub.add_parser("sop", parents=[common], help="evaluate one configuration")
    p.add_argument("--methods", type=_methods, default=("compact", "closed_form", "quadrature"))
    p.add_argument("--explain", action="store_true", help="include closed-form intermediates")
    return parser


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_sweep(args, cfg):
    variable, _, _, default_series = _SWEEPS[args.command]
    spec = SweepSpec(variable=variable, start=args.start, stop=args.stop, step=args.step,
                     fixed=cfg, methods=args.methods,
                     mc_trials=args.trials or 1_000_000, seed=args.seed)
    series = args.series if args.series is not None else default_series
    runner = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4}[args.command]
    if series is None:
        header, rows = runner(spec, n_jobs=args.jobs)
    else:
        header, rows = runner(spec, series, n_jobs=args.jobs)
    _emit(format_csv(header, rows), args.out)
    if args.manifest:
        manifest = {
            "command": args.command,
            "version": __version__,
            "columns": header,
            "rows": len(rows),
            "csv": args.out,
            "sweep": {"variable": variable, "start": spec.start, "stop": spec.stop,
                      "step": spec.step, "series": None if series is None else list(series)},
            "methods": list(spec.methods),
            "mc_trials": spec.mc_trials,
            "seed": spec.seed,
            "config": cfg.to_dict(),
        }
        _emit(json.dumps(manifest, indent=2, sort_keys=True) + "\n", args.manifest)
    return 0


def _run_sop(args, cfg):
    trials = args.trials or 100_000
    result = {"config": cfg.to_dict(), "sop": {}}
    for m in args.methods:
        result["sop"][m] = sop_by_method(cfg, m, trials=trials, seed=args.seed, n_jobs=args.jobs)
    if cfg.rho > 1.0:
        result["alpha_star"] = alpha_star_closed_form(cfg)
    if args.explain:
        result["breakdown"] = sop_closed_form(cfg).to_dict()
    _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _run_validate(args, cfg):
    report = run_validate(cfg, args.trials or 100_000, args.seed, n_jobs=args.jobs,
                          zeta_override=_zeta_override(args.zeta_override))
    _emit(format_report(report), args.out)
    for name in report["failures"]:
        print(f"validation failed: {name}", file=sys.stderr)
    return 0 if report["passed"] else 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise DomainError("--jobs must be at least 1")
        if args.trials is not None and args.trials < 1:
            raise DomainError("--trials must be positive")
        cfg = SystemConfig.from_json(args.config) if args.config else SystemConfig()
        cfg = _apply_overrides(cfg, args.overrides)
        if args.command in _SWEEPS:
            return _run_sweep(args, cfg)
        if args.command == "sop":
            return _run_sop(args, cfg)
        return _run_validate(args, cfg)
    except NumericalError as exc:
        print(f"rissop: numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(json.dumps(exc.diagnostics, default=str)[:2000], file=sys.stderr)
        return 2
    except (ValueError, TypeError, OSError) as exc:
        # DomainError, malformed JSON, unknown --set keys, unreadable files
        print(f"rissop: error: {exc}", file=sys.stderr)
        return 1

if __name__ == "__main__":
    sys.exit(main())
