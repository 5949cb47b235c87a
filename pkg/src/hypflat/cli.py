"""Command-line front end.

    hypflat rates --d 4 --k 3
    hypflat density --d 5 --k 4 --out f.csv --format csv
    hypflat simulate-z --d 5 --k 4 --n 100000 --seed 7

Exit codes: 0 ok, 2 usage, 3 inadmissible parameters, 4 numerical failure.
JSON output is an envelope {"params", "spec", "git_describe", "results"}.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import covariance, limitlaw, rates, simulate
from .geometry import A11, mean_F1
from .errors import AdmissibilityError, ConsistencyError, DomainError, QuadratureError, RegimeError
from .params import InversionSpec, ModelParams
from .special import QuadSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INADMISSIBLE = 3
EXIT_NUMERIC = 4

COMMANDS = (
    "cumulants",
    "cf",
    "density",
    "simulate-z",
    "simulate-f1",
    "ks-convergence",
    "covariance",
    "rates",
    "catalan-check",
    "cumulant-scan",
)
_NEEDS_DK = set(COMMANDS) - {"catalan-check", "cumulant-scan"}
_DEFAULT_R = {
    "simulate-f1": [3.0],
    "ks-convergence": [4.0, 6.0, 8.0],
    "rates": [float(r) for r in range(1, 13)],
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: Optional[ModelParams]
    spec: InversionSpec = field(default_factory=InversionSpec)
    quad: QuadSpec = field(default_factory=QuadSpec)
    seed: int = 0
    n: int = 100_000
    out_path: Optional[str] = None
    format: str = "json"
    r: list = field(default_factory=list)
    threads: int = 1
    trunc: float = simulate.DEFAULT_T_TRUNC
    exact_points: float = simulate.DEFAULT_EXACT_POINTS
    order: int = 3
    x_min: float = -8.0
    x_max: float = 12.0
    x_step: float = 0.01

    def effective(self) -> dict:
        """Every setting that influences the output."""
        return {
            "command": self.command,
            "d": None if self.params is None else self.params.d,
            "k": None if self.params is None else self.params.k,
            "m": None if self.params is None else self.params.m,
            "seed": self.seed,
            "n": self.n,
            "r": list(self.r),
            "threads": self.threads,
            "trunc": self.trunc,
            "exact_points": self.exact_points,
            "order": self.order,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "x_step": self.x_step,
            "format": self.format,
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypflat", description="Limit theory of Poisson k-flat processes in hyperbolic space.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--d", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--r", type=float, nargs="+")
    parser.add_argument("--T", type=float, default=10.0, help="inversion truncation")
    parser.add_argument("--M", type=int, default=200, help="inversion grid count")
    parser.add_argument("--N", type=int, default=26, help="cumulant series order")
    parser.add_argument("--n", type=int, default=100_000, help="sample count")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--abs-tol", type=float, default=1e-13)
    parser.add_argument("--rel-tol", type=float, default=1e-11)
    parser.add_argument("--trunc", type=float, default=simulate.DEFAULT_T_TRUNC, help="truncation radius for Z")
    parser.add_argument("--exact-points", type=float, default=simulate.DEFAULT_EXACT_POINTS)
    parser.add_argument("--order", type=int, default=3, help="cumulant order for cumulant-scan")
    parser.add_argument("--x-min", type=float, default=-8.0)
    parser.add_argument("--x-max", type=float, default=12.0)
    parser.add_argument("--x-step", type=float, default=0.01)
    return parser


def parse_args(argv) -> RunConfig:
    """Parse argv into a RunConfig.

    Raises UsageError for malformed input and AdmissibilityError or
    RegimeError for parameters outside the command's domain.
    """
    ns = _build_parser().parse_args(list(argv))
    params = None
    if ns.command in _NEEDS_DK:
        if ns.d is None or ns.k is None:
            raise UsageError(f"{ns.command} requires --d and --k")
        params = ModelParams(ns.d, ns.k, ns.m)
        if ns.command != "covariance":
            params.require_limit_law()
    elif ns.command == "cumulant-scan":
        d_max = 15 if ns.d is None else ns.d
        params = ModelParams(d_max, d_max - 1)
    try:
        spec = InversionSpec(ns.T, ns.M, ns.N)
        quad = QuadSpec(ns.abs_tol, ns.rel_tol)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if ns.n < 1:
        raise UsageError("--n must be >= 1")
    threads = simulate.default_threads() if ns.threads is None else ns.threads
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    if not ns.x_step > 0 or not ns.x_max > ns.x_min:
        raise UsageError("need x-min < x-max and x-step > 0")
    r = ns.r if ns.r is not None else _DEFAULT_R.get(ns.command, [])
    if any(not x > 0 for x in r):
        raise UsageError("--r values must be positive")
    return RunConfig(
        command=ns.command,
        params=params,
        spec=spec,
        quad=quad,
        seed=ns.seed,
        n=ns.n,
        out_path=ns.out,
        format=ns.format,
        r=list(r),
        threads=threads,
        trunc=ns.trunc,
        exact_points=ns.exact_points,
        order=ns.order,
        x_min=ns.x_min,
        x_max=ns.x_max,
        x_step=ns.x_step,
    )


# --------------------------------------------------------------------------
# Commands. Each returns (results for JSON, (header, rows) for CSV).
# --------------------------------------------------------------------------


def _cmd_cumulants(cfg):
    p = cfg.params
    rows = [[n, limitlaw.cumulant_std(n, p)] for n in range(2, cfg.spec.N + 1)]
    res = {"sigma2": limitlaw.sigma2(p), "cumulants": [{"n": n, "value": v} for n, v in rows]}
    return res, (["n", "cumulant"], rows)


def _cmd_cf(cfg):
    T, M = cfg.spec.T, cfg.spec.M
    t = (-1.0 + 2.0 * np.arange(M + 1) / M) * T
    psi = np.asarray(limitlaw.cf_std(t, cfg.params, cfg.spec))
    rows = [[a, b.real, b.imag] for a, b in zip(t.tolist(), psi.tolist())]
    return {"t": t.tolist(), "re": psi.real.tolist(), "im": psi.imag.tolist()}, (["t", "re", "im"], rows)


def _x_grid(cfg):
    n = int(round((cfg.x_max - cfg.x_min) / cfg.x_step))
    return cfg.x_min + cfg.x_step * np.arange(n + 1)


def _cmd_density(cfg):
    tab = limitlaw.density(cfg.params, cfg.spec, _x_grid(cfg))
    rows = [list(r) for r in zip(tab.xs.tolist(), tab.f.tolist(), tab.cdf.tolist())]
    res = {
        "max_density": tab.max_density,
        "imag_residue": tab.imag_residue,
        "mass": tab.mass(),
        "mean": tab.moment(1),
        "second_moment": tab.moment(2),
        "x": tab.xs.tolist(),
        "f": tab.f.tolist(),
        "cdf": tab.cdf.tolist(),
    }
    return res, (["x", "f", "cdf"], rows)


def _batch_result(batch, extra):
    st = batch.stats()
    res = {
        "stats": {
            "n": st.n,
            "mean": st.mean,
            "variance": st.variance,
            "stderr_mean": st.stderr_mean,
            "stderr_variance": st.stderr_variance,
            "skewness": st.skewness,
            "stderr_skewness": st.stderr_skewness,
        },
        "sampler": batch.meta,
        **extra,
        "values": batch.values.tolist(),
    }
    return res, (["value"], [[v] for v in batch.values.tolist()])


def _cmd_simulate_z(cfg):
    b = simulate.sample_Z(cfg.trunc, cfg.params, cfg.seed, cfg.n, cfg.exact_points, cfg.threads, cfg.quad)
    return _batch_result(b, {"sigma2": limitlaw.sigma2(cfg.params)})


def _cmd_simulate_f1(cfg):
    if len(cfg.r) != 1:
        raise UsageError("simulate-f1 takes a single --r")
    r = cfg.r[0]
    b = simulate.sample_F1(r, cfg.params, cfg.seed, cfg.n, cfg.exact_points, cfg.threads, cfg.quad)
    return _batch_result(b, {"mean_F1": mean_F1(r, cfg.params, spec=cfg.quad), "A11": A11(r, cfg.params, spec=cfg.quad)})


def _cmd_ks_convergence(cfg):
    p = cfg.params
    table = limitlaw.density(p, cfg.spec, _x_grid(cfg))
    y_table = table.scaled(limitlaw.y_scale(p))
    rows = []
    for r in cfg.r:
        b = simulate.sample_Yr(r, p, cfg.seed, cfg.n, cfg.exact_points, cfg.threads, cfg.quad)
        ks = simulate.ks_distance(b.values, y_table.cdf_at)
        bound = limitlaw.esseen_dk_bound(r, p, cfg.spec.T, table)
        exact = limitlaw.kolmogorov_distance_Yr(r, p)
        rows.append([r, ks, bound, exact])
    res = {"rows": [dict(zip(("r", "ks", "esseen_bound", "dk_from_cf"), row)) for row in rows]}
    return res, (["r", "ks", "esseen_bound", "dk_from_cf"], rows)


def _cmd_covariance(cfg):
    p = cfg.params
    if p.d == 2 * p.k and p.m in (None, 2):
        mat = covariance.sigma_matrix_full(p.k, cfg.quad)
    else:
        mat = covariance.sigma_matrix_rank_one(p, spec=cfg.quad)
    e = mat.entries
    header = [f"s{i + 1}{j + 1}" for i in range(e.shape[0]) for j in range(e.shape[1])] + ["rank"]
    return mat.as_dict(), (header, [e.ravel().tolist() + [mat.rank]])


def _cmd_rates(cfg):
    p = cfg.params
    prof = rates.rate_profile(p.d, p.k)
    curve = rates.rate_curve(p.d, p.k, p.m, cfg.r)
    res = {
        **prof.as_dict(),
        "optimum": -prof.beta_star,
        "w_variance_order": rates.w_variance_order(p.d, p.k).as_dict(),
        "curve": curve,
    }
    return res, (["r", "bound"], [[row["r"], row["bound"]] for row in curve])


def _cmd_catalan(cfg):
    rep = covariance.catalan_check(cfg.quad)
    rows = [[i + 1, j + 1, rep["computed"][i][j], rep["reference"][i][j]] for i in range(2) for j in range(2)]
    return rep, (["i", "j", "computed", "reference"], rows)


def _cmd_cumulant_scan(cfg):
    d_max = cfg.params.d
    pairs = [ModelParams(d, d - 1) for d in range(5, d_max + 1)]
    rows = limitlaw.cumulant_scan(cfg.order, pairs)
    return {"order": cfg.order, "family": "k=d-1", "rows": rows}, (
        ["d", "k", "cumulant"],
        [[r["d"], r["k"], r["cumulant"]] for r in rows],
    )


_COMMANDS = {
    "cumulants": _cmd_cumulants,
    "cf": _cmd_cf,
    "density": _cmd_density,
    "simulate-z": _cmd_simulate_z,
    "simulate-f1": _cmd_simulate_f1,
    "ks-convergence": _cmd_ks_convergence,
    "covariance": _cmd_covariance,
    "rates": _cmd_rates,
    "catalan-check": _cmd_catalan,
    "cumulant-scan": _cmd_cumulant_scan,
}


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def dump_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        items = [pad + dump_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        return dump_json(obj.tolist(), indent, _level)
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt_float(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def git_describe() -> str:
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def _envelope(cfg: RunConfig, results) -> dict:
    return {
        "params": cfg.effective(),
        "spec": {**cfg.spec.as_dict(), "abs_tol": cfg.quad.abs_tol, "rel_tol": cfg.quad.rel_tol},
        "git_describe": git_describe(),
        "results": results,
    }


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    """Execute a parsed configuration and write its output; returns the exit code."""
    try:
        results, (header, rows) = _COMMANDS[cfg.command](cfg)
    except (QuadratureError, ConsistencyError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, QuadratureError):
            diag.update(estimate=exc.estimate, abserr=exc.abserr)
        _emit(dump_json(_envelope(cfg, diag)) + "\n", cfg.out_path)
        print(f"hypflat: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg.format == "csv":
        _emit(_csv_text(header, rows), cfg.out_path)
    else:
        _emit(dump_json(_envelope(cfg, results)) + "\n", cfg.out_path)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (AdmissibilityError, RegimeError) as exc:
        print(f"hypflat: inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    try:
        return run(cfg)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (AdmissibilityError, RegimeError) as exc:
        print(f"hypflat: inadmissible parameters: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE


if __name__ == "__main__":
    sys.exit(main())
