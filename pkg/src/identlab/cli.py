"""Command-line front end: `ident-lab <command> [--config file] [flags]`.

Commands: flow, riem-flow, prox, slope, modulus, growth, kl, pln, figure1.
Config is flat JSON; flags mirror the keys one-to-one and win on conflict.
Every run writes `summary.json` under the output directory (plus command
CSVs); identical config + seed reproduces the files bit-for-bit.

Exit codes: 0 success, 2 config error, 3 oracle/solver failure,
4 assertion-style check failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analysiskit import (
    kl_equivalence_check,
    kl_exponent_estimate,
    kl_probe,
    linear_growth_witness,
    optimality_transfer,
    pln_check,
    quadratic_growth_rates,
)
from .errors import (
    CatalogError,
    ConfigError,
    DivergenceError,
    DomainError,
    EmptyProbeError,
    OracleError,
    ProjectionError,
)
from .flowkit import (
    identification_time,
    integrate_flow,
    integrate_riemannian,
    velocity_diagnostics,
)
from .funcatalog import FunctionModel, HornRegion, catalog_get, catalog_names, power_desingularizer
from .manifoldkit import Manifold
from .proxkit import prox_sequence
from .slopekit import ball_points, modulus_probe, slope_estimate

COMMANDS = ("flow", "riem-flow", "prox", "slope", "modulus", "growth", "kl", "pln", "figure1")

# keys a config file may set; anything else is rejected
_CONFIG_KEYS = ("function", "x0", "h", "T", "alpha", "eps", "delta", "tube", "seed", "out")

_RANGES = {
    "h": (0.0, 0.1),
    "T": (0.0, 100.0),
    "alpha": (0.0, 1e6),
    "eps": (0.0, 100.0),
    "delta": (0.0, 2.0),
    "tube": (0.0, 0.5),
}


@dataclass
class RunConfig:
    """Validated parameters of one CLI run (defaults already filled)."""

    command: str
    function: Optional[str] = None
    x0: Optional[tuple] = None
    h: float = 0.01
    T: float = 10.0
    alpha: float = 1.0
    eps: float = 0.5
    delta: float = 0.5
    tube: float = 1e-2
    seed: int = 0
    out: Optional[str] = None
    # runtime-only knobs (not config-file keys)
    scheme: str = "implicit"
    iterations: int = 30
    horn_alpha: Optional[float] = None
    gnuplot: bool = False

    def params_json(self) -> dict:
        return {
            "function": self.function,
            "x0": list(self.x0) if self.x0 is not None else None,
            "h": self.h,
            "T": self.T,
            "alpha": self.alpha,
            "eps": self.eps,
            "delta": self.delta,
            "tube": self.tube,
            "seed": self.seed,
            "scheme": self.scheme,
            "iterations": self.iterations,
            "horn_alpha": self.horn_alpha,
        }


def _parse_x0(text: str) -> tuple:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ConfigError(f"x0 must be comma-separated floats, got {text!r}") from None


def _check_range(key: str, value: float) -> float:
    value = float(value)
    if key in _RANGES:
        lo, hi = _RANGES[key]
        if not (lo < value <= hi):
            raise ConfigError(f"{key} must be in ({lo:g}, {hi:g}], got {value:g}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ident-lab",
        description="identifiability / slope / prox / KL laboratory",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="flat JSON config file; flags override its values")
    p.add_argument("--function", help=f"catalog member ({', '.join(catalog_names())})")
    p.add_argument("--x0", help="start point, comma-separated floats")
    p.add_argument("--h", type=float, help="time step, in (0, 0.1]")
    p.add_argument("--T", type=float, help="horizon, in (0, 100]")
    p.add_argument("--alpha", type=float, help="prox parameter, in (0, 1e6]")
    p.add_argument("--eps", type=float, help="growth-inequality epsilon")
    p.add_argument("--delta", type=float, help="probe radius, in (0, 2]")
    p.add_argument("--tube", type=float, help="identification tube, in (0, 0.5]")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--out", help="output directory (also IDENT_LAB_OUT)")
    p.add_argument("--scheme", choices=("implicit", "explicit"), help="flow scheme")
    p.add_argument("--iterations", type=int, help="prox iteration count")
    p.add_argument("--horn-alpha", type=float, dest="horn_alpha",
                   help="probe the horn region {|u| <= a v^2} instead of the registered set")
    p.add_argument("--gnuplot", action="store_true", help="emit a gnuplot script")
    return p


def parse_config(argv=None) -> RunConfig:
    """Merge config file and flags into a validated RunConfig.

    Precedence: flag > config file > IDENT_LAB_OUT (out only) > defaults.
    Unknown config keys and out-of-range values raise ConfigError with the
    offending field named.
    """
    args = _build_parser().parse_args(argv)
    cfg = RunConfig(command=args.command)

    file_values: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config file {args.config}: {e}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a flat JSON object")
        unknown = sorted(set(file_values) - set(_CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    def pick(key, flag_value):
        return flag_value if flag_value is not None else file_values.get(key)

    fn = pick("function", args.function)
    if fn is not None:
        cfg.function = str(fn)
    x0 = pick("x0", args.x0)
    if x0 is not None:
        cfg.x0 = _parse_x0(x0) if isinstance(x0, str) else tuple(float(v) for v in x0)
    for key in ("h", "T", "alpha", "eps", "delta", "tube"):
        v = pick(key, getattr(args, key))
        if v is not None:
            setattr(cfg, key, _check_range(key, v))
    seed = pick("seed", args.seed)
    if seed is not None:
        if int(seed) < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {seed}")
        cfg.seed = int(seed)
    out = pick("out", args.out)
    if out is None:
        out = os.environ.get("IDENT_LAB_OUT")
    cfg.out = str(out) if out is not None else "ident-lab-out"

    if args.scheme is not None:
        cfg.scheme = args.scheme
    if args.iterations is not None:
        if not 1 <= args.iterations <= 100000:
            raise ConfigError(f"iterations must be in [1, 100000], got {args.iterations}")
        cfg.iterations = args.iterations
    if args.horn_alpha is not None:
        if args.horn_alpha < 0.0:
            raise ConfigError(f"horn-alpha must be >= 0, got {args.horn_alpha}")
        cfg.horn_alpha = args.horn_alpha
    cfg.gnuplot = bool(args.gnuplot)
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_json(path: str, obj: dict):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def _summary(cfg: RunConfig, results: dict) -> dict:
    return {
        "command": cfg.command,
        "function": cfg.function,
        "parameters": cfg.params_json(),
        "results": results,
    }


def _require_function(cfg: RunConfig) -> FunctionModel:
    if cfg.function is None:
        raise ConfigError(f"{cfg.command} requires --function (one of {', '.join(catalog_names())})")
    try:
        return catalog_get(cfg.function)
    except CatalogError as e:
        raise ConfigError(str(e)) from None


def _require_x0(cfg: RunConfig, f: FunctionModel) -> np.ndarray:
    if cfg.x0 is None:
        raise ConfigError(f"{cfg.command} requires --x0")
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.shape != (f.dim,):
        raise ConfigError(f"x0 must have {f.dim} coordinates for {f.name}, got {len(x0)}")
    return x0


def _registered_manifold(f: FunctionModel) -> Optional[Manifold]:
    for cp in f.critical_points:
        if cp.manifold is not None:
            return cp.manifold
    return None


def _require_critical(cfg: RunConfig, f: FunctionModel):
    for cp in f.critical_points:
        if cp.manifold is not None:
            return cp
    raise ConfigError(f"{f.name} has no registered critical point / identifiable set for {cfg.command}")


def _manifold_polyline(M: Manifold, path: str, lo: float = -1.2, hi: float = 1.2, n: int = 241):
    if M.param is not None:
        sv = np.linspace(lo, hi, n)
        pts = np.atleast_2d(M.param.gamma(sv))
    else:
        pts = M.xbar[None, :]
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i+1}" for i in range(pts.shape[1])) + "\n")
        for p in pts:
            fh.write(",".join(repr(float(c)) for c in p) + "\n")


def _gnuplot_script(path: str, curves: list[str], manifold_csv: Optional[str], title: str):
    lines = [
        "set datafile separator ','",
        "set size ratio -1",
        f"set title '{title}'",
        "set xlabel 'x1'",
        "set ylabel 'x2'",
        "set key outside",
    ]
    plots = []
    # data files referenced by basename: the script lives next to them
    if manifold_csv is not None:
        plots.append(f"'{os.path.basename(manifold_csv)}' using 1:2 with lines lw 2 lc rgb '#999999' title 'manifold'")
    for c in curves:
        label = os.path.splitext(os.path.basename(c))[0]
        plots.append(f"'{os.path.basename(c)}' using 2:3 with lines title '{label}'")
    lines.append("plot \\")
    lines.append(", \\\n".join("     " + p for p in plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# command bodies (each returns (results dict, passed flag))
# ---------------------------------------------------------------------------


def _cmd_flow(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    x0 = _require_x0(cfg, f)
    M = _registered_manifold(f)
    traj = integrate_flow(f, x0, h=cfg.h, T=cfg.T, scheme=cfg.scheme, manifold=M)
    csv = os.path.join(out, "flow.csv")
    traj.to_csv(csv)
    results = traj.summary()
    results["velocity"] = velocity_diagnostics(traj).to_json()
    if M is not None:
        t_id = identification_time(traj, M, tube=cfg.tube)
        results["identification_time"] = t_id
    if cfg.gnuplot:
        man_csv = None
        if M is not None:
            man_csv = os.path.join(out, "manifold.csv")
            _manifold_polyline(M, man_csv)
        _gnuplot_script(os.path.join(out, "flow.gp"), [csv], man_csv, f"{f.name} ({cfg.scheme})")
    return results, True


def _cmd_riem_flow(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    cp = _require_critical(cfg, f)
    M = cp.manifold
    x0 = _require_x0(cfg, f)
    traj = integrate_riemannian(f, M, x0, h=cfg.h, T=cfg.T)
    csv = os.path.join(out, "riem_flow.csv")
    traj.to_csv(csv)
    results = traj.summary()
    results["velocity"] = velocity_diagnostics(traj).to_json()
    if cfg.gnuplot:
        man_csv = os.path.join(out, "manifold.csv")
        _manifold_polyline(M, man_csv)
        _gnuplot_script(os.path.join(out, "riem_flow.gp"), [csv], man_csv, f"{f.name} (riemannian)")
    return results, True


def _cmd_prox(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    x0 = _require_x0(cfg, f)
    seq = prox_sequence(f, x0, cfg.alpha, cfg.iterations)
    seq.to_csv(os.path.join(out, "prox_seq.csv"))
    return seq.summary(), True


def _cmd_slope(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    x0 = _require_x0(cfg, f)
    est = slope_estimate(f, x0)
    results = est.to_json()
    if f.analytic_slope is not None:
        truth = float(f.analytic_slope(x0))
        results["analytic"] = truth
        if truth > 0.0 and math.isfinite(truth):
            results["rel_err"] = abs(est.value - truth) / truth
    return results, True


def _cmd_modulus(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    cp = None
    if cfg.horn_alpha is not None:
        target = HornRegion(cfg.horn_alpha)
    else:
        cp = _require_critical(cfg, f)
        target = cp.manifold
    if cfg.x0 is not None:
        center = np.asarray(cfg.x0, dtype=float)
    elif cp is not None:
        center = cp.point
    elif f.critical_points:
        center = f.critical_points[0].point
    else:
        raise ConfigError(f"{cfg.command} requires --x0 for {f.name}")
    rep = modulus_probe(f, target, center, tube=cfg.tube)
    results = rep.to_json()
    if cp is not None and cp.modulus is not None:
        results["registered_modulus"] = cp.modulus
    return results, True


def _cmd_growth(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    cp = _require_critical(cfg, f)
    M = cp.manifold
    center = np.asarray(cfg.x0, dtype=float) if cfg.x0 is not None else cp.point
    rates = quadratic_growth_rates(f, M, center, r=cfg.delta)
    transfer = optimality_transfer(f, M, center, r=cfg.delta)
    witness_pts = ball_points(center, cfg.delta, f.dim, k=64)
    witness = linear_growth_witness(f, M, witness_pts, cfg.eps)
    results = {
        "quadratic_rates": rates.to_json(),
        "transfer": transfer.to_json(),
        "linear_growth": witness.to_json(),
    }
    return results, bool(witness.passed and transfer.agree)


def _cmd_kl(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    cp = _require_critical(cfg, f)
    M = cp.manifold
    center = np.asarray(cfg.x0, dtype=float) if cfg.x0 is not None else cp.point
    phi = power_desingularizer(0.5)
    full = kl_probe(f, center, phi, cfg.delta)
    full_json = full.to_json()
    full_json.pop("samples", None)  # keep the summary compact
    results = {"probe_full": full_json}
    restricted = kl_probe(f, center, phi, cfg.delta, M=M)
    rj = restricted.to_json()
    rj.pop("samples", None)
    results["probe_restricted"] = rj
    results["equivalence"] = kl_equivalence_check(f, M, center, phi, cfg.delta).to_json()
    expo_M = M if M.dim_manifold > 0 else None
    a, resid = kl_exponent_estimate(f, center, cfg.delta, M=expo_M)
    results["exponent"] = a
    results["exponent_residual"] = resid
    return results, True


def _cmd_pln(cfg: RunConfig, out: str):
    f = _require_function(cfg)
    if cfg.x0 is not None:
        center = np.asarray(cfg.x0, dtype=float)
    elif f.critical_points:
        center = f.critical_points[0].point
    else:
        center = np.zeros(f.dim)
    rep = pln_check(f, center, radius=cfg.delta, seed=cfg.seed)
    results = rep.to_json()
    results["claimed_pln"] = f.pln
    return results, True


def _cmd_figure1(cfg: RunConfig, out: str):
    fname = cfg.function or "paper-main"
    cfg.function = fname
    f = catalog_get(fname)
    if f.dim != 2:
        raise ConfigError(f"figure1 needs a 2-d function, got {fname} with dim {f.dim}")
    M = _registered_manifold(f)
    rng = np.random.default_rng(cfg.seed)
    starts = rng.uniform(-1.0, 1.0, size=(10, 2))
    curves = []
    per_curve = []
    for i, x0 in enumerate(starts):
        traj = integrate_flow(f, x0, h=cfg.h, T=cfg.T, scheme="implicit", manifold=M)
        csv = os.path.join(out, f"curve_{i:02d}.csv")
        traj.to_csv(csv)
        curves.append(csv)
        entry = {
            "start": [float(c) for c in x0],
            "final_point": [float(c) for c in traj.points[-1]],
            "final_norm": float(np.linalg.norm(traj.points[-1])),
            "final_value": float(traj.values[-1]),
        }
        if M is not None:
            entry["identification_time"] = identification_time(traj, M, tube=cfg.tube)
        per_curve.append(entry)
    man_csv = None
    if M is not None:
        man_csv = os.path.join(out, "manifold.csv")
        _manifold_polyline(M, man_csv)
    _gnuplot_script(os.path.join(out, "figure1.gp"), curves, man_csv, f"subgradient curves: {fname}")
    results = {
        "curves": per_curve,
        "n_curves": len(per_curve),
        "max_final_norm": max(c["final_norm"] for c in per_curve),
    }
    return results, True


_DISPATCH = {
    "flow": _cmd_flow,
    "riem-flow": _cmd_riem_flow,
    "prox": _cmd_prox,
    "slope": _cmd_slope,
    "modulus": _cmd_modulus,
    "growth": _cmd_growth,
    "kl": _cmd_kl,
    "pln": _cmd_pln,
    "figure1": _cmd_figure1,
}


def run(cfg: RunConfig) -> int:
    """Execute a validated config; returns the process exit code."""
    out = cfg.out or "ident-lab-out"
    os.makedirs(out, exist_ok=True)
    results, passed = _DISPATCH[cfg.command](cfg, out)
    _write_json(os.path.join(out, "summary.json"), _summary(cfg, results))
    if not passed:
        print(f"{cfg.command}: check FAILED (see {os.path.join(out, 'summary.json')})", file=sys.stderr)
        return 4
    print(f"{cfg.command}: ok -> {os.path.join(out, 'summary.json')}")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OracleError, DivergenceError, ProjectionError, DomainError, EmptyProbeError, CatalogError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
