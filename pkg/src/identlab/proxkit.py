"""Proximal machinery: a deterministic global-minimization grid oracle, the
prox map with exact kink snapping, proximal sequences, and the two checks
built on them (the prox slope lemma and the desingularized length bound).

The prox of f at x with parameter alpha minimizes f + alpha * |. - x|^2.
Large alpha means small steps.  The oracle is a refined grid search: it is
slow but has no tolerance knobs that could silently bias acceptance numbers,
and candidate snapping to registered nonsmooth loci makes identification
exact in floating point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DivergenceError, DomainError, OracleError
from .funcatalog import DesingularizerSpec, FunctionModel, Polytope
from .slopekit import limiting_slope, minnorm

_KEEP = 4            # candidate cells carried between refinement levels
_GRID0 = 65          # level-0 points per axis
_GRID = 17           # refinement points per axis
_MIN_LEVELS = 8
_MAX_LEVELS = 24
_SEPARATION = 2.5    # non-adjacency threshold, in current-cell units


_UNIT_GRIDS: dict[tuple[int, int], np.ndarray] = {}


def _unit_grid(points: int, dim: int) -> np.ndarray:
    key = (points, dim)
    g = _UNIT_GRIDS.get(key)
    if g is None:
        ax = np.linspace(-1.0, 1.0, points)
        mesh = np.meshgrid(*([ax] * dim), indexing="ij")
        g = np.stack([m.ravel() for m in mesh], axis=-1)
        _UNIT_GRIDS[key] = g
    return g


def _grid_points(center: np.ndarray, half: float, points: int) -> np.ndarray:
    return center + half * _unit_grid(points, len(center))


def _grid_eval(objective, center: np.ndarray, half: float, points: int) -> tuple[np.ndarray, np.ndarray]:
    pts = _grid_points(center, half, points)
    vals = np.asarray(objective(pts), dtype=float).ravel()
    return pts, vals


def _select_spread(pts: np.ndarray, vals: np.ndarray, h: float, keep: int) -> list[np.ndarray]:
    """Best `keep` points, pairwise L-inf separated by > _SEPARATION * h.
    Stable ascending order makes ties resolve lexicographically by index."""
    order = np.argsort(vals, kind="stable")
    # each chosen point eliminates <= 5^dim grid points per overlapping box,
    # so the winners all sit inside this prefix of the sorted order
    order = order[: 4 * keep * 5**pts.shape[-1] + keep]
    pts_o = pts[order]
    alive = np.isfinite(vals[order])
    chosen: list[np.ndarray] = []
    while len(chosen) < keep:
        idx = np.flatnonzero(alive)
        if len(idx) == 0:
            break
        p = pts_o[idx[0]]
        chosen.append(p)
        alive &= np.abs(pts_o - p).max(axis=-1) > _SEPARATION * h
    return chosen


def global_min_oracle(
    objective: Callable[[np.ndarray], np.ndarray],
    center,
    radius: float,
    resolution: float = 1e-8,
) -> np.ndarray:
    """Deterministic approximate global minimizer over a box.

    A 65-per-axis grid seeds up to four non-adjacent candidate cells; each
    level re-grids a 17-point box around every candidate at a quarter of the
    previous spacing.  Levels continue until the spacing drops below
    `resolution` (at least 8 levels).  Dimensions 1-3 only.
    """
    center = np.asarray(center, dtype=float)
    dim = center.shape[0]
    if dim > 3:
        raise ConfigError(f"global_min_oracle supports dimensions 1-3, got {dim}")
    if radius <= 0.0:
        raise ConfigError("global_min_oracle needs radius > 0")

    h = 2.0 * radius / (_GRID0 - 1)
    pts, vals = _grid_eval(objective, center, radius, _GRID0)
    if not np.isfinite(vals).any():
        raise OracleError("grid oracle: no finite objective values on the level-0 grid")
    cands = _select_spread(pts, vals, h, _KEEP)

    levels = max(_MIN_LEVELS, math.ceil(math.log(max(h / max(resolution, 1e-300), 1.0), 4.0)))
    levels = min(levels, _MAX_LEVELS)
    best_p, best_v = None, math.inf
    for _ in range(levels):
        # one batched objective call per level over all candidate boxes
        pts = np.concatenate([_grid_points(c, 2.0 * h, _GRID) for c in cands])
        vals = np.asarray(objective(pts), dtype=float).ravel()
        h = h / 4.0
        cands = _select_spread(pts, vals, h, _KEEP)
        if not cands:
            raise OracleError("grid oracle: refinement lost all finite candidates")
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_v, best_p = float(vals[i]), pts[i].copy()
    return best_p


# ---------------------------------------------------------------------------
# prox
# ---------------------------------------------------------------------------


def _prox_objective(f: FunctionModel, x: np.ndarray, alpha: float):
    def F(z):
        z = np.asarray(z, dtype=float)
        return f.value(z) + alpha * np.sum((z - x) ** 2, axis=-1)

    return F


def _prox_box_radius(f: FunctionModel, x: np.ndarray, alpha: float) -> float:
    fx = f.value_at(x)
    if f.inf_value is not None:
        r = math.sqrt(max(fx - f.inf_value, 0.0) / alpha)
    else:
        # members without a finite registered infimum satisfy f(z) >= -|z|
        c = fx + float(np.linalg.norm(x))
        r = (1.0 + math.sqrt(max(1.0 + 4.0 * alpha * c, 0.0))) / (2.0 * alpha)
    return 1.1 * r + 1e-3


def _refine_1d(g, span: float, resolution: float) -> Optional[float]:
    """Nested 1-d minimizer for locus sweeps: same schedule shape as the
    ambient oracle but three carried candidates and a floor of 4 levels
    (the ambient grid already brackets the basins).  One batched call of
    g per level; g maps a (k,) array of offsets to (k,) objective values."""
    ts = np.linspace(-span, span, _GRID0)[:, None]
    vals = np.asarray(g(ts.ravel()), dtype=float).ravel()
    if not np.isfinite(vals).any():
        return None
    h = 2.0 * span / (_GRID0 - 1)
    cands = _select_spread(ts, vals, h, 3)
    i = int(np.argmin(np.where(np.isfinite(vals), vals, np.inf)))
    best_t, best_v = float(ts[i, 0]), float(vals[i])
    levels = max(4, math.ceil(math.log(max(h / max(resolution, 1e-300), 1.0), 4.0)))
    offs = np.linspace(-2.0, 2.0, _GRID)
    for _ in range(min(levels, _MAX_LEVELS)):
        ts = (np.asarray([c[0] for c in cands])[:, None] + h * offs[None, :]).reshape(-1, 1)
        vals = np.asarray(g(ts.ravel()), dtype=float).ravel()
        h = h / 4.0
        cands = _select_spread(ts, vals, h, 3)
        if not cands:
            return None
        i = int(np.argmin(np.where(np.isfinite(vals), vals, np.inf)))
        if np.isfinite(vals[i]) and float(vals[i]) < best_v:
            best_t, best_v = float(ts[i, 0]), float(vals[i])
    return best_t


def _locus_sweep(F, snap, c0: np.ndarray, x: np.ndarray, R: float, resolution: float):
    """Refine the prox objective along one nonsmooth locus.

    The axis-aligned grid cannot descend a narrow curved valley whose floor
    slope is smaller than its wall slope, so the locus through c0 = snap(.)
    gets its own nested 1-d search.  Snap maps carrying a parametrization
    (gamma, s_of) are walked by parameter; otherwise the tangent is
    estimated by differencing the projection map and offsets re-snapped.
    Returns the swept minimizer (exactly on the locus) or None for point
    loci.  Parameters are 1-Lipschitz along their loci, so an ambient span
    also covers the same range in parameter units.
    """
    gamma = getattr(snap, "gamma", None)
    s_of = getattr(snap, "s_of", None)
    span = 2.0 * (R + float(np.linalg.norm(c0 - x))) + 1e-3
    if gamma is not None and s_of is not None:
        s0 = s_of(c0)

        def to_locus(T):
            return np.asarray(gamma(s0 + np.asarray(T, dtype=float)), dtype=float)

    else:
        n = len(c0)
        eps = 1e-5 * (1.0 + float(np.linalg.norm(c0)))
        moved = np.atleast_2d(np.asarray(snap(c0 + eps * np.eye(n)), dtype=float)) - c0
        norms = np.linalg.norm(moved, axis=-1)
        i = int(np.argmax(norms))
        if norms[i] <= 1e-9 * eps:
            return None
        tau = moved[i] / norms[i]

        def to_locus(T):
            return np.asarray(snap(c0 + np.asarray(T, dtype=float)[..., None] * tau), dtype=float)

    t = _refine_1d(lambda T: F(to_locus(T)), span, resolution)
    if t is None:
        return None  # locus segment entirely outside the domain
    return to_locus(np.array([t]))[0]


def prox(
    f: FunctionModel,
    x,
    alpha: float,
    resolution: float = 1e-8,
    polish_steps: int = 6,
) -> np.ndarray:
    """argmin of f + alpha * |. - x|^2.

    Grid oracle over a level-set box, then `polish_steps` diminishing
    min-norm subgradient steps (keep-best), then locus candidates: each
    registered nonsmooth locus contributes the projection of the incumbent,
    the projection of x, and a nested 1-d sweep along the locus itself.
    A locus candidate within 1e-12 relative of the incumbent objective is
    preferred, so active-set membership is exact in floating point.  x
    itself is always a candidate, making the prox descent inequality
    f(y) + alpha d^2 <= f(x) hold exactly.
    """
    x = np.asarray(x, dtype=float)
    if alpha <= 0.0:
        raise ConfigError("prox needs alpha > 0")
    if not f.in_domain(x):
        raise DomainError(f"prox center outside the domain of {f.name}")
    F = _prox_objective(f, x, alpha)
    R = _prox_box_radius(f, x, alpha)
    y = global_min_oracle(F, x, R, resolution=resolution)

    def fval(z) -> float:
        return float(F(z))

    best = y
    best_v = fval(y)
    # keep-best subgradient polish on the strongly convex prox objective
    sigma = 2.0 * max(alpha - (f.alpha_bar or 0.0), 0.5 * alpha)
    z = best.copy()
    for j in range(polish_steps):
        g = minnorm(Polytope(f.subdiff(z).vertices + 2.0 * alpha * (z - x)))[0]
        step = min(1.0 / (sigma * (j + 1.0)), R)
        z = z - step * g
        v = fval(z)
        if v < best_v and f.in_domain(z):
            best, best_v = z.copy(), v

    cand = [x]
    for snap in f.kinks:
        c0 = np.asarray(snap(best), dtype=float)
        cand.append(c0)
        kx = np.asarray(snap(x), dtype=float)
        cand.append(kx)
        # prox lives in B(x, R); a locus farther than R cannot win the sweep
        if float(np.linalg.norm(kx - x)) <= R:
            swept = _locus_sweep(F, snap, c0, x, R, resolution)
            if swept is not None:
                cand.append(swept)
    snapped_best, snapped_v = None, math.inf
    for c in cand:
        if not f.in_domain(c):
            continue
        v = fval(c)
        if v < snapped_v:
            snapped_best, snapped_v = c, v
    if snapped_best is not None and snapped_v <= best_v + 1e-12 * (1.0 + abs(best_v)):
        return snapped_best
    return best


# ---------------------------------------------------------------------------
# proximal sequences
# ---------------------------------------------------------------------------


@dataclass
class ProxSequence:
    """A prox iteration record: iterates, values, step lengths, slopes."""

    fname: str
    alpha: float
    points: np.ndarray            # (k+1, n)
    values: np.ndarray            # (k+1,)
    steps: np.ndarray             # (k,) with steps[j] = |x_{j+1} - x_j|
    slopes: np.ndarray            # (k+1,) limiting slopes at iterates

    @classmethod
    def from_points(cls, f: FunctionModel, alpha: float, points) -> "ProxSequence":
        """Wrap externally supplied iterates (e.g. a closed-form sequence)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(f.value(pts), dtype=float)
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
        slopes = np.array([limiting_slope(f, p) for p in pts])
        return cls(fname=f.name, alpha=alpha, points=pts, values=vals, steps=steps, slopes=slopes)

    def to_csv(self, path):
        n = self.points.shape[1]
        cols = ["k"] + [f"x{i+1}" for i in range(n)] + ["f", "step", "slope"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(len(self.points)):
                row = [str(k)]
                row += [repr(float(c)) for c in self.points[k]]
                row.append(repr(float(self.values[k])))
                row.append(repr(float(self.steps[k])) if k < len(self.steps) else "")
                row.append(repr(float(self.slopes[k])))
                fh.write(",".join(row) + "\n")

    def summary(self) -> dict:
        return {
            "function": self.fname,
            "alpha": self.alpha,
            "iterations": len(self.points) - 1,
            "final_point": [float(c) for c in self.points[-1]],
            "final_value": float(self.values[-1]),
            "final_slope": float(self.slopes[-1]),
            "total_length": float(self.steps.sum()) if len(self.steps) else 0.0,
        }


def prox_sequence(
    f: FunctionModel,
    x0,
    alpha: float,
    iterations: int,
    resolution: float = 1e-8,
    guard: Optional[float] = None,
) -> ProxSequence:
    """Iterate the prox map from x0.

    The divergence guard aborts (DivergenceError) once an iterate leaves the
    ball of radius `guard` (default 10 * (|x0| + 1)) around the origin.
    """
    x0 = np.asarray(x0, dtype=float)
    if guard is None:
        guard = 10.0 * (float(np.linalg.norm(x0)) + 1.0)
    pts = [x0]
    z = x0
    for _ in range(iterations):
        z = prox(f, z, alpha, resolution=resolution)
        if np.linalg.norm(z) > guard:
            raise DivergenceError(
                f"prox sequence on {f.name} left the guard ball (|x| = {np.linalg.norm(z):.3g} > {guard:.3g})"
            )
        pts.append(z)
    return ProxSequence.from_points(f, alpha, np.array(pts))


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


@dataclass
class ProxLemmaReport:
    """One instance of the prox slope inequality |grad f|(y) <= 2 alpha d(y, x)."""

    fname: str
    x: np.ndarray
    y: np.ndarray
    alpha: float
    lhs: float
    rhs: float
    slack: float = 1e-6

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "x": [float(c) for c in self.x],
            "y": [float(c) for c in self.y],
            "alpha": self.alpha,
            "lhs_slope_at_prox": self.lhs,
            "rhs_two_alpha_dist": self.rhs,
            "slack": self.slack,
            "passed": self.passed,
        }


def check_prox_lemma(
    f: FunctionModel,
    x,
    alpha: float,
    resolution: float = 1e-11,
) -> ProxLemmaReport:
    """Verify the slope bound at the prox: the limiting slope at
    y = prox(f, x, alpha) never exceeds 2 alpha |y - x| (+ 1e-6 slack).

    The tight default resolution matters: for C^2 pieces the bound holds
    with equality at interior proxes, so positional error inflates the
    left side by roughly (curvature + 2 alpha) * error.
    """
    x = np.asarray(x, dtype=float)
    y = prox(f, x, alpha, resolution=resolution)
    lhs = limiting_slope(f, y)
    rhs = 2.0 * alpha * float(np.linalg.norm(y - x))
    return ProxLemmaReport(fname=f.name, x=x, y=y, alpha=alpha, lhs=lhs, rhs=rhs)


@dataclass
class LengthBoundReport:
    """Desingularized length bound along a prox sequence."""

    fname: str
    phi_name: str
    fstar: float
    margins: np.ndarray       # rhs - lhs per step; >= -slack means pass
    slack: float = 1e-9

    @property
    def passed(self) -> bool:
        return bool(len(self.margins) == 0 or self.margins.min() >= -self.slack)

    @property
    def worst_margin(self) -> float:
        return float(self.margins.min()) if len(self.margins) else math.inf

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "phi": self.phi_name,
            "fstar": self.fstar,
            "margins": [float(m) for m in self.margins],
            "worst_margin": self.worst_margin,
            "slack": self.slack,
            "passed": self.passed,
        }


def check_length_bound(
    seq: ProxSequence,
    phi: DesingularizerSpec,
    fstar: Optional[float] = None,
    kmax: Optional[int] = None,
) -> LengthBoundReport:
    """Verify d(x_k, x_{k+1}) <= phi(f_k - fstar) - phi(f_{k+1} - fstar)
    along the sequence (slack 1e-9), for a desingularizer phi.

    fstar defaults to the sequence's final value only if it is (numerically)
    the infimum the caller intends; pass it explicitly for exactness.
    """
    if fstar is None:
        fstar = float(seq.values.min())
    gaps = seq.values - fstar
    if np.min(gaps) < -1e-12:
        raise DomainError("length bound: sequence values drop below fstar")
    gaps = np.maximum(gaps, 0.0)
    upto = len(seq.steps) if kmax is None else min(kmax, len(seq.steps))
    pv = np.asarray(phi.phi(gaps), dtype=float)
    margins = (pv[:upto] - pv[1 : upto + 1]) - seq.steps[:upto]
    return LengthBoundReport(fname=seq.fname, phi_name=phi.name, fstar=fstar, margins=margins)


def dump_json(obj: dict, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# re-exported convenience: objective evaluations used by tests/CLI
__all__ = [
    "global_min_oracle",
    "prox",
    "prox_sequence",
    "ProxSequence",
    "check_prox_lemma",
    "ProxLemmaReport",
    "check_length_bound",
    "LengthBoundReport",
    "dump_json",
]
