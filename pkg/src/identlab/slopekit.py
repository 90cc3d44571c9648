"""Slope calculus: exact min-norm points in vertex polytopes, slope
estimation from difference quotients, and identifiability-modulus probes.

The min-norm solver enumerates candidate faces exhaustively (vertex counts
are small by contract), so its output is exact to linear-algebra roundoff —
no iterative QP tolerances enter the acceptance numbers built on top of it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import CatalogError, DegenerateExampleError, EmptyProbeError
from .funcatalog import FunctionModel, Polytope

MAX_VERTICES = 16


# ---------------------------------------------------------------------------
# min-norm point
# ---------------------------------------------------------------------------


def _seg_minnorm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, -float(a @ d) / dd))
    return a + t * d


def minnorm(P: Polytope) -> tuple[np.ndarray, float]:
    """Exact nearest point to the origin in conv(vertices).

    Returns (point, distance).  Every affinely independent vertex subset of
    size <= dim+1 is a candidate face (Caratheodory); the affine KKT system
    is solved per subset and kept when the barycentric coordinates are
    nonnegative.  Intended for small vertex sets (<= 16 by contract).
    """
    V = P.vertices
    k, n = V.shape
    if k > MAX_VERTICES:
        raise CatalogError(f"minnorm supports at most {MAX_VERTICES} vertices, got {k}")
    if k == 1:
        return V[0].copy(), float(np.linalg.norm(V[0]))
    if k == 2:
        p = _seg_minnorm(V[0], V[1])
        return p, float(np.linalg.norm(p))

    best_p, best_d = None, math.inf
    for size in range(1, min(k, n + 1) + 1):
        for idx in itertools.combinations(range(k), size):
            S = V[list(idx)]
            if size == 1:
                p = S[0]
                d = float(np.linalg.norm(p))
                if d < best_d:
                    best_p, best_d = p.copy(), d
                continue
            # affine min-norm over the subset: KKT [2G 1; 1^T 0]
            G = S @ S.T
            A = np.zeros((size + 1, size + 1))
            A[:size, :size] = 2.0 * G
            A[:size, size] = 1.0
            A[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            lam, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            lam = lam[:size]
            if abs(float(lam.sum()) - 1.0) > 1e-9 or np.min(lam) < -1e-11:
                continue
            p = lam @ S
            d = float(np.linalg.norm(p))
            if d < best_d:
                best_p, best_d = p, d
    return best_p, best_d


def limiting_slope(f: FunctionModel, x) -> float:
    """dist(0, subdiff f(x)); +inf for points outside the domain."""
    x = np.asarray(x, dtype=float)
    if not f.in_domain(x):
        return math.inf
    return minnorm(f.subdiff(x))[1]


# ---------------------------------------------------------------------------
# direction sets (deterministic)
# ---------------------------------------------------------------------------


def sphere_directions(dim: int, k: int = 256) -> np.ndarray:
    """Deterministic, well-spread unit directions.  In the plane: equally
    spaced angles including the coordinate axes; on the line: {-1, +1};
    higher dims: unscrambled Sobol points pushed through the normal map."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = np.arange(k) * (2.0 * np.pi / k)
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    sob = qmc.Sobol(d=dim, scramble=False)
    # first two points (all-zeros, all-halves) both map to the zero vector
    m = max(2, int(np.ceil(np.log2(k + 2))))
    u = sob.random_base2(m)[2 : k + 2]
    z = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def ball_points(center, r: float, dim: int, k: int = 128) -> np.ndarray:
    """Deterministic points filling the ball: direction set x 4 shells."""
    center = np.asarray(center, dtype=float)
    dirs = sphere_directions(dim, k)
    shells = np.array([1.0, 0.75, 0.5, 0.25])
    pts = center + (r * shells[:, None, None]) * dirs[None, :, :]
    return pts.reshape(-1, dim)


# ---------------------------------------------------------------------------
# slope estimation
# ---------------------------------------------------------------------------


@dataclass
class SlopeEstimate:
    """Difference-quotient slope estimate at a point.

    value is the max of the three finest per-radius estimates; per-radius
    entries keep the whole schedule for diagnostics.
    """

    value: float
    radii: np.ndarray
    per_radius: np.ndarray
    point: np.ndarray
    fname: str = ""

    def validate(self, tol: float = 1e-2) -> bool:
        """Coarse-radius entries should not exceed the estimate (valid below
        the local structure scale; see tests for where this is asserted)."""
        return bool(np.all(self.per_radius <= self.value + tol * (1.0 + self.value)))

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "radii": [float(r) for r in self.radii],
            "per_radius": [float(v) for v in self.per_radius],
            "point": [float(c) for c in self.point],
            "function": self.fname,
        }


def slope_estimate(
    f: FunctionModel,
    x,
    radii: Optional[np.ndarray] = None,
    n_directions: int = 256,
) -> SlopeEstimate:
    """Estimate the descent slope |grad f|(x) by shell difference quotients.

    For each radius r the sup of (f(x) - f(y))+ / r is taken over the
    deterministic direction set at |y - x| = r; the reported value is the
    max over the three smallest radii (the limsup's finite-radius stand-in).
    """
    x = np.asarray(x, dtype=float)
    f.require_domain(x)
    if radii is None:
        radii = 2.0 ** -np.arange(3, 13, dtype=float)
    radii = np.asarray(radii, dtype=float)
    dirs = sphere_directions(f.dim, n_directions)
    fx = f.value_at(x)
    per = np.zeros(len(radii))
    for i, r in enumerate(radii):
        pts = x + r * dirs
        vals = np.asarray(f.value(pts), dtype=float)
        drop = fx - vals
        good = np.isfinite(vals)
        per[i] = max(0.0, float(drop[good].max() / r)) if good.any() else 0.0
    value = float(per[-3:].max()) if len(per) >= 3 else float(per.max())
    return SlopeEstimate(value=value, radii=radii, per_radius=per, point=x, fname=f.name)


# ---------------------------------------------------------------------------
# modulus of identifiability probe
# ---------------------------------------------------------------------------


@dataclass
class ModulusReport:
    """Liminf-of-off-set-slopes probe around a critical point."""

    estimate: float
    radii: np.ndarray
    per_radius_min: np.ndarray
    tube: float
    window_factor: float
    set_name: str
    fname: str
    samples: list = field(default_factory=list)  # finest-radius admissible samples

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate,
            "radii": [float(r) for r in self.radii],
            "per_radius_min": [float(v) for v in self.per_radius_min],
            "tube": self.tube,
            "window_factor": self.window_factor,
            "set": self.set_name,
            "function": self.fname,
            "samples": self.samples,
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def modulus_probe(
    f: FunctionModel,
    M,
    xbar,
    radii: Optional[np.ndarray] = None,
    tube: float = 1e-2,
    window_factor: float = 10.0,
) -> ModulusReport:
    """Estimate the modulus of identifiability of the set M at xbar.

    Sample points approach xbar at a shrinking radius schedule while staying
    outside the tube around M and inside the value window
    |f(x) - f(xbar)| <= window_factor * r.  The estimate is the minimum
    limiting slope over the finest radius's admissible samples; near-set
    "hugging" offsets (M.hug) feed the liminf its worst cases.

    Raises EmptyProbeError when the finest radius admits no samples.
    """
    xbar = np.asarray(xbar, dtype=float)
    if radii is None:
        radii = 0.5 ** np.arange(1, 5, dtype=float)
    radii = np.asarray(radii, dtype=float)
    fbar = f.value_at(xbar)

    per_min = np.full(len(radii), math.inf)
    finest_samples: list = []
    for i, r in enumerate(radii):
        pts = ball_points(xbar, r, f.dim)
        if hasattr(M, "hug"):
            hp = np.asarray(M.hug(xbar, r, 2.0 * tube))
            if hp.size:
                pts = np.concatenate([pts, hp.reshape(-1, f.dim)])
        inside = np.linalg.norm(pts - xbar, axis=-1) <= r + 1e-12
        pts = pts[inside]
        if len(pts) == 0:
            continue
        dists = np.asarray(M.dist(pts), dtype=float)
        vals = np.asarray(f.value(pts), dtype=float)
        ok = (dists > tube) & (np.abs(vals - fbar) <= window_factor * r) & np.isfinite(vals)
        pts = pts[ok]
        vals = vals[ok]
        slopes = np.array([limiting_slope(f, p) for p in pts])
        if len(slopes):
            per_min[i] = float(slopes.min())
        if i == len(radii) - 1:
            finest_samples = [
                {"point": [float(c) for c in p], "value": float(v), "slope": float(s)}
                for p, v, s in zip(pts, vals, slopes)
            ]
    if not finest_samples:
        raise EmptyProbeError(
            f"modulus probe around {xbar.tolist()} found no admissible samples at radius {radii[-1]:g} "
            f"(tube {tube:g}, window {window_factor:g}*r)"
        )
    set_name = getattr(M, "name", type(M).__name__)
    return ModulusReport(
        estimate=float(per_min[-1]),
        radii=radii,
        per_radius_min=per_min,
        tube=tube,
        window_factor=window_factor,
        set_name=set_name,
        fname=f.name,
        samples=finest_samples,
    )


# ---------------------------------------------------------------------------
# max-function modulus (exact, polyhedral)
# ---------------------------------------------------------------------------


def maxfn_modulus(P: Polytope) -> float:
    """dist(0, relative boundary of conv(vertices)) for a gradient hull.

    Preconditions (checked): at least two affinely independent vertices and
    the origin in the relative interior of the hull.  The hull is then a
    simplex, whose relative boundary is the union of drop-one-vertex faces,
    each measured exactly by minnorm.
    """
    V = P.vertices
    k, n = V.shape
    if k < 2:
        raise DegenerateExampleError("gradient hull needs at least two vertices")
    diffs = V[1:] - V[0]
    if np.linalg.matrix_rank(diffs, tol=1e-10) != k - 1:
        raise DegenerateExampleError("gradient hull vertices must be affinely independent")
    # barycentric coordinates of the origin
    A = np.concatenate([V.T, np.ones((1, k))])
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    lam, res, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    if np.linalg.norm(A @ lam - rhs) > 1e-9:
        raise DegenerateExampleError("origin is not in the gradient hull")
    if np.min(lam) < 1e-9:
        raise DegenerateExampleError("origin is not in the relative interior of the gradient hull")
    return min(minnorm(Polytope(np.delete(V, i, axis=0)))[1] for i in range(k))
