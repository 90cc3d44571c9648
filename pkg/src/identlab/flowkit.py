"""Subgradient-curve dynamics, discretized.

The implicit scheme is the prox map with alpha = 1/(2h) — the workhorse with
actual guarantees (values nonincreasing, square-summable speeds).  The
explicit scheme steps along the min-norm subgradient and is offered for
comparison only: it chatters on creases by design.  On an identified
manifold the dynamics reduce to a smooth Riemannian gradient flow, which a
projected RK4 integrates to reference accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CatalogError, ConfigError, DivergenceError, ProjectionError
from .funcatalog import FunctionModel
from .manifoldkit import Manifold, project, riem_grad
from .proxkit import prox
from .slopekit import minnorm

DEFAULT_TUBE = 1e-2


@dataclass
class Trajectory:
    """A time grid with points, values, speeds, and optional dist-to-M."""

    fname: str
    scheme: str
    h: float
    times: np.ndarray             # (N+1,)
    points: np.ndarray            # (N+1, n)
    values: np.ndarray            # (N+1,)
    speeds: np.ndarray            # (N+1,), forward differences, last padded
    manifold_name: Optional[str] = None
    dists: Optional[np.ndarray] = None

    @property
    def energy(self) -> float:
        """Discrete L2 energy of the velocity: sum |dx|^2 / h over steps."""
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=-1)
        return float(np.sum(steps**2) / self.h)

    def to_csv(self, path):
        n = self.points.shape[1]
        cols = ["t"] + [f"x{i+1}" for i in range(n)] + ["f", "speed"]
        if self.dists is not None:
            cols.append("dist_to_M")
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(len(self.times)):
                row = [repr(float(self.times[k]))]
                row += [repr(float(c)) for c in self.points[k]]
                row.append(repr(float(self.values[k])))
                row.append(repr(float(self.speeds[k])))
                if self.dists is not None:
                    row.append(repr(float(self.dists[k])))
                fh.write(",".join(row) + "\n")

    def summary(self) -> dict:
        out = {
            "function": self.fname,
            "scheme": self.scheme,
            "h": self.h,
            "T": float(self.times[-1]),
            "final_point": [float(c) for c in self.points[-1]],
            "final_value": float(self.values[-1]),
            "final_norm": float(np.linalg.norm(self.points[-1])),
            "energy": self.energy,
        }
        if self.manifold_name is not None:
            out["manifold"] = self.manifold_name
        return out


def _finish(f, scheme, h, times, pts, manifold: Optional[Manifold]) -> Trajectory:
    pts = np.asarray(pts)
    vals = np.asarray(f.value(pts), dtype=float)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
    speeds = np.concatenate([steps / h, steps[-1:] / h]) if len(steps) else np.zeros(1)
    dists = None
    mname = None
    if manifold is not None:
        dists = np.asarray(manifold.dist(pts), dtype=float)
        mname = manifold.name
    return Trajectory(
        fname=f.name, scheme=scheme, h=h, times=times, points=pts, values=vals,
        speeds=speeds, manifold_name=mname, dists=dists,
    )


def integrate_flow(
    f: FunctionModel,
    x0,
    h: float = 0.01,
    T: float = 10.0,
    scheme: str = "implicit",
    resolution: float = 1e-8,
    manifold: Optional[Manifold] = None,
    guard: Optional[float] = None,
) -> Trajectory:
    """Discrete subgradient curve x' in -subdiff f(x) on [0, T].

    implicit: x_{k+1} = prox(f, x_k, 1/(2h)) — monotone values, stable.
    explicit: x_{k+1} = x_k - h * (min-norm subgradient) — comparison only.

    A divergence guard (default 10 * (|x0| + 1)) aborts runaway runs.
    """
    if scheme not in ("implicit", "explicit"):
        raise ConfigError(f"unknown scheme {scheme!r}: use 'implicit' or 'explicit'")
    if h <= 0.0 or T <= 0.0:
        raise ConfigError("integrate_flow needs h > 0 and T > 0")
    x0 = np.asarray(x0, dtype=float)
    if guard is None:
        guard = 10.0 * (float(np.linalg.norm(x0)) + 1.0)
    N = int(round(T / h))
    times = np.arange(N + 1) * h
    pts = [x0]
    z = x0
    alpha = 1.0 / (2.0 * h)
    for _ in range(N):
        if scheme == "implicit":
            z = prox(f, z, alpha, resolution=resolution)
        else:
            g = minnorm(f.subdiff(z))[0]
            z = z - h * g
        if np.linalg.norm(z) > guard:
            raise DivergenceError(f"{scheme} flow on {f.name} left the guard ball")
        pts.append(z)
    return _finish(f, scheme, h, times, pts, manifold)


def _lookup_ext_grad(f: FunctionModel, M: Manifold):
    cp = f.critical_point_on(M)
    if cp.ext_grad is None:
        raise CatalogError(f"{f.name} has no registered smooth extension gradient on {M.name}")
    return cp.ext_grad


def integrate_riemannian(
    f: FunctionModel,
    M: Manifold,
    x0,
    h: float = 0.01,
    T: float = 10.0,
) -> Trajectory:
    """Classical RK4 for the Riemannian gradient flow y' = -grad_M f(y).

    Stage evaluations use the tube extension v(p) = -riem_grad at project(p)
    (constant along normal fibers, so M stays invariant); each completed
    step is projected back and must satisfy |G| <= 1e-9.
    """
    if h <= 0.0 or T <= 0.0:
        raise ConfigError("integrate_riemannian needs h > 0 and T > 0")
    x0 = np.asarray(x0, dtype=float)
    ext_grad = _lookup_ext_grad(f, M)

    def field(p):
        q = project(M, p)
        return -riem_grad(M, ext_grad, q)

    N = int(round(T / h))
    times = np.arange(N + 1) * h
    y = project(M, x0)
    pts = [y]
    for _ in range(N):
        k1 = field(y)
        k2 = field(y + 0.5 * h * k1)
        k3 = field(y + 0.5 * h * k2)
        k4 = field(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y = project(M, y)
        if np.linalg.norm(np.atleast_1d(M.G(y))) > 1e-9:
            raise ProjectionError(f"riemannian step left {M.name}: |G| > 1e-9")
        pts.append(y)
    return _finish(f, "riemannian-rk4", h, times, pts, M)


def identification_time(traj: Trajectory, M: Manifold, tube: float = DEFAULT_TUBE) -> Optional[float]:
    """First grid time after which dist(x_k, M) <= tube for every later k.

    Returns None when the trajectory is never captured (including when the
    final point itself violates the tube).
    """
    if traj.dists is not None and traj.manifold_name == M.name:
        dists = traj.dists
    else:
        dists = np.asarray(M.dist(traj.points), dtype=float)
    violations = np.flatnonzero(dists > tube)
    if len(violations) == 0:
        return float(traj.times[0])
    last = violations[-1]
    if last + 1 >= len(traj.times):
        return None
    return float(traj.times[last + 1])


@dataclass
class VelocityReport:
    """Tail-speed diagnostics for essential velocity convergence."""

    fname: str
    tail_start: float
    tail_sup: float
    tail_mean: float
    energy: float
    eps: float
    essential_convergence: bool

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "tail_start": self.tail_start,
            "tail_sup_speed": self.tail_sup,
            "tail_mean_speed": self.tail_mean,
            "energy": self.energy,
            "eps": self.eps,
            "essential_convergence": self.essential_convergence,
        }


def velocity_diagnostics(traj: Trajectory, tail: float = 0.2, eps: float = 1e-2) -> VelocityReport:
    """Sup/mean speed over the trailing `tail` fraction of the time window,
    plus total discrete energy; flags essential convergence when the tail
    sup drops below eps."""
    if not 0.0 < tail <= 1.0:
        raise ConfigError("velocity_diagnostics needs tail in (0, 1]")
    t_end = float(traj.times[-1])
    t0 = t_end * (1.0 - tail)
    mask = traj.times >= t0
    # speeds on step k live on [t_k, t_{k+1}); drop the padded final entry
    sp = traj.speeds[:-1][mask[:-1]] if len(traj.speeds) > 1 else traj.speeds
    sup = float(sp.max()) if len(sp) else 0.0
    mean = float(sp.mean()) if len(sp) else 0.0
    return VelocityReport(
        fname=traj.fname,
        tail_start=t0,
        tail_sup=sup,
        tail_mean=mean,
        energy=traj.energy,
        eps=eps,
        essential_convergence=sup <= eps,
    )


@dataclass
class ComparisonReport:
    """Post-identification gap between a discrete flow and the Riemannian flow."""

    fname: str
    manifold: str
    h: float
    tube: float
    t_star: Optional[float]
    gap: float
    gap_per_h: float
    identified: bool

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "manifold": self.manifold,
            "h": self.h,
            "tube": self.tube,
            "t_star": self.t_star,
            "gap": self.gap,
            "gap_per_h": self.gap_per_h,
            "identified": self.identified,
        }


def compare_after_identification(
    f: FunctionModel,
    M: Manifold,
    traj: Trajectory,
    tube: float = DEFAULT_TUBE,
) -> ComparisonReport:
    """Restart the Riemannian flow from the projected iterate at the
    identification time and report the sup-norm gap to the discrete flow on
    the shared remaining grid."""
    t_star = identification_time(traj, M, tube)
    if t_star is None:
        return ComparisonReport(
            fname=f.name, manifold=M.name, h=traj.h, tube=tube,
            t_star=None, gap=math.inf, gap_per_h=math.inf, identified=False,
        )
    k_star = int(round(t_star / traj.h))
    remaining = float(traj.times[-1]) - t_star
    start = project(M, traj.points[k_star])
    if remaining <= 0.0:
        gap = float(np.linalg.norm(traj.points[k_star] - start))
        return ComparisonReport(
            fname=f.name, manifold=M.name, h=traj.h, tube=tube,
            t_star=t_star, gap=gap, gap_per_h=gap / traj.h, identified=True,
        )
    ref = integrate_riemannian(f, M, start, h=traj.h, T=remaining)
    m = len(ref.points)
    gap = float(np.max(np.linalg.norm(traj.points[k_star : k_star + m] - ref.points, axis=-1)))
    return ComparisonReport(
        fname=f.name, manifold=M.name, h=traj.h, tube=tube,
        t_star=t_star, gap=gap, gap_per_h=gap / traj.h, identified=True,
    )
