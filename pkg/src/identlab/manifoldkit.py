"""Smooth constraint manifolds: projection, tangent spaces, Riemannian gradients.

A manifold is given by a defining map G with surjective Jacobian near a
reference point (M = {G = 0} locally).  One-dimensional manifolds may carry a
parametrization, which unlocks arc-length quantities and plot polylines;
singletons (dim 0) are supported so isolated critical points can be treated
with the same machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ProjectionError

# On-manifold tolerance used as a precondition by tangent-space operations.
ON_MANIFOLD_TOL = 1e-8


@dataclass
class Param:
    """Parametrization of a one-dimensional manifold in the plane.

    gamma / dgamma accept scalars or 1-d arrays of parameter values and
    return points / velocity vectors with the parameter axis first.
    """

    gamma: Callable[[np.ndarray], np.ndarray]
    dgamma: Callable[[np.ndarray], np.ndarray]
    s_of: Callable[[np.ndarray], float]
    window: tuple[float, float] = (-2.0, 2.0)


@dataclass
class Manifold:
    """Locally defined smooth manifold {x : G(x) = 0}.

    Parameters
    ----------
    name : str
        Identifier used in reports and file outputs.
    dim : int
        Ambient dimension n.
    G : callable
        Defining map, (n,) -> (m,) with m = codim.
    JG : callable
        Jacobian of G, (n,) -> (m, n), surjective on the manifold near xbar.
    xbar : array
        Reference point on the manifold.
    radius : float
        Validity radius around xbar for projections.
    project_cf : callable, optional
        Closed-form nearest-point map; Gauss-Newton is used when absent.
    param : Param, optional
        Parametrization (one-dimensional manifolds only).
    """

    name: str
    dim: int
    G: Callable[[np.ndarray], np.ndarray]
    JG: Callable[[np.ndarray], np.ndarray]
    xbar: np.ndarray
    radius: float = 2.0
    project_cf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    param: Optional[Param] = None
    codim: int = field(default=0)

    def __post_init__(self):
        self.xbar = np.asarray(self.xbar, dtype=float)
        if self.codim == 0:
            self.codim = len(np.atleast_1d(self.G(self.xbar)))

    @property
    def dim_manifold(self) -> int:
        return self.dim - self.codim

    def dist(self, x) -> float | np.ndarray:
        """Euclidean distance to the manifold (single point or batch)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(np.linalg.norm(x - project(self, x)))
        return np.array([np.linalg.norm(p - project(self, p)) for p in x])

    def hug(self, center, r: float, off: float) -> np.ndarray:
        """Deterministic near-manifold points: dist == off, within the ball
        of radius r around center.  Used by liminf-style slope probes."""
        center = np.asarray(center, dtype=float)
        if self.dim_manifold == 0:
            ang = np.linspace(0.0, 2 * np.pi, 33)[:-1]
            if self.dim == 1:
                dirs = np.array([[1.0], [-1.0]])
            else:
                dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
            return self.xbar + off * dirs
        if self.param is None:
            return np.empty((0, self.dim))
        lo, hi = self.param.window
        svals = np.linspace(lo, hi, 257)
        pts = np.atleast_2d(self.param.gamma(svals))
        vel = np.atleast_2d(self.param.dgamma(svals))
        keep = np.linalg.norm(pts - center, axis=-1) <= max(r - off, 0.25 * r)
        pts, vel = pts[keep], vel[keep]
        if len(pts) == 0:
            return np.empty((0, self.dim))
        tang = vel / np.linalg.norm(vel, axis=-1, keepdims=True)
        normal = np.stack([-tang[:, 1], tang[:, 0]], axis=-1)
        return np.concatenate([pts + off * normal, pts - off * normal])


def project(M: Manifold, z, tol: float = 1e-12, maxit: int = 200) -> np.ndarray:
    """Nearest point on M to z.

    Uses the registered closed form when available (the parabola's nearest
    point reduces to a cubic), otherwise a Gauss-Newton loop alternating a
    feasibility restoration step with tangential descent toward z.  Exact
    ties are broken by the lexicographically largest candidate, so symmetric
    inputs resolve to the positive side deterministically.

    Raises
    ------
    ProjectionError
        If the iteration does not converge, or the result leaves the
        manifold's validity region around its reference point.
    """
    z = np.asarray(z, dtype=float)
    if M.dim_manifold == 0:
        return M.xbar.copy()
    if M.project_cf is not None:
        p = np.asarray(M.project_cf(z), dtype=float)
    else:
        p = z.copy()
        ok = False
        for _ in range(maxit):
            J = np.atleast_2d(M.JG(p))
            g = np.atleast_1d(M.G(p))
            JJt = J @ J.T
            p = p - J.T @ np.linalg.solve(JJt, g)
            J = np.atleast_2d(M.JG(p))
            r = p - z
            t = r - J.T @ np.linalg.solve(J @ J.T, J @ r)
            p = p - t
            if np.linalg.norm(np.atleast_1d(M.G(p))) <= tol and np.linalg.norm(t) <= tol:
                ok = True
                break
        if not ok:
            raise ProjectionError(f"projection onto {M.name} did not converge at z={z.tolist()}")
    if np.linalg.norm(p - M.xbar) > 2.0 * M.radius + np.linalg.norm(z - M.xbar):
        raise ProjectionError(f"projection onto {M.name} left its validity region")
    return p


def _lex_largest(cands: list[np.ndarray], dists: list[float], tol: float = 1e-12) -> np.ndarray:
    dmin = min(dists)
    tied = [c for c, d in zip(cands, dists) if d <= dmin + tol * (1.0 + dmin)]
    return max(tied, key=lambda c: tuple(c))


def parabola_project(z) -> np.ndarray:
    """Closed-form nearest point on {x2 = x1^2}, vectorized over (..., 2).

    Stationary parameters are the real roots of 2 s^3 + (1 - 2 z2) s - z1 = 0
    (Cardano / trigonometric form), polished by two Newton steps; exact
    distance ties resolve to the larger parameter, i.e. the lexicographically
    largest point."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    Z = z.reshape(-1, 2)
    z1, z2 = Z[:, 0], Z[:, 1]
    # depressed cubic s^3 + P s + Q with P = (1 - 2 z2)/2, Q = -z1/2
    P = 0.5 - z2
    Q = -0.5 * z1
    disc = 0.25 * Q * Q + P * P * P / 27.0
    one = disc > 0.0  # single real root
    sq = np.sqrt(np.where(one, disc, 1.0))
    r_single = np.cbrt(-0.5 * Q + sq) + np.cbrt(-0.5 * Q - sq)
    Psafe = np.where(one, -1.0, np.minimum(P, -1e-100))  # floor avoids underflow in P*m
    m = 2.0 * np.sqrt(-Psafe / 3.0)
    arg = np.clip(3.0 * Q / (Psafe * m), -1.0, 1.0)
    theta = np.arccos(arg)
    k = 2.0 * np.pi * np.arange(3.0)
    roots = np.where(
        one[:, None],
        r_single[:, None],
        m[:, None] * np.cos((theta[:, None] - k) / 3.0),
    )
    for _ in range(2):
        g = 2.0 * roots**3 + 2.0 * P[:, None] * roots - z1[:, None]
        gp = 6.0 * roots * roots + 2.0 * P[:, None]
        safe = np.where(gp == 0.0, 1.0, gp)
        roots = roots - np.where(gp != 0.0, g / safe, 0.0)
    d2 = (roots - z1[:, None]) ** 2 + (roots * roots - z2[:, None]) ** 2
    dmin = d2.min(axis=-1, keepdims=True)
    tied = d2 <= dmin + 1e-12 * (1.0 + dmin)
    s = np.where(tied, roots, -np.inf).max(axis=-1)
    out = np.stack([s, s * s], axis=-1)
    return out[0] if single else out.reshape(z.shape)


def parabola_manifold(radius: float = 4.0) -> Manifold:
    """The active parabola {x2 = x1^2} with its natural parametrization."""
    return Manifold(
        name="parabola",
        dim=2,
        G=lambda x: np.array([x[1] - x[0] ** 2]),
        JG=lambda x: np.array([[-2.0 * x[0], 1.0]]),
        xbar=np.zeros(2),
        radius=radius,
        project_cf=parabola_project,
        param=Param(
            gamma=lambda s: np.stack([np.asarray(s, dtype=float), np.asarray(s, dtype=float) ** 2], axis=-1),
            dgamma=lambda s: np.stack([np.ones_like(np.asarray(s, dtype=float)), 2.0 * np.asarray(s, dtype=float)], axis=-1),
            s_of=lambda x: float(x[0]),
            window=(-2.0, 2.0),
        ),
    )


def vertical_line_manifold(radius: float = 4.0) -> Manifold:
    """The coordinate line {u = 0} in the (u, v) plane."""
    return Manifold(
        name="line-u0",
        dim=2,
        G=lambda x: np.array([x[0]]),
        JG=lambda x: np.array([[1.0, 0.0]]),
        xbar=np.zeros(2),
        radius=radius,
        project_cf=lambda z: np.array([0.0, float(np.asarray(z)[1])]),
        param=Param(
            gamma=lambda s: np.stack([np.zeros_like(np.asarray(s, dtype=float)), np.asarray(s, dtype=float)], axis=-1),
            dgamma=lambda s: np.stack([np.zeros_like(np.asarray(s, dtype=float)), np.ones_like(np.asarray(s, dtype=float))], axis=-1),
            s_of=lambda x: float(x[1]),
            window=(-2.0, 2.0),
        ),
    )


def singleton_manifold(point, name: str = "singleton", radius: float = 2.0) -> Manifold:
    """A zero-dimensional manifold {point}; G = identity shift."""
    point = np.asarray(point, dtype=float)
    n = len(point)
    return Manifold(
        name=name,
        dim=n,
        G=lambda x, p=point: np.asarray(x, dtype=float) - p,
        JG=lambda x, n=n: np.eye(n),
        xbar=point,
        radius=radius,
        project_cf=lambda z, p=point: p.copy(),
    )


def _require_on_manifold(M: Manifold, x: np.ndarray):
    g = np.linalg.norm(np.atleast_1d(M.G(x)))
    if g > ON_MANIFOLD_TOL:
        raise DomainError(f"point {x.tolist()} is not on {M.name}: |G| = {g:.3e}")


def tangent_project(M: Manifold, x, v) -> np.ndarray:
    """Orthogonal projection of v onto the tangent space T_M(x).

    The tangent space is the null space of JG(x); x must satisfy
    |G(x)| <= 1e-8.  For a singleton the tangent space is {0}.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _require_on_manifold(M, x)
    J = np.atleast_2d(M.JG(x))
    return v - J.T @ np.linalg.solve(J @ J.T, J @ v)


def riem_grad(M: Manifold, ext_grad: Callable[[np.ndarray], np.ndarray], x) -> np.ndarray:
    """Riemannian gradient of a smooth extension: Proj_{T_M(x)} grad(x).

    ext_grad evaluates the ambient gradient of any C^2 extension of the
    restricted function; the tangential component is extension-independent.
    Requires |G(x)| <= 1e-8.
    """
    x = np.asarray(x, dtype=float)
    return tangent_project(M, x, np.asarray(ext_grad(x), dtype=float))


def intrinsic_ratio(M: Manifold, x, y) -> float:
    """Ratio of intrinsic (arc / chained-projection) distance to |x - y|.

    Parametrized manifolds integrate |gamma'| by Gauss-Legendre quadrature;
    otherwise the chord is subdivided, projected onto M, and measured as a
    polyline.  Coincident points give 1.0 by convention.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _require_on_manifold(M, x)
    _require_on_manifold(M, y)
    eu = float(np.linalg.norm(x - y))
    if eu == 0.0:
        return 1.0
    if M.param is not None:
        a, b = M.param.s_of(x), M.param.s_of(y)
        lo, hi = min(a, b), max(a, b)
        nodes, weights = np.polynomial.legendre.leggauss(64)
        s = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        speed = np.linalg.norm(np.atleast_2d(M.param.dgamma(s)), axis=-1)
        arc = 0.5 * (hi - lo) * float(weights @ speed)
        return arc / eu
    chord = np.linspace(0.0, 1.0, 257)[:, None]
    pts = np.array([project(M, (1 - t) * x + t * y) for t in chord[:, 0]])
    arc = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=-1)))
    return arc / eu
