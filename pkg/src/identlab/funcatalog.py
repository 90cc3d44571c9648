"""Catalog of nonsmooth test functions with exact variational metadata.

Each member packages a vectorized value oracle, an exact subdifferential
(as a vertex polytope), a closed-form slope where one exists, critical-point
metadata (active manifolds, identifiability moduli, smooth extensions), and
the projections onto its nonsmooth loci that the proximal machinery snaps to.

Values accept arrays of shape (n,) or (..., n); subdifferentials and slopes
are pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CatalogError, DomainError
from .manifoldkit import (
    Manifold,
    parabola_manifold,
    parabola_project,
    singleton_manifold,
    vertical_line_manifold,
)


@dataclass
class Polytope:
    """Convex polytope given by its vertices, one per row."""

    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if not np.all(np.isfinite(self.vertices)):
            raise CatalogError("polytope vertices must be finite")

    def __len__(self) -> int:
        return self.vertices.shape[0]

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


@dataclass
class DesingularizerSpec:
    """Desingularizing function phi: [0, tmax) -> [0, inf), phi(0)=0, phi' > 0."""

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    dphi: Callable[[np.ndarray], np.ndarray]
    tmax: float = math.inf

    def __call__(self, t):
        return self.phi(t)


def power_desingularizer(theta: float) -> DesingularizerSpec:
    """phi(t) = t**theta for theta in (0, 1]; theta = 1 - alpha for KL exponent alpha."""
    if not 0.0 < theta <= 1.0:
        raise CatalogError(f"power desingularizer needs theta in (0, 1], got {theta}")
    return DesingularizerSpec(
        name=f"power-{theta:g}",
        phi=lambda t: np.asarray(t, dtype=float) ** theta,
        dphi=lambda t: theta * np.asarray(t, dtype=float) ** (theta - 1.0),
    )


@dataclass
class SmoothMap:
    """C^2 map F: R^n -> R^m with Jacobian, used for amenable compositions."""

    F: Callable[[np.ndarray], np.ndarray]   # vectorized over (..., n)
    JF: Callable[[np.ndarray], np.ndarray]  # pointwise, (m, n)
    dim_in: int
    dim_out: int


@dataclass
class CriticalPoint:
    """A critical point with its (optional) active-manifold metadata."""

    point: np.ndarray
    manifold: Optional[Manifold] = None
    modulus: Optional[float] = None          # modulus of identifiability, when known
    ext_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None  # gradient of a smooth extension of f|_M
    note: str = ""

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float)


@dataclass
class FunctionModel:
    """A nonsmooth function on R^n with exact variational data.

    Attributes
    ----------
    value : callable
        Vectorized evaluation over the last axis.
    subdiff : callable
        x -> Polytope of subdifferential vertices.  Where the regular and
        limiting subdifferentials differ (min-type creases) the convex hull
        of the limiting one is stored; unbounded subdifferentials are stored
        truncated, preserving the min-norm element.
    analytic_slope : callable or None
        Closed-form descent slope |grad f|(x).
    domain : callable or None
        Domain indicator; None means all of R^n.
    inf_value : float or None
        Global infimum when finite and known; None when unbounded/unknown.
    alpha_bar : float or None
        Weak-convexity threshold: f + alpha_bar * |.|^2 is convex.
    pln : bool
        Whether the pointwise Lipschitz-like lower inequality holds with
        some finite coefficients on bounded sets.
    critical_points : list of CriticalPoint
    kinks : list of callables
        z -> nearest-point candidates on each nonsmooth locus; consumed by
        the proximal snapping step.
    """

    name: str
    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    subdiff: Callable[[np.ndarray], Polytope]
    analytic_slope: Optional[Callable[[np.ndarray], float]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    inf_value: Optional[float] = None
    alpha_bar: Optional[float] = None
    pln: bool = False
    critical_points: list[CriticalPoint] = field(default_factory=list)
    kinks: list[Callable[[np.ndarray], np.ndarray]] = field(default_factory=list)
    desc: str = ""

    def value_at(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def critical_point_on(self, M) -> CriticalPoint:
        """The registered critical point whose active manifold is M."""
        for cp in self.critical_points:
            if cp.manifold is not None and cp.manifold.name == getattr(M, "name", None):
                return cp
        raise CatalogError(f"{self.name} has no registered critical point on {getattr(M, 'name', M)!r}")

    def in_domain(self, x) -> bool:
        if self.domain is None:
            return True
        return bool(self.domain(np.asarray(x, dtype=float)))

    def require_domain(self, x):
        if not self.in_domain(x):
            raise DomainError(f"{self.name}: point {np.asarray(x).tolist()} outside domain")


def _seg_dist(a, b) -> float:
    # dist(0, conv{a, b})
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    dd = float(d @ d)
    t = 0.0 if dd == 0.0 else min(1.0, max(0.0, -float(a @ d) / dd))
    return float(np.linalg.norm(a + t * d))


# kink maps are vectorized over (..., n): the prox locus sweep batches them


class SnapMap:
    """Nearest-point map onto a nonsmooth locus, with an optional 1-d
    parametrization (gamma, s_of) that lets the prox sweep walk the locus
    by parameter instead of re-projecting tangent offsets."""

    def __init__(self, fn, gamma=None, s_of=None):
        self.fn = fn
        self.gamma = gamma
        self.s_of = s_of

    def __call__(self, z):
        return self.fn(z)


def _origin_kink(z):
    return np.zeros_like(np.asarray(z, dtype=float))


def _axis_u0_fn(z):
    z = np.asarray(z, dtype=float)
    return np.stack([np.zeros_like(z[..., 0]), z[..., 1]], axis=-1)


_axis_u0 = SnapMap(
    _axis_u0_fn,
    gamma=lambda s: np.stack([np.zeros_like(np.asarray(s, dtype=float)), np.asarray(s, dtype=float)], axis=-1),
    s_of=lambda p: float(p[1]),
)


# ---------------------------------------------------------------------------
# catalog members
# ---------------------------------------------------------------------------


def _paper_main() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        w = x[..., 1] - x[..., 0] ** 2
        return 5.0 * np.abs(w) + x[..., 0] ** 2

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        x1 = x[0]
        w = x[1] - x1 * x1
        if w > 0.0:
            return Polytope([[-8.0 * x1, 5.0]])
        if w < 0.0:
            return Polytope([[12.0 * x1, -5.0]])
        return Polytope([[-8.0 * x1, 5.0], [12.0 * x1, -5.0]])

    def slope(x):
        x = np.asarray(x, dtype=float)
        x1 = x[0]
        w = x[1] - x1 * x1
        if w > 0.0:
            return math.hypot(8.0 * x1, 5.0)
        if w < 0.0:
            return math.hypot(12.0 * x1, 5.0)
        return _seg_dist([-8.0 * x1, 5.0], [12.0 * x1, -5.0])

    M = parabola_manifold()
    return FunctionModel(
        name="paper-main",
        dim=2,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=0.0,
        alpha_bar=4.0,   # sup of quadratics with curvature >= -8
        pln=True,
        critical_points=[
            CriticalPoint(
                point=[0.0, 0.0],
                manifold=M,
                modulus=5.0,
                ext_grad=lambda x: np.array([-8.0 * x[0], 5.0]),  # grad of 5*x2 - 4*x1^2
                note="identifiable parabola; restriction behaves like s^2",
            )
        ],
        kinks=[
            SnapMap(
                parabola_project,
                gamma=lambda s: np.stack([np.asarray(s, dtype=float), np.asarray(s, dtype=float) ** 2], axis=-1),
                s_of=lambda p: float(p[0]),
            )
        ],
        desc="5|x2 - x1^2| + x1^2: weakly convex, identifiable parabola, min 0 at origin",
    )


def _abs_plus_square() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.abs(x[..., 0]) + x[..., 1] ** 2

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        if u > 0.0:
            return Polytope([[1.0, 2.0 * v]])
        if u < 0.0:
            return Polytope([[-1.0, 2.0 * v]])
        return Polytope([[-1.0, 2.0 * v], [1.0, 2.0 * v]])

    def slope(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        if u != 0.0:
            return math.hypot(1.0, 2.0 * v)
        return 2.0 * abs(v)  # stored directly rather than re-derived per call

    M = vertical_line_manifold()
    return FunctionModel(
        name="abs-plus-square",
        dim=2,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=0.0,
        alpha_bar=0.0,
        pln=True,
        critical_points=[
            CriticalPoint(
                point=[0.0, 0.0],
                manifold=M,
                modulus=1.0,
                ext_grad=lambda x: np.array([0.0, 2.0 * x[1]]),
                note="restriction v^2 on the axis u = 0",
            )
        ],
        kinks=[_axis_u0],
        desc="|u| + v^2: convex, identifiable line u = 0, min 0 at origin",
    )


def _sqrt_quartic() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(x[..., 0] ** 2 + x[..., 1] ** 4)

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        rho = math.sqrt(u * u + v**4)
        if rho == 0.0:
            # true subdifferential is a half-disk plus a strip; truncated
            # vertex set keeps the min-norm element (0 itself)
            return Polytope([[-1.0, 0.0], [1.0, 0.0]])
        return Polytope([[u / rho, 2.0 * v**3 / rho]])

    def slope(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        rho2 = u * u + v**4
        if rho2 == 0.0:
            return 0.0
        return math.sqrt((u * u + 4.0 * v**6) / rho2)

    return FunctionModel(
        name="sqrt-quartic",
        dim=2,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=0.0,
        alpha_bar=0.0,
        pln=True,
        critical_points=[CriticalPoint(point=[0.0, 0.0], note="no identifiable set: the axis u=0 is critical-adjacent but its modulus is 0")],
        kinks=[_origin_kink],
        desc="sqrt(u^2 + v^4): convex, C^1 off the origin, horn-shaped slow region",
    )


def _sqrt_abs() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.abs(x[..., 0]))

    def subdiff(x):
        t = float(np.asarray(x, dtype=float)[0])
        if t == 0.0:
            # subdifferential is all of R; truncated, min-norm element kept
            return Polytope([[-1.0], [1.0]])
        g = 0.5 / math.sqrt(abs(t))
        return Polytope([[g if t > 0 else -g]])

    def slope(x):
        t = float(np.asarray(x, dtype=float)[0])
        if t == 0.0:
            return 0.0
        return 0.5 / math.sqrt(abs(t))

    return FunctionModel(
        name="sqrt-abs",
        dim=1,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=0.0,
        alpha_bar=None,  # not weakly convex: curvature blows down at 0+
        pln=False,
        critical_points=[
            CriticalPoint(
                point=[0.0],
                manifold=singleton_manifold([0.0], name="origin-1d"),
                modulus=math.inf,
                ext_grad=lambda x: np.zeros(1),
                note="identifiable singleton; off-set slope blows up like 1/(2 sqrt|x|)",
            )
        ],
        kinks=[_origin_kink],
        desc="sqrt|x|: sharp minimum at 0 with unbounded outer slope",
    )


def _min_linear() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.minimum(x[..., 0], 0.0)

    def subdiff(x):
        t = float(np.asarray(x, dtype=float)[0])
        if t < 0.0:
            return Polytope([[1.0]])
        if t > 0.0:
            return Polytope([[0.0]])
        return Polytope([[0.0], [1.0]])  # hull of the limiting subdifferential

    def slope(x):
        t = float(np.asarray(x, dtype=float)[0])
        return 1.0 if t <= 0.0 else 0.0

    return FunctionModel(
        name="min-linear",
        dim=1,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=None,  # unbounded below
        alpha_bar=None,
        pln=False,
        critical_points=[CriticalPoint(point=[0.0], note="critical via the limiting subdifferential only")],
        kinks=[_origin_kink],
        desc="min(x, 0): concave kink, the half-line x >= 0 is critical",
    )


def _min_uv() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.minimum(np.abs(x[..., 0]) - x[..., 1], 0.0)

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        p = abs(u) - v
        if p > 0.0:  # strictly inside the zero region
            return Polytope([[0.0, 0.0]])
        su = math.copysign(1.0, u) if u != 0.0 else 0.0
        if p < 0.0:  # active branch |u| - v
            if u != 0.0:
                return Polytope([[su, -1.0]])
            return Polytope([[-1.0, -1.0], [1.0, -1.0]])
        # min-crossing: hull of the limiting subdifferential
        if u != 0.0:
            return Polytope([[0.0, 0.0], [su, -1.0]])
        return Polytope([[0.0, 0.0], [1.0, -1.0], [-1.0, -1.0]])  # origin

    def slope(x):
        x = np.asarray(x, dtype=float)
        u, v = x[0], x[1]
        p = abs(u) - v
        if p > 0.0:
            return 0.0
        if u != 0.0:
            return math.sqrt(2.0)
        return 1.0 if v >= 0.0 else 0.0

    def _cone_right(z):
        z = np.asarray(z, dtype=float)
        t = np.maximum(0.5 * (z[..., 0] + z[..., 1]), 0.0)
        return np.stack([t, t], axis=-1)

    def _cone_left(z):
        z = np.asarray(z, dtype=float)
        t = np.minimum(0.5 * (z[..., 0] - z[..., 1]), 0.0)
        return np.stack([t, -t], axis=-1)

    def _axis(z):
        z = np.asarray(z, dtype=float)
        return np.stack([np.zeros_like(z[..., 0]), np.maximum(z[..., 1], 0.0)], axis=-1)

    return FunctionModel(
        name="min-uv",
        dim=2,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=None,  # -> -inf as v grows
        alpha_bar=None,
        pln=False,
        critical_points=[CriticalPoint(point=[0.0, 0.0], note="critical; every point below the cone v = |u| is critical too")],
        kinks=[
            SnapMap(
                _cone_right,
                gamma=lambda s: np.stack([np.asarray(s, dtype=float), np.asarray(s, dtype=float)], axis=-1),
                s_of=lambda p: float(p[0]),
            ),
            SnapMap(
                _cone_left,
                gamma=lambda s: np.stack([np.asarray(s, dtype=float), -np.asarray(s, dtype=float)], axis=-1),
                s_of=lambda p: float(p[0]),
            ),
            SnapMap(
                _axis,
                gamma=lambda s: np.stack([np.zeros_like(np.asarray(s, dtype=float)), np.asarray(s, dtype=float)], axis=-1),
                s_of=lambda p: float(p[1]),
            ),
            _origin_kink,
        ],
        desc="min(|u| - v, 0): min-type nonconvexity along the cone v = |u|",
    )


_MAXAFFINE_GRADS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])


def _max_affine_demo() -> FunctionModel:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.maximum.reduce([x[..., 0], x[..., 1], -x[..., 0] - x[..., 1]])

    def _active(x):
        vals = np.array([x[0], x[1], -x[0] - x[1]])
        return np.flatnonzero(vals == vals.max())

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        return Polytope(_MAXAFFINE_GRADS[_active(x)])

    def slope(x):
        x = np.asarray(x, dtype=float)
        act = _active(x)
        if len(act) == 3:
            return 0.0
        if len(act) == 1:
            return float(np.linalg.norm(_MAXAFFINE_GRADS[act[0]]))
        return _seg_dist(_MAXAFFINE_GRADS[act[0]], _MAXAFFINE_GRADS[act[1]])

    def _tie12(z):
        z = np.asarray(z, dtype=float)
        t = 0.5 * (z[..., 0] + z[..., 1])
        return np.stack([t, t], axis=-1)

    def _tie13(z):
        z = np.asarray(z, dtype=float)
        c = (2.0 * z[..., 0] + z[..., 1]) / 5.0
        return z - c[..., None] * np.array([2.0, 1.0])

    def _tie23(z):
        z = np.asarray(z, dtype=float)
        c = (z[..., 0] + 2.0 * z[..., 1]) / 5.0
        return z - c[..., None] * np.array([1.0, 2.0])

    return FunctionModel(
        name="max-affine-demo",
        dim=2,
        value=value,
        subdiff=subdiff,
        analytic_slope=slope,
        inf_value=0.0,
        alpha_bar=0.0,
        pln=True,
        critical_points=[
            CriticalPoint(
                point=[0.0, 0.0],
                manifold=singleton_manifold([0.0, 0.0], name="origin-2d"),
                modulus=1.0 / math.sqrt(5.0),
                ext_grad=lambda x: np.zeros(2),
                note="polyhedral sharp minimum; modulus attained along two-piece ties",
            )
        ],
        kinks=[
            SnapMap(
                _tie12,
                gamma=lambda s: np.stack([np.asarray(s, dtype=float), np.asarray(s, dtype=float)], axis=-1),
                s_of=lambda p: float(p[0]),
            ),
            SnapMap(
                _tie13,
                gamma=lambda s: np.asarray(s, dtype=float)[..., None] * np.array([1.0, -2.0]),
                s_of=lambda p: float(p[0]),
            ),
            SnapMap(
                _tie23,
                gamma=lambda s: np.asarray(s, dtype=float)[..., None] * np.array([-2.0, 1.0]),
                s_of=lambda p: float(p[1]),
            ),
            _origin_kink,
        ],
        desc="max(x1, x2, -x1-x2): polyhedral, sharp at the origin",
    )


_BUILDERS = {
    "paper-main": _paper_main,
    "abs-plus-square": _abs_plus_square,
    "sqrt-quartic": _sqrt_quartic,
    "sqrt-abs": _sqrt_abs,
    "min-linear": _min_linear,
    "min-uv": _min_uv,
    "max-affine-demo": _max_affine_demo,
}


def catalog_names() -> list[str]:
    return sorted(_BUILDERS)


def catalog_get(name: str) -> FunctionModel:
    """Build a fresh catalog member by name; unknown names raise CatalogError."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise CatalogError(f"unknown catalog member {name!r}; known: {', '.join(catalog_names())}") from None
    return builder()


def catalog_manifest() -> dict:
    """Machine-readable catalog summary (dims, minima, manifolds, flags)."""
    out = {}
    for name in catalog_names():
        f = catalog_get(name)
        out[name] = {
            "dim": f.dim,
            "inf_value": f.inf_value,
            "alpha_bar": f.alpha_bar,
            "pln": f.pln,
            "desc": f.desc,
            "critical_points": [
                {
                    "point": cp.point.tolist(),
                    "manifold": cp.manifold.name if cp.manifold is not None else None,
                    "modulus": cp.modulus,
                    "note": cp.note,
                }
                for cp in f.critical_points
            ],
        }
    return out


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def compose_amenable(g: FunctionModel, F: SmoothMap, name: Optional[str] = None) -> FunctionModel:
    """Composite g(F(x)) for convex g and C^2 F: value and chain-rule
    subdifferential JF(x)^T * subdiff(g)(F(x))."""
    if F.dim_out != g.dim:
        raise CatalogError(f"smooth map range dim {F.dim_out} != {g.name} dim {g.dim}")

    def value(x):
        return g.value(F.F(np.asarray(x, dtype=float)))

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        inner = g.subdiff(np.asarray(F.F(x), dtype=float))
        J = np.atleast_2d(F.JF(x))
        return Polytope(inner.vertices @ J)

    return FunctionModel(
        name=name or f"{g.name}-composed",
        dim=F.dim_in,
        value=value,
        subdiff=subdiff,
        domain=None if g.domain is None else (lambda x: g.domain(np.asarray(F.F(x), dtype=float))),
        pln=g.pln,
        desc=f"amenable composition of {g.name} with a smooth map",
    )


def localize(f: FunctionModel, delta: float, center=None) -> FunctionModel:
    """f plus the smooth localization bump: zero on |x - c| <= delta,
    (|x-c|^2 - delta^2)^3 / (4 delta^2 - |x-c|^2) on the annulus, +inf outside
    |x - c| < 2 delta.  Matches f near the center, coercive at the rim."""
    if delta <= 0.0:
        raise CatalogError("localize needs delta > 0")
    c = np.zeros(f.dim) if center is None else np.asarray(center, dtype=float)
    d2 = delta * delta

    def bump(x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum((x - c) ** 2, axis=-1)
        out = np.where(r2 >= 4.0 * d2, np.inf, 0.0)
        ann = (r2 > d2) & (r2 < 4.0 * d2)
        r2a = np.where(ann, r2, 2.0 * d2)  # dummy safe values off the annulus
        out = np.where(ann, (r2a - d2) ** 3 / (4.0 * d2 - r2a), out)
        return out

    def bump_grad(x):
        x = np.asarray(x, dtype=float)
        r2 = float(np.sum((x - c) ** 2))
        if r2 <= d2:
            return np.zeros(f.dim)
        if r2 >= 4.0 * d2:
            raise DomainError("localized model: gradient outside the domain")
        q = 4.0 * d2 - r2
        gp = (3.0 * (r2 - d2) ** 2 * q + (r2 - d2) ** 3) / (q * q)
        return 2.0 * gp * (x - c)

    def value(x):
        return f.value(x) + bump(x)

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        return Polytope(f.subdiff(x).vertices + bump_grad(x))

    def domain(x):
        x = np.asarray(x, dtype=float)
        inside = float(np.sum((x - c) ** 2)) < 4.0 * d2
        return inside and f.in_domain(x)

    keep = [
        cp for cp in f.critical_points
        if np.linalg.norm(cp.point - c) < delta
    ]
    return FunctionModel(
        name=f"{f.name}-local",
        dim=f.dim,
        value=value,
        subdiff=subdiff,
        domain=domain,
        inf_value=f.inf_value if any(
            f.inf_value is not None and abs(f.value_at(cp.point) - f.inf_value) == 0.0 for cp in keep
        ) else None,
        alpha_bar=None,  # the bump's curvature is unbounded near the rim
        pln=f.pln,
        critical_points=keep,
        kinks=list(f.kinks),
        desc=f"{f.desc} (localized at radius {delta:g})",
    )


def add_smooth(
    f: FunctionModel,
    h: Callable[[np.ndarray], np.ndarray],
    grad_h: Callable[[np.ndarray], np.ndarray],
    name: Optional[str] = None,
    hess_lower_bound: Optional[float] = None,
) -> FunctionModel:
    """f + h for C^2 h (vectorized h, pointwise grad_h).  Subdifferentials
    shift by grad_h; the weak-convexity threshold shifts by the Hessian's
    lower bound when one is supplied."""

    def value(x):
        return f.value(x) + h(np.asarray(x, dtype=float))

    def subdiff(x):
        x = np.asarray(x, dtype=float)
        return Polytope(f.subdiff(x).vertices + np.asarray(grad_h(x), dtype=float))

    ab = None
    if f.alpha_bar is not None and hess_lower_bound is not None:
        ab = f.alpha_bar + max(0.0, -hess_lower_bound) / 2.0
    return FunctionModel(
        name=name or f"{f.name}+smooth",
        dim=f.dim,
        value=value,
        subdiff=subdiff,
        domain=f.domain,
        alpha_bar=ab,
        pln=f.pln,
        kinks=list(f.kinks),
        desc=f"{f.desc} plus a smooth term",
    )


# ---------------------------------------------------------------------------
# horn regions: {(u, v): |u| <= alpha v^2}
# ---------------------------------------------------------------------------


class HornRegion:
    """The set {(u, v): |u| <= alpha * v^2} (the critical axis when alpha = 0).

    Provides exact Euclidean distance (stationary parameters of the boundary
    arms solve a cubic) and deterministic near-boundary sample points for
    liminf-style probes.
    """

    def __init__(self, alpha: float):
        if alpha < 0.0:
            raise CatalogError("horn region needs alpha >= 0")
        self.alpha = float(alpha)
        self.name = f"horn-{alpha:g}"

    def _dist_one(self, u: float, v: float) -> float:
        a = self.alpha
        if abs(u) <= a * v * v:
            return 0.0
        if a == 0.0:
            return abs(u)
        best = math.hypot(u, v)  # origin candidate
        for arm in (+1.0, -1.0):
            # boundary arm (arm * a s^2, s); stationary s solves the cubic
            coeffs = [2.0 * a * a, 0.0, 1.0 - 2.0 * a * arm * u, -v]
            for rt in np.roots(coeffs):
                if abs(rt.imag) > 1e-9 * (1.0 + abs(rt.real)):
                    continue
                s = float(rt.real)
                best = min(best, math.hypot(u - arm * a * s * s, v - s))
        return best

    def dist(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return self._dist_one(float(x[0]), float(x[1]))
        return np.array([self._dist_one(float(p[0]), float(p[1])) for p in x])

    def hug(self, center, r: float, off: float) -> np.ndarray:
        """Outward boundary offsets at distance off, swept within the ball."""
        center = np.asarray(center, dtype=float)
        a = self.alpha
        svals = np.linspace(-1.5 * r + center[1], 1.5 * r + center[1], 257)
        pts = []
        for arm in (+1.0, -1.0):
            b = np.stack([arm * a * svals**2, svals], axis=-1)
            tang = np.stack([2.0 * a * arm * svals, np.ones_like(svals)], axis=-1)
            tang = tang / np.linalg.norm(tang, axis=-1, keepdims=True)
            normal = np.stack([tang[:, 1], -tang[:, 0]], axis=-1)
            # orient outward: away from the region's interior (larger |u|)
            sgn = np.where(normal[:, 0] * arm >= 0.0, 1.0, -1.0)
            pts.append(b + off * sgn[:, None] * normal)
        out = np.concatenate(pts)
        keep = np.linalg.norm(out - center, axis=-1) <= r
        return out[keep]
