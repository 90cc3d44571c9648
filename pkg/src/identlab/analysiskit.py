"""Growth, transfer, KL, and lower-quadratic (PLN) diagnostics.

Everything here is a sampled surrogate for a variational statement: linear
growth off an identifiable set, optimality transfer onto it, quadratic
growth rate equality, desingularized slope (KL) bounds, and the one-sided
quadratic minorant whose failure certifies a genuinely bad function.
Samplers are deterministic (seeded where random), so reports reproduce
bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyProbeError
from .funcatalog import DesingularizerSpec, FunctionModel
from .manifoldkit import Manifold, project, riem_grad
from .slopekit import ball_points, limiting_slope, sphere_directions


# ---------------------------------------------------------------------------
# growth and transfer
# ---------------------------------------------------------------------------


@dataclass
class GrowthReport:
    """Margins of a growth inequality over a sample set (>= -slack passes)."""

    fname: str
    kind: str               # "linear-growth" | "sharp"
    param: float            # epsilon of the growth inequality
    n_samples: int
    worst_margin: float
    slack: float = 1e-9
    per_radius: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.slack

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "kind": self.kind,
            "epsilon": self.param,
            "n_samples": self.n_samples,
            "worst_margin": self.worst_margin,
            "slack": self.slack,
            "per_radius": {k: float(v) for k, v in self.per_radius.items()},
            "passed": self.passed,
        }


def linear_growth_witness(f: FunctionModel, M: Manifold, xs, eps: float) -> GrowthReport:
    """Check f(proj_M x) + eps * d(x, M) <= f(x) at the given points.

    This is the linear-growth/identifiability witness: any eps below the
    modulus of identifiability must pass near the critical point.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    margins = []
    for x in xs:
        v = project(M, x)
        margins.append(f.value_at(x) - f.value_at(v) - eps * float(np.linalg.norm(x - v)))
    margins = np.asarray(margins)
    return GrowthReport(
        fname=f.name, kind="linear-growth", param=eps,
        n_samples=len(xs), worst_margin=float(margins.min()) if len(margins) else math.inf,
    )


def sharp_checks(f: FunctionModel, xbar, eps: float, r: float, n_directions: int = 256) -> GrowthReport:
    """Sharp-minimum check: f(x) >= f(xbar) + eps * |x - xbar| on shells
    at radii r * {1, 1/2, 1/4, 1/8}."""
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    dirs = sphere_directions(f.dim, n_directions)
    per_radius = {}
    worst = math.inf
    total = 0
    for fac in (1.0, 0.5, 0.25, 0.125):
        rr = r * fac
        pts = xbar + rr * dirs
        vals = np.asarray(f.value(pts), dtype=float)
        margins = vals - fbar - eps * rr
        per_radius[f"{rr:g}"] = float(margins.min())
        worst = min(worst, float(margins.min()))
        total += len(pts)
    return GrowthReport(
        fname=f.name, kind="sharp", param=eps, n_samples=total,
        worst_margin=worst, per_radius=per_radius,
    )


@dataclass
class TransferReport:
    """Sampled local-optimality verdicts for f and its restriction to M."""

    fname: str
    manifold: str
    r: float
    fbar: float
    min_full: float
    min_restricted: float
    full_local_min: bool
    restricted_local_min: bool
    strict_full: bool
    strict_restricted: bool

    @property
    def agree(self) -> bool:
        return self.full_local_min == self.restricted_local_min

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "manifold": self.manifold,
            "r": self.r,
            "fbar": self.fbar,
            "min_full": self.min_full,
            "min_restricted": self.min_restricted,
            "full_local_min": self.full_local_min,
            "restricted_local_min": self.restricted_local_min,
            "strict_full": self.strict_full,
            "strict_restricted": self.strict_restricted,
            "agree": self.agree,
        }


def _on_manifold_samples(M: Manifold, xbar: np.ndarray, r: float, n: int = 257) -> np.ndarray:
    """Points of M within the r-ball around xbar (parametrized manifolds);
    empty for singletons (no nontrivial restriction to sample)."""
    if M.dim_manifold == 0 or M.param is None:
        return np.empty((0, len(xbar)))
    s0 = M.param.s_of(project(M, xbar))
    sv = s0 + np.linspace(-2.0 * r, 2.0 * r, n)
    pts = np.atleast_2d(M.param.gamma(sv))
    keep = (np.linalg.norm(pts - xbar, axis=-1) <= r) & (np.linalg.norm(pts - xbar, axis=-1) > 0.0)
    return pts[keep]


def optimality_transfer(f: FunctionModel, M: Manifold, xbar, r: float) -> TransferReport:
    """Compare 'xbar locally minimizes f' with 'xbar locally minimizes f|_M'
    by sampled minima over the r-ball and over M's r-patch.  For an
    identifiable manifold the two verdicts agree."""
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    tol = 1e-12 * (1.0 + abs(fbar))
    full = ball_points(xbar, r, f.dim)
    vals_full = np.asarray(f.value(full), dtype=float)
    on_m = _on_manifold_samples(M, xbar, r)
    vals_m = np.asarray(f.value(on_m), dtype=float) if len(on_m) else np.array([math.inf])
    min_full = float(vals_full.min())
    min_m = float(vals_m.min())
    return TransferReport(
        fname=f.name, manifold=M.name, r=r, fbar=fbar,
        min_full=min_full, min_restricted=min_m,
        full_local_min=min_full >= fbar - tol,
        restricted_local_min=min_m >= fbar - tol,
        strict_full=min_full > fbar + tol,
        strict_restricted=min_m > fbar + tol,
    )


@dataclass
class QuadraticGrowthRates:
    """Quadratic growth rates of f (alpha) and f|_M (beta) at xbar.

    Iterates as (alpha, beta) so callers can unpack the pair directly.
    """

    fname: str
    manifold: str
    r: float
    alpha: float
    beta: float

    @property
    def gap(self) -> float:
        return abs(self.alpha - self.beta)

    def __iter__(self):
        return iter((self.alpha, self.beta))

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "manifold": self.manifold,
            "r": self.r,
            "alpha_full": self.alpha,
            "beta_restricted": self.beta,
            "gap": self.gap,
        }


def quadratic_growth_rates(f: FunctionModel, M: Manifold, xbar, r: float) -> QuadraticGrowthRates:
    """Empirical quadratic growth rates at radius r:
    alpha = min (f - fbar)/|x - xbar|^2 over ball samples (enriched with
    their projections onto M — the tight directions hug the manifold),
    beta = the same minimum over M's own patch."""
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    pts = ball_points(xbar, r, f.dim)
    proj = []
    for p in pts:
        q = project(M, p)
        if 0.0 < np.linalg.norm(q - xbar) <= r:
            proj.append(q)
    on_m = _on_manifold_samples(M, xbar, r)
    full = np.concatenate([pts, np.atleast_2d(np.array(proj))] if proj else [pts])
    if len(on_m):
        full = np.concatenate([full, on_m])

    def rate(sample):
        if len(sample) == 0:
            return math.inf
        d2 = np.sum((sample - xbar) ** 2, axis=-1)
        keep = d2 > (1e-9 * r) ** 2
        if not keep.any():
            return math.inf
        vals = np.asarray(f.value(sample[keep]), dtype=float)
        return float(np.min((vals - fbar) / d2[keep]))

    return QuadraticGrowthRates(
        fname=f.name, manifold=M.name, r=r, alpha=rate(full), beta=rate(on_m),
    )


# ---------------------------------------------------------------------------
# KL probes
# ---------------------------------------------------------------------------


@dataclass
class KLReport:
    """min phi'(f - fbar) * slope over admissible samples near xbar."""

    fname: str
    phi_name: str
    delta: float
    modulus: float
    n_samples: int
    restricted: Optional[str] = None   # manifold name when probing f|_M
    note: str = ""
    samples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "phi": self.phi_name,
            "delta": self.delta,
            "modulus": self.modulus,
            "n_samples": self.n_samples,
            "restricted": self.restricted,
            "note": self.note,
            "samples": self.samples[:200],
        }


def _riem_slope(f: FunctionModel, M: Manifold, p: np.ndarray) -> float:
    cp = f.critical_point_on(M)
    return float(np.linalg.norm(riem_grad(M, cp.ext_grad, p)))


def _kl_arc_samples(M: Manifold, xbar: np.ndarray, delta: float, n: int = 20) -> np.ndarray:
    s0 = M.param.s_of(project(M, xbar))
    offs = delta * 2.0 ** (-np.arange(n) / 2.0)
    sv = np.concatenate([s0 + offs, s0 - offs])
    pts = np.atleast_2d(M.param.gamma(sv))
    keep = np.linalg.norm(pts - xbar, axis=-1) <= delta
    return pts[keep]


def kl_probe(
    f: FunctionModel,
    xbar,
    phi: DesingularizerSpec,
    delta: float,
    M: Optional[Manifold] = None,
) -> KLReport:
    """KL modulus probe: the minimum of phi'(f(x) - f(xbar)) * slope(x) over
    samples with f(x) > f(xbar) in the delta-ball.

    With M supplied the probe restricts to the manifold and uses the
    Riemannian slope.  A singleton manifold admits no samples above the
    critical value: the restricted KL property holds vacuously and the
    modulus is reported as +inf.
    """
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    recorded = []
    if M is not None:
        if M.dim_manifold == 0:
            return KLReport(
                fname=f.name, phi_name=phi.name, delta=delta, modulus=math.inf,
                n_samples=0, restricted=M.name,
                note="vacuous: singleton manifold has no points above the critical value",
            )
        pts = _kl_arc_samples(M, xbar, delta)
        slopes = [_riem_slope(f, M, p) for p in pts]
    else:
        pts = ball_points(xbar, delta, f.dim, k=128)
        slopes = [limiting_slope(f, p) for p in pts]
    modulus = math.inf
    n_used = 0
    for p, s in zip(pts, slopes):
        gap = f.value_at(p) - fbar
        if gap <= 0.0 or not math.isfinite(s):
            continue
        prod = float(phi.dphi(gap)) * s
        n_used += 1
        recorded.append({"point": [float(c) for c in p], "gap": gap, "slope": s, "product": prod})
        modulus = min(modulus, prod)
    if n_used == 0:
        raise EmptyProbeError(f"kl probe on {f.name} at delta={delta:g} found no samples above the critical value")
    recorded.sort(key=lambda d: d["product"])
    return KLReport(
        fname=f.name, phi_name=phi.name, delta=delta, modulus=modulus,
        n_samples=n_used, restricted=M.name if M is not None else None, samples=recorded,
    )


@dataclass
class KLEquivalenceReport:
    """KL moduli of f, f|_M, and f + indicator(M), with pairwise verdicts."""

    fname: str
    manifold: str
    phi_name: str
    delta: float
    modulus_full: float
    modulus_restricted: float
    modulus_indicator: float
    threshold: float = 1e-3

    def _pos(self, v: float) -> bool:
        return v > self.threshold

    @property
    def verdicts(self) -> dict:
        pairs = {
            "full-vs-restricted": (self.modulus_full, self.modulus_restricted),
            "full-vs-indicator": (self.modulus_full, self.modulus_indicator),
            "restricted-vs-indicator": (self.modulus_restricted, self.modulus_indicator),
        }
        return {k: self._pos(a) == self._pos(b) for k, (a, b) in pairs.items()}

    @property
    def all_positive(self) -> bool:
        return all(self._pos(v) for v in (self.modulus_full, self.modulus_restricted, self.modulus_indicator))

    @property
    def agree(self) -> bool:
        return all(self.verdicts.values())

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "manifold": self.manifold,
            "phi": self.phi_name,
            "delta": self.delta,
            "modulus_full": self.modulus_full,
            "modulus_restricted": self.modulus_restricted,
            "modulus_indicator": self.modulus_indicator,
            "verdicts": self.verdicts,
            "all_positive": self.all_positive,
            "agree": self.agree,
        }


def kl_equivalence_check(
    f: FunctionModel,
    M: Manifold,
    xbar,
    phi: DesingularizerSpec,
    delta: float,
) -> KLEquivalenceReport:
    """Probe the KL modulus three ways — the full function, its restriction
    to M (Riemannian slope), and f plus the indicator of M (ambient
    difference-quotient slope over M samples) — and report whether the
    positivity verdicts agree."""
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    full = kl_probe(f, xbar, phi, delta).modulus
    restricted = kl_probe(f, xbar, phi, delta, M=M).modulus

    if M.dim_manifold == 0 or M.param is None:
        indicator = math.inf  # vacuous alongside the restricted probe
    else:
        pts = _kl_arc_samples(M, xbar, delta, n=24)
        base = np.concatenate([pts, xbar[None, :]])
        vals = np.asarray(f.value(base), dtype=float)
        indicator = math.inf
        for i in range(len(pts)):
            gap = vals[i] - fbar
            if gap <= 0.0:
                continue
            diffs = np.linalg.norm(base - base[i], axis=-1)
            drop = vals[i] - vals
            ok = diffs > 0.0
            slope = float(np.max(np.maximum(drop[ok], 0.0) / diffs[ok]))
            if slope > 0.0:
                indicator = min(indicator, float(phi.dphi(gap)) * slope)
    return KLEquivalenceReport(
        fname=f.name, manifold=M.name, phi_name=phi.name, delta=delta,
        modulus_full=full, modulus_restricted=restricted, modulus_indicator=indicator,
    )


def kl_exponent_estimate(
    f: FunctionModel,
    xbar,
    delta: float,
    M: Optional[Manifold] = None,
    n: int = 20,
) -> tuple[float, float]:
    """Least-squares KL exponent: fit log(slope) = a log(f - fbar) + b over
    a log-spaced sample fan and return (a, rms residual).

    With M the samples run along the manifold with Riemannian slopes.
    Requires at least 10 usable samples.
    """
    xbar = np.asarray(xbar, dtype=float)
    fbar = f.value_at(xbar)
    if M is not None and M.dim_manifold > 0 and M.param is not None:
        pts = _kl_arc_samples(M, xbar, delta, n=n)
        slopes = [_riem_slope(f, M, p) for p in pts]
    else:
        dirs = sphere_directions(f.dim, 32)
        radii = delta * 2.0 ** (-np.arange(n) / 2.0)
        pts = (xbar + radii[:, None, None] * dirs[None, :, :]).reshape(-1, f.dim)
        slopes = [limiting_slope(f, p) for p in pts]
    lg, ls = [], []
    for p, s in zip(pts, slopes):
        gap = f.value_at(p) - fbar
        if gap > 1e-300 and math.isfinite(s) and s > 0.0:
            lg.append(math.log(gap))
            ls.append(math.log(s))
    if len(lg) < 10:
        raise EmptyProbeError(f"kl exponent estimate on {f.name}: only {len(lg)} usable samples (need 10)")
    A = np.stack([np.asarray(lg), np.ones(len(lg))], axis=-1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(ls), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.asarray(ls)) ** 2)))
    return float(coef[0]), resid


# ---------------------------------------------------------------------------
# PLN
# ---------------------------------------------------------------------------


def pln_ratio(f: FunctionModel, x, xp, y) -> float:
    """rho = (f(x) + <y, xp - x> - f(xp)) / ((1 + |y|) |xp - x|^2): the
    smallest curvature scale at which the quadratic minorant from (x, y)
    fails toward xp.  Positive and exploding means no PLN."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    y = np.asarray(y, dtype=float)
    d2 = float(np.sum((xp - x) ** 2))
    if d2 == 0.0:
        raise EmptyProbeError("pln_ratio needs xp != x")
    num = f.value_at(x) + float(y @ (xp - x)) - f.value_at(xp)
    return num / ((1.0 + float(np.linalg.norm(y))) * d2)


@dataclass
class PLNReport:
    """Max PLN ratio over sampled (x, x', y) triples, bucketed by |x' - x|."""

    fname: str
    center: np.ndarray
    radius: float
    n_triples: int
    rho_max: float
    buckets: list          # (scale_lo, scale_hi, count, max_rho)
    seed: int
    min_sep: float

    def to_json(self) -> dict:
        return {
            "function": self.fname,
            "center": [float(c) for c in self.center],
            "radius": self.radius,
            "n_triples": self.n_triples,
            "rho_max": self.rho_max,
            "buckets": [
                {"scale_lo": lo, "scale_hi": hi, "count": c, "max_rho": m}
                for (lo, hi, c, m) in self.buckets
            ],
            "seed": self.seed,
            "min_sep": self.min_sep,
        }


def pln_check(
    f: FunctionModel,
    center,
    radius: float,
    budget: int = 10000,
    seed: int = 0,
    min_sep: float = 3e-3,
) -> PLNReport:
    """Sample at least `budget` triples (x, x', y in subdiff f(x)) in the
    ball and report the maximal rho = pln_ratio.

    Pairs closer than min_sep are rejected: below that scale float roundoff
    in the numerator is no longer negligible against |x' - x|^2.
    """
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    n_triples = 0
    rho_max = -math.inf
    edges = np.geomspace(min_sep, 2.0 * radius, 7)
    counts = np.zeros(6, dtype=int)
    maxima = np.full(6, -math.inf)
    guard = 0
    while n_triples < budget and guard < 200:
        guard += 1
        m = 2048
        x = center + radius * _ball(rng, m, f.dim)
        xp = center + radius * _ball(rng, m, f.dim)
        sep = np.linalg.norm(xp - x, axis=-1)
        ok = sep >= min_sep
        for xi, xpi, si in zip(x[ok], xp[ok], sep[ok]):
            if not (f.in_domain(xi) and f.in_domain(xpi)):
                continue
            fx = f.value_at(xi)
            fxp = f.value_at(xpi)
            for y in f.subdiff(xi).vertices:
                num = fx + float(y @ (xpi - xi)) - fxp
                rho = num / ((1.0 + float(np.linalg.norm(y))) * si * si)
                n_triples += 1
                rho_max = max(rho_max, rho)
                b = min(int(np.searchsorted(edges, si, side="right")) - 1, 5)
                counts[b] += 1
                maxima[b] = max(maxima[b], rho)
            if n_triples >= budget:
                break
    buckets = [
        (float(edges[i]), float(edges[i + 1]), int(counts[i]), float(maxima[i]))
        for i in range(6)
    ]
    return PLNReport(
        fname=f.name, center=center, radius=radius, n_triples=n_triples,
        rho_max=float(rho_max), buckets=buckets, seed=seed, min_sep=min_sep,
    )


def _ball(rng: np.random.Generator, m: int, dim: int) -> np.ndarray:
    z = rng.standard_normal((m, dim))
    z /= np.linalg.norm(z, axis=-1, keepdims=True)
    u = rng.random(m) ** (1.0 / dim)
    return z * u[:, None]
