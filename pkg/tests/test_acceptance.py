"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test prints a `criterion NN ...: PASS/FAIL` line (visible with -rA/-s,
and in the failure report otherwise); the test name itself carries the
criterion number so `pytest -v` reads as a per-criterion scoreboard.

Two clauses are expected red and are isolated in their own tests so the
passing clauses of the same criteria stay visible:
  - criterion 05 (slope decay): the prox slopes contract geometrically at
    rate alpha/(1+alpha) = 8/9 along the active curve, so slope(k=30)
    ~ 2 * 0.5 * (8/9)^30 ~ 3e-2, three orders above the demanded 1e-3.
  - criterion 08 (convergence order): the implicit scheme is first order
    with a kink-crossing phase error; the measured orders over
    h in {0.02, 0.01, 0.005} are ~0.985-0.995, strictly below 1.
"""

import functools
import math
import time

import numpy as np

from identlab.analysiskit import (
    kl_equivalence_check,
    kl_exponent_estimate,
    kl_probe,
    pln_check,
    pln_ratio,
    quadratic_growth_rates,
)
from identlab.flowkit import (
    compare_after_identification,
    identification_time,
    integrate_flow,
)
from identlab.funcatalog import (
    FunctionModel,
    HornRegion,
    Polytope,
    catalog_get,
    catalog_names,
    power_desingularizer,
)
from identlab.proxkit import (
    ProxSequence,
    check_length_bound,
    check_prox_lemma,
    prox_sequence,
)
from identlab.slopekit import limiting_slope, maxfn_modulus, modulus_probe, slope_estimate


def _report(label: str, ok: bool, detail: str = "") -> bool:
    print(f"{label}: {'PASS' if ok else 'FAIL'}" + (f"  [{detail}]" if detail else ""))
    return ok


# ---------------------------------------------------------------------------
# criterion 01 — slope estimates match the closed forms
# ---------------------------------------------------------------------------


def test_criterion_01_slope_closed_forms():
    t0 = time.monotonic()
    rng = np.random.default_rng(11)

    f1 = catalog_get("abs-plus-square")
    worst1 = 0.0
    n = 0
    while n < 100:
        p = rng.uniform(-1.0, 1.0, size=2)
        # the closed form sqrt(1 + 4 v^2) holds off the crease u = 0; a
        # 4e-3 margin keeps every probe radius on one side of it
        if np.linalg.norm(p) >= 1.0 or abs(p[0]) < 4e-3:
            continue
        n += 1
        est = slope_estimate(f1, p).value
        true = math.hypot(1.0, 2.0 * p[1])
        worst1 = max(worst1, abs(est - true) / true)

    f2 = catalog_get("sqrt-quartic")
    worst2 = 0.0
    n = 0
    while n < 100:
        p = rng.uniform(-1.0, 1.0, size=2)
        r = float(np.linalg.norm(p))
        # sqrt((u^2 + 4 v^6)/(u^2 + v^4)) is the smooth-point slope; stay
        # 0.2 away from the origin so the shells never reach the cusp
        if r >= 1.0 or r < 0.2:
            continue
        n += 1
        u, v = p
        est = slope_estimate(f2, p).value
        true = math.sqrt((u * u + 4.0 * v**6) / (u * u + v**4))
        worst2 = max(worst2, abs(est - true) / true)

    elapsed = time.monotonic() - t0
    ok = worst1 <= 1e-3 and worst2 <= 1e-3 and elapsed <= 10.0
    assert _report(
        "criterion 01 slope closed forms",
        ok,
        f"worst rel err {worst1:.2e} / {worst2:.2e}, {elapsed:.1f}s <= 10s",
    )


# ---------------------------------------------------------------------------
# criterion 02 — slope decay into the horn + horn moduli
# ---------------------------------------------------------------------------


def test_criterion_02_horn_slopes_and_moduli():
    f = catalog_get("sqrt-quartic")
    ks = np.arange(2, 51, dtype=float)
    slopes = np.array([limiting_slope(f, [k**-3.0, 1.0 / k]) for k in ks])
    decay_ok = bool(np.all(np.diff(slopes) < 0.0)) and slopes[-1] <= 0.05

    horn_ok = True
    details = []
    for a in (0.5, 1.0, 2.0):
        rep = modulus_probe(f, HornRegion(a), [0.0, 0.0])
        bound = 0.9 * a * a / (1.0 + a * a)
        horn_ok &= rep.estimate >= bound
        details.append(f"a={a:g}: {rep.estimate:.3f}>={bound:.3f}")
    assert _report(
        "criterion 02 horn slopes/moduli",
        decay_ok and horn_ok,
        f"final slope {slopes[-1]:.4f} <= 0.05; " + ", ".join(details),
    )


# ---------------------------------------------------------------------------
# criterion 03 — max-function modulus vs independent face-distance oracle
# ---------------------------------------------------------------------------


def _point_segment_dist(p, a, b):
    d = b - a
    t = float(np.clip(-(a - p) @ d / (d @ d), 0.0, 1.0)) if (d @ d) > 0 else 0.0
    return float(np.linalg.norm(a + t * d - p))


def _point_triangle_dist(p, A, B, C):
    M = np.stack([B - A, C - A], axis=-1)
    try:
        uv = np.linalg.solve(M.T @ M, M.T @ (p - A))
    except np.linalg.LinAlgError:
        uv = np.array([-1.0, -1.0])
    if uv[0] >= 0 and uv[1] >= 0 and uv.sum() <= 1.0:
        return float(np.linalg.norm(A + M @ uv - p))
    return min(
        _point_segment_dist(p, A, B),
        _point_segment_dist(p, B, C),
        _point_segment_dist(p, A, C),
    )


def _face_distance_oracle(V):
    k, n = V.shape
    origin = np.zeros(n)
    ds = []
    for i in range(k):
        F = np.delete(V, i, axis=0)
        if len(F) == 2:
            ds.append(_point_segment_dist(origin, F[0], F[1]))
        else:
            ds.append(_point_triangle_dist(origin, F[0], F[1], F[2]))
    return min(ds)


def test_criterion_03_maxfn_modulus():
    exact_ok = maxfn_modulus(Polytope([[1.0, 0.0], [-1.0, 0.0]])) == 1.0

    worst = 0.0
    for dim in (2, 3):
        rng = np.random.default_rng(42 + dim)
        done = 0
        while done < 20:
            V = rng.normal(size=(dim + 1, dim))
            A = np.concatenate([V.T, np.ones((1, dim + 1))])
            rhs = np.zeros(dim + 1)
            rhs[dim] = 1.0
            try:
                lam = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            if lam.min() < 0.05:  # origin must sit strictly inside
                continue
            worst = max(worst, abs(maxfn_modulus(Polytope(V)) - _face_distance_oracle(V)))
            done += 1
    assert _report(
        "criterion 03 maxfn modulus",
        exact_ok and worst <= 1e-9,
        f"two-point exact; brute-force diff {worst:.2e} <= 1e-9 over 2x20 sets",
    )


# ---------------------------------------------------------------------------
# criterion 04 — prox lemma on random pairs + the equality case
# ---------------------------------------------------------------------------


def test_criterion_04_prox_lemma():
    rng = np.random.default_rng(4)
    failures = 0
    total = 0
    for name in catalog_names():
        f = catalog_get(name)
        base = f.alpha_bar if f.alpha_bar is not None else 0.0
        for _ in range(200):
            x = rng.uniform(-1.0, 1.0, size=f.dim)
            alpha = base + 0.5 + 7.5 * rng.random()
            total += 1
            if not check_prox_lemma(f, x, alpha).passed:
                failures += 1

    eq = check_prox_lemma(catalog_get("abs-plus-square"), [0.0, 2.0], 1.0)
    eq_ok = abs(eq.lhs - 2.0) <= 1e-6 and abs(eq.rhs - 2.0) <= 1e-6
    assert _report(
        "criterion 04 prox lemma",
        failures == 0 and eq_ok,
        f"{total - failures}/{total} random pairs pass; equality case lhs={eq.lhs:.9f} rhs={eq.rhs:.9f}",
    )


# ---------------------------------------------------------------------------
# criterion 05 — prox sequences identify the parabola
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=1)
def _c5_sequences():
    f = catalog_get("paper-main")
    rng = np.random.default_rng(0)
    out = []
    for _ in range(10):
        z = rng.normal(size=2)
        z = z / np.linalg.norm(z) * 0.5 * math.sqrt(rng.random())
        out.append(prox_sequence(f, z, 8.0, 30))
    return f, out


def test_criterion_05_identification():
    f, seqs = _c5_sequences()
    M = f.critical_points[0].manifold
    worst = max(float(np.max(M.dist(s.points[11:]))) for s in seqs)
    assert _report(
        "criterion 05 identification (dist<=1e-3 beyond k=10)",
        worst <= 1e-3,
        f"worst dist {worst:.2e}",
    )


def test_criterion_05_slope_decay():
    # expected red: geometric contraction at rate 8/9 leaves slope ~3e-2
    # at k=30 (see module docstring)
    _, seqs = _c5_sequences()
    worst = max(float(s.slopes[-1]) for s in seqs)
    assert _report(
        "criterion 05 slope decay (slope<=1e-3 by k=30)",
        worst <= 1e-3,
        f"worst slope {worst:.2e}",
    )


# ---------------------------------------------------------------------------
# criterion 06 — desingularized length bound
# ---------------------------------------------------------------------------


def test_criterion_06_length_bound():
    # u_k = 1/4 - k/128 (v = 0) is the exact prox trajectory for alpha = 64;
    # all quantities are dyadic rationals, so the check is roundoff-free
    f = catalog_get("abs-plus-square")
    pts = [[0.25 - k / 128.0, 0.0] for k in range(21)]
    seq = ProxSequence.from_points(f, 64.0, pts)
    rep = check_length_bound(seq, power_desingularizer(0.5), fstar=0.0, kmax=20)
    assert _report(
        "criterion 06 length bound",
        rep.passed,
        f"worst margin {rep.worst_margin:.2e} >= -1e-9 over 20 steps",
    )


# ---------------------------------------------------------------------------
# criterion 07 — figure-1 trajectories: capture, identification stability
# ---------------------------------------------------------------------------


def test_criterion_07_figure1_trajectories():
    t0 = time.monotonic()
    f = catalog_get("paper-main")
    M = f.critical_points[0].manifold
    starts = np.random.default_rng(0).uniform(-1.0, 1.0, size=(10, 2))

    finals = []
    tstars = {0.01: [], 0.005: []}
    for h in (0.01, 0.005):
        for x0 in starts:
            traj = integrate_flow(f, x0, h=h, T=10.0, manifold=M)
            if h == 0.01:
                finals.append(float(np.linalg.norm(traj.points[-1])))
            tstars[h].append(identification_time(traj, M, tube=1e-2))
    elapsed = time.monotonic() - t0

    capture_ok = max(finals) <= 5e-2
    finite_ok = all(t is not None for t in tstars[0.01] + tstars[0.005])
    stable_ok = finite_ok and all(
        abs(a - b) <= 4 * 0.01 for a, b in zip(tstars[0.01], tstars[0.005])
    )
    ok = capture_ok and finite_ok and stable_ok and elapsed <= 120.0
    assert _report(
        "criterion 07 figure-1 trajectories",
        ok,
        f"max |x(T)| {max(finals):.2e} <= 5e-2; t* finite and stable to 4h; {elapsed:.0f}s <= 120s",
    )


# ---------------------------------------------------------------------------
# criterion 08 — implicit flow vs the exact solution
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=1)
def _c8_runs():
    f = catalog_get("abs-plus-square")
    M = f.critical_points[0].manifold
    errs, tstars = {}, {}
    for h in (0.02, 0.01, 0.005):
        traj = integrate_flow(f, [1.0, 1.0], h=h, T=2.0, manifold=M)
        t = traj.times
        exact = np.stack([np.maximum(1.0 - t, 0.0), np.exp(-2.0 * t)], axis=-1)
        errs[h] = float(np.max(np.abs(traj.points - exact)))
        tstars[h] = identification_time(traj, M, tube=1e-2)
    return errs, tstars


def test_criterion_08_identification_time():
    _, tstars = _c8_runs()
    # +1e-12: t* = 198 * 0.005 sits 9e-18 outside the band in binary
    ok = all(
        tstars[h] is not None and abs(tstars[h] - 1.0) <= 2.0 * h + 1e-12 for h in tstars
    )
    assert _report(
        "criterion 08 identification time (1 +- 2h)",
        ok,
        ", ".join(f"h={h:g}: t*={tstars[h]}" for h in tstars),
    )


def test_criterion_08_convergence_order():
    # expected red: measured orders sit just below 1 (see module docstring)
    errs, _ = _c8_runs()
    orders = [
        math.log2(errs[0.02] / errs[0.01]),
        math.log2(errs[0.01] / errs[0.005]),
    ]
    assert _report(
        "criterion 08 convergence order (>= 1)",
        min(orders) >= 1.0,
        f"sup errs {errs[0.02]:.2e}/{errs[0.01]:.2e}/{errs[0.005]:.2e}, orders {orders[0]:.3f}, {orders[1]:.3f}",
    )


# ---------------------------------------------------------------------------
# criterion 09 — post-identification gap scales like h
# ---------------------------------------------------------------------------


def test_criterion_09_post_identification_gap():
    f = catalog_get("paper-main")
    M = f.critical_points[0].manifold
    C = {}
    identified = True
    for h in (0.02, 0.01):
        traj = integrate_flow(f, [0.8, 0.9], h=h, T=5.0, manifold=M)
        rep = compare_after_identification(f, M, traj, tube=1e-2)
        identified &= rep.identified
        C[h] = rep.gap_per_h
    ratio = C[0.02] / C[0.01] if identified else math.inf
    ok = identified and 0.5 <= ratio <= 2.0
    assert _report(
        "criterion 09 post-identification gap",
        ok,
        f"C(0.02)={C[0.02]:.3f}, C(0.01)={C[0.01]:.3f}, ratio {ratio:.2f} in [0.5, 2]",
    )


# ---------------------------------------------------------------------------
# criterion 10 — quadratic growth transfers
# ---------------------------------------------------------------------------


def test_criterion_10_quadratic_growth():
    details = []
    ok = True
    for name in ("abs-plus-square", "paper-main"):
        f = catalog_get(name)
        cp = f.critical_points[0]
        alpha, beta = quadratic_growth_rates(f, cp.manifold, cp.point, 1e-3)
        ok &= abs(alpha - beta) <= 5e-2
        details.append(f"{name}: |{alpha:.3f}-{beta:.3f}|<=5e-2")
    assert _report("criterion 10 quadratic growth rates", ok, "; ".join(details))


# ---------------------------------------------------------------------------
# criterion 11 — KL probes
# ---------------------------------------------------------------------------


def test_criterion_11_kl():
    phi = power_desingularizer(0.5)

    idsq = FunctionModel(
        name="identity-square",
        dim=2,
        value=lambda z: np.sum(z * z, axis=-1),
        subdiff=lambda z: Polytope([2.0 * z]),
        inf_value=0.0,
    )
    modulus = kl_probe(idsq, [0.0, 0.0], phi, 0.3).modulus
    identity_ok = abs(modulus - 1.0) <= 1e-6

    f = catalog_get("paper-main")
    cp = f.critical_points[0]
    a, _resid = kl_exponent_estimate(f, cp.point, 0.01, M=cp.manifold)
    exponent_ok = abs(a - 0.5) <= 0.05

    pairs_ok = True
    for name in catalog_names():
        g = catalog_get(name)
        for gcp in g.critical_points:
            if gcp.manifold is None:
                continue
            rep = kl_equivalence_check(g, gcp.manifold, gcp.point, phi, 0.01)
            pairs_ok &= rep.agree and rep.all_positive
    assert _report(
        "criterion 11 KL probes",
        identity_ok and exponent_ok and pairs_ok,
        f"|x|^2 modulus {modulus:.9f}; exponent {a:.5f}; all registered pairs agree",
    )


# ---------------------------------------------------------------------------
# criterion 12 — PLN certificates and the sqrt counterexample
# ---------------------------------------------------------------------------


def test_criterion_12_pln():
    convex_ok = True
    details = []
    for name in ("abs-plus-square", "max-affine-demo"):
        f = catalog_get(name)
        rho = pln_check(f, np.zeros(f.dim), 0.5).rho_max
        convex_ok &= rho <= 1e-9
        details.append(f"{name}: rho {rho:.1e}")

    f = catalog_get("paper-main")
    rhos = [pln_check(f, [0.0, 0.0], r).rho_max for r in (0.5, 0.25, 0.125)]
    bounded_ok = max(rhos) <= 10.0 and max(rhos) / min(rhos) <= 2.0
    details.append("paper-main rhos " + "/".join(f"{r:.3f}" for r in rhos))

    g = catalog_get("sqrt-abs")

    def rho_t(t):
        return pln_ratio(g, [t * t], [4.0 * t * t], [1.0 / (2.0 * t)])

    ratio = rho_t(0.001) / rho_t(0.1)
    sqrt_ok = ratio >= 10.0
    details.append(f"sqrt construction ratio {ratio:.0f} >= 10")

    assert _report(
        "criterion 12 PLN",
        convex_ok and bounded_ok and sqrt_ok,
        "; ".join(details),
    )
