"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Every sample below is seeded by a fixed rule written down before the run;
no seed is ever redrawn. A criterion with several clauses is split into
sub-tests and its summary line fails if any clause fails.
"""

import functools
import math
import time

import numpy as np
import pytest
from scipy import optimize

from wehrl_lab.bergman import (
    BergmanConfig,
    Extremal,
    contractive_check,
    mobius_identity_check,
    norm,
    random_polynomial,
)
from wehrl_lab.functionals import CATALOGUE, STRICT_CATALOGUE, parse_phi
from wehrl_lab.polyconc import (
    RegionSpec,
    concentration,
    pointwise_bound_check,
    state_to_polynomial,
)
from wehrl_lab.projmeasure import (
    empirical_distribution,
    mu0,
    rhs_closed_form,
    sample_chart_array,
    u0_star,
    u0_star_integral,
)
from wehrl_lab.symrep import (
    DensityOperator,
    SpaceSignature,
    StateVector,
    brute_force_symmetrize,
    coherent_coefficients,
    dim_symmetric,
    enumerate_basis,
    haar_unit_vectors,
    random_density,
)
from wehrl_lab.wehrl import (
    HusimiEvaluator,
    coherent_husimi,
    deficit,
    deficit_from_values,
    husimi_gradient,
    husimi_sample,
    stability_lower_bound,
    sup_husimi,
    trace_distance_full,
    verify_lemma23,
)

GRID = [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (4, 2)]
SIGMAS = 3.0
PHI2 = parse_phi("power:2")

# criterion -> list of (clause, passed, detail)
REPORT = {}


def record(crit, clause, ok, detail):
    REPORT.setdefault(crit, []).append((clause, bool(ok), detail))
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {crit:2d}{'/' + clause if clause else ''}] {status}: {detail}")


def summary_lines():
    out = []
    for crit in sorted(REPORT):
        parts = REPORT[crit]
        ok = all(p[1] for p in parts)
        failed = [p[0] or "main" for p in parts if not p[1]]
        tail = "" if ok else f" (failed: {', '.join(failed)})"
        out.append(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}{tail}")
    return out


def seed_of(crit, cell, k):
    """Seed rule shared by all criteria: criterion, grid cell and index."""
    return 1_000_000 * crit + 1000 * cell + k


# --------------------------------------------------------------------------
# states and optimisation results shared between criteria


@functools.lru_cache(maxsize=None)
def mixed_family(cell):
    """100 density operators per cell for criteria 5 and 8; rank cycles 1..dim."""
    N, M = GRID[cell]
    sig = SpaceSignature(N, M)
    out = []
    for k in range(100):
        seed = seed_of(5, cell, k)
        rho = random_density(sig, 1 + k % sig.dim, seed)
        sup = sup_husimi(rho, 16, seed)
        td = trace_distance_full(rho, 16, seed, sup=sup)
        out.append((seed, rho, sup, td))
    return out


@functools.lru_cache(maxsize=None)
def pure_family(cell):
    """100 pure states per cell with M >= 2 (for M = 1 every pure state is coherent)."""
    N, M = GRID[cell]
    sig = SpaceSignature(N, M)
    out = []
    for k in range(100):
        seed = seed_of(6, cell, k)
        rho = random_density(sig, 1, seed)
        sup = sup_husimi(rho, 16, seed)
        td = trace_distance_full(rho, 16, seed, sup=sup)
        out.append((seed, rho, sup, td))
    return out


def controlled_deficit(rho, phi, n, seed, sup):
    u, lifts = husimi_sample(rho, n, seed, return_lifts=True)
    return deficit_from_values(u, phi, rho.sig, seed, u_control=coherent_husimi(sup.argmax_v, lifts, rho.sig.M))


# --------------------------------------------------------------------------


def test_criterion_01_dimension_and_basis():
    t0 = time.perf_counter()
    bad = [(N, M) for N in range(2, 7) for M in range(1, 7)
           if dim_symmetric(N, M) != len(enumerate_basis(SpaceSignature(N, M)))]
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1.0
    record(1, "", ok, f"{len(bad)} mismatches over N<=6, M<=6 in {dt:.3f}s (limit 1s)")
    assert ok


def test_criterion_02_coherent_oracle():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for N in range(2, 13):
        for M in range(1, 13):
            if N**M > 4096:
                continue
            sig = SpaceSignature(N, M)
            rng = np.random.default_rng(seed_of(2, N, M))
            for v in haar_unit_vectors(rng, N, 100):
                diff = coherent_coefficients(v, sig).coeffs - brute_force_symmetrize(v, sig).coeffs
                worst = max(worst, float(np.abs(diff).max()))
            count += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 30
    record(2, "", ok, f"max deviation {worst:.2e} over {count} (N,M) cells x 100 v in {dt:.1f}s (limit 30s)")
    assert ok


@functools.lru_cache(maxsize=None)
def normalisation_family(cell):
    N, M = GRID[cell]
    sig = SpaceSignature(N, M)
    return [(seed_of(3, cell, k), random_density(sig, 1 + k % sig.dim, seed_of(3, cell, k))) for k in range(20)]


def test_criterion_03_normalisation():
    t0 = time.perf_counter()
    fails, worst = [], 0.0
    for cell, (N, M) in enumerate(GRID):
        dim = dim_symmetric(N, M)
        for seed, rho in normalisation_family(cell):
            x = dim * husimi_sample(rho, 100_000, seed)
            z = abs(x.mean() - 1) / (x.std(ddof=1) / math.sqrt(x.size))
            worst = max(worst, z)
            if z > SIGMAS:
                fails.append((N, M, seed, z))
    dt = time.perf_counter() - t0
    ok = not fails and dt < 120
    record(3, "", ok, f"{len(fails)} of 120 states outside 3 sigma (worst {worst:.2f} sigma) in {dt:.1f}s")
    assert ok, fails


def test_criterion_04_closed_form_rhs():
    errs = [abs(rhs_closed_form(parse_phi(f"power:{q}"), SpaceSignature(2, M)) - 1 / (q * M + 1))
            for q in (2, 3) for M in range(1, 6)]
    sixth = abs(rhs_closed_form(PHI2, SpaceSignature(3, 1)) - 1 / 6)
    ok = max(errs) <= 1e-10 and sixth <= 1e-10
    record(4, "", ok, f"max error {max(errs):.1e} on N=2; N=3 M=1 q=2 error {sixth:.1e}")
    assert ok


def test_criterion_05_deficit_desk_scale():
    t0 = time.perf_counter()
    phis = [parse_phi(s) for s in CATALOGUE]
    viol, checks = [], 0
    for cell in range(len(GRID)):
        for seed, rho, sup, td in mixed_family(cell):
            u, lifts = husimi_sample(rho, 100_000, seed, return_lifts=True)
            uc = coherent_husimi(sup.argmax_v, lifts, rho.sig.M)
            for phi in phis:
                rep = deficit_from_values(u, phi, rho.sig, seed, u_control=uc)
                checks += 1
                if rep.deficit < -SIGMAS * rep.mc_error:
                    viol.append((GRID[cell], seed, phi.spec, rep.deficit, rep.mc_error))
    dt = time.perf_counter() - t0
    ok = not viol and dt < 900
    record(5, "", ok, f"{len(viol)} violations in {checks} (state, Phi) checks in {dt:.0f}s (limit 900s)")
    assert ok, viol


def test_criterion_06_coherent_equality():
    phis = [parse_phi(s) for s in CATALOGUE]
    worst, bad = 0.0, []
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        rng = np.random.default_rng(seed_of(6, cell, 999))
        for k, v in enumerate(haar_unit_vectors(rng, N, 10)):
            rho = DensityOperator.coherent(v, sig)
            for phi in phis:
                rep = deficit(rho, phi, 100_000, seed_of(6, cell, 500 + k))
                z = abs(rep.deficit) / rep.mc_error
                worst = max(worst, z)
                if z > SIGMAS:
                    bad.append((N, M, k, phi.spec, z))
    ok = not bad
    record(6, "coherent", ok, f"{len(bad)} of 240 coherent checks with |deficit| > 3 sigma (worst {worst:.2f})")
    assert ok, bad


def test_criterion_06_stability_bound():
    viol, checks, excluded = [], 0, 0
    for cell, (N, M) in enumerate(GRID):
        if M == 1:
            continue
        for seed, rho, sup, td in pure_family(cell):
            if sup.T > 0.99:
                excluded += 1
                continue
            for spec in STRICT_CATALOGUE:
                phi = parse_phi(spec)
                rep = controlled_deficit(rho, phi, 100_000, seed, sup)
                lb = stability_lower_bound(sup.T, phi, rho.sig)
                checks += 1
                if not lb > 0 or rep.deficit < lb - SIGMAS * rep.mc_error:
                    viol.append((N, M, seed, spec, rep.deficit, lb, rep.mc_error))
    ok = not viol
    record(6, "lower-bound", ok, f"{len(viol)} violations in {checks} checks of deficit >= lb(T) > 0 "
                                 f"({excluded} states with T > 0.99 excluded)")
    assert ok, viol


def _state_with_sup(sig, T_target):
    """A seeded-free state with sup u = T_target: diagonal for M = 1, else a
    pure superposition of a coherent state and the last basis vector."""
    if sig.M == 1:
        p = np.zeros(sig.dim)
        p[0], p[1] = T_target, 1 - T_target
        return DensityOperator(sig, p[:2], np.eye(sig.dim)[:, :2])
    c = coherent_coefficients(np.eye(sig.N)[0], sig).coeffs
    other = np.zeros(sig.dim, dtype=complex)
    other[-1] = 1.0

    def make(a):
        return DensityOperator.pure(StateVector(sig, math.cos(a) * c + math.sin(a) * other))

    a = optimize.brentq(lambda a: sup_husimi(make(a), 16, 0).T - T_target, 1e-4, 0.7, xtol=1e-14)
    return make(a)


def test_criterion_06_resolution_at_T_099():
    # lb(0.99) against the MC error of the (variance-reduced) estimator at n = 10^6
    rows, ok = [], True
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        rho = _state_with_sup(sig, 0.99)
        sup = sup_husimi(rho, 16, 0)
        lb = stability_lower_bound(0.99, PHI2, sig)
        rep = controlled_deficit(rho, PHI2, 10**6, seed_of(6, cell, 900), sup)
        good = lb > 10 * rep.mc_error
        ok &= good
        rows.append(f"{N}x{M}: lb={lb:.2e} vs 10*err={10 * rep.mc_error:.2e}")
    record(6, "resolution", ok, "stability_lower_bound(0.99) > 10 mc_error at n=1e6, Phi=t^2: " + "; ".join(rows))
    assert ok, rows


def test_criterion_07_stability_instance():
    rho = DensityOperator.maximally_mixed(SpaceSignature(2, 1))
    rep = verify_lemma23(rho, PHI2, 100_000, seed_of(7, 0, 0))
    ok = (abs(rep.deficit - 1 / 12) <= SIGMAS * rep.mc_error + 1e-15
          and abs(rep.lower_bound - 1 / 24) <= 1e-10 and 1 / 12 >= 1 / 24 and rep.passed)
    record(7, "", ok, f"deficit {rep.deficit:.12f} (1/12), lower bound {rep.lower_bound:.12f} (1/24)")
    assert ok


def test_criterion_08_trace_distance_vs_sup():
    worst_sq, worst_pure, n = -math.inf, 0.0, 0
    for cell in range(len(GRID)):
        fams = [mixed_family(cell)] + ([pure_family(cell)] if GRID[cell][1] > 1 else [])
        for fam in fams:
            for seed, rho, sup, td in fam:
                n += 1
                worst_sq = max(worst_sq, td.D**2 - 4 * (1 - sup.T))
                if rho.is_pure:
                    worst_pure = max(worst_pure, abs(td.D - 2 * math.sqrt(max(0.0, 1 - sup.T))))
    ok = worst_sq <= 1e-9 and worst_pure <= 1e-6
    record(8, "", ok, f"{n} states: max D^2 - 4(1-T) = {worst_sq:.1e}, max pure |D - 2 sqrt(1-T)| = {worst_pure:.1e}")
    assert ok


def test_criterion_09_ratio_positive_and_stable():
    phis = [parse_phi(s) for s in STRICT_CATALOGUE]
    nonpos, spreads = [], {}
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        kinds = ["full"] if M == 1 else ["pure", "full"]
        for kind in kinds:
            mins = {p.spec: [] for p in phis}
            for bank in range(5):
                ratios = {p.spec: [] for p in phis}
                for k in range(40):
                    seed = seed_of(9, cell, 100 * bank + k) + (kind == "full") * 500
                    rho = random_density(sig, 1 if kind == "pure" else sig.dim, seed)
                    sup = sup_husimi(rho, 16, seed)
                    td = trace_distance_full(rho, 16, seed, sup=sup)
                    if td.D == 0:
                        continue
                    u, lifts = husimi_sample(rho, 100_000, seed, return_lifts=True)
                    uc = coherent_husimi(sup.argmax_v, lifts, M)
                    for phi in phis:
                        r = deficit_from_values(u, phi, sig, seed, u_control=uc).deficit / td.D**2
                        ratios[phi.spec].append(r)
                        if not r > 0:
                            nonpos.append((N, M, kind, seed, phi.spec, r))
                for spec in mins:
                    mins[spec].append(min(ratios[spec]))
            for spec, m in mins.items():
                m = np.array(m)
                spreads[(N, M, kind, spec)] = float(np.abs(m / m.mean() - 1).max())
    worst = max(spreads.items(), key=lambda kv: kv[1])
    ok = not nonpos and worst[1] < 0.20
    record(9, "", ok, f"{len(nonpos)} non-positive ratios; largest bank spread {100 * worst[1]:.1f}% at {worst[0]}")
    assert ok, (nonpos, worst)


def test_criterion_10_rearrangements():
    n = 100_000
    fails = []
    # distribution function of the coherent state at 9 thresholds
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        v = haar_unit_vectors(np.random.default_rng(seed_of(10, cell, 0)), N, 1)[0]
        dist = empirical_distribution(HusimiEvaluator(DensityOperator.coherent(v, sig)), n, seed_of(10, cell, 1))
        for t in np.linspace(0.1, 0.9, 9):
            p = mu0(t, sig)
            if abs(dist.mu(t) - p) > SIGMAS * math.sqrt(p * (1 - p) / n):
                fails.append(("mu0", N, M, t))
    # inverse pair on a dense grid
    inv = 0.0
    for N, M in GRID:
        sig = SpaceSignature(N, M)
        t = np.linspace(0, 1, 1001)
        inv = max(inv, float(np.abs(u0_star(mu0(t, sig), sig) - t).max()))
    if inv > 1e-12:
        fails.append(("inverse", inv))
    # majorization for the seeded states of criterion 3
    s_vals = np.linspace(0.05, 0.95, 19)
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        coh = [u0_star_integral(s, sig) for s in s_vals]
        for seed, rho in normalisation_family(cell):
            dist = empirical_distribution(HusimiEvaluator(rho), n, seed)
            for s, ref in zip(s_vals, coh):
                if dist.majorization(s) > ref + SIGMAS * dist.majorization_error(s):
                    fails.append(("majorization", N, M, seed, s))
    ok = not fails
    record(10, "", ok, f"{len(fails)} failures (mu0 at 9 thresholds x 6 cells; inverse error {inv:.1e}; 19 s x 120 states)")
    assert ok, fails


def test_criterion_11_concentration():
    fails, worst_eq = [], 0.0
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        rng = np.random.default_rng(seed_of(11, cell, 999))
        for k in range(100):
            seed = seed_of(11, cell, k)
            F = state_to_polynomial(random_density(sig, 1, seed).psi(0))
            c = 0.5 * (rng.standard_normal(N - 1) + 1j * rng.standard_normal(N - 1))
            # radii below ~0.5 give balls of measure ~1e-6 at N = 4, empty at this n
            rep = concentration(F, RegionSpec.ball(c, rng.uniform(0.5, 2.5)), 100_000, seed)
            if not rep.passed:
                fails.append(("ball", N, M, seed))
        e1 = np.eye(N)[0]
        F = state_to_polynomial(coherent_coefficients(e1, sig))
        h = HusimiEvaluator(DensityOperator.coherent(e1, sig))
        for j, t in enumerate((0.2, 0.5, 0.8)):
            rep = concentration(F, RegionSpec.superlevel(h, t), 100_000, seed_of(11, cell, 500 + j))
            z = abs(rep.mass - rep.bound) / rep.mc_error
            worst_eq = max(worst_eq, z)
            if z > SIGMAS:
                fails.append(("equality", N, M, t, z))
    ok = not fails
    record(11, "", ok, f"{len(fails)} failures in 600 ball pairs + 18 equality cases (worst equality {worst_eq:.2f} sigma)")
    assert ok, fails


def test_criterion_12_pointwise_bound():
    worst, worst_coh, fails = 0.0, 0.0, []
    for cell, (N, M) in enumerate(GRID):
        sig = SpaceSignature(N, M)
        for k in range(20):
            seed = seed_of(12, cell, k)
            F = state_to_polynomial(random_density(sig, 1, seed).psi(0))
            rep = pointwise_bound_check(F, sample_chart_array(N, 10_000, seed).zprime, polish=False)
            worst = max(worst, rep.max_value)
            if rep.max_value > 1 + 1e-8:
                fails.append((N, M, seed))
        rng = np.random.default_rng(seed_of(12, cell, 999))
        for k, v in enumerate(haar_unit_vectors(rng, N, 5)):
            F = state_to_polynomial(coherent_coefficients(v, sig))
            rep = pointwise_bound_check(F, sample_chart_array(N, 10_000, seed_of(12, cell, 500 + k)).zprime)
            worst_coh = max(worst_coh, abs(rep.max_value - 1))
            if abs(rep.max_value - 1) > 1e-8:
                fails.append(("coherent", N, M, k))
    ok = not fails
    record(12, "", ok, f"max over random polynomials {worst:.10f}; coherent |max - 1| <= {worst_coh:.1e}")
    assert ok, fails


def test_criterion_13_bergman():
    rng = np.random.default_rng(seed_of(13, 0, 0))

    def disk(n, radius=1.0):
        return radius * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))

    res = float(mobius_identity_check(disk(10_000), disk(10_000)).max())
    fails = [] if res < 1e-13 else [("mobius", res)]
    configs = [BergmanConfig(2, 2), BergmanConfig(2, 3), BergmanConfig(4, 2.5)]
    worst_norm = worst_eq = 0.0
    for ci, cfg in enumerate(configs):
        ws, thetas = disk(50, 0.9), rng.uniform(0, 2 * np.pi, 50)
        for w, th in zip(ws, thetas):
            worst_norm = max(worst_norm, abs(norm(Extremal(w, th, cfg), cfg) - 1))
        for k in range(100):
            f = random_polynomial(1 + k % 8, cfg, seed_of(13, ci, k))
            if not contractive_check(f, cfg, PHI2).passed:
                fails.append(("contractive", cfg, k))
        for w, th in zip(ws[:10], thetas[:10]):
            rep = contractive_check(Extremal(w, th, cfg), cfg, PHI2)
            worst_eq = max(worst_eq, abs(rep.lhs - rep.rhs))
    if worst_norm > 1e-8:
        fails.append(("extremal norm", worst_norm))
    if worst_eq > 1e-6:
        fails.append(("extremal equality", worst_eq))
    ok = not fails
    record(13, "", ok, f"Mobius residual {res:.1e}; extremal | ||f|| - 1 | <= {worst_norm:.1e}; "
                       f"extremal |lhs - rhs| <= {worst_eq:.1e}; {len(fails)} failures")
    assert ok, fails


def test_criterion_14_gradients():
    rng = np.random.default_rng(seed_of(14, 0, 0))
    h, worst = 1e-6, 0.0
    for k in range(50):
        N, M = GRID[k % len(GRID)]
        sig = SpaceSignature(N, M)
        rho = random_density(sig, 1 + k % sig.dim, seed_of(14, 1, k))
        v = haar_unit_vectors(rng, N, 1)[0]
        _, G = husimi_gradient(rho, v)
        num = np.empty(N, dtype=complex)
        for i in range(N):
            e = np.zeros(N)
            e[i] = h
            f = lambda x: husimi_gradient(rho, x)[0]
            num[i] = (f(v + e) - f(v - e)) / (2 * h) + 1j * (f(v + 1j * e) - f(v - 1j * e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(G - num) / np.linalg.norm(G)))
    ok = worst <= 1e-6
    record(14, "", ok, f"max relative gradient error {worst:.1e} over 50 pairs")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
