"""Acceptance suite: one test per primary criterion, at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one line per criterion.
"""

import numpy as np
import pytest

from coinwalk.asymptotics import (
    ballistic_drift,
    diffusion_matrix,
    diffusion_quadratic_check,
    drift_subtract,
    gaussian_density,
    solve_first_order,
    solve_first_order_zero_mean,
)
from coinwalk.channel import ShiftTable, WalkChannel, compose, line_walk, two_dim_walk
from coinwalk.ensembles import (
    HADAMARD,
    PAULI_Z,
    broken_links,
    dephasing_uniform,
    gaussian_coin,
    make_ensemble,
    phase_coin,
    phase_moments,
    two_dim,
)
from coinwalk.errors import CertificateRefusal
from coinwalk.oracle import (
    DensityBlockState,
    PureState,
    aggregate_standard_error,
    monte_carlo,
    simulate,
    total_variation_to_density,
)


def _report(name, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: PASS{suffix}")


def diag_anti_ratio(mat):
    diag = (mat[0, 0] + mat[1, 1] + 2 * mat[0, 1]) / 2
    anti = (mat[0, 0] + mat[1, 1] - 2 * mat[0, 1]) / 2
    return diag / anti


def test_classical_limit():
    """{(1/2,H),(1/2,-H)} with +-1 shift: D = 1 three ways, oracle at t=500."""
    walk = line_walk(make_ensemble([(0.5, HADAMARD), (0.5, -HADAMARD)]))
    res = diffusion_matrix(walk)
    d_series = res.d_matrix[0, 0]
    assert abs(d_series - 1.0) <= 1e-10

    fo = solve_first_order_zero_mean(walk, 0)
    walk_fo = walk.apply_heisenberg(fo.a_prime)
    d_closed = (
        fo.a_prime.hs_inner(fo.a_prime).real
        - walk_fo.hs_inner(walk_fo).real
    )
    assert abs(d_closed - 1.0) <= 1e-10

    qc = diffusion_quadratic_check(walk, [solve_first_order(walk, 0)])
    assert abs(qc[0, 0] - 1.0) <= 1e-10

    t = 500
    dists = simulate(walk, DensityBlockState.origin_mixed(1, 2), t)
    _, cov = dists[t].moments()
    var_rate = cov[0, 0] / t
    assert abs(var_rate - 1.0) <= 0.01
    _report(
        "classical limit",
        f"D_series={d_series:.2e} off by {abs(d_series - 1):.1e}, "
        f"Var/t={var_rate:.6f}",
    )


def test_sign_pinning():
    """lambda^T D lambda = -mu'' >= 0 and PSD floor for every family."""
    rng = np.random.default_rng(123)
    cases = [
        ("broken_links(0.3)", line_walk(broken_links(0.3)), 1e-10),
        ("dephasing(pi/4)", line_walk(dephasing_uniform(np.pi / 4)), 1e-10),
        ("gaussian(pi/4,0.5)", line_walk(gaussian_coin(np.pi / 4, 0.5)), 1e-10),
        ("two_dim(0.5)", two_dim_walk(two_dim(0.5)), 1e-8),
    ]
    for name, walk, tol in cases:
        d_mat = diffusion_matrix(walk, tol=tol).d_matrix
        assert np.linalg.eigvalsh(d_mat).min() >= -1e-9, name
        s = d_mat.shape[0]
        for _ in range(20):
            lam = rng.standard_normal(s)
            assert lam @ d_mat @ lam >= -1e-9, name
    _report("sign pinning", f"{len(cases)} families, 20 random directions each")


def test_broken_links_figure1():
    """D(w) strictly increasing; variance agreement and w=0.9 undershoot."""
    grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    d_of = {}
    for w in grid:
        d_of[w] = diffusion_matrix(line_walk(broken_links(w))).d_matrix[0, 0]
    ds = [d_of[w] for w in grid]
    assert all(b > a for a, b in zip(ds, ds[1:]))

    t = 100
    rels = {}
    for w in (0.1, 0.2, 0.3, 0.4, 0.5):
        walk = line_walk(broken_links(w))
        dists = simulate(walk, DensityBlockState.origin_mixed(1, 2), t)
        _, cov = dists[t].moments()
        rels[w] = abs(cov[0, 0] / t - d_of[w]) / d_of[w]
        assert rels[w] <= 0.10, f"w={w}: {rels[w]:.3f}"

    walk = line_walk(broken_links(0.9))
    dists = simulate(walk, DensityBlockState.origin_mixed(1, 2), t)
    _, cov = dists[t].moments()
    assert cov[0, 0] / t < d_of[0.9]
    _report(
        "broken links (fig 1)",
        f"max rel gap w<=0.5: {max(rels.values()):.3f}, "
        f"undershoot at 0.9: {cov[0, 0] / t:.3f} < {d_of[0.9]:.3f}",
    )


def test_dephasing_figure2():
    """D depends only on phase moments; TV to the Gaussian shrinks in t."""
    delta = np.pi / 8
    ens_a = dephasing_uniform(delta)
    r1 = np.sin(delta) / delta
    r2 = np.sin(2 * delta) / (2 * delta)
    g = (1 - r2) / (1 - r1)
    a = 2 * np.arccos(np.sqrt(g) / 2)
    p = (1 - r1) / (2 * (1 - np.cos(a)))
    ens_b = make_ensemble(
        [(p, phase_coin(-a)), (1 - 2 * p, phase_coin(0.0)), (p, phase_coin(a))]
    )
    mom_a, mom_b = phase_moments(ens_a), phase_moments(ens_b)
    assert abs(mom_a.r1 - mom_b.r1) <= 1e-10
    assert abs(mom_a.r2 - mom_b.r2) <= 1e-10
    d_a = diffusion_matrix(line_walk(ens_a)).d_matrix[0, 0]
    d_b = diffusion_matrix(line_walk(ens_b)).d_matrix[0, 0]
    assert abs(d_a - d_b) <= 1e-9

    walk = line_walk(ens_a)
    dists = simulate(walk, DensityBlockState.origin_mixed(1, 2), 80)
    tvs = []
    for t in (10, 30, 80):
        smooth = dists[t].neighbor_average()
        tvs.append(
            total_variation_to_density(
                smooth, lambda x: gaussian_density([[d_a * t]], x)
            )
        )
    assert tvs[0] > tvs[1] > tvs[2]
    _report(
        "dephasing (fig 2)",
        f"|dD|={abs(d_a - d_b):.1e}, TV(10,30,80)="
        + ",".join(f"{tv:.3f}" for tv in tvs),
    )


def test_gaussian_coin_figure3():
    """Reflection symmetry, extrema placement, and the sigma -> 0 trend."""
    n = 32
    sigma = 0.5
    r0s = [2 * np.pi * k / n for k in range(n + 1)]
    ds = np.array(
        [
            diffusion_matrix(line_walk(gaussian_coin(r0, sigma))).d_matrix[0, 0]
            for r0 in r0s
        ]
    )
    sym_gap = max(abs(ds[k] - ds[n - k]) for k in range(n + 1))
    assert sym_gap <= 1e-6
    assert int(np.argmax(ds[:n])) in (0, n // 2)
    assert int(np.argmin(ds[:n])) in (n // 4, 3 * n // 4)

    trend = [
        diffusion_matrix(line_walk(gaussian_coin(np.pi / 4, s))).d_matrix[0, 0]
        for s in (1.0, 0.5, 0.2, 0.1)
    ]
    assert trend[0] < trend[1] < trend[2] < trend[3]
    _report(
        "gaussian coin (fig 3)",
        f"symmetry gap {sym_gap:.1e}, D(sigma)="
        + ",".join(f"{v:.2f}" for v in trend),
    )


def test_two_dim_figure4():
    """Zero drift, symmetric D, diagonal anisotropy ordering, MC cross-check."""
    walk01 = two_dim_walk(two_dim(0.1))
    walk09 = two_dim_walk(two_dim(0.9))
    assert np.array_equal(walk01.shift_index()[0], [0, 0])
    assert np.array_equal(ballistic_drift(walk09).velocity, [0.0, 0.0])

    d01 = diffusion_matrix(walk01, tol=1e-7, trim_rel=1e-5).d_matrix
    d09 = diffusion_matrix(walk09, tol=1e-7, trim_rel=1e-5).d_matrix
    for d_mat in (d01, d09):
        assert d_mat.shape == (2, 2)
        assert np.allclose(d_mat, d_mat.T, atol=1e-9)
        assert np.linalg.eigvalsh(d_mat).min() >= -1e-9
    assert diag_anti_ratio(d09) > diag_anti_ratio(d01)

    walk05 = two_dim_walk(two_dim(0.5))
    d05 = diffusion_matrix(walk05, tol=1e-8).d_matrix
    psi0 = PureState.at_origin(2, np.array([1, 1j, -1, -1j]) / 2.0)
    t = 50
    mc = monte_carlo(
        walk05, psi0, t, 600, seed=5, batch_size=300, dtype=np.complex64
    )
    _, cov = mc.moments()
    mc_diag = (cov[0, 0] + cov[1, 1] + 2 * cov[0, 1]) / 2 / t
    mc_anti = (cov[0, 0] + cov[1, 1] - 2 * cov[0, 1]) / 2 / t
    as_diag = (d05[0, 0] + d05[1, 1] + 2 * d05[0, 1]) / 2
    as_anti = (d05[0, 0] + d05[1, 1] - 2 * d05[0, 1]) / 2
    rel_diag = abs(mc_diag - as_diag) / as_diag
    rel_anti = abs(mc_anti - as_anti) / as_anti
    assert rel_diag <= 0.15 and rel_anti <= 0.15
    _report(
        "2D walk (fig 4)",
        f"anisotropy {diag_anti_ratio(d01):.2f} -> {diag_anti_ratio(d09):.1f}, "
        f"MC rel gaps {rel_diag:.3f}/{rel_anti:.3f}",
    )


def test_oracle_equivalence():
    """Channel simulation vs Monte Carlo at t=30 within 3x aggregate error."""
    walk = line_walk(broken_links(0.3))
    psi0 = PureState.at_origin(1, np.array([1.0, 1.0j]) / np.sqrt(2))
    t = 30
    mc = monte_carlo(walk, psi0, t, 10_000, seed=11)
    channel = simulate(walk, DensityBlockState.from_pure(psi0), t)[t]
    tv = mc.total_variation(channel)
    bound = 3 * aggregate_standard_error(mc)
    assert tv <= bound
    _report("oracle equivalence", f"TV={tv:.2e} <= {bound:.2e}")


def test_certificates():
    """All four families certify with n <= 2; commuting coin refuses."""
    verdicts = {}
    for name, walk in (
        ("broken_links(0.25)", line_walk(broken_links(0.25))),
        ("broken_links(0.75)", line_walk(broken_links(0.75))),
        ("dephasing(pi/8)", line_walk(dephasing_uniform(np.pi / 8))),
        ("gaussian(pi/4,0.5)", line_walk(gaussian_coin(np.pi / 4, 0.5))),
        ("two_dim(0.5)", two_dim_walk(two_dim(0.5))),
    ):
        cert = walk.certify_contractive()
        verdicts[name] = cert.verdict
        assert cert.verdict != "unknown", name
        assert cert.contraction_power <= 2, name
        assert cert.mean_unitary_norm <= 1 - 1e-8, name

    commuting = line_walk(make_ensemble([(1.0, PAULI_Z)]))
    cert = commuting.certify_contractive()
    assert cert.verdict == "unknown"
    with pytest.raises(CertificateRefusal):
        diffusion_matrix(commuting)
    _report("certificates", ", ".join(f"{k}={v}" for k, v in verdicts.items()))


def test_drift_criteria():
    """Composed index sum, oracle mean drift at t=200, adjusted D PSD."""
    w1 = line_walk(broken_links(0.3))
    w2 = WalkChannel(ShiftTable.make([[1], [1]]), broken_links(0.4))
    gen = compose([w1, w2])
    drift = ballistic_drift(gen)
    expected = sum(idx for idx in gen.per_factor_indices()) / gen.coin_dim
    assert np.allclose(drift.velocity, expected)
    assert drift.velocity[0] == pytest.approx(1.0)

    walk = WalkChannel(ShiftTable.make([[2], [0]]), broken_links(0.5))
    t = 200
    dists = simulate(walk, DensityBlockState.origin_mixed(1, 2), t)
    mean, _ = dists[t].moments()
    rel = abs(mean[0] / t - 1.0)
    assert rel <= 0.02

    res = diffusion_matrix(drift_subtract(walk))
    assert np.linalg.eigvalsh(res.d_matrix).min() >= -1e-9
    _report(
        "drift",
        f"composed v={drift.velocity[0]:.1f}, oracle mean/t off by {rel:.1e}, "
        f"adjusted D={res.d_matrix[0, 0]:.4f}",
    )
