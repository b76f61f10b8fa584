import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coinwalk.channel import (
    ShiftTable,
    WalkChannel,
    compose,
    line_walk,
    two_dim_walk,
)
from coinwalk.ensembles import (
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    broken_links,
    dephasing_uniform,
    gaussian_coin,
    make_ensemble,
    two_dim,
)
from coinwalk.lattice_ops import BandedOperator, random_banded

seeds = st.integers(min_value=0, max_value=10_000)


def ketbra(i, j, d=2):
    m = np.zeros((d, d), complex)
    m[i - 1, j - 1] = 1.0
    return m


def shift_conjugate(walk, mat):
    """S* M S for a p-independent matrix: element (i,j) lands at v_j - v_i."""
    d = walk.coin_dim
    blocks = {}
    for i in range(d):
        for j in range(d):
            if mat[i, j] == 0:
                continue
            key = tuple(int(c) for c in walk.offset_moves[i, j])
            b = blocks.setdefault(key, np.zeros((d, d), complex))
            b[i, j] += mat[i, j]
    return BandedOperator.from_blocks(walk.lattice_dim, d, blocks)


def random_walk_channel(rng, s=1, d=2):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    u1 = q * (np.diag(r) / np.abs(np.diag(r)))
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    u2 = q * (np.diag(r) / np.abs(np.diag(r)))
    w = float(rng.uniform(0.2, 0.8))
    vecs = rng.integers(-2, 3, size=(d, s))
    return WalkChannel(
        ShiftTable.make(vecs), make_ensemble([(w, u1), (1 - w, u2)])
    )


# -- fixed point and basic action ---------------------------------------------


def test_identity_is_fixed_point():
    walks = [
        line_walk(broken_links(0.3)),
        line_walk(dephasing_uniform(0.9)),
        two_dim_walk(two_dim(0.7)),
        WalkChannel(ShiftTable.make([[2], [0]]), broken_links(0.5)),
    ]
    for walk in walks:
        ident = BandedOperator.identity(walk.lattice_dim, walk.coin_dim)
        assert walk.apply_heisenberg(ident).allclose(ident, tol=1e-13)


def test_broken_links_pauli_relation():
    # blockwise check of the one-step image of a p-independent Pauli mix
    rng = np.random.default_rng(2)
    w = 0.37
    walk = line_walk(broken_links(w))
    ax, ay, az = rng.standard_normal(3)
    a = BandedOperator.from_blocks(
        1, 2, {0: ax * PAULI_X + ay * PAULI_Y + az * PAULI_Z}
    )
    got = walk.apply_heisenberg(a)
    sx = shift_conjugate(walk, PAULI_X)
    sy = shift_conjugate(walk, PAULI_Y)
    sz_banded = BandedOperator.from_blocks(1, 2, {0: PAULI_Z})
    expected = (
        (w * ax) * sz_banded
        + (-w * ay) * sy
        + (w * az) * sx
        + ((1 - w) * ax) * sx
        + (-(1 - w) * ay) * sy
        + (-(1 - w) * az) * sz_banded
    )
    assert got.allclose(expected, tol=1e-12)


def test_trivial_coin_relocates_elements():
    walk = WalkChannel(
        ShiftTable.make([[1], [-1]]), make_ensemble([(1.0, np.eye(2))])
    )
    a = BandedOperator.from_blocks(1, 2, {0: ketbra(1, 2)})
    out = walk.apply_heisenberg(a)
    assert set(out.blocks) == {(-2,)}
    assert np.allclose(out.block(-2), ketbra(1, 2))


def test_action_matches_momentum_conjugation_identity():
    # W(A)(p) = S(p)* [T(A0) + U~*(A(p)-A0)U~] S(p) on a momentum grid
    rng = np.random.default_rng(4)
    walk = line_walk(broken_links(0.41))
    a = random_banded(rng, 1, 2, radius=2)
    out = walk.apply_heisenberg(a)
    u = walk.mean_unitary
    a0 = a.zero_mode()
    t_a0 = walk.ensemble.twirl(a0, "heisenberg")
    for p in np.linspace(0, 2 * np.pi, 9):
        sp = np.diag(np.exp(1j * p * walk.shift.vectors[:, 0]))
        coin = t_a0 + u.conj().T @ (a.evaluate_at_momentum([p]) - a0) @ u
        expected = sp.conj().T @ coin @ sp
        assert np.allclose(out.evaluate_at_momentum([p]), expected, atol=1e-12)


def test_apply_rejects_dimension_mismatch():
    walk = line_walk(broken_links(0.5))
    with pytest.raises(ValueError):
        walk.apply_heisenberg(BandedOperator.identity(1, 3))
    with pytest.raises(ValueError):
        walk.apply_heisenberg(BandedOperator.identity(2, 2))


# -- shift combinatorics -------------------------------------------------------


def test_shift_index_values():
    assert np.array_equal(line_walk(broken_links(0.5)).shift_index()[0], [0])
    idx2, vel2 = two_dim_walk(two_dim(0.5)).shift_index()
    assert np.array_equal(idx2, [0, 0]) and np.array_equal(vel2, [0.0, 0.0])
    walk = WalkChannel(ShiftTable.make([[1], [1]]), broken_links(0.5))
    idx, vel = walk.shift_index()
    assert idx[0] == 2 and vel[0] == 1.0


def test_lambda_matrices():
    walk = line_walk(broken_links(0.5))
    (lam,) = walk.lambda_matrices()
    assert np.allclose(lam, PAULI_Z)
    paper_order = WalkChannel(
        ShiftTable.make([[1, 0], [-1, 0], [0, -1], [0, 1]]), two_dim(0.5)
    )
    lam1, lam2 = paper_order.lambda_matrices()
    assert np.allclose(lam1, np.diag([1.0, -1.0, 0.0, 0.0]))
    assert np.allclose(lam2, np.diag([0.0, 0.0, -1.0, 1.0]))
    for walk in (paper_order, two_dim_walk(two_dim(0.2))):
        _, vel = walk.shift_index()
        for a, lam in enumerate(walk.lambda_matrices()):
            assert np.trace(lam).real / walk.coin_dim == pytest.approx(vel[a])
            # diagonals reconstruct the shift table
            assert np.array_equal(
                np.diag(lam).astype(int), walk.shift.vectors[:, a]
            )


# -- certificates --------------------------------------------------------------


def test_certificates_for_example_families():
    for w in (0.1, 0.5, 0.9):
        assert (
            line_walk(broken_links(w)).certify_contractive().verdict
            == "spectral_n2"
        )
    assert (
        line_walk(dephasing_uniform(np.pi / 8)).certify_contractive().verdict
        == "spectral_n2"
    )
    assert (
        line_walk(gaussian_coin(np.pi / 4, 0.5)).certify_contractive().verdict
        == "spectral_n2"
    )
    for w in (0.1, 0.9):
        assert (
            two_dim_walk(two_dim(w)).certify_contractive().verdict
            == "spectral_n2"
        )


def test_commuting_coin_is_unknown():
    walk = line_walk(make_ensemble([(1.0, PAULI_Z)]))
    cert = walk.certify_contractive()
    assert cert.verdict == "unknown"
    assert cert.mean_unitary_norm == pytest.approx(1.0)


def test_unitary_walk_is_unknown():
    cert = line_walk(make_ensemble([(1.0, HADAMARD)])).certify_contractive()
    assert cert.verdict == "unknown"


def test_irreducible_pair_products_certify_at_power_one():
    ens = make_ensemble([(0.4, HADAMARD), (0.3, PAULI_X), (0.3, np.eye(2))])
    cert = line_walk(ens).certify_contractive()
    assert cert.verdict == "irreducible_n1"
    assert cert.contraction_power == 1


def test_certificate_witnesses_are_consistent():
    cert = line_walk(broken_links(0.5)).certify_contractive()
    assert cert.mean_unitary_norm <= 1.0 - 1e-8
    assert cert.eta > 1e-8
    for absval, mix in cert.peripheral_modes:
        assert absval >= 1.0 - 1e-8
        assert mix >= 1e-8


# -- contraction properties ----------------------------------------------------


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_step_never_expands(seed):
    rng = np.random.default_rng(seed)
    walk = random_walk_channel(rng)
    a = random_banded(rng, 1, 2, radius=2)
    assert walk.apply_heisenberg(a).norm() <= a.norm() * (1 + 1e-10)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_single_atom_walk_is_isometric(seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    walk = line_walk(make_ensemble([(1.0, u)]))
    a = random_banded(rng, 1, 2, radius=2)
    assert walk.apply_heisenberg(a).norm() == pytest.approx(
        a.norm(), abs=1e-12 * max(1.0, a.norm())
    )


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_step_preserves_adjoints(seed):
    rng = np.random.default_rng(seed)
    walk = random_walk_channel(rng)
    a = random_banded(rng, 1, 2, radius=1)
    assert walk.apply_heisenberg(a.adjoint()).allclose(
        walk.apply_heisenberg(a).adjoint(), tol=1e-11
    )


def test_coin_stage_never_mixes_subspaces():
    # images of the p-independent subspace and its complement stay orthogonal
    rng = np.random.default_rng(9)
    walk = line_walk(broken_links(0.6))
    for _ in range(10):
        mat = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        a0 = BandedOperator.from_blocks(1, 2, {0: mat})
        rest = random_banded(rng, 1, 2, radius=2)
        rest = rest - BandedOperator.from_blocks(1, 2, {0: rest.zero_mode()})
        ia = walk.apply_heisenberg(a0)
        ib = walk.apply_heisenberg(rest)
        assert abs(ia.hs_inner(ib)) <= 1e-11 * max(ia.norm() * ib.norm(), 1e-30)


def test_certified_square_contracts_probe_family():
    rng = np.random.default_rng(21)
    for walk in (
        line_walk(broken_links(0.5)),
        line_walk(dephasing_uniform(np.pi / 6)),
        line_walk(gaussian_coin(np.pi / 4, 0.5)),
    ):
        cert = walk.certify_contractive()
        eta = cert.eta
        assert eta > 0
        for _ in range(5):
            a = random_banded(rng, 1, 2, radius=2).project_off_identity()
            a = (1.0 / a.norm()) * a
            twice = walk.apply_heisenberg(walk.apply_heisenberg(a))
            assert twice.norm() < 1.0
            # recorded margin is representative of fresh probes
            assert twice.norm() <= 1.0 - 0.9 * eta


def test_band_growth_bound():
    rng = np.random.default_rng(13)
    walk = WalkChannel(ShiftTable.make([[2], [-1]]), broken_links(0.5))
    growth = walk.band_growth[0]
    assert growth == 3
    a = random_banded(rng, 1, 2, radius=2)
    out = walk.apply_heisenberg(a)
    assert out.band_radius()[0] <= a.band_radius()[0] + growth


# -- composition ----------------------------------------------------------------


def test_compose_singleton_acts_identically():
    rng = np.random.default_rng(17)
    walk = line_walk(broken_links(0.3))
    gen = compose([walk])
    for _ in range(5):
        a = random_banded(rng, 1, 2, radius=2)
        assert gen.apply_heisenberg(a).allclose(
            walk.apply_heisenberg(a), tol=1e-12
        )


def test_compose_preserves_identity():
    walk = line_walk(broken_links(0.3))
    gen = compose([walk, walk])
    ident = BandedOperator.identity(1, 2)
    assert gen.apply_heisenberg(ident).allclose(ident, tol=1e-13)


def test_composed_drift_adds_indices():
    w1 = line_walk(broken_links(0.3))
    w2 = WalkChannel(ShiftTable.make([[1], [1]]), dephasing_uniform(1.0))
    gen = compose([w1, w2])
    idx, vel = gen.shift_index()
    assert idx[0] == 2 and vel[0] == 1.0
    assert [int(i[0]) for i in gen.per_factor_indices()] == [0, 2]


def test_compose_rejects_mismatched_dimensions():
    w1 = line_walk(broken_links(0.3))
    w2 = two_dim_walk(two_dim(0.5))
    with pytest.raises(ValueError):
        compose([w1, w2])


def test_composed_certificate():
    contractive = line_walk(broken_links(0.5))
    unitary = line_walk(make_ensemble([(1.0, HADAMARD)]))
    assert (
        compose([contractive, unitary]).certify_contractive().verdict
        != "unknown"
    )
    assert (
        compose([unitary, unitary]).certify_contractive().verdict == "unknown"
    )
