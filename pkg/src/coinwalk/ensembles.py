"""Probability measures on coin unitaries and their averaged maps.

An ensemble is a finitely supported measure on unitary coin matrices.
Continuous families are represented by Gauss-Legendre quadrature atoms,
which is exact far below working tolerance because every downstream map
depends only on low trigonometric moments of the measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHT_TOL = 1e-12
UNITARITY_TOL = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class CoinEnsemble:
    """Finitely supported measure on U(d): weights (K,) and unitaries (K,d,d)."""

    weights: np.ndarray
    unitaries: np.ndarray

    @property
    def coin_dim(self) -> int:
        return self.unitaries.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    def mean_unitary(self) -> np.ndarray:
        """Ensemble average of the coin unitaries (operator norm <= 1)."""
        return np.einsum("k,kab->ab", self.weights, self.unitaries)

    def twirl(self, a: np.ndarray, picture: str = "heisenberg") -> np.ndarray:
        """Averaged conjugation of ``a`` by the coin atoms.

        ``heisenberg`` gives sum_k w_k U_k^* a U_k, ``schrodinger`` the
        adjoint map sum_k w_k U_k a U_k^*.  Both are unital and
        trace preserving.
        """
        arr = np.asarray(a, dtype=complex)
        if arr.shape != (self.coin_dim, self.coin_dim):
            raise ValueError(
                f"matrix shape {arr.shape} does not match coin_dim {self.coin_dim}"
            )
        u = self.unitaries
        if picture == "heisenberg":
            return np.einsum("k,kba,bc,kcd->ad", self.weights, u.conj(), arr, u)
        if picture == "schrodinger":
            return np.einsum("k,kab,bc,kdc->ad", self.weights, u, arr, u.conj())
        raise ValueError(f"unknown picture {picture!r}")

    def twirl_superoperator(self, picture: str = "heisenberg") -> np.ndarray:
        """The twirl as a d^2 x d^2 matrix acting on vec(a) (row-major)."""
        d = self.coin_dim
        u = self.unitaries
        if picture == "heisenberg":
            # row-major vec: vec(A B C) = kron(A, C^T) vec(B)
            mats = [np.kron(uk.conj().T, uk.T) for uk in u]
        elif picture == "schrodinger":
            mats = [np.kron(uk, uk.conj()) for uk in u]
        else:
            raise ValueError(f"unknown picture {picture!r}")
        return np.einsum("k,kab->ab", self.weights, np.array(mats)).reshape(d * d, d * d)

    def pair_products(self, dedup_tol: float = 1e-12) -> list[np.ndarray]:
        """All products U_j^* U_k over atom pairs, deduplicated."""
        d = self.coin_dim
        prods = np.einsum("jba,kbc->jkac", self.unitaries.conj(), self.unitaries)
        flat = prods.reshape(-1, d, d)
        decimals = max(0, int(round(-np.log10(dedup_tol))))
        keyed = np.round(flat.view(float).reshape(flat.shape[0], -1), decimals)
        _, idx = np.unique(keyed, axis=0, return_index=True)
        return [flat[i] for i in sorted(idx)]


def make_ensemble(atoms) -> CoinEnsemble:
    """Validate and build an ensemble from (weight, unitary) pairs."""
    if not atoms:
        raise ValueError("ensemble needs at least one atom")
    weights = np.array([float(w) for w, _ in atoms], dtype=float)
    unitaries = np.array([np.asarray(u, dtype=complex) for _, u in atoms])
    if np.any(weights <= 0):
        raise ValueError("atom weights must be positive")
    if abs(weights.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"atom weights sum to {weights.sum()}, expected 1")
    d = unitaries.shape[1]
    if unitaries.ndim != 3 or unitaries.shape[2] != d:
        raise ValueError("atoms must be square matrices of equal dimension")
    eye = np.eye(d)
    for k, u in enumerate(unitaries):
        if np.linalg.norm(u.conj().T @ u - eye) > UNITARITY_TOL:
            raise ValueError(f"atom {k} is not unitary within {UNITARITY_TOL}")
    return CoinEnsemble(weights, unitaries)


# -- example families ------------------------------------------------------


def broken_links(w: float) -> CoinEnsemble:
    """Hadamard coin with probability w, reflection sigma_x otherwise."""
    if not 0.0 < w < 1.0:
        raise ValueError(f"w={w} outside (0, 1)")
    return make_ensemble([(w, HADAMARD), (1.0 - w, PAULI_X)])


def phase_coin(phi: float) -> np.ndarray:
    return np.diag([np.exp(1j * phi), np.exp(-1j * phi)]) @ HADAMARD


def dephasing_uniform(delta: float, n_nodes: int = 64) -> CoinEnsemble:
    """Hadamard coin with a uniform random relative phase on [-delta, delta]."""
    if not 0.0 < delta < np.pi:
        raise ValueError(f"delta={delta} outside (0, pi)")
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_nodes)
    phis = delta * nodes
    weights = gl_weights / gl_weights.sum()
    return make_ensemble(
        [(wk, phase_coin(phi)) for wk, phi in zip(weights, phis)]
    )


def rotation_coin(r: float) -> np.ndarray:
    """Hermitian unitary [[cos r, sin r], [sin r, -cos r]]."""
    c, s = np.cos(r), np.sin(r)
    return np.array([[c, s], [s, -c]], dtype=complex)


def gaussian_coin(r0: float, sigma: float, n_nodes: int = 64) -> CoinEnsemble:
    """Rotation coins with angle ~ Gaussian(r0, sigma) truncated to [r0-pi, r0+pi].

    The normalization is computed numerically on the truncated interval.
    """
    if sigma <= 0.0:
        raise ValueError(f"sigma={sigma} must be positive")
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_nodes)
    rs = r0 + np.pi * nodes
    density = np.exp(-((rs - r0) ** 2) / sigma**2)
    weights = gl_weights * density
    weights = weights / weights.sum()
    keep = weights > 0
    return make_ensemble(
        [(wk, rotation_coin(r)) for wk, r in zip(weights[keep], rs[keep])]
    )


def two_dim(w: float) -> CoinEnsemble:
    """4-dimensional coin: H(x)H with probability 1-w, sigma_x(x)1 with w.

    The reflection part couples tensor states |0b> <-> |1b>.  The canonical
    walk (see ``channel.two_dim_walk``) assigns shifts so these coupled pairs
    move along the lattice diagonal: ordering (up, down, right, left) <->
    (|00>, |01>, |10>, |11>).
    """
    if not 0.0 < w < 1.0:
        raise ValueError(f"w={w} outside (0, 1)")
    u1 = np.kron(HADAMARD, HADAMARD)
    u2 = np.kron(PAULI_X, np.eye(2, dtype=complex))
    return make_ensemble([(1.0 - w, u1), (w, u2)])


_FAMILIES = {
    "broken_links",
    "dephasing_uniform",
    "gaussian_coin",
    "two_dim",
    "custom",
}


def build_ensemble(spec: dict) -> CoinEnsemble:
    """Build an ensemble from a family descriptor dict (the CLI config form)."""
    family = spec.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown ensemble family {family!r}")
    if family == "broken_links":
        return broken_links(float(spec["w"]))
    if family == "dephasing_uniform":
        return dephasing_uniform(
            float(spec["delta"]), int(spec.get("n_nodes", 64))
        )
    if family == "gaussian_coin":
        return gaussian_coin(
            float(spec["r0"]), float(spec["sigma"]), int(spec.get("n_nodes", 64))
        )
    if family == "two_dim":
        return two_dim(float(spec["w"]))
    atoms = []
    for atom in spec["atoms"]:
        re = np.asarray(atom["unitary_re"], dtype=float)
        im = np.asarray(atom.get("unitary_im", np.zeros_like(re)), dtype=float)
        atoms.append((float(atom["weight"]), re + 1j * im))
    return make_ensemble(atoms)


# -- dephasing phase moments ------------------------------------------------


@dataclass(frozen=True)
class PhaseMoments:
    """First and second trigonometric moments of a dephasing phase measure."""

    r1: float
    r2: float
    theta1: float
    theta2: float


def phase_moments(ensemble: CoinEnsemble, tol: float = 1e-9) -> PhaseMoments:
    """Recover (r_n, theta_n) for n = 1, 2 from a dephasing-family ensemble.

    Every atom must have the form diag(e^{i phi}, e^{-i phi}) H; otherwise the
    ensemble is rejected.
    """
    if ensemble.coin_dim != 2:
        raise ValueError("dephasing ensembles have coin_dim 2")
    phases = []
    for k in range(ensemble.n_atoms):
        u = ensemble.unitaries[k]
        diag = u @ HADAMARD  # H^{-1} = H
        off = abs(diag[0, 1]) + abs(diag[1, 0])
        z0, z1 = diag[0, 0], diag[1, 1]
        if off > tol or abs(abs(z0) - 1) > tol or abs(z0 - np.conj(z1)) > tol:
            raise ValueError(f"atom {k} is not of the form exp(i phi sigma_z) H")
        phases.append(np.angle(z0))
    phases_arr = np.array(phases)
    m1 = np.sum(ensemble.weights * np.exp(1j * phases_arr))
    m2 = np.sum(ensemble.weights * np.exp(2j * phases_arr))
    return PhaseMoments(
        r1=float(abs(m1)),
        r2=float(abs(m2)),
        theta1=float(np.angle(m1)),
        theta2=float(np.angle(m2)),
    )


# -- irreducibility ---------------------------------------------------------


def is_irreducible(mats, rank_tol: float = 1e-8) -> bool:
    """True iff the unital algebra generated by ``mats`` is all of M_d.

    Closure of span{1, generators} under left multiplication by the
    generators, with numerical rank against d^2 (singular values above
    ``rank_tol`` times the largest).
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].shape[0]
    if any(m.shape != (d, d) for m in mats):
        raise ValueError("matrices must share their dimension")
    gens = np.array(mats)

    def _basis(rows: np.ndarray) -> np.ndarray:
        # orthonormal row basis via SVD
        _, svals, vh = np.linalg.svd(rows, full_matrices=False)
        if svals.size == 0 or svals[0] == 0.0:
            return vh[:0]
        keep = svals > rank_tol * svals[0]
        return vh[keep]

    basis = _basis(
        np.concatenate(
            [np.eye(d, dtype=complex).reshape(1, -1), gens.reshape(len(gens), -1)]
        )
    )
    while True:
        span = basis.reshape(-1, d, d)
        prods = np.einsum("gab,nbc->gnac", gens, span).reshape(-1, d * d)
        new_basis = _basis(np.concatenate([basis, prods]))
        if new_basis.shape[0] == basis.shape[0]:
            return basis.shape[0] == d * d
        if new_basis.shape[0] == d * d:
            return True
        basis = new_basis
