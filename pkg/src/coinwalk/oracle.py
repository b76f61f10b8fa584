"""Exact finite-time channel simulation and Monte Carlo trajectory sampling.

These are the model-independent ground truths the asymptotic formulas are
checked against: the channel simulator evolves the block density matrix
rho_{xy} exactly (up to coherence pruning), the Monte Carlo sampler draws an
independent coin for every occupied site at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import GeneralizedWalk, ShiftTable, WalkChannel
from .errors import ResourceCapError

COHERENCE_TOL = 1e-12
BLOCK_CAP = 2_000_000
_MC_BATCH = 256


@dataclass(frozen=True)
class PureState:
    """Finitely supported wavefunction x -> coin amplitude vector."""

    lattice_dim: int
    coin_dim: int
    amplitudes: dict

    @staticmethod
    def at_origin(lattice_dim: int, coin_vector) -> "PureState":
        vec = np.asarray(coin_vector, dtype=complex)
        nrm = np.linalg.norm(vec)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"coin vector norm is {nrm}, expected 1")
        return PureState(
            lattice_dim, vec.shape[0], {(0,) * lattice_dim: vec}
        )

    def norm(self) -> float:
        return math.sqrt(
            sum(float(np.sum(np.abs(v) ** 2)) for v in self.amplitudes.values())
        )


def pure_unitary_step(shift: ShiftTable, coin: np.ndarray, psi: PureState) -> PureState:
    """One coherent step |x,i> -> sum_j U_ji ... then shift by v_i (test oracle)."""
    out: dict[tuple, np.ndarray] = {}
    v = shift.vectors
    d = psi.coin_dim
    for x, vec in psi.amplitudes.items():
        coined = coin @ vec
        for i in range(d):
            if coined[i] == 0:
                continue
            dest = tuple(int(c) for c in (np.array(x) + v[i]))
            slot = out.setdefault(dest, np.zeros(d, complex))
            slot[i] += coined[i]
    return PureState(psi.lattice_dim, d, out)


@dataclass(frozen=True)
class DensityBlockState:
    """Block density matrix rho_{xy} with finite support.

    Stored as a key array (n, 2s) of position pairs and a stacked block
    array (n, d, d); the ``blocks`` property gives the mapping view.
    """

    lattice_dim: int
    coin_dim: int
    keys: np.ndarray
    mats: np.ndarray

    @staticmethod
    def from_blocks(lattice_dim: int, coin_dim: int, blocks: dict) -> "DensityBlockState":
        keys = []
        mats = []
        for (x, y), mat in blocks.items():
            xs = (x,) if isinstance(x, int) else tuple(x)
            ys = (y,) if isinstance(y, int) else tuple(y)
            keys.append(xs + ys)
            mats.append(np.asarray(mat, dtype=complex))
        if not keys:
            raise ValueError("state needs at least one block")
        return DensityBlockState(
            lattice_dim,
            coin_dim,
            np.asarray(keys, dtype=np.int64),
            np.asarray(mats, dtype=complex),
        )

    @staticmethod
    def origin_mixed(lattice_dim: int, coin_dim: int) -> "DensityBlockState":
        """Origin-localized, maximally mixed coin: the default initial state."""
        zero = (0,) * lattice_dim
        return DensityBlockState.from_blocks(
            lattice_dim,
            coin_dim,
            {(zero, zero): np.eye(coin_dim, dtype=complex) / coin_dim},
        )

    @staticmethod
    def from_pure(psi: PureState) -> "DensityBlockState":
        blocks = {
            (x, y): np.outer(vx, vy.conj())
            for x, vx in psi.amplitudes.items()
            for y, vy in psi.amplitudes.items()
        }
        return DensityBlockState.from_blocks(psi.lattice_dim, psi.coin_dim, blocks)

    @property
    def blocks(self) -> dict:
        s = self.lattice_dim
        return {
            (tuple(k[:s]), tuple(k[s:])): self.mats[i]
            for i, k in enumerate(self.keys.tolist())
        }

    def n_blocks(self) -> int:
        return self.keys.shape[0]

    def _diag_mask(self) -> np.ndarray:
        s = self.lattice_dim
        return np.all(self.keys[:, :s] == self.keys[:, s:], axis=1)

    def trace(self) -> float:
        diag = self._diag_mask()
        return float(np.einsum("naa->n", self.mats[diag]).sum().real)

    def max_offdiag_norm(self) -> float:
        diag = self._diag_mask()
        if np.all(diag):
            return 0.0
        norms = np.sqrt(np.sum(np.abs(self.mats[~diag]) ** 2, axis=(1, 2)))
        return float(norms.max())

    def position_distribution(self, t: int = 0) -> "PositionDistribution":
        s = self.lattice_dim
        diag = self._diag_mask()
        probs: dict[tuple, float] = {}
        for k, mat in zip(self.keys[diag].tolist(), self.mats[diag]):
            p = float(np.trace(mat).real)
            if p != 0.0:
                probs[tuple(k[:s])] = probs.get(tuple(k[:s]), 0.0) + p
        return PositionDistribution(probs=probs, t=t)


def _step_single(
    walk: WalkChannel,
    keys: np.ndarray,
    mats: np.ndarray,
    coherence_tol: float,
    block_cap: int,
) -> tuple[np.ndarray, np.ndarray]:
    s = walk.lattice_dim
    d = walk.coin_dim
    diag = np.all(keys[:, :s] == keys[:, s:], axis=1)
    out = np.empty_like(mats)
    if np.any(~diag):
        u = walk.mean_unitary
        out[~diag] = np.einsum("ab,nbc,dc->nad", u, mats[~diag], u.conj())
    if np.any(diag):
        out[diag] = np.einsum("abcd,ncd->nab", walk._twirl_s_tensor, mats[diag])
    v = walk.shift.vectors
    # row i*d+j of `shifts` moves block (x, y) element (i, j) to (x+v_i, y+v_j)
    shifts = np.concatenate([np.repeat(v, d, axis=0), np.tile(v, (d, 1))], axis=1)
    n = keys.shape[0]
    dest = (keys[:, None, :] + shifts[None, :, :]).reshape(n * d * d, 2 * s)
    vals = out.reshape(n * d * d)
    ij = np.tile(np.arange(d * d), n)
    nz = vals != 0
    dest, vals, ij = dest[nz], vals[nz], ij[nz]
    uniq, inv = np.unique(dest, axis=0, return_inverse=True)
    if uniq.shape[0] > block_cap:
        raise ResourceCapError(
            f"channel step produced {uniq.shape[0]} blocks (cap {block_cap})"
        )
    new_mats = np.zeros((uniq.shape[0], d, d), complex)
    np.add.at(new_mats.reshape(-1, d * d), (inv, ij), vals)
    if coherence_tol > 0.0:
        new_diag = np.all(uniq[:, :s] == uniq[:, s:], axis=1)
        norms = np.sqrt(np.sum(np.abs(new_mats) ** 2, axis=(1, 2)))
        keep = new_diag | (norms >= coherence_tol)
        uniq, new_mats = uniq[keep], new_mats[keep]
    return uniq, new_mats


def channel_step(
    walk,
    state: DensityBlockState,
    coherence_tol: float = 0.0,
    block_cap: int = BLOCK_CAP,
) -> DensityBlockState:
    """One averaged time step in the Schroedinger picture.

    Diagonal position blocks pass through the Schroedinger twirl, coherences
    are conjugated by the mean unitary, then the shift relabels element
    (i, j) of block (x, y) to block (x + v_i, y + v_j).  Trace and
    Hermiticity are preserved exactly.
    """
    factors = walk.factors if isinstance(walk, GeneralizedWalk) else (walk,)
    keys, mats = state.keys, state.mats
    for f in factors:
        if f.lattice_dim != state.lattice_dim or f.coin_dim != state.coin_dim:
            raise ValueError("state does not match the walk's dimensions")
        keys, mats = _step_single(f, keys, mats, coherence_tol, block_cap)
    return DensityBlockState(state.lattice_dim, state.coin_dim, keys, mats)


def simulate(
    walk,
    rho0: DensityBlockState,
    t: int,
    coherence_tol: float = COHERENCE_TOL,
    block_cap: int = BLOCK_CAP,
) -> list["PositionDistribution"]:
    """Evolve ``rho0`` for ``t`` steps; returns distributions at 0..t."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    state = rho0
    dists = [state.position_distribution(0)]
    for step in range(1, t + 1):
        state = channel_step(walk, state, coherence_tol, block_cap)
        dists.append(state.position_distribution(step))
    return dists


@dataclass(frozen=True)
class PositionDistribution:
    """Probability mass on lattice sites after ``t`` steps."""

    probs: dict
    t: int
    std_err: dict | None = None

    def total_mass(self) -> float:
        return float(sum(self.probs.values()))

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact mean vector and central covariance matrix."""
        if not self.probs:
            raise ValueError("empty distribution")
        xs = np.array(list(self.probs.keys()), dtype=float)
        ps = np.array(list(self.probs.values()), dtype=float)
        mean = ps @ xs
        centered = xs - mean
        cov = (centered * ps[:, None]).T @ centered
        return mean, cov

    def neighbor_average(self) -> "PositionDistribution":
        """Two-site smoothing (P(x) + P(x+1))/2 over the support hull (1D)."""
        if len(next(iter(self.probs))) != 1:
            raise ValueError("neighbor averaging is defined for 1D distributions")
        xs = sorted(x for (x,) in self.probs)
        lo, hi = xs[0] - 1, xs[-1]
        out = {}
        for x in range(lo, hi + 1):
            out[(x,)] = 0.5 * (
                self.probs.get((x,), 0.0) + self.probs.get((x + 1,), 0.0)
            )
        return PositionDistribution(probs=out, t=self.t)

    def total_variation(self, other: "PositionDistribution") -> float:
        sites = set(self.probs) | set(other.probs)
        return 0.5 * sum(
            abs(self.probs.get(x, 0.0) - other.probs.get(x, 0.0)) for x in sites
        )


def total_variation_to_density(dist: PositionDistribution, density) -> float:
    """TV distance between a lattice distribution and a density sampled on it.

    The density is evaluated at the integer sites of the distribution's
    hull (unit cells), with the off-hull density mass charged to the
    distance.
    """
    xs = np.array(list(dist.probs.keys()), dtype=float)
    ps = np.array(list(dist.probs.values()), dtype=float)
    dens = np.array([density(x) for x in xs])
    inside = dens.sum()
    return 0.5 * (float(np.abs(ps - dens).sum()) + max(0.0, 1.0 - float(inside)))


def monte_carlo(
    walk,
    psi0: PureState,
    t: int,
    n_traj: int,
    seed: int = 0,
    batch_size: int = _MC_BATCH,
    dtype=complex,
) -> PositionDistribution:
    """Sample coin-trajectory unravelings of the averaged walk.

    Every occupied window site draws an independent coin each step.  Streams
    are Philox counter blocks keyed by (seed, batch, step, factor), so results
    are reproducible for a given seed and independent of n_traj up to batch
    granularity.  Work is confined to the growing light cone; ``dtype``
    can be complex64 for bandwidth-bound 2D runs.
    """
    if t < 0 or n_traj < 1:
        raise ValueError("need t >= 0 and n_traj >= 1")
    factors = walk.factors if isinstance(walk, GeneralizedWalk) else (walk,)
    s = factors[0].lattice_dim
    d = factors[0].coin_dim
    if psi0.lattice_dim != s or psi0.coin_dim != d:
        raise ValueError("initial state does not match the walk's dimensions")
    growths = [np.abs(f.shift.vectors).max(axis=0).astype(int) for f in factors]
    init_radius = np.max(
        np.abs(np.array(list(psi0.amplitudes.keys()), dtype=int)), axis=0
    )
    radius = init_radius + np.sum(growths, axis=0) * max(t, 1)
    shape = tuple(int(2 * r + 1) for r in radius)
    center = radius
    base = np.zeros(shape + (d,), dtype)
    for x, vec in psi0.amplitudes.items():
        base[tuple(center + np.asarray(x, dtype=int))] = vec.astype(dtype)
    axes = tuple(range(1, 1 + s))
    sum_q = np.zeros(shape)
    sum_q2 = np.zeros(shape)
    cums = [np.cumsum(f.ensemble.weights) for f in factors]
    unitaries = [
        [uk.astype(dtype) for uk in f.ensemble.unitaries] for f in factors
    ]
    n_batches = (n_traj + batch_size - 1) // batch_size
    for b in range(n_batches):
        nb = min(batch_size, n_traj - b * batch_size)
        psi = np.broadcast_to(base, (nb,) + base.shape).copy()
        cur = init_radius.copy()
        for step in range(t):
            for fi, f in enumerate(factors):
                cur = np.minimum(cur + growths[fi], radius)
                box = tuple(
                    slice(int(c - r), int(c + r + 1)) for c, r in zip(center, cur)
                )
                view = psi[(slice(None),) + box]
                rng = np.random.Generator(
                    np.random.Philox(key=_philox_key(seed, b, step, fi))
                )
                u = rng.random(view.shape[:-1])
                idx = np.clip(
                    np.searchsorted(cums[fi], u, side="right"), 0, len(cums[fi]) - 1
                )
                n_atoms = f.ensemble.n_atoms
                if n_atoms <= 8:
                    # dense path: K full matmuls beat fancy-index copies
                    new = np.zeros_like(view)
                    for k in range(n_atoms):
                        sel = idx == k
                        if np.any(sel):
                            new += sel[..., None] * (view @ unitaries[fi][k].T)
                else:
                    new = np.array(view)
                    for k in range(n_atoms):
                        mask = idx == k
                        if np.any(mask):
                            new[mask] = view[mask] @ unitaries[fi][k].T
                vecs = f.shift.vectors
                for i in range(d):
                    view[..., i] = np.roll(
                        new[..., i], shift=tuple(vecs[i]), axis=axes
                    )
        q = np.sum(np.abs(psi) ** 2, axis=-1)
        sum_q += q.sum(axis=0)
        sum_q2 += (q * q).sum(axis=0)
    mean = sum_q / n_traj
    if n_traj > 1:
        var = np.maximum(sum_q2 / n_traj - mean**2, 0.0) * n_traj / (n_traj - 1)
        se = np.sqrt(var / n_traj)
    else:
        se = np.zeros_like(mean)
    occupied = np.argwhere(mean > 0)
    probs = {}
    errs = {}
    for idx in occupied:
        site = tuple(int(c) for c in (idx - center))
        probs[site] = float(mean[tuple(idx)])
        errs[site] = float(se[tuple(idx)])
    return PositionDistribution(probs=probs, t=t, std_err=errs)


def _philox_key(seed: int, batch: int, step: int, factor: int) -> np.ndarray:
    lo = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    hi = np.uint64(
        ((batch & 0xFFFFFFFF) << 32) | ((step & 0xFFFFFF) << 8) | (factor & 0xFF)
    )
    return np.array([lo, hi], dtype=np.uint64)


def aggregate_standard_error(dist: PositionDistribution) -> float:
    """Half the summed per-site standard errors: the TV-scale error bar."""
    if not dist.std_err:
        return 0.0
    return 0.5 * float(sum(dist.std_err.values()))
