"""The averaged walk superoperator and its contractivity certificate.

One time step conjugates an observable by the coin stage (twirl on the
offset-0 block, mean-unitary conjugation elsewhere) and then by the shift,
which relocates matrix element (i, j) of the block at offset x to offset
x + (v_j - v_i).  The identity is always a fixed point; the certificate
below witnesses that some power of the step strictly contracts everything
orthogonal to it, which is what licenses the perturbative asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .ensembles import CoinEnsemble, is_irreducible
from .lattice_ops import DROP_TOL, BandedOperator

CERT_TAU = 1e-8
#: pair-product irreducibility is only attempted up to this many atoms
_PAIR_ATOM_CAP = 80


@dataclass(frozen=True)
class ShiftTable:
    """Conditional shift vectors v_i in Z^s, one per coin basis state."""

    lattice_dim: int
    vectors: np.ndarray  # (coin_dim, lattice_dim) int64

    @staticmethod
    def make(vectors) -> "ShiftTable":
        arr = np.atleast_2d(np.asarray(vectors, dtype=np.int64))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("shift table must be a (coin_dim, lattice_dim) array")
        return ShiftTable(lattice_dim=arr.shape[1], vectors=arr)

    @property
    def coin_dim(self) -> int:
        return self.vectors.shape[0]

    def index(self) -> np.ndarray:
        """ind S = sum_i v_i."""
        return self.vectors.sum(axis=0)


@dataclass(frozen=True)
class ContractivityCertificate:
    """Numerical witness that some power of the walk strictly contracts.

    ``verdict`` is ``irreducible_n1`` (pair products irreducible, the step
    itself contracts), ``spectral_n2`` (mean unitary strictly subunitary and
    every residual unimodular twirl eigenvector is ejected from the
    p-independent subspace by the shift), or ``unknown``.
    """

    verdict: str
    mean_unitary_norm: float
    eta: float
    peripheral_modes: tuple = ()

    @property
    def contraction_power(self) -> int | None:
        return {"irreducible_n1": 1, "spectral_n2": 2}.get(self.verdict)


class Window:
    """Dense bounding-box view of a banded operator, for fast iteration.

    ``data`` has shape (*n, d, d); the block at integer offset ``x`` lives at
    grid index ``x - lo``.
    """

    __slots__ = ("lo", "data")

    def __init__(self, lo: np.ndarray, data: np.ndarray):
        self.lo = np.asarray(lo, dtype=np.int64)
        self.data = data

    @staticmethod
    def zero(lattice_dim: int, coin_dim: int) -> "Window":
        shape = (1,) * lattice_dim + (coin_dim, coin_dim)
        return Window(np.zeros(lattice_dim, dtype=np.int64), np.zeros(shape, complex))

    @staticmethod
    def from_banded(op: BandedOperator) -> "Window":
        if not op.blocks:
            return Window.zero(op.lattice_dim, op.coin_dim)
        offs = np.array(list(op.blocks.keys()), dtype=np.int64)
        lo = offs.min(axis=0)
        hi = offs.max(axis=0)
        shape = tuple((hi - lo + 1).tolist()) + (op.coin_dim, op.coin_dim)
        data = np.zeros(shape, complex)
        for key, mat in op.blocks.items():
            data[tuple(np.asarray(key) - lo)] = mat
        return Window(lo, data)

    def to_banded(
        self, lattice_dim: int, coin_dim: int, drop_tol: float = DROP_TOL
    ) -> BandedOperator:
        norms = self.block_norms()
        idx = np.argwhere(norms > drop_tol)
        blocks = {
            tuple((self.lo + i).tolist()): self.data[tuple(i)].copy() for i in idx
        }
        return BandedOperator(lattice_dim, coin_dim, blocks)

    def copy(self) -> "Window":
        return Window(self.lo.copy(), self.data.copy())

    def block_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=(-2, -1)))

    def hs_norm(self) -> float:
        d = self.data.shape[-1]
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2) / d))

    def zero_mode(self) -> np.ndarray:
        d = self.data.shape[-1]
        idx = -self.lo
        grid = np.array(self.data.shape[: len(self.lo)])
        if np.any(idx < 0) or np.any(idx >= grid):
            return np.zeros((d, d), complex)
        return self.data[tuple(idx)]

    def add_at_zero(self, mat: np.ndarray) -> "Window":
        """Return a window with ``mat`` added to the offset-0 block."""
        s = len(self.lo)
        idx = -self.lo
        grid = np.array(self.data.shape[:s])
        if np.all(idx >= 0) and np.all(idx < grid):
            out = self.copy()
            out.data[tuple(idx)] = out.data[tuple(idx)] + mat
            return out
        lo = np.minimum(self.lo, 0)
        hi = np.maximum(self.lo + grid - 1, 0)
        shape = tuple((hi - lo + 1).tolist()) + self.data.shape[s:]
        data = np.zeros(shape, complex)
        sl = tuple(
            slice(a, a + n) for a, n in zip(self.lo - lo, self.data.shape[:s])
        )
        data[sl] = self.data
        data[tuple(-lo)] += mat
        return Window(lo, data)

    def plus(self, other: "Window") -> "Window":
        """Sum of two windows (new value, union bounding box)."""
        s = len(self.lo)
        lo = np.minimum(self.lo, other.lo)
        hi = np.maximum(
            self.lo + np.array(self.data.shape[:s]) - 1,
            other.lo + np.array(other.data.shape[:s]) - 1,
        )
        shape = tuple((hi - lo + 1).tolist()) + self.data.shape[s:]
        data = np.zeros(shape, complex)
        sl = tuple(slice(a, a + n) for a, n in zip(self.lo - lo, self.data.shape[:s]))
        data[sl] = self.data
        sl = tuple(
            slice(a, a + n) for a, n in zip(other.lo - lo, other.data.shape[:s])
        )
        data[sl] += other.data
        return Window(lo, data)

    def scaled(self, c: complex) -> "Window":
        return Window(self.lo.copy(), c * self.data)

    def trim(self, drop_tol: float = DROP_TOL) -> "Window":
        """Zero sub-tolerance blocks and shrink the bounding box.

        Mutates the underlying buffer; only call on windows you own.
        """
        s = len(self.lo)
        norms = self.block_norms()
        mask = norms > drop_tol
        if not mask.any():
            return Window.zero(s, self.data.shape[-1])
        self.data[~mask] = 0.0
        idx = np.argwhere(mask)
        mins = idx.min(axis=0)
        maxs = idx.max(axis=0)
        sl = tuple(slice(a, b + 1) for a, b in zip(mins, maxs))
        return Window(self.lo + mins, np.ascontiguousarray(self.data[sl]))


@dataclass(frozen=True)
class WalkChannel:
    """One averaged time step: shift table plus a coin ensemble."""

    shift: ShiftTable
    ensemble: CoinEnsemble

    def __post_init__(self):
        if self.shift.coin_dim != self.ensemble.coin_dim:
            raise ValueError(
                f"shift table has {self.shift.coin_dim} vectors but the "
                f"ensemble coin dimension is {self.ensemble.coin_dim}"
            )

    @property
    def lattice_dim(self) -> int:
        return self.shift.lattice_dim

    @property
    def coin_dim(self) -> int:
        return self.shift.coin_dim

    @cached_property
    def mean_unitary(self) -> np.ndarray:
        return self.ensemble.mean_unitary()

    @cached_property
    def mean_unitary_norm(self) -> float:
        return float(np.linalg.norm(self.mean_unitary, ord=2))

    @cached_property
    def offset_moves(self) -> np.ndarray:
        """(d, d, s) array of per-element offset moves v_j - v_i."""
        v = self.shift.vectors
        return v[None, :, :] - v[:, None, :]

    @cached_property
    def band_growth(self) -> np.ndarray:
        """Per-axis maximum |v_j - v_i|: band support grows at most this per step."""
        return np.abs(self.offset_moves).max(axis=(0, 1))

    @cached_property
    def _twirl_h_tensor(self) -> np.ndarray:
        d = self.coin_dim
        return self.ensemble.twirl_superoperator("heisenberg").reshape(d, d, d, d)

    @cached_property
    def _twirl_s_tensor(self) -> np.ndarray:
        d = self.coin_dim
        return self.ensemble.twirl_superoperator("schrodinger").reshape(d, d, d, d)

    # -- superoperator action ------------------------------------------------

    def _apply_window(self, win: Window, drop_tol: float = DROP_TOL) -> Window:
        d = self.coin_dim
        s = self.lattice_dim
        u = self.mean_unitary
        coined = np.matmul(np.matmul(u.conj().T, win.data), u)
        zidx = -win.lo
        grid = np.array(win.data.shape[:s])
        if np.all(zidx >= 0) and np.all(zidx < grid):
            z = tuple(zidx)
            coined[z] = np.einsum("abcd,cd->ab", self._twirl_h_tensor, win.data[z])
        pads = self.band_growth
        new_lo = win.lo - pads
        new_shape = tuple((grid + 2 * pads).tolist()) + (d, d)
        out = np.zeros(new_shape, complex)
        moves = self.offset_moves
        for i in range(d):
            for j in range(d):
                start = pads + moves[i, j]
                sl = tuple(slice(a, a + n) for a, n in zip(start, grid))
                out[sl + (i, j)] = coined[..., i, j]
        return Window(new_lo, out).trim(drop_tol)

    def apply_heisenberg(
        self, op: BandedOperator, drop_tol: float = DROP_TOL
    ) -> BandedOperator:
        """Heisenberg step on a banded operator; the identity is a fixed point."""
        if op.lattice_dim != self.lattice_dim or op.coin_dim != self.coin_dim:
            raise ValueError(
                "operator does not match the walk's lattice/coin dimensions"
            )
        win = self._apply_window(Window.from_banded(op), drop_tol)
        return win.to_banded(self.lattice_dim, self.coin_dim, drop_tol)

    # -- shift combinatorics ---------------------------------------------

    def shift_index(self) -> tuple[np.ndarray, np.ndarray]:
        """(ind S, mean shift): the index sum_i v_i and its average."""
        index = self.shift.index()
        return index, index / self.coin_dim

    def lambda_matrices(self) -> list[np.ndarray]:
        """One real diagonal matrix per lattice axis, diag(v_{i,alpha})."""
        return [
            np.diag(self.shift.vectors[:, alpha].astype(float))
            for alpha in range(self.lattice_dim)
        ]

    # -- certificate ------------------------------------------------------

    def certify_contractive(self, tau: float = CERT_TAU) -> ContractivityCertificate:
        """Decide (sufficiently) whether some power of the step contracts.

        Mirrors the structure used for every example family: either the
        pair products of the atoms are irreducible, or the mean unitary is
        strictly subunitary and every surviving unimodular twirl eigenvector
        has weight on a matrix element whose shift legs differ, so one more
        step ejects it from the p-independent subspace.
        """
        norm_u = self.mean_unitary_norm
        if self.ensemble.n_atoms <= _PAIR_ATOM_CAP and is_irreducible(
            self.ensemble.pair_products()
        ):
            return ContractivityCertificate(
                verdict="irreducible_n1",
                mean_unitary_norm=norm_u,
                eta=_contraction_eta(self),
            )
        if norm_u > 1.0 - tau:
            return ContractivityCertificate(
                verdict="unknown", mean_unitary_norm=norm_u, eta=0.0
            )
        d = self.coin_dim
        tmat = self._twirl_h_tensor.reshape(d * d, d * d)
        vals, vecs = np.linalg.eig(tmat)
        mixing = np.any(self.offset_moves != 0, axis=2)  # (d, d) True if v_i != v_j
        peripheral = []
        ok = True
        for val, vec in zip(vals, vecs.T):
            if abs(val) < 1.0 - tau:
                continue
            x = vec.reshape(d, d)
            x = x - (np.trace(x) / d) * np.eye(d)
            nx = np.linalg.norm(x)
            if nx <= 1e-8:
                continue  # the identity fixed point itself
            x = x / nx
            mix_mag = float(np.max(np.abs(x[mixing]))) if mixing.any() else 0.0
            peripheral.append((float(abs(val)), mix_mag))
            if mix_mag < tau:
                ok = False
        if ok:
            return ContractivityCertificate(
                verdict="spectral_n2",
                mean_unitary_norm=norm_u,
                eta=_contraction_eta(self),
                peripheral_modes=tuple(peripheral),
            )
        return ContractivityCertificate(
            verdict="unknown",
            mean_unitary_norm=norm_u,
            eta=0.0,
            peripheral_modes=tuple(peripheral),
        )


@dataclass(frozen=True)
class GeneralizedWalk:
    """Concatenation of walk steps treated as a single time step.

    ``factors[0]`` acts first physically, so the Heisenberg map applies the
    factors in reverse list order (innermost factor is the last physical one).
    """

    factors: tuple[WalkChannel, ...]

    def __post_init__(self):
        if not self.factors:
            raise ValueError("need at least one factor")
        s = self.factors[0].lattice_dim
        d = self.factors[0].coin_dim
        for w in self.factors:
            if w.lattice_dim != s or w.coin_dim != d:
                raise ValueError(
                    "all composed walks must share lattice and coin dimensions"
                )

    @property
    def lattice_dim(self) -> int:
        return self.factors[0].lattice_dim

    @property
    def coin_dim(self) -> int:
        return self.factors[0].coin_dim

    @property
    def heisenberg_chain(self) -> tuple[WalkChannel, ...]:
        """Factors in Heisenberg application order (innermost first)."""
        return tuple(reversed(self.factors))

    def _apply_window(self, win: Window, drop_tol: float = DROP_TOL) -> Window:
        for w in self.heisenberg_chain:
            win = w._apply_window(win, drop_tol)
        return win

    def apply_heisenberg(
        self, op: BandedOperator, drop_tol: float = DROP_TOL
    ) -> BandedOperator:
        win = self._apply_window(Window.from_banded(op), drop_tol)
        return win.to_banded(self.lattice_dim, self.coin_dim, drop_tol)

    def shift_index(self) -> tuple[np.ndarray, np.ndarray]:
        index = np.sum([w.shift.index() for w in self.factors], axis=0)
        return index, index / self.coin_dim

    def per_factor_indices(self) -> list[np.ndarray]:
        return [w.shift.index() for w in self.factors]

    def certify_contractive(self, tau: float = CERT_TAU) -> ContractivityCertificate:
        """Composite certificate.

        A factor that contracts on its own certifies the composition; factors
        that only certify at power 2 are accepted when the composed square
        demonstrably contracts the probe family.
        """
        certs = [w.certify_contractive(tau) for w in self.factors]
        norm_u = max(c.mean_unitary_norm for c in certs)
        if any(c.verdict == "irreducible_n1" for c in certs):
            return ContractivityCertificate(
                verdict="irreducible_n1",
                mean_unitary_norm=norm_u,
                eta=_contraction_eta(self),
            )
        if any(c.verdict != "unknown" for c in certs):
            eta = _contraction_eta(self)
            if eta > tau:
                return ContractivityCertificate(
                    verdict="spectral_n2", mean_unitary_norm=norm_u, eta=eta
                )
        return ContractivityCertificate(
            verdict="unknown", mean_unitary_norm=norm_u, eta=0.0
        )


def compose(walks) -> GeneralizedWalk:
    """Concatenate walks into a single composed time step."""
    factors = []
    for w in walks:
        if isinstance(w, GeneralizedWalk):
            factors.extend(w.factors)
        else:
            factors.append(w)
    return GeneralizedWalk(tuple(factors))


def line_walk(ensemble: CoinEnsemble) -> WalkChannel:
    """1D walk with the standard +-1 conditional shift."""
    return WalkChannel(ShiftTable.make([[1], [-1]]), ensemble)


def two_dim_walk(ensemble: CoinEnsemble) -> WalkChannel:
    """2D walk on the four-state coin, shifts (up, down, right, left).

    The ordering pairs the reflection-coupled coin states |0b> <-> |1b> with
    diagonal move pairs {(1,0),(0,1)} and {(-1,0),(0,-1)}, so the reflection
    coin transports along the (1,1) diagonal.  The index is (0,0).
    """
    return WalkChannel(
        ShiftTable.make([[1, 0], [-1, 0], [0, 1], [0, -1]]), ensemble
    )


def _contraction_eta(walk, n_random: int = 8, n_iterates: int = 12) -> float:
    """Measured two-step contraction margin on a probe family.

    Probes are random banded operators orthogonal to the identity plus the
    leading normalized iterates of the axis generators (the operators the
    series actually pushes through the map), all unit norm.
    """
    from .lattice_ops import random_banded

    s = walk.lattice_dim
    d = walk.coin_dim
    rng = np.random.default_rng(1234)
    probes: list[Window] = []
    for _ in range(n_random):
        op = random_banded(rng, s, d, radius=1).project_off_identity()
        nrm = op.norm()
        if nrm > 1e-12:
            probes.append(Window.from_banded((1.0 / nrm) * op))
    factors = walk.factors if isinstance(walk, GeneralizedWalk) else (walk,)
    seeds = []
    for w in factors:
        for alpha in range(s):
            diag = w.shift.vectors[:, alpha].astype(float)
            lam = np.diag(diag - diag.mean())
            fnorm = np.linalg.norm(lam)
            if fnorm > 1e-12:
                seeds.append(lam * (np.sqrt(d) / fnorm))  # unit HS norm
    for lam in seeds:
        win = Window.zero(s, d).add_at_zero(lam)
        for _ in range(n_iterates):
            nxt = walk._apply_window(win)
            nrm = nxt.hs_norm()
            if nrm < 1e-12:
                break
            probes.append(win)
            win = nxt.scaled(1.0 / nrm)
    worst = 0.0
    for win in probes:
        one = walk._apply_window(win)
        two = walk._apply_window(one)
        worst = max(worst, two.hs_norm() / max(win.hs_norm(), 1e-300))
    return max(0.0, 1.0 - worst)
