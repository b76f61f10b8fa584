"""Translation-invariant banded operators on the lattice Hilbert space.

A bounded operator on l2(Z^s) (x) C^d that commutes with all lattice
translations is determined by its blocks A_{x0} coupling offset x to the
origin.  Operators with finitely many nonzero blocks ("banded") are closed
under the walk dynamics up to a bounded band growth per step, which makes
them the working representation for every series computation in this
package.  The momentum symbol is A(p) = sum_x exp(i p.x) A_{x0}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

#: blocks with Frobenius norm below this are dropped after arithmetic
DROP_TOL = 1e-14

Offset = tuple[int, ...]


def as_offset(offset, lattice_dim: int) -> Offset:
    """Normalize an offset (int or iterable of ints) to a tuple key."""
    if isinstance(offset, (int, np.integer)):
        key: Offset = (int(offset),)
    else:
        key = tuple(int(c) for c in offset)
    if len(key) != lattice_dim:
        raise ValueError(
            f"offset {offset!r} does not have {lattice_dim} coordinate(s)"
        )
    return key


@dataclass(frozen=True)
class BandedOperator:
    """Finitely banded translation-invariant operator.

    ``blocks`` maps integer offset vectors to complex ``(d, d)`` arrays.
    Instances are immutable by convention: every operation returns a new
    value, so they are safe to share across workers.
    """

    lattice_dim: int
    coin_dim: int
    blocks: Mapping[Offset, np.ndarray]

    # -- construction ---------------------------------------------------

    @staticmethod
    def from_blocks(
        lattice_dim: int,
        coin_dim: int,
        blocks: Mapping | Iterable[tuple],
        drop_tol: float = DROP_TOL,
    ) -> "BandedOperator":
        if lattice_dim < 1 or coin_dim < 1:
            raise ValueError("lattice_dim and coin_dim must be positive")
        items = blocks.items() if isinstance(blocks, Mapping) else blocks
        norm_blocks: dict[Offset, np.ndarray] = {}
        for offset, mat in items:
            key = as_offset(offset, lattice_dim)
            arr = np.asarray(mat, dtype=complex)
            if arr.shape != (coin_dim, coin_dim):
                raise ValueError(
                    f"block at {key} has shape {arr.shape}, expected "
                    f"({coin_dim}, {coin_dim})"
                )
            if not np.all(np.isfinite(arr.view(float))):
                raise ValueError(f"block at {key} has non-finite entries")
            if key in norm_blocks:
                arr = norm_blocks[key] + arr
            norm_blocks[key] = arr
        norm_blocks = {
            k: v for k, v in norm_blocks.items()
            if np.linalg.norm(v) > drop_tol
        }
        return BandedOperator(lattice_dim, coin_dim, norm_blocks)

    @staticmethod
    def identity(lattice_dim: int, coin_dim: int) -> "BandedOperator":
        zero = (0,) * lattice_dim
        return BandedOperator(
            lattice_dim, coin_dim, {zero: np.eye(coin_dim, dtype=complex)}
        )

    # -- basic queries ---------------------------------------------------

    def block(self, offset) -> np.ndarray:
        """Block at ``offset``; missing blocks read as zero."""
        key = as_offset(offset, self.lattice_dim)
        mat = self.blocks.get(key)
        if mat is None:
            return np.zeros((self.coin_dim, self.coin_dim), dtype=complex)
        return mat

    def zero_mode(self) -> np.ndarray:
        """Offset-0 block, i.e. the momentum average of the symbol."""
        return self.block((0,) * self.lattice_dim)

    def evaluate_at_momentum(self, p) -> np.ndarray:
        """Momentum symbol sum_x exp(i p.x) A_{x0} at ``p``."""
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        if p_arr.shape != (self.lattice_dim,):
            raise ValueError(
                f"momentum {p!r} does not have {self.lattice_dim} coordinate(s)"
            )
        out = np.zeros((self.coin_dim, self.coin_dim), dtype=complex)
        for offset, mat in self.blocks.items():
            out += np.exp(1j * float(np.dot(p_arr, offset))) * mat
        return out

    def band_radius(self) -> np.ndarray:
        """Per-axis maximum |offset coordinate| of the support."""
        if not self.blocks:
            return np.zeros(self.lattice_dim, dtype=np.int64)
        offs = np.array(list(self.blocks.keys()), dtype=np.int64)
        return np.abs(offs).max(axis=0)

    # -- inner-product algebra --------------------------------------------

    def _check_compatible(self, other: "BandedOperator") -> None:
        if (
            self.lattice_dim != other.lattice_dim
            or self.coin_dim != other.coin_dim
        ):
            raise ValueError(
                "operators live on different spaces: "
                f"(s={self.lattice_dim}, d={self.coin_dim}) vs "
                f"(s={other.lattice_dim}, d={other.coin_dim})"
            )

    def hs_inner(self, other: "BandedOperator") -> complex:
        """Normalized trace inner product (1/d) sum_x tr(A_{x0}^* B_{x0})."""
        self._check_compatible(other)
        acc = 0.0 + 0.0j
        for offset, mat in self.blocks.items():
            omat = other.blocks.get(offset)
            if omat is not None:
                acc += np.trace(mat.conj().T @ omat)
        return acc / self.coin_dim

    def norm(self) -> float:
        return float(np.sqrt(max(self.hs_inner(self).real, 0.0)))

    def project_off_identity(self) -> "BandedOperator":
        """Component orthogonal to the identity: A - <1,A> 1."""
        ident = BandedOperator.identity(self.lattice_dim, self.coin_dim)
        coeff = ident.hs_inner(self)
        return self + (-coeff) * ident

    def adjoint(self) -> "BandedOperator":
        blocks = {
            tuple(-c for c in offset): mat.conj().T
            for offset, mat in self.blocks.items()
        }
        return BandedOperator(self.lattice_dim, self.coin_dim, blocks)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "BandedOperator") -> "BandedOperator":
        self._check_compatible(other)
        blocks = dict(self.blocks)
        for offset, mat in other.blocks.items():
            blocks[offset] = blocks[offset] + mat if offset in blocks else mat
        blocks = {k: v for k, v in blocks.items() if np.linalg.norm(v) > DROP_TOL}
        return BandedOperator(self.lattice_dim, self.coin_dim, blocks)

    def __sub__(self, other: "BandedOperator") -> "BandedOperator":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "BandedOperator":
        c = complex(scalar)
        if c == 0:
            return BandedOperator(self.lattice_dim, self.coin_dim, {})
        return BandedOperator(
            self.lattice_dim,
            self.coin_dim,
            {k: c * v for k, v in self.blocks.items()},
        )

    def prune(self, drop_tol: float = DROP_TOL) -> "BandedOperator":
        blocks = {
            k: v for k, v in self.blocks.items()
            if np.linalg.norm(v) > drop_tol
        }
        return BandedOperator(self.lattice_dim, self.coin_dim, blocks)

    def allclose(self, other: "BandedOperator", tol: float = 1e-12) -> bool:
        self._check_compatible(other)
        keys = set(self.blocks) | set(other.blocks)
        return all(
            np.allclose(self.block(k), other.block(k), atol=tol, rtol=0.0)
            for k in keys
        )


def hs_inner(a: BandedOperator, b: BandedOperator) -> complex:
    return a.hs_inner(b)


def random_banded(
    rng: np.random.Generator,
    lattice_dim: int,
    coin_dim: int,
    radius: int = 2,
    hermitian: bool = False,
) -> BandedOperator:
    """Random test operator with offsets in [-radius, radius]^s."""
    blocks = {}
    for offset in np.ndindex(*[2 * radius + 1] * lattice_dim):
        key = tuple(o - radius for o in offset)
        mat = rng.standard_normal((coin_dim, coin_dim)) + 1j * rng.standard_normal(
            (coin_dim, coin_dim)
        )
        blocks[key] = mat
    op = BandedOperator.from_blocks(lattice_dim, coin_dim, blocks)
    if hermitian:
        op = 0.5 * (op + op.adjoint())
    return op
