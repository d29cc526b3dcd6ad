"""Dense complex matrix algebra with a fixed block partition.

All square matrices handled here are (N*M) x (N*M) arrays viewed as an
N x N grid of M x M blocks, described by a :class:`BlockSpec`.  The block
vectorization and block Kronecker product follow one pinned convention:

* ``bvec`` stacks blocks column-of-blocks first, and vectorizes each M x M
  block column-major, producing an (N*M)**2 vector;
* ``block_kron`` is laid out so that for conforming A, S, B

      bvec(A @ S @ B) == block_kron(B.T, A) @ bvec(S)

  holds exactly.  The whole performance analysis rests on this identity,
  so the ordering must not be changed independently anywhere.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SOLVE_RTOL = 1e-8


class ShapeError(ValueError):
    """Operands do not conform to the required dimensions."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Matrix is singular to the working tolerance."""


@dataclass(frozen=True)
class BlockSpec:
    """Partition of an (N*M) x (N*M) matrix into N x N blocks of size M."""

    num_blocks: int
    block_size: int

    def __post_init__(self):
        if self.num_blocks < 1 or self.block_size < 1:
            raise ValueError("BlockSpec requires num_blocks >= 1 and block_size >= 1")

    @property
    def dim(self) -> int:
        return self.num_blocks * self.block_size

    @property
    def vec_dim(self) -> int:
        return self.dim * self.dim


def _as_matrix(x, name="operand"):
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _check_conform(a, spec: BlockSpec, name):
    if a.shape != (spec.dim, spec.dim):
        raise ShapeError(
            f"{name} has shape {a.shape}, expected ({spec.dim}, {spec.dim}) "
            f"for {spec.num_blocks} blocks of size {spec.block_size}"
        )


def kron(a, b) -> np.ndarray:
    """Standard Kronecker product of two dense matrices."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    return np.kron(a, b)


def block_kron(a, b, spec: BlockSpec) -> np.ndarray:
    """Block Kronecker product of two matrices conforming to ``spec``.

    The result is (N*M)**2 square.  Its block at super-row (i, k) and
    super-column (j, l) is ``A_ij (x) B_kl``, which is exactly the
    arrangement that makes the bvec identity in the module docstring hold.
    With ``num_blocks == 1`` this reduces to the plain Kronecker product.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    _check_conform(a, spec, "a")
    _check_conform(b, spec, "b")
    n, m = spec.num_blocks, spec.block_size
    ar = a.reshape(n, m, n, m)
    br = b.reshape(n, m, n, m)
    out = np.einsum("iajb,kcld->ikacjlbd", ar, br)
    return np.ascontiguousarray(out.reshape(spec.vec_dim, spec.vec_dim))


def bvec(x, spec: BlockSpec) -> np.ndarray:
    """Block-vectorize ``x`` into a 1-D array of length (N*M)**2."""
    x = _as_matrix(x, "x")
    _check_conform(x, spec, "x")
    n, m = spec.num_blocks, spec.block_size
    # axes become (block-col j, block-row i, in-block col b, in-block row a)
    return np.ascontiguousarray(x.reshape(n, m, n, m).transpose(2, 0, 3, 1).reshape(-1))


def unbvec(v, spec: BlockSpec) -> np.ndarray:
    """Inverse of :func:`bvec`: rebuild the matrix from its block vector."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != spec.vec_dim:
        raise ShapeError(f"vector has length {v.size}, expected {spec.vec_dim}")
    n, m = spec.num_blocks, spec.block_size
    return np.ascontiguousarray(v.reshape(n, n, m, m).transpose(1, 3, 0, 2).reshape(spec.dim, spec.dim))


def spectral_radius(x) -> float:
    """Largest eigenvalue magnitude of a square matrix."""
    x = _as_matrix(x, "x")
    if x.shape[0] != x.shape[1]:
        raise ShapeError(f"spectral_radius needs a square matrix, got {x.shape}")
    return float(np.abs(np.linalg.eigvals(x)).max())


def solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` and verify the residual.

    Raises :class:`SingularMatrixError` when ``a`` is singular, or so
    ill-conditioned that the relative residual exceeds ``SOLVE_RTOL``;
    dimension mismatches raise :class:`ShapeError` instead.
    """
    a = _as_matrix(a, "a")
    b = np.asarray(b, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"coefficient matrix must be square, got {a.shape}")
    if b.ndim == 1:
        if b.size != a.shape[0]:
            raise ShapeError(f"right-hand side length {b.size} does not match matrix {a.shape}")
        b_col = b.reshape(-1, 1)
    elif b.ndim == 2 and b.shape[0] == a.shape[0]:
        b_col = b
    else:
        raise ShapeError(f"right-hand side shape {b.shape} does not match matrix {a.shape}")
    try:
        x = np.linalg.solve(a, b_col)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    scale = np.linalg.norm(b_col)
    residual = np.linalg.norm(a @ x - b_col)
    if residual > SOLVE_RTOL * max(scale, np.finfo(float).tiny):
        raise SingularMatrixError(
            f"solve residual {residual:.3e} exceeds {SOLVE_RTOL:.0e} * |b| = {SOLVE_RTOL * scale:.3e}"
        )
    return x.reshape(b.shape) if b.ndim == 1 else x
