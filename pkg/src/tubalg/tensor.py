"""Dense order-3 tensors and mode-wise primitives.

Fibre ordering is pinned: the mode-k unfolding places mode-k fibres as columns
in column-major order over the remaining indices. For mode 3 the column index of
fibre ``(i, j)`` is ``i + j*m`` (0-based).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError

SPATIAL = "spatial"


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Immutable ``m x p x n`` complex tensor tagged with the domain it lives in.

    Parameters
    ----------
    values : array_like
        Order-3 array indexed ``(i, j, k)``. Real input is stored as complex
        with exactly zero imaginary part.
    domain : str, optional
        ``"spatial"`` (default) or the id of the transform whose domain the
        values belong to.
    """

    values: np.ndarray
    domain: str = SPATIAL

    def __post_init__(self):
        arr = _readonly(self.values)
        if arr.ndim != 3:
            raise ShapeError(f"Tensor3 needs a 3-d array, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[2] < 1:
            raise ShapeError(f"m and n must be positive, got {arr.shape}")
        object.__setattr__(self, "values", arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape

    shape = dims

    @property
    def is_spatial(self) -> bool:
        return self.domain == SPATIAL

    @property
    def real(self) -> np.ndarray:
        return self.values.real.copy()

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag), initial=0.0))

    def with_values(self, values) -> "Tensor3":
        return Tensor3(values, self.domain)

    def _check_same(self, other: "Tensor3"):
        if self.dims != other.dims:
            raise ShapeError(f"dimension mismatch {self.dims} vs {other.dims}")
        if self.domain != other.domain:
            raise DomainError(f"domain mismatch {self.domain!r} vs {other.domain!r}")

    def __add__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        self._check_same(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        self._check_same(other)
        return self.with_values(self.values - other.values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        m, p, n = self.dims
        return f"Tensor3({m}x{p}x{n}, domain={self.domain!r})"


def as_tensor(x, domain: str = SPATIAL) -> Tensor3:
    """Wrap an array (or pass a Tensor3 through unchanged)."""
    if isinstance(x, Tensor3):
        return x
    arr = np.asarray(x)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Tensor3(arr, domain)


def tube(values, domain: str = SPATIAL) -> Tensor3:
    """Build a ``1 x 1 x n`` tube from a length-n sequence."""
    arr = np.asarray(values).reshape(-1)
    if arr.size < 1:
        raise ShapeError("a tube needs length n >= 1")
    return Tensor3(arr.reshape(1, 1, -1), domain)


def tube_values(t) -> np.ndarray:
    """Return the length-n vector of a tube (Tensor3 or 1-d array)."""
    if isinstance(t, Tensor3):
        if t.dims[:2] != (1, 1):
            raise ShapeError(f"expected a 1x1xn tube, got {t.dims}")
        return t.values.reshape(-1)
    return np.asarray(t, dtype=np.complex128).reshape(-1)


def zeros(m: int, p: int, n: int, domain: str = SPATIAL) -> Tensor3:
    return Tensor3(np.zeros((m, p, n)), domain)


def _mode_axis(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode}")
    return mode - 1


def unfold(t: Tensor3, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding (1-based mode), shape ``d_k x prod(others)``."""
    ax = _mode_axis(mode)
    arr = t.values if isinstance(t, Tensor3) else np.asarray(t)
    return np.moveaxis(arr, ax, 0).reshape(arr.shape[ax], -1, order="F")


def fold(mat, mode: int, dims, domain: str = SPATIAL) -> Tensor3:
    """Inverse of :func:`unfold` for a tensor of shape ``dims``."""
    ax = _mode_axis(mode)
    dims = tuple(int(d) for d in dims)
    mat = np.asarray(mat)
    rest = [d for i, d in enumerate(dims) if i != ax]
    expected = (dims[ax], rest[0] * rest[1])
    if mat.shape != expected:
        raise ShapeError(f"mode-{mode} fold of {dims} needs shape {expected}, got {mat.shape}")
    arr = mat.reshape([dims[ax]] + rest, order="F")
    return Tensor3(np.moveaxis(arr, 0, ax), domain)


def ttm(t: Tensor3, mat, mode: int, domain: str | None = None) -> Tensor3:
    """Mode-k product ``t x_k mat``; equals ``fold(mat @ unfold(t, k), k, ...)``."""
    ax = _mode_axis(mode)
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[1] != t.dims[ax]:
        raise ShapeError(f"matrix {mat.shape} incompatible with mode-{mode} size {t.dims[ax]}")
    out = np.moveaxis(np.tensordot(mat, t.values, axes=(1, ax)), 0, ax)
    return Tensor3(out, t.domain if domain is None else domain)


def facewise(a: Tensor3, b: Tensor3) -> Tensor3:
    """Slice-by-slice matrix product of ``m x p x n`` and ``p x q x n`` tensors."""
    if a.domain != b.domain:
        raise DomainError(f"domain mismatch {a.domain!r} vs {b.domain!r}")
    (m, p, n), (p2, q, n2) = a.dims, b.dims
    if p != p2 or n != n2:
        raise ShapeError(f"facewise product of {a.dims} and {b.dims} is undefined")
    return Tensor3(np.einsum("ipk,pqk->iqk", a.values, b.values), a.domain)


def frob_inner(a: Tensor3, b: Tensor3) -> complex:
    """``sum a_ijk * conj(b_ijk)``."""
    if a.dims != b.dims:
        raise ShapeError(f"dimension mismatch {a.dims} vs {b.dims}")
    return complex(np.vdot(b.values, a.values))


def frob_norm(a: Tensor3) -> float:
    return float(np.linalg.norm(a.values.ravel()))
