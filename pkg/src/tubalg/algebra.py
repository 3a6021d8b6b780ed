"""Star-M products and matrix-mimetic constructs.

Every product goes through the transform domain: one mode-3 TTM by ``M``, a
facewise product, and one TTM by ``M^{-1}``. The block-circulant
:func:`t_product_circulant` is kept only as an oracle.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DomainError, ShapeError
from .tensor import SPATIAL, Tensor3, facewise, frob_norm, tube, tube_values
from .transform import Transform

WEAK_INVERSE_TOL = 1e-12


def _real_out(t: Transform, *operands: Tensor3) -> bool:
    return t.is_real_ring and all(np.all(op.values.imag == 0) for op in operands)


def _peak(x) -> float:
    vals = x.values if isinstance(x, Tensor3) else x
    return float(np.max(np.abs(vals), initial=0.0))


def _spatial(x: Tensor3, what: str):
    if x.domain != SPATIAL:
        raise DomainError(f"{what} must be spatial, got domain {x.domain!r}")


def starm(a: Tensor3, b: Tensor3, t: Transform) -> Tensor3:
    """``A *M B = (A_hat facewise B_hat) x_3 M^{-1}`` for ``m x p x n`` and ``p x q x n`` tensors."""
    _spatial(a, "left operand")
    _spatial(b, "right operand")
    if a.dims[1] != b.dims[0] or a.dims[2] != b.dims[2]:
        raise ShapeError(f"cannot multiply {a.dims} by {b.dims}")
    ahat, bhat = t.forward(a), t.forward(b)
    scale = a.dims[1] * _peak(ahat) * _peak(bhat)
    return t.backward(facewise(ahat, bhat), real=_real_out(t, a, b), hat_scale=scale)


def tube_mul(a, b, t: Transform) -> Tensor3:
    """Product of two tubes: ``(a_hat * b_hat) x_3 M^{-1}``."""
    av, bv = tube_values(a), tube_values(b)
    if av.size != t.n or bv.size != t.n:
        raise ShapeError(f"tube lengths {av.size}, {bv.size} do not match n={t.n}")
    ahat, bhat = t.matrix @ av, t.matrix @ bv
    real = t.is_real_ring and not np.any(av.imag) and not np.any(bv.imag)
    return t.backward(tube(ahat * bhat, t.id), real=real, hat_scale=_peak(ahat) * _peak(bhat))


def tube_scale(b, a: Tensor3, t: Transform) -> Tensor3:
    """Multiply every tube fibre of ``a`` by the tube ``b``."""
    _spatial(a, "tensor")
    bv = tube_values(b)
    if bv.size != t.n or a.dims[2] != t.n:
        raise ShapeError(f"tube length {bv.size} incompatible with tensor {a.dims}")
    ahat = t.forward(a)
    bhat = t.matrix @ bv
    bt = tube(bv)
    return t.backward(ahat.with_values(ahat.values * bhat), real=_real_out(t, a, bt),
                      hat_scale=_peak(ahat) * _peak(bhat))


def conj_transpose(a: Tensor3, t: Transform) -> Tensor3:
    """``A^H``: Hermitian-transpose every transform-domain slice."""
    _spatial(a, "tensor")
    ahat = t.forward(a)
    return t.backward(ahat.with_values(ahat.values.conj().transpose(1, 0, 2)), real=_real_out(t, a))


def identity_tensor(m: int, t: Transform) -> Tensor3:
    """``m x m x n`` identity: every transform-domain slice is ``I_m``."""
    hat = np.broadcast_to(np.eye(m)[:, :, None], (m, m, t.n))
    return t.backward(Tensor3(hat, t.id), real=t.is_real_ring)


def is_unitary(q: Tensor3, t: Transform, tol: float = 1e-9) -> bool:
    """``|| Q^H *M Q - I ||_F <= tol``."""
    return q.dims[0] == q.dims[1] and has_orthonormal_columns(q, t, tol)


def has_orthonormal_columns(q: Tensor3, t: Transform, tol: float = 1e-9) -> bool:
    """``|| Q^H *M Q - I_r ||_F <= tol`` for a possibly rectangular ``m x r x n`` tensor."""
    resid = starm(conj_transpose(q, t), q, t) - identity_tensor(q.dims[1], t)
    return frob_norm(resid) <= tol


def tube_weak_inverse(s, t: Transform, tol: float = WEAK_INVERSE_TOL) -> Tensor3:
    """Von Neumann weak inverse: reciprocal of the transform entries above ``tol * max``."""
    sv = tube_values(s)
    shat = t.matrix @ sv
    mag = np.abs(shat)
    keep = mag > tol * mag.max(initial=0.0)
    inv_hat = np.zeros_like(shat)
    inv_hat[keep] = 1.0 / shat[keep]
    return t.backward(tube(inv_hat, t.id), real=t.is_real_ring and not np.any(sv.imag))


def identity_tube(t: Transform) -> Tensor3:
    return identity_tensor(1, t)


def t_product_circulant(a: Tensor3, b: Tensor3) -> Tensor3:
    """Original t-product by direct block-circulant summation (oracle).

    ``C[:, :, k] = sum_j A[:, :, (k - j) mod n] @ B[:, :, j]``.
    """
    (m, p, n), (p2, q, n2) = a.dims, b.dims
    if p != p2 or n != n2:
        raise ShapeError(f"cannot multiply {a.dims} by {b.dims}")
    out = np.zeros((m, q, n), dtype=np.complex128)
    for k in range(n):
        for j in range(n):
            out[:, :, k] += a.values[:, :, (k - j) % n] @ b.values[:, :, j]
    return Tensor3(out)
