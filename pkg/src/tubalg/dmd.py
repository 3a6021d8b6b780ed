"""Tubal dynamic mode decomposition.

Lateral slices of the data tensor are time snapshots. The operator is fitted
in the transform domain on one slice per conjugate group and mirrored onto the
partner slice, which keeps ``A_DMD *M (real tensor)`` real.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import DegenerateData, ShapeError
from .tensor import Tensor3, frob_norm
from .transform import Transform
from .tsvdm import MultiRank, RankSpec, multirank, resolve_multirank, tsvdm

PINV_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DmdModel:
    """Fitted tubal DMD model ``A_DMD = Z *M T *M Z^H``.

    ``z_hat`` and ``t_hat`` hold the transform-domain slices; ``z_modes`` and
    ``t_upper`` are their spatial images, which are complex in general.
    """

    transform: Transform = field(repr=False)
    z_hat: np.ndarray = field(repr=False)
    t_hat: np.ndarray = field(repr=False)
    rank_used: tuple[int, ...]
    fit_error: float

    @property
    def transform_id(self) -> str:
        return self.transform.id

    @property
    def z_modes(self) -> Tensor3:
        return self.transform.backward(Tensor3(self.z_hat, self.transform.id), real=False)

    @property
    def t_upper(self) -> Tensor3:
        return self.transform.backward(Tensor3(self.t_hat, self.transform.id), real=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Diagonal of ``T`` per transform slice, shape ``r x n``."""
        return np.einsum("iik->ik", self.t_hat)

    def operator_hat(self) -> np.ndarray:
        z = self.z_hat
        return np.einsum("irk,rsk,jsk->ijk", z, self.t_hat, z.conj())

    def operator(self) -> Tensor3:
        """Materialise ``A_DMD`` as a spatial tensor."""
        t = self.transform
        return t.backward(Tensor3(self.operator_hat(), t.id), real=t.is_real_ring)

    def apply(self, x: Tensor3) -> Tensor3:
        """``A_DMD *M x``."""
        t = self.transform
        xhat = t.forward(x).values
        out = np.einsum("ijk,jqk->iqk", self.operator_hat(), xhat)
        return t.backward(Tensor3(out, t.id), real=t.is_real_ring and not np.any(x.values.imag))

    @classmethod
    def from_spatial(cls, transform: Transform, z: Tensor3, tu: Tensor3, rank_used, fit_error) -> "DmdModel":
        return cls(transform, transform.forward(z).values, transform.forward(tu).values,
                   tuple(int(v) for v in rank_used), float(fit_error))


def pseudo_inverse_fdiag(s: Tensor3, t: Transform, tol: float = PINV_TOL) -> Tensor3:
    """Moore-Penrose inverse of an f-diagonal tensor, computed on the transform diagonals."""
    m, p, n = s.dims
    shat = t.forward(s).values
    d = min(m, p)
    diag = shat[np.arange(d), np.arange(d), :]
    mag = np.abs(diag)
    keep = mag > tol * mag.max(initial=0.0)
    inv = np.zeros_like(diag)
    inv[keep] = 1.0 / diag[keep]
    out = np.zeros((p, m, n), dtype=np.complex128)
    out[np.arange(d), np.arange(d), :] = inv
    return t.backward(Tensor3(out, t.id), real=t.is_real_ring and not np.any(s.values.imag))


def tdmd_fit(x: Tensor3, t: Transform, spec: RankSpec | None = None) -> DmdModel:
    """Fit tubal DMD to the ``p + 1`` snapshots in ``x`` (shape ``m x (p+1) x n``).

    ``spec`` truncates the training factorisation; by default the numerical
    multirank of the training data is used.
    """
    m, p1, n = x.dims
    if p1 < 2:
        raise ShapeError("need at least two snapshots")
    xtrain = Tensor3(x.values[:, :-1, :])
    y = Tensor3(x.values[:, 1:, :])
    if frob_norm(xtrain) == 0:
        raise DegenerateData("training snapshots are all zero")
    f = tsvdm(xtrain, t)
    r = resolve_multirank(f, spec if spec is not None else MultiRank(multirank(f)))
    rmax = max(r)
    if rmax == 0:
        raise DegenerateData("rank specification keeps no components")

    yhat = t.forward(y).values
    z_hat = np.zeros((m, rmax, n), dtype=np.complex128)
    t_hat = np.zeros((rmax, rmax, n), dtype=np.complex128)
    for g in t.structure.groups:
        k = g[0]
        rk = r[k]
        u = f.u_hat[:, :rmax, k]
        w = np.eye(rmax, dtype=np.complex128)
        tt = np.zeros((rmax, rmax), dtype=np.complex128)
        if rk:
            s = f.s_hat[:rk, k]
            sinv = np.where(s > PINV_TOL * f.s_hat.max(), 1.0 / np.where(s > 0, s, 1.0), 0.0)
            kk = u[:, :rk].conj().T @ yhat[:, :, k] @ f.v_hat[:, :rk, k] * sinv[None, :]
            if len(g) == 1 and t.is_real_ring:
                kk = kk.real
            tk, wk = scipy.linalg.schur(kk, output="complex")
            tt[:rk, :rk], w[:rk, :rk] = tk, wk
        z_hat[:, :, k] = u @ w
        t_hat[:, :, k] = tt
        for kp in g[1:]:
            z_hat[:, :, kp] = z_hat[:, :, k].conj()
            t_hat[:, :, kp] = tt.conj()

    model = DmdModel(t, z_hat, t_hat, r, 0.0)
    resid = model.apply(xtrain) - y
    return DmdModel(t, z_hat, t_hat, r, frob_norm(resid) / frob_norm(y))


def tdmd_predict(model: DmdModel, x0: Tensor3, steps: int) -> Tensor3:
    """Lateral slice ``k`` (1-based) is ``Z *M T^k *M (Z^H *M x0)``."""
    t = model.transform
    m, one, n = x0.dims
    if one != 1:
        raise ShapeError(f"x0 must be an m x 1 x n lateral slice, got {x0.dims}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    xhat = t.forward(x0).values
    z, tt = model.z_hat, model.t_hat
    c = np.einsum("irk,iqk->rqk", z.conj(), xhat)
    out = np.empty((m, steps, n), dtype=np.complex128)
    for step in range(steps):
        c = np.einsum("rsk,sqk->rqk", tt, c)
        out[:, step : step + 1, :] = np.einsum("irk,rqk->iqk", z, c)
    return t.backward(Tensor3(out, t.id), real=t.is_real_ring and not np.any(x0.values.imag))


def synthetic_trajectory(m: int, p: int, t: Transform, r: int, seed: int = 0,
                         radius: tuple[float, float] = (0.8, 1.0)) -> tuple[Tensor3, Tensor3]:
    """Snapshots ``X[:, k+1] = A *M X[:, k]`` for a random real operator ``A`` of t-rank ``r``.

    Returns ``(x, a)`` where ``x`` is ``m x (p+1) x n``. Each transform slice of
    ``A`` is rescaled to a spectral radius drawn from ``radius``.
    """
    t.require_real_ring()
    rng = np.random.default_rng(seed)
    n = t.n
    ahat = np.zeros((m, m, n), dtype=np.complex128)
    for g in t.structure.groups:
        k = g[0]
        b = rng.standard_normal((m, r))
        c = rng.standard_normal((r, m))
        if len(g) == 2:
            b = b + 1j * rng.standard_normal((m, r))
            c = c + 1j * rng.standard_normal((r, m))
        ak = b @ c
        rho = np.max(np.abs(np.linalg.eigvals(ak)))
        ak *= rng.uniform(*radius) / rho
        ahat[:, :, k] = ak
        for kp in g[1:]:
            ahat[:, :, kp] = ak.conj()
    a = t.backward(Tensor3(ahat, t.id))
    xs = np.empty((m, p + 1, n))
    xs[:, 0, :] = rng.standard_normal((m, n))
    cur = t.forward(Tensor3(xs[:, :1, :])).values
    for k in range(1, p + 1):
        cur = np.einsum("ijk,jqk->iqk", ahat, cur)
        xs[:, k : k + 1, :] = t.backward(Tensor3(cur, t.id)).values.real
    return Tensor3(xs), a

