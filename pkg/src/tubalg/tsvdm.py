"""tSVDM factorisation, rank notions, truncations and the energy-adaptive tSVDMII."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidMultirank, RankSpecError
from .tensor import SPATIAL, Tensor3
from .transform import IdempotentStructure, Transform

ZERO_TOL = 1e-10


# Rank specifications


@dataclass(frozen=True)
class TRank:
    r: int


@dataclass(frozen=True)
class MultiRank:
    r: tuple[int, ...]

    def __init__(self, r):
        object.__setattr__(self, "r", tuple(int(v) for v in np.ravel(r)))


@dataclass(frozen=True)
class TubalLength:
    lam: tuple[int, ...]

    def __init__(self, lam):
        object.__setattr__(self, "lam", tuple(int(v) for v in np.ravel(lam)))


@dataclass(frozen=True)
class Energy:
    """Energy target ``gamma`` in ``(0, 1]``, resolved through tSVDMII."""

    gamma: float


RankSpec = TRank | MultiRank | TubalLength | Energy


# Factorisation


@dataclass(frozen=True, eq=False)
class TsvdmFactors:
    """``X = U *M S *M V^H`` with the transform-domain data kept alongside.

    ``s_hat[j, k]`` is the ``j``-th singular value of transform slice ``k``.
    """

    u: Tensor3
    s: Tensor3
    v: Tensor3
    s_hat: np.ndarray
    transform: Transform = field(repr=False)
    u_hat: np.ndarray = field(repr=False)
    v_hat: np.ndarray = field(repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.u.dims[0], self.v.dims[0], self.transform.n)

    @property
    def transform_id(self) -> str:
        return self.transform.id


def _svd_slices(xhat: np.ndarray, t: Transform):
    m, p, n = xhat.shape
    st = t.structure
    reps = np.array(st.representatives)
    slices = np.moveaxis(xhat[:, :, reps], 2, 0)
    real_rep = np.array([len(g) == 1 for g in st.groups])
    if t.is_real_ring and real_rep.any():
        # a real row applied to real data gives a real slice
        slices = slices.copy()
        slices[real_rep] = slices[real_rep].real
    u, s, vh = np.linalg.svd(slices, full_matrices=True)
    u_hat = np.empty((m, m, n), dtype=np.complex128)
    v_hat = np.empty((p, p, n), dtype=np.complex128)
    s_hat = np.empty((min(m, p), n))
    for idx, g in enumerate(st.groups):
        k = g[0]
        u_hat[:, :, k] = u[idx]
        v_hat[:, :, k] = vh[idx].conj().T
        s_hat[:, k] = s[idx]
        for kp in g[1:]:
            u_hat[:, :, kp] = u[idx].conj()
            v_hat[:, :, kp] = vh[idx].T
            s_hat[:, kp] = s[idx]
    return u_hat, s_hat, v_hat


def _fdiag(s_hat: np.ndarray, m: int, p: int) -> np.ndarray:
    out = np.zeros((m, p, s_hat.shape[1]))
    d = s_hat.shape[0]
    out[np.arange(d), np.arange(d), :] = s_hat
    return out


def tsvdm(x: Tensor3, t: Transform) -> TsvdmFactors:
    """tSVDM of a real spatial tensor under a real-ring transform.

    Only one slice per conjugate group is decomposed; its partner receives the
    conjugated factors so that ``U``, ``S`` and ``V`` come back real.
    """
    t.require_real_ring()
    xhat = t.forward(x).values
    m, p, _ = xhat.shape
    u_hat, s_hat, v_hat = _svd_slices(xhat, t)
    s_hat.setflags(write=False)
    u = t.backward(Tensor3(u_hat, t.id))
    s = t.backward(Tensor3(_fdiag(s_hat, m, p), t.id))
    v = t.backward(Tensor3(v_hat, t.id))
    return TsvdmFactors(u, s, v, s_hat, t, u_hat, v_hat)


# Rank notions


def _cutoff(s_hat: np.ndarray, tol: float) -> float:
    return tol * s_hat.max(initial=0.0)


def _nonzero(s_hat: np.ndarray, tol: float) -> np.ndarray:
    smax = s_hat.max(initial=0.0)
    if smax == 0:
        return np.zeros_like(s_hat, dtype=bool)
    return s_hat > tol * smax


def t_rank(f: TsvdmFactors, tol: float = ZERO_TOL) -> int:
    """Number of singular tubes with ``max_k s_hat[j, k] > tol * s_max``."""
    return int(np.count_nonzero(_nonzero(f.s_hat, tol).any(axis=1)))


def multirank(f: TsvdmFactors, tol: float = ZERO_TOL) -> tuple[int, ...]:
    return tuple(int(c) for c in _nonzero(f.s_hat, tol).sum(axis=0))


def implicit_rank(f: TsvdmFactors, tol: float = ZERO_TOL) -> int:
    return sum(multirank(f, tol))


def tubal_length(f: TsvdmFactors, tol: float = ZERO_TOL) -> tuple[int, ...]:
    r = multirank(f, tol)
    return tuple(r[g[0]] for g in f.transform.structure.groups)


def check_multirank(r, structure: IdempotentStructure) -> tuple[int, ...]:
    """Return ``r`` as a tuple, raising :class:`InvalidMultirank` unless it is group-constant."""
    r = tuple(int(v) for v in np.ravel(r))
    if len(r) != structure.n:
        raise InvalidMultirank(f"multirank needs {structure.n} entries, got {len(r)}")
    if any(v < 0 for v in r):
        raise InvalidMultirank("multirank entries must be nonnegative")
    for g in structure.groups:
        if len({r[k] for k in g}) > 1:
            raise InvalidMultirank(
                f"multirank {r} is not constant on conjugate group {g}; "
                "paired slices must keep the same number of components"
            )
    return r


def length_to_multirank(lam, structure: IdempotentStructure) -> tuple[int, ...]:
    lam = tuple(int(v) for v in np.ravel(lam))
    if len(lam) != structure.ell:
        raise RankSpecError(f"tubal-length needs {structure.ell} entries, got {len(lam)}")
    if any(v < 0 for v in lam):
        raise RankSpecError("tubal-length entries must be nonnegative")
    return tuple(lam[j] for j in structure.tau)


def multirank_to_length(r, structure: IdempotentStructure) -> tuple[int, ...]:
    r = check_multirank(r, structure)
    return tuple(r[g[0]] for g in structure.groups)


def storage_ratio(r, dims) -> float:
    """Stored numbers of the compact factors relative to the dense tensor."""
    m, p, n = dims
    return sum(r) * (m + p + 1) / (m * p * n)


# tSVDMII


@dataclass(frozen=True)
class GammaRank:
    rho: tuple[int, ...]
    r_gamma: int
    retained_energy: float


def gamma_rank(s_hat: np.ndarray, gamma: float) -> GammaRank:
    """Resolve an energy target into a multirank (the four lines of tSVDMII)."""
    if not 0 < gamma <= 1:
        raise RankSpecError(f"gamma must lie in (0, 1], got {gamma}")
    sq = np.asarray(s_hat) ** 2
    nu = np.sort(sq.ravel())[::-1]
    csum = np.cumsum(nu)
    total = csum[-1] if csum.size else 0.0
    if total == 0:
        return GammaRank(tuple([0] * sq.shape[1]), 0, 1.0)
    omega = csum / total
    r_gamma = int(np.argmax(omega >= gamma)) + 1
    cut = nu[r_gamma - 1]
    rho = tuple(int(c) for c in (sq >= cut).sum(axis=0))
    kept = sum(sq[:c, k].sum() for k, c in enumerate(rho))
    return GammaRank(rho, r_gamma, float(kept / total))


# Truncation


def resolve_multirank(f: TsvdmFactors, spec: RankSpec) -> tuple[int, ...]:
    """Turn any rank specification into a valid per-slice multirank."""
    st = f.transform.structure
    kmax = f.s_hat.shape[0]
    if isinstance(spec, TRank):
        if not 0 <= spec.r <= kmax:
            raise RankSpecError(f"t-rank {spec.r} outside [0, {kmax}]")
        return (spec.r,) * st.n
    if isinstance(spec, MultiRank):
        r = check_multirank(spec.r, st)
    elif isinstance(spec, TubalLength):
        r = length_to_multirank(spec.lam, st)
    elif isinstance(spec, Energy):
        return gamma_rank(f.s_hat, spec.gamma).rho
    else:
        raise TypeError(f"unknown rank spec {spec!r}")
    if max(r) > kmax:
        raise RankSpecError(f"rank {max(r)} exceeds min(m, p) = {kmax}")
    return r


@dataclass(frozen=True, eq=False)
class CompactFactors:
    """Leading components per slice, zero-padded to ``r_max`` columns."""

    u_hat: np.ndarray
    s_hat: np.ndarray
    v_hat: np.ndarray
    multirank: tuple[int, ...]

    @property
    def r_max(self) -> int:
        return self.s_hat.shape[0]


def compact_factors(f: TsvdmFactors, spec: RankSpec) -> CompactFactors:
    r = resolve_multirank(f, spec)
    rmax = max(r, default=0)
    mask = np.arange(rmax)[:, None] < np.array(r)[None, :]
    return CompactFactors(
        f.u_hat[:, :rmax, :] * mask[None, :, :],
        f.s_hat[:rmax, :] * mask,
        f.v_hat[:, :rmax, :] * mask[None, :, :],
        r,
    )


def _compact_hat_product(c: CompactFactors) -> np.ndarray:
    return np.einsum("irk,rk,jrk->ijk", c.u_hat, c.s_hat, c.v_hat.conj())


def truncate(f: TsvdmFactors, spec: RankSpec) -> Tensor3:
    """Truncation of the factorised tensor to ``spec``, returned as a real spatial tensor."""
    c = compact_factors(f, spec)
    m, p, n = f.dims
    if c.r_max == 0:
        return Tensor3(np.zeros((m, p, n)), SPATIAL)
    t = f.transform
    return t.backward(Tensor3(_compact_hat_product(c), t.id))


def truncation_error(f: TsvdmFactors, spec: RankSpec) -> float:
    """Squared Frobenius error of :func:`truncate` computed from the spectrum.

    For certified transforms ``M = DQ`` this is the tail of ``s_hat**2`` with
    slice ``k`` weighted by ``mu_{tau(k)}**-2``. Otherwise the exact
    ``sum over tubes d^H G d`` form with ``G = (M M^H)^{-1}`` is used.
    """
    r = resolve_multirank(f, spec)
    t = f.transform
    kmax = f.s_hat.shape[0]
    tail_mask = np.arange(kmax)[:, None] >= np.array(r)[None, :]
    if t.is_valid:
        tails = (f.s_hat**2 * tail_mask).sum(axis=0)
        return float(np.sum(tails / t.row_mu**2))
    u = f.u_hat[:, :kmax, :] * tail_mask[None]
    v = f.v_hat[:, :kmax, :] * tail_mask[None]
    d = np.einsum("irk,rk,jrk->ijk", u, f.s_hat, v.conj())
    g = t.gram_inverse
    return float(np.einsum("ijk,kl,ijl->", d.conj(), g, d).real)


@dataclass(frozen=True, eq=False)
class Tsvdm2Result:
    approx: Tensor3
    rho: tuple[int, ...]
    r_gamma: int
    retained_energy: float
    factors: TsvdmFactors = field(repr=False)


def tsvdm2(x: Tensor3, t: Transform, gamma: float) -> Tsvdm2Result:
    """tSVDMII: keep the fewest transform-domain components carrying ``gamma`` of the energy."""
    f = tsvdm(x, t)
    g = gamma_rank(f.s_hat, gamma)
    return Tsvdm2Result(truncate(f, MultiRank(g.rho)), g.rho, g.r_gamma, g.retained_energy, f)
