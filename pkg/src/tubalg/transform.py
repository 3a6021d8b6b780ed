"""Invertible mode-3 transforms, their idempotent structure and Eckart-Young certificate.

Group indices ``j`` are 0-based throughout the Python API. Groups are ordered by
their smallest member row, so for the unnormalised DFT with ``n = 4`` the groups
are ``(0,), (1, 3), (2,)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .exceptions import (
    DomainError,
    NotInvertible,
    NotRealRing,
    RealnessError,
    ShapeError,
)
from .tensor import SPATIAL, Tensor3, tube, ttm

PAIRING_TOL = 1e-10
COND_LIMIT = 1e12
REALNESS_TOL = 1e-9


@dataclass(frozen=True)
class IdempotentStructure:
    """Partition of the slice indices into conjugate groups."""

    groups: tuple[tuple[int, ...], ...]
    tau: np.ndarray = field(repr=False)

    @property
    def ell(self) -> int:
        return len(self.groups)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    @property
    def n(self) -> int:
        return len(self.tau)

    @property
    def representatives(self) -> tuple[int, ...]:
        return tuple(g[0] for g in self.groups)

    @classmethod
    def from_pairing(cls, pairing) -> "IdempotentStructure":
        groups, seen = [], set()
        for s, partner in enumerate(pairing):
            if s in seen:
                continue
            g = (s,) if partner == s else (s, partner)
            seen.update(g)
            groups.append(g)
        tau = np.empty(len(pairing), dtype=int)
        for j, g in enumerate(groups):
            tau[list(g)] = j
        tau.setflags(write=False)
        return cls(tuple(groups), tau)


@dataclass(frozen=True)
class Violation:
    kind: str  # CrossGroup | InGroupNonOrthogonal | UnequalNorms | NotRealRing
    indices: tuple[int, int]
    gram_value: complex


@dataclass(frozen=True)
class EckartYoungCertificate:
    valid: bool
    mu: tuple[float, ...] | None = None
    violation: Violation | None = None


@dataclass(frozen=True, eq=False)
class Transform:
    """An invertible ``n x n`` transform. Build it with :func:`build_transform`."""

    matrix: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)
    pairing: tuple[int, ...]
    structure: IdempotentStructure
    tol: float
    is_real_ring: bool
    certificate: EckartYoungCertificate
    id: str

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def gram(self) -> np.ndarray:
        """``M M^H``; entry ``(s, t)`` is the row inner product gamma_{s,t}."""
        return self.matrix @ self.matrix.conj().T

    @property
    def gram_inverse(self) -> np.ndarray:
        """``G = (M M^H)^{-1} = M^{-H} M^{-1}``."""
        return self.inverse.conj().T @ self.inverse

    @property
    def is_valid(self) -> bool:
        return self.certificate.valid

    @property
    def row_mu(self) -> np.ndarray:
        """Per-row scale ``mu_{tau(s)}`` (requires a valid certificate)."""
        if not self.certificate.valid:
            raise ValueError(f"transform {self.id} has no Eckart-Young certificate")
        return np.asarray(self.certificate.mu)[self.structure.tau]

    def require_real_ring(self):
        if not self.is_real_ring:
            unpaired = [s for s, p in enumerate(self.pairing) if p == s and not _is_real_row(self.matrix[s], self.tol)]
            raise NotRealRing(f"transform {self.id}: rows {unpaired} are neither real nor conjugate-paired")

    def forward(self, x: Tensor3) -> Tensor3:
        """``x x_3 M``; moves a spatial tensor into this transform's domain."""
        if x.domain != SPATIAL:
            raise DomainError(f"expected a spatial tensor, got domain {x.domain!r}")
        if x.dims[2] != self.n:
            raise ShapeError(f"tube length {x.dims[2]} does not match transform size {self.n}")
        return ttm(x, self.matrix, 3, domain=self.id)

    def backward(self, xhat: Tensor3, real: bool = True, hat_scale: float | None = None) -> Tensor3:
        """``xhat x_3 M^{-1}``; with ``real=True`` the result is snapped to real.

        ``hat_scale`` bounds the magnitude of the transform-domain values that
        produced ``xhat`` (default: ``max |xhat|``); the realness check is relative
        to it, so results that are exactly zero are not judged against rounding noise.
        """
        if xhat.domain != self.id:
            raise DomainError(f"expected domain {self.id!r}, got {xhat.domain!r}")
        out = ttm(xhat, self.inverse, 3, domain=SPATIAL)
        if not real:
            return out
        # bound on |entries| of the result, so exact zeros are judged against input scale
        if hat_scale is None:
            hat_scale = np.max(np.abs(xhat.values), initial=0.0)
        bound = np.max(np.abs(self.inverse).sum(axis=1)) * hat_scale
        return snap_real(out, scale=bound)


def snap_real(x: Tensor3, tol: float = REALNESS_TOL, scale: float | None = None) -> Tensor3:
    """Drop imaginary parts below ``tol * scale`` (default: the largest entry); raise otherwise."""
    vals = x.values
    if scale is None:
        scale = np.max(np.abs(vals), initial=0.0)
    worst = np.max(np.abs(vals.imag), initial=0.0)
    if worst > tol * scale:
        raise RealnessError(f"imaginary residual {worst:.3e} exceeds {tol:g} x {scale:.3e}")
    return x.with_values(vals.real)


def _is_real_row(row, tol) -> bool:
    return np.linalg.norm(row.imag) <= tol * np.linalg.norm(row)


def _detect_pairing(mat: np.ndarray, tol: float) -> tuple[list[int], bool]:
    n = mat.shape[0]
    pairing = list(range(n))
    claimed = [False] * n
    real_ring = True
    for s in range(n):
        if claimed[s]:
            continue
        row = mat[s]
        scale = np.linalg.norm(row)
        claimed[s] = True
        if _is_real_row(row, tol):
            continue
        for t in range(s + 1, n):
            if not claimed[t] and np.linalg.norm(mat[t] - row.conj()) <= tol * scale:
                pairing[s], pairing[t] = t, s
                claimed[t] = True
                break
        else:
            real_ring = False
    return pairing, real_ring


def check_eckart_young(mat, structure: IdempotentStructure, pairing, tol: float = PAIRING_TOL,
                       real_ring: bool = True) -> EckartYoungCertificate:
    """Certify ``M = D Q`` (rows pairwise orthogonal, equal norms inside each group).

    Returns the first violating Gram entry when the certificate fails.
    """
    mat = np.asarray(mat, dtype=np.complex128)
    n = mat.shape[0]
    if not real_ring:
        s = next(s for s in range(n) if pairing[s] == s and not _is_real_row(mat[s], tol))
        return EckartYoungCertificate(False, violation=Violation("NotRealRing", (s, s), complex(0)))
    gram = mat @ mat.conj().T
    norms = np.sqrt(gram.diagonal().real)
    tau = structure.tau
    for s in range(n):
        for t in range(s + 1, n):
            if abs(gram[s, t]) > tol * norms[s] * norms[t]:
                kind = "InGroupNonOrthogonal" if tau[s] == tau[t] else "CrossGroup"
                return EckartYoungCertificate(False, violation=Violation(kind, (s, t), complex(gram[s, t])))
    for g in structure.groups:
        if len(g) == 2:
            s, t = g
            if abs(norms[s] - norms[t]) > tol * max(norms[s], norms[t]):
                return EckartYoungCertificate(False, violation=Violation("UnequalNorms", (s, t), complex(gram[t, t] - gram[s, s])))
    mu = tuple(float(norms[g[0]]) for g in structure.groups)
    return EckartYoungCertificate(True, mu=mu)


def _matrix_id(mat: np.ndarray) -> str:
    digest = hashlib.sha1(np.ascontiguousarray(mat).tobytes()).hexdigest()[:12]
    return f"custom:{mat.shape[0]}:{digest}"


def build_transform(mat, tol: float = PAIRING_TOL, strict: bool = False, name: str | None = None) -> Transform:
    """Validate ``mat`` and derive pairing, idempotent structure and certificate.

    Parameters
    ----------
    mat : array_like
        Square complex matrix.
    tol : float
        Relative tolerance for pairing detection and the orthogonality checks.
    strict : bool
        Raise :class:`NotRealRing` instead of flagging a transform whose rows are
        not real or conjugate-paired.
    name : str, optional
        Transform id; defaults to a content hash.
    """
    mat = np.array(mat, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
        raise ShapeError(f"transform must be a non-empty square matrix, got shape {mat.shape}")
    n = mat.shape[0]
    if not np.all(np.isfinite(mat)):
        raise NotInvertible("transform has non-finite entries")
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NotInvertible(f"condition number {cond:.3e} exceeds {COND_LIMIT:g}")
    inv = np.linalg.inv(mat)
    resid = np.linalg.norm(mat @ inv - np.eye(n))
    if resid > 1e-10 * n:
        raise NotInvertible(f"inverse residual {resid:.3e} too large")

    pairing, real_ring = _detect_pairing(mat, tol)
    if strict and not real_ring:
        raise NotRealRing("some row is neither real nor conjugate-paired")
    structure = IdempotentStructure.from_pairing(pairing)
    cert = check_eckart_young(mat, structure, pairing, tol, real_ring)
    mat.setflags(write=False)
    inv.setflags(write=False)
    return Transform(mat, inv, tuple(pairing), structure, tol, real_ring, cert, name or _matrix_id(mat))


def idempotent_tube(t: Transform, j: int) -> Tensor3:
    """Principal idempotent ``e_j``: the sum of the columns of ``M^{-1}`` in group ``j``."""
    if not 0 <= j < t.structure.ell:
        raise IndexError(f"group index {j} out of range [0, {t.structure.ell})")
    cols = list(t.structure.groups[j])
    e = t.inverse[:, cols].sum(axis=1)
    if t.is_real_ring:
        e = e.real
    return tube(e)


# Builtin transforms


def identity(n: int) -> Transform:
    return build_transform(np.eye(n), name=f"identity:{n}")


def dft(n: int) -> Transform:
    """Unnormalised DFT, ``F[k, j] = exp(-2 pi i jk / n)``; every ``mu_j = sqrt(n)``."""
    return build_transform(np.fft.fft(np.eye(n), axis=0), name=f"dft:{n}")


def dct(n: int) -> Transform:
    """Orthonormal DCT-II matrix."""
    return build_transform(scipy.fft.dct(np.eye(n), norm="ortho", axis=0), name=f"dct:{n}")


def _random_unitary_paired(n: int, rng: np.random.Generator) -> np.ndarray:
    o, r = np.linalg.qr(rng.standard_normal((n, n)))
    o = o * np.sign(np.diag(r))
    rows = list(o.astype(np.complex128))
    npairs = int(rng.integers(1, n // 2 + 1)) if n >= 2 else 0
    out = []
    for k in range(npairs):
        a, b = rows[2 * k].real, rows[2 * k + 1].real
        out += [(a + 1j * b) / np.sqrt(2), (a - 1j * b) / np.sqrt(2)]
    out += rows[2 * npairs:]
    return np.array(out)[rng.permutation(n)]


def random_valid(n: int, seed: int = 0) -> Transform:
    """Random unitary transform with at least one conjugate pair when ``n >= 2``."""
    rng = np.random.default_rng(seed)
    return build_transform(_random_unitary_paired(n, rng), name=f"random_valid:{n}:{seed}")


def scaled(t: Transform, weights) -> Transform:
    """Multiply the rows of group ``j`` by ``weights[j]`` (all strictly positive)."""
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != t.structure.ell:
        raise ValueError(f"need {t.structure.ell} weights, got {w.size}")
    if not np.all(w > 0):
        raise ValueError("weights must be strictly positive")
    mat = w[t.structure.tau][:, None] * t.matrix
    tag = hashlib.sha1(w.tobytes()).hexdigest()[:8]
    return build_transform(mat, t.tol, name=f"scaled:{t.id}:{tag}")


def pair_with_gram(S: float, g: complex) -> Transform:
    """2x2 conjugate-pair transform whose ``G = (M M^H)^{-1}`` has trace ``S`` and ``G[1, 0] = g``.

    Needs ``|g| < S / 2``. ``M^{-1} = [c, conj(c)]`` with ``c = a + ib`` so that
    ``g = |a|^2 - |b|^2 + 2i a.b`` and ``S = 2(|a|^2 + |b|^2)``.
    """
    g = complex(g)
    if not abs(g) < S / 2:
        raise ValueError("need |g| < S/2 for an invertible pair")
    na2, nb2 = (S / 2 + g.real) / 2, (S / 2 - g.real) / 2
    na, nb = np.sqrt(na2), np.sqrt(nb2)
    cos = (g.imag / 2) / (na * nb)
    a = np.array([na, 0.0])
    b = nb * np.array([cos, np.sqrt(1 - cos**2)])
    c = a + 1j * b
    return build_transform(np.linalg.inv(np.column_stack([c, c.conj()])), name=f"pair:{S!r}:{g!r}")


def crafted_invalid(n: int, kind: str, seed: int = 0) -> Transform:
    """Real-ring transform that violates the Eckart-Young condition in a chosen way.

    ``kind`` is ``"real"`` (in-group ``Re g != 0``), ``"imag"`` (``Re g = 0``,
    ``Im g != 0``) or ``"cross"`` (two real rows not orthogonal).
    """
    rng = np.random.default_rng(seed)
    if kind == "cross":
        mat = scipy.fft.dct(np.eye(n), norm="ortho", axis=0)
        if n < 2:
            raise ValueError("cross violation needs n >= 2")
        mat[0] += rng.uniform(0.2, 0.8) * mat[1]
        return build_transform(mat, name=f"invalid:cross:{n}:{seed}")
    if kind not in ("real", "imag"):
        raise ValueError(f"unknown kind {kind!r}")
    if n < 2:
        raise ValueError("an in-group violation needs n >= 2")
    q = _random_unitary_paired(n, rng)
    t = build_transform(q)
    s, sp = next(g for g in t.structure.groups if len(g) == 2)
    a = rng.standard_normal(n)
    if kind == "real":
        b = rng.standard_normal(n)
        b *= rng.uniform(0.3, 0.8) * np.linalg.norm(a) / np.linalg.norm(b)
    else:
        w = rng.standard_normal(n)
        w -= (w @ a) / (a @ a) * a
        theta = rng.uniform(0.3, 1.2) * rng.choice([-1, 1])
        b = np.cos(theta) * a + np.sin(theta) * np.linalg.norm(a) * w / np.linalg.norm(w)
    inv = q.conj().T.copy()
    c = (a + 1j * b) / np.sqrt(2 * n)
    inv[:, s], inv[:, sp] = c, c.conj()
    return build_transform(np.linalg.inv(inv), name=f"invalid:{kind}:{n}:{seed}")
