"""Executable checks of Eckart-Young optimality for tubal-length truncation.

Invalid transforms are refuted with explicit 2x2xn counterexamples built from
``G = (M M^H)^{-1}``. Valid transforms are confirmed by random search. The
scaled-versus-unitary comparisons live here too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotApplicable
from .tensor import Tensor3, frob_norm
from .transform import Transform
from .tsvdm import (
    Energy,
    MultiRank,
    RankSpec,
    TubalLength,
    gamma_rank,
    length_to_multirank,
    truncate,
    tsvdm,
)

WITNESS_GAP = 1e-9
_APPLICABLE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CounterexampleWitness:
    """A real tensor ``x`` and a competitor ``better`` beating the truncation of ``x``.

    Closed-form witnesses fill in the Gram data; random-search witnesses leave
    those fields as ``None``.
    """

    x: Tensor3
    better: Tensor3
    target: tuple[int, ...]
    gap: float
    err_truncation: float
    err_better: float
    group: int | None = None
    indices: tuple[int, int] | None = None
    gram: complex | None = None
    S: float | None = None
    alpha: complex | None = None
    a_scale: float | None = None
    ratio: float | None = None
    expected_ratio: float | None = None
    trial: int | None = None


@dataclass(frozen=True, eq=False)
class EckartYoungReport:
    transform_id: str
    valid: bool
    verdict: str  # ConfirmedValid | RefutedInvalid | CertifiedValid | Invalid
    mu: tuple[float, ...] | None = None
    violation: object = None
    trials: int = 0
    max_violation: float | None = None
    witness: CounterexampleWitness | None = field(default=None, repr=False)


# Closed-form counterexamples


def _pair_group(t: Transform, j: int | None, applicable) -> tuple[int, int, int, complex, float]:
    t.require_real_ring()
    G = t.gram_inverse
    groups = t.structure.groups
    candidates = range(len(groups)) if j is None else [j]
    for jj in candidates:
        g_idx = groups[jj]
        if len(g_idx) != 2:
            if j is not None:
                raise NotApplicable(f"group {jj} has degree 1")
            continue
        s, sp = g_idx
        g = complex(G[sp, s])
        S = float((G[s, s] + G[sp, sp]).real)
        if applicable(g, S):
            return jj, s, sp, g, S
        if j is not None:
            break
    raise NotApplicable(f"no conjugate group of {t.id} satisfies the Gram condition")


def _slice_tensor(t: Transform, s: int, sp: int, d1: complex, d2: complex) -> Tensor3:
    """Spatial 2x2xn tensor whose transform slice ``s`` is ``diag(d1, d2)`` and ``sp`` its conjugate."""
    hat = np.zeros((2, 2, t.n), dtype=np.complex128)
    hat[0, 0, s], hat[1, 1, s] = d1, d2
    hat[0, 0, sp], hat[1, 1, sp] = np.conj(d1), np.conj(d2)
    return t.backward(Tensor3(hat, t.id))


def _finish(t, j, s, sp, g, S, x, comp1, comp2, ratio_expected, alpha, a_scale, ratio_fn):
    target = tuple(1 if jj == j else 0 for jj in range(t.structure.ell))
    xr = truncate(tsvdm(x, t), TubalLength(target))
    err_tr = frob_norm(x - xr)
    e1, e2 = frob_norm(x - comp1), frob_norm(x - comp2)
    better, err_b = (comp2, e2) if e2 < e1 else (comp1, e1)
    return CounterexampleWitness(
        x=x, better=better, target=target, gap=err_tr - err_b,
        err_truncation=err_tr, err_better=err_b, group=j, indices=(s, sp), gram=g, S=S,
        alpha=alpha, a_scale=a_scale, ratio=ratio_fn(e1, e2), expected_ratio=ratio_expected,
    )


def counterexample_real_gram(t: Transform, j: int | None = None) -> CounterexampleWitness:
    """Witness for a conjugate group whose cross Gram entry has ``Re g != 0``.

    Slice ``s`` of ``A`` is ``diag(i*alpha1, alpha2)`` with ``alpha1 = 1`` and
    ``alpha2 = sqrt((S - 2 Re g) / (S + Re g))``, giving
    ``||A - A1||^2 / ||A - A2||^2 = (S + 2 Re g) / (S + Re g)``.
    """
    j, s, sp, g, S = _pair_group(t, j, lambda g, S: abs(g.real) > _APPLICABLE_TOL * S)
    alpha2 = np.sqrt((S - 2 * g.real) / (S + g.real))
    x = _slice_tensor(t, s, sp, 1j, alpha2)
    a1 = _slice_tensor(t, s, sp, 1j, 0)
    a2 = _slice_tensor(t, s, sp, 0, alpha2)
    return _finish(t, j, s, sp, g, S, x, a1, a2, (S + 2 * g.real) / (S + g.real), complex(alpha2), 1.0,
                   lambda e1, e2: e1**2 / e2**2)


def counterexample_imag_gram(t: Transform, j: int | None = None) -> CounterexampleWitness:
    """Witness for a conjugate group with ``Re g = 0`` and ``Im g != 0``.

    Slice ``s`` of ``A`` is ``diag(a*conj(alpha), alpha)`` with
    ``alpha = (1 - i)/sqrt(2)`` and ``a = sqrt((S + 2 Im g) / (S - Im g))``, giving
    ``||A - A2||^2 / ||A - a A1||^2 = a^2 (S - 2 Im g) / (S + 2 Im g)``.
    """
    def ok(g, S):
        return abs(g.real) <= _APPLICABLE_TOL * S and abs(g.imag) > _APPLICABLE_TOL * S

    j, s, sp, g, S = _pair_group(t, j, ok)
    alpha = (1 - 1j) / np.sqrt(2)
    a = np.sqrt((S + 2 * g.imag) / (S - g.imag))
    x = _slice_tensor(t, s, sp, a * np.conj(alpha), alpha)
    a1 = _slice_tensor(t, s, sp, a * np.conj(alpha), 0)
    a2 = _slice_tensor(t, s, sp, 0, alpha)
    return _finish(t, j, s, sp, g, S, x, a1, a2, a**2 * (S - 2 * g.imag) / (S + 2 * g.imag), complex(alpha),
                   float(a), lambda e1, e2: e2**2 / e1**2)


# Random search


@dataclass(frozen=True)
class SearchResult:
    witness: CounterexampleWitness | None
    max_improvement: float
    trials: int


def _random_factors(rng, shape, real_slices):
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    z[..., real_slices] = z[..., real_slices].real
    return z


def random_search(x: Tensor3, t: Transform, lam, trials: int = 10_000, seed: int = 0,
                  batch: int = 500, gap: float = WITNESS_GAP) -> SearchResult:
    """Sample competitors of tubal-length at most ``lam`` and track the best improvement.

    Each batch draws from ``default_rng([seed, batch_index])`` so a (seed, trial)
    pair fixes its competitor. Half of every batch are random low-rank tensors,
    half are perturbations of the truncation at log-uniform scales.
    """
    t.require_real_ring()
    m, p, n = x.dims
    st = t.structure
    f = tsvdm(x, t)
    r = np.array(length_to_multirank(lam, st))
    xr = truncate(f, TubalLength(lam))
    err0 = frob_norm(x - xr)
    rmax = int(r.max(initial=0))
    if rmax == 0 or trials <= 0:
        # only the zero tensor is admissible, and that is the truncation itself
        return SearchResult(None, 0.0, max(trials, 0))

    reps = np.array(st.representatives)
    partners = [(g[0], g[1]) for g in st.groups if len(g) == 2]
    real_rep = np.array([len(g) == 1 for g in st.groups])
    mask = (np.arange(rmax)[:, None] < r[reps][None, :]).astype(float)
    # truncation factors on representative slices
    u0 = f.u_hat[:, :rmax, :][:, :, reps] * f.s_hat[:rmax, reps]
    v0 = f.v_hat[:, :rmax, :][:, :, reps]
    minv = t.inverse
    xv = x.values.real
    best_gain, witness = -np.inf, None
    done = 0
    for b in range(-(-trials // batch)):
        size = min(batch, trials - done)
        rng = np.random.default_rng([seed, b])
        nr = len(reps)
        uu = _random_factors(rng, (size, m, rmax, nr), real_rep)
        vv = _random_factors(rng, (size, p, rmax, nr), real_rep)
        half = size // 2
        scale = 10.0 ** rng.uniform(-6, 0, size=(size - half, 1, 1, 1))
        ref = np.linalg.norm(u0) / max(np.sqrt(u0.size), 1)
        uu[half:] = u0 + scale * ref * uu[half:]
        vv[half:] = v0 + scale * vv[half:]
        uu = uu * mask
        hat_rep = np.einsum("bird,bjrd->bijd", uu, vv.conj())
        hat = np.zeros((size, m, p, n), dtype=np.complex128)
        hat[..., reps] = hat_rep
        for s, sp in partners:
            hat[..., sp] = hat[..., s].conj()
        y = np.einsum("kl,bijl->bijk", minv, hat).real
        errs = np.linalg.norm((xv - y).reshape(size, -1), axis=1)
        gains = err0 - errs
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            if best_gain > gap:
                witness = CounterexampleWitness(
                    x=x, better=Tensor3(y[i]), target=tuple(int(v) for v in lam), gap=best_gain,
                    err_truncation=err0, err_better=float(errs[i]), trial=done + i,
                )
        done += size
    return SearchResult(witness, best_gain, done)


def refute_random(x: Tensor3, t: Transform, lam, trials: int = 10_000, seed: int = 0):
    """Return a witness beating the tubal-length truncation by more than 1e-9, or ``None``."""
    return random_search(x, t, lam, trials, seed).witness


# Scaled versus unitary transforms


@dataclass(frozen=True)
class FixedRankComparison:
    err_q: float
    err_dq: float
    trunc_diff: float


def compare_fixed_rank(x: Tensor3, q: Transform, dq: Transform, spec: RankSpec) -> FixedRankComparison:
    """Truncate ``x`` to the same fixed rank under ``q`` and ``dq``."""
    if isinstance(spec, Energy):
        raise TypeError("an energy target is not a fixed rank; use compare_gamma")
    yq = truncate(tsvdm(x, q), spec)
    ydq = truncate(tsvdm(x, dq), spec)
    return FixedRankComparison(frob_norm(x - yq), frob_norm(x - ydq), frob_norm(yq - ydq))


@dataclass(frozen=True)
class GammaComparison:
    r_gamma_q: int
    r_gamma_dq: int
    holds: bool
    r_gamma_dq_retained: int


def compare_gamma(x: Tensor3, q: Transform, dq: Transform, gamma: float) -> GammaComparison:
    """Compare tSVDMII ranks under ``q`` and ``dq = D q``.

    ``holds`` reports whether ``r_gamma_q <= r_gamma_dq``; this is not
    guaranteed in general (see README). ``r_gamma_dq_retained`` counts how many
    components, taken in the order ``dq`` ranks them, are needed to retain
    ``gamma`` of the energy measured under ``q``; it never undercuts ``r_gamma_q``.
    """
    fq, fdq = tsvdm(x, q), tsvdm(x, dq)
    gq = gamma_rank(fq.s_hat, gamma)
    gdq = gamma_rank(fdq.s_hat, gamma)
    energy_q = (fdq.s_hat / dq.row_mu * q.row_mu) ** 2
    order = np.argsort(-(fdq.s_hat**2).ravel(), kind="stable")
    csum = np.cumsum(energy_q.ravel()[order])
    if csum.size == 0 or csum[-1] == 0:
        retained = 0
    else:
        retained = int(np.argmax(csum / csum[-1] >= gamma)) + 1
    return GammaComparison(gq.r_gamma, gdq.r_gamma, gq.r_gamma <= gdq.r_gamma, retained)


# Certification


def certify(t: Transform, x: Tensor3 | None = None, trials: int = 0, seed: int = 0, lam=None) -> EckartYoungReport:
    """Certificate plus, where possible, an executable confirmation or refutation.

    Invalid real-ring transforms are refuted with a closed-form witness when a
    conjugate group has a nonzero cross Gram entry; otherwise, and for valid
    transforms when ``trials > 0``, a random search is run on ``x`` (default: a
    seeded random tube) against ``lam`` (default: keep the first group only,
    or the group of the first violating row).
    """
    cert = t.certificate
    if not t.is_real_ring:
        return EckartYoungReport(t.id, False, "Invalid", violation=cert.violation)
    if not cert.valid:
        for ctor in (counterexample_real_gram, counterexample_imag_gram):
            try:
                w = ctor(t)
            except NotApplicable:
                continue
            if w.gap > WITNESS_GAP:
                return EckartYoungReport(t.id, False, "RefutedInvalid", violation=cert.violation, witness=w)
    if cert.valid and trials <= 0:
        return EckartYoungReport(t.id, True, "CertifiedValid", mu=cert.mu)
    if trials <= 0:
        return EckartYoungReport(t.id, False, "Invalid", violation=cert.violation)
    rng = np.random.default_rng(seed)
    if x is None:
        x = Tensor3(rng.standard_normal((1, 1, t.n)))
    if lam is None:
        j = 0 if cert.valid else int(t.structure.tau[cert.violation.indices[0]])
        lam = tuple(min(1, x.dims[0], x.dims[1]) if jj == j else 0 for jj in range(t.structure.ell))
    res = random_search(x, t, lam, trials, seed)
    if cert.valid:
        verdict = "ConfirmedValid" if res.witness is None else "RefutedInvalid"
        return EckartYoungReport(t.id, True, verdict, mu=cert.mu, trials=res.trials,
                                 max_violation=max(res.max_improvement, 0.0), witness=res.witness)
    verdict = "RefutedInvalid" if res.witness is not None else "Invalid"
    return EckartYoungReport(t.id, False, verdict, violation=cert.violation, trials=res.trials,
                             max_violation=max(res.max_improvement, 0.0), witness=res.witness)
