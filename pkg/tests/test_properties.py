import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from tubalg import (
    Tensor3,
    conj_transpose,
    dct,
    dft,
    frob_norm,
    gamma_rank,
    idempotent_tube,
    identity,
    is_unitary,
    multirank,
    random_valid,
    scaled,
    starm,
    t_product_circulant,
    truncate,
    truncation_error,
    tsvdm,
    tube_scale,
    ttm,
    unfold,
)
from tubalg.tsvdm import MultiRank, TubalLength

settings.register_profile("tubalg", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("tubalg")

TRANSFORMS = {
    "identity": lambda n: identity(n),
    "dft": lambda n: dft(n),
    "dct": lambda n: dct(n),
    "random_valid": lambda n: random_valid(n, 3),
    "scaled_dct": lambda n: scaled(dct(n), np.linspace(0.5, 2.0, n)),
}


@st.composite
def setups(draw, max_dim=5, max_n=6):
    m = draw(st.integers(1, max_dim))
    p = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_n))
    name = draw(st.sampled_from(sorted(TRANSFORMS)))
    seed = draw(st.integers(0, 2**32 - 1))
    x = Tensor3(np.random.default_rng(seed).standard_normal((m, p, n)))
    return x, TRANSFORMS[name](n), seed


@given(setups())
def test_forward_backward_round_trip(case):
    x, t, _ = case
    y = t.backward(t.forward(x))
    assert frob_norm(y - x) <= 1e-10 * max(frob_norm(x), 1e-300)
    assert y.max_imag() == 0


@given(setups(), st.sampled_from([1, 2, 3]))
def test_ttm_matches_unfold(case, mode):
    x, _, seed = case
    d = x.dims[mode - 1]
    a = np.random.default_rng(seed + 1).standard_normal((3, d))
    np.testing.assert_allclose(unfold(ttm(x, a, mode), mode), a @ unfold(x, mode), atol=1e-12)


@given(setups())
def test_unitary_transforms_preserve_norm(case):
    x, t, _ = case
    if not np.allclose(t.row_mu, 1):
        return
    assert abs(frob_norm(t.forward(x)) - frob_norm(x)) <= 1e-12 * max(frob_norm(x), 1)


@given(setups(max_dim=3))
def test_real_ring_closed_and_associative(case):
    a, t, seed = case
    rng = np.random.default_rng(seed + 2)
    m, p, n = a.dims
    b = Tensor3(rng.standard_normal((p, 2, n)))
    c = Tensor3(rng.standard_normal((2, 3, n)))
    ab = starm(a, b, t)
    assert ab.max_imag() == 0
    lhs, rhs = starm(ab, c, t), starm(a, starm(b, c, t), t)
    assert frob_norm(lhs - rhs) <= 1e-10 * max(frob_norm(lhs), 1)


@given(setups(max_dim=3))
def test_circulant_oracle_for_dft(case):
    a, _, seed = case
    n = a.dims[2]
    b = Tensor3(np.random.default_rng(seed + 3).standard_normal((a.dims[1], 2, n)))
    ref = t_product_circulant(a, b)
    assert frob_norm(starm(a, b, dft(n)) - ref) <= 1e-11 * max(frob_norm(ref), 1)


@given(setups())
def test_idempotent_energy_split(case):
    x, t, _ = case
    total = frob_norm(x) ** 2
    parts = [tube_scale(idempotent_tube(t, j), x, t) for j in range(t.structure.ell)]
    assert abs(total - sum(frob_norm(p) ** 2 for p in parts)) <= 1e-10 * max(total, 1)
    assert frob_norm(sum(parts[1:], parts[0]) - x) <= 1e-10 * max(frob_norm(x), 1)


@given(setups())
def test_tsvdm_invariants(case):
    x, t, _ = case
    f = tsvdm(x, t)
    rec = starm(starm(f.u, f.s, t), conj_transpose(f.v, t), t)
    assert frob_norm(rec - x) <= 1e-10 * max(frob_norm(x), 1e-300)
    assert is_unitary(f.u, t) and is_unitary(f.v, t)
    assert np.all(np.diff(f.s_hat, axis=0) <= 1e-12 * max(f.s_hat.max(), 1))
    for g in t.structure.groups:
        for k in g[1:]:
            np.testing.assert_allclose(f.s_hat[:, k], f.s_hat[:, g[0]], rtol=0, atol=1e-10 * max(f.s_hat.max(), 1))


@given(setups(), st.data())
def test_truncation_error_formula(case, data):
    x, t, _ = case
    f = tsvdm(x, t)
    kmax = min(x.dims[:2])
    lam = data.draw(st.lists(st.integers(0, kmax), min_size=t.structure.ell, max_size=t.structure.ell))
    y = truncate(f, TubalLength(lam))
    direct = frob_norm(x - y) ** 2
    assert abs(direct - truncation_error(f, TubalLength(lam))) <= 1e-9 * max(frob_norm(x) ** 2, 1)


@given(setups(), st.floats(0.05, 1.0))
def test_gamma_rank_invariants(case, gamma):
    x, t, _ = case
    f = tsvdm(x, t)
    g = gamma_rank(f.s_hat, gamma)
    assert g.retained_energy >= gamma - 1e-12
    assert sum(g.rho) >= g.r_gamma
    # rho is a valid multirank and never exceeds the numerical multirank
    for grp in t.structure.groups:
        assert len({g.rho[k] for k in grp}) == 1
    assert all(a <= b for a, b in zip(g.rho, multirank(f)))
    full = gamma_rank(f.s_hat, 1.0)
    assert abs(full.retained_energy - 1.0) <= 1e-12


@given(setups())
def test_full_multirank_truncation_is_exact(case):
    x, t, _ = case
    f = tsvdm(x, t)
    y = truncate(f, MultiRank(multirank(f)))
    assert frob_norm(y - x) <= 1e-9 * max(frob_norm(x), 1e-300)
