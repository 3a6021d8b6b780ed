import numpy as np
import pytest

from tubalg import (
    Energy,
    MultiRank,
    Tensor3,
    TRank,
    TubalLength,
    build_transform,
    conj_transpose,
    crafted_invalid,
    dct,
    dft,
    frob_norm,
    gamma_rank,
    identity,
    identity_tensor,
    implicit_rank,
    is_unitary,
    length_to_multirank,
    multirank,
    multirank_to_length,
    random_valid,
    scaled,
    starm,
    t_rank,
    truncate,
    truncation_error,
    tsvdm,
    tsvdm2,
    tubal_length,
)
from tubalg.exceptions import InvalidMultirank, NotRealRing, RankSpecError

from conftest import pair_transform, rand_tensor, rel, valid_transforms


def reconstruct(f):
    t = f.transform
    return starm(starm(f.u, f.s, t), conj_transpose(f.v, t), t)


def test_n1_is_matrix_svd(rng):
    a = rng.standard_normal((4, 3))
    f = tsvdm(Tensor3(a[:, :, None]), identity(1))
    np.testing.assert_allclose(f.s_hat[:, 0], np.linalg.svd(a, compute_uv=False), rtol=1e-14)
    assert rel(reconstruct(f).values[:, :, 0], a) < 1e-14


def test_identity_tensor_spectrum():
    t = dct(4)
    f = tsvdm(identity_tensor(3, t), t)
    np.testing.assert_allclose(f.s_hat, 1.0, rtol=1e-14)
    assert rel(reconstruct(f), identity_tensor(3, t)) < 1e-14


@pytest.mark.parametrize("t", valid_transforms() + [pair_transform()], ids=lambda t: t.id)
def test_factor_invariants(rng, t):
    x = rand_tensor(rng, 4, 3, t.n)
    f = tsvdm(x, t)
    assert rel(reconstruct(f), x) < 1e-11
    assert is_unitary(f.u, t) and is_unitary(f.v, t)
    for part in (f.u, f.s, f.v):
        assert part.max_imag() == 0
    assert np.all(np.diff(f.s_hat, axis=0) <= 0) and np.all(f.s_hat >= 0)
    for g in t.structure.groups:
        for k in g[1:]:
            np.testing.assert_array_equal(f.s_hat[:, k], f.s_hat[:, g[0]])


def test_tsvdm_rejects_non_real_ring(rng):
    t = build_transform([[1, 1j], [0, 1]])
    with pytest.raises(NotRealRing):
        tsvdm(rand_tensor(rng, 2, 2, 2), t)


def test_t_rank(rng):
    t = dct(4)
    assert t_rank(tsvdm(Tensor3(np.zeros((3, 3, 4))), t)) == 0
    a, b = rand_tensor(rng, 3, 1, 4), rand_tensor(rng, 1, 5, 4)
    assert t_rank(tsvdm(starm(a, b, t), t)) == 1
    assert t_rank(tsvdm(identity_tensor(3, t), t)) == 3


def test_multirank(rng):
    assert multirank(tsvdm(Tensor3(np.zeros((2, 2, 4))), dft(4))) == (0, 0, 0, 0)
    t = pair_transform()
    f = tsvdm(Tensor3(np.array([0.7, -1.3]).reshape(1, 1, 2)), t)
    assert multirank(f) == (1, 1) and implicit_rank(f) == 2
    assert multirank(tsvdm(rand_tensor(rng, 3, 3, 4), dct(4))) == (3, 3, 3, 3)


def test_multirank_rank_deficient_slices(rng):
    t = identity(3)
    x = np.zeros((3, 3, 3))
    x[:, :, 0] = rng.standard_normal((3, 3))
    x[:, :, 1] = np.outer(rng.standard_normal(3), rng.standard_normal(3))
    f = tsvdm(Tensor3(x), t)
    assert multirank(f) == (3, 1, 0)
    assert t_rank(f) == 3 and implicit_rank(f) == 4


def test_tubal_length(rng):
    assert tubal_length(tsvdm(Tensor3(np.zeros((2, 2, 4))), dft(4))) == (0, 0, 0)
    t = pair_transform()
    assert tubal_length(tsvdm(Tensor3(np.array([1.0, 2.0]).reshape(1, 1, 2)), t)) == (1,)
    t = dft(4)
    hat = np.zeros((3, 3, 4), dtype=complex)
    hat[:, :, 0] = np.outer(rng.standard_normal(3), rng.standard_normal(3))
    hat[:, :, 1] = rng.standard_normal((3, 2)) @ rng.standard_normal((2, 3)) * (1 + 1j)
    hat[:, :, 3] = hat[:, :, 1].conj()
    hat[:, :, 2] = rng.standard_normal((3, 3))
    f = tsvdm(t.backward(Tensor3(hat, t.id)), t)
    lam, r = tubal_length(f), multirank(f)
    assert r == (1, 2, 3, 2) and lam == (1, 2, 3)
    assert all(lam[t.structure.tau[k]] == r[k] for k in range(4))


def test_length_multirank_maps():
    st = dft(4).structure
    assert length_to_multirank((0, 0, 0), st) == (0, 0, 0, 0)
    assert multirank_to_length((0, 0, 0, 0), st) == (0, 0, 0)
    assert length_to_multirank((2, 1, 0), st) == (2, 1, 0, 1)
    assert multirank_to_length((2, 1, 0, 1), st) == (2, 1, 0)
    pst = pair_transform().structure
    assert length_to_multirank((1,), pst) == (1, 1)
    with pytest.raises(InvalidMultirank):
        multirank_to_length((1, 0), pst)
    with pytest.raises(InvalidMultirank):
        multirank_to_length((2, 1, 0, 0), st)


def test_length_multirank_order_preserving():
    st = random_valid(6, 3).structure
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.integers(0, 4, st.ell), rng.integers(0, 4, st.ell)
        ra, rb = np.array(length_to_multirank(a, st)), np.array(length_to_multirank(b, st))
        assert np.all(a <= b) == np.all(ra <= rb)
        assert multirank_to_length(ra, st) == tuple(a)


def test_truncate_extremes(rng):
    t = dft(4)
    x = rand_tensor(rng, 4, 3, 4)
    f = tsvdm(x, t)
    assert rel(truncate(f, TRank(3)), x) < 1e-10
    assert rel(truncate(f, TubalLength((3, 3, 3))), x) < 1e-10
    assert frob_norm(truncate(f, TRank(0))) == 0
    assert frob_norm(truncate(f, MultiRank((0, 0, 0, 0)))) == 0


def test_truncate_closed_form_dct(rng):
    x = rand_tensor(rng, 4, 4, 4)
    f = tsvdm(x, dct(4))
    direct = frob_norm(x - truncate(f, MultiRank((2, 2, 2, 2)))) ** 2
    tail = np.sum(f.s_hat[2:] ** 2)
    assert abs(direct - tail) <= 1e-9 * direct


def test_truncate_errors(rng):
    f = tsvdm(rand_tensor(rng, 3, 2, 2), pair_transform())
    with pytest.raises(InvalidMultirank, match="conjugate group"):
        truncate(f, MultiRank((1, 0)))
    with pytest.raises(RankSpecError):
        truncate(f, TRank(3))
    with pytest.raises(RankSpecError):
        truncate(f, TubalLength((1, 1)))


def test_truncation_error_cases(rng):
    x = rand_tensor(rng, 4, 3, 4)
    f = tsvdm(x, dct(4))
    assert truncation_error(f, TRank(3)) == 0
    spec = MultiRank((2, 1, 0, 3))
    tail = sum(np.sum(f.s_hat[r:, k] ** 2) for k, r in enumerate(spec.r))
    assert truncation_error(f, spec) == pytest.approx(tail, rel=1e-14)
    t = scaled(dct(4), (2, 1, 1, 1))
    f = tsvdm(x, t)
    weighted = sum(np.sum(f.s_hat[r:, k] ** 2) / t.certificate.mu[k] ** 2 for k, r in enumerate(spec.r))
    direct = frob_norm(x - truncate(f, spec)) ** 2
    assert truncation_error(f, spec) == pytest.approx(weighted, rel=1e-13)
    assert abs(direct - weighted) <= 1e-9 * direct


@pytest.mark.parametrize("t", [crafted_invalid(4, "real", 1), crafted_invalid(5, "cross", 2)], ids=lambda t: t.id)
def test_truncation_error_general_transform(rng, t):
    x = rand_tensor(rng, 3, 3, t.n)
    f = tsvdm(x, t)
    spec = TRank(1)
    direct = frob_norm(x - truncate(f, spec)) ** 2
    assert abs(truncation_error(f, spec) - direct) <= 1e-9 * direct


def test_tsvdm2_gamma_one(rng):
    x = rand_tensor(rng, 3, 4, 4)
    res = tsvdm2(x, dct(4), 1.0)
    assert res.rho == (3, 3, 3, 3) and res.r_gamma == 12
    assert rel(res.approx, x) < 1e-10


def test_tsvdm2_dominant_spectrum():
    t = identity(3)
    x = np.zeros((2, 2, 3))
    x[:, :, 0] = np.diag([10.0, 0.5])
    x[:, :, 1] = np.diag([0.6, 0.4])
    x[:, :, 2] = np.diag([0.3, 0.2])
    res = tsvdm2(Tensor3(x), t, 0.9)
    assert res.r_gamma == 1 and res.rho == (1, 0, 0)
    assert res.retained_energy >= 0.9


def test_gamma_rank_ties_keep_equal_values():
    s_hat = np.array([[2.0, 2.0, 1.0], [1.0, 0.5, 0.5]])
    g = gamma_rank(s_hat, 0.3)
    # nu = 4, 4, 1, 1, ...; the cutoff 4 is shared by two slices, so both are kept
    assert g.r_gamma == 1 and g.rho == (1, 1, 0)


def test_gamma_out_of_range():
    with pytest.raises(RankSpecError):
        gamma_rank(np.ones((2, 2)), 0.0)
    with pytest.raises(RankSpecError):
        gamma_rank(np.ones((2, 2)), 1.5)


def test_gamma_zero_tensor():
    res = tsvdm2(Tensor3(np.zeros((2, 2, 4))), dct(4), 0.5)
    assert res.r_gamma == 0 and res.rho == (0, 0, 0, 0)


@pytest.mark.parametrize("gamma", [0.3, 0.6, 0.9, 0.99])
def test_tsvdm2_properties(rng, gamma):
    for t in (dct(8), dft(8), random_valid(8, 1)):
        x = rand_tensor(rng, 8, 8, 8)
        res = tsvdm2(x, t, gamma)
        sq = res.factors.s_hat ** 2
        nu = np.sort(sq.ravel())[::-1]
        omega = np.cumsum(nu) / nu.sum()
        assert np.all(np.diff(omega) >= 0)
        assert omega[res.r_gamma - 1] >= gamma and (res.r_gamma == 1 or omega[res.r_gamma - 2] < gamma)
        for g in t.structure.groups:
            assert len({res.rho[k] for k in g}) == 1
        assert res.retained_energy >= gamma
        assert sum(res.rho) >= res.r_gamma
        tail = sum(sq[r:, k].sum() for k, r in enumerate(res.rho))
        assert tail <= (1 - gamma) * sq.sum() * (1 + 1e-12)


def test_energy_spec_routes_through_gamma(rng):
    x = rand_tensor(rng, 4, 4, 4)
    f = tsvdm(x, dct(4))
    res = tsvdm2(x, dct(4), 0.7)
    assert rel(truncate(f, Energy(0.7)), res.approx) < 1e-14
