import numpy as np
import pytest

from tubalg import (
    Tensor3,
    conj_transpose,
    dct,
    dft,
    frob_norm,
    idempotent_tube,
    identity,
    identity_tensor,
    identity_tube,
    is_unitary,
    starm,
    t_product_circulant,
    tsvdm,
    tube,
    tube_mul,
    tube_scale,
    tube_weak_inverse,
)
from tubalg.exceptions import ShapeError

from conftest import pair_transform, rand_tensor, rel, valid_transforms


def test_tube_mul_identity(rng):
    for t in valid_transforms() + [pair_transform()]:
        b = tube(rng.standard_normal(t.n))
        assert rel(tube_mul(identity_tube(t), b, t), b) < 1e-13


def test_tube_mul_identity_transform_is_elementwise(rng):
    a, b = rng.standard_normal(5), rng.standard_normal(5)
    np.testing.assert_allclose(tube_mul(a, b, identity(5)).values.ravel(), a * b, rtol=1e-15)


def test_tube_mul_dft_is_circular_convolution(rng):
    a, b = rng.standard_normal(4), rng.standard_normal(4)
    conv = np.array([sum(a[(k - j) % 4] * b[j] for j in range(4)) for k in range(4)])
    np.testing.assert_allclose(tube_mul(a, b, dft(4)).values.ravel(), conv, atol=1e-14)
    shift = np.array([0.0, 1.0, 0.0, 0.0])
    np.testing.assert_allclose(tube_mul(shift, b, dft(4)).values.ravel(), np.roll(b, 1), atol=1e-15)


def test_tube_mul_length_mismatch():
    with pytest.raises(ShapeError):
        tube_mul(np.ones(3), np.ones(4), dft(4))


def test_tube_mul_commutative_associative(rng):
    t = dct(5)
    a, b, c = (rng.standard_normal(5) for _ in range(3))
    assert rel(tube_mul(a, b, t), tube_mul(b, a, t)) < 1e-14
    left = tube_mul(tube_mul(a, b, t), c, t)
    right = tube_mul(a, tube_mul(b, c, t), t)
    assert rel(left, right) < 1e-12


def test_starm_identity_and_n1(rng):
    for t in valid_transforms():
        b = rand_tensor(rng, 3, 2, t.n)
        assert rel(starm(identity_tensor(3, t), b, t), b) < 1e-13
        assert rel(starm(b, identity_tensor(2, t), t), b) < 1e-13
    a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 4))
    out = starm(Tensor3(a[:, :, None]), Tensor3(b[:, :, None]), identity(1))
    np.testing.assert_allclose(out.values[:, :, 0], a @ b, rtol=1e-14)


def test_starm_matches_circulant(rng):
    a, b = rand_tensor(rng, 2, 3, 4), rand_tensor(rng, 3, 2, 4)
    assert rel(starm(a, b, dft(4)), t_product_circulant(a, b)) < 1e-11


def test_starm_shape_mismatch(rng):
    with pytest.raises(ShapeError):
        starm(rand_tensor(rng, 2, 3, 4), rand_tensor(rng, 2, 2, 4), dft(4))


@pytest.mark.parametrize("t", valid_transforms() + [pair_transform()], ids=lambda t: t.id)
def test_starm_tube_formula(rng, t):
    a, b = rand_tensor(rng, 2, 3, t.n), rand_tensor(rng, 3, 2, t.n)
    c = starm(a, b, t)
    for i in range(2):
        for j in range(2):
            entry = sum(tube_mul(a.values[i, k], b.values[k, j], t).values.ravel() for k in range(3))
            np.testing.assert_allclose(c.values[i, j], entry, rtol=0, atol=1e-11 * frob_norm(c))


@pytest.mark.parametrize("t", valid_transforms() + [pair_transform()], ids=lambda t: t.id)
def test_starm_real_associative_distributive(rng, t):
    a, b, c, d = (rand_tensor(rng, 3, 3, t.n) for _ in range(4))
    ab = starm(a, b, t)
    assert ab.max_imag() == 0
    assert rel(starm(ab, c, t), starm(a, starm(b, c, t), t)) < 1e-11
    assert rel(starm(a, b + d, t), ab + starm(a, d, t)) < 1e-11


def test_tube_scale(rng):
    t = dft(4)
    a = rand_tensor(rng, 2, 2, 4)
    assert rel(tube_scale(identity_tube(t), a, t), a) < 1e-14
    assert frob_norm(tube_scale(np.zeros(4), a, t)) == 0
    b = rng.standard_normal(4)
    out = tube_scale(b, a, t)
    for i in range(2):
        for j in range(2):
            np.testing.assert_allclose(out.values[i, j], tube_mul(b, a.values[i, j], t).values.ravel(), atol=1e-12)
    # b lifted onto the diagonal of an f-diagonal 2x2xn tensor
    lifted = starm(tube_scale(b, identity_tensor(2, t), t), a, t)
    assert rel(lifted, out) < 1e-12


def test_conj_transpose(rng):
    a = rand_tensor(rng, 2, 3, 4)
    np.testing.assert_array_equal(conj_transpose(a, identity(4)).values, a.values.transpose(1, 0, 2))
    for t in valid_transforms():
        x = rand_tensor(rng, 2, 3, t.n)
        assert rel(conj_transpose(conj_transpose(x, t), t), x) < 1e-13
    t = dft(3)
    a, b = rand_tensor(rng, 2, 2, 3), rand_tensor(rng, 2, 2, 3)
    lhs = conj_transpose(starm(a, b, t), t)
    rhs = starm(conj_transpose(b, t), conj_transpose(a, t), t)
    assert rel(lhs, rhs) < 1e-12


def test_identity_tensor_layouts():
    t = dft(4)
    assert rel(identity_tensor(1, t), identity_tube(t)) == 0
    eye = identity_tensor(3, t).values
    np.testing.assert_allclose(eye[:, :, 0], np.eye(3), atol=1e-15)
    np.testing.assert_allclose(eye[:, :, 1:], 0, atol=1e-15)
    hat = t.forward(identity_tensor(3, t)).values
    for k in range(4):
        np.testing.assert_allclose(hat[:, :, k], np.eye(3), atol=1e-14)
    np.testing.assert_array_equal(identity_tensor(2, identity(3)).values, np.repeat(np.eye(2)[:, :, None], 3, axis=2))


def test_is_unitary(rng):
    t = dct(4)
    assert is_unitary(identity_tensor(3, t), t)
    u = tsvdm(rand_tensor(rng, 3, 3, 4), t).u
    assert is_unitary(u, t)
    assert not is_unitary(u + 0.1 * rand_tensor(rng, 3, 3, 4), t)
    assert not is_unitary(rand_tensor(rng, 3, 2, 4), t)


def test_weak_inverse():
    t = dft(2)
    assert rel(tube_weak_inverse(identity_tube(t), t), identity_tube(t)) < 1e-15
    assert frob_norm(tube_weak_inverse(np.zeros(2), t)) == 0
    s = t.inverse @ np.array([2.0, 0.0])
    sp = tube_weak_inverse(s, t)
    np.testing.assert_allclose(t.matrix @ sp.values.ravel(), [0.5, 0], atol=1e-15)
    p = tube_mul(s, sp, t)
    np.testing.assert_allclose(t.matrix @ p.values.ravel(), [1, 0], atol=1e-15)
    assert rel(tube_mul(p, p, t), p) < 1e-15
    assert rel(tube_mul(tube_mul(s, sp, t), s, t), tube(s)) < 1e-15


def test_circulant_oracle_basics(rng):
    a, b = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
    out = t_product_circulant(Tensor3(a[:, :, None]), Tensor3(b[:, :, None]))
    np.testing.assert_allclose(out.values[:, :, 0], a @ b, rtol=1e-14)
    x = rand_tensor(rng, 3, 2, 5)
    eye = np.zeros((2, 2, 5))
    eye[:, :, 0] = np.eye(2)
    np.testing.assert_array_equal(t_product_circulant(x, Tensor3(eye)).values, x.values)
    a, b = rand_tensor(rng, 2, 3, 4), rand_tensor(rng, 3, 2, 4)
    assert rel(t_product_circulant(a, b), starm(a, b, dft(4))) < 1e-11


@pytest.mark.parametrize("t", valid_transforms(), ids=lambda t: t.id)
def test_energy_split(rng, t):
    x = rand_tensor(rng, 3, 4, t.n)
    parts = sum(frob_norm(tube_scale(idempotent_tube(t, j), x, t)) ** 2 for j in range(t.structure.ell))
    assert abs(frob_norm(x) ** 2 - parts) <= 1e-10 * frob_norm(x) ** 2
