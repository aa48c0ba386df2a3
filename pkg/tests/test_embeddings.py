import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rhythmrec import embeddings as emb
from rhythmrec.numerics import Tensor, make_rng
from rhythmrec.numerics.gradcheck import check_gradients
from rhythmrec.selfcheck import check_fusion


def table(rows, d, seed=0, zero=False):
    data = np.zeros((rows, d)) if zero else make_rng(seed, "table").normal(size=(rows, d))
    return emb.EmbeddingTable(Tensor(data, requires_grad=True))


def rand(shape, seed):
    return Tensor(make_rng(seed, "rand").normal(size=shape), requires_grad=True)


def test_trunc_normal_stays_within_two_sigma():
    x = emb.trunc_normal(make_rng(0), (200, 64))
    assert np.abs(x).max() <= 0.04
    assert abs(x.std() - 0.0176) < 0.002  # std of N(0, 0.02) truncated at 2 sigma is ~0.88 * 0.02


# -- lookups ---------------------------------------------------------------------


def test_embed_items_equal_indices_equal_rows():
    out = emb.embed_items(table(5, 3), [2, 2, 2]).data
    assert np.all(out == out[0])


def test_embed_items_gradient_scatters():
    t = table(5, 3)
    emb.embed_items(t, [1, 3, 1]).sum().backward()
    expected = np.zeros((5, 3))
    expected[1] = 2.0
    expected[3] = 1.0
    np.testing.assert_array_equal(t.weights.grad, expected)


def test_embed_items_out_of_range():
    with pytest.raises(IndexError):
        emb.embed_items(table(5, 3), [5])


def test_embed_positions():
    t = table(6, 4)
    np.testing.assert_array_equal(emb.embed_positions(t, 6).data, t.weights.data)
    np.testing.assert_array_equal(emb.embed_positions(t, 1).data, t.weights.data[:1])
    assert np.array_equal(emb.embed_positions(t, 3).data, emb.embed_positions(t, 3).data)
    with pytest.raises(ValueError):
        emb.embed_positions(t, 7)


def test_embed_rhythm():
    t = table(10, 4)
    np.testing.assert_array_equal(emb.embed_rhythm(t, [0, 0, 0]).data, np.repeat(t.weights.data[:1], 3, axis=0))
    assert np.all(emb.embed_rhythm(table(10, 4, zero=True), [3, 9]).data == 0.0)
    assert emb.embed_rhythm(t, [1, 2, 3, 4, 5]).shape == (5, 4)
    with pytest.raises(IndexError):
        emb.embed_rhythm(t, [10])


# -- basic fusion ------------------------------------------------------------------


def test_fuse_basic():
    theta, omega = rand((3, 4), 1), rand((3, 4), 2)
    np.testing.assert_array_equal(emb.fuse_basic(theta, Tensor(np.zeros((3, 4)))).data, theta.data)
    np.testing.assert_array_equal(emb.fuse_basic(theta, omega).data, emb.fuse_basic(omega, theta).data)
    np.testing.assert_array_equal(emb.fuse_basic(Tensor([[1.0, 2.0]]), Tensor([[3.0, -2.0]])).data, [[4.0, 0.0]])
    with pytest.raises(ValueError):
        emb.fuse_basic(rand((3, 4), 1), rand((2, 4), 1))


# -- mlp fusion ----------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 3, 50])
def test_fuse_mlp_shape(n):
    p = emb.init_fusion_params("mf", 8, seed=1)
    assert emb.fuse_mlp(rand((n, 8), 1), rand((n, 8), 2), p).shape == (n, 8)


def test_fuse_mlp_zero_weights_give_zero():
    p = emb.init_fusion_params("mf", 4)
    for t in p.tensors.values():
        t.data = np.zeros_like(t.data)
    assert np.all(emb.fuse_mlp(rand((3, 4), 1), rand((3, 4), 2), p).data == 0.0)


def addition_weights(d):
    p = emb.init_fusion_params("mf", d, linear_only=True)
    p.tensors["fusion.mlp.0.weight"].data = np.vstack([np.eye(d), np.eye(d)])
    p.tensors["fusion.mlp.0.bias"].data = np.zeros(d)
    return p


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 12), d=st.integers(1, 10))
def test_fuse_mlp_addition_weights_reproduce_basic_fusion(seed, n, d):
    theta, omega = rand((n, d), seed), rand((n, d), seed + 1)
    got = emb.fuse_mlp(theta, omega, addition_weights(d)).data
    np.testing.assert_allclose(got, emb.fuse_basic(theta, omega).data, rtol=0, atol=1e-12)


def test_mlp_has_two_layers_by_default():
    p = emb.init_fusion_params("mf", 6)
    assert p.tensors["fusion.mlp.0.weight"].shape == (12, 6)
    assert p.tensors["fusion.mlp.1.weight"].shape == (6, 6)


# -- gated fusion ------------------------------------------------------------------------


def gated(d=4, seed=0):
    p = emb.init_fusion_params("gf", d, seed=seed)
    rng = make_rng(seed, "gf")
    for t in p.tensors.values():
        t.data = rng.normal(size=t.shape)
    return p


@pytest.mark.parametrize("bias, which", [(50.0, "h_p"), (-50.0, "h_r")])
def test_gate_saturation(bias, which):
    p = gated()
    p.tensors["fusion.h_c.weight"].data = np.zeros((8, 4))
    p.tensors["fusion.h_c.bias"].data = np.full(4, bias)
    theta, omega = rand((5, 4), 3), rand((5, 4), 4)
    src = theta if which == "h_p" else omega
    expected = np.tanh(src.data @ p[which + ".weight"].data + p[which + ".bias"].data)
    np.testing.assert_allclose(emb.fuse_gated(theta, omega, p).data, expected, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 10))
def test_gate_and_output_ranges(seed, n):
    p = gated(seed=seed)
    theta, omega = rand((n, 4), seed), rand((n, 4), seed + 7)
    w = emb.gate(theta, omega, p).data
    assert np.all((w > 0) & (w < 1))
    m = emb.fuse_gated(theta, omega, p).data
    assert np.all((m > -1) & (m < 1))


def test_fuse_gated_matches_formula():
    p = gated(seed=2)
    theta, omega = rand((3, 4), 5), rand((3, 4), 6)
    t_, o_ = theta.data, omega.data
    tp = np.tanh(t_ @ p["h_p.weight"].data + p["h_p.bias"].data)
    op = np.tanh(o_ @ p["h_r.weight"].data + p["h_r.bias"].data)
    w = 1.0 / (1.0 + np.exp(-(np.hstack([t_, o_]) @ p["h_c.weight"].data + p["h_c.bias"].data)))
    np.testing.assert_allclose(emb.fuse_gated(theta, omega, p).data, w * tp + (1 - w) * op, atol=1e-14)


# -- all fusions ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["bf", "mf", "gf"])
@pytest.mark.parametrize("n", [1, 7, 50])
def test_every_fusion_gives_n_by_d(kind, n):
    p = emb.init_fusion_params(kind, 8, seed=0)
    assert emb.fuse(rand((n, 8), 0), rand((n, 8), 1), p).shape == (n, 8)


def test_bf_owns_no_parameters():
    assert emb.init_fusion_params("bf", 8).tensors == {}


@pytest.mark.parametrize("kind", ["bf", "mf", "gf"])
def test_fusion_gradients_match_finite_differences(kind):
    result = check_fusion(kind, n=6, d=4)
    assert result.passed, result


def test_fusion_gradients_direct():
    p = gated(seed=9)
    theta, omega = rand((6, 4), 10), rand((6, 4), 11)
    r = make_rng(1).normal(size=(6, 4))
    errs = check_gradients(lambda: (emb.fuse_gated(theta, omega, p) * r).sum(),
                           {"theta": theta, "omega": omega, **p.tensors})
    assert max(errs.values()) < 1e-4


# -- composition ------------------------------------------------------------------------------


def test_compose_input():
    psi = rand((3, 4), 1)
    np.testing.assert_array_equal(emb.compose_input(psi, Tensor(np.zeros((3, 4)))).data, psi.data)
    np.testing.assert_array_equal(emb.compose_input(Tensor([[1.0, 1.0]]), Tensor([[0.0, -1.0]])).data, [[1.0, 0.0]])
    with pytest.raises(ValueError):
        emb.compose_input(psi, rand((2, 4), 1))


def test_basic_fusion_with_zero_rhythm_reduces_to_plain_positions():
    items, pos, rhythm = table(8, 4, 1), table(5, 4, 2), table(6, 4, zero=True)
    psi = emb.embed_items(items, [3, 1, 7])
    theta = emb.embed_positions(pos, 3)
    plain = emb.compose_input(psi, theta).data
    morphed = emb.compose_input(psi, emb.fuse_basic(theta, emb.embed_rhythm(rhythm, [0, 4, 5]))).data
    assert np.array_equal(plain, morphed)
