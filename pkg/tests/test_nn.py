import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from houghradon.data import synth_dataset
from houghradon.nn.network import (
    TABLE1,
    NetworkSpec,
    build_network,
    load_checkpoint,
    save_checkpoint,
    standardize,
)
from houghradon.nn.opcount import PUBLISHED_N_GRID, PUBLISHED_SCALEX_GRID, format_ops, inner_ops_count, ops_grid, ops_table
from houghradon.nn.ops import (
    ConvParams,
    ConvSpec,
    avgpool2,
    avgpool2_backward,
    conv2d_backward,
    conv2d_forward,
    cross_entropy_loss,
    softmax_channels,
    softsign,
    softsign_backward,
    upsample2,
)
from houghradon.nn.training import AdamState, adam_step, train, write_log
from houghradon.radon import radon_width
from oracles import closed_form_parameter_count, directional_fd
from published_table import BASELINE, SCALEX, TABLE

IDENTITY = np.zeros((1, 1, 3, 3))
IDENTITY[0, 0, 1, 1] = 1


def conv(x, weight, bias=None, upscale=1, activation="none"):
    spec = ConvSpec(weight.shape[1], weight.shape[0], upscale, activation)
    return conv2d_forward(x, spec, ConvParams(weight, np.zeros(weight.shape[0]) if bias is None else bias))


def test_box_sum_with_padding():
    out = conv(np.ones((1, 4, 4)), np.ones((1, 1, 3, 3)))[0]
    assert out[1, 1] == 9 and out[0, 1] == 6 and out[0, 0] == 4


def test_identity_kernel():
    x = np.random.default_rng(0).normal(size=(1, 5, 5))
    np.testing.assert_array_equal(conv(x, IDENTITY), x)


def test_upscale_enlarges_first():
    x = np.arange(4.0).reshape(1, 2, 2)
    out = conv(x, IDENTITY, upscale=2)
    np.testing.assert_array_equal(out, upsample2(x))
    assert out.shape == (1, 4, 4)


def test_backward_zero_and_single_pixel():
    x = np.random.default_rng(1).normal(size=(1, 4, 4))
    spec = ConvSpec(1, 1, activation="none")
    params = ConvParams(IDENTITY.copy(), np.zeros(1))
    gx, gp = conv2d_backward(np.zeros((1, 4, 4)), x, spec, params)
    assert not gx.any() and not gp.weight.any() and not gp.bias.any()
    g = np.zeros((1, 4, 4))
    g[0, 2, 1] = 1
    gx, _ = conv2d_backward(g, x, spec, params)
    np.testing.assert_array_equal(gx, g)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2]), st.sampled_from(["softsign", "none"]))
def test_conv_backward_matches_directional_difference(seed, upscale, activation):
    rng = np.random.default_rng(seed)
    spec = ConvSpec(2, 3, upscale, activation)
    x = rng.normal(size=(2, 2, 3, 4))
    w = rng.normal(size=spec.weight_shape)
    b = rng.normal(size=3)
    r = rng.normal(size=conv2d_forward(x, spec, ConvParams(w, b)).shape)
    gx, gp = conv2d_backward(r, x, spec, ConvParams(w, b))
    dx, dw, db = rng.normal(size=x.shape), rng.normal(size=w.shape), rng.normal(size=b.shape)

    def f(theta):
        return float((conv2d_forward(x + theta * dx, spec, ConvParams(w + theta * dw, b + theta * db)) * r).sum())

    numeric = directional_fd(f, 0.0, 1.0)
    analytic = np.vdot(gx, dx) + np.vdot(gp.weight, dw) + np.vdot(gp.bias, db)
    assert abs(numeric - analytic) <= 1e-4 * max(1.0, abs(analytic))


def test_softsign_values_and_slope():
    assert softsign(0.0) == 0 and softsign(1.0) == 0.5
    assert softsign_backward(1.0, 0.0) == 1.0
    assert directional_fd(lambda v: float(softsign(v)), 0.0, 1.0) == pytest.approx(1.0, abs=1e-4)


def test_softmax_cases():
    np.testing.assert_allclose(softmax_channels(np.zeros((2, 1, 1))).ravel(), [0.5, 0.5])
    p = softmax_channels(np.array([1000.0, -1000.0]).reshape(2, 1, 1)).ravel()
    assert np.all(np.isfinite(p)) and p[0] == pytest.approx(1) and p[1] == pytest.approx(0)
    q = softmax_channels(np.random.default_rng(2).normal(size=(3, 2, 5, 5)) * 20)
    np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)


def test_loss_cases():
    mask = np.array([[1, 0], [0, 1]])
    perfect = np.stack([1 - mask, mask]).astype(float)
    assert cross_entropy_loss(perfect, mask)[0] == pytest.approx(0, abs=1e-12)
    assert cross_entropy_loss(np.full((2, 2, 2), 0.5), mask)[0] == pytest.approx(math.log(2))
    with pytest.raises(ValueError):
        cross_entropy_loss(np.full((2, 2, 2), 0.5), np.zeros((3, 3)))


def test_pool_backward_is_adjoint():
    rng = np.random.default_rng(4)
    x, y = rng.normal(size=(2, 4, 4)), rng.normal(size=(2, 2, 2))
    assert np.vdot(avgpool2(x), y) == pytest.approx(np.vdot(x, avgpool2_backward(y)))


def test_parameter_count_closed_form():
    spec = NetworkSpec()
    net = build_network(spec, dtype=np.float32)
    pairs = [(s.in_channels, s.out_channels) for s in spec.conv_specs().values()]
    assert pairs[0] == (1, 4) and spec.conv_specs()[1].parameter_count == 40
    assert net.parameter_count == closed_form_parameter_count(pairs)
    assert set(net.parameters()) == {f"conv{r.index}.{p}" for r in TABLE1 if r.kind == "conv" for p in ("weight", "bias")}


@pytest.mark.parametrize("n, sx", [(253, 0.711), (61, 1.778), (349, 0.178)])
def test_inner_shape(n, sx):
    spec = NetworkSpec(n=n, scale_x=sx)
    assert spec.inner_shape == (16, n, radon_width(64, sx))
    assert spec.hough_map_shape == (253, 128)


def test_output_shape_for_full_size_input():
    spec = NetworkSpec(n=61, scale_x=0.178, width_divisor=4)
    net = build_network(spec, dtype=np.float32)
    out = net.forward(np.zeros((1, 1, 256, 256), dtype=np.float32))
    assert out.shape == (1, 2, 256, 256)


def test_transform_layers_have_no_parameters():
    net = build_network(NetworkSpec.reduced(16))
    for name in ("fht", "hrt", "rht", "tfht"):
        assert net.layer(name).parameters() == {}


def test_standardize():
    x = np.random.default_rng(0).random((3, 8, 8)) * 5 + 2
    z = standardize(x)
    np.testing.assert_allclose(z.mean(axis=(1, 2)), 0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=(1, 2)), 1, atol=1e-12)
    assert np.all(standardize(np.ones((1, 4, 4))) == 0)


# ------------------------------------------------------------------- op counts


@pytest.mark.parametrize("size, shown", [((128, 253), "7.5"), ((64, 253), "3.7"), ((16, 61), "0.2")])
def test_ops_examples(size, shown):
    assert format_ops(inner_ops_count(*size)) == shown


def test_ops_closed_form():
    assert inner_ops_count(128, 253) == 74_612_736
    assert inner_ops_count(16, 61) == 2_248_704


def test_every_published_cell():
    grid = {(n, sx): (w, h, ops) for n, sx, w, h, ops in ops_grid()}
    for n in PUBLISHED_N_GRID:
        for sx, (w, h, shown) in zip(SCALEX, TABLE[n]):
            gw, gh, ops = grid[(n, sx)]
            assert (gw, gh, format_ops(ops)) == (w, h, shown)
    w, h, shown = BASELINE
    assert format_ops(inner_ops_count(w, h)) == shown
    assert tuple(PUBLISHED_SCALEX_GRID) == SCALEX


def test_format_rule_boundaries():
    assert format_ops(99_400_000) == "9.9"
    assert format_ops(99_600_000) == "10"
    assert format_ops(104_900_000) == "10"


def test_ops_table_text():
    text = ops_table(64, [253], [1.422])
    assert "[128; 253] 7.5" in text


# ----------------------------------------------------------------------- adam


def test_adam_zero_gradient_keeps_parameters():
    p = {"w": np.array([1.0, -2.0])}
    new, _ = adam_step(p, {"w": np.zeros(2)}, AdamState.zeros_like(p))
    np.testing.assert_array_equal(new["w"], p["w"])


def test_adam_single_step_by_hand():
    # m = 0.2, v = 0.004, m_hat = 2, v_hat = 4, step = lr * 2 / (2 + eps)
    p = {"w": np.array([1.0])}
    new, state = adam_step(p, {"w": np.array([2.0])}, AdamState.zeros_like(p), lr=0.1)
    assert new["w"][0] == pytest.approx(1.0 - 0.1 * 2 / (2 + 1e-8), abs=1e-15)
    assert state.step == 1 and p["w"][0] == 1.0


def test_adam_moves_against_constant_gradient():
    p = {"w": np.array([0.0, 0.0])}
    state = AdamState.zeros_like(p)
    for _ in range(50):
        p, state = adam_step(p, {"w": np.array([3.0, -0.1])}, state)
    assert p["w"][0] < 0 < p["w"][1]


# ------------------------------------------------------------------- training


def small_data(count=10, split="train"):
    return synth_dataset(count, size=16, seed=3, split=split)


def test_zero_epochs_give_empty_log(tmp_path):
    net = build_network(NetworkSpec.reduced(16), dtype=np.float32)
    assert train(net, small_data(), 0) == []
    write_log([], tmp_path / "log.csv")
    assert (tmp_path / "log.csv").read_text().strip() == "epoch,loss,miou"


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        train(build_network(NetworkSpec.reduced(16)), [], 1)


def test_overfit_run_decreases_loss():
    net = build_network(NetworkSpec.reduced(16), seed=1, dtype=np.float32)
    history = train(net, small_data(), 15, lr=3e-3, batch_size=5)
    assert history[-1]["loss"] < history[0]["loss"]
    assert all(math.isnan(r["miou"]) for r in history)


def test_training_is_deterministic():
    data = small_data(6) + small_data(2, split="test")
    runs = []
    for _ in range(2):
        net = build_network(NetworkSpec.reduced(16), seed=7, dtype=np.float32)
        runs.append(train(net, data, 2, seed=7, batch_size=3))
    assert runs[0] == runs[1]


def test_checkpoint_round_trip(tmp_path):
    net = build_network(NetworkSpec.reduced(16, scale_x=0.8), seed=2, dtype=np.float32)
    save_checkpoint(net, tmp_path / "ck")
    back = load_checkpoint(tmp_path / "ck")
    assert back.spec == net.spec
    for k, v in net.parameters().items():
        np.testing.assert_array_equal(back.parameters()[k], v)
    x = np.random.default_rng(0).random((2, 16, 16))
    np.testing.assert_array_equal(back.predict(x), net.predict(x))


def test_missing_checkpoint():
    with pytest.raises(FileNotFoundError):
        load_checkpoint("/nonexistent/checkpoint")


def test_corrupted_adjoint_is_caught():
    from houghradon.nn.gradcheck import run_gradchecks

    results = {r.block: r for r in run_gradchecks(16, seed=1, corrupt_adjoint=True)}
    assert not results["rht_tfht"].passed
    assert not results["end_to_end"].passed
    assert results["conv"].passed and results["fht_hrt"].passed
