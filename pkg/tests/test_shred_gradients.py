"""Analytic gradients vs central finite differences.

This is the gate for everything trained downstream: every parameter of a
small encoder/adapter/decoder stack must match central differences
(h = 1e-5) to 1e-4 relative error, for both the training loss and the
sensor-restricted assimilation loss.
"""

import numpy as np
import pytest

from dashred.shred import layers as nn
from dashred.shred.model import _sensor_loss_and_grads, backprop_loss

H_FD = 1e-5
REL_TOL = 1e-4


def _small_setup(seed=0, width=8, batch=5, k=7, n_sensors=3, rank=4):
    rng = np.random.Generator(np.random.PCG64(seed))
    params = nn.init_params(n_sensors, width, 2, width, rank, rng)
    # exercise the adapter branch too: identity init would zero some grads
    params["adp.w2"] = rng.uniform(-0.3, 0.3, params["adp.w2"].shape)
    params["adp.b2"] = rng.uniform(-0.3, 0.3, params["adp.b2"].shape)
    windows = rng.standard_normal((batch, k, n_sensors))
    return rng, params, windows


def _max_rel_error(params, loss_fn, grads):
    # 1e-6 floor: below it the central difference of an O(1) loss is pure
    # f64 roundoff (~1e-16 / 2h = 5e-12), so a ratio would compare noise.
    worst = 0.0
    for name, g in grads.items():
        flat = params[name].reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + H_FD
            lp = loss_fn()
            flat[i] = orig - H_FD
            lm = loss_fn()
            flat[i] = orig
            fd = (lp - lm) / (2.0 * H_FD)
            denom = max(abs(fd), abs(gflat[i]), 1e-6)
            worst = max(worst, abs(fd - gflat[i]) / denom)
    return worst


def test_training_loss_gradients_match_finite_differences():
    rng, params, windows = _small_setup()
    targets = rng.standard_normal((windows.shape[0], 4))
    loss, grads = backprop_loss(params, windows, targets)
    assert set(grads) == set(params)
    worst = _max_rel_error(params, lambda: backprop_loss(params, windows, targets)[0],
                           grads)
    assert worst <= REL_TOL, f"max relative gradient error {worst:.3e}"


def test_assimilation_loss_gradients_match_finite_differences():
    rng, params, windows = _small_setup(seed=1)
    n_state, rank, n_sensors = 20, 4, 3
    modes = np.linalg.qr(rng.standard_normal((n_state, rank)))[0]
    modes_s = modes[:n_sensors]
    readings = rng.standard_normal((windows.shape[0], n_sensors))
    coeff_mean = rng.standard_normal(rank)

    def loss_fn():
        z, cache = nn.encoder_forward(params, windows, want_cache=True)
        return _sensor_loss_and_grads(params, z, readings, modes_s,
                                      coeff_mean, 1.7, enc_cache=cache)[0]

    z, cache = nn.encoder_forward(params, windows, want_cache=True)
    loss, grads = _sensor_loss_and_grads(params, z, readings, modes_s,
                                         coeff_mean, 1.7, enc_cache=cache)
    assert set(grads) == set(params)
    worst = _max_rel_error(params, loss_fn, grads)
    assert worst <= REL_TOL, f"max relative gradient error {worst:.3e}"


def test_zero_error_batch_gives_zero_loss_and_gradients():
    rng, params, windows = _small_setup(seed=2)
    z = nn.encoder_forward(params, windows)
    za = nn.adapter_forward(params, z)
    targets = nn.decoder_forward(params, za)
    loss, grads = backprop_loss(params, windows, targets)
    assert loss == 0.0
    for g in grads.values():
        assert np.all(g == 0.0)


def test_quadrupled_loss_when_targets_double_around_zero_prediction():
    rng, params, windows = _small_setup(seed=3)
    # zero decoder output regardless of input
    params["dec.w2"][:] = 0.0
    params["dec.b2"][:] = 0.0
    targets = rng.standard_normal((windows.shape[0], 4))
    l1, _ = backprop_loss(params, windows, targets)
    l2, _ = backprop_loss(params, windows, 2.0 * targets)
    assert l2 == pytest.approx(4.0 * l1, rel=1e-12)


def test_nonfinite_loss_aborts():
    rng, params, windows = _small_setup(seed=4)
    bad = windows.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(FloatingPointError):
        backprop_loss(params, bad, np.zeros((windows.shape[0], 4)))
