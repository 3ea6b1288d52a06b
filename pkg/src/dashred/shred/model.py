"""Training and adaptation of the sensor-to-state reconstruction model.

The model maps a lag window of sensor readings to full-state estimates:

    window -> [standardize] -> LSTM encoder -> adapter -> decoder
           -> compressed coefficients -> basis reconstruction

Training happens on simulation data with the adapter frozen at identity.
Adaptation ("assimilation") then fits the adapter -- and optionally, at a
reduced rate, the encoder -- so that reconstructions match a deployed
sensor stream at the sensor locations only; decoder and basis stay frozen
on the assumption that the simulation-trained basis still spans the real
fields.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from ..numerics import PodBasis, pod_compress
from ..sensing import SensorLayout, SensorSeries, build_windows
from . import layers as nn


class TrainingDiverged(RuntimeError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch: int = 64
    lr: float = 1e-3
    val_frac: float = 0.2
    patience: int = 25
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch, self.patience) <= 0 or self.lr <= 0:
            raise ValueError("epochs, batch, patience and lr must be positive")
        if not 0.0 < self.val_frac <= 0.5:
            raise ValueError("val_frac must lie in (0, 0.5]")


@dataclass(frozen=True)
class AssimilateConfig:
    epochs: int = 600
    batch: int = 64
    lr: float = 5e-4
    patience: int = 60
    seed: int = 0
    unfreeze_encoder: bool = False
    encoder_lr_scale: float = 0.1

    def __post_init__(self):
        if min(self.epochs, self.batch, self.patience) <= 0 or self.lr <= 0:
            raise ValueError("epochs, batch, patience and lr must be positive")


@dataclass
class ShredModel:
    params: dict
    pod: PodBasis
    lag: int
    layout: SensorLayout
    sensor_mean: np.ndarray
    sensor_std: np.ndarray
    coeff_mean: np.ndarray
    coeff_scale: float
    hidden: int
    n_layers: int
    decoder_hidden: int
    rank: int
    history: dict = field(default_factory=dict)

    # -- forward paths ----------------------------------------------------

    def standardize(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.sensor_mean) / self.sensor_std

    def encode(self, windows: np.ndarray) -> np.ndarray:
        """Latent vector(s) for raw lag window(s) of shape (k, s) or (b, k, s)."""
        single = windows.ndim == 2
        batch = windows[None] if single else windows
        z = nn.encoder_forward(self.params, self.standardize(batch))
        return z[0] if single else z

    def latent_adapted(self, windows: np.ndarray) -> np.ndarray:
        single = windows.ndim == 2
        z = self.encode(windows[None] if single else windows)
        za = nn.adapter_forward(self.params, z)
        return za[0] if single else za

    def decode_coeffs(self, z: np.ndarray) -> np.ndarray:
        out = nn.decoder_forward(self.params, np.atleast_2d(z))
        return out * self.coeff_scale + self.coeff_mean

    def reconstruct(self, windows: np.ndarray) -> np.ndarray:
        """Full-state estimate(s) from raw lag window(s)."""
        single = windows.ndim == 2
        z = self.encode(windows if not single else windows[None])
        za = nn.adapter_forward(self.params, z)
        coeffs = self.decode_coeffs(za)
        states = coeffs @ self.pod.modes.T
        return states[0] if single else states

    def sensor_prediction(self, windows: np.ndarray) -> np.ndarray:
        """Reconstruction sampled at this model's own sensor locations."""
        single = windows.ndim == 2
        z = self.encode(windows if not single else windows[None])
        za = nn.adapter_forward(self.params, z)
        coeffs = self.decode_coeffs(za)
        pred = coeffs @ self.pod.modes[self.layout.indices, :].T
        return pred[0] if single else pred

    def copy(self) -> "ShredModel":
        return ShredModel(
            params={k: v.copy() for k, v in self.params.items()},
            pod=self.pod, lag=self.lag, layout=self.layout,
            sensor_mean=self.sensor_mean.copy(),
            sensor_std=self.sensor_std.copy(),
            coeff_mean=self.coeff_mean.copy(), coeff_scale=self.coeff_scale,
            hidden=self.hidden, n_layers=self.n_layers,
            decoder_hidden=self.decoder_hidden, rank=self.rank,
            history=copy.deepcopy(self.history))


# ---------------------------------------------------------------------------
# loss and gradients
# ---------------------------------------------------------------------------

def backprop_loss(params: dict, windows_std: np.ndarray, targets: np.ndarray):
    """Mean-squared loss over a batch and gradients for every parameter.

    The forward chain is decoder(adapter(encoder(window))); gradients are
    accumulated in reverse through the unrolled recurrence.
    """
    if windows_std.shape[0] == 0:
        raise ValueError("empty batch")
    z, enc_cache = nn.encoder_forward(params, windows_std, want_cache=True)
    za, adp_cache = nn.adapter_forward(params, z, want_cache=True)
    pred, dec_cache = nn.decoder_forward(params, za, want_cache=True)
    err = pred - targets
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite training loss")
    dpred = (2.0 / err.size) * err
    dza, grads = nn.decoder_backward(params, dec_cache, dpred)
    dz, adp_grads = nn.adapter_backward(params, adp_cache, dza)
    grads.update(adp_grads)
    grads.update(nn.encoder_backward(params, enc_cache, dz))
    return loss, grads


def _sensor_loss_and_grads(params, z, readings, modes_s, coeff_mean,
                           coeff_scale, enc_cache=None):
    """Sensor-restricted squared error; gradients stop at the latent unless
    an encoder cache is supplied."""
    za, adp_cache = nn.adapter_forward(params, z, want_cache=True)
    out, dec_cache = nn.decoder_forward(params, za, want_cache=True)
    coeffs = out * coeff_scale + coeff_mean
    err = coeffs @ modes_s.T - readings
    loss = float(np.mean(err * err))
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite assimilation loss")
    dout = ((2.0 / err.size) * err @ modes_s) * coeff_scale
    dza, grads = nn.decoder_backward(params, dec_cache, dout)
    dz, adp_grads = nn.adapter_backward(params, adp_cache, dza)
    grads.update(adp_grads)
    if enc_cache is not None:
        grads.update(nn.encoder_backward(params, enc_cache, dz))
    return loss, grads


# ---------------------------------------------------------------------------
# simulation-phase training
# ---------------------------------------------------------------------------

def _block_split(n: int, n_val: int, lag: int):
    """Held-out validation blocks spread across the window index range.

    Contiguous blocks avoid the leakage a random split would suffer from
    overlapping lag windows; spreading several of them (rather than
    holding out only the tail) keeps validation representative when the
    dynamics drift on timescales comparable to the horizon.  Training
    windows within ``lag`` of a validation window are dropped so no
    training window shares sensor rows with validation.  Short datasets
    fall back to a single tail block.
    """
    # cap the block count so the lag margins cost at most ~15% of the data
    n_blocks = max(1, min(4, int(0.15 * n / (2 * lag))))
    block_len = max(1, n_val // n_blocks)
    starts = np.linspace(0, n - block_len, n_blocks).astype(int) \
        if n_blocks > 1 else np.array([n - block_len])
    val_mask = np.zeros(n, dtype=bool)
    for s in starts:
        val_mask[s:s + block_len] = True
    shares_rows = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(val_mask):
        shares_rows[max(0, i - lag + 1):min(n, i + lag)] = True
    return np.flatnonzero(~shares_rows), np.flatnonzero(val_mask)


def train_sim(series: SensorSeries, trajectory, rank: int,
              config: TrainConfig, lag: int, layout: SensorLayout,
              hidden: int = 64, n_layers: int = 2,
              decoder_hidden: int = 350) -> ShredModel:
    """Fit encoder and decoder on simulation data; adapter stays identity."""
    snaps = trajectory.snapshots
    if len(series) != trajectory.n_times:
        raise ValueError("sensor series and trajectory are not aligned")
    pod = pod_compress(snaps.T, rank)

    windows, target_idx = build_windows(series, lag)
    coeffs = snaps[target_idx] @ pod.modes           # (m, r)
    coeff_mean = coeffs.mean(axis=0)
    coeff_scale = max(float((coeffs - coeff_mean).std()), 1e-12)
    targets = (coeffs - coeff_mean) / coeff_scale

    sensor_mean = series.readings.mean(axis=0)
    sensor_std = np.maximum(series.readings.std(axis=0), 1e-12)
    windows_std = (windows - sensor_mean) / sensor_std

    n = windows.shape[0]
    n_val = max(1, int(round(config.val_frac * n)))
    if n_val >= n:
        raise ValueError("not enough windows for the validation split")
    tr_idx, val_idx = _block_split(n, n_val, lag)
    w_tr, w_val = windows_std[tr_idx], windows_std[val_idx]
    t_tr, t_val = targets[tr_idx], targets[val_idx]

    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = nn.init_params(windows.shape[2], hidden, n_layers,
                            decoder_hidden, rank, rng)
    trainable = [k for k in params
                 if k.startswith(("enc.", "dec."))]
    opt = nn.ScaledStepOptimizer(config.lr)

    def val_loss():
        z = nn.encoder_forward(params, w_val)
        za = nn.adapter_forward(params, z)
        pred = nn.decoder_forward(params, za)
        return float(np.mean((pred - t_val) ** 2))

    history = {"train_loss": [], "val_loss": [val_loss()]}
    best = {k: v.copy() for k, v in params.items()}
    best_val = history["val_loss"][0]
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(w_tr.shape[0])
        losses = []
        for start in range(0, order.size, config.batch):
            sel = order[start:start + config.batch]
            loss, grads = backprop_loss(params, w_tr[sel], t_tr[sel])
            opt.step(params, grads, names=trainable)
            losses.append(loss)
        history["train_loss"].append(float(np.mean(losses)))
        v = val_loss()
        history["val_loss"].append(v)
        # a real divergence also climbs back above the starting loss;
        # optimizer jitter at a converged floor never does
        if epoch >= 5 and v > 10.0 * history["val_loss"][epoch - 5 + 1] \
                and v > history["val_loss"][0]:
            raise TrainingDiverged(
                f"validation loss rose 10x within 5 epochs (epoch {epoch})",
                history)
        if v < best_val:
            best_val = v
            best = {k: p.copy() for k, p in params.items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    return ShredModel(
        params=best, pod=pod, lag=lag, layout=layout,
        sensor_mean=sensor_mean, sensor_std=sensor_std,
        coeff_mean=coeff_mean, coeff_scale=coeff_scale,
        hidden=hidden, n_layers=n_layers, decoder_hidden=decoder_hidden,
        rank=rank, history={"train": history})


# ---------------------------------------------------------------------------
# assimilation: adapt the latent map to a deployed sensor stream
# ---------------------------------------------------------------------------

def assimilate(model: ShredModel, real_series: SensorSeries,
               config: AssimilateConfig) -> ShredModel:
    """Fit the adapter so reconstructions match the deployed sensors.

    Only adapter weights change by default; ``unfreeze_encoder`` also
    updates the encoder at ``encoder_lr_scale`` times the learning rate.
    Decoder and basis are always frozen.
    """
    if len(real_series) < model.lag + 10:
        raise ValueError("real series too short to assimilate "
                         f"(need at least lag+10 = {model.lag + 10} steps)")
    out = model.copy()
    params = out.params
    windows, target_idx = build_windows(real_series, model.lag)
    readings = real_series.readings[target_idx]
    windows_std = out.standardize(windows)
    modes_s = model.pod.modes[model.layout.indices, :]

    frozen_encoder = not config.unfreeze_encoder
    if frozen_encoder:
        z_all = nn.encoder_forward(params, windows_std)

    adp_names = [k for k in params if k.startswith("adp.")]
    enc_names = [k for k in params if k.startswith("enc.")]
    opt = nn.ScaledStepOptimizer(config.lr)
    opt_enc = nn.ScaledStepOptimizer(config.lr * config.encoder_lr_scale)

    def full_loss():
        z = (z_all if frozen_encoder
             else nn.encoder_forward(params, windows_std))
        za = nn.adapter_forward(params, z)
        coeffs = nn.decoder_forward(params, za) * out.coeff_scale + out.coeff_mean
        err = coeffs @ modes_s.T - readings
        return float(np.mean(err * err))

    rng = np.random.Generator(np.random.PCG64(config.seed))
    history = {"loss": [full_loss()]}
    best_loss = history["loss"][0]
    best = {k: params[k].copy() for k in adp_names + enc_names}
    stale = 0
    n = windows.shape[0]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch):
            sel = order[start:start + config.batch]
            if frozen_encoder:
                loss, grads = _sensor_loss_and_grads(
                    params, z_all[sel], readings[sel], modes_s,
                    out.coeff_mean, out.coeff_scale)
            else:
                z, enc_cache = nn.encoder_forward(params, windows_std[sel],
                                                  want_cache=True)
                loss, grads = _sensor_loss_and_grads(
                    params, z, readings[sel], modes_s,
                    out.coeff_mean, out.coeff_scale, enc_cache=enc_cache)
                opt_enc.step(params, grads, names=enc_names)
            opt.step(params, grads, names=adp_names)
        v = full_loss()
        history["loss"].append(v)
        if epoch >= 5 and v > 10.0 * history["loss"][epoch - 5 + 1] \
                and v > history["loss"][0]:
            raise TrainingDiverged(
                f"assimilation loss rose 10x within 5 epochs (epoch {epoch})",
                history)
        if v < best_loss:
            best_loss = v
            best = {k: params[k].copy() for k in adp_names + enc_names}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    params.update(best)

    history["pre_sensor_rmse"] = float(np.sqrt(history["loss"][0]))
    history["final_sensor_rmse"] = float(np.sqrt(full_loss()))
    out.history = dict(model.history)
    out.history["assimilate"] = history
    return out
