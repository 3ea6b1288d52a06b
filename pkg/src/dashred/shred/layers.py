"""Recurrent encoder, shallow decoder and latent adapter in plain NumPy.

All passes are float64 with hand-written reverse-mode gradients; the
analytic gradients are held to central finite differences at 1e-4 relative
error by the test suite, which is the correctness gate for everything
trained downstream.

Parameters live in a flat name -> array dict so checkpoints and optimizer
state can address them uniformly:

    enc.l{i}.wx, enc.l{i}.wh, enc.l{i}.b     LSTM layer i (gate order ifgo)
    dec.w1, dec.b1, dec.w2, dec.b2           decoder MLP
    adp.w1, adp.b1, adp.w2, adp.b2           residual adapter
"""

from __future__ import annotations

import numpy as np

ENCODER_GROUP = "enc"
DECODER_GROUP = "dec"
ADAPTER_GROUP = "adp"


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def init_params(input_dim: int, hidden: int, n_layers: int, decoder_hidden: int,
                rank: int, rng: np.random.Generator) -> dict:
    """Seeded initialization; the adapter starts as the exact identity."""
    params = {}
    s = 1.0 / np.sqrt(hidden)
    for i in range(n_layers):
        d_in = input_dim if i == 0 else hidden
        params[f"enc.l{i}.wx"] = rng.uniform(-s, s, (d_in, 4 * hidden))
        params[f"enc.l{i}.wh"] = rng.uniform(-s, s, (hidden, 4 * hidden))
        b = rng.uniform(-s, s, 4 * hidden)
        b[hidden:2 * hidden] += 1.0  # forget-gate bias offset
        params[f"enc.l{i}.b"] = b
    sd = 1.0 / np.sqrt(hidden)
    params["dec.w1"] = rng.uniform(-sd, sd, (hidden, decoder_hidden))
    params["dec.b1"] = rng.uniform(-sd, sd, decoder_hidden)
    s2 = 1.0 / np.sqrt(decoder_hidden)
    params["dec.w2"] = rng.uniform(-s2, s2, (decoder_hidden, rank))
    params["dec.b2"] = rng.uniform(-s2, s2, rank)
    # residual branch: zero output weights make T(z) = z exactly at init
    params["adp.w1"] = rng.uniform(-s, s, (hidden, hidden))
    params["adp.b1"] = np.zeros(hidden)
    params["adp.w2"] = np.zeros((hidden, hidden))
    params["adp.b2"] = np.zeros(hidden)
    return params


def n_encoder_layers(params: dict) -> int:
    return sum(1 for k in params if k.startswith("enc.l") and k.endswith(".wx"))


# ---------------------------------------------------------------------------
# LSTM stack
# ---------------------------------------------------------------------------

def encoder_forward(params: dict, windows: np.ndarray, want_cache: bool = False):
    """Run the LSTM stack over (batch, k, input_dim) windows.

    Returns the final hidden state of the top layer (batch, hidden) and,
    when requested, the cache needed for the backward pass.
    """
    if windows.ndim == 2:
        windows = windows[None]
    batch, k, _ = windows.shape
    n_layers = n_encoder_layers(params)
    hidden = params["enc.l0.wh"].shape[0]

    x = windows
    caches = []
    for i in range(n_layers):
        wx, wh, b = (params[f"enc.l{i}.wx"], params[f"enc.l{i}.wh"],
                     params[f"enc.l{i}.b"])
        h = np.zeros((batch, hidden))
        c = np.zeros((batch, hidden))
        hs = np.empty((k, batch, hidden))
        gates = np.empty((k, batch, 4 * hidden)) if want_cache else None
        cs = np.empty((k, batch, hidden)) if want_cache else None
        for t in range(k):
            z = x[:, t, :] @ wx + h @ wh + b
            i_g = _sigmoid(z[:, :hidden])
            f_g = _sigmoid(z[:, hidden:2 * hidden])
            g_g = np.tanh(z[:, 2 * hidden:3 * hidden])
            o_g = _sigmoid(z[:, 3 * hidden:])
            c = f_g * c + i_g * g_g
            h = o_g * np.tanh(c)
            hs[t] = h
            if want_cache:
                gates[t] = np.concatenate([i_g, f_g, g_g, o_g], axis=1)
                cs[t] = c
        if want_cache:
            caches.append({"x": x, "hs": hs, "gates": gates, "cs": cs})
        x = hs.transpose(1, 0, 2)  # feed hidden sequence to the next layer
    latent = x[:, -1, :]
    if want_cache:
        return latent, caches
    return latent


def encoder_backward(params: dict, caches: list, dlatent: np.ndarray) -> dict:
    """Backprop through the unrolled stack; returns parameter gradients."""
    n_layers = len(caches)
    hidden = params["enc.l0.wh"].shape[0]
    batch = dlatent.shape[0]
    k = caches[0]["hs"].shape[0]

    grads = {}
    # dh_seq[t] = gradient arriving at layer i's hidden output at step t
    dh_seq = np.zeros((k, batch, hidden))
    dh_seq[-1] = dlatent
    for i in reversed(range(n_layers)):
        cache = caches[i]
        wx, wh = params[f"enc.l{i}.wx"], params[f"enc.l{i}.wh"]
        x, hs, gates, cs = cache["x"], cache["hs"], cache["gates"], cache["cs"]
        d_in = wx.shape[0]

        dwx = np.zeros_like(wx)
        dwh = np.zeros_like(wh)
        db = np.zeros(4 * hidden)
        dx_seq = np.empty((k, batch, d_in))
        dh_rec = np.zeros((batch, hidden))
        dc = np.zeros((batch, hidden))
        for t in reversed(range(k)):
            i_g = gates[t, :, :hidden]
            f_g = gates[t, :, hidden:2 * hidden]
            g_g = gates[t, :, 2 * hidden:3 * hidden]
            o_g = gates[t, :, 3 * hidden:]
            c_t = cs[t]
            c_prev = cs[t - 1] if t > 0 else np.zeros_like(c_t)
            h_prev = hs[t - 1] if t > 0 else np.zeros((batch, hidden))
            tc = np.tanh(c_t)

            dh = dh_seq[t] + dh_rec
            do = dh * tc
            dc = dc + dh * o_g * (1.0 - tc * tc)
            di = dc * g_g
            df = dc * c_prev
            dg = dc * i_g
            dz = np.concatenate([
                di * i_g * (1.0 - i_g),
                df * f_g * (1.0 - f_g),
                dg * (1.0 - g_g * g_g),
                do * o_g * (1.0 - o_g),
            ], axis=1)
            dwx += x[:, t, :].T @ dz
            dwh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx_seq[t] = dz @ wx.T
            dh_rec = dz @ wh.T
            dc = dc * f_g
        grads[f"enc.l{i}.wx"] = dwx
        grads[f"enc.l{i}.wh"] = dwh
        grads[f"enc.l{i}.b"] = db
        dh_seq = dx_seq  # becomes the output gradient of the layer below
    return grads


# ---------------------------------------------------------------------------
# decoder MLP and residual adapter
# ---------------------------------------------------------------------------

def decoder_forward(params: dict, z: np.ndarray, want_cache: bool = False):
    a = z @ params["dec.w1"] + params["dec.b1"]
    h = np.maximum(a, 0.0)
    out = h @ params["dec.w2"] + params["dec.b2"]
    if want_cache:
        return out, (z, a, h)
    return out


def decoder_backward(params: dict, cache, dout: np.ndarray):
    z, a, h = cache
    grads = {
        "dec.w2": h.T @ dout,
        "dec.b2": dout.sum(axis=0),
    }
    dh = dout @ params["dec.w2"].T
    da = dh * (a > 0.0)
    grads["dec.w1"] = z.T @ da
    grads["dec.b1"] = da.sum(axis=0)
    dz = da @ params["dec.w1"].T
    return dz, grads


def adapter_forward(params: dict, z: np.ndarray, want_cache: bool = False):
    a = z @ params["adp.w1"] + params["adp.b1"]
    h = np.maximum(a, 0.0)
    out = z + h @ params["adp.w2"] + params["adp.b2"]
    if want_cache:
        return out, (z, a, h)
    return out


def adapter_backward(params: dict, cache, dout: np.ndarray):
    z, a, h = cache
    grads = {
        "adp.w2": h.T @ dout,
        "adp.b2": dout.sum(axis=0),
    }
    dh = dout @ params["adp.w2"].T
    da = dh * (a > 0.0)
    grads["adp.w1"] = z.T @ da
    grads["adp.b1"] = da.sum(axis=0)
    dz = dout + da @ params["adp.w1"].T
    return dz, grads


def adapter_is_identity(params: dict, tol: float = 1e-12) -> bool:
    return (np.abs(params["adp.w2"]).max() <= tol
            and np.abs(params["adp.b2"]).max() <= tol)


# ---------------------------------------------------------------------------
# optimizer: momentum-free per-parameter scaled steps (RMSProp-style)
# ---------------------------------------------------------------------------

class ScaledStepOptimizer:
    """theta -= lr * g / (sqrt(v) + eps), v an EMA of g^2.  No momentum."""

    def __init__(self, lr: float, decay: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict, grads: dict, names=None) -> None:
        for name in (names if names is not None else grads):
            g = grads[name]
            v = self.v.get(name)
            if v is None:
                v = np.zeros_like(g)
                self.v[name] = v
            v *= self.decay
            v += (1.0 - self.decay) * g * g
            params[name] -= self.lr * g / (np.sqrt(v) + self.eps)
