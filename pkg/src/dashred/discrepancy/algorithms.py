"""Latent-space regression problems for missing-physics recovery.

Both procedures compare how candidate terms move the encoder's latent
state against how the deployed sensor stream actually moves it:

* The *search* procedure advances the reconstructed state one Euler step
  with the simulation tendency alone and with each candidate added, and
  regresses the latent shift of the real trajectory onto the candidates'
  latent shifts.  Everything is differenced against the unperturbed
  advance, so simulation physics cancels and only the discrepancy remains.
* The *advancing* procedure targets raw latent temporal differences of
  consecutive sensor windows (derivative-free) and perturbs candidates
  only inside small neighborhoods of the sensor locations, which is far
  cheaper on large grids.  Its target contains the full dynamics, so
  simulation terms that overlap the library can legitimately enter the
  fit; supports should be read as "includes", not "equals".

A full state enters the encoder by splicing its sensor samples into the
final row of the observed lag window (``encode_state``); a compressed
alternative that simply projects onto the basis is available behind
``proxy="pod"``.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..sensing import SensorLayout, SensorSeries, window_ending_at
from ..shred import layers as nn
from ..shred.model import ShredModel
from .library import CandidateLibrary
from .regression import RegressionProblem


def encode_state(model: ShredModel, series: SensorSeries, t: int,
                 states: np.ndarray, use_adapter: bool = False,
                 proxy: str = "encoder") -> np.ndarray:
    """Latent proxies for full states anchored at series index t.

    ``states`` is (batch, state_dim); each state is sampled at the model's
    sensor locations and becomes the final row of the lag window whose
    first k-1 rows are the observed readings before t.
    """
    states = np.atleast_2d(states)
    if proxy == "pod":
        return states @ model.pod.modes
    if proxy != "encoder":
        raise ValueError(f"unknown latent proxy {proxy!r}")
    k = model.lag
    if t < k - 1 or t >= len(series):
        raise ValueError(f"no full lag window ends at index {t}")
    history = series.readings[t - k + 1:t]            # (k-1, s)
    batch = states.shape[0]
    wins = np.broadcast_to(history, (batch,) + history.shape).copy()
    wins = np.concatenate(
        [wins, states[:, model.layout.indices][:, None, :]], axis=1)
    z = model.encode(wins)
    if use_adapter:
        z = nn.adapter_forward(model.params, z)
    return z


def _resolve_states(model, series, t_indices, states, extra=()):
    """Reconstructions (or supplied exact states) for the needed indices."""
    needed = sorted({int(t) for t in t_indices} | set(extra))
    if states is not None:
        return {t: np.asarray(states[t], dtype=float) for t in needed}
    wins = np.stack([window_ending_at(series, model.lag, t) for t in needed])
    recon = model.reconstruct(wins)
    return dict(zip(needed, recon))


# Candidate probes larger than this fraction of the state's rms are shrunk
# before encoding and the response rescaled back: the encoder's gates
# saturate on huge inputs, and a saturated column is no longer the
# first-order response the regression needs.
PROBE_CAP = 0.2


def _probe_shrink(delta: np.ndarray, reference: np.ndarray) -> float:
    num = float(np.sqrt(np.mean(delta * delta)))
    den = max(float(np.sqrt(np.mean(reference * reference))), 1e-30)
    ratio = num / den
    if ratio <= PROBE_CAP or num == 0.0:
        return 1.0
    return PROBE_CAP / ratio


def algorithm1_search(model: ShredModel, sim_rhs, series: SensorSeries,
                      library: CandidateLibrary, dt: float, t_indices,
                      grid, params, states: np.ndarray | None = None,
                      use_adapter_on_h: bool = False,
                      proxy: str = "encoder",
                      center: bool = True) -> RegressionProblem:
    """Perturbed-rollout regression problem ("compressed search").

    Per timestep t: advance the state at t-1 one Euler step with the sim
    tendency N alone (the base) and with each candidate theta_j added;
    the target row block is latent(state at t) - latent(base), the j-th
    column block is latent(base + theta_j dt) - latent(base).

    ``sim_rhs(state) -> tendency`` must evaluate the simulation model on
    flat states.  Passing ``states`` (n_times, state_dim) substitutes
    exact states for reconstructions.
    """
    t_indices = [int(t) for t in t_indices]
    if min(t_indices) < model.lag or max(t_indices) >= len(series):
        raise ValueError("time indices must lie in [lag, len(series))")
    have = _resolve_states(model, series, t_indices,
                           states, extra=[t - 1 for t in t_indices])
    g_rows, h_rows, row_times = [], [], []
    for t in t_indices:
        u_t, u_prev = have[t], have[t - 1]
        base = u_prev + sim_rhs(u_prev) * dt
        theta = library.evaluate(u_prev, grid, params)      # (n_terms, n)
        shrinks = np.array([_probe_shrink(theta[j] * dt, u_prev)
                            for j in range(len(library))])
        candidates = base[None, :] + theta * (dt * shrinks[:, None])
        stack = np.vstack([u_t[None, :], base[None, :], candidates])
        if not np.all(np.isfinite(stack)):
            warnings.warn(f"dropping t={t}: perturbed rollout is non-finite")
            continue
        z = encode_state(model, series, t, stack, proxy=proxy)
        if use_adapter_on_h:
            z = nn.adapter_forward(model.params, z)
        g_rows.append(z[0] - z[1])
        h_rows.append((z[2:] - z[1][None, :]).T / shrinks[None, :])
        row_times.extend([t] * z.shape[1])
    if not g_rows:
        raise ValueError("no usable timesteps for the regression problem")
    return _assemble_problem(g_rows, h_rows, row_times, library, center)


def _assemble_problem(g_rows, h_rows, row_times, library, center):
    target = np.concatenate(g_rows)
    columns = np.vstack(h_rows)
    if center and len(g_rows) >= 8:
        # remove per-latent-dimension time means: a reconstruction bias
        # that is static over the sampled window cancels from target and
        # columns alike, leaving only the time-varying physical signal
        shape = (len(g_rows), -1)
        target = (target.reshape(shape)
                  - target.reshape(shape).mean(axis=0)).ravel()
        cols3 = columns.reshape(len(g_rows), -1, columns.shape[1])
        columns = (cols3 - cols3.mean(axis=0)).reshape(-1, columns.shape[1])
    return RegressionProblem(
        target=target, columns=columns, term_names=library.names,
        row_times=np.asarray(row_times), system=library.system)


def sensor_neighborhood_counts(layout: SensorLayout, dims, radius: float):
    """Top-hat neighborhood count field around the sensor grid locations.

    Overlapping neighborhoods add, matching a plain sum over sensors.
    """
    grid_size = int(np.prod(dims, dtype=int))
    locations = layout.indices % grid_size
    count = np.zeros(grid_size)
    if len(dims) == 1:
        (n,) = dims
        offs = np.arange(n)
        for loc in locations:
            d = np.abs(offs - loc)
            count += (np.minimum(d, n - d) <= radius)
    elif len(dims) == 2:
        nx, ny = dims
        ix, iy = np.divmod(locations, ny)
        gx = np.arange(nx)[:, None]
        gy = np.arange(ny)[None, :]
        for sx, sy in zip(ix, iy):
            dx = np.minimum(np.abs(gx - sx), nx - np.abs(gx - sx))
            dy = np.minimum(np.abs(gy - sy), ny - np.abs(gy - sy))
            count += (dx * dx + dy * dy <= radius * radius).astype(float).ravel()
    else:
        raise ValueError("neighborhoods support 1D and 2D grids only")
    return count


def algorithm2_advancing(model: ShredModel, series: SensorSeries,
                         library: CandidateLibrary, layout: SensorLayout,
                         dt: float, t_indices, grid, params,
                         radius: float = 2.0,
                         states: np.ndarray | None = None,
                         literal_sum: bool = False,
                         use_adapter_on_h: bool = False,
                         proxy: str = "encoder",
                         center: bool = True) -> RegressionProblem:
    """Temporal-difference regression problem ("compressed advancing").

    The target is the latent difference of consecutive sensor windows
    (their sum behind ``literal_sum``); candidate responses come from
    perturbing the reconstructed state only within ``radius`` grid cells
    of the sensors.
    """
    t_indices = [int(t) for t in t_indices]
    if min(t_indices) < model.lag - 1 or max(t_indices) + 1 >= len(series):
        raise ValueError("time indices must lie in [lag-1, len(series)-1)")
    have = _resolve_states(model, series, t_indices, states)
    counts = sensor_neighborhood_counts(layout, library_dims(grid), radius)
    nf = _field_count(library.system)
    mask_full = np.tile(counts, nf)

    active = mask_full > 0
    g_rows, h_rows, row_times = [], [], []
    for t in t_indices:
        w_t = window_ending_at(series, model.lag, t)
        w_t1 = window_ending_at(series, model.lag, t + 1)
        z_pair = model.latent_adapted(np.stack([w_t, w_t1]))
        g = z_pair[1] + z_pair[0] if literal_sum else z_pair[1] - z_pair[0]
        u_t = have[t]
        theta = library.evaluate(u_t, grid, params) * mask_full[None, :]
        shrinks = np.array([
            _probe_shrink(theta[j][active] * dt, u_t[active])
            for j in range(len(library))])
        stack = np.vstack([u_t[None, :],
                           u_t[None, :] + theta * (dt * shrinks[:, None])])
        if not np.all(np.isfinite(stack)):
            warnings.warn(f"dropping t={t}: perturbed state is non-finite")
            continue
        z = encode_state(model, series, t, stack, proxy=proxy)
        if use_adapter_on_h:
            z = nn.adapter_forward(model.params, z)
        g_rows.append(g)
        h_rows.append((z[1:] - z[0][None, :]).T / shrinks[None, :])
        row_times.extend([t] * g.size)
    if not g_rows:
        raise ValueError("no usable timesteps for the regression problem")
    return _assemble_problem(g_rows, h_rows, row_times, library, center)


def library_dims(grid):
    return grid.shape


def _field_count(system):
    from ..pde.params import FIELD_COUNT

    return FIELD_COUNT[system]
