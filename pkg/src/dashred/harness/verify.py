"""Self-contained oracle suites behind the ``verify`` CLI subcommand.

Each suite returns (passed, lines); suites are fast enough to run before
any long experiment as a sanity gate.
"""

from __future__ import annotations

import numpy as np

from .. import theory
from ..numerics import RealField2D, fft2
from ..pde import Grid0D, SystemId, integrate, pendulum_energy
from ..pde.params import PendulumParams
from ..shred import layers as nn
from ..shred.model import backprop_loss


def verify_gradcheck(h: float = 1e-5, tol: float = 1e-4):
    """Analytic vs central-difference gradients on a width-8 model."""
    rng = np.random.Generator(np.random.PCG64(123))
    params = nn.init_params(3, 8, 2, 8, 4, rng)
    params["adp.w2"] = rng.uniform(-0.3, 0.3, params["adp.w2"].shape)
    params["adp.b2"] = rng.uniform(-0.3, 0.3, params["adp.b2"].shape)
    windows = rng.standard_normal((4, 6, 3))
    targets = rng.standard_normal((4, 4))
    _, grads = backprop_loss(params, windows, targets)
    worst = 0.0
    for name, g in grads.items():
        flat = params[name].reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = backprop_loss(params, windows, targets)[0]
            flat[i] = orig - h
            lm = backprop_loss(params, windows, targets)[0]
            flat[i] = orig
            fd = (lp - lm) / (2.0 * h)
            worst = max(worst, abs(fd - gflat[i])
                        / max(abs(fd), abs(gflat[i]), 1e-6))
    return worst <= tol, [f"max relative gradient error: {worst:.3e} "
                          f"(tolerance {tol:g})"]


def verify_sbvp(tol: float = 1e-6):
    """Noiseless heat-equation fixture: amplitudes and rates to 1e-6."""
    lines = []
    ok = True
    for shift, label in ((0.0, "matched rates"), (0.1, "shifted rates")):
        readings, modes, times, a_true, lam_true = \
            theory.make_heat_sbvp_fixture(rate_shift=shift)
        a, lam, info = theory.sbvp_identify(readings, modes, times)
        ea = np.max(np.abs(a - a_true) / np.abs(a_true))
        el = np.max(np.abs(lam - lam_true) / np.abs(lam_true))
        ok = ok and ea <= tol and el <= tol and not info["non_exponential_modes"]
        lines.append(f"{label}: amplitude err {ea:.2e}, rate err {el:.2e}")
    return ok, lines


def verify_phs():
    """Structure checks, perturbation admissibility and energy balance."""
    lines = []
    ok = True
    fixtures = {
        "pendulum": theory.pendulum_phs(),
        "mass_spring_damper": theory.mass_spring_damper_phs(),
        "rlc": theory.rlc_phs(),
    }
    for name, sys_ in fixtures.items():
        rep = theory.phs_validate(sys_)
        ok = ok and rep.passed
        lines.append(f"{name}: validate {'pass' if rep.passed else 'FAIL'}")
        res = theory.phs_perturb(sys_, np.zeros((2, 2)),
                                 np.diag([0.0, 0.05]), np.zeros((2, 1)))
        revalidated = res.accepted and theory.phs_validate(res.system).passed
        ok = ok and revalidated
        lines.append(f"{name}: damped perturbation accepted and revalidates "
                     f"{'pass' if revalidated else 'FAIL'}")
        bad = theory.phs_perturb(sys_, np.zeros((2, 2)),
                                 np.diag([-1.0, -1.0]), np.zeros((2, 1)))
        ok = ok and not bad.accepted
    # energy balance on an integrated damped pendulum
    p = PendulumParams()
    sys_ = theory.pendulum_phs(d=p.d)
    traj = integrate(SystemId("pendulum", "real_a"), np.array([1.2, 0.0]),
                     Grid0D(), p, dt=1e-3, n_steps=10000, save_every=1)
    resid = theory.phs_energy_balance(sys_, traj.times, traj.snapshots)
    scale = np.abs(np.gradient([sys_.hamiltonian(x) for x in traj.snapshots],
                               traj.times)).max()
    rel = resid / scale
    ok = ok and rel <= 1e-5
    lines.append(f"pendulum energy-balance residual: {rel:.2e} relative")
    return ok, lines


def verify_fft(tol: float = 1e-10):
    """Transform vs a direct quadratic-cost DFT, plus Parseval."""
    rng = np.random.Generator(np.random.PCG64(7))
    data = rng.standard_normal((16, 16))
    spec = fft2(RealField2D(16, 16, data)).data
    n = 16
    j = np.arange(n)
    direct = np.zeros((n, n), dtype=complex)
    for kx in range(n):
        for ky in range(n):
            phase = np.exp(-2j * np.pi * (kx * j[:, None] + ky * j[None, :]) / n)
            direct[kx, ky] = np.sum(data * phase)
    err = np.abs(spec - direct).max()
    parseval = abs(np.sum(np.abs(spec) ** 2) / n**2 - np.sum(data**2))
    rel_p = parseval / np.sum(data**2)
    ok = err <= tol and rel_p <= tol
    return ok, [f"max abs error vs direct DFT: {err:.2e}",
                f"Parseval relative defect: {rel_p:.2e}"]


SUITES = {
    "gradcheck": verify_gradcheck,
    "sbvp": verify_sbvp,
    "phs": verify_phs,
    "fft": verify_fft,
}


def run_suite(name: str):
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown verify suite {name!r}; "
                         f"choose from {', '.join(SUITES)}") from None
    return fn()
