"""Right-hand sides for the five paired systems.

Each system comes in a "sim" variant (the presumed model) and one or two
"real" variants that differ by an additive term L'.  The rhs functions
return the real-variant tendency as sim tendency plus L' evaluated on the
same state, so rhs(real) - rhs(sim) is the closed-form discrepancy to
machine precision by construction.

Quadratic advection-type products (|grad u|^2, u.grad w) are dealiased by
the 2/3 rule; the pointwise reaction chemistry of the Gray-Scott and
detonation models is evaluated without dealiasing.
"""

from __future__ import annotations

import numpy as np

from .grid import Grid1D, Grid2D
from .params import (GrayScottParams, Ks2dParams, KolmogorovParams,
                     PendulumParams, RdeParams)

ARRHENIUS_CLAMP = 30.0


def _check_variant(variant, allowed):
    if variant not in allowed:
        raise ValueError(f"variant {variant!r} not in {allowed}")


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"{name} is non-finite (upstream blow-up?)")


# ---------------------------------------------------------------------------
# 2D Kuramoto-Sivashinsky, u_t = -(1/2 |grad u|^2 + lap u + nu lap^2 u)
# ---------------------------------------------------------------------------

def ks2d_sim_tendency(u: np.ndarray, grid: Grid2D, p: Ks2dParams) -> np.ndarray:
    gx, gy = grid.ddx(u), grid.ddy(u)
    grad_sq = grid.dealias(gx * gx + gy * gy)
    return -(0.5 * grad_sq + grid.laplacian(u) + p.nu * grid.bilaplacian(u))


def ks2d_lprime(u: np.ndarray, grid: Grid2D, p: Ks2dParams) -> np.ndarray:
    """Discrepancy of the real variant: -(v.grad)u + gamma*u."""
    return -(p.vx * grid.ddx(u) + p.vy * grid.ddy(u)) + p.gamma * u


def rhs_ks2d(u, grid: Grid2D, p: Ks2dParams, variant: str = "sim") -> np.ndarray:
    _check_variant(variant, ("sim", "real_a"))
    _check_finite("u", u)
    tend = ks2d_sim_tendency(u, grid, p)
    if variant == "real_a":
        tend = tend + ks2d_lprime(u, grid, p)
    return tend


# ---------------------------------------------------------------------------
# 2D Kolmogorov flow in vorticity form, forced by mu*sin(y)
# ---------------------------------------------------------------------------

def kolmogorov_velocity(w: np.ndarray, grid: Grid2D):
    """Velocity (ux, uy) from vorticity via the streamfunction.

    lap psi = -w with the zero-mean gauge psi_hat(0,0) = 0, then
    u = (d psi/dy, -d psi/dx), which is divergence-free by construction.
    """
    w_hat = np.fft.fft2(w)
    k2 = grid.k_squared.copy()
    k2[0, 0] = 1.0  # gauge: the (0,0) streamfunction mode is set to zero
    psi_hat = w_hat / k2
    psi_hat[0, 0] = 0.0
    ux = np.fft.ifft2(1j * grid.ky * psi_hat).real
    uy = np.fft.ifft2(-1j * grid.kx * psi_hat).real
    return ux, uy


def kolmogorov_forcing(grid: Grid2D, p: KolmogorovParams) -> np.ndarray:
    return p.mu * np.sin(grid.y)[None, :] * np.ones((grid.nx, 1))


def kolmogorov_sim_tendency(w, grid: Grid2D, p: KolmogorovParams) -> np.ndarray:
    ux, uy = kolmogorov_velocity(w, grid)
    adv = grid.dealias(ux * grid.ddx(w) + uy * grid.ddy(w))
    return -adv + p.nu * grid.laplacian(w) + kolmogorov_forcing(grid, p)


def kolmogorov_lprime(w, grid: Grid2D, p: KolmogorovParams) -> np.ndarray:
    return -p.alpha * w


def rhs_kolmogorov(w, grid: Grid2D, p: KolmogorovParams, variant: str = "sim"):
    _check_variant(variant, ("sim", "real_a"))
    _check_finite("omega", w)
    tend = kolmogorov_sim_tendency(w, grid, p)
    if variant == "real_a":
        tend = tend + kolmogorov_lprime(w, grid, p)
    return tend


# ---------------------------------------------------------------------------
# Gray-Scott reaction-diffusion (two species)
# ---------------------------------------------------------------------------

GS_SAFE_RANGE = (-0.5, 1.5)


def grayscott_sim_tendency(u, v, grid: Grid2D, p: GrayScottParams):
    uv2 = u * v * v
    du = p.du * grid.laplacian(u) - uv2 + p.feed * (1.0 - u)
    dv = p.dv * grid.laplacian(v) + uv2 - (p.feed + p.kill) * v
    return du, dv


def grayscott_lprime(u, v, grid: Grid2D, p: GrayScottParams, variant: str):
    """Discrepancy in the U equation: -alpha*V^2 (real_a) or -beta*U^2*V."""
    if variant == "real_a":
        return -p.alpha * v * v
    return -p.beta * u * u * v


def rhs_grayscott(u, v, grid: Grid2D, p: GrayScottParams, variant: str = "sim"):
    _check_variant(variant, ("sim", "real_a", "real_b"))
    _check_finite("U", u)
    _check_finite("V", v)
    lo, hi = GS_SAFE_RANGE
    if u.min() < lo or u.max() > hi or v.min() < lo or v.max() > hi:
        import warnings

        warnings.warn("Gray-Scott concentrations left [-0.5, 1.5]; dt too large?")
    du, dv = grayscott_sim_tendency(u, v, grid, p)
    if variant != "sim":
        du = du + grayscott_lprime(u, v, grid, p, variant)
    return du, dv


# ---------------------------------------------------------------------------
# 1D rotating-detonation model (energy u, gain lambda)
# ---------------------------------------------------------------------------

def burgers_upwind(u: np.ndarray, dx: float) -> np.ndarray:
    """-d/dx (u^2/2) by first-order Godunov fluxes on a periodic grid."""
    ul = u
    ur = np.roll(u, -1)
    fl = 0.5 * ul * ul
    fr = 0.5 * ur * ur
    shock = np.where(ul + ur > 0.0, fl, fr)
    raref = np.where(ul > 0.0, fl, np.where(ur < 0.0, fr, 0.0))
    flux = np.where(ul > ur, shock, raref)  # flux at i+1/2
    return -(flux - np.roll(flux, 1)) / dx


def rde_activation(u, p: RdeParams, stats: dict | None = None) -> np.ndarray:
    arg = (u - p.u_c) / p.alpha
    n_clamped = int(np.count_nonzero(arg > ARRHENIUS_CLAMP))
    if n_clamped and stats is not None:
        stats["arrhenius_clamped"] = stats.get("arrhenius_clamped", 0) + n_clamped
    return np.exp(np.minimum(arg, ARRHENIUS_CLAMP))


def rde_injection(u, p: RdeParams) -> np.ndarray:
    # logistic argument clipped far outside double-precision relevance
    return p.s * p.u_p / (1.0 + np.exp(np.clip(p.r * (u - p.u_p), -500.0, 500.0)))


def rde_sim_tendency(u, lam, grid: Grid1D, p: RdeParams, stats=None):
    lam_c = np.clip(lam, 0.0, 1.0)
    react = p.rde_k * (1.0 - lam_c) * rde_activation(u, p, stats)
    du = burgers_upwind(u, grid.dx) + p.rde_q * react - p.eps * u * u
    dlam = react - rde_injection(u, p) * lam_c
    return du, dlam


def rde_lprime(u, lam, p: RdeParams, variant: str) -> np.ndarray:
    """Discrepancy in the u equation: eps2*(u - u^3) (real_a) or eps2*u."""
    if variant == "real_a":
        return p.eps2 * (u - u**3)
    return p.eps2 * u


def rhs_rde(u, lam, grid: Grid1D, p: RdeParams, variant: str = "sim", stats=None):
    _check_variant(variant, ("sim", "real_a", "real_b"))
    _check_finite("u", u)
    _check_finite("lambda", lam)
    du, dlam = rde_sim_tendency(u, lam, grid, p, stats)
    if variant != "sim":
        du = du + rde_lprime(u, lam, p, variant)
    return du, dlam


# ---------------------------------------------------------------------------
# Damped pendulum (the sim variant is undamped)
# ---------------------------------------------------------------------------

def rhs_pendulum(theta, omega, p: PendulumParams, u_in=0.0, variant: str = "real_a"):
    _check_variant(variant, ("sim", "real_a"))
    d = 0.0 if variant == "sim" else p.d
    ml2 = p.m * p.l * p.l
    dtheta = omega
    domega = -(p.g / p.l) * np.sin(theta) - (d / ml2) * omega + u_in / ml2
    return dtheta, domega


def pendulum_energy(theta, omega, p: PendulumParams):
    return 0.5 * p.m * p.l**2 * omega**2 + p.m * p.g * p.l * (1.0 - np.cos(theta))


# ---------------------------------------------------------------------------
# Seeded default initial conditions
# ---------------------------------------------------------------------------

def default_ic(system: str, grid, rng: np.random.Generator) -> np.ndarray:
    """A reproducible initial state (flat stacked-field vector)."""
    if system == "ks2d":
        return _lowpass_noise(grid, rng, n_modes=8, amplitude=0.1).ravel()
    if system == "kolmogorov":
        return _lowpass_noise(grid, rng, n_modes=8, amplitude=0.5).ravel()
    if system == "grayscott":
        # smooth seeded bumps; the complement-product form keeps the total
        # in [0, 1) without clipping (kinks would ring under the spectral
        # scheme and push concentrations slightly negative)
        gx = np.arange(grid.nx)[:, None]
        gy = np.arange(grid.ny)[None, :]
        clear = np.ones(grid.shape)
        for _ in range(6):
            cx = int(rng.integers(0, grid.nx))
            cy = int(rng.integers(0, grid.ny))
            dx = np.minimum(np.abs(gx - cx), grid.nx - np.abs(gx - cx))
            dy = np.minimum(np.abs(gy - cy), grid.ny - np.abs(gy - cy))
            clear *= 1.0 - np.exp(-(dx * dx + dy * dy) / (2.0 * 3.0**2))
        bump = 1.0 - clear
        return np.concatenate([(1.0 - 0.5 * bump).ravel(),
                               (0.25 * bump).ravel()])
    if system == "rde1d":
        x = grid.x
        x0 = grid.lx * (0.25 + 0.5 * rng.random())
        dist = np.minimum(np.abs(x - x0), grid.lx - np.abs(x - x0))
        u = 2.5 / np.cosh(dist / 0.3) ** 2
        lam = np.zeros(grid.nx)  # fresh reactant everywhere
        return np.concatenate([u, lam])
    if system == "pendulum":
        theta0 = 0.5 + 1.5 * rng.random()
        return np.array([theta0, 0.0])
    raise ValueError(f"unknown system {system!r}")


def _lowpass_noise(grid: Grid2D, rng, n_modes: int, amplitude: float):
    noise = rng.standard_normal(grid.shape)
    ix = np.abs(np.fft.fftfreq(grid.nx) * grid.nx)[:, None]
    iy = np.abs(np.fft.fftfreq(grid.ny) * grid.ny)[None, :]
    keep = (ix <= n_modes) & (iy <= n_modes)
    f = np.fft.ifft2(np.fft.fft2(noise) * keep).real
    return amplitude * f / np.abs(f).max()
