"""Candidate-term libraries for missing-physics regression.

Each term maps a full state to a tendency contribution for one target
field (the field whose governing equation the discrepancy lives in).
Libraries are constructed so that the true discrepancy of every real
variant lies exactly in their span; ``true_coefficients`` returns those
loadings, which the construction audit checks against rhs(real)-rhs(sim).

Differential terms are evaluated pseudospectrally on the system grid.
Directional derivatives for the KS library are taken along the unit vector
of the mean advection velocity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..pde.grid import Grid1D, Grid2D


@dataclass(frozen=True)
class LibraryTerm:
    name: str
    target_field: int
    func: Callable  # (fields, grid, params) -> array shaped like one field


@dataclass(frozen=True)
class CandidateLibrary:
    system: str
    terms: tuple

    @property
    def names(self) -> tuple:
        return tuple(t.name for t in self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def evaluate(self, state: np.ndarray, grid, params) -> np.ndarray:
        """All terms as full-state tendencies; shape (n_terms, state_dim)."""
        fields = _split_fields(self.system, state, grid)
        out = np.zeros((len(self.terms), state.size))
        for j, term in enumerate(self.terms):
            val = term.func(fields, grid, params).ravel()
            start = term.target_field * val.size
            out[j, start:start + val.size] = val
        return out

    def combine(self, state: np.ndarray, grid, params, coeffs: dict) -> np.ndarray:
        """Weighted sum of terms, as a full-state tendency."""
        theta = self.evaluate(state, grid, params)
        total = np.zeros(state.size)
        for name, c in coeffs.items():
            total += c * theta[self.names.index(name)]
        return total


def _split_fields(system, state, grid):
    from ..pde.params import FIELD_COUNT

    nf = FIELD_COUNT[system]
    if system == "pendulum":
        return state.reshape(2)
    return state.reshape(nf, *grid.shape)


def _unit_advection(params):
    norm = float(np.hypot(params.vx, params.vy))
    if norm == 0.0:
        return 1.0, 0.0, 0.0
    return params.vx / norm, params.vy / norm, norm


def build_library(system: str) -> CandidateLibrary:
    """The registered candidate-term set for a system."""
    if system == "ks2d":
        def ddir(u, g: Grid2D, p):
            ex, ey, _ = _unit_advection(p)
            return ex * g.ddx(u) + ey * g.ddy(u)

        terms = (
            LibraryTerm("u", 0, lambda f, g, p: f[0]),
            LibraryTerm("grad_u", 0, lambda f, g, p: ddir(f[0], g, p)),
            LibraryTerm("lap_u", 0, lambda f, g, p: g.laplacian(f[0])),
            LibraryTerm("grad3_u", 0,
                        lambda f, g, p: ddir(ddir(ddir(f[0], g, p), g, p), g, p)),
            LibraryTerm("u^2", 0, lambda f, g, p: f[0] ** 2),
            LibraryTerm("u^3", 0, lambda f, g, p: f[0] ** 3),
            LibraryTerm("|grad_u|^2", 0,
                        lambda f, g, p: g.ddx(f[0]) ** 2 + g.ddy(f[0]) ** 2),
        )
    elif system == "kolmogorov":
        terms = (
            LibraryTerm("w", 0, lambda f, g, p: f[0]),
            LibraryTerm("w^2", 0, lambda f, g, p: f[0] ** 2),
            LibraryTerm("w^3", 0, lambda f, g, p: f[0] ** 3),
            LibraryTerm("lap_w", 0, lambda f, g, p: g.laplacian(f[0])),
            LibraryTerm("w*lap_w", 0, lambda f, g, p: f[0] * g.laplacian(f[0])),
        )
    elif system == "grayscott":
        terms = (
            LibraryTerm("U", 0, lambda f, g, p: f[0]),
            LibraryTerm("V", 0, lambda f, g, p: f[1]),
            LibraryTerm("U*V", 0, lambda f, g, p: f[0] * f[1]),
            LibraryTerm("U^2", 0, lambda f, g, p: f[0] ** 2),
            LibraryTerm("V^2", 0, lambda f, g, p: f[1] ** 2),
            LibraryTerm("U^2*V", 0, lambda f, g, p: f[0] ** 2 * f[1]),
            LibraryTerm("U*V^2", 0, lambda f, g, p: f[0] * f[1] ** 2),
            LibraryTerm("V^3", 0, lambda f, g, p: f[1] ** 3),
        )
    elif system == "rde1d":
        def ddx1(u, g: Grid1D):
            k = 2 * np.pi * np.fft.fftfreq(g.nx, d=g.dx)
            return np.fft.ifft(1j * k * np.fft.fft(u)).real

        terms = (
            LibraryTerm("u", 0, lambda f, g, p: f[0]),
            LibraryTerm("u^2", 0, lambda f, g, p: f[0] ** 2),
            LibraryTerm("u^3", 0, lambda f, g, p: f[0] ** 3),
            LibraryTerm("lam", 0, lambda f, g, p: f[1]),
            LibraryTerm("lam*u", 0, lambda f, g, p: f[1] * f[0]),
            LibraryTerm("lam^2*u", 0, lambda f, g, p: f[1] ** 2 * f[0]),
            LibraryTerm("u_x", 0, lambda f, g, p: ddx1(f[0], g)),
        )
    elif system == "pendulum":
        terms = (
            LibraryTerm("theta", 1, lambda f, g, p: np.atleast_1d(f[0])),
            LibraryTerm("omega", 1, lambda f, g, p: np.atleast_1d(f[1])),
            LibraryTerm("sin_theta", 1, lambda f, g, p: np.atleast_1d(np.sin(f[0]))),
            LibraryTerm("theta^3", 1, lambda f, g, p: np.atleast_1d(f[0] ** 3)),
            LibraryTerm("omega^3", 1, lambda f, g, p: np.atleast_1d(f[1] ** 3)),
        )
    else:
        raise ValueError(f"no candidate library registered for {system!r}")
    return CandidateLibrary(system=system, terms=terms)


def true_coefficients(system: str, variant: str, params) -> dict:
    """Loadings that reproduce rhs(variant) - rhs(sim) exactly in the library."""
    if variant == "sim":
        return {}
    if system == "ks2d" and variant == "real_a":
        _, _, speed = _unit_advection(params)
        return {"u": params.gamma, "grad_u": -speed}
    if system == "kolmogorov" and variant == "real_a":
        return {"w": -params.alpha}
    if system == "grayscott":
        if variant == "real_a":
            return {"V^2": -params.alpha}
        return {"U^2*V": -params.beta}
    if system == "rde1d":
        if variant == "real_a":
            return {"u": params.eps2, "u^3": -params.eps2}
        return {"u": params.eps2}
    if system == "pendulum" and variant == "real_a":
        return {"omega": -params.d / (params.m * params.l**2)}
    raise ValueError(f"no discrepancy defined for {system}/{variant}")
