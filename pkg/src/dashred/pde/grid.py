"""Periodic grids and pseudospectral derivative helpers.

Array layout: 2D fields have shape (nx, ny) with x along axis 0, matching
the row-major flat index ``ix * ny + iy`` used for sensor placement.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 32 or (n & (n - 1)) != 0:
                raise ValueError("grid sizes must be powers of two >= 32")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("domain lengths must be positive")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def size(self):
        return self.nx * self.ny

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.lx / self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * (self.ly / self.ny)

    @cached_property
    def kx(self) -> np.ndarray:
        """Angular wavenumbers along x, shape (nx, 1) for broadcasting."""
        return (2 * np.pi * np.fft.fftfreq(self.nx, d=self.lx / self.nx))[:, None]

    @cached_property
    def ky(self) -> np.ndarray:
        return (2 * np.pi * np.fft.fftfreq(self.ny, d=self.ly / self.ny))[None, :]

    @cached_property
    def k_squared(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: True where the mode index is retained."""
        ix = np.abs(np.fft.fftfreq(self.nx) * self.nx)[:, None]
        iy = np.abs(np.fft.fftfreq(self.ny) * self.ny)[None, :]
        return (ix <= self.nx // 3) & (iy <= self.ny // 3)

    # -- spectral derivatives (physical in, physical out) --

    def ddx(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(1j * self.kx * np.fft.fft2(f)).real

    def ddy(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(1j * self.ky * np.fft.fft2(f)).real

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(-self.k_squared * np.fft.fft2(f)).real

    def bilaplacian(self, f: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(self.k_squared**2 * np.fft.fft2(f)).real

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Project a physical-space product back onto the retained modes."""
        return np.fft.ifft2(np.fft.fft2(f) * self.dealias_mask).real


@dataclass(frozen=True)
class Grid1D:
    nx: int
    lx: float

    def __post_init__(self):
        if self.nx < 2 or self.lx <= 0:
            raise ValueError("need nx >= 2 and lx > 0")

    @property
    def shape(self):
        return (self.nx,)

    @property
    def size(self):
        return self.nx

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * (self.lx / self.nx)

    @property
    def dx(self) -> float:
        return self.lx / self.nx


@dataclass(frozen=True)
class Grid0D:
    """Descriptor for systems whose state is a plain vector (no mesh)."""

    @property
    def shape(self):
        return ()

    @property
    def size(self):
        return 1
