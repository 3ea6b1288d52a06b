"""Dense linear algebra, 2D FFT, POD compression and seeded random streams.

Conventions fixed here and assumed everywhere else in the package:

* FFT: unnormalized forward transform, ``1/(nx*ny)``-normalized inverse
  (numpy's default).  All spectral derivative operators are built against
  this convention.
* All floating point is double precision.
* Least squares uses a rank cutoff of ``1e-12 * sigma_max``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LSTSQ_RCOND = 1e-12


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")


@dataclass(frozen=True)
class RealField2D:
    """A real scalar field sampled on an nx-by-ny grid.

    ``data`` is row-major with x along axis 0, so the flat index of grid
    point (ix, iy) is ``ix * ny + iy``.
    """

    nx: int
    ny: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float).reshape(self.nx, self.ny)
        _require_finite("RealField2D.data", arr)
        object.__setattr__(self, "data", arr)

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)


@dataclass(frozen=True)
class SpectralField2D:
    """Complex Fourier coefficients of a 2D field (unnormalized forward)."""

    nx: int
    ny: int
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=complex).reshape(self.nx, self.ny)
        object.__setattr__(self, "data", arr)


def fft2(f: RealField2D) -> SpectralField2D:
    """Unnormalized forward 2D FFT of a real field."""
    if f.nx < 2 or f.ny < 2:
        raise ValueError("fft2 requires nx, ny >= 2")
    return SpectralField2D(f.nx, f.ny, np.fft.fft2(f.data))


def ifft2(s: SpectralField2D) -> RealField2D:
    """Inverse of :func:`fft2`; imaginary residue is discarded."""
    _require_finite("SpectralField2D.data", s.data)
    return RealField2D(s.nx, s.ny, np.fft.ifft2(s.data).real)


@dataclass(frozen=True)
class PodBasis:
    """Leading left singular vectors of a snapshot matrix.

    ``modes`` has orthonormal columns (n x r); ``singular_values`` are the
    corresponding singular values in nonincreasing order.
    """

    n: int
    r: int
    modes: np.ndarray
    singular_values: np.ndarray

    def project(self, x: np.ndarray) -> np.ndarray:
        """Coefficients of x (state vector or n x m matrix) in the basis."""
        return self.modes.T @ x

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        return self.modes @ coeffs


def pod_compress(snapshots: np.ndarray, r: int) -> PodBasis:
    """Rank-r POD of an n-by-m snapshot matrix via thin SVD.

    The thin SVD of the snapshot matrix itself is used rather than an
    eigendecomposition of the covariance; at desk scale this is better
    conditioned and just as fast.
    """
    snapshots = np.asarray(snapshots, dtype=float)
    if snapshots.ndim != 2:
        raise ValueError("snapshots must be a 2D matrix (n x m)")
    _require_finite("snapshots", snapshots)
    n, m = snapshots.shape
    if not 1 <= r <= min(n, m):
        raise ValueError(f"rank r={r} out of range for a {n}x{m} matrix")
    u, s, _ = np.linalg.svd(snapshots, full_matrices=False)
    return PodBasis(n=n, r=r, modes=u[:, :r].copy(), singular_values=s[:r].copy())


def solve_least_squares(A: np.ndarray, b: np.ndarray, return_rank: bool = False):
    """Minimum-norm least-squares solution of ``A x = b``.

    Singular values below ``1e-12 * sigma_max`` are treated as zero.  With
    ``return_rank=True`` also returns the effective rank used.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError("A must be a p x q matrix with p, q >= 1")
    _require_finite("A", A)
    _require_finite("b", b)
    x, _, rank, _ = np.linalg.lstsq(A, b, rcond=LSTSQ_RCOND)
    if return_rank:
        return x, int(rank)
    return x


@dataclass(frozen=True)
class RngStream:
    """A named, reproducible random stream (PCG64).

    Equal seeds give bit-identical sequences across runs and platforms.
    ``generator()`` returns a fresh generator each call so a stream can be
    replayed; draw-once code should hold on to the returned generator.
    """

    seed: int
    algorithm: str = field(default="pcg64")

    def __post_init__(self):
        if self.algorithm != "pcg64":
            raise ValueError(f"unknown rng algorithm {self.algorithm!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))

    def split(self, n: int) -> list["RngStream"]:
        """Derive n independent child streams deterministically."""
        state = np.random.SeedSequence(self.seed).generate_state(n, dtype=np.uint64)
        return [RngStream(int(s)) for s in state]
