import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dashred.numerics import (RealField2D, RngStream, SpectralField2D, fft2,
                              ifft2, pod_compress, solve_least_squares)


def naive_dft2(data):
    """Direct O(N^2) two-dimensional DFT, the independent oracle."""
    nx, ny = data.shape
    out = np.zeros((nx, ny), dtype=complex)
    jx = np.arange(nx)
    jy = np.arange(ny)
    for kx in range(nx):
        for ky in range(ny):
            phase = np.exp(-2j * np.pi * (kx * jx[:, None] / nx
                                          + ky * jy[None, :] / ny))
            out[kx, ky] = np.sum(data * phase)
    return out


class TestFft:
    def test_constant_field_has_only_dc(self):
        c = 2.75
        f = RealField2D(32, 32, np.full((32, 32), c))
        spec = fft2(f).data
        assert spec[0, 0] == pytest.approx(c * 32 * 32)
        spec[0, 0] = 0.0
        assert np.abs(spec).max() <= 1e-9

    def test_single_sine_mode_lands_on_two_conjugate_bins(self):
        ly = 7.0
        y = np.arange(64) * (ly / 64)
        f = RealField2D(64, 64, np.tile(np.sin(2 * np.pi * y / ly), (64, 1)))
        spec = fft2(f).data
        hits = np.argwhere(np.abs(spec) > 1e-6)
        assert sorted(map(tuple, hits)) == [(0, 1), (0, 63)]
        assert spec[0, 1] == pytest.approx(-0.5j * 64 * 64)
        assert spec[0, 1].conjugate() == pytest.approx(spec[0, 63])

    def test_matches_naive_dft(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((16, 16))
        spec = fft2(RealField2D(16, 16, data)).data
        assert np.abs(spec - naive_dft2(data)).max() <= 1e-10

    def test_round_trip_and_parseval(self):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((32, 16))
        f = RealField2D(32, 16, data)
        back = ifft2(fft2(f)).data
        assert np.abs(back - data).max() <= 1e-10 * np.abs(data).max()
        spec = fft2(f).data
        lhs = np.sum(np.abs(spec) ** 2) / (32 * 16)
        assert lhs == pytest.approx(np.sum(data**2), rel=1e-10)

    def test_rejects_nonfinite(self):
        data = np.zeros((32, 32))
        data[3, 4] = np.nan
        with pytest.raises(ValueError):
            fft2(RealField2D(32, 32, data))
        with pytest.raises(ValueError):
            ifft2(SpectralField2D(4, 4, np.full((4, 4), np.inf, dtype=complex)))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((16, 16))
        y = rng.standard_normal((16, 16))
        lhs = fft2(RealField2D(16, 16, a * x + b * y)).data
        rhs = a * fft2(RealField2D(16, 16, x)).data \
            + b * fft2(RealField2D(16, 16, y)).data
        scale = max(np.abs(rhs).max(), 1.0)
        assert np.abs(lhs - rhs).max() <= 1e-10 * scale


class TestPod:
    def test_full_rank_reconstruction_is_exact(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((12, 7))
        pod = pod_compress(x, 7)
        recon = pod.reconstruct(pod.project(x))
        assert np.abs(recon - x).max() <= 1e-10

    def test_rank_one_matrix_exact_at_r1(self):
        rng = np.random.default_rng(3)
        x = np.outer(rng.standard_normal(30), rng.standard_normal(11))
        pod = pod_compress(x, 1)
        recon = pod.reconstruct(pod.project(x))
        assert np.abs(recon - x).max() <= 1e-10 * np.abs(x).max()

    def test_residual_equals_tail_singular_energy(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((50, 40))
        pod = pod_compress(x, 10)
        recon = pod.reconstruct(pod.project(x))
        resid = np.linalg.norm(x - recon)
        s = np.linalg.svd(x, compute_uv=False)  # independent full SVD
        expected = np.sqrt(np.sum(s[10:] ** 2))
        assert resid == pytest.approx(expected, rel=1e-8)

    @pytest.mark.parametrize("r", [1, 5, 13])
    def test_modes_orthonormal(self, r):
        rng = np.random.default_rng(5)
        pod = pod_compress(rng.standard_normal((40, 13)), r)
        gram = pod.modes.T @ pod.modes
        assert np.abs(gram - np.eye(r)).max() <= 1e-10
        assert np.all(np.diff(pod.singular_values) <= 1e-12)

    def test_rejects_bad_rank_and_nonfinite(self):
        x = np.ones((4, 3))
        with pytest.raises(ValueError):
            pod_compress(x, 0)
        with pytest.raises(ValueError):
            pod_compress(x, 4)
        x[1, 1] = np.inf
        with pytest.raises(ValueError):
            pod_compress(x, 2)


class TestLeastSquares:
    def test_identity_returns_rhs(self):
        b = np.array([3.0, -1.0, 0.5])
        x = solve_least_squares(np.eye(3), b)
        assert np.abs(x - b).max() <= 1e-14

    def test_consistent_overdetermined_system(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((10, 4))
        x_true = rng.standard_normal(4)
        x = solve_least_squares(a, a @ x_true)
        assert np.linalg.norm(a @ x - a @ x_true) <= 1e-10

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((20, 5))
        b = rng.standard_normal(20)
        x = solve_least_squares(a, b)
        x_ne = np.linalg.solve(a.T @ a, a.T @ b)  # independent dense route
        assert np.abs(x - x_ne).max() <= 1e-8

    def test_residual_orthogonal_to_column_space(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((30, 6))
        b = rng.standard_normal(30)
        x = solve_least_squares(a, b)
        assert np.linalg.norm(a.T @ (a @ x - b)) <= 1e-8 * np.linalg.norm(a.T @ b)

    def test_reports_effective_rank(self):
        a = np.column_stack([np.ones(5), np.ones(5)])
        x, rank = solve_least_squares(a, np.ones(5), return_rank=True)
        assert rank == 1
        # minimum-norm solution splits the weight evenly
        assert x == pytest.approx([0.5, 0.5])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            solve_least_squares(np.array([[np.nan]]), np.array([1.0]))


class TestRngStream:
    def test_equal_seeds_reproduce_first_10k_draws(self):
        a = RngStream(123).generator().standard_normal(10_000)
        b = RngStream(123).generator().standard_normal(10_000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RngStream(1).generator().standard_normal(100)
        b = RngStream(2).generator().standard_normal(100)
        assert not np.array_equal(a, b)

    def test_split_is_deterministic_and_distinct(self):
        kids1 = RngStream(9).split(4)
        kids2 = RngStream(9).split(4)
        assert [k.seed for k in kids1] == [k.seed for k in kids2]
        assert len({k.seed for k in kids1}) == 4

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError):
            RngStream(0, algorithm="mt19937")
