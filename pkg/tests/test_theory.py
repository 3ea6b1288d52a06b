import numpy as np
import pytest

from dashred import theory
from dashred.pde import Grid0D, SystemId, integrate, integrate_ode
from dashred.pde.params import PendulumParams


class TestSbvp:
    def test_noiseless_heat_fixture_exact(self):
        readings, modes, times, a_true, lam_true = \
            theory.make_heat_sbvp_fixture()
        a, lam, info = theory.sbvp_identify(readings, modes, times)
        assert np.abs((a - a_true) / a_true).max() <= 1e-6
        assert np.abs((lam - lam_true) / lam_true).max() <= 1e-6
        assert info["non_exponential_modes"] == []

    def test_shifted_rates_recovered(self):
        # a constant-coefficient model mismatch appears as a rate shift;
        # identification closes it exactly on noiseless data
        readings, modes, times, a_true, lam_true = \
            theory.make_heat_sbvp_fixture(rate_shift=0.1)
        a, lam, _ = theory.sbvp_identify(readings, modes, times)
        assert np.abs((lam - lam_true) / lam_true).max() <= 1e-6
        assert np.abs((a - a_true) / a_true).max() <= 1e-6

    def test_null_amplitude_mode(self):
        readings, modes, times, _, _ = theory.make_heat_sbvp_fixture(
            n_modes=1, amplitudes=[0.0])
        a, lam, _ = theory.sbvp_identify(readings, modes, times)
        assert abs(a[0]) <= 1e-10

    def test_one_percent_noise_within_five_percent_over_20_seeds(self):
        errs = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            readings, modes, times, a_true, lam_true = \
                theory.make_heat_sbvp_fixture(noise_level=0.01, rng=rng)
            a, lam, _ = theory.sbvp_identify(readings, modes, times)
            errs.append(np.abs((lam - lam_true) / lam_true).max())
        assert np.mean(errs) <= 0.05

    def test_rank_deficient_modes_rejected(self):
        readings, modes, times, _, _ = theory.make_heat_sbvp_fixture()
        modes = modes.copy()
        modes[:, 2] = modes[:, 1]
        with pytest.raises(ValueError, match="rank deficient"):
            theory.sbvp_identify(readings, modes, times)

    def test_modal_model_evaluate(self):
        model = theory.ModalModel(amplitudes=np.array([2.0]),
                                  modes=np.array([[1.0], [0.5]]),
                                  rates=np.array([-1.0]))
        out = model.evaluate(np.array([0.0, 1.0]))
        assert out[0] == pytest.approx([2.0, 1.0])
        assert out[1] == pytest.approx([2 * np.e**-1, 1 * np.e**-1])

    def test_oscillatory_rate_fit(self):
        dt = 0.01
        t = np.arange(400) * dt
        sigma, omega = -0.7, 5.3
        trace = np.exp(sigma * t) * np.cos(omega * t + 0.4)
        lam = theory.fit_oscillatory_rate(trace, dt)
        assert lam.real == pytest.approx(sigma, rel=1e-6)
        assert abs(lam.imag) == pytest.approx(omega, rel=1e-6)


@pytest.fixture(params=["pendulum", "msd", "rlc"])
def phs_fixture(request):
    return {
        "pendulum": theory.pendulum_phs(),
        "msd": theory.mass_spring_damper_phs(),
        "rlc": theory.rlc_phs(),
    }[request.param]


class TestPhsValidate:
    def test_reference_systems_pass(self, phs_fixture):
        report = theory.phs_validate(phs_fixture)
        assert report.passed, report.lines()

    def test_negative_dissipation_eigenvalue_detected(self):
        sys_ = theory.PhsSystem(
            J=np.array([[0.0, 1.0], [-1.0, 0.0]]),
            R=np.diag([0.0, -0.01]),
            G=np.array([[0.0], [1.0]]),
            hamiltonian=lambda x: 0.5 * (x[0] ** 2 + x[1] ** 2),
            gradient=lambda x: x)
        report = theory.phs_validate(sys_)
        assert not report.checks["R_positive_semidefinite"]
        assert "-1" in report.failures["R_positive_semidefinite"]

    def test_non_gradient_field_detected(self):
        sys_ = theory.PhsSystem(
            J=np.array([[0.0, 1.0], [-1.0, 0.0]]),
            R=np.zeros((2, 2)),
            G=np.array([[0.0], [1.0]]),
            hamiltonian=lambda x: 0.0,
            gradient=lambda x: np.array([x[1], -x[0]]))  # pure curl
        report = theory.phs_validate(sys_)
        assert not report.checks["gradient_is_exact"]

    def test_skew_violation_reports_entry(self):
        sys_ = theory.PhsSystem(
            J=np.array([[0.0, 1.0], [-0.9, 0.0]]),
            R=np.zeros((2, 2)),
            G=np.array([[0.0], [1.0]]),
            hamiltonian=lambda x: 0.5 * x @ x,
            gradient=lambda x: x)
        report = theory.phs_validate(sys_)
        assert not report.checks["J_skew_symmetric"]


class TestPhsPerturb:
    def test_zero_perturbation_is_bit_exact(self, phs_fixture):
        res = theory.phs_perturb(phs_fixture, np.zeros((2, 2)),
                                 np.zeros((2, 2)), np.zeros((2, 1)))
        assert res.accepted
        assert np.array_equal(res.system.J, phs_fixture.J)
        assert np.array_equal(res.system.R, phs_fixture.R)
        assert np.array_equal(res.system.G, phs_fixture.G)

    def test_damping_bump_accepted_and_revalidates(self):
        sys_ = theory.pendulum_phs(d=0.3)
        res = theory.phs_perturb(sys_, np.zeros((2, 2)),
                                 np.diag([0.0, 0.1]), np.zeros((2, 1)))
        assert res.accepted
        assert theory.phs_validate(res.system).passed
        assert res.system.R[1, 1] == pytest.approx(0.4)

    def test_indefinite_dissipation_rejected_by_name(self):
        sys_ = theory.pendulum_phs(d=0.3)
        res = theory.phs_perturb(sys_, np.zeros((2, 2)),
                                 np.diag([0.0, -0.6]), np.zeros((2, 1)))
        assert not res.accepted
        assert res.violations == ("R_plus_delta_R_positive_semidefinite",)

    def test_nonskew_and_asymmetric_rejected_by_name(self, phs_fixture):
        res = theory.phs_perturb(phs_fixture, np.eye(2), np.zeros((2, 2)),
                                 np.zeros((2, 1)))
        assert res.violations == ("delta_J_skew_symmetric",)
        res = theory.phs_perturb(phs_fixture, np.zeros((2, 2)),
                                 np.array([[0.0, 1.0], [0.0, 0.0]]),
                                 np.zeros((2, 1)))
        assert res.violations == ("delta_R_symmetric",)

    def test_every_admissible_perturbation_revalidates(self):
        # the testable conclusion of structure persistence, sampled
        rng = np.random.default_rng(0)
        sys_ = theory.mass_spring_damper_phs()
        accepted = 0
        for _ in range(25):
            a = rng.standard_normal((2, 2))
            dj = 0.5 * (a - a.T)
            b = rng.standard_normal((2, 2))
            dr = 0.05 * (b + b.T)
            dg = 0.1 * rng.standard_normal((2, 1))
            res = theory.phs_perturb(sys_, dj, dr, dg)
            if res.accepted:
                accepted += 1
                assert theory.phs_validate(res.system).passed
            else:
                assert "R_plus_delta_R_positive_semidefinite" in res.violations
        assert accepted > 0


class TestEnergyBalance:
    def test_undamped_pendulum_conserves_energy(self):
        p = PendulumParams(d=0.0)
        sys_ = theory.pendulum_phs(d=0.0)
        period = 2 * np.pi * np.sqrt(p.l / p.g)
        n = int(10 * period / 1e-3) + 1
        traj = integrate(SystemId("pendulum", "sim"), np.array([1.0, 0.0]),
                         Grid0D(), p, dt=1e-3, n_steps=n, save_every=1)
        h = np.array([sys_.hamiltonian(x) for x in traj.snapshots])
        assert np.abs(h - h[0]).max() / h[0] <= 1e-6

    def test_damped_pendulum_balance(self):
        p = PendulumParams()
        sys_ = theory.pendulum_phs(d=p.d)
        traj = integrate(SystemId("pendulum", "real_a"), np.array([1.2, 0.0]),
                         Grid0D(), p, dt=1e-3, n_steps=8000, save_every=1)
        h = np.array([sys_.hamiltonian(x) for x in traj.snapshots])
        assert np.all(np.diff(h) <= 1e-12)
        resid = theory.phs_energy_balance(sys_, traj.times, traj.snapshots)
        dhdt_scale = np.abs(np.diff(h) / np.diff(traj.times)).max()
        assert resid <= 1e-5 * dhdt_scale

    def test_forced_mass_spring_damper_balance(self):
        sys_ = theory.mass_spring_damper_phs()

        def force(t):
            return np.sin(2.1 * t)

        # fold time into the state so RK4 sees the true forced field
        def rhs_aug(y):
            x, t = y[:2], y[2]
            dx = sys_.vector_field(x, force(t))
            return np.append(dx, 1.0)

        times, states = integrate_ode(rhs_aug, np.array([1.0, 0.0, 0.0]),
                                      1e-3, 20000, save_every=1)
        inputs = force(states[:, 2])[:, None]
        resid = theory.phs_energy_balance(sys_, times, states[:, :2], inputs)
        h = np.array([sys_.hamiltonian(x) for x in states[:, :2]])
        scale = np.abs(np.diff(h) / np.diff(times)).max()
        assert resid <= 1e-5 * scale

    def test_phs_field_matches_pendulum_equations(self):
        # with m*l^2 = 1 the structure matrices reproduce the pendulum rhs
        from dashred.pde import rhs_pendulum

        p = PendulumParams()
        sys_ = theory.pendulum_phs(m=p.m, l=p.l, g=p.g, d=p.d)
        for theta, omega, u in [(0.3, -1.2, 0.0), (2.0, 0.5, 0.7)]:
            expected = rhs_pendulum(theta, omega, p, u, "real_a")
            got = sys_.vector_field(np.array([theta, omega]), u)
            assert np.abs(got - np.array(expected)).max() <= 1e-14
