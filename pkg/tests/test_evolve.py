import numpy as np
import pytest

from curlmat.evolve import (EvolutionState, RK4_STABILITY_BOUND,
                            complex_curl_residual, diagnostics,
                            plane_wave_state, random_state, run_spectral,
                            step_rk4, step_spectral)
from curlmat.spectral import (GridSpec, TensorField, plane_wave,
                              random_bandlimited, wavevector)

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def grid():
    return GridSpec((16, 16, 16), (TWO_PI, TWO_PI, TWO_PI))


def measure_frequency(state: EvolutionState, steps: int, dt: float) -> float:
    """Phase-slope estimate of the TE oscillation frequency."""
    ref = state.te.data
    norm = np.vdot(ref, ref)
    phases = [0.0]
    times = [state.t]
    cur = state
    for _ in range(steps):
        cur = step_spectral(cur, dt)
        phases.append(float(np.angle(np.vdot(ref, cur.te.data) / norm)))
        times.append(cur.t)
    unwrapped = np.unwrap(phases)
    slope = np.polyfit(times, unwrapped, 1)[0]
    return -float(slope)  # exp(-i*omega*t) convention


class TestDispersion:
    @pytest.mark.parametrize("l,m,jvec", [(1, 1, (1, 2, 0)), (1, -1, (2, 0, 1)),
                                          (2, 2, (0, 1, 1)), (2, -2, (1, 0, 2)),
                                          (2, 1, (1, 1, 0))])
    def test_plane_wave_frequency(self, grid, l, m, jvec):
        c = 1.0
        state = plane_wave_state(grid, l, m, jvec, c=c)
        k = np.linalg.norm(wavevector(grid, jvec))
        expected = c * m * k / l
        dt = 0.02 * TWO_PI / abs(expected)
        measured = measure_frequency(state, 100, dt)
        assert abs(measured - expected) <= 1e-8

    def test_wave_speed_scales_frequency(self, grid):
        state = plane_wave_state(grid, 1, 1, (2, 0, 0), c=3.0)
        k = np.linalg.norm(wavevector(grid, (2, 0, 0)))
        dt = 0.02 * TWO_PI / (3.0 * k)
        measured = measure_frequency(state, 60, dt)
        assert abs(measured - 3.0 * k) <= 1e-8


class TestSpectralStepper:
    def test_zero_stays_zero(self, grid):
        zero = TensorField.zeros(grid, 1, "spherical")
        state = EvolutionState(zero, zero.copy(), 0.0, 1.0)
        out = step_spectral(state, 0.37)
        assert out.te.norm() == 0.0 and out.tb.norm() == 0.0

    def test_energy_conservation(self, grid):
        state = random_state(grid, 1, seed=42)
        _, logs = run_spectral(state, 0.05, 300)
        energies = np.array([d.energy for d in logs])
        drift = np.abs(energies - energies[0]).max() / energies[0]
        assert drift <= 1e-10

    def test_energy_conservation_hundred_crossings(self):
        # one box-crossing takes box/c = 2*pi; cover 100 of them
        small = GridSpec((8, 8, 8), (TWO_PI, TWO_PI, TWO_PI))
        state = random_state(small, 2, seed=6)
        crossings = 100
        dt = 0.5
        steps = int(np.ceil(crossings * TWO_PI / dt))
        _, logs = run_spectral(state, dt, steps, log_every=25)
        energies = np.array([d.energy for d in logs])
        drift = np.abs(energies - energies[0]).max() / energies[0]
        assert drift <= 1e-10

    @pytest.mark.parametrize("l", (1, 2))
    def test_constraints_preserved(self, grid, l):
        state = random_state(grid, l, seed=7)
        final, logs = run_spectral(state, 0.04, 200, log_every=20)
        assert max(d.div_te for d in logs) <= 1e-10
        assert max(d.div_tb for d in logs) <= 1e-10

    def test_time_reversibility(self, grid):
        state = random_state(grid, 2, seed=3)
        cur = state
        for _ in range(50):
            cur = step_spectral(cur, 0.07)
        for _ in range(50):
            cur = step_spectral(cur, -0.07)
        assert (cur.te - state.te).norm() <= 1e-11 * state.te.norm()
        assert (cur.tb - state.tb).norm() <= 1e-11 * state.tb.norm()

    def test_zero_frequency_band_constant(self, grid):
        l, jvec = 1, (0, 0, 2)
        te = plane_wave(grid, l, 0, jvec) + plane_wave(grid, l, 1, jvec)
        state = EvolutionState(te, TensorField.zeros(grid, l, "spherical"),
                               0.0, 1.0)
        start = diagnostics(state)
        _, logs = run_spectral(state, 0.11, 40, log_every=10)
        m0 = l + 0  # band index of m = 0
        for d in logs:
            assert abs(d.band_te[m0] - start.band_te[m0]) <= 1e-12
        # the moving band must actually oscillate, or the check is vacuous
        band1 = [d.band_te[l + 1] for d in logs]
        assert max(band1) - min(band1) > 1e-3


class TestRk4:
    def test_order_of_convergence(self, grid):
        state = plane_wave_state(grid, 1, 1, (1, 0, 0))
        omega = np.linalg.norm(wavevector(grid, (1, 0, 0)))
        total = 0.25 * TWO_PI / omega
        errors = []
        for nsteps in (8, 16, 32):
            dt = total / nsteps
            cur = state
            for _ in range(nsteps):
                cur = step_rk4(cur, dt)
            exact = step_spectral(state, total)
            errors.append((cur.te - exact.te).norm())
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        for order in orders:
            assert abs(order - 4.0) <= 0.2

    def test_small_step_agrees_with_spectral(self, grid):
        state = plane_wave_state(grid, 1, 1, (1, 1, 0))
        omega = np.linalg.norm(wavevector(grid, (1, 1, 0)))
        dt = 1e-3 * TWO_PI / omega
        a = step_rk4(state, dt)
        b = step_spectral(state, dt)
        assert (a.te - b.te).norm() <= 1e-10 * state.te.norm()
        assert (a.tb - b.tb).norm() <= 1e-10 * state.tb.norm()

    def test_stability_warning(self, grid):
        state = plane_wave_state(grid, 1, 1, (1, 0, 0))
        kmax = np.sqrt(3) * 7  # largest non-Nyquist wavenumber on 16^3, box 2*pi
        bad_dt = 1.05 * RK4_STABILITY_BOUND / kmax
        with pytest.warns(RuntimeWarning):
            step_rk4(state, bad_dt)

    def test_no_warning_in_stable_region(self, grid):
        import warnings
        state = plane_wave_state(grid, 1, 1, (1, 0, 0))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            step_rk4(state, 0.01)


class TestDiagnostics:
    def test_energy_definition(self, grid):
        state = random_state(grid, 1, seed=9)
        d = diagnostics(state)
        direct = (np.sum(np.abs(state.te.data) ** 2)
                  + np.sum(np.abs(state.tb.data) ** 2)) * grid.cell_volume
        assert d.energy == pytest.approx(direct, rel=1e-12)

    def test_band_count(self, grid):
        d = diagnostics(random_state(grid, 2, seed=10))
        assert len(d.band_te) == 5


class TestComplexCurlResidual:
    def test_evolved_solution_small(self, grid):
        state = plane_wave_state(grid, 1, 1, (1, 2, 0))
        omega = np.linalg.norm(wavevector(grid, (1, 2, 0)))
        state = step_spectral(state, 0.3)
        fd_dt = 1e-5 * TWO_PI / omega
        assert complex_curl_residual(state, fd_dt=fd_dt) <= 1e-9

    def test_evolved_rank2_small(self, grid):
        state = plane_wave_state(grid, 2, 2, (0, 1, 1))
        omega = np.linalg.norm(wavevector(grid, (0, 1, 1)))
        state = step_spectral(state, 0.2)
        fd_dt = 1e-5 * TWO_PI / omega
        assert complex_curl_residual(state, fd_dt=fd_dt) <= 1e-9

    def test_random_static_state_large(self, grid):
        state = EvolutionState(
            random_bandlimited(grid, 1, "spherical", seed=30),
            random_bandlimited(grid, 1, "spherical", seed=31), 0.0, 1.0)
        assert complex_curl_residual(state) > 1e-3

    def test_zero_field(self, grid):
        zero = TensorField.zeros(grid, 1, "spherical")
        state = EvolutionState(zero, zero.copy(), 0.0, 1.0)
        assert complex_curl_residual(state) == 0.0


class TestStateValidation:
    def test_requires_spherical(self, grid):
        cart = random_bandlimited(grid, 1, "cartesian", seed=1)
        sph = random_bandlimited(grid, 1, "spherical", seed=1)
        with pytest.raises(ValueError):
            EvolutionState(cart, cart.copy(), 0.0, 1.0)
        with pytest.raises(ValueError):
            EvolutionState(sph, sph.copy(), 0.0, -1.0)
