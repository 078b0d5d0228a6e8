import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridcov.exceptions import FactorizationError
from hybridcov.kernels import (
    CauchyParams,
    KernelSpec,
    MaternParams,
    ParsimoniousCM,
)
from hybridcov.randfield import (
    FieldSample,
    Locations,
    SimulationConfig,
    cholesky_with_jitter,
    covariance_matrix,
    read_sample_csv,
    sample_uniform_locations,
    simulate,
    write_sample_csv,
)

EXP_KERNEL = KernelSpec("matern", MaternParams(alpha=1.0, nu=0.5), dim=1)


class TestSampleUniformLocations:
    def test_bounds_and_determinism(self):
        a = sample_uniform_locations(100, [0.0, 0.0], [3.0, 3.0], seed=1)
        b = sample_uniform_locations(100, [0.0, 0.0], [3.0, 3.0], seed=1)
        assert np.array_equal(a.points, b.points)
        assert a.points.shape == (100, 2)
        assert np.all(a.points >= 0.0) and np.all(a.points <= 3.0)

    def test_different_seeds_differ(self):
        a = sample_uniform_locations(50, [0.0], [1.0], seed=1)
        b = sample_uniform_locations(50, [0.0], [1.0], seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_scenario_sample_sizes(self):
        loc = sample_uniform_locations(256, [0.0, 0.0], [3.0, 3.0], seed=9)
        assert len(loc) == 256

    def test_monte_carlo_mean(self):
        loc = sample_uniform_locations(10_000, [0.0], [1.0], seed=13)
        assert abs(loc.points.mean() - 0.5) < 0.02

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sample_uniform_locations(10, [0.0, 0.0], [1.0], seed=0)

    def test_bad_box(self):
        with pytest.raises(ValueError):
            sample_uniform_locations(10, [1.0], [0.0], seed=0)

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(1, 40), seed=st.integers(0, 2**32))
    def test_always_inside_box(self, n, seed):
        loc = sample_uniform_locations(n, [-2.0, 1.0], [-1.0, 4.0], seed=seed)
        assert np.all(loc.points[:, 0] >= -2.0) and np.all(loc.points[:, 0] <= -1.0)
        assert np.all(loc.points[:, 1] >= 1.0) and np.all(loc.points[:, 1] <= 4.0)


class TestCovarianceMatrix:
    def test_single_point(self):
        loc = Locations(dim=2, points=np.array([[0.5, 0.5]]))
        spec = KernelSpec("cauchy", CauchyParams(alpha=0.125, nu=0.75, omega=3.0), dim=2)
        mat = covariance_matrix(spec, loc)
        assert mat.shape == (1, 1)
        assert mat[0, 0] == 3.0

    def test_duplicated_point(self):
        loc = Locations(dim=1, points=np.array([[1.0], [1.0], [2.0]]))
        mat = covariance_matrix(EXP_KERNEL, loc)
        assert mat[0, 1] == mat[0, 0] == 1.0

    def test_collinear_exponential(self):
        loc = Locations(dim=1, points=np.array([[0.0], [1.0], [2.0]]))
        mat = covariance_matrix(EXP_KERNEL, loc)
        expected = np.array(
            [
                [1.0, math.exp(-1.0), math.exp(-2.0)],
                [math.exp(-1.0), 1.0, math.exp(-1.0)],
                [math.exp(-2.0), math.exp(-1.0), 1.0],
            ]
        )
        np.testing.assert_allclose(mat, expected, rtol=1e-14)

    def test_bitwise_symmetry(self):
        loc = sample_uniform_locations(40, [0.0, 0.0], [3.0, 3.0], seed=3)
        p = ParsimoniousCM(omega=1.0, alpha=0.125, nu1=0.75, nu2=0.5, xi_tilde=0.125 * math.sqrt(40))
        mat = covariance_matrix(KernelSpec("hybrid_cm", p, dim=2), loc)
        assert np.array_equal(mat, mat.T)

    def test_hole_effect_dimension_enforced(self):
        from hybridcov.kernels import HybridHMParams

        lam = MaternParams(alpha=0.125, nu=0.5)
        p = HybridHMParams(
            lambda1=lam, lambda2=lam, omega1=0.5, omega2=0.5, xi1=40.0, xi2=40.0,
            tau=2.0, eta=3.5, dim=1,
        )
        spec = KernelSpec("hybrid_hm", p, dim=1)
        loc2d = sample_uniform_locations(5, [0.0, 0.0], [1.0, 1.0], seed=0)
        with pytest.raises(ValueError):
            covariance_matrix(spec, loc2d)


class TestCholeskyLadder:
    def test_identity_needs_no_jitter(self):
        L, j = cholesky_with_jitter(np.eye(4), 1.0)
        assert j == 0.0
        np.testing.assert_array_equal(L, np.eye(4))

    def test_reports_ladder_and_condition_on_failure(self):
        mat = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite, eigenvalues 3 and -1
        with pytest.raises(FactorizationError) as exc_info:
            cholesky_with_jitter(mat, 1.0, ladder=(0.0, 1e-10))
        assert exc_info.value.jitter_tried == (0.0, 1e-10)
        assert math.isfinite(exc_info.value.condition_estimate)

    def test_reconstruction_error(self):
        loc = sample_uniform_locations(60, [0.0, 0.0], [3.0, 3.0], seed=5)
        p = ParsimoniousCM(omega=1.0, alpha=0.125, nu1=0.75, nu2=0.5, xi_tilde=0.125 * math.sqrt(40))
        sigma = covariance_matrix(KernelSpec("hybrid_cm", p, dim=2), loc)
        L, j = cholesky_with_jitter(sigma, sigma[0, 0])
        recon = L @ L.T
        target = sigma + j * sigma[0, 0] * np.eye(len(loc))
        assert np.max(np.abs(recon - target)) <= 1e-9 * sigma[0, 0]


class TestSimulate:
    def test_bit_identical_replicates(self):
        loc = sample_uniform_locations(20, [0.0, 0.0], [3.0, 3.0], seed=7)
        cfg = SimulationConfig(seed=11, n_replicates=2)
        a = simulate(EXP_KERNEL_2D, loc, cfg)
        b = simulate(EXP_KERNEL_2D, loc, cfg)
        for s1, s2 in zip(a.samples, b.samples):
            assert np.array_equal(s1.values, s2.values)

    def test_replicates_use_independent_streams(self):
        loc = sample_uniform_locations(20, [0.0, 0.0], [3.0, 3.0], seed=7)
        out = simulate(EXP_KERNEL_2D, loc, SimulationConfig(seed=11, n_replicates=3))
        assert not np.array_equal(out.samples[0].values, out.samples[1].values)

    def test_empirical_covariance_converges(self):
        loc = Locations(dim=1, points=np.array([[0.0], [0.3], [0.9], [1.5], [2.2]]))
        sigma = covariance_matrix(EXP_KERNEL, loc)
        out = simulate(EXP_KERNEL, loc, SimulationConfig(seed=3, n_replicates=5000))
        draws = np.stack([s.values for s in out.samples])
        emp = draws.T @ draws / len(draws)
        rel = np.linalg.norm(emp - sigma) / np.linalg.norm(sigma)
        assert rel < 0.05

    def test_scenario_a_needs_no_ladder_escalation(self):
        loc = sample_uniform_locations(100, [0.0, 0.0], [3.0, 3.0], seed=1)
        p = ParsimoniousCM(omega=1.0, alpha=0.125, nu1=0.75, nu2=0.5, xi_tilde=0.125 * math.sqrt(40))
        out = simulate(KernelSpec("hybrid_cm", p, dim=2), loc, SimulationConfig(seed=1, n_replicates=2))
        assert out.jitter <= 1e-10

    def test_jitter_recorded(self):
        loc = sample_uniform_locations(10, [0.0, 0.0], [1.0, 1.0], seed=2)
        out = simulate(EXP_KERNEL_2D, loc, SimulationConfig(seed=2, n_replicates=1))
        assert out.jitter in SimulationConfig(seed=0).jitter_ladder


EXP_KERNEL_2D = KernelSpec("matern", MaternParams(alpha=1.0, nu=0.5), dim=2)


class TestConfigValidation:
    def test_ladder_must_start_at_zero(self):
        with pytest.raises(ValueError):
            SimulationConfig(seed=0, jitter_ladder=(1e-10, 1e-8))

    def test_ladder_must_increase(self):
        with pytest.raises(ValueError):
            SimulationConfig(seed=0, jitter_ladder=(0.0, 1e-8, 1e-10))

    def test_replicates_positive(self):
        with pytest.raises(ValueError):
            SimulationConfig(seed=0, n_replicates=0)


class TestFieldSampleValidation:
    def test_length_mismatch(self):
        loc = Locations(dim=1, points=np.array([[0.0], [1.0]]))
        with pytest.raises(ValueError):
            FieldSample(locations=loc, values=np.array([1.0]))

    def test_nonfinite_rejected(self):
        loc = Locations(dim=1, points=np.array([[0.0]]))
        with pytest.raises(ValueError):
            FieldSample(locations=loc, values=np.array([math.nan]))


class TestCsvRoundTrip:
    def test_full_precision(self, tmp_path):
        loc = sample_uniform_locations(17, [0.0, 0.0], [3.0, 3.0], seed=21)
        out = simulate(EXP_KERNEL_2D, loc, SimulationConfig(seed=21, n_replicates=1))
        sample = out.samples[0]
        path = tmp_path / "sample.csv"
        write_sample_csv(sample, path)
        back = read_sample_csv(path)
        assert np.array_equal(back.locations.points, sample.locations.points)
        assert np.array_equal(back.values, sample.values)
        assert back.locations.dim == 2

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_sample_csv(path)
