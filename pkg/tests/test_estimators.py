import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone

from propdoa import (
    AngularSpectrum,
    ArrayConfig,
    EspritDoA,
    ExtendedPropagatorDoA,
    MusicDoA,
    PropagatorDoA,
    Scenario,
    channel_matrix,
    eigen_subspaces,
    esprit,
    estimate_for_method,
    estimator_from_method_id,
    extended_propagator,
    find_peaks,
    make_partition,
    music_spectrum,
    parse_method_id,
    sample_covariance,
    scan_grid,
    simulate_snapshots,
    spectrum_for_method,
    spectrum_from_operator,
    theoretical_covariance,
)
from propdoa.estimators import SPECTRUM_CEILING

BENCHMARK_ANGLES = (10.0, 21.0, 45.0)


def noiseless_gamma(n, angles, noise=0.0, spacing=0.5):
    config = ArrayConfig(n, spacing)
    a = channel_matrix(config, angles)
    return theoretical_covariance(a, [1.0] * len(angles), noise), config


class TestScanGrid:
    def test_default_has_1799_points(self):
        grid = scan_grid()
        assert grid.size == 1799
        assert grid[0] == pytest.approx(-89.9, abs=1e-9)
        assert grid[-1] == pytest.approx(89.9, abs=1e-9)

    def test_endpoints_always_excluded(self):
        grid = scan_grid(-90.0, 90.0, 30.0)
        np.testing.assert_allclose(grid, [-60.0, -30.0, 0.0, 30.0, 60.0], atol=1e-9)

    def test_custom_window(self):
        grid = scan_grid(0.0, 10.0, 2.5)
        np.testing.assert_allclose(grid, [0.0, 2.5, 5.0, 7.5, 10.0], atol=1e-12)

    @pytest.mark.parametrize("kwargs", [dict(step=0.0), dict(step=-1.0), dict(start=10.0, stop=0.0)])
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            scan_grid(**kwargs)


class TestEigenSubspaces:
    def test_identity_covariance(self):
        from propdoa import CovarianceEstimate

        sub = eigen_subspaces(CovarianceEstimate(np.eye(5)), 2)
        np.testing.assert_allclose(sub.eigenvalues, np.ones(5))
        assert sub.signal_basis.shape == (5, 2)
        assert sub.noise_basis.shape == (5, 3)

    def test_noiseless_trailing_eigenvalues_vanish(self):
        gamma, _ = noiseless_gamma(10, [-15.0, 30.0])
        sub = eigen_subspaces(gamma, 2)
        assert np.all(np.diff(sub.eigenvalues) <= 1e-12)
        assert np.all(np.abs(sub.eigenvalues[2:]) <= 1e-10 * sub.eigenvalues[0])

    def test_noise_floor_eigenvalues(self):
        gamma, _ = noiseless_gamma(8, [5.0, -40.0], noise=0.25)
        sub = eigen_subspaces(gamma, 2)
        np.testing.assert_allclose(sub.eigenvalues[2:], 0.25, atol=1e-8)

    def test_completeness_identity(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((7, 30)) + 1j * rng.standard_normal((7, 30))
        sub = eigen_subspaces(sample_covariance(x), 3)
        stitched = (
            sub.signal_basis @ sub.signal_basis.conj().T
            + sub.noise_basis @ sub.noise_basis.conj().T
        )
        np.testing.assert_allclose(stitched, np.eye(7), atol=1e-10)
        gram_s = sub.signal_basis.conj().T @ sub.signal_basis
        np.testing.assert_allclose(gram_s, np.eye(3), atol=1e-10)

    def test_rejects_bad_source_count(self):
        gamma, _ = noiseless_gamma(5, [10.0])
        with pytest.raises(ValueError):
            eigen_subspaces(gamma, 5)


class TestSpectrumFromOperator:
    def test_worked_example_peak_at_source(self):
        gamma, config = noiseless_gamma(3, [20.0])
        psi = extended_propagator(gamma, make_partition(3, 1, 3), 1)
        spectrum = spectrum_from_operator(psi, config, scan_grid())
        top = spectrum.grid_deg[np.argmax(spectrum.values)]
        assert top == pytest.approx(20.0, abs=1e-9)

    def test_benchmark_scenario_exact_grid_peaks(self):
        gamma, config = noiseless_gamma(18, BENCHMARK_ANGLES)
        psi = extended_propagator(gamma, make_partition(18, 3, 4), 1)
        spectrum = spectrum_from_operator(psi, config, scan_grid())
        got = find_peaks(spectrum, 3).angles_deg
        np.testing.assert_allclose(got, BENCHMARK_ANGLES, atol=1e-9)

    def test_values_clamped_finite(self):
        gamma, config = noiseless_gamma(3, [20.0])
        psi = extended_propagator(gamma, make_partition(3, 1, 3), 1)
        spectrum = spectrum_from_operator(psi, config, scan_grid())
        assert np.all(np.isfinite(spectrum.values))
        assert spectrum.values.max() <= SPECTRUM_CEILING

    def test_zero_quadratic_form_hits_documented_ceiling(self):
        config = ArrayConfig(4)
        spectrum = spectrum_from_operator(np.zeros((2, 4)), config, scan_grid(step=10.0))
        assert np.all(spectrum.values == SPECTRUM_CEILING)
        assert np.all(np.isfinite(spectrum.values))

    def test_method_id_inherited_from_operator(self):
        gamma, config = noiseless_gamma(6, [0.0, 30.0])
        psi = extended_propagator(gamma, make_partition(6, 2, 3), 2)
        spectrum = spectrum_from_operator(psi, config, scan_grid(step=1.0))
        assert spectrum.method_id == "psi:3:2"

    def test_rejects_operator_config_mismatch(self):
        gamma, _ = noiseless_gamma(6, [0.0, 30.0])
        psi = extended_propagator(gamma, make_partition(6, 2, 3), 1)
        with pytest.raises(ValueError):
            spectrum_from_operator(psi, ArrayConfig(5), scan_grid(step=1.0))


class TestMusicSpectrum:
    def test_matches_direct_quadratic_form(self):
        gamma, config = noiseless_gamma(8, [-12.0, 37.0], noise=0.1)
        grid = scan_grid(step=5.0)
        spectrum = music_spectrum(gamma, 2, config, grid)
        sub = eigen_subspaces(gamma, 2)
        for idx, angle in enumerate(grid):
            a = channel_matrix(config, [angle]).entries[:, 0]
            quad = (a.conj() @ sub.noise_basis @ sub.noise_basis.conj().T @ a).real
            assert spectrum.values[idx] == pytest.approx(1.0 / quad, rel=1e-9)

    def test_noiseless_exact_recovery(self):
        gamma, config = noiseless_gamma(18, BENCHMARK_ANGLES)
        spectrum = music_spectrum(gamma, 3, config, scan_grid())
        got = find_peaks(spectrum, 3).angles_deg
        np.testing.assert_allclose(got, BENCHMARK_ANGLES, atol=1e-9)

    def test_single_noise_vector_still_yields_p_peaks(self):
        gamma, config = noiseless_gamma(4, [-20.0, 5.0, 40.0], noise=0.01)
        spectrum = music_spectrum(gamma, 3, config, scan_grid())
        assert len(find_peaks(spectrum, 3).angles_deg) == 3


class TestEsprit:
    def test_single_source_broadside(self):
        gamma, config = noiseless_gamma(5, [0.0])
        est = esprit(gamma, 1, config)
        assert est.angles_deg[0] == pytest.approx(0.0, abs=1e-9)

    def test_benchmark_scenario_noiseless(self):
        gamma, config = noiseless_gamma(18, BENCHMARK_ANGLES)
        est = esprit(gamma, 3, config)
        np.testing.assert_allclose(est.angles_deg, BENCHMARK_ANGLES, atol=1e-6)

    def test_plus_thirty_sign_convention(self):
        gamma, config = noiseless_gamma(6, [30.0])
        assert esprit(gamma, 1, config).angles_deg[0] == pytest.approx(30.0, abs=1e-9)

    def test_invariant_to_covariance_scaling(self):
        gamma, config = noiseless_gamma(12, BENCHMARK_ANGLES, noise=0.2)
        from propdoa import CovarianceEstimate

        scaled = CovarianceEstimate(7.3 * gamma.entries)
        np.testing.assert_allclose(
            esprit(gamma, 3, config).angles_deg,
            esprit(scaled, 3, config).angles_deg,
            atol=1e-10,
        )

    def test_smaller_subarray_within_unambiguous_range(self):
        # displacement N-m = 2 halves the unambiguous field of view
        gamma, config = noiseless_gamma(10, [-7.0, 6.5])
        est = esprit(gamma, 2, config, subarray_size=8)
        np.testing.assert_allclose(est.angles_deg, [-7.0, 6.5], atol=1e-6)
        assert est.method_id == "esprit:8"

    def test_snapshot_block_route(self):
        config = ArrayConfig(12)
        sc = Scenario(angles_deg=BENCHMARK_ANGLES, snr_db=40.0, snapshots=400, seed=21)
        block = simulate_snapshots(config, sc)
        from_svd = esprit(block, 3, config)
        from_cov = esprit(sample_covariance(block), 3, config)
        np.testing.assert_allclose(from_svd.angles_deg, from_cov.angles_deg, atol=1e-6)

    @pytest.mark.parametrize("m", [2, 18, 99])
    def test_rejects_subarray_out_of_range(self, m):
        gamma, config = noiseless_gamma(18, BENCHMARK_ANGLES)
        with pytest.raises(ValueError):
            esprit(gamma, 3, config, subarray_size=m)

    def test_rejects_non_square_plain_array(self):
        config = ArrayConfig(4)
        with pytest.raises(ValueError):
            esprit(np.zeros((4, 10), dtype=complex), 1, config)

    def test_rejects_too_few_snapshots_for_subspace(self):
        config = ArrayConfig(6)
        sc = Scenario(angles_deg=(3.0, 30.0), snr_db=20.0, snapshots=1, seed=2)
        block = simulate_snapshots(config, sc)
        with pytest.raises(ValueError):
            esprit(block, 2, config)


class TestFindPeaks:
    def grid_spectrum(self, values):
        grid = np.arange(len(values), dtype=float)
        return AngularSpectrum(grid_deg=grid, values=np.asarray(values, float), method_id="t")

    def test_single_peak(self):
        s = self.grid_spectrum([0.0, 1.0, 5.0, 1.0, 0.0])
        assert find_peaks(s, 1).angles_deg == (2.0,)

    def test_plateau_breaks_toward_smaller_angle(self):
        s = self.grid_spectrum([0.0, 3.0, 3.0, 3.0, 0.0])
        assert find_peaks(s, 1).angles_deg == (1.0,)

    def test_fills_from_highest_remaining_values(self):
        s = self.grid_spectrum([0.0, 5.0, 0.0, 4.0, 4.0])
        # one strict maximum (idx 1); idx 3 fills by value, tie toward smaller
        assert find_peaks(s, 2).angles_deg == (1.0, 3.0)

    def test_ranked_by_value_not_position(self):
        s = self.grid_spectrum([0.0, 2.0, 0.0, 9.0, 0.0, 5.0, 0.0])
        assert find_peaks(s, 2).angles_deg == (3.0, 5.0)

    def test_rejects_more_peaks_than_grid(self):
        s = self.grid_spectrum([0.0, 1.0, 0.0])
        with pytest.raises(ValueError):
            find_peaks(s, 4)

    def test_rejects_tiny_grid(self):
        s = AngularSpectrum(grid_deg=np.array([0.0, 1.0]), values=np.array([1.0, 2.0]), method_id="t")
        with pytest.raises(ValueError):
            find_peaks(s, 1)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(min_value=0.0, max_value=1e6), min_size=3, max_size=40),
           st.integers(min_value=1, max_value=3))
    def test_result_sorted_within_grid(self, values, n_peaks):
        s = self.grid_spectrum(values)
        got = find_peaks(s, n_peaks).angles_deg
        assert len(got) == n_peaks
        assert list(got) == sorted(got)
        assert all(0.0 <= a <= len(values) - 1 for a in got)
        assert len(set(got)) == n_peaks


class TestMethodGrammar:
    @pytest.mark.parametrize("token, kind", [
        ("prop", "prop"), ("prop-q1", "prop-q1"), ("prop-q2", "prop-q2"),
        ("music", "music"), ("esprit", "esprit"),
    ])
    def test_fixed_ids(self, token, kind):
        spec = parse_method_id(token)
        assert spec.method_id == token
        assert spec.kind == kind

    def test_psi_ids(self):
        spec = parse_method_id("psi:4:2")
        assert (spec.order, spec.block) == (4, 2)
        assert spec.method_id == "psi:4:2"
        assert spec.spectral

    def test_esprit_with_subarray(self):
        spec = parse_method_id("esprit:12")
        assert spec.subarray == 12
        assert not spec.spectral

    @pytest.mark.parametrize("bad", [
        "psi", "psi:1:1", "psi:3:4", "psi:3:0", "psi:a:b", "esprit:0",
        "esprit:x", "q1", "", "music:3", "prop-q3",
    ])
    def test_rejects_malformed_ids(self, bad):
        with pytest.raises(ValueError):
            parse_method_id(bad)

    def test_estimate_for_method_noiseless_consistency(self):
        # every propagator in the catalog, the classical variants, and the
        # baselines all recover the true angles on noiseless data
        from propdoa import enumerate_operators

        gamma, config = noiseless_gamma(10, [-11.0, 24.0])
        grid = scan_grid()
        step = 0.1
        methods = ["prop", "prop-q1", "prop-q2", "music"]
        methods += [f"psi:{n}:{i}" for n, i in enumerate_operators(10, 2).entries]
        for method in methods:
            got = estimate_for_method(method, gamma, 2, config, grid).angles_deg
            np.testing.assert_allclose(got, [-11.0, 24.0], atol=step / 2 + 1e-9, err_msg=method)
        got = estimate_for_method("esprit", gamma, 2, config, grid).angles_deg
        np.testing.assert_allclose(got, [-11.0, 24.0], atol=1e-6)

    def test_spectrum_for_method_rejects_esprit(self):
        gamma, config = noiseless_gamma(6, [0.0, 30.0])
        with pytest.raises(ValueError):
            spectrum_for_method("esprit", gamma, 2, config, scan_grid())


class TestSklearnEstimators:
    def fit_data(self, seed=31, snr=30.0):
        config = ArrayConfig(12)
        sc = Scenario(angles_deg=(-10.0, 23.0), snr_db=snr, snapshots=300, seed=seed)
        return simulate_snapshots(config, sc)

    def test_music_fit_attributes(self):
        block = self.fit_data()
        est = MusicDoA(n_sources=2).fit(block.samples.T)
        assert est.n_sensors_ == 12
        np.testing.assert_allclose(est.angles_, [-10.0, 23.0], atol=0.2)
        assert est.spectrum_.method_id == "music"
        assert est.method_id_ == "music"

    def test_snapshot_block_and_transposed_array_agree(self):
        block = self.fit_data()
        a = MusicDoA(n_sources=2).fit(block)
        b = MusicDoA(n_sources=2).fit(block.samples.T)
        np.testing.assert_array_equal(a.angles_, b.angles_)

    def test_extended_propagator_estimator(self):
        block = self.fit_data()
        est = ExtendedPropagatorDoA(n_sources=2, order=3, block=1).fit(block)
        np.testing.assert_allclose(est.angles_, [-10.0, 23.0], atol=0.2)
        assert est.method_id_ == "psi:3:1"

    def test_propagator_variants(self):
        block = self.fit_data()
        for variant in ("q", "q1", "q2"):
            est = PropagatorDoA(n_sources=2, variant=variant).fit(block)
            np.testing.assert_allclose(est.angles_, [-10.0, 23.0], atol=0.2)
        with pytest.raises(ValueError):
            PropagatorDoA(n_sources=2, variant="q3").fit(block)

    def test_esprit_estimator_and_fit_predict(self):
        block = self.fit_data()
        est = EspritDoA(n_sources=2)
        angles = est.fit_predict(block)
        np.testing.assert_allclose(angles, [-10.0, 23.0], atol=0.2)
        assert not hasattr(est, "spectrum_")

    def test_get_params_set_params_clone(self):
        est = ExtendedPropagatorDoA(n_sources=3, order=4, block=2, grid_step=0.5)
        params = est.get_params()
        assert params["order"] == 4 and params["block"] == 2
        est.set_params(order=5)
        assert est.order == 5
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_rejects_bad_input_shapes(self):
        est = MusicDoA(n_sources=1)
        with pytest.raises(ValueError):
            est.fit(np.zeros(5))
        with pytest.raises(ValueError):
            est.fit(np.full((4, 3), np.nan))

    def test_factory_builds_matching_types(self):
        assert isinstance(estimator_from_method_id("music", 2), MusicDoA)
        assert isinstance(estimator_from_method_id("esprit:9", 2), EspritDoA)
        assert estimator_from_method_id("esprit:9", 2).subarray_size == 9
        psi = estimator_from_method_id("psi:4:3", 2)
        assert isinstance(psi, ExtendedPropagatorDoA)
        assert (psi.order, psi.block) == (4, 3)
        prop = estimator_from_method_id("prop-q1", 2)
        assert isinstance(prop, PropagatorDoA) and prop.variant == "q1"

    def test_factory_estimates_match_functional_route(self):
        block = self.fit_data()
        gamma = sample_covariance(block)
        config = ArrayConfig(12)
        grid = scan_grid()
        for method in ("music", "psi:3:2", "prop", "esprit"):
            est = estimator_from_method_id(method, 2).fit(block)
            want = estimate_for_method(method, gamma, 2, config, grid).angles_deg
            np.testing.assert_allclose(est.angles_, want, atol=1e-12, err_msg=method)
