import numpy as np
import pytest
from scipy.stats import chisquare

from spincat.analytics import uhlmann_fidelity
from spincat.code import spin_cat_codewords
from spincat.spinops import D52, SpinError, rotation_x
from spincat.tomography import (
    MeasurementRecord,
    MeasurementSetting,
    born_probabilities,
    bootstrap_fidelity,
    default_settings,
    exact_records,
    measurement_map_rank,
    mle_reconstruct,
    mle_result_to_json,
    projector_set,
    records_from_jsonl,
    records_to_jsonl,
    simulate_measurements,
)


def fig2_state():
    pair = spin_cat_codewords(D52)
    psi = (pair.zero - 1j * pair.one) / np.sqrt(2)
    return np.outer(psi, psi.conj())


class TestProjectors:
    def test_bare_setting_gives_basis_projectors(self):
        groups = projector_set(D52, [MeasurementSetting(0.0, 0.0)])
        for k in range(6):
            expected = np.zeros((6, 6))
            expected[k, k] = 1
            assert np.max(np.abs(groups[0].projectors[k] - expected)) < 1e-12

    def test_each_group_resolves_identity(self):
        for group in projector_set(D52, default_settings()):
            total = group.projectors.sum(axis=0)
            assert np.max(np.abs(total - np.eye(6))) < 1e-12

    def test_orthogonality_within_group(self):
        group = projector_set(D52, [MeasurementSetting(np.pi / 4, np.pi / 2)])[0]
        p = group.projectors
        for a in range(6):
            for b in range(6):
                prod = p[a] @ p[b]
                target = p[a] if a == b else np.zeros((6, 6))
                assert np.max(np.abs(prod - target)) < 1e-12

    def test_default_grid_rank(self):
        # any 9 settings of the product form Ry Rx contribute at most
        # 1+3+5+7+9+9 = 34 of the 36 Hermitian dimensions (the rank-4 and
        # rank-5 multipole sectors need 9 and 11 vectors but get one per
        # setting), and the special pi/4, pi/2 angles degenerate further to 29;
        # reconstruction of near-pure states still works through positivity
        groups = projector_set(D52, default_settings())
        assert sum(g.projectors.shape[0] for g in groups) == 54
        assert measurement_map_rank(groups) == 29

    def test_denser_grid_reaches_full_rank(self):
        from itertools import product as iproduct
        angles = np.linspace(0, np.pi / 2, 4)
        settings = [MeasurementSetting(tx, ty) for tx, ty in iproduct(angles, angles)]
        assert measurement_map_rank(projector_set(D52, settings)) == 36

    def test_born_oracle_for_reference_state(self):
        # direct Tr(P rho) evaluated independently, element by element
        rho = fig2_state()
        group = projector_set(D52, [MeasurementSetting(np.pi / 2, 0.0)])[0]
        p = born_probabilities(rho, group)
        for k in range(6):
            direct = float(np.real(np.trace(group.projectors[k] @ rho)))
            assert p[k] == pytest.approx(direct, abs=1e-12)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_empty_settings_rejected(self):
        with pytest.raises(SpinError):
            projector_set(D52, [])


class TestSimulateMeasurements:
    def test_eigenstate_all_counts_in_one_outcome(self, rng):
        rho = np.zeros((6, 6), dtype=complex)
        rho[0, 0] = 1  # m = +5/2
        recs = simulate_measurements(rho, D52, [MeasurementSetting(0, 0)], 500, rng)
        assert recs[0].counts[0] == 500

    def test_maximally_mixed_uniform(self, rng):
        rho = np.eye(6, dtype=complex) / 6
        recs = simulate_measurements(rho, D52, [MeasurementSetting(0.4, 1.0)],
                                     6000, rng)
        stat = chisquare(recs[0].counts)
        assert stat.pvalue > 0.001

    def test_counts_sum_to_shots(self, rng):
        recs = simulate_measurements(fig2_state(), D52, default_settings(), 200, rng)
        assert all(sum(r.counts) == 200 for r in recs)
        assert len(recs) == 9

    def test_record_invariant(self):
        with pytest.raises(SpinError):
            MeasurementRecord(MeasurementSetting(0, 0), (5, 5), 11)


class TestMLE:
    def test_infinite_shot_pure_state(self):
        records = exact_records(fig2_state(), D52, default_settings(), 200)
        result = mle_reconstruct(records, D52)
        assert uhlmann_fidelity(result.rho_est, fig2_state()) > 0.9999

    def test_maximally_mixed_fixed_point(self):
        rho = np.eye(6, dtype=complex) / 6
        records = exact_records(rho, D52, default_settings(), 200)
        result = mle_reconstruct(records, D52)
        assert np.max(np.abs(result.rho_est - rho)) < 1e-6

    def test_output_is_physical(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(), 200, rng)
        result = mle_reconstruct(records, D52)
        assert np.real(np.trace(result.rho_est)) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(result.rho_est).min() > -1e-10

    def test_loglikelihood_monotone(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(), 200, rng)
        result = mle_reconstruct(records, D52, keep_path=True)
        path = result.log_likelihood_path
        assert path is not None and len(path) > 2
        assert np.all(np.diff(path) >= -1e-9)

    def test_finite_sample_quality(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(), 200, rng)
        result = mle_reconstruct(records, D52)
        assert result.converged
        assert uhlmann_fidelity(result.rho_est, fig2_state()) > 0.98

    def test_rank_deficient_flagged(self, rng):
        records = simulate_measurements(fig2_state(), D52,
                                        [MeasurementSetting(0, 0)], 200, rng)
        result = mle_reconstruct(records, D52)
        assert result.rank_deficient

    def test_readout_error_pulls_toward_mixed(self):
        clean, noisy = [], []
        for seed in range(5):
            r1 = np.random.default_rng(seed)
            recs = simulate_measurements(fig2_state(), D52, default_settings(),
                                         200, r1)
            clean.append(uhlmann_fidelity(mle_reconstruct(recs, D52).rho_est,
                                          fig2_state()))
            r2 = np.random.default_rng(seed)
            recs = simulate_measurements(fig2_state(), D52, default_settings(),
                                         200, r2, readout_error_rate=0.2)
            noisy.append(uhlmann_fidelity(mle_reconstruct(recs, D52).rho_est,
                                          fig2_state()))
        assert np.median(noisy) < np.median(clean)

    def test_rotation_covariance_statistical(self):
        # reconstructing a rotated state should do as well as the original
        u = rotation_x(D52, 0.6).matrix
        rho_rot = u @ fig2_state() @ u.conj().T
        fids = []
        for seed in range(5):
            r = np.random.default_rng(100 + seed)
            recs = simulate_measurements(rho_rot, D52, default_settings(), 200, r)
            est = mle_reconstruct(recs, D52).rho_est
            fids.append(uhlmann_fidelity(est, rho_rot))
        assert np.median(fids) > 0.98

    def test_empty_records_rejected(self):
        with pytest.raises(SpinError):
            mle_reconstruct([], D52)


class TestBootstrap:
    def test_zero_sampling_noise_collapses(self, rng):
        records = exact_records(fig2_state(), D52, default_settings(), 200)
        est = mle_reconstruct(records, D52).rho_est
        _, sigma_f = bootstrap_fidelity(est, fig2_state(), D52, default_settings(),
                                        200, rng, resamples=5, exact=True)
        assert sigma_f < 1e-6

    def test_finite_shot_spread_in_expected_decade(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(),
                                        200, rng)
        est = mle_reconstruct(records, D52).rho_est
        f, sigma_f = bootstrap_fidelity(est, fig2_state(), D52, default_settings(),
                                        200, rng, resamples=40)
        assert 1e-4 < sigma_f < 1e-2
        assert 0.97 < f <= 1.0

    def test_needs_two_resamples(self, rng):
        with pytest.raises(SpinError):
            bootstrap_fidelity(fig2_state(), fig2_state(), D52, default_settings(),
                               200, rng, resamples=1)


class TestSerialization:
    def test_records_jsonl_round_trip(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(),
                                        50, rng)
        text = records_to_jsonl(records)
        assert len(text.splitlines()) == 9
        back = records_from_jsonl(text)
        assert back == records

    def test_mle_json_contains_full_matrix(self, rng):
        records = simulate_measurements(fig2_state(), D52, default_settings(),
                                        50, rng)
        result = mle_reconstruct(records, D52)
        import json
        payload = json.loads(mle_result_to_json(result))
        assert len(payload["rho_est"]) == 6
        assert len(payload["rho_est"][0][0]) == 2
