import numpy as np
import pytest

from bcdlms.datamodel import (COMPLEX_NOISE_SCALE, DataStream, SystemProfile,
                              complex_profile, load_table1, profile_from_dict,
                              profile_to_dict, table1_profile)


def tiny_profile(sigma_n=0.04, sigma_v=0.01, field="real", m=2, n=3, w=None):
    if w is None:
        w = np.ones(m) if field == "real" else (1 + 1j) * np.ones(m)
    return SystemProfile(
        w_o=w,
        regressor_cov=np.tile(np.eye(m), (n, 1, 1)),
        regression_noise_var=np.full(n, sigma_n),
        output_noise_var=np.full(n, sigma_v),
        field=field,
    )


class TestTable1Profile:
    def test_node_values(self):
        p = table1_profile()
        assert p.num_nodes == 20 and p.dim == 2
        assert p.output_noise_var[0] == 0.0230
        assert p.regression_noise_var[0] == 0.0170
        assert p.output_noise_var[6] == 0.0120
        assert p.regression_noise_var[6] == 0.0560
        assert p.output_noise_var[19] == 0.0460
        assert p.regression_noise_var[19] == 0.0160

    def test_regressor_power_column_sets_per_entry_power(self):
        t = load_table1()
        p = table1_profile()
        for k in (0, 6, 19):
            assert p.regressor_cov[k][0, 0].real == t["regressor_power"][k]
            assert np.allclose(p.regressor_cov[k],
                               t["regressor_power"][k] * np.eye(2))

    def test_true_parameter(self):
        p = table1_profile()
        assert np.allclose(p.w_o, np.ones(2) / np.sqrt(2))
        assert p.field == "real" and p.beta == 2.0


class TestComplexProfile:
    def test_parameter_energy(self):
        p = complex_profile()
        assert np.allclose(p.w_o, (2 + 2j) * np.ones(5))
        assert np.vdot(p.w_o, p.w_o).real == pytest.approx(40.0)

    def test_energy_ratio_is_twenty(self):
        p = complex_profile()
        for k in range(p.num_nodes):
            tr = np.trace(p.regressor_cov[k]).real
            assert tr / (p.dim * p.regression_noise_var[k]) == pytest.approx(20.0)

    def test_noise_levels_scale_table1_column(self):
        t = load_table1()
        p = complex_profile()
        assert np.allclose(p.regression_noise_var,
                           COMPLEX_NOISE_SCALE * t["regression_noise_var"])

    def test_noise_dominance_margin(self):
        # adaptive variance estimation needs sigma2_n |w|^2 >> sigma2_v
        assert complex_profile().assumption2_ratio().min() >= 10.0

    def test_beta(self):
        assert complex_profile().beta == 1.0


class TestDraws:
    def test_noiseless_degenerate(self):
        p = tiny_profile(sigma_n=0.0, sigma_v=0.0)
        block = DataStream(p, seed=1).draw_block(16)
        assert np.array_equal(block.z, block.u)
        assert np.allclose(block.d, block.u @ p.w_o, atol=0)

    def test_observation_consistency(self):
        p = tiny_profile()
        obs = DataStream(p, seed=2).draw(0)
        assert len(obs) == p.num_nodes
        for o in obs:
            u, n, v = o.latent()
            assert np.array_equal(o.z, u + n)
            assert o.d == complex(u @ p.w_o + v)

    def test_sequential_draw_enforced(self):
        stream = DataStream(tiny_profile(), seed=3)
        stream.draw(0)
        with pytest.raises(ValueError):
            stream.draw(5)

    def test_block_size_invariance(self):
        p = tiny_profile(field="complex")
        a = DataStream(p, seed=4)
        b = DataStream(p, seed=4)
        one = a.draw_block(20)
        first, second = b.draw_block(7), b.draw_block(13)
        assert np.array_equal(one.z, np.concatenate([first.z, second.z]))
        assert np.array_equal(one.d, np.concatenate([first.d, second.d]))

    def test_determinism_and_trial_keys(self):
        p = tiny_profile()
        a = DataStream(p, seed=5, trial_key=(3,)).draw_block(8)
        b = DataStream(p, seed=5, trial_key=(3,)).draw_block(8)
        c = DataStream(p, seed=5, trial_key=(4,)).draw_block(8)
        assert np.array_equal(a.z, b.z) and np.array_equal(a.d, b.d)
        assert not np.array_equal(a.z, c.z)

    def test_colored_regressors(self):
        cov = np.array([[2.0, 0.5], [0.5, 1.0]])
        p = SystemProfile(np.ones(2), np.tile(cov, (2, 1, 1)),
                          np.full(2, 0.01), np.full(2, 0.01), field="real")
        block = DataStream(p, seed=6).draw_block(200_000)
        sample = np.einsum("ia,ib->ab", block.u[:, 0].conj(), block.u[:, 0]).real / len(block)
        assert np.abs(sample - cov).max() < 0.05


class TestMoments:
    def test_table1_node7_sample_moments(self):
        p = table1_profile()
        block = DataStream(p, seed=7).draw_block(100_000)
        k = 6  # node 7
        s = len(block)
        var_v = (np.abs(block.v[:, k]) ** 2).mean()
        se_v = (np.abs(block.v[:, k]) ** 2).std() / np.sqrt(s)
        assert abs(var_v - p.output_noise_var[k]) <= 3 * se_v
        power_u = (np.abs(block.u[:, k]) ** 2).sum(axis=1)
        se_u = power_u.std() / np.sqrt(s)
        assert abs(power_u.mean() - np.trace(p.regressor_cov[k]).real) <= 3 * se_u
        power_n = (np.abs(block.n[:, k]) ** 2).mean(axis=0)
        se_n = (np.abs(block.n[:, k]) ** 2).std(axis=0) / np.sqrt(s)
        assert (np.abs(power_n - p.regression_noise_var[k]) <= 3 * se_n).all()

    def test_noisy_covariance_adds_noise_floor(self):
        # empirical E[z^* z] tracks R_u + sigma2_n I
        p = tiny_profile(sigma_n=0.25)
        block = DataStream(p, seed=8).draw_block(150_000)
        z = block.z[:, 1]
        sample = np.einsum("ia,ib->ab", z.conj(), z).real / len(block)
        expected = np.eye(2) * (1.0 + 0.25)
        assert np.abs(sample - expected).max() < 0.03

    def test_cross_moment_unaffected_by_regression_noise(self):
        # E[d z^*] == E[d u^*] = R_u w_o
        p = tiny_profile(sigma_n=0.25)
        block = DataStream(p, seed=9).draw_block(150_000)
        z, d = block.z[:, 0], block.d[:, 0]
        r_dz = (d[:, None] * z.conj()).mean(axis=0)
        expected = p.regressor_cov[0] @ p.w_o
        se = (np.abs(d[:, None] * z.conj())).std(axis=0) / np.sqrt(len(block))
        assert (np.abs(r_dz - expected) <= 3 * se).all()

    def test_independence(self):
        p = tiny_profile(sigma_n=0.2, sigma_v=0.3)
        block = DataStream(p, seed=10).draw_block(100_000)
        s = len(block)
        for a, b in [(block.u[:, 0, 0], block.n[:, 0, 0]),
                     (block.u[:, 0, 0], block.v[:, 0]),
                     (block.n[:, 0, 0], block.v[:, 0]),
                     (block.u[:, 0, 0], block.u[:, 1, 0])]:
            corr = (a * b.conj()).mean()
            se = np.abs(a * b.conj()).std() / np.sqrt(s)
            assert abs(corr) <= 3 * se

    def test_complex_circularity(self):
        p = complex_profile()
        block = DataStream(p, seed=11).draw_block(60_000)
        z = block.z[:, 4]
        pseudo = np.einsum("ia,ib->ab", z, z) / len(block)
        power = np.einsum("ia,ib->ab", z.conj(), z).real / len(block)
        assert np.abs(pseudo).max() < 0.05 * np.abs(power).max()


class TestParameterChanges:
    def test_change_at_zero_equals_fresh_construction(self):
        p = tiny_profile()
        changed = DataStream(p, seed=12)
        changed.change_parameters(2.0 * p.w_o, at_iteration=0)
        fresh = DataStream(tiny_profile(w=2.0 * np.ones(2)), seed=12)
        a, b = changed.draw_block(10), fresh.draw_block(10)
        assert np.array_equal(a.d, b.d)
        assert np.array_equal(a.z, b.z)

    def test_change_to_same_parameter_is_identity(self):
        p = tiny_profile()
        changed = DataStream(p, seed=13)
        changed.change_parameters(p.w_o, at_iteration=5)
        plain = DataStream(p, seed=13)
        assert np.array_equal(changed.draw_block(12).d, plain.draw_block(12).d)

    def test_mid_stream_switch(self):
        p = tiny_profile()
        stream = DataStream(p, seed=14)
        stream.change_parameters(2.0 * p.w_o, at_iteration=4)
        block = stream.draw_block(8)
        assert np.allclose(block.d[:4], np.einsum("ikm,m->ik", block.u[:4], p.w_o)
                           + block.v[:4])
        assert np.allclose(block.d[4:], np.einsum("ikm,m->ik", block.u[4:], 2 * p.w_o)
                           + block.v[4:])
        assert np.array_equal(block.w_o_active[4], 2.0 * p.w_o)

    def test_past_change_rejected(self):
        stream = DataStream(tiny_profile(), seed=15)
        stream.draw_block(6)
        with pytest.raises(ValueError):
            stream.change_parameters(np.ones(2), at_iteration=2)


class TestProfileValidation:
    def test_round_trip(self):
        p = complex_profile()
        back = profile_from_dict(profile_to_dict(p))
        assert np.array_equal(back.w_o, p.w_o)
        assert np.array_equal(back.regressor_cov, p.regressor_cov)
        assert back.field == p.field

    def test_rejects_non_hermitian_covariance(self):
        cov = np.tile(np.array([[1.0, 0.4], [0.0, 1.0]]), (2, 1, 1))
        with pytest.raises(ValueError):
            SystemProfile(np.ones(2), cov, np.full(2, 0.1), np.full(2, 0.1))

    def test_rejects_indefinite_covariance(self):
        cov = np.tile(np.diag([1.0, -0.1]), (2, 1, 1))
        with pytest.raises(ValueError):
            SystemProfile(np.ones(2), cov, np.full(2, 0.1), np.full(2, 0.1))

    def test_rejects_complex_truth_in_real_field(self):
        with pytest.raises(ValueError):
            tiny_profile(field="real", w=(1 + 1j) * np.ones(2))
