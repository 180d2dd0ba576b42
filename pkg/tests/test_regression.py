import math

import numpy as np
import pytest

from growstat import regression as rg
from growstat._kernels import log_chi_mgf
from growstat.errors import ZeroResidualError


def make_data(rng, n=12, d=3, delta=0.6, sigma=1.0, beta=None):
    z = rng.normal(0, 1, (n, d))
    x = rng.normal(0, 1, n)
    beta = rng.normal(0, 1, d) if beta is None else beta
    y = delta * sigma * x + z @ beta + sigma * rng.standard_normal(n)
    return rg.RegressionData(y=y, x=x, z=z)


class TestResidualBasis:
    def test_standard_basis_covariates(self):
        n, d = 6, 2
        z = np.eye(n)[:, :d]
        basis = rg.residual_basis(z)
        a = basis.a_mat
        assert np.allclose(a.T @ a, np.eye(n - d), atol=1e-12)
        proj = np.eye(n) - z @ np.linalg.solve(z.T @ z, z.T)
        assert np.allclose(a @ a.T, proj, atol=1e-10)

    def test_random_covariates(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n, d = 11, 3
            z = rng.normal(0, 1, (n, d))
            a = rg.residual_basis(z).a_mat
            assert np.max(np.abs(a.T @ a - np.eye(n - d))) < 1e-12
            proj = np.eye(n) - z @ np.linalg.solve(z.T @ z, z.T)
            assert np.max(np.abs(a @ a.T - proj)) < 1e-10

    def test_deterministic_sign_convention(self):
        rng = np.random.default_rng(1)
        z = rng.normal(0, 1, (9, 2))
        a1 = rg.residual_basis(z).a_mat
        a2 = rg.residual_basis(z.copy()).a_mat
        assert np.array_equal(a1, a2)

    def test_rank_deficient(self):
        z = np.ones((8, 2))
        with pytest.raises(ValueError):
            rg.residual_basis(z)


class TestUStatistic:
    def test_unit_norm(self):
        rng = np.random.default_rng(2)
        data = make_data(rng)
        u = rg.u_statistic(data, rg.residual_basis(data.z))
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-12)

    def test_zero_residual(self):
        rng = np.random.default_rng(3)
        z = rng.normal(0, 1, (9, 2))
        y = z @ np.array([1.0, -2.0])
        data = rg.RegressionData(y=y, x=rng.normal(0, 1, 9), z=z)
        with pytest.raises(ZeroResidualError):
            rg.u_statistic(data, rg.residual_basis(z))

    def test_group_invariance(self):
        rng = np.random.default_rng(4)
        data = make_data(rng)
        basis = rg.residual_basis(data.z)
        base = rg.u_statistic(data, basis)
        for _ in range(5):
            c = rng.uniform(0.1, 5.0)
            v = rng.normal(0, 2, data.d)
            data2 = rg.RegressionData(y=c * data.y + data.z @ v, x=data.x, z=data.z)
            assert np.max(np.abs(rg.u_statistic(data2, basis) - base)) < 1e-12

    def test_data_validation(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            make_data(rng, n=4, d=3)
        z = np.ones((9, 2))
        with pytest.raises(ValueError):
            rg.RegressionData(y=np.zeros(9), x=np.zeros(9), z=z)


class TestDensity:
    def test_flat_at_zero_delta(self):
        rng = np.random.default_rng(6)
        data = make_data(rng)
        basis = rg.residual_basis(data.z)
        u = rg.u_statistic(data, basis)
        k = data.n - data.d
        expected = math.lgamma(k / 2) - math.log(2.0) - 0.5 * k * math.log(math.pi)
        assert rg.u_log_density(u, 0.0, data, basis) == expected

    def test_sign_flip(self):
        rng = np.random.default_rng(7)
        data = make_data(rng)
        basis = rg.residual_basis(data.z)
        u = rg.u_statistic(data, basis)
        for delta in (0.5, 1.3):
            assert rg.u_log_density(u, delta, data, basis) == pytest.approx(
                rg.u_log_density(-u, -delta, data, basis), rel=1e-13)

    def test_sphere_normalization(self):
        rng = np.random.default_rng(8)
        d = 3
        for k in (2, 3, 5):
            n = k + d
            data = make_data(rng, n=n, d=d)
            basis = rg.residual_basis(data.z)
            px = basis.a_mat.T @ data.x
            g = rng.standard_normal((40_000, k))
            us = g / np.linalg.norm(g, axis=1, keepdims=True)
            a_vals = us @ px
            for delta in (0.5, 1.0):
                c_val = -0.5 * delta * delta * float(px @ px)
                ratio = np.exp(c_val + log_chi_mgf(k, delta * a_vals))
                se = ratio.std(ddof=1) / math.sqrt(ratio.size)
                assert abs(ratio.mean() - 1.0) < 3 * se, (k, delta)

    def test_unit_vector_required(self):
        rng = np.random.default_rng(9)
        data = make_data(rng)
        basis = rg.residual_basis(data.z)
        with pytest.raises(ValueError):
            rg.u_log_density(np.full(data.n - data.d, 0.5), 0.3, data, basis)


class TestEvalue:
    def test_identical_hypotheses(self):
        rng = np.random.default_rng(10)
        data = make_data(rng)
        assert rg.evalue_regression(data, 0.4, 0.4) == 1.0

    def test_group_invariance(self):
        rng = np.random.default_rng(11)
        data = make_data(rng)
        base = rg.evalue_regression(data, 0.3, 1.1)
        for _ in range(5):
            c = rng.uniform(0.1, 4.0)
            v = rng.normal(0, 2, data.d)
            data2 = rg.RegressionData(y=c * data.y + data.z @ v, x=data.x, z=data.z)
            assert rg.evalue_regression(data2, 0.3, 1.1) == pytest.approx(base, rel=1e-10)

    def test_basis_rotation_independence(self):
        # a second valid basis differs by a rotation; with its own direction
        # statistic the e-value is unchanged
        rng = np.random.default_rng(12)
        data = make_data(rng)
        basis = rg.residual_basis(data.z)
        k = data.n - data.d
        q, _ = np.linalg.qr(rng.normal(0, 1, (k, k)))
        basis2 = rg.ResidualBasis(a_mat=basis.a_mat @ q)
        e1 = math.exp(rg.log_evalue_regression(data, 0.2, 0.9, basis=basis))
        e2 = math.exp(rg.log_evalue_regression(data, 0.2, 0.9, basis=basis2))
        assert e1 == pytest.approx(e2, rel=1e-12)

    def test_null_monte_carlo_mean(self):
        rng = np.random.default_rng(13)
        n, d, reps = 12, 3, 20_000
        delta0, delta1 = 0.3, 1.1
        z = rng.normal(0, 1, (n, d))
        x = rng.normal(0, 1, n)
        a_mat = rg.residual_basis(z).a_mat
        for _ in range(2):
            sigma = float(rng.uniform(0.4, 2.5))
            beta = rng.normal(0, 2.0, d)
            y = delta0 * sigma * x + z @ beta + sigma * rng.standard_normal((reps, n))
            proj = y @ a_mat
            us = proj / np.linalg.norm(proj, axis=1, keepdims=True)
            px = a_mat.T @ x
            c_diff = -0.5 * (delta1**2 - delta0**2) * float(px @ px)
            a_vals = us @ px
            ev = np.exp(c_diff + log_chi_mgf(n - d, delta1 * a_vals)
                        - log_chi_mgf(n - d, delta0 * a_vals))
            se = ev.std(ddof=1) / math.sqrt(reps)
            assert abs(ev.mean() - 1.0) < 3 * se
