import itertools
import math

import numpy as np
import pytest

from graphiht.graph import WgmModel, connected_components, grid_graph
from graphiht.objectives import Dataset, bregman
from graphiht.projections import model_supports
from graphiht.theory import (ContractionParams, InfeasibleRangeError,
                             InsufficientDataError, contraction_params, estimate_rsc_rss,
                             eta_range, fit_convergence_slope, restricted_constants)


class TestEstimate:
    def test_identity(self):
        g = grid_graph(3, 3)
        ds = Dataset(np.eye(9), np.zeros(9))
        est = estimate_rsc_rss(ds, g, WgmModel(2), family="model")
        np.testing.assert_allclose([est.alpha, est.beta_full], [1 / 9, 1 / 9])
        # one coordinate per sample: each f_i has curvature 1
        assert est.beta == 1.0
        assert est.exact

    def test_isometry(self):
        g = grid_graph(2, 2)
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 4)))
        ds = Dataset(2.0 * q, np.zeros(4))  # A^T A / n = I
        est = estimate_rsc_rss(ds, g, WgmModel(2), family="sum")
        np.testing.assert_allclose([est.alpha, est.beta_full], [1.0, 1.0], atol=1e-12)

    def test_matches_brute_force(self):
        g = grid_graph(3, 4)
        model = WgmModel(3, 1)
        a = np.random.default_rng(1).standard_normal((8, 12))
        est = estimate_rsc_rss(Dataset(a, np.zeros(8)), g, model, family="model")
        lo, hi, row = math.inf, 0.0, 0.0
        for k in range(1, 4):
            for combo in itertools.combinations(range(12), k):
                if connected_components(g, combo) != 1:
                    continue
                sub = a[:, combo]
                ev = np.linalg.eigvalsh(sub.T @ sub / 8)
                lo, hi = min(lo, ev[0]), max(hi, ev[-1])
                row = max(row, (sub ** 2).sum(axis=1).max())
        np.testing.assert_allclose([est.alpha, est.beta_full, est.beta], [lo, hi, row],
                                   rtol=1e-10)

    def test_sandwich(self):
        g = grid_graph(3, 4)
        model = WgmModel(3, 1)
        a = np.random.default_rng(2).standard_normal((8, 12))
        ds = Dataset(a, np.zeros(8))
        est = estimate_rsc_rss(ds, g, model, family="model")
        table = model_supports(g, model)
        rng = np.random.default_rng(3)
        for _ in range(200):
            mask = table[rng.integers(1, len(table))]
            x, y = np.zeros((2, 12))
            x[mask] = rng.standard_normal(mask.sum())
            y[mask] = rng.standard_normal(mask.sum())
            d2 = np.sum((x - y) ** 2)
            b = bregman(ds, x, y)
            assert est.alpha / 2 * d2 <= b + 1e-12
            assert b <= est.beta_full / 2 * d2 + 1e-12

    def test_sampled_flagged(self):
        g = grid_graph(5, 5)
        a = np.random.default_rng(4).standard_normal((40, 25))
        est = estimate_rsc_rss(Dataset(a, np.zeros(40)), g, WgmModel(3), family="model",
                               samples=200, rng=0)
        assert not est.exact and 0 < est.alpha <= est.beta_full

    def test_logistic_refused(self):
        ds = Dataset(np.ones((2, 4)), np.array([1.0, -1.0]), "logistic")
        with pytest.raises(ValueError):
            estimate_rsc_rss(ds, grid_graph(2, 2), WgmModel(1))

    def test_restricted_constants_empty_rows(self):
        a = np.eye(3)
        alpha, beta, beta_full = restricted_constants(a, np.eye(3, dtype=bool))
        assert (alpha, beta, beta_full) == (1 / 3, 1.0, 1 / 3)


class TestEtaRange:
    def test_unit(self):
        lo, hi = eta_range(1.0, 1.0)
        assert abs(lo - 0.75) <= 1e-12 and abs(hi - 1.25) <= 1e-12

    def test_degenerate(self):
        lo, hi = eta_range(1.5, 1.6)
        np.testing.assert_allclose([lo, hi], [1 / 1.6, 1 / 1.6], rtol=1e-9)

    def test_infeasible(self):
        with pytest.raises(InfeasibleRangeError):
            eta_range(1.0, 2.0)

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            eta_range(0.0, 1.0)

    @pytest.mark.parametrize("alpha,ratio", [(0.3, 1.0), (1.0, 1.05), (7.0, 16 / 15 - 1e-6)])
    def test_roots(self, alpha, ratio):
        beta = alpha * ratio
        for eta in eta_range(alpha, beta):
            assert abs(alpha * beta * eta ** 2 - 2 * alpha * eta + 15 / 16) <= 1e-12
            assert eta > 0

    def test_interior_radical_below_quarter(self):
        a, b = 1.0, 1.03
        lo, hi = eta_range(a, b)
        for eta in np.linspace(lo, hi, 50)[1:-1]:
            assert math.sqrt(a * b * eta ** 2 - 2 * a * eta + 1) < 0.25


class TestContraction:
    def test_formulas(self):
        a, b, eta = 0.9, 1.1, 0.8
        c = contraction_params(a, b, eta)
        r = math.sqrt(a * b * eta ** 2 - 2 * a * eta + 1)
        assert c.alpha0 == pytest.approx(a * eta - r)
        assert c.beta0 == pytest.approx(2 * eta)
        assert c.lambda_ == pytest.approx(4 * r)
        assert c.delta == pytest.approx(2 * (r + math.sqrt(1 - c.alpha0)))
        assert c.delta_appendix == pytest.approx(2 * (r + math.sqrt(1 - c.alpha0 ** 2)))
        assert c.tau == eta

    def test_lambda_forms_agree(self):
        c = contraction_params(1.0, 1.0, 0.9)
        assert c.lambdas_agree

    def test_small_tau_limit(self):
        c = contraction_params(1.0, 1.0, 0.5, tau=1e-12)
        assert c.alpha0 == pytest.approx(-1.0, abs=1e-9)

    def test_radicand_negative(self):
        # alpha > beta makes alpha*beta*tau^2 - 2*alpha*tau + 1 dip below zero
        with pytest.raises(ValueError):
            contraction_params(4.0, 1.0, 0.5)

    def test_pure(self):
        assert contraction_params(1.0, 1.02, 0.9) == contraction_params(1.0, 1.02, 0.9)

    def test_types(self):
        assert isinstance(contraction_params(1.0, 1.0, 1.0), ContractionParams)


class TestSlope:
    def test_geometric(self):
        slope, r2 = fit_convergence_slope((np.arange(5.0), 10.0 ** -np.arange(5.0)))
        assert slope == pytest.approx(-math.log(10))
        assert r2 == pytest.approx(1.0)

    def test_constant(self):
        slope, r2 = fit_convergence_slope((np.arange(6.0), np.full(6, 3.0)))
        assert slope == 0.0 and r2 == 1.0

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            fit_convergence_slope((np.arange(6.0), np.array([1, 0.1, 1e-9, 1e-9, 1e-9, 1e-9])))
