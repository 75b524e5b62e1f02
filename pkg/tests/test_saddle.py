import math

import numpy as np
import pytest
from conftest import grid_argmin, random_simplex

from bgda.bregman import DistanceGenerator, WeightDomain, divergence, prox_simplex_kl
from bgda.exceptions import DomainError
from bgda.saddle import (
    SaddleProblem,
    SmoothnessInfo,
    best_response,
    grad_pi,
    grad_theta,
    objective,
    phi_and_grad,
)

ENT = DistanceGenerator.NEGATIVE_ENTROPY
EUC = DistanceGenerator.SQUARED_EUCLIDEAN


def quadratic_oracle(a, b, c):
    def oracle(theta):
        theta = np.asarray(theta, dtype=float)
        return 0.5 * float(theta @ (a @ theta)) + float(b @ theta) + c, a @ theta + b

    return oracle


def constant_oracle(value, dim):
    return lambda theta: (value, np.zeros(dim))


def make_problem(rng, dim=4, m=3, lam=0.7, generator=ENT):
    losses = []
    for _ in range(m):
        q = rng.standard_normal((dim, dim))
        a = 0.5 * (q + q.T)
        losses.append(quadratic_oracle(a, rng.standard_normal(dim), float(rng.normal())))
    return SaddleProblem(losses=tuple(losses), lam=lam, generator=generator)


class TestObjective:
    def test_single_loss_degeneracy(self):
        p = SaddleProblem(losses=(constant_oracle(3.25, 2),), lam=1.0)
        assert objective(p, np.zeros(2), [1.0]) == pytest.approx(3.25, abs=1e-15)

    def test_reference_point_kills_regularizer(self):
        rng = np.random.default_rng(0)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        values, _ = p.evaluate_losses(theta)
        assert objective(p, theta, p.pi_hat) == pytest.approx(
            float(values @ p.pi_hat), abs=1e-12
        )

    def test_hand_value(self):
        # losses (2, 0), lam 1, uniform reference, pi (3/4, 1/4):
        # 1.5 - KL((.75,.25),(.5,.5)) = 1.5 - 0.130812...
        p = SaddleProblem(
            losses=(constant_oracle(2.0, 1), constant_oracle(0.0, 1)), lam=1.0
        )
        kl = 0.75 * math.log(1.5) + 0.25 * math.log(0.5)
        got = objective(p, np.zeros(1), [0.75, 0.25])
        assert got == pytest.approx(1.5 - kl, abs=1e-12)
        assert got == pytest.approx(1.369188, abs=1e-6)


class TestGradTheta:
    def test_one_hot_selects_component(self):
        rng = np.random.default_rng(1)
        p = make_problem(rng, m=3)
        theta = rng.standard_normal(4)
        _, grads = p.evaluate_losses(theta)
        got = grad_theta(p, theta, [0.0, 1.0, 0.0])
        np.testing.assert_allclose(got, grads[1], atol=1e-14)

    def test_uniform_averages(self):
        rng = np.random.default_rng(2)
        p = make_problem(rng, m=2)
        theta = rng.standard_normal(4)
        _, grads = p.evaluate_losses(theta)
        np.testing.assert_allclose(
            grad_theta(p, theta, [0.5, 0.5]), grads.mean(axis=0), atol=1e-14
        )

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        pi = random_simplex(rng, 3)
        g = grad_theta(p, theta, pi)
        h = 1e-5
        for i in range(4):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += h
            tm[i] -= h
            fd = (objective(p, tp, pi) - objective(p, tm, pi)) / (2 * h)
            assert abs(g[i] - fd) / (abs(g[i]) + 1e-9) < 1e-6

    def test_linearity_in_pi(self):
        rng = np.random.default_rng(4)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        _, grads = p.evaluate_losses(theta)
        pi = random_simplex(rng, 3)
        np.testing.assert_allclose(grad_theta(p, theta, pi), grads.T @ pi, atol=1e-14)


class TestGradPi:
    def test_at_reference_equals_loss_values(self):
        rng = np.random.default_rng(5)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        values, _ = p.evaluate_losses(theta)
        np.testing.assert_allclose(grad_pi(p, theta, p.pi_hat), values, atol=1e-12)

    def test_lam_zero_gives_loss_values_everywhere(self):
        rng = np.random.default_rng(6)
        p = make_problem(rng, lam=0.0)
        theta = rng.standard_normal(4)
        values, _ = p.evaluate_losses(theta)
        for _ in range(5):
            pi = random_simplex(rng, 3)
            np.testing.assert_allclose(grad_pi(p, theta, pi), values, atol=1e-12)

    def test_matches_tangent_finite_differences(self):
        rng = np.random.default_rng(7)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        pi = random_simplex(rng, 3, floor=0.05)
        g = grad_pi(p, theta, pi)
        h = 1e-6
        for _ in range(5):
            u = rng.standard_normal(3)
            u -= u.mean()  # simplex tangent direction
            u /= np.linalg.norm(u)
            fd = (objective(p, theta, pi + h * u) - objective(p, theta, pi - h * u)) / (2 * h)
            assert abs(float(g @ u) - fd) / (abs(fd) + 1e-9) < 1e-6

    def test_affine_reconstruction(self):
        rng = np.random.default_rng(8)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        values, _ = p.evaluate_losses(theta)
        pi = random_simplex(rng, 3, floor=0.02)
        recon = grad_pi(p, theta, pi) + p.lam * (ENT.psi_grad(pi) - ENT.psi_grad(p.pi_hat))
        np.testing.assert_allclose(recon, values, atol=1e-12)

    def test_boundary_reference_error(self):
        rng = np.random.default_rng(9)
        p = make_problem(rng)
        from bgda.exceptions import DegenerateReferenceError

        with pytest.raises(DegenerateReferenceError):
            grad_pi(p, np.zeros(4), [1.0, 0.0, 0.0])


class TestBestResponse:
    def test_equal_losses_return_reference(self):
        p = SaddleProblem(
            losses=(constant_oracle(1.3, 1), constant_oracle(1.3, 1), constant_oracle(1.3, 1)),
            lam=0.5,
        )
        np.testing.assert_allclose(best_response(p, np.zeros(1)), p.pi_hat, atol=1e-12)

    def test_huge_lam_pins_reference(self):
        p = SaddleProblem(
            losses=(constant_oracle(5.0, 1), constant_oracle(-2.0, 1)), lam=1e6
        )
        out = best_response(p, np.zeros(1))
        assert np.max(np.abs(out - p.pi_hat)) < 1e-4

    def test_two_loss_closed_form(self):
        p = SaddleProblem(losses=(constant_oracle(1.0, 1), constant_oracle(0.0, 1)), lam=1.0)
        out = best_response(p, np.zeros(1))
        e = math.e
        np.testing.assert_allclose(out, [e / (1 + e), 1 / (1 + e)], atol=1e-12)
        assert out[0] == pytest.approx(0.731059, abs=1e-6)

        def neg_obj(cand):
            vals = cand @ np.array([1.0, 0.0])
            kl = np.sum(cand * np.log(cand / p.pi_hat), axis=1)
            return -(vals - p.lam * kl)

        best = grid_argmin(neg_obj, m=2)
        np.testing.assert_allclose(out, best, atol=1e-5)

    def test_maximizes_objective(self):
        rng = np.random.default_rng(10)
        p = make_problem(rng, m=3, lam=0.4)
        theta = rng.standard_normal(4)
        star = best_response(p, theta)
        top = objective(p, theta, star)
        for _ in range(1000):
            pi = random_simplex(rng, 3)
            assert objective(p, theta, pi) <= top + 1e-10

    def test_numerical_mode_matches_closed_form(self):
        # restricted domain with a ball wide enough to contain the optimum
        rng = np.random.default_rng(11)
        losses = (constant_oracle(0.4, 1), constant_oracle(0.1, 1), constant_oracle(0.0, 1))
        free = SaddleProblem(losses=losses, lam=1.0)
        star = best_response(free, np.zeros(1))
        ball = SaddleProblem(
            losses=losses, lam=1.0, domain=WeightDomain(3, radius=0.45)
        )
        out = best_response(ball, np.zeros(1))
        np.testing.assert_allclose(out, star, atol=1e-8)

    def test_euclidean_generator_numerical_mode(self):
        losses = (constant_oracle(0.6, 1), constant_oracle(0.0, 1))
        p = SaddleProblem(losses=losses, lam=1.0, generator=EUC)
        out = best_response(p, np.zeros(1))
        # argmax of <l, pi> - ||pi - u||^2 / 2 on the simplex: closed form
        # via the unconstrained step projected back; interior here
        expect = np.array([0.5 + 0.3, 0.5 - 0.3])
        np.testing.assert_allclose(out, expect, atol=1e-9)

    def test_lam_zero_rejected(self):
        p = SaddleProblem(losses=(constant_oracle(1.0, 1), constant_oracle(0.0, 1)), lam=0.0)
        with pytest.raises(DomainError):
            best_response(p, np.zeros(1))


class TestPhi:
    def test_single_loss(self):
        rng = np.random.default_rng(12)
        a = np.eye(2)
        p = SaddleProblem(losses=(quadratic_oracle(a, np.zeros(2), 0.0),), lam=1.0)
        theta = rng.standard_normal(2)
        phi, g = phi_and_grad(p, theta)
        assert phi == pytest.approx(0.5 * float(theta @ theta), abs=1e-12)
        np.testing.assert_allclose(g, theta, atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        p = make_problem(rng, lam=0.8)
        theta = rng.standard_normal(4)
        _, g = phi_and_grad(p, theta)
        h = 1e-5
        for i in range(4):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += h
            tm[i] -= h
            fd = (phi_and_grad(p, tp)[0] - phi_and_grad(p, tm)[0]) / (2 * h)
            assert abs(g[i] - fd) / (abs(g[i]) + 1e-7) < 1e-5

    def test_envelope_dominates_feasible_values(self):
        rng = np.random.default_rng(14)
        p = make_problem(rng)
        theta = rng.standard_normal(4)
        phi, _ = phi_and_grad(p, theta)
        for _ in range(200):
            pi = random_simplex(rng, 3)
            assert objective(p, theta, pi) <= phi + 1e-10


class TestStrongConcavity:
    """The operative concavity facts for the inner problem.

    The objective is linear in pi plus -lam * D(pi, pi_hat), so its Bregman
    gap around any point equals exactly -lam * D(pi1, pi2), and gradient
    monotonicity holds with the symmetrized divergence at modulus lam/2.
    """

    def test_exact_bregman_identity(self):
        rng = np.random.default_rng(15)
        for gen in (ENT, EUC):
            p = make_problem(rng, generator=gen)
            theta = rng.standard_normal(4)
            for _ in range(200):
                p1 = random_simplex(rng, 3, floor=1e-4)
                p2 = random_simplex(rng, 3, floor=1e-4)
                lhs = objective(p, theta, p1)
                rhs = (
                    objective(p, theta, p2)
                    + float(grad_pi(p, theta, p2) @ (p1 - p2))
                    - p.lam * divergence(gen, p1, p2)
                )
                assert abs(lhs - rhs) < 1e-10

    def test_gradient_monotonicity_symmetrized(self):
        rng = np.random.default_rng(16)
        for gen in (ENT, EUC):
            p = make_problem(rng, generator=gen)
            theta = rng.standard_normal(4)
            for _ in range(500):
                p1 = random_simplex(rng, 3, floor=1e-4)
                p2 = random_simplex(rng, 3, floor=1e-4)
                inner = float(
                    (grad_pi(p, theta, p1) - grad_pi(p, theta, p2)) @ (p1 - p2)
                )
                bound = -0.5 * p.lam * (
                    divergence(gen, p1, p2) + divergence(gen, p2, p1)
                )
                assert inner <= bound + 1e-9

    def test_function_value_form_euclidean(self):
        # for the symmetric euclidean divergence the symmetrized upper bound
        # holds with equality
        rng = np.random.default_rng(17)
        p = make_problem(rng, generator=EUC)
        theta = rng.standard_normal(4)
        for _ in range(500):
            p1 = random_simplex(rng, 3)
            p2 = random_simplex(rng, 3)
            lhs = objective(p, theta, p1)
            rhs = (
                objective(p, theta, p2)
                + float(grad_pi(p, theta, p2) @ (p1 - p2))
                - 0.5 * p.lam * (divergence(EUC, p1, p2) + divergence(EUC, p2, p1))
            )
            assert lhs <= rhs + 1e-9


class TestSmoothnessInfo:
    def test_kappa_clamped(self):
        info = SmoothnessInfo(L=0.5, L_pi=0.5, lam=1.0)
        assert info.kappa == 1.0
        assert info.kappa_pi == 1.0
        info = SmoothnessInfo(L=3.0, L_pi=2.0, lam=1.5)
        assert info.kappa == pytest.approx(2.0)
        assert info.kappa_pi == pytest.approx(4.0 / 3.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            SmoothnessInfo(L=0.0, L_pi=1.0, lam=1.0)


class TestProxAscentFixedPoint:
    def test_fixed_point_is_best_response(self):
        # independent prox-ascent iteration reaches the closed form
        rng = np.random.default_rng(18)
        p = make_problem(rng, m=3, lam=0.6)
        theta = rng.standard_normal(4)
        star = best_response(p, theta)
        values, _ = p.evaluate_losses(theta)
        pi = p.domain.center
        gamma = 0.5 / p.lam
        for _ in range(200):
            g = values - p.lam * (ENT.psi_grad(pi) - ENT.psi_grad(p.pi_hat))
            pi = prox_simplex_kl(pi, gamma * g)
        np.testing.assert_allclose(pi, star, atol=1e-10)
