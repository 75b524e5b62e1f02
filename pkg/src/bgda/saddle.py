"""Weighted multi-loss saddle objective over parameters and simplex weights.

The objective is

    L(theta, pi) = sum_i pi_i * L_i(theta) - lam * D_psi(pi, pi_hat)

minimized in theta and maximized in pi over the weight domain.  Loss oracles
are closures theta -> (value, gradient), so this module is agnostic to where
losses come from (autodiff, analytic formulas, ...).  The divergence gradient
is taken with respect to the first argument of D_psi.
"""

from dataclasses import dataclass

import numpy as np

from .bregman import (
    DistanceGenerator,
    WeightDomain,
    divergence,
    prox_restricted,
    prox_simplex_kl,
)
from .exceptions import DomainError, SolverFailureError


@dataclass(frozen=True)
class SaddleProblem:
    """M loss oracles plus the Bregman regularizer (lam, pi_hat, psi, domain).

    ``losses[i]`` maps a parameter vector to ``(value, gradient)``.  The
    reference weights default to uniform.  lam = 0 is accepted so the
    unregularized gradient can be inspected, but best-response and
    optimization paths require lam > 0.
    """

    losses: tuple
    lam: float
    pi_hat: np.ndarray = None
    generator: DistanceGenerator = DistanceGenerator.NEGATIVE_ENTROPY
    domain: WeightDomain = None

    def __post_init__(self):
        losses = tuple(self.losses)
        if len(losses) < 1:
            raise DomainError("need at least one loss oracle")
        object.__setattr__(self, "losses", losses)
        if self.lam < 0.0:
            raise DomainError(f"lam must be nonnegative, got {self.lam}")
        domain = self.domain if self.domain is not None else WeightDomain(len(losses))
        if domain.m != len(losses):
            raise DomainError(f"domain size {domain.m} != number of losses {len(losses)}")
        object.__setattr__(self, "domain", domain)
        pi_hat = self.pi_hat if self.pi_hat is not None else domain.center
        object.__setattr__(self, "pi_hat", domain.validate(pi_hat, name="pi_hat"))

    @property
    def m(self):
        return len(self.losses)

    def evaluate_losses(self, theta):
        """All loss values and gradients at theta: (values (M,), grads (M, P))."""
        theta = np.asarray(theta, dtype=float)
        values = np.empty(self.m)
        grads = np.empty((self.m, theta.size))
        for i, oracle in enumerate(self.losses):
            v, g = oracle(theta)
            values[i] = v
            grads[i] = np.asarray(g, dtype=float).ravel()
        return values, grads


@dataclass(frozen=True)
class SmoothnessInfo:
    """Smoothness constants of a saddle problem.

    ``L`` bounds the joint gradient Lipschitz constant over the declared
    region, ``L_pi`` the smoothness in pi alone.  Condition numbers are
    clamped so kappa >= 1 by taking max(L, lam).
    """

    L: float
    L_pi: float
    lam: float

    def __post_init__(self):
        if self.L <= 0.0 or self.lam <= 0.0:
            raise DomainError("smoothness constants must be positive")

    @property
    def kappa(self):
        return max(self.L, self.lam) / self.lam

    @property
    def kappa_pi(self):
        return max(self.L_pi, self.lam) / self.lam


def objective(problem, theta, pi):
    """L(theta, pi) = sum_i pi_i L_i(theta) - lam * D_psi(pi, pi_hat)."""
    pi = problem.domain.validate(pi)
    values, _ = problem.evaluate_losses(theta)
    reg = divergence(problem.generator, pi, problem.pi_hat) if problem.lam else 0.0
    return float(values @ pi) - problem.lam * reg


def grad_theta(problem, theta, pi):
    """Partial gradient in theta: sum_i pi_i grad L_i(theta)."""
    pi = problem.domain.validate(pi)
    _, grads = problem.evaluate_losses(theta)
    return grads.T @ pi


def grad_pi(problem, theta, pi):
    """Partial gradient in pi: (L_i(theta))_i - lam * (grad psi(pi) - grad psi(pi_hat))."""
    pi = problem.domain.validate(pi)
    values, _ = problem.evaluate_losses(theta)
    return grad_pi_from_values(problem, values, pi)


def grad_pi_from_values(problem, values, pi):
    if problem.lam == 0.0:
        return np.asarray(values, dtype=float).copy()
    gen = problem.generator
    return values - problem.lam * (gen.psi_grad(pi) - gen.psi_grad(problem.pi_hat))


def closed_form_best_response(problem, values):
    """argmax over the full simplex for the entropy generator.

    pi*_i is proportional to pi_hat_i * exp(L_i(theta) / lam); computed with
    max-subtraction.
    """
    w = np.log(problem.pi_hat) + np.asarray(values, dtype=float) / problem.lam
    w -= w.max()
    e = np.exp(w)
    return e / e.sum()


def _project_simplex(v):
    # Euclidean projection onto the simplex (sort-and-threshold).
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u + (1.0 - css) / np.arange(1, v.size + 1) > 0)[0][-1]
    tau = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + tau, 0.0)


def best_response(problem, theta, tol=1e-10, max_iter=100000):
    """The unique maximizer pi*(theta) of the strongly concave inner problem.

    Closed form (softmax of loss values over lam) when the domain is the full
    simplex with the entropy generator; otherwise prox ascent with stepsize
    1/(2 lam), iterated to a fixed point.
    """
    if problem.lam <= 0.0:
        raise DomainError("best response needs lam > 0")
    values, _ = problem.evaluate_losses(theta)
    entropy = problem.generator is DistanceGenerator.NEGATIVE_ENTROPY
    if entropy and problem.domain.radius is None:
        return closed_form_best_response(problem, values)

    gamma = 0.5 / problem.lam
    pi = problem.domain.center
    for _ in range(max_iter):
        g = gamma * grad_pi_from_values(problem, values, pi)
        if entropy:
            if problem.domain.radius is None:
                nxt = prox_simplex_kl(pi, g)
            else:
                nxt = prox_restricted(pi, g, problem.domain.radius)
        else:
            if problem.domain.radius is not None:
                raise DomainError(
                    "numerical best response for the Euclidean generator "
                    "supports the full simplex only"
                )
            nxt = _project_simplex(pi + g)
        if np.max(np.abs(nxt - pi)) <= tol:
            return nxt
        pi = nxt
    raise SolverFailureError(
        "prox ascent did not reach a fixed point",
        residual=float(np.max(np.abs(nxt - pi))),
    )


def phi_and_grad(problem, theta):
    """Envelope value L(theta, pi*(theta)) and its gradient via the best response.

    The envelope gradient equals the partial theta-gradient evaluated at the
    best response (the inner maximizer), since the regularizer does not
    depend on theta.
    """
    values, grads = problem.evaluate_losses(theta)
    entropy = problem.generator is DistanceGenerator.NEGATIVE_ENTROPY
    if entropy and problem.domain.radius is None:
        pi_star = closed_form_best_response(problem, values)
    else:
        pi_star = best_response(problem, theta)
    reg = divergence(problem.generator, pi_star, problem.pi_hat)
    phi = float(values @ pi_star) - problem.lam * reg
    return phi, grads.T @ pi_star
