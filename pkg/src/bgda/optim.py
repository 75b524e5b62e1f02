"""Descent-ascent optimizers for the weighted saddle objective.

Plain descent-ascent takes a gradient step in the parameters and a Bregman
prox step in the weights, both evaluated at the pre-update pair.  The
adaptive variant smooths the parameter gradient with bias-corrected momentum
and scales both directions by the bias-corrected running norm of the
respective gradient (a scalar, so directions are rescaled, not rotated).
The stochastic variant replaces the parameter gradient with a batch average
from a user-supplied oracle; the weight step stays exact.

Optimizers follow the scikit-learn estimator convention: hyperparameters in
``__init__``, ``fit(problem, theta0)`` runs the loop and stores results on
trailing-underscore attributes (``theta_``, ``pi_``, ``trace_``).
"""

import math
import time
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .bregman import DistanceGenerator, divergence, prox_restricted, prox_simplex_kl
from .exceptions import DomainError, NumericError
from .saddle import closed_form_best_response, grad_pi_from_values

# gamma_theta <= RATE_STEP_CONSTANT / (kappa^4 L) is the tuning under
# which the 1/T stationarity rate is certified; the per-step weight-distance
# contraction alone needs only gamma_theta <= 1 / (184 kappa^4 L).
RATE_STEP_CONSTANT = math.sqrt(43.0 / (92.0 * 33792.0))
CONTRACTION_STEP_CONSTANT = 1.0 / 184.0

CONTRACTION_GRAD_COEFF = 264.0  # multiplies gamma_theta^2 kappa^6 ||grad Phi||^2


def linear_decay(g0, g_end, t, total):
    """Linear stepsize schedule: g0 at t=0 down to g_end at t=total."""
    if not 0 <= t <= total:
        raise DomainError(f"schedule step {t} outside [0, {total}]")
    return g0 + (g_end - g0) * (t / total)


def theoretical_stepsizes(info, mode="general", constant="rate"):
    """Stepsize pair (gamma_pi, gamma_theta) from smoothness constants.

    general:    gamma_pi = lam / (4 L^2),   gamma_theta = C / (kappa^4 L)
    restricted: gamma_pi = lam / (4 L_pi^2), gamma_theta = C / (kappa_pi^3 kappa L)

    with C the rate-certifying constant sqrt(43 / (92 * 33792)) by default, or
    the looser per-step-bound constant 1/184 with ``constant="contraction"``.
    """
    lam = info.lam
    L = max(info.L, lam)
    if constant == "rate":
        c = RATE_STEP_CONSTANT
    elif constant == "contraction":
        c = CONTRACTION_STEP_CONSTANT
    else:
        raise DomainError(f"unknown stepsize constant {constant!r}")
    if mode == "general":
        gamma_pi = lam / (4.0 * L * L)
        gamma_theta = c / (info.kappa**4 * L)
    elif mode == "restricted":
        L_pi = max(info.L_pi, lam)
        gamma_pi = lam / (4.0 * L_pi * L_pi)
        gamma_theta = c / (info.kappa_pi**3 * info.kappa * L)
    else:
        raise DomainError(f"unknown stepsize mode {mode!r}")
    return gamma_pi, gamma_theta


@dataclass
class OptimizerState:
    """Mutable per-run state: iterate pair plus adaptive moment accumulators."""

    theta: np.ndarray
    pi: np.ndarray
    m_theta: np.ndarray
    v_theta: float = 0.0
    m_pi: np.ndarray = None
    v_pi: float = 0.0
    t: int = 0


@dataclass
class RunTrace:
    """Per-iteration record over a run; arrays have length iterations + 1.

    Optional columns are None when not recorded.  ``bregman_to_best`` is the
    divergence from the inner maximizer to the current weights; ``chi`` the
    residual-to-boundary gradient norm ratio.
    """

    losses: np.ndarray
    pi: np.ndarray
    grad_theta_norm: np.ndarray
    stepsize_theta: np.ndarray
    chi: np.ndarray = None
    phi: np.ndarray = None
    grad_phi_norm: np.ndarray = None
    bregman_to_best: np.ndarray = None
    l2re: np.ndarray = None
    wall_time: float = 0.0

    @property
    def m(self):
        return self.losses.shape[1]

    @property
    def n_iterations(self):
        return self.losses.shape[0] - 1

    def __len__(self):
        return self.losses.shape[0]


class _DescentAscentBase(BaseEstimator):
    """Shared fit loop; subclasses supply the step directions."""

    def __init__(
        self,
        gamma_theta=0.008,
        gamma_pi=0.1,
        iterations=1000,
        schedule="constant",
        gamma_theta_end=0.0004,
        seed=0,
        record_best_response="auto",
    ):
        self.gamma_theta = gamma_theta
        self.gamma_pi = gamma_pi
        self.iterations = iterations
        self.schedule = schedule
        self.gamma_theta_end = gamma_theta_end
        self.seed = seed
        self.record_best_response = record_best_response

    # -- hooks -------------------------------------------------------------
    def _directions(self, state, g_theta, g_pi, t):
        return g_theta, g_pi

    def _step_gradient(self, problem, theta, pi, g_theta, rng):
        return g_theta

    def _update_pi(self, problem, pi, scaled_direction):
        if problem.domain.radius is None:
            return prox_simplex_kl(pi, scaled_direction)
        return prox_restricted(pi, scaled_direction, problem.domain.radius)

    # -----------------------------------------------------------------------
    def _gamma_theta_at(self, t):
        if self.schedule == "constant":
            return float(self.gamma_theta)
        if self.schedule == "linear":
            return linear_decay(self.gamma_theta, self.gamma_theta_end, t, self.iterations)
        raise DomainError(f"unknown schedule {self.schedule!r}")

    def fit(self, problem, theta0, pi0=None, l2re_fn=None, chi_groups=None):
        """Run the descent-ascent loop on the given saddle problem.

        theta0 is the initial parameter vector; pi0 defaults to the domain
        center.  ``l2re_fn(theta)`` and ``chi_groups=(residual_idx,
        boundary_idx)`` enable the optional trace columns.
        """
        if self.gamma_theta <= 0 or self.gamma_pi <= 0:
            raise DomainError("stepsizes must be positive")
        theta = np.array(theta0, dtype=float)
        domain = problem.domain
        pi = domain.center if pi0 is None else domain.validate(np.array(pi0, dtype=float))
        T = int(self.iterations)
        m = problem.m
        gen = problem.generator

        closed_form = gen is DistanceGenerator.NEGATIVE_ENTROPY and domain.radius is None
        record_br = self.record_best_response
        if record_br == "auto":
            record_br = closed_form and problem.lam > 0
        if record_br and not closed_form:
            raise DomainError("best-response trace columns need the closed-form case")

        losses = np.empty((T + 1, m))
        pis = np.empty((T + 1, m))
        g_norm = np.empty(T + 1)
        steps = np.empty(T + 1)
        chi = np.empty(T + 1) if chi_groups is not None else None
        phi = np.empty(T + 1) if record_br else None
        gphi = np.empty(T + 1) if record_br else None
        dbest = np.empty(T + 1) if record_br else None
        l2re_col = np.empty(T + 1) if l2re_fn is not None else None

        if chi_groups is not None:
            idx_r = np.asarray(chi_groups[0], dtype=int)
            idx_b = np.asarray(chi_groups[1], dtype=int)

        state = OptimizerState(
            theta=theta, pi=pi, m_theta=np.zeros_like(theta), m_pi=np.zeros(m)
        )
        rng = np.random.default_rng(self.seed)
        started = time.perf_counter()

        def partial_trace(upto):
            sl = slice(0, upto)
            return RunTrace(
                losses=losses[sl],
                pi=pis[sl],
                grad_theta_norm=g_norm[sl],
                stepsize_theta=steps[sl],
                chi=None if chi is None else chi[sl],
                phi=None if phi is None else phi[sl],
                grad_phi_norm=None if gphi is None else gphi[sl],
                bregman_to_best=None if dbest is None else dbest[sl],
                l2re=None if l2re_col is None else l2re_col[sl],
                wall_time=time.perf_counter() - started,
            )

        for t in range(T + 1):
            values, grads = problem.evaluate_losses(theta)
            if not (np.all(np.isfinite(values)) and np.all(np.isfinite(theta))):
                raise NumericError(
                    f"non-finite objective at iteration {t}", trace=partial_trace(t)
                )
            g_theta = grads.T @ pi

            losses[t] = values
            pis[t] = pi
            g_norm[t] = np.linalg.norm(g_theta)
            steps[t] = self._gamma_theta_at(t)
            if chi is not None:
                nb = np.linalg.norm(grads[idx_b].sum(axis=0))
                nr = np.linalg.norm(grads[idx_r].sum(axis=0))
                chi[t] = nr / nb if nb > 0 else np.nan
            if record_br:
                pi_star = closed_form_best_response(problem, values)
                phi[t] = float(values @ pi_star) - problem.lam * divergence(
                    gen, pi_star, problem.pi_hat
                )
                gphi[t] = np.linalg.norm(grads.T @ pi_star)
                dbest[t] = divergence(gen, pi_star, pi)
            if l2re_fn is not None:
                l2re_col[t] = l2re_fn(theta)
            if t == T:
                break

            g_pi = grad_pi_from_values(problem, values, pi)
            d_theta, d_pi = self._directions(state, g_theta, g_pi, t)
            step_grad = self._step_gradient(problem, theta, pi, d_theta, rng)
            theta = theta - steps[t] * step_grad
            pi = self._update_pi(problem, pi, self.gamma_pi * d_pi)
            state.theta = theta
            state.pi = pi
            state.t = t + 1

        self.theta_ = theta
        self.pi_ = pi
        self.state_ = state
        self.trace_ = partial_trace(T + 1)
        return self


class BregmanDescentAscent(_DescentAscentBase):
    """Plain descent in theta, Bregman prox ascent in the weights.

    With a single loss the weight stays pinned at 1 and the loop reduces to
    gradient descent.
    """


class AdaptiveBregmanDescentAscent(_DescentAscentBase):
    """Adaptive descent-ascent: smoothed descent, normalized prox ascent.

    The default parameter direction is bias-corrected momentum; the squared
    gradient-norm history is accumulated alongside it and drives the
    momentum-free descent branch.  The weight direction is the raw ascent
    gradient divided by the bias-corrected root of its running squared norm
    (a scalar, so the prox direction is rescaled, not rotated).
    ``adaptivity`` picks the (descent, ascent) combination: "adam+rmsprop"
    (default), "adam+adam" (adds weight momentum on top of the
    normalization), or "rmsprop+rmsprop" (normalized gradient descent
    without momentum).
    """

    def __init__(
        self,
        gamma_theta=0.008,
        gamma_pi=0.1,
        iterations=1000,
        schedule="linear",
        gamma_theta_end=0.0004,
        seed=0,
        record_best_response="auto",
        alpha1=0.9,
        alpha2=0.999,
        beta=0.999,
        eps_adapt=1e-8,
        adaptivity="adam+rmsprop",
    ):
        super().__init__(
            gamma_theta=gamma_theta,
            gamma_pi=gamma_pi,
            iterations=iterations,
            schedule=schedule,
            gamma_theta_end=gamma_theta_end,
            seed=seed,
            record_best_response=record_best_response,
        )
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.beta = beta
        self.eps_adapt = eps_adapt
        self.adaptivity = adaptivity

    def _combo(self):
        try:
            descent, ascent = self.adaptivity.split("+")
        except ValueError:
            raise DomainError(f"bad adaptivity combo {self.adaptivity!r}") from None
        if descent not in ("adam", "rmsprop") or ascent not in ("adam", "rmsprop"):
            raise DomainError(f"bad adaptivity combo {self.adaptivity!r}")
        return descent, ascent

    def _directions(self, state, g_theta, g_pi, t):
        descent, ascent = self._combo()
        tt = t + 1  # bias-correction exponent counts completed accumulations
        eps = self.eps_adapt

        state.v_theta = self.alpha2 * state.v_theta + (1 - self.alpha2) * float(
            g_theta @ g_theta
        )
        v_hat = state.v_theta / (1.0 - self.alpha2**tt)
        if descent == "adam":
            # descent step is the bias-corrected momentum itself; the norm
            # history v_theta is tracked but only the rmsprop branch uses it
            state.m_theta = self.alpha1 * state.m_theta + (1 - self.alpha1) * g_theta
            d_theta = state.m_theta / (1.0 - self.alpha1**tt)
        else:
            d_theta = g_theta / (math.sqrt(v_hat) + eps)

        state.v_pi = self.beta * state.v_pi + (1 - self.beta) * float(g_pi @ g_pi)
        v_pi_hat = state.v_pi / (1.0 - self.beta**tt)
        if ascent == "adam":
            state.m_pi = self.alpha1 * state.m_pi + (1 - self.alpha1) * g_pi
            m_pi_hat = state.m_pi / (1.0 - self.alpha1**tt)
            d_pi = m_pi_hat / (math.sqrt(v_pi_hat) + eps)
        else:
            d_pi = g_pi / (math.sqrt(v_pi_hat) + eps)
        return d_theta, d_pi


class FixedWeightAdaptiveBaseline(AdaptiveBregmanDescentAscent):
    """Uniform fixed weights with the adaptive parameter branch unchanged.

    Serves as the comparison point for gradient-conflict studies: same
    descent dynamics, no ascent."""

    def _update_pi(self, problem, pi, scaled_direction):
        return pi


class StochasticBregmanDescentAscent(BregmanDescentAscent):
    """Descent-ascent with a batched stochastic parameter gradient.

    The theta step averages ``batch_size`` oracle samples; the weight step
    uses the exact gradient.  The oracle signature is
    ``oracle(theta, pi, batch_size, rng) -> averaged gradient``.
    """

    def __init__(
        self,
        gamma_theta=0.008,
        gamma_pi=0.1,
        iterations=1000,
        schedule="constant",
        gamma_theta_end=0.0004,
        seed=0,
        record_best_response="auto",
        batch_size=1,
    ):
        super().__init__(
            gamma_theta=gamma_theta,
            gamma_pi=gamma_pi,
            iterations=iterations,
            schedule=schedule,
            gamma_theta_end=gamma_theta_end,
            seed=seed,
            record_best_response=record_best_response,
        )
        self.batch_size = batch_size

    def fit(self, problem, theta0, pi0=None, l2re_fn=None, chi_groups=None, batch_oracle=None):
        if batch_oracle is None:
            raise DomainError("stochastic mode needs a batch_oracle")
        if int(self.batch_size) < 1:
            raise DomainError("batch_size must be >= 1")
        self._oracle = batch_oracle
        try:
            return super().fit(
                problem, theta0, pi0=pi0, l2re_fn=l2re_fn, chi_groups=chi_groups
            )
        finally:
            del self._oracle

    def _step_gradient(self, problem, theta, pi, g_theta, rng):
        return np.asarray(self._oracle(theta, pi, int(self.batch_size), rng), dtype=float)
