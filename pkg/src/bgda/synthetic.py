"""Quadratic minimax instances with certified smoothness constants.

Component losses are quadratics L_i(theta) = theta' A_i theta / 2 + b_i'
theta + c_i with controlled spectra (indefinite A_i give a nonconvex
landscape), so the joint gradient Lipschitz constant can be bounded in
closed form over a declared region and the per-step weight-distance
contraction and stationarity-rate claims can be checked exactly.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bregman import DistanceGenerator, WeightDomain
from .exceptions import DomainError
from .optim import CONTRACTION_GRAD_COEFF
from .saddle import SaddleProblem, SmoothnessInfo


@dataclass(frozen=True)
class QuadraticMinimax:
    """Seeded quadratic instance plus the region its constants are valid on.

    The smoothness bound holds on {||theta - center|| <= radius} x {pi on
    the simplex with min coordinate >= pi_floor}; the entropy Hessian of the
    regularizer is unbounded on the full simplex, so a floor is part of the
    declared region.
    """

    a: np.ndarray  # (m, dim, dim) symmetric
    b: np.ndarray  # (m, dim)
    c: np.ndarray  # (m,)
    lam: float
    center: np.ndarray
    radius: float
    pi_floor: float

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def dim(self):
        return self.a.shape[1]

    def loss_oracles(self):
        def make(i):
            ai, bi, ci = self.a[i], self.b[i], self.c[i]

            def oracle(theta, _a=ai, _b=bi, _c=ci):
                theta = np.asarray(theta, dtype=float)
                g = _a @ theta + _b
                return 0.5 * float(theta @ (_a @ theta)) + float(_b @ theta) + _c, g

            return oracle

        return [make(i) for i in range(self.m)]

    def problem(self):
        return SaddleProblem(
            losses=tuple(self.loss_oracles()),
            lam=self.lam,
            pi_hat=None,
            generator=DistanceGenerator.NEGATIVE_ENTROPY,
            domain=WeightDomain(self.m),
        )

    def smoothness(self):
        """Hessian-block bound on the joint gradient Lipschitz constant.

        ||H|| <= max(||H_tt||, ||H_pp||) + ||H_tp|| over the declared
        region: the theta block is a convex combination of the A_i, the pi
        block is lam/pi_floor for the entropy regularizer, and the cross
        block stacks the component gradients.
        """
        spec_norms = np.array([np.linalg.norm(ai, ord=2) for ai in self.a])
        l_tt = float(spec_norms.max())
        grad_sup = np.array(
            [
                np.linalg.norm(self.a[i] @ self.center + self.b[i]) + spec_norms[i] * self.radius
                for i in range(self.m)
            ]
        )
        l_tp = float(np.sqrt(np.sum(grad_sup**2)))
        l_pp = self.lam / self.pi_floor
        big_l = max(l_tt, l_pp) + l_tp
        return SmoothnessInfo(L=big_l, L_pi=l_pp, lam=self.lam)

    def sample_region(self, rng, n):
        """Uniform-ish samples of (theta, pi) from the declared region."""
        dim, m = self.dim, self.m
        directions = rng.standard_normal((n, dim))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / dim)
        thetas = self.center + directions * radii[:, None]
        raw = rng.dirichlet(np.ones(m), size=n)
        pis = self.pi_floor * m * np.full((n, m), 1.0 / m) + (1.0 - self.pi_floor * m) * raw
        return thetas, pis


def quadratic_instance(
    seed, dim, m, lam=1.0, spectrum=(-1.0, 1.0), radius=10.0, pi_floor=None
):
    """Deterministic instance; A_i eigenvalues drawn from ``spectrum``."""
    if dim < 1 or m < 2:
        raise DomainError("need dim >= 1 and m >= 2")
    lo, hi = spectrum
    if hi < lo:
        raise DomainError(f"empty spectrum range {spectrum!r}")
    rng = np.random.default_rng(seed)
    a = np.empty((m, dim, dim))
    for i in range(m):
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eigs = rng.uniform(lo, hi, size=dim)
        a[i] = (q * eigs) @ q.T
        a[i] = 0.5 * (a[i] + a[i].T)
    b = 0.1 * rng.standard_normal((m, dim))
    c = rng.uniform(0.0, 1.0, size=m)
    center = np.zeros(dim)
    if pi_floor is None:
        pi_floor = 1.0 / (20.0 * m)
    return QuadraticMinimax(
        a=a, b=b, c=c, lam=float(lam), center=center, radius=float(radius),
        pi_floor=float(pi_floor),
    )


def make_quadratic(seed, dim, m, lam=1.0, spectrum=(-1.0, 1.0)):
    """Seeded quadratic saddle problem with its certified smoothness info."""
    inst = quadratic_instance(seed, dim, m, lam=lam, spectrum=spectrum)
    return inst.problem(), inst.smoothness()


@dataclass(frozen=True)
class ContractionReport:
    """Per-step slack of the weight-distance contraction bound.

    slack_t = factor * D_t + coeff * gamma_t^2 * kappa^6 * ||grad Phi_t||^2 - D_{t+1},
    with factor = 1 - 1/(64 kappa^2); a negative slack is a violation.
    """

    factor: float
    kappa: float
    n_steps: int
    min_slack: float
    violations: int
    violation_steps: tuple


def verify_contraction(trace, info):
    """Check the contraction inequality along a recorded run."""
    if trace.bregman_to_best is None or trace.grad_phi_norm is None:
        raise DomainError("trace lacks best-response columns")
    kappa = info.kappa
    factor = 1.0 - 1.0 / (64.0 * kappa**2)
    d = trace.bregman_to_best
    gn = trace.grad_phi_norm
    gamma = trace.stepsize_theta
    slack = (
        factor * d[:-1]
        + CONTRACTION_GRAD_COEFF * gamma[:-1] ** 2 * kappa**6 * gn[:-1] ** 2
        - d[1:]
    )
    bad = np.nonzero(slack < 0.0)[0]
    return ContractionReport(
        factor=factor,
        kappa=kappa,
        n_steps=slack.size,
        min_slack=float(slack.min()) if slack.size else 0.0,
        violations=int(bad.size),
        violation_steps=tuple(int(i) for i in bad[:32]),
    )


def stationarity(trace, t=None):
    """Running mean of squared envelope-gradient norms over the first t iterates."""
    if trace.grad_phi_norm is None:
        raise DomainError("trace lacks the envelope-gradient column")
    if t is None:
        t = trace.n_iterations
    if not 1 <= t <= len(trace):
        raise DomainError(f"t={t} outside trace of length {len(trace)}")
    gn = trace.grad_phi_norm[:t]
    return float(np.mean(gn * gn))


def restricted_smoothness(lam, m, radius):
    """Weight-only smoothness bound on the ball-restricted simplex.

    Solves the minimum-coordinate problem on the intersection of the simplex
    with a Euclidean ball of the given radius around the uniform vector (a
    1-d root find) and returns lam / a_min.  Radii so large that the ball
    pokes out of the simplex are clipped with a warning.
    """
    if m < 2:
        raise DomainError("need m >= 2")
    if radius <= 0:
        raise DomainError("radius must be positive")
    r_crit = 1.0 / np.sqrt(m * (m - 1.0))
    if radius >= r_crit:
        warnings.warn(
            f"radius {radius} exceeds the simplex (critical {r_crit:.6g}); clipping",
            stacklevel=2,
        )
        radius = (1.0 - 1e-9) * r_crit

    u = 1.0 / m

    def h(a):
        return (a - u) ** 2 + (1.0 - a * m) ** 2 / (m * m * (m - 1.0)) - radius**2

    lo = u - 2.0 * radius
    a_min = brentq(h, lo, u, xtol=1e-15)
    return lam / a_min


def gaussian_batch_oracle(problem, sigma):
    """Unbiased stochastic gradient oracle with E||noise||^2 = sigma^2 per sample.

    Averaging a batch of b samples is equivalent in distribution to one
    draw with variance sigma^2 / b, which is how it is generated.
    """
    sigma = float(sigma)

    def oracle(theta, pi, batch_size, rng):
        _, grads = problem.evaluate_losses(theta)
        g = grads.T @ pi
        dim = g.size
        noise = rng.standard_normal(dim) * (sigma / np.sqrt(dim * batch_size))
        return g + noise

    return oracle
