"""Distance generating functions, Bregman divergences, and prox solvers on the simplex.

The weight domain is the probability simplex, optionally intersected with a
Euclidean ball around the uniform vector.  Two distance generating functions
are supported: negative entropy (whose Bregman divergence is the KL
divergence) and the squared Euclidean norm.  Both are 1-strongly convex on
the simplex, so D(p, q) >= ||p - q||^2 / 2 everywhere.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DegenerateReferenceError, DomainError, NumericError, SolverFailureError

# Coordinate floor: prox outputs are clipped to >= EPS_PI and renormalized so
# that grad(psi) stays finite for the entropy generator.
EPS_PI = 1e-12

_SUM_TOL = 1e-9


def check_weights(pi, m=None, name="pi"):
    """Validate and return a weight vector as a float array.

    Requires nonnegative entries summing to 1 (tolerance 1e-9 on the sum to
    absorb accumulated rounding; stored members are kept to 1e-12).
    """
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 1:
        raise DomainError(f"{name} must be a 1-d vector, got shape {pi.shape}")
    if m is not None and pi.shape[0] != m:
        raise DomainError(f"{name} has {pi.shape[0]} entries, expected {m}")
    if not np.all(np.isfinite(pi)):
        raise DomainError(f"{name} contains non-finite entries")
    if np.any(pi < -_SUM_TOL):
        raise DomainError(f"{name} has negative entries: {pi}")
    if abs(pi.sum() - 1.0) > _SUM_TOL:
        raise DomainError(f"{name} does not sum to 1 (sum={pi.sum()!r})")
    return pi


class DistanceGenerator(Enum):
    """Distance generating function psi on the simplex."""

    NEGATIVE_ENTROPY = "negative-entropy"
    SQUARED_EUCLIDEAN = "squared-euclidean"

    def psi(self, pi):
        """psi(pi); for entropy 0*log(0) is taken as 0."""
        pi = np.asarray(pi, dtype=float)
        if self is DistanceGenerator.NEGATIVE_ENTROPY:
            return float(np.sum(np.where(pi > 0.0, pi * np.log(np.maximum(pi, EPS_PI)), 0.0)))
        return 0.5 * float(pi @ pi)

    def psi_grad(self, pi):
        """grad psi(pi); raises if a coordinate is below the floor for entropy.

        The check leaves a factor-2 margin below the floor so that points
        floored and renormalized by the prox (which lands a hair under the
        floor after rescaling) stay valid.
        """
        pi = np.asarray(pi, dtype=float)
        if self is DistanceGenerator.NEGATIVE_ENTROPY:
            if np.any(pi < 0.5 * EPS_PI):
                raise DegenerateReferenceError(
                    f"entropy gradient undefined: min coordinate {pi.min()!r} < {EPS_PI}"
                )
            return 1.0 + np.log(pi)
        return pi.copy()


@dataclass(frozen=True)
class WeightDomain:
    """Simplex with m vertices, optionally restricted to ||pi - U|| <= radius.

    ``radius=None`` means the full simplex; U is the uniform vector.
    """

    m: int
    radius: float | None = None

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"need m >= 1 loss terms, got {self.m}")
        if self.radius is not None and not 0.0 < self.radius < 1.0:
            raise DomainError(f"ball radius must lie in (0, 1), got {self.radius}")

    @property
    def center(self):
        return np.full(self.m, 1.0 / self.m)

    def contains(self, pi, tol=_SUM_TOL):
        pi = np.asarray(pi, dtype=float)
        if pi.shape != (self.m,) or not np.all(np.isfinite(pi)):
            return False
        if np.any(pi < -tol) or abs(pi.sum() - 1.0) > tol:
            return False
        if self.radius is not None:
            return float(np.linalg.norm(pi - self.center)) <= self.radius + tol
        return True

    def validate(self, pi, name="pi"):
        pi = check_weights(pi, self.m, name=name)
        if self.radius is not None:
            dist = float(np.linalg.norm(pi - self.center))
            if dist > self.radius + _SUM_TOL:
                raise DomainError(
                    f"{name} is outside the ball: ||{name} - U|| = {dist!r} > {self.radius}"
                )
        return pi


def divergence(gen, p, q):
    """Bregman divergence D_psi(p, q) = psi(p) - psi(q) - <grad psi(q), p - q>.

    For NEGATIVE_ENTROPY on the simplex this equals sum_i p_i log(p_i / q_i);
    the KL form is used directly for numerical stability (p may touch the
    boundary, q must stay above the coordinate floor).
    """
    p = check_weights(p, name="p")
    q = check_weights(q, m=p.shape[0], name="q")
    if gen is DistanceGenerator.NEGATIVE_ENTROPY:
        if np.any(q < 0.5 * EPS_PI):
            raise DegenerateReferenceError(
                f"divergence reference q has coordinate below floor {EPS_PI}"
            )
        val = float(np.sum(np.where(p > 0.0, p * np.log(np.maximum(p, EPS_PI) / q), 0.0)))
    else:
        d = p - q
        val = 0.5 * float(d @ d)
    return max(val, 0.0)


def _floor_and_renormalize(pi):
    pi = np.maximum(pi, EPS_PI)
    return pi / pi.sum()


def prox_simplex_kl(pi_t, scaled_grad):
    """Closed-form KL prox step on the full simplex.

    Returns argmin over the simplex of  -<g, pi> + KL(pi, pi_t)  for
    g = scaled_grad, i.e. pi_i proportional to pi_t_i * exp(g_i).  The
    exponent is shifted by its maximum before exponentiation so that large
    gradients cannot overflow.
    """
    pi_t = check_weights(pi_t, name="pi_t")
    g = np.asarray(scaled_grad, dtype=float)
    if g.shape != pi_t.shape:
        raise DomainError(f"gradient shape {g.shape} does not match weights {pi_t.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("prox received non-finite gradient entries")
    if np.any(pi_t < 0.5 * EPS_PI):
        raise DegenerateReferenceError("prox base point has coordinate below floor")
    w = np.log(pi_t) + g
    w -= w.max()
    e = np.exp(w)
    return _floor_and_renormalize(e / e.sum())


def _solve_log_plus_linear(c, nu, max_iter=50, tol=1e-12):
    """Vectorized root of log(w) + nu*w = c for w > 0, nu > 0.

    Newton runs in x = log(w): phi(x) = x + nu*exp(x) - c is increasing and
    convex, so from any start with phi >= 0 the iteration descends
    monotonically to the root.  The start x0 = min(c, log((max(c,0)+1)/nu + 1))
    satisfies phi(x0) >= 0 and keeps exp(x) bounded throughout.
    """
    c = np.asarray(c, dtype=float)
    x = np.minimum(c, np.log((np.maximum(c, 0.0) + 1.0) / nu + 1.0))
    for _ in range(max_iter):
        ex = np.exp(x)
        step = (x + nu * ex - c) / (1.0 + nu * ex)
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    return np.exp(x)


def prox_restricted(pi_t, scaled_grad, radius, max_outer=200, tol=1e-10):
    """KL prox on the simplex intersected with the ball ||pi - U|| <= radius.

    If the unrestricted prox already lies in the ball it is returned as is.
    Otherwise the KKT system is solved: the ball multiplier nu >= 0 is found
    by bisection (bracket [0, nu_max] grown geometrically), and for each nu
    the stationarity condition log(pi_i) + nu*pi_i = g_i + log(pi_t_i) + nu/m - s
    is solved per coordinate with scalar Newton, with the normalization shift
    s bisected so the coordinates sum to 1.  The result satisfies both
    constraints to ``tol``.
    """
    m = np.asarray(pi_t, dtype=float).shape[0]
    domain = WeightDomain(m, radius)
    pi_t = domain.validate(pi_t, name="pi_t")
    g = np.asarray(scaled_grad, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericError("prox received non-finite gradient entries")
    if m == 1:
        return np.array([1.0])

    free = prox_simplex_kl(pi_t, g)
    center = domain.center
    if float(np.linalg.norm(free - center)) <= radius:
        return free

    base = g + np.log(pi_t)
    log_m = np.log(m)

    def solve_for_nu(nu):
        # sum_i w_i(s) is strictly decreasing in s; the bracket below brings
        # the max-coordinate between 1/m and 1, so it always contains the root
        c0 = base + nu / m
        s_lo = float(c0.max()) - nu - log_m
        s_hi = float(c0.max()) + log_m
        w = _solve_log_plus_linear(c0 - s_lo, nu)
        for _ in range(120):
            s_mid = 0.5 * (s_lo + s_hi)
            w = _solve_log_plus_linear(c0 - s_mid, nu)
            r = w.sum() - 1.0
            if abs(r) < 1e-15:
                break
            if r > 0.0:
                s_lo = s_mid
            else:
                s_hi = s_mid
        return w / w.sum()

    # grow the bracket until the ball constraint is satisfied at nu_hi
    nu_lo, nu_hi = 0.0, 1.0
    for _ in range(100):
        if float(np.linalg.norm(solve_for_nu(nu_hi) - center)) <= radius:
            break
        nu_lo = nu_hi
        nu_hi *= 2.0
    else:
        raise SolverFailureError(
            "ball multiplier bracket did not close",
            residual=float(np.linalg.norm(solve_for_nu(nu_hi) - center) - radius),
        )

    pi = solve_for_nu(nu_hi)
    for _ in range(max_outer):
        nu_mid = 0.5 * (nu_lo + nu_hi)
        pi = solve_for_nu(nu_mid)
        dist = float(np.linalg.norm(pi - center))
        if abs(dist - radius) < tol:
            return _floor_and_renormalize(pi)
        if dist > radius:
            nu_lo = nu_mid
        else:
            nu_hi = nu_mid
    residual = abs(float(np.linalg.norm(pi - center)) - radius)
    if residual < 10.0 * tol:
        return _floor_and_renormalize(pi)
    raise SolverFailureError("restricted prox bisection did not converge", residual=residual)


def three_point_residual(gen, x, y, z):
    """Residual of the three-point identity; zero (to rounding) for all inputs.

    D(x, y) - D(x, z) - D(z, y) - <grad psi(z) - grad psi(y), x - z>
    """
    x = check_weights(x, name="x")
    y = check_weights(y, m=x.shape[0], name="y")
    z = check_weights(z, m=x.shape[0], name="z")
    lhs = divergence(gen, x, y) - divergence(gen, x, z) - divergence(gen, z, y)
    inner = float((gen.psi_grad(z) - gen.psi_grad(y)) @ (x - z))
    return lhs - inner
