"""Desk-scale PDE testbeds.

Each problem is a boundary-value system: interior operators R_i[u](x) = f_i(x)
on a box domain and boundary operators B_j[u](x) = g_j(x) on selected faces.
Training losses are mean squared residuals over fixed collocation sets, one
loss term per operator, consumable as saddle-problem loss oracles.  Also
provides the relative-L2 quality metric and the residual/boundary
gradient-conflict ratio.
"""

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    FdJet,
    JetEvaluator,
    Tape,
    _flatten_grads,
    _leaf_layers,
    add_const,
    forward_batch,
    mean_square,
)
from .exceptions import DomainError

DEFAULT_N_INTERIOR = 1024
DEFAULT_N_BOUNDARY = 256


@dataclass(frozen=True)
class InteriorOperator:
    """Interior operator R[u] with source term f; residual is R[u](x) - f(x)."""

    name: str
    func: object  # callable(ev) -> value array / taped Var of shape (n, 1)
    source: object  # callable(pts (n, d)) -> (n,)


@dataclass(frozen=True)
class BoundaryOperator:
    """Boundary operator B[u] with target g, sampled on the given box faces.

    ``faces`` lists (dim, side) pairs, side 0 for the lower bound and 1 for
    the upper; e.g. a parabolic problem omits the final-time face.
    """

    name: str
    func: object
    target: object
    faces: tuple


@dataclass(frozen=True)
class PdeSpec:
    pde_id: str
    bounds: np.ndarray  # (d, 2) box
    interior: tuple
    boundary: tuple
    exact: object = None  # callable(pts (n, d)) -> (n,), optional

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]):
            raise DomainError(f"degenerate domain bounds {b!r}")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "interior", tuple(self.interior))
        object.__setattr__(self, "boundary", tuple(self.boundary))

    @property
    def dim(self):
        return self.bounds.shape[0]

    @property
    def n_terms(self):
        return len(self.interior) + len(self.boundary)

    @property
    def interior_indices(self):
        return tuple(range(len(self.interior)))

    @property
    def boundary_indices(self):
        return tuple(range(len(self.interior), self.n_terms))


@dataclass(frozen=True)
class CollocationSet:
    """Fixed sample points: one interior set, one boundary set per operator."""

    interior: np.ndarray
    boundary: tuple
    seed: int


def _face_measure(bounds, dim):
    lengths = bounds[:, 1] - bounds[:, 0]
    other = np.delete(lengths, dim)
    return float(np.prod(other)) if other.size else 1.0


def sample_collocation(spec, n_r, n_b, seed):
    """Uniform interior points plus per-operator boundary points.

    Interior points are strictly inside the box.  Boundary points lie
    exactly on the sampled faces; faces are picked with probability
    proportional to their measure (deterministically alternated in 1d,
    where faces are single points).  Deterministic per seed.
    """
    if n_r < 1 or n_b < 1:
        raise DomainError("collocation counts must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = spec.bounds[:, 0], spec.bounds[:, 1]
    u = rng.random((n_r, spec.dim))
    u = u * (1.0 - 2e-12) + 1e-12  # keep strictly inside
    interior = lo + u * (hi - lo)

    boundary = []
    for op in spec.boundary:
        faces = tuple(op.faces)
        pts = np.empty((n_b, spec.dim))
        if spec.dim == 1:
            for i in range(n_b):
                d, side = faces[i % len(faces)]
                pts[i, d] = spec.bounds[d, side]
        else:
            probs = np.array([_face_measure(spec.bounds, d) for d, _ in faces])
            probs /= probs.sum()
            choice = rng.choice(len(faces), size=n_b, p=probs)
            fill = lo + rng.random((n_b, spec.dim)) * (hi - lo)
            pts[:] = fill
            for i, c in enumerate(choice):
                d, side = faces[c]
                pts[i, d] = spec.bounds[d, side]
        boundary.append(pts)
    return CollocationSet(interior=interior, boundary=tuple(boundary), seed=seed)


def _operator_loss(net, theta, func, rhs, points):
    tape = Tape()
    layers, leaves = _leaf_layers(tape, net.widths, theta)
    ev = JetEvaluator(tape, net, layers, points)
    residual = add_const(func(ev), -rhs[:, None])
    loss = mean_square(residual)
    return float(loss.value), _flatten_grads(tape.gradient(loss, leaves))


def loss_terms(net, spec, colloc):
    """One (value, parameter-gradient) oracle per operator, interior first.

    The returned closures take the flat parameter vector, so they plug
    directly into a saddle problem as loss oracles.
    """

    def interior_oracle(op):
        rhs = np.asarray(op.source(colloc.interior), dtype=float)

        def oracle(theta, _op=op, _rhs=rhs):
            return _operator_loss(net, theta, _op.func, _rhs, colloc.interior)

        return oracle

    def boundary_oracle(op, pts):
        rhs = np.asarray(op.target(pts), dtype=float)

        def oracle(theta, _op=op, _rhs=rhs, _pts=pts):
            return _operator_loss(net, theta, _op.func, _rhs, _pts)

        return oracle

    oracles = [interior_oracle(op) for op in spec.interior]
    oracles += [boundary_oracle(op, pts) for op, pts in zip(spec.boundary, colloc.boundary)]
    return oracles


def resampling_loss_terms(net, spec, n_r, n_b, seed, every):
    """Loss oracles that redraw the collocation set every ``every`` iterations.

    The draw for epoch e uses seed + e, so runs are reproducible.  The first
    oracle advances the epoch counter; oracles are meant to be evaluated
    together once per iteration (single-threaded).
    """
    if every < 1:
        raise DomainError("resampling period must be >= 1")
    state = {"calls": 0, "colloc": None, "oracles": None}

    def refresh():
        epoch = state["calls"] // every
        colloc = sample_collocation(spec, n_r, n_b, seed + epoch)
        state["colloc"] = colloc
        state["oracles"] = loss_terms(net, spec, colloc)

    refresh()

    def make(i):
        def oracle(theta, _i=i):
            if _i == 0:
                if state["calls"] % every == 0 and state["calls"] > 0:
                    refresh()
                state["calls"] += 1
            return state["oracles"][_i](theta)

        return oracle

    return [make(i) for i in range(spec.n_terms)]


def operator_values(net, theta, func, points):
    """Raw operator values B[u](x) / R[u](x) at the given points (no source)."""
    tape = Tape()
    layers, _ = _leaf_layers(tape, net.widths, theta)
    ev = JetEvaluator(tape, net, layers, points)
    return np.asarray(func(ev).value).ravel()


def interior_residuals(net, theta, spec, index, points):
    op = spec.interior[index]
    return operator_values(net, theta, op.func, points) - np.asarray(op.source(points))


def exact_interior_residuals(spec, index, points, h=1e-4):
    """Residual of the attached exact solution, via finite differences of it."""
    if spec.exact is None:
        raise DomainError(f"{spec.pde_id} has no exact solution attached")
    op = spec.interior[index]
    ev = FdJet(spec.exact, points, h=h)
    return np.asarray(op.func(ev)).ravel() - np.asarray(op.source(points))


def exact_boundary_residuals(spec, index, points, h=1e-4):
    if spec.exact is None:
        raise DomainError(f"{spec.pde_id} has no exact solution attached")
    op = spec.boundary[index]
    ev = FdJet(spec.exact, points, h=h)
    return np.asarray(op.func(ev)).ravel() - np.asarray(op.target(points))


def l2re(pred, truth):
    """Relative L2 error sqrt(sum (y - y')^2 / sum y'^2) against the reference."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape:
        raise DomainError(f"length mismatch: {pred.shape} vs {truth.shape}")
    denom = float(truth @ truth)
    if denom <= 0.0:
        raise DomainError("reference values are identically zero")
    diff = pred - truth
    return math.sqrt(float(diff @ diff) / denom)


def conflict_ratio(grad_r, grad_b):
    """chi = ||grad of residual loss|| / ||grad of boundary loss||."""
    nr = float(np.linalg.norm(np.asarray(grad_r, dtype=float)))
    nb = float(np.linalg.norm(np.asarray(grad_b, dtype=float)))
    if nb == 0.0:
        raise DomainError("conflict ratio undefined: boundary gradient is zero")
    return nr / nb


def chi_windows(chi, n_windows=3):
    """Mean and spread of chi over contiguous iteration windows.

    Windows default to thirds of the run; sigma is the (population) standard
    deviation.  Returns a list of dicts with start/stop/mean/sigma.
    """
    chi = np.asarray(chi, dtype=float)
    n = chi.size
    if n < n_windows:
        raise DomainError(f"trace too short ({n}) for {n_windows} windows")
    edges = np.linspace(0, n, n_windows + 1).astype(int)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        w = chi[lo:hi]
        out.append(
            {"start": int(lo), "stop": int(hi), "mean": float(w.mean()), "sigma": float(w.std())}
        )
    return out


def evaluation_grid(spec, n=1024):
    """Deterministic test points for quality metrics (dense grid over the box)."""
    lo, hi = spec.bounds[:, 0], spec.bounds[:, 1]
    if spec.dim == 1:
        return np.linspace(lo[0], hi[0], n)[:, None]
    side = max(2, int(round(n ** (1.0 / spec.dim))))
    axes = [np.linspace(lo[d], hi[d], side) for d in range(spec.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def predict(net, points, params=None):
    """Scalar net values at the given points, (n, d) -> (n,)."""
    return forward_batch(net, points, params=params)[:, 0]


# ---------------------------------------------------------------------------
# built-in problems

_PI = math.pi


def _poisson1d():
    exact = lambda p: np.sin(_PI * p[:, 0])
    return PdeSpec(
        pde_id="poisson1d",
        bounds=[[0.0, 1.0]],
        interior=(
            InteriorOperator(
                name="laplace",
                func=lambda ev: ev.d2(0, 0),
                source=lambda p: -_PI**2 * np.sin(_PI * p[:, 0]),
            ),
        ),
        boundary=(
            BoundaryOperator(
                name="dirichlet",
                func=lambda ev: ev.u(),
                target=lambda p: np.zeros(p.shape[0]),
                faces=((0, 0), (0, 1)),
            ),
        ),
        exact=exact,
    )


def _poisson2d():
    exact = lambda p: np.sin(_PI * p[:, 0]) * np.sin(_PI * p[:, 1])
    return PdeSpec(
        pde_id="poisson2d",
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        interior=(
            InteriorOperator(
                name="laplace",
                func=lambda ev: ev.d2(0, 0) + ev.d2(1, 1),
                source=lambda p: -2.0 * _PI**2 * np.sin(_PI * p[:, 0]) * np.sin(_PI * p[:, 1]),
            ),
        ),
        boundary=(
            BoundaryOperator(
                name="dirichlet",
                func=lambda ev: ev.u(),
                target=lambda p: np.zeros(p.shape[0]),
                faces=((0, 0), (0, 1), (1, 0), (1, 1)),
            ),
        ),
        exact=exact,
    )


def _heat1d():
    # coordinates (x, t); parabolic: lateral faces plus the initial-time face
    exact = lambda p: np.exp(-(_PI**2) * p[:, 1]) * np.sin(_PI * p[:, 0])
    return PdeSpec(
        pde_id="heat1d",
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        interior=(
            InteriorOperator(
                name="heat",
                func=lambda ev: ev.d(1) - ev.d2(0, 0),
                source=lambda p: np.zeros(p.shape[0]),
            ),
        ),
        boundary=(
            BoundaryOperator(
                name="dirichlet-and-initial",
                func=lambda ev: ev.u(),
                target=exact,
                faces=((0, 0), (0, 1), (1, 0)),
            ),
        ),
        exact=exact,
    )


def _wave1d():
    # coordinates (x, t); hyperbolic: displacement data plus zero initial velocity
    exact = lambda p: np.sin(_PI * p[:, 0]) * np.cos(_PI * p[:, 1])
    return PdeSpec(
        pde_id="wave1d",
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        interior=(
            InteriorOperator(
                name="wave",
                func=lambda ev: ev.d2(1, 1) - ev.d2(0, 0),
                source=lambda p: np.zeros(p.shape[0]),
            ),
        ),
        boundary=(
            BoundaryOperator(
                name="dirichlet-and-initial",
                func=lambda ev: ev.u(),
                target=exact,
                faces=((0, 0), (0, 1), (1, 0)),
            ),
            BoundaryOperator(
                name="initial-velocity",
                func=lambda ev: ev.d(1),
                target=lambda p: np.zeros(p.shape[0]),
                faces=((1, 0),),
            ),
        ),
        exact=exact,
    )


def builtin_problems():
    """Catalog of built-in problems, addressable by string id."""
    return {
        "poisson1d": _poisson1d(),
        "poisson2d": _poisson2d(),
        "heat1d": _heat1d(),
        "wave1d": _wave1d(),
    }


def get_problem(pde_id):
    problems = builtin_problems()
    if pde_id not in problems:
        raise DomainError(f"unknown problem {pde_id!r}; available: {sorted(problems)}")
    return problems[pde_id]
