"""Self-contained autodiff for small dense MLPs.

Reverse mode runs over a tape of array-valued operations (matmul, bias add,
elementwise nonlinearities, reductions) and yields parameter gradients.
Input derivatives up to second order come from jets: each tape value carries
truncated Taylor components along one or two input directions, so mixed
partials like d2u/dx dt are exact to machine precision, and because the jet
components are themselves taped, parameter gradients of PDE residuals follow
from a single backward pass.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DomainError, UsageError


class Tape:
    """Recorded elementary operations in execution (topological) order."""

    __slots__ = ("nodes", "_next_id")

    def __init__(self):
        self.nodes = []
        self._next_id = 0

    def var(self, value):
        """Create a leaf variable (no recorded inputs)."""
        v = Var(self, np.asarray(value, dtype=float))
        return v

    def _register(self, value, inputs):
        out = Var(self, value)
        self.nodes.append((out.id, inputs))
        return out

    def gradient(self, root, leaves, seed=None):
        """Adjoints of ``root`` with respect to ``leaves`` (one backward pass)."""
        if root.tape is not self:
            raise UsageError("root variable was recorded on a different tape")
        adj = {root.id: np.ones_like(root.value) if seed is None else np.asarray(seed, float)}
        for out_id, inputs in reversed(self.nodes):
            if out_id > root.id:
                continue
            g = adj.pop(out_id, None)
            if g is None:
                continue
            for in_id, vjp in inputs:
                contrib = vjp(g)
                prev = adj.get(in_id)
                adj[in_id] = contrib if prev is None else prev + contrib
        return [adj.get(leaf.id, np.zeros_like(leaf.value)) for leaf in leaves]


class Var:
    """A value recorded on a tape.  Supports +, -, * for composing operators."""

    __slots__ = ("tape", "value", "id")

    def __init__(self, tape, value):
        self.tape = tape
        self.value = value
        self.id = tape._next_id
        tape._next_id += 1

    def __add__(self, other):
        if isinstance(other, Var):
            return add(self, other)
        return add_const(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return sub(self, other)
        return add_const(self, -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return add_const(neg(self), other)

    def __mul__(self, other):
        if isinstance(other, Var):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)


def _same_tape(*vs):
    tape = vs[0].tape
    for v in vs[1:]:
        if v.tape is not tape:
            raise UsageError("variables belong to different tapes")
    return tape


def matmul(a, w):
    tape = _same_tape(a, w)
    av, wv = a.value, w.value
    return tape._register(
        av @ wv,
        ((a.id, lambda g, wv=wv: g @ wv.T), (w.id, lambda g, av=av: av.T @ g)),
    )


def linear(x, w, b):
    """x @ w + b with the bias broadcast over rows."""
    tape = _same_tape(x, w, b)
    xv, wv = x.value, w.value
    out = xv @ wv
    out += b.value
    return tape._register(
        out,
        (
            (x.id, lambda g, wv=wv: g @ wv.T),
            (w.id, lambda g, xv=xv: xv.T @ g),
            (b.id, lambda g: g.sum(axis=0)),
        ),
    )


def add(a, b):
    tape = _same_tape(a, b)
    return tape._register(a.value + b.value, ((a.id, lambda g: g), (b.id, lambda g: g)))


def sub(a, b):
    tape = _same_tape(a, b)
    return tape._register(a.value - b.value, ((a.id, lambda g: g), (b.id, lambda g: -g)))


def mul(a, b):
    tape = _same_tape(a, b)
    av, bv = a.value, b.value
    return tape._register(
        av * bv, ((a.id, lambda g, bv=bv: g * bv), (b.id, lambda g, av=av: g * av))
    )


def scale(a, c):
    c = float(c)
    return a.tape._register(a.value * c, ((a.id, lambda g, c=c: g * c),))


def neg(a):
    return scale(a, -1.0)


def add_const(a, c):
    c = np.asarray(c, dtype=float)
    return a.tape._register(a.value + c, ((a.id, lambda g: g),))


def mul_const(a, c):
    c = np.asarray(c, dtype=float)
    return a.tape._register(a.value * c, ((a.id, lambda g, c=c: g * c),))


def tanh(a):
    t = np.tanh(a.value)
    return a.tape._register(t, ((a.id, lambda g, t=t: g * (1.0 - t * t)),))


def sin(a):
    c = np.cos(a.value)
    return a.tape._register(np.sin(a.value), ((a.id, lambda g, c=c: g * c),))


def cos(a):
    s = np.sin(a.value)
    return a.tape._register(np.cos(a.value), ((a.id, lambda g, s=s: -g * s),))


def square(a):
    av = a.value
    return a.tape._register(av * av, ((a.id, lambda g, av=av: 2.0 * av * g),))


def mean(a):
    n = a.value.size
    shape = a.value.shape
    return a.tape._register(
        a.value.mean(), ((a.id, lambda g, n=n, shape=shape: np.full(shape, g / n)),)
    )


def sumv(a):
    shape = a.value.shape
    return a.tape._register(
        a.value.sum(), ((a.id, lambda g, shape=shape: np.full(shape, g)),)
    )


def mean_square(a):
    """mean(a^2) as a single taped node."""
    av = a.value
    n = av.size
    return a.tape._register(
        float(np.mean(av * av)), ((a.id, lambda g, av=av, n=n: (2.0 * g / n) * av),)
    )


def matmul_const_left(x, w):
    """x @ w for a constant left operand (no adjoint flows into x)."""
    xv = np.asarray(x, dtype=float)
    return w.tape._register(xv @ w.value, ((w.id, lambda g, xv=xv: xv.T @ g),))


def linear_const_x(x, w, b):
    """x @ w + b for a constant input batch."""
    tape = _same_tape(w, b)
    xv = np.asarray(x, dtype=float)
    out = xv @ w.value
    out += b.value
    return tape._register(
        out,
        ((w.id, lambda g, xv=xv: xv.T @ g), (b.id, lambda g: g.sum(axis=0))),
    )


# ---------------------------------------------------------------------------
# dense MLPs


class Activation(Enum):
    TANH = "tanh"
    SIN = "sin"


def n_params(widths):
    """Flat parameter count: sum over layers of (fan_in + 1) * fan_out."""
    return sum((widths[i] + 1) * widths[i + 1] for i in range(len(widths) - 1))


def unpack_params(widths, theta):
    """Split a flat parameter vector into [(W, b), ...] per layer."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n_params(widths),):
        raise DomainError(
            f"parameter vector has {theta.size} entries, expected {n_params(widths)}"
        )
    layers = []
    pos = 0
    for i in range(len(widths) - 1):
        fi, fo = widths[i], widths[i + 1]
        w = theta[pos : pos + fi * fo].reshape(fi, fo)
        pos += fi * fo
        b = theta[pos : pos + fo]
        pos += fo
        layers.append((w, b))
    return layers


def init_params(widths, seed=0):
    """Glorot-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    parts = []
    for i in range(len(widths) - 1):
        fi, fo = widths[i], widths[i + 1]
        bound = np.sqrt(6.0 / (fi + fo))
        parts.append(rng.uniform(-bound, bound, size=fi * fo))
        parts.append(np.zeros(fo))
    return np.concatenate(parts)


@dataclass
class Mlp:
    """Dense net: hidden layers with a C^2 activation, linear output layer."""

    widths: tuple
    activation: Activation = Activation.TANH
    params: np.ndarray = None

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise DomainError(f"invalid layer widths {self.widths}")
        if self.params is None:
            self.params = init_params(self.widths, seed=0)
        else:
            self.params = np.asarray(self.params, dtype=float)
            unpack_params(self.widths, self.params)  # shape check

    @classmethod
    def create(cls, widths, activation=Activation.TANH, seed=0):
        return cls(tuple(widths), activation, init_params(widths, seed=seed))

    @property
    def in_dim(self):
        return self.widths[0]

    @property
    def out_dim(self):
        return self.widths[-1]


def _act_value(kind, z):
    return np.tanh(z) if kind is Activation.TANH else np.sin(z)


def forward_batch(net, x, params=None):
    """Plain forward pass over a batch of inputs, (n, d) -> (n, m)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise DomainError(f"input batch shape {x.shape} does not match d={net.in_dim}")
    layers = unpack_params(net.widths, net.params if params is None else params)
    h = x
    for w, b in layers[:-1]:
        h = _act_value(net.activation, h @ w + b)
    w, b = layers[-1]
    return h @ w + b


def forward(net, x, params=None):
    """Forward pass at a single input point, (d,) -> (m,)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.in_dim,):
        raise DomainError(f"input shape {x.shape} does not match d={net.in_dim}")
    return forward_batch(net, x[None, :], params=params)[0]


def _leaf_layers(tape, widths, theta):
    layers = [(tape.var(w), tape.var(b)) for w, b in unpack_params(widths, theta)]
    leaves = [v for pair in layers for v in pair]
    return layers, leaves


def _flatten_grads(grads):
    return np.concatenate([g.ravel() for g in grads])


def grad_params(net, x, upstream, params=None):
    """Reverse-mode gradient of <upstream, net(x)> in the flat parameters."""
    x = np.asarray(x, dtype=float)
    upstream = np.asarray(upstream, dtype=float)
    if upstream.shape != (net.out_dim,):
        raise DomainError(f"upstream shape {upstream.shape} != ({net.out_dim},)")
    tape = Tape()
    layers, leaves = _leaf_layers(tape, net.widths, net.params if params is None else params)
    h = tape.var(x[None, :])
    for w, b in layers[:-1]:
        z = linear(h, w, b)
        h = tanh(z) if net.activation is Activation.TANH else sin(z)
    out = linear(h, *layers[-1])
    s = sumv(mul_const(out, upstream[None, :]))
    return _flatten_grads(tape.gradient(s, leaves))


# ---------------------------------------------------------------------------
# jets: value plus first/second directional derivatives along (v1, v2)


@dataclass
class Jet:
    """Taped Taylor components of a computation along input directions.

    ``re`` is the value, ``d1``/``d2`` first derivatives along the two
    directions, ``d12`` the mixed second derivative.  Missing components are
    None and propagate as exact zeros; for coinciding directions d2 aliases
    d1 and is propagated once.
    """

    re: Var
    d1: Var = None
    d2: Var = None
    d12: Var = None


def _jet_linear(jet, w, b):
    def lin(c):
        if c is None:
            return None
        if isinstance(c, np.ndarray):
            return matmul_const_left(c, w)
        return matmul(c, w)

    if isinstance(jet.re, np.ndarray):
        re = linear_const_x(jet.re, w, b)
    else:
        re = linear(jet.re, w, b)
    d1 = lin(jet.d1)
    d2 = d1 if jet.d2 is jet.d1 else lin(jet.d2)
    return Jet(re, d1, d2, lin(jet.d12))


def _jet_activation(jet, kind):
    """Fused elementwise activation on all jet components.

    Records one node per output component with hand-derived adjoints:
    for y = act(r), D1 = f1(r)*d1, D12 = f1(r)*d12 + f2(r)*d1*d2, where
    f1 = act' and f2 = act''.
    """
    re, d1, d2, d12 = jet.re, jet.d1, jet.d2, jet.d12
    tape = re.tape
    rv = re.value
    aliased = d2 is d1
    need2 = d12 is not None or (d1 is not None and d2 is not None)
    need1 = need2 or d1 is not None or d2 is not None  # f2 = act'' backs D1 = f1*d1
    f2 = f2p = None
    if kind is Activation.TANH:
        t = np.tanh(rv)
        f1 = np.multiply(t, t)
        np.subtract(1.0, f1, out=f1)
        if need1:
            f2 = np.multiply(t, f1)
            f2 *= -2.0
        if need2:
            # d f2 / dr = -2 f1 (3 f1 - 2)
            f2p = f1 * 3.0
            f2p -= 2.0
            f2p *= f1
            f2p *= -2.0
    else:
        t = np.sin(rv)
        f1 = np.cos(rv)
        if need1:
            f2 = -t
        if need2:
            f2p = -f1

    out_re = tape._register(t, ((re.id, lambda g, f1=f1: g * f1),))

    out_d1 = None
    if d1 is not None:
        d1v = d1.value
        out_d1 = tape._register(
            np.multiply(f1, d1v),
            (
                (re.id, lambda g, f2=f2, d1v=d1v: g * (f2 * d1v)),
                (d1.id, lambda g, f1=f1: g * f1),
            ),
        )
    out_d2 = out_d1
    if d2 is not None and not aliased:
        d2v = d2.value
        out_d2 = tape._register(
            np.multiply(f1, d2v),
            (
                (re.id, lambda g, f2=f2, d2v=d2v: g * (f2 * d2v)),
                (d2.id, lambda g, f1=f1: g * f1),
            ),
        )

    out_d12 = None
    if need2:
        d1v = d1.value
        d2v = d2.value
        cross = np.multiply(d1v, d2v)
        if d12 is not None:
            d12v = d12.value
            value = np.multiply(f1, d12v)
            tmp = np.multiply(f2, cross)
            value += tmp
            re_coeff = np.multiply(f2, d12v)
            cross *= f2p  # cross no longer needed as such
            re_coeff += cross
        else:
            value = np.multiply(f2, cross)
            re_coeff = cross
            re_coeff *= f2p
        inputs = [(re.id, lambda g, c=re_coeff: g * c)]
        if aliased:
            coeff = np.multiply(f2, d1v)
            coeff *= 2.0
            inputs.append((d1.id, lambda g, c=coeff: g * c))
        else:
            inputs.append((d1.id, lambda g, c=f2, dv=d2v: g * (c * dv)))
            inputs.append((d2.id, lambda g, c=f2, dv=d1v: g * (c * dv)))
        if d12 is not None:
            inputs.append((d12.id, lambda g, f1=f1: g * f1))
        out_d12 = tape._register(value, tuple(inputs))
    return Jet(out_re, out_d1, out_d2, out_d12)


def jet_forward(tape, net, layers, x, v1=None, v2=None, same_directions=False):
    """Taped forward pass carrying Taylor components along v1 and v2.

    ``layers`` are the taped (W, b) leaf pairs; x is an (n, d) batch of
    points treated as constant with respect to the parameters.  Pass
    ``same_directions=True`` with v2=None for a pure second derivative along
    v1 (the duplicated first-order component is propagated once).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]

    def direction(v):
        if v is None:
            return None
        return np.broadcast_to(np.asarray(v, dtype=float), (n, x.shape[1])).copy()

    d1 = direction(v1)
    d2 = d1 if same_directions else direction(v2)
    jet = Jet(x, d1, d2, None)
    for w, b in layers[:-1]:
        jet = _jet_activation(_jet_linear(jet, w, b), net.activation)
    return _jet_linear(jet, *layers[-1])


class JetEvaluator:
    """Lazy taped evaluation of a net and its input derivatives at points x.

    Passes are cached by direction pair, so an operator asking for d2(0,0)
    and d2(1,1) triggers exactly two jet passes.  All components are taped
    against the same parameter leaves, ready for one backward pass.
    """

    def __init__(self, tape, net, layers, x):
        if net.out_dim != 1:
            raise DomainError("input derivatives require a scalar-output net")
        self.tape = tape
        self.net = net
        self.layers = layers
        self.x = np.asarray(x, dtype=float)
        self._passes = {}

    def _unit(self, j):
        if not 0 <= j < self.net.in_dim:
            raise DomainError(f"coordinate {j} out of range for d={self.net.in_dim}")
        e = np.zeros(self.net.in_dim)
        e[j] = 1.0
        return e

    def _run(self, key):
        if key not in self._passes:
            v1 = self._unit(key[0]) if len(key) >= 1 else None
            same = len(key) == 2 and key[0] == key[1]
            v2 = self._unit(key[1]) if len(key) == 2 and not same else None
            self._passes[key] = jet_forward(
                self.tape, self.net, self.layers, self.x, v1, v2, same_directions=same
            )
        return self._passes[key]

    def u(self):
        for jet in self._passes.values():
            return jet.re
        return self._run(()).re

    def d(self, j):
        for key, jet in self._passes.items():
            if len(key) >= 1 and key[0] == j:
                return jet.d1
            if len(key) == 2 and key[1] == j:
                return jet.d2
        return self._run((j,)).d1

    def d2(self, j, k):
        key = (min(j, k), max(j, k))
        return self._run(key).d12


class FdJet:
    """Finite-difference stand-in for JetEvaluator on a plain callable.

    Evaluates a function pts -> values and Richardson-extrapolated central
    differences, returning ndarrays.  Operators written against the
    JetEvaluator interface (u, d, d2, x) run unchanged, which gives an
    independent way to check exact solutions against residual operators.
    """

    def __init__(self, fn, x, h=1e-4):
        self.fn = fn
        self.x = np.asarray(x, dtype=float)
        self.h = float(h)

    def u(self):
        return self.fn(self.x)

    def _shift(self, j, t):
        p = self.x.copy()
        p[:, j] += t
        return self.fn(p)

    def _d1(self, j, h):
        return (self._shift(j, h) - self._shift(j, -h)) / (2.0 * h)

    def d(self, j):
        a = self._d1(j, self.h)
        b = self._d1(j, self.h / 2.0)
        return (4.0 * b - a) / 3.0

    def _d2_pure(self, j, h):
        return (self._shift(j, h) - 2.0 * self.fn(self.x) + self._shift(j, -h)) / (h * h)

    def _d2_mixed(self, j, k, h):
        def shift2(tj, tk):
            p = self.x.copy()
            p[:, j] += tj
            p[:, k] += tk
            return self.fn(p)

        return (shift2(h, h) - shift2(h, -h) - shift2(-h, h) + shift2(-h, -h)) / (4.0 * h * h)

    def d2(self, j, k):
        f = self._d2_pure(j, self.h) if j == k else self._d2_mixed(j, k, self.h)
        g = self._d2_pure(j, self.h / 2.0) if j == k else self._d2_mixed(j, k, self.h / 2.0)
        return (4.0 * g - f) / 3.0


def input_derivatives(net, x, order, coords, params=None):
    """First or second input derivative of a scalar-output net at a point.

    order 1 with coords j (or (j,)) returns du/dx_j; order 2 with coords
    (j, k) returns d2u/dx_j dx_k.  Exact (jet arithmetic), not a finite
    difference.
    """
    if net.out_dim != 1:
        raise DomainError("input derivatives require a scalar-output net")
    if order not in (1, 2):
        raise DomainError(f"derivative order {order} unsupported (must be 1 or 2)")
    x = np.asarray(x, dtype=float)
    if x.shape != (net.in_dim,):
        raise DomainError(f"input shape {x.shape} does not match d={net.in_dim}")
    if order == 1:
        j = coords if np.isscalar(coords) else tuple(coords)[0]
        key = (int(j),)
    else:
        j, k = coords
        key = (int(j), int(k))
    tape = Tape()
    layers, _ = _leaf_layers(tape, net.widths, net.params if params is None else params)
    ev = JetEvaluator(tape, net, layers, x[None, :])
    if order == 1:
        out = ev.d(key[0])
    else:
        # directions are passed in the order given (not canonicalized), so
        # mixed-partial symmetry is a genuine numerical property
        j, k = key
        same = j == k
        jet = jet_forward(
            tape, net, layers, x[None, :],
            ev._unit(j), None if same else ev._unit(k), same_directions=same,
        )
        out = jet.d12
    if out is None:  # linear-only nets carry exact-zero second derivatives
        return 0.0
    return float(out.value[0, 0])


def fd_check(f, x, h=1e-5):
    """Max relative disagreement between an analytic gradient and central differences.

    ``f`` maps a point to (value, gradient).  Returns
    max_i |analytic_i - central_i| / (|analytic_i| + 1e-12).
    """
    x = np.asarray(x, dtype=float)
    _, grad = f(x)
    grad = np.asarray(grad, dtype=float)
    worst = 0.0
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        fd = (f(xp)[0] - f(xm)[0]) / (2.0 * h)
        worst = max(worst, abs(grad[i] - fd) / (abs(grad[i]) + 1e-12))
    return worst
