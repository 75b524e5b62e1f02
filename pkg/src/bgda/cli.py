"""Command-line front end: experiment configuration, execution, and summaries.

Configs are TOML with fixed sections; unknown keys are rejected so typos
fail loudly.  Every run writes a CSV trace (one row per iteration, floats at
17 significant digits so summaries can be recomputed bit-faithfully) and a
JSON summary, both deterministic functions of config + seed.  File writes
go through a temp file and rename.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import bregman, pinn
from .autodiff import Activation, Mlp
from .bregman import DistanceGenerator, WeightDomain
from .exceptions import ConfigError, DomainError, NumericError, SolverFailureError
from .optim import (
    AdaptiveBregmanDescentAscent,
    BregmanDescentAscent,
    FixedWeightAdaptiveBaseline,
    RunTrace,
    StochasticBregmanDescentAscent,
    theoretical_stepsizes,
)
from .saddle import SaddleProblem
from .synthetic import gaussian_batch_oracle, quadratic_instance, verify_contraction

log = logging.getLogger("bgda")

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = ("pinn", "synthetic", "prox-selftest")
OPTIMIZER_KINDS = ("bgda", "adaptive", "sbgda", "fixed-weight-baseline")
ADAPTIVITY_COMBOS = ("adam+rmsprop", "adam+adam", "rmsprop+rmsprop")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "runs"
    trace: str = "trace.csv"
    summary: str = "summary.json"


@dataclass(frozen=True)
class OptimizerSettings:
    gamma_theta: float = 0.008
    gamma_pi: float = 0.1
    schedule: str = "linear"
    gamma_theta_end: float = 0.0004
    alpha1: float = 0.9
    alpha2: float = 0.999
    beta: float = 0.999
    eps_adapt: float = 1e-8
    batch_size: int = 1
    use_theoretical_stepsizes: bool = False


@dataclass(frozen=True)
class ProblemSettings:
    lam: float = 0.1
    n_interior: int = pinn.DEFAULT_N_INTERIOR
    n_boundary: int = pinn.DEFAULT_N_BOUNDARY
    hidden: tuple = (32, 32)
    activation: str = "tanh"
    resample_every: int = 0
    dim: int = 10
    n_losses: int = 2
    spectrum_min: float = -1.0
    spectrum_max: float = 1.0
    noise_sigma: float = 0.0
    ball_radius: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    problem: str = ""
    optimizer: str = "adaptive"
    adaptivity: str = "adam+rmsprop"
    seed: int = 0
    iterations: int = 1000
    output: OutputConfig = field(default_factory=OutputConfig)
    opt: OptimizerSettings = field(default_factory=OptimizerSettings)
    prob: ProblemSettings = field(default_factory=ProblemSettings)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.optimizer not in OPTIMIZER_KINDS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.adaptivity not in ADAPTIVITY_COMBOS:
            raise ConfigError(f"unknown adaptivity combo {self.adaptivity!r}")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")


# TOML key -> dataclass field, per section
_SECTION_FIELDS = {
    "experiment": {
        "kind": "kind",
        "problem": "problem",
        "optimizer": "optimizer",
        "adaptivity": "adaptivity",
        "seed": "seed",
        "iterations": "iterations",
    },
    "output": {"directory": "directory", "trace": "trace", "summary": "summary"},
    "optimizer": {f.name: f.name for f in dataclasses.fields(OptimizerSettings)},
    "problem": {
        "lambda": "lam",
        **{
            f.name: f.name
            for f in dataclasses.fields(ProblemSettings)
            if f.name != "lam"
        },
    },
}


def parse_config(text):
    """Parse a TOML config; unknown sections or keys are rejected."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}") from None
    version = raw.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    unknown = set(raw) - set(_SECTION_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    def section(name, cls):
        data = raw.get(name, {})
        mapping = _SECTION_FIELDS[name]
        bad = set(data) - set(mapping)
        if bad:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
        kwargs = {}
        for key, val in data.items():
            if isinstance(val, list):
                val = tuple(val)
            kwargs[mapping[key]] = val
        try:
            return cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"bad [{name}] section: {e}") from None

    exp = raw.get("experiment", {})
    if "kind" not in exp:
        raise ConfigError("missing required key experiment.kind")
    bad = set(exp) - set(_SECTION_FIELDS["experiment"])
    if bad:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(bad)}")
    return ExperimentConfig(
        kind=exp["kind"],
        problem=exp.get("problem", ""),
        optimizer=exp.get("optimizer", "adaptive"),
        adaptivity=exp.get("adaptivity", "adam+rmsprop"),
        seed=int(exp.get("seed", 0)),
        iterations=int(exp.get("iterations", 1000)),
        output=section("output", OutputConfig),
        opt=section("optimizer", OptimizerSettings),
        prob=section("problem", ProblemSettings),
    )


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize config value {v!r}")


def emit_config(cfg):
    """Serialize a config to TOML; parse_config(emit_config(c)) == c."""
    lines = [f"schema_version = {SCHEMA_VERSION}", ""]
    lines.append("[experiment]")
    for key, attr in _SECTION_FIELDS["experiment"].items():
        lines.append(f"{key} = {_toml_value(getattr(cfg, attr))}")
    for section_name, obj in (("output", cfg.output), ("optimizer", cfg.opt), ("problem", cfg.prob)):
        lines.append("")
        lines.append(f"[{section_name}]")
        for key, attr in _SECTION_FIELDS[section_name].items():
            lines.append(f"{key} = {_toml_value(getattr(obj, attr))}")
    return "\n".join(lines) + "\n"


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None


def apply_overrides(cfg, overrides):
    """Apply ``section.key=value`` overrides; values are parsed as TOML scalars."""
    data = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        key, _, value = item.partition("=")
        key = key.strip()
        if "." not in key:
            raise ConfigError(f"override key {key!r} must be section.key")
        section_name, _, leaf = key.partition(".")
        data.setdefault(section_name, {})[leaf] = value.strip()
    text = emit_config(cfg)
    base = tomllib.loads(text)
    for section_name, kv in data.items():
        if section_name not in _SECTION_FIELDS:
            raise ConfigError(f"unknown override section {section_name!r}")
        for leaf, value in kv.items():
            try:
                parsed = tomllib.loads(f"x = {value}")["x"]
            except tomllib.TOMLDecodeError:
                parsed = value  # bare string
            base.setdefault(section_name, {})[leaf] = parsed
    # round-trip through the emitter's own representation
    out = [f"schema_version = {SCHEMA_VERSION}", ""]
    for section_name in _SECTION_FIELDS:
        out.append(f"[{section_name}]")
        for key in base.get(section_name, {}):
            out.append(f"{key} = {_toml_value(base[section_name][key])}")
        out.append("")
    return parse_config("\n".join(out))


def component_seed(master, label):
    """Derive a per-component seed from the master seed and a component label.

    The label is hashed (sha-256, first 8 bytes) and combined with the
    master seed through numpy's SeedSequence, so streams for different
    components are independent and fixed across runs.
    """
    h = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return int(np.random.SeedSequence([master, h]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# trace files

_OPTIONAL_COLUMNS = (
    ("chi", "chi"),
    ("phi", "phi"),
    ("grad_phi_norm", "grad_phi_norm"),
    ("bregman_to_best_response", "bregman_to_best"),
    ("l2re", "l2re"),
)


def _atomic_write(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_trace(trace, path):
    """CSV trace: t, losses, weights, norms, optional columns, stepsize."""
    m = trace.m
    header = ["t"]
    header += [f"L_{i + 1}" for i in range(m)]
    header += [f"pi_{i + 1}" for i in range(m)]
    header.append("grad_theta_norm")
    present = [(col, attr) for col, attr in _OPTIONAL_COLUMNS if getattr(trace, attr) is not None]
    header += [col for col, _ in present]
    header.append("stepsize_theta")

    fmt = "%.17g"
    rows = [",".join(header)]
    for t in range(len(trace)):
        cells = [str(t)]
        cells += [fmt % v for v in trace.losses[t]]
        cells += [fmt % v for v in trace.pi[t]]
        cells.append(fmt % trace.grad_theta_norm[t])
        for _, attr in present:
            cells.append(fmt % getattr(trace, attr)[t])
        cells.append(fmt % trace.stepsize_theta[t])
        rows.append(",".join(cells))
    _atomic_write(path, "\n".join(rows) + "\n")


def read_trace(path):
    """Parse a trace CSV back into a RunTrace; errors carry line numbers."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read trace {path}: {e}") from None
    if not lines:
        raise ConfigError(f"{path}: line 1: empty trace file")
    header = lines[0].split(",")
    if header[0] != "t" or header[-1] != "stepsize_theta":
        raise ConfigError(f"{path}: line 1: malformed trace header")
    m = sum(1 for h in header if h.startswith("L_"))
    if m < 1 or header[1 : 1 + 2 * m] != [f"L_{i+1}" for i in range(m)] + [
        f"pi_{i+1}" for i in range(m)
    ]:
        raise ConfigError(f"{path}: line 1: malformed loss/weight columns")
    optional = header[2 + 2 * m : -1]
    known = [col for col, _ in _OPTIONAL_COLUMNS]
    if any(col not in known for col in optional) or header[1 + 2 * m] != "grad_theta_norm":
        raise ConfigError(f"{path}: line 1: unknown trace columns")
    if len(lines) < 2:
        raise ConfigError(f"{path}: line 2: trace has no data rows")

    data = np.empty((len(lines) - 1, len(header) - 1))
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise ConfigError(f"{path}: line {i}: expected {len(header)} fields, got {len(cells)}")
        try:
            index = int(cells[0])
            data[i - 2] = [float(c) for c in cells[1:]]
        except ValueError as e:
            raise ConfigError(f"{path}: line {i}: {e}") from None
        if index != i - 2:
            raise ConfigError(f"{path}: line {i}: iteration index out of order")

    cols = {}
    pos = 2 * m + 1
    for col in optional:
        cols[col] = data[:, pos]
        pos += 1
    attr_of = dict(_OPTIONAL_COLUMNS)
    return RunTrace(
        losses=data[:, 0:m],
        pi=data[:, m : 2 * m],
        grad_theta_norm=data[:, 2 * m],
        stepsize_theta=data[:, -1],
        **{attr_of[col]: arr for col, arr in cols.items()},
    )


# ---------------------------------------------------------------------------
# experiments


def _estimator(cfg, gamma_theta, gamma_pi, opt_seed):
    o = cfg.opt
    common = dict(
        gamma_theta=gamma_theta,
        gamma_pi=gamma_pi,
        iterations=cfg.iterations,
        schedule=o.schedule,
        gamma_theta_end=o.gamma_theta_end,
        seed=opt_seed,
    )
    if cfg.optimizer == "bgda":
        return BregmanDescentAscent(**common)
    if cfg.optimizer == "sbgda":
        return StochasticBregmanDescentAscent(batch_size=o.batch_size, **common)
    adaptive = dict(
        alpha1=o.alpha1, alpha2=o.alpha2, beta=o.beta, eps_adapt=o.eps_adapt,
        adaptivity=cfg.adaptivity, **common,
    )
    if cfg.optimizer == "adaptive":
        return AdaptiveBregmanDescentAscent(**adaptive)
    return FixedWeightAdaptiveBaseline(**adaptive)


def _chi_summary(trace, n_windows=3):
    if trace.chi is None or np.any(np.isnan(trace.chi)):
        return None
    windows = pinn.chi_windows(trace.chi[: trace.n_iterations], n_windows=n_windows)
    return {"windows": windows}


def _stationarity_value(trace):
    if trace.grad_phi_norm is None:
        return None
    gn = trace.grad_phi_norm[: trace.n_iterations]
    return float(np.mean(gn * gn))


def _base_summary(cfg, trace, gamma_theta, gamma_pi):
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "problem": cfg.problem,
        "optimizer": cfg.optimizer,
        "adaptivity": cfg.adaptivity,
        "seed": cfg.seed,
        "iterations": cfg.iterations,
        "stepsizes": {"gamma_theta": gamma_theta, "gamma_pi": gamma_pi},
        "final_losses": [float(v) for v in trace.losses[-1]],
        "final_weights": [float(v) for v in trace.pi[-1]],
        "final_l2re": None if trace.l2re is None else float(trace.l2re[-1]),
        "chi": _chi_summary(trace),
        "stationarity": _stationarity_value(trace),
        "contraction": None,
    }


def _run_pinn(cfg):
    spec = pinn.get_problem(cfg.problem)
    p = cfg.prob
    activation = {"tanh": Activation.TANH, "sin": Activation.SIN}.get(p.activation)
    if activation is None:
        raise ConfigError(f"unknown activation {p.activation!r}")
    net = Mlp.create(
        (spec.dim, *p.hidden, 1), activation=activation,
        seed=component_seed(cfg.seed, "net-init"),
    )
    colloc_seed = component_seed(cfg.seed, "collocation")
    if p.resample_every > 0:
        oracles = pinn.resampling_loss_terms(
            net, spec, p.n_interior, p.n_boundary, colloc_seed, p.resample_every
        )
        colloc = None
    else:
        colloc = pinn.sample_collocation(spec, p.n_interior, p.n_boundary, colloc_seed)
        oracles = pinn.loss_terms(net, spec, colloc)
    domain = WeightDomain(spec.n_terms, p.ball_radius if p.ball_radius > 0 else None)
    problem = SaddleProblem(
        losses=tuple(oracles), lam=p.lam,
        generator=DistanceGenerator.NEGATIVE_ENTROPY, domain=domain,
    )

    l2re_fn = None
    if spec.exact is not None:
        grid = pinn.evaluation_grid(spec)
        truth = spec.exact(grid)

        def l2re_fn(theta, _grid=grid, _truth=truth):
            return pinn.l2re(pinn.predict(net, _grid, params=theta), _truth)

    est = _estimator(cfg, cfg.opt.gamma_theta, cfg.opt.gamma_pi, component_seed(cfg.seed, "optimizer"))
    fit_kwargs = dict(
        l2re_fn=l2re_fn, chi_groups=(spec.interior_indices, spec.boundary_indices)
    )
    if cfg.optimizer == "sbgda":
        if colloc is None:
            raise ConfigError("sbgda does not combine with resampling")
        fit_kwargs["batch_oracle"] = pinn_batch_oracle(net, spec, colloc, problem)
    est.fit(problem, net.params, **fit_kwargs)
    return est.trace_, _base_summary(cfg, est.trace_, cfg.opt.gamma_theta, cfg.opt.gamma_pi)


def pinn_batch_oracle(net, spec, colloc, problem):
    """Stochastic parameter gradient from a subsample of the interior points.

    Unbiasedness is with respect to the uniform choice of interior
    collocation points; boundary terms are cheap and kept exact.
    """
    n = colloc.interior.shape[0]

    def oracle(theta, pi, batch_size, rng):
        idx = rng.integers(0, n, size=min(batch_size, n))
        pts = colloc.interior[idx]
        g = np.zeros_like(theta)
        for i, op in enumerate(spec.interior):
            rhs = np.asarray(op.source(pts), dtype=float)
            _, grad = pinn._operator_loss(net, theta, op.func, rhs, pts)
            g += pi[i] * grad
        _, grads = problem.evaluate_losses(theta)
        for j in range(len(spec.interior), problem.m):
            g += pi[j] * grads[j]
        return g

    return oracle


def _run_synthetic(cfg):
    p = cfg.prob
    inst = quadratic_instance(
        component_seed(cfg.seed, "instance"),
        dim=p.dim, m=p.n_losses, lam=p.lam,
        spectrum=(p.spectrum_min, p.spectrum_max),
    )
    problem, info = inst.problem(), inst.smoothness()
    if cfg.opt.use_theoretical_stepsizes:
        gamma_pi, gamma_theta = theoretical_stepsizes(info)
    else:
        gamma_pi, gamma_theta = cfg.opt.gamma_pi, cfg.opt.gamma_theta
    rng = np.random.default_rng(component_seed(cfg.seed, "theta0"))
    theta0 = 0.5 * rng.standard_normal(p.dim)
    est = _estimator(cfg, gamma_theta, gamma_pi, component_seed(cfg.seed, "optimizer"))
    fit_kwargs = {}
    if cfg.optimizer == "sbgda":
        fit_kwargs["batch_oracle"] = gaussian_batch_oracle(problem, p.noise_sigma)
    est.fit(problem, theta0, **fit_kwargs)
    trace = est.trace_
    summary = _base_summary(cfg, trace, gamma_theta, gamma_pi)
    if trace.bregman_to_best is not None:
        rep = verify_contraction(trace, info)
        summary["contraction"] = {
            "kappa": rep.kappa,
            "factor": rep.factor,
            "n_steps": rep.n_steps,
            "min_slack": rep.min_slack,
            "violations": rep.violations,
        }
    return trace, summary


def _run_selftest(cfg):
    """Randomized battery over the divergence/prox layer; raises on failure."""
    rng = np.random.default_rng(component_seed(cfg.seed, "selftest"))
    gen_e = DistanceGenerator.NEGATIVE_ENTROPY
    gen_q = DistanceGenerator.SQUARED_EUCLIDEAN
    checks = []

    def record(name, worst, tol):
        checks.append({"name": name, "worst": float(worst), "tolerance": tol, "pass": bool(worst <= tol)})

    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(2, 6))
        ps = rng.dirichlet(np.ones(m), size=2)
        ps = np.clip(ps, 1e-9, None)
        ps /= ps.sum(axis=1, keepdims=True)
        for gen in (gen_e, gen_q):
            d = bregman.divergence(gen, ps[0], ps[1])
            gap = 0.5 * float(np.sum((ps[0] - ps[1]) ** 2)) - d
            worst = max(worst, gap, -bregman.divergence(gen, ps[0], ps[0]))
    record("divergence-strong-convexity", worst, 1e-12)

    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 5))
        pts = rng.dirichlet(np.ones(m), size=3)
        pts = np.clip(pts, 1e-6, None)
        pts /= pts.sum(axis=1, keepdims=True)
        for gen in (gen_e, gen_q):
            worst = max(worst, abs(bregman.three_point_residual(gen, *pts)))
    record("three-point-identity", worst, 1e-10)

    worst = 0.0
    for _ in range(50):
        pi_t = rng.dirichlet(np.ones(2))
        pi_t = np.clip(pi_t, 1e-6, None)
        pi_t /= pi_t.sum()
        g = rng.normal(0, 2, size=2)
        out = bregman.prox_simplex_kl(pi_t, g)
        grid = np.linspace(1e-9, 1 - 1e-9, 20001)
        cand = np.stack([grid, 1 - grid], axis=1)
        obj = -(cand @ g) + np.sum(cand * np.log(cand / pi_t), axis=1)
        best = cand[np.argmin(obj)]
        worst = max(worst, float(np.max(np.abs(out - best))))
    record("prox-grid-agreement", worst, 1e-4)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "checks": checks,
        "all_pass": all(c["pass"] for c in checks),
    }
    if not summary["all_pass"]:
        raise NumericError(f"prox selftest failed: {summary}")
    return None, summary


def run_experiment(cfg, out_dir=None):
    """Run one experiment and write its artifacts; returns the summary dict."""
    directory = out_dir if out_dir is not None else cfg.output.directory
    os.makedirs(directory, exist_ok=True)
    runner = {"pinn": _run_pinn, "synthetic": _run_synthetic, "prox-selftest": _run_selftest}[
        cfg.kind
    ]
    log.info("running %s experiment (problem=%s seed=%d)", cfg.kind, cfg.problem, cfg.seed)
    trace, summary = runner(cfg)
    if trace is not None:
        write_trace(trace, os.path.join(directory, cfg.output.trace))
    _atomic_write(
        os.path.join(directory, cfg.output.summary),
        json.dumps(summary, indent=2, sort_keys=True) + "\n",
    )
    return summary


def summarize(trace_path, n_windows=3):
    """Recompute summary statistics from a trace file alone."""
    trace = read_trace(trace_path)
    return {
        "schema_version": SCHEMA_VERSION,
        "iterations": trace.n_iterations,
        "final_losses": [float(v) for v in trace.losses[-1]],
        "final_weights": [float(v) for v in trace.pi[-1]],
        "final_l2re": None if trace.l2re is None else float(trace.l2re[-1]),
        "chi": _chi_summary(trace, n_windows=n_windows),
        "stationarity": _stationarity_value(trace),
    }


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bgda", description="saddle-point loss balancing experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a TOML config")
    run.add_argument("--config", required=True, help="path to the TOML config")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="config override, e.g. optimizer.gamma_theta=0.01 (repeatable)",
    )
    summ = sub.add_parser("summarize", help="recompute summary statistics from a trace")
    summ.add_argument("trace", help="path to a trace CSV")
    summ.add_argument("--windows", type=int, default=3)
    return parser


def main(argv=None):
    logging.basicConfig(level=os.environ.get("BGDA_LOG_LEVEL", "WARNING").upper())
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.override:
                cfg = apply_overrides(cfg, args.override)
            if args.seed is not None:
                cfg = dataclasses.replace(cfg, seed=args.seed)
            summary = run_experiment(cfg, out_dir=args.out)
            json.dump(summary, sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
        else:
            json.dump(summarize(args.trace, n_windows=args.windows), sys.stdout, indent=2, sort_keys=True)
            sys.stdout.write("\n")
    except (ConfigError, DomainError) as e:
        json.dump({"error": "config", "detail": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except (NumericError, SolverFailureError) as e:
        json.dump({"error": "numeric", "detail": str(e)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
