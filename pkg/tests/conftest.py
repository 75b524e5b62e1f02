"""Shared test helpers: brute-force oracles and acceptance-suite reporting."""

import re

import numpy as np
import pytest


def random_simplex(rng, m, floor=1e-6):
    p = rng.dirichlet(np.ones(m))
    p = np.clip(p, floor, None)
    return p / p.sum()


def kl_rows(cand, base):
    """Row-wise KL(cand_i, base) with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(cand > 0.0, cand * np.log(cand / base), 0.0)
    return terms.sum(axis=1)


def _simplex_grid(m, step, lo=None, hi=None):
    """Interior grid over the first m-1 free coordinates."""
    if lo is None:
        lo = np.full(m - 1, step)
    if hi is None:
        hi = np.full(m - 1, 1.0 - step)
    axes = [np.arange(lo[i], hi[i] + step / 2, step) for i in range(m - 1)]
    if m == 2:
        p1 = axes[0]
        cand = np.stack([p1, 1.0 - p1], axis=1)
    else:
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        s = g1 + g2
        mask = s < 1.0 - step / 2
        cand = np.stack([g1[mask], g2[mask], 1.0 - g1[mask] - g2[mask]], axis=1)
    return cand[np.all(cand > 0.0, axis=1)]


def grid_argmin(objective, m, step=1e-3, refinements=2, shrink=50):
    """Brute-force minimizer of a row-wise objective over the simplex.

    Starts from a full interior grid and refines a shrinking window around
    the incumbent; the final resolution is step / shrink**refinements.
    """
    cand = _simplex_grid(m, step)
    vals = objective(cand)
    best = cand[np.argmin(vals)]
    cur = step
    for _ in range(refinements):
        cur /= shrink
        lo = np.maximum(best[: m - 1] - shrink * 1.5 * cur, cur)
        hi = np.minimum(best[: m - 1] + shrink * 1.5 * cur, 1.0 - cur)
        cand = _simplex_grid(m, cur, lo, hi)
        if cand.size == 0:
            break
        vals = objective(cand)
        best = cand[np.argmin(vals)]
    return best


def prox_objective(pi_t, g):
    def objective(cand):
        return -(cand @ g) + kl_rows(cand, pi_t)

    return objective


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion in the terminal summary

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = re.search(r"test_criterion_(\d+)", item.name)
    if match and report.when == "call":
        key = (int(match.group(1)), item.name)
        if hasattr(report, "wasxfail"):
            _results[key] = "EXPECTED FAIL (documented; see README)"
        elif report.passed:
            _results[key] = "PASS"
        elif report.failed:
            _results[key] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(_results.items()):
        terminalreporter.write_line(f"criterion {num:02d} [{name}]: {status}")
