"""Oracle-equivalence checks: brute-force grid minimization of the per-block
subproblem and of the penalized objective, plus small self-test suites the
CLI exposes. The acceptance tests run the same oracles at full grid size."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .baselines import exhaustive_search
from .ci import build_ci_matrix, decompose_alpha
from .geometry import penalized_projection, quartic_stationary_root, _hprime
from .model import sample_instance
from .solver import default_params, homotopy_solve, project_simplex


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def hull_grid(l_levels: int, n_grid: int):
    """Flat arrays (u, v, ||p||^2, ||p||, spacing) of the grid points of
    [-1, 1]^2 that fall inside conv(V_L)."""
    g = np.linspace(-1.0, 1.0, n_grid)
    u, v = np.meshgrid(g, g, indexing="ij")
    u = u.ravel()
    v = v.ravel()
    c = math.cos(math.pi / l_levels)
    support = np.full(u.shape, -np.inf)
    for l in range(l_levels):
        phi = 2.0 * math.pi * l / l_levels
        np.maximum(support, u * math.cos(phi) + v * math.sin(phi), out=support)
    mask = support <= c + 1e-12
    u = np.ascontiguousarray(u[mask])
    v = np.ascontiguousarray(v[mask])
    n2 = u * u + v * v
    return u, v, n2, np.sqrt(n2), g[1] - g[0]


@njit(cache=True, nogil=True, fastmath=True)
def _grid_min_projection(u, v, n2, r, pu, pv, beta):
    """min over the grid of ||p - p~||^2 - beta*||p||, up to the constant
    ||p~||^2 which the caller adds back."""
    best = 1e300
    bu = 2.0 * pu
    bv = 2.0 * pv
    for i in range(u.shape[0]):
        val = n2[i] - bu * u[i] - bv * v[i] - beta * r[i]
        if val < best:
            best = val
    return best


@njit(cache=True, nogil=True, fastmath=True)
def _grid_argmin_penalty(u, v, r, a, lam):
    """Grid minimizer of max_m (a_m . p) - lam*||p|| for a single block.

    Returns (value, index of the winning grid point).
    """
    rows = a.shape[0]
    best = 1e300
    best_i = 0
    for i in range(u.shape[0]):
        m = -1e300
        for j in range(rows):
            t = a[j, 0] * u[i] + a[j, 1] * v[i]
            if t > m:
                m = t
        val = m - lam * r[i]
        if val < best:
            best = val
            best_i = i
    return best, best_i


def projection_objective(p, p_tilde, beta: float) -> float:
    du = p[0] - p_tilde[0]
    dv = p[1] - p_tilde[1]
    return du * du + dv * dv - beta * math.hypot(p[0], p[1])


def check_projection_against_grid(cases: int, n_grid: int, seed: int) -> CheckResult:
    """Closed-form block solutions must match a dense grid oracle."""
    rng = np.random.default_rng(seed)
    levels = (4, 8, 16, 32)
    worst = -math.inf
    for l_levels in levels:
        u, v, n2, r, h = hull_grid(l_levels, n_grid)
        for _ in range(cases // len(levels)):
            pt = rng.uniform(-3.0, 3.0, size=2)
            beta = rng.uniform(0.0, 4.0)
            sol = penalized_projection(pt, beta, l_levels)
            closed = projection_objective(sol, pt, beta)
            grid = _grid_min_projection(u, v, n2, r, pt[0], pt[1], beta)
            grid += pt[0] * pt[0] + pt[1] * pt[1]
            lip = 2.0 * (1.0 + math.hypot(pt[0], pt[1])) + beta
            worst = max(worst, closed - grid - 2.0 * h * lip)
    passed = bool(worst <= 0.0)
    return CheckResult("projection-vs-grid", passed,
                       f"max tolerance excess {worst:.3e} over {cases} cases")


def check_homotopy_against_exhaustive(instances: int, seed: int) -> CheckResult:
    """Homotopy output is a vertex assignment no better than the enumerated
    optimum; equality rate is reported."""
    rng = np.random.default_rng(seed)
    hits = 0
    ok = True
    for _ in range(instances):
        inst = sample_instance(2, 4, 4, 4, 1.0, rng.integers(2 ** 63))
        a = build_ci_matrix(inst)
        params = default_params(a, inst.m_order)
        x, trace = homotopy_solve(a, inst.l_levels, params)
        best = exhaustive_search(a, inst.l_levels)
        got = float(np.max(a @ x))
        if not trace.feasible or got < best.objective - 1e-9:
            ok = False
        if got <= best.objective + 1e-9:
            hits += 1
    return CheckResult("homotopy-vs-exhaustive", ok,
                       f"exact optimum on {hits}/{instances} tiny instances")


def check_simplex_projection(cases: int, seed: int) -> CheckResult:
    """Sort-based projection must satisfy the simplex KKT conditions."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        m = int(rng.integers(2, 12))
        y = rng.normal(0.0, 2.0, size=m)
        p = project_simplex(y)
        worst = max(worst, abs(p.sum() - 1.0))
        if p.min() < 0.0:
            worst = max(worst, -p.min())
        support = p > 0.0
        theta = (y[support].sum() - 1.0) / support.sum()
        rebuilt = np.maximum(y - theta, 0.0)
        worst = max(worst, float(np.max(np.abs(rebuilt - p))))
        # inactive coordinates must not want in
        if (~support).any():
            worst = max(worst, float(np.max(y[~support] - theta)))
    passed = bool(worst <= 1e-10)
    return CheckResult("simplex-projection-kkt", passed,
                       f"max KKT violation {worst:.3e} over {cases} cases")


def check_quartic_roots(cases: int, seed: int) -> CheckResult:
    """Edge-branch stationary roots must zero the radial derivative."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        l_levels = int(rng.choice((4, 8, 16, 32)))
        u_rot = rng.uniform(1e-3, 4.0)
        v_rot = rng.uniform(-4.0, 4.0)
        beta = rng.uniform(0.0, 4.0)
        root = quartic_stationary_root(u_rot, v_rot, beta, l_levels)
        if root is None:
            continue
        c = math.cos(math.pi / l_levels)
        worst = max(worst, abs(_hprime(root, abs(v_rot), beta, c)))
    passed = bool(worst <= 1e-7)
    return CheckResult("quartic-stationarity", passed,
                       f"max |h'(root)| {worst:.3e} over {cases} draws")


def check_decomposition_identity(cases: int, seed: int) -> CheckResult:
    """Rows of the CI matrix must reproduce the boundary decomposition."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(k, 9))
        m_order = int(rng.choice((4, 8, 16)))
        inst = sample_instance(k, n, m_order, 8, float(rng.uniform(0.5, 4.0)),
                               rng.integers(2 ** 63))
        a = build_ci_matrix(inst)
        x = rng.normal(0.0, 1.0, size=2 * n)
        z = x[0::2] + 1j * x[1::2]
        y_hat = math.sqrt(inst.p_t / n) * (inst.h @ z)
        rows = a @ x
        for kk in range(k):
            pair = decompose_alpha(y_hat[kk], inst.symbols[kk], m_order)
            worst = max(worst, abs(rows[2 * kk] + pair.alpha_a),
                        abs(rows[2 * kk + 1] + pair.alpha_b))
    passed = bool(worst <= 1e-9)
    return CheckResult("decomposition-identity", passed,
                       f"max identity residual {worst:.3e} over {cases} instances")


def run_selftest(fast: bool = True, seed: int = 20240801) -> list[CheckResult]:
    """The oracle suites behind the selftest command.

    fast=True keeps the grid oracle at 801 points per axis so the whole run
    stays interactive; the acceptance tests use 2001.
    """
    if fast:
        return [
            check_projection_against_grid(200, 801, seed),
            check_homotopy_against_exhaustive(20, seed + 1),
            check_simplex_projection(200, seed + 2),
            check_quartic_roots(2000, seed + 3),
            check_decomposition_identity(25, seed + 4),
        ]
    return [
        check_projection_against_grid(1000, 2001, seed),
        check_homotopy_against_exhaustive(60, seed + 1),
        check_simplex_projection(1000, seed + 2),
        check_quartic_roots(10000, seed + 3),
        check_decomposition_identity(100, seed + 4),
    ]
