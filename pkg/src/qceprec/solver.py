"""Alternating-optimization solver for the penalized min-max precoding problem.

The relaxed problem is

    min_{x in conv(V_L)^N}  max_m (A x)_m - lambda * sum_i ||x_i||,

rewritten through max_m z_m = max_{y in simplex} y^T z and solved by
alternating a blockwise proximal x-step with an extrapolated projected
ascent y-step:

    x-step:  per block, penalized_projection of p_i = x_i - g_i / tau_k
             with g = A^T y and beta = 2*lambda/tau_k,
    y-step:  Proj_simplex(y + rho * A x - (c_scale / k^c_exponent) * y).

(The y shrink term is rho * c_k * y with c_k = c_scale / (rho * k^e); rho
cancels, so it is applied directly and a rho of zero stays well-defined.)

A homotopy outer loop multiplies lambda by delta until the x-step lands on
exact vertices, which is guaranteed once 2*lambda/tau_1 >= 2. The vertex
point the homotopy terminates on is then refined by single-block coordinate
descent over the vertex set (vertex_polish): moves must strictly lower the
max and are chosen by lowest row sum, which raises the fraction of
instances solved to global optimality and deepens the non-binding margins,
at negligible cost.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .geometry import HULL_TOL, ROOT_RESIDUAL_TOL, _solve_block, _vertex_table
from .model import check_order


@dataclass
class SolverParams:
    """Penalty schedule, step rules, and stopping control.

    Schedules, with k the inner iteration counter restarting at 1 each
    homotopy stage:

        tau_k = tau_scale * k^tau_exponent
        rho_k = rho (constant)
        c_k   = c_scale / (rho * k^c_exponent)
    """

    lambda0: float
    rho: float
    tau_scale: float
    delta: float = 5.0
    c_scale: float = 0.03
    c_exponent: float = 0.25
    tau_exponent: float = 0.5
    inner_tol: float = 1e-2
    inner_max_iters: int = 500
    outer_max_iters: int = 50
    feasibility_tol: float = 0.0
    warm_start_y: bool = True
    vertex_polish: bool = True
    polish_max_rounds: int = 1000
    root_residual_tol: float = ROOT_RESIDUAL_TOL
    hull_tol: float = HULL_TOL

    def __post_init__(self) -> None:
        for name in ("lambda0", "rho", "tau_scale"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.lambda0 <= 0.0:
            raise ValueError("lambda0 must be positive")
        if self.tau_scale <= 0.0:
            raise ValueError("tau_scale must be positive")
        if self.delta <= 1.0:
            raise ValueError("delta must exceed 1")
        if self.inner_max_iters < 1 or self.outer_max_iters < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.feasibility_tol < 0.0:
            raise ValueError("feasibility_tol must be >= 0")
        if self.polish_max_rounds < 0:
            raise ValueError("polish_max_rounds must be >= 0")

    def replace(self, **overrides) -> "SolverParams":
        fields = self.__dict__ | overrides
        return SolverParams(**fields)


@dataclass
class AoResult:
    x: np.ndarray
    y: np.ndarray
    iterations: int
    stop_reason: str
    feasible: bool
    objective_history: np.ndarray
    fallback_count: int


@dataclass
class SolveTrace:
    outer_iterations: int
    inner_iterations: list[int] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    objective_history: list[np.ndarray] = field(default_factory=list)
    final_lambda: float = 0.0
    feasible: bool = False
    converged: bool = False
    fallback_count: int = 0
    polish_rounds: int = 0
    wall_time_s: float = 0.0
    warning: str | None = None


@njit(cache=True, nogil=True)
def _project_simplex(y):
    m = y.shape[0]
    u = np.sort(y)[::-1]
    css = 0.0
    theta = 0.0
    for i in range(m):
        css += u[i]
        t = (css - 1.0) / (i + 1.0)
        if u[i] - t > 0.0:
            theta = t
    out = np.empty(m)
    for i in range(m):
        d = y[i] - theta
        out[i] = d if d > 0.0 else 0.0
    return out


@njit(cache=True, nogil=True)
def _ao_loop(a, at, lam, x, y, l_levels, c, verts, rho, c_scale, c_exponent,
             tau_scale, tau_exponent, inner_tol, max_iters, feas_tol,
             residual_tol, obj_out):
    """Inner AO iterations; mutates x and y.

    Returns (iterations, status, fallbacks) with status 0 = iteration cap,
    1 = small step, 2 = feasible, 3 = non-finite iterate.
    """
    twok, twon = a.shape
    nblocks = twon // 2
    nverts = verts.shape[0]
    g = np.empty(twon)
    xnew = np.empty(twon)
    ax = np.empty(twok)
    fallbacks = 0
    status = 0
    iters = 0
    for k in range(1, max_iters + 1):
        iters = k
        tau = tau_scale * k ** tau_exponent
        beta = 2.0 * lam / tau
        for j in range(twon):
            acc = 0.0
            for i in range(twok):
                acc += at[j, i] * y[i]
            g[j] = acc
        all_vertex = True
        for b in range(nblocks):
            pu = x[2 * b] - g[2 * b] / tau
            pv = x[2 * b + 1] - g[2 * b + 1] / tau
            uo, vo, vidx, fb = _solve_block(pu, pv, beta, l_levels, c, verts,
                                            residual_tol)
            fallbacks += fb
            xnew[2 * b] = uo
            xnew[2 * b + 1] = vo
            if vidx < 0:
                all_vertex = False

        dn = 0.0
        finite = True
        for j in range(twon):
            d = xnew[j] - x[j]
            dn += d * d
            if not np.isfinite(xnew[j]):
                finite = False
            x[j] = xnew[j]

        maxv = -1e300
        for i in range(twok):
            acc = 0.0
            for j in range(twon):
                acc += a[i, j] * x[j]
            ax[i] = acc
            if acc > maxv:
                maxv = acc
        pen = 0.0
        for b in range(nblocks):
            pen += math.hypot(x[2 * b], x[2 * b + 1])
        obj_out[k - 1] = maxv - lam * pen

        if not finite:
            status = 3
            break
        feasible = all_vertex
        if not feasible and feas_tol > 0.0:
            feasible = True
            t2 = feas_tol * feas_tol
            for b in range(nblocks):
                dmin = 1e300
                for l in range(nverts):
                    du = x[2 * b] - verts[l, 0]
                    dv = x[2 * b + 1] - verts[l, 1]
                    d2 = du * du + dv * dv
                    if d2 < dmin:
                        dmin = d2
                if dmin > t2:
                    feasible = False
                    break
        if feasible:
            status = 2
            break
        if math.sqrt(dn) < inner_tol:
            status = 1
            break

        shrink = c_scale / k ** c_exponent
        for i in range(twok):
            y[i] = y[i] + rho * ax[i] - shrink * y[i]
        y[:] = _project_simplex(y)
    return iters, status, fallbacks


_STOP_REASONS = {0: "max_iters", 1: "small_step", 2: "feasible", 3: "nonfinite"}


@njit(cache=True, nogil=True)
def _polish_loop(a, x, verts, max_rounds):
    """Single-block vertex descent on max_m (A x)_m; mutates x, returns moves.

    Each round scans every (block, vertex) move with all other blocks held
    fixed and keeps only moves that strictly lower the max. Among those, the
    move with the lowest row sum of A x is applied, one move per round, until
    no move improves the max. Strict descent on the max rules out cycling and
    keeps the result bit-reproducible; breaking ties toward low row sums
    lands on points whose non-binding rows are deep as well, which matters
    once noise is large relative to the worst-row margin.
    """
    twok, twon = a.shape
    nblocks = twon // 2
    nverts = verts.shape[0]
    ax = np.zeros(twok)
    for i in range(twok):
        acc = 0.0
        for j in range(twon):
            acc += a[i, j] * x[j]
        ax[i] = acc
    moves = 0
    for _ in range(max_rounds):
        cur = -1e300
        for i in range(twok):
            if ax[i] > cur:
                cur = ax[i]
        best_b = -1
        best_l = -1
        best_sum = 0.0
        for b in range(nblocks):
            u0 = x[2 * b]
            v0 = x[2 * b + 1]
            for l in range(nverts):
                du = verts[l, 0] - u0
                dv = verts[l, 1] - v0
                if du == 0.0 and dv == 0.0:
                    continue
                mx = -1e300
                sm = 0.0
                for i in range(twok):
                    val = ax[i] + a[i, 2 * b] * du + a[i, 2 * b + 1] * dv
                    sm += val
                    if val > mx:
                        mx = val
                if mx < cur - 1e-12 and (best_b < 0 or sm < best_sum - 1e-12):
                    best_b = b
                    best_l = l
                    best_sum = sm
        if best_b < 0:
            break
        du = verts[best_l, 0] - x[2 * best_b]
        dv = verts[best_l, 1] - x[2 * best_b + 1]
        for i in range(twok):
            ax[i] += a[i, 2 * best_b] * du + a[i, 2 * best_b + 1] * dv
        x[2 * best_b] = verts[best_l, 0]
        x[2 * best_b + 1] = verts[best_l, 1]
        moves += 1
    return moves


def project_simplex(y) -> np.ndarray:
    """Euclidean projection onto {y : sum(y) = 1, y >= 0} (sort and threshold)."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite input")
    return _project_simplex(y)


def spectral_norm(a, tol: float = 1e-6, max_iters: int = 200) -> float:
    """Largest singular value by power iteration on A^T A.

    Deterministic ramp start vector; warns and returns the best estimate if
    the relative change has not dropped below tol within max_iters.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a matrix")
    if not np.any(a):
        raise ValueError("spectral norm start undefined for the zero matrix")
    v = np.linspace(1.0, 2.0, a.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    prev = -1.0
    for _ in range(max_iters):
        w = a @ v
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            # start vector hit the null space; nudge deterministically
            v = np.ones(a.shape[1]) / math.sqrt(a.shape[1])
            continue
        z = a.T @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        v = z / nz
        if abs(sigma - prev) <= tol * sigma:
            return sigma
        prev = sigma
    warnings.warn("power iteration did not converge; returning best estimate",
                  stacklevel=2)
    return sigma


def default_params(a, m_order: int, norm_kind: str = "spectral") -> SolverParams:
    """Standard parameter choices scaled to the problem data."""
    check_order(m_order, "m_order")
    a = np.asarray(a, dtype=np.float64)
    if norm_kind == "spectral":
        norm = spectral_norm(a)
    elif norm_kind == "frobenius":
        norm = float(np.linalg.norm(a))
    else:
        raise ValueError(f"unknown norm_kind {norm_kind!r}")
    if norm == 0.0:
        raise ValueError("cannot scale parameters to a zero matrix")
    return SolverParams(
        lambda0=0.001 * m_order / (8.0 * math.sqrt(2.0)),
        rho=math.sqrt(2.0) / (5.0 * norm),
        tau_scale=(6.0 / (5.0 * math.sqrt(2.0))) * float(np.mean(np.abs(a))),
    )


def penalty_objective(a, x, lam: float) -> float:
    """max_m (A x)_m - lambda * sum of block norms."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    blocks = x.reshape(-1, 2)
    return float(np.max(a @ x) - lam * np.hypot(blocks[:, 0], blocks[:, 1]).sum())


def lambda_threshold(a, l_levels: int) -> float:
    """Penalty weight beyond which the relaxation shares minimizers with the
    vertex-constrained problem: sin(pi/L)/(1 - cos(pi/L)) * max_m ||a_m||."""
    l_levels = check_order(l_levels, "l_levels")
    a = np.asarray(a, dtype=np.float64)
    ang = math.pi / l_levels
    return math.sin(ang) / (1.0 - math.cos(ang)) * float(
        np.linalg.norm(a, axis=1).max())


def _validated_matrix(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] % 2 or a.shape[1] % 2 or a.shape[1] < 2:
        raise ValueError(f"A must be 2K x 2N, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("A contains non-finite entries")
    return a


def ao_solve(a, l_levels: int, lam: float, params: SolverParams,
             x0=None, y0=None) -> AoResult:
    """One AO stage at fixed penalty weight lam.

    x0 defaults to the origin and y0 to the uniform simplex point. Stops on
    feasibility first, then on a small successive step, then on the
    iteration cap.
    """
    a = _validated_matrix(a)
    l_levels = check_order(l_levels, "l_levels")
    if lam < 0.0:
        raise ValueError("lam must be >= 0")
    twok, twon = a.shape
    x = np.zeros(twon) if x0 is None else np.array(x0, dtype=np.float64)
    y = np.full(twok, 1.0 / twok) if y0 is None else np.array(y0, dtype=np.float64)
    if x.shape != (twon,) or y.shape != (twok,):
        raise ValueError("x0/y0 dimensions do not match A")
    at = np.ascontiguousarray(a.T)
    verts = _vertex_table(l_levels)
    c = math.cos(math.pi / l_levels)
    obj = np.empty(params.inner_max_iters)
    iters, status, fallbacks = _ao_loop(
        a, at, float(lam), x, y, l_levels, c, verts,
        params.rho, params.c_scale, params.c_exponent,
        params.tau_scale, params.tau_exponent,
        params.inner_tol, params.inner_max_iters,
        params.feasibility_tol, params.root_residual_tol, obj)
    if status == 3:
        raise FloatingPointError(
            "non-finite iterate in the AO loop (bad solver parameters)")
    return AoResult(x=x, y=y, iterations=iters,
                    stop_reason=_STOP_REASONS[status],
                    feasible=status == 2,
                    objective_history=obj[:iters].copy(),
                    fallback_count=fallbacks)


def homotopy_solve(a, l_levels: int, params: SolverParams):
    """Increase the penalty weight geometrically until the AO stage lands on
    exact vertices; returns (x, SolveTrace).

    Warm-starts each stage from the previous (x, y); set
    params.warm_start_y = False to reset y to uniform between stages. If the
    outer cap is hit the last iterate is quantized block by block and the
    trace carries a warning. Unless params.vertex_polish is off, the final
    vertex point is refined by blockwise vertex descent before returning;
    trace.polish_rounds counts the accepted single-block moves.
    """
    a = _validated_matrix(a)
    l_levels = check_order(l_levels, "l_levels")
    verts = _vertex_table(l_levels)
    twok, twon = a.shape
    t0 = time.perf_counter()
    x = np.zeros(twon)
    y = np.full(twok, 1.0 / twok)
    trace = SolveTrace(outer_iterations=0)
    lam = params.lambda0
    feasible = False
    for _ in range(params.outer_max_iters):
        res = ao_solve(a, l_levels, lam, params, x, y)
        x = res.x
        y = res.y if params.warm_start_y else np.full(twok, 1.0 / twok)
        trace.outer_iterations += 1
        trace.inner_iterations.append(res.iterations)
        trace.lambdas.append(lam)
        trace.objective_history.append(res.objective_history)
        trace.fallback_count += res.fallback_count
        trace.final_lambda = lam
        if res.feasible:
            feasible = True
            break
        lam *= params.delta
    if not feasible:
        blocks = x.reshape(-1, 2)
        for i in range(blocks.shape[0]):
            d2 = (verts[:, 0] - blocks[i, 0]) ** 2 + (verts[:, 1] - blocks[i, 1]) ** 2
            blocks[i] = verts[int(np.argmin(d2))]
        trace.warning = ("outer iteration cap reached; nearest-vertex "
                         "quantization applied to the last iterate")
    if params.feasibility_tol > 0.0 and feasible:
        # the stage may have stopped within tolerance of vertices; snap so the
        # returned point is exactly discrete
        blocks = x.reshape(-1, 2)
        for i in range(blocks.shape[0]):
            d2 = (verts[:, 0] - blocks[i, 0]) ** 2 + (verts[:, 1] - blocks[i, 1]) ** 2
            blocks[i] = verts[int(np.argmin(d2))]
    if params.vertex_polish and params.polish_max_rounds > 0:
        trace.polish_rounds = int(_polish_loop(a, x, verts,
                                               params.polish_max_rounds))
    trace.feasible = True
    trace.converged = feasible
    trace.wall_time_s = time.perf_counter() - t0
    return x, trace
