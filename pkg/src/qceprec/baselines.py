"""Baseline precoders: hull-relaxed MSM with quantization, infinite-resolution
zero forcing, and an exhaustive vertex search for ground truth on tiny
problems."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .ci import ci_objective, margin_from_objective
from .geometry import _vertex_table, nearest_vertex
from .model import check_order
from .solver import SolverParams, ao_solve, _validated_matrix


class DegenerateChannelError(RuntimeError):
    """The channel draw is too ill-conditioned for zero forcing."""


@dataclass
class PrecodeSolution:
    """Outcome of one precoder run.

    x is the real block vector for vertex-constrained algorithms, None for
    zero forcing (which reports the complex t directly through the harness).
    margin is populated when the PSK order is known to the caller.
    """

    algorithm: str
    x: np.ndarray | None
    feasible: bool
    objective: float | None
    margin: float | None = None
    solve_time_s: float = 0.0
    iterations: int = 0
    relaxed_objective: float | None = None
    enumerated: int | None = None


def msm_solve(a, l_levels: int, params: SolverParams,
              m_order: int | None = None, *, inner_tol: float = 1e-5,
              inner_max_iters: int = 2000) -> PrecodeSolution:
    """Maximize the worst safety margin over the hull, then quantize.

    The relaxation is the penalty problem with weight zero, solved by the
    same AO engine; every block of the relaxed iterate is then snapped to its
    nearest vertex. Both the relaxed and the quantized objectives are kept.

    Unlike the vertex-seeking solver, the relaxation has no feasibility event
    to stop on, and the quantization step inherits whatever inaccuracy the
    iterate still carries, so the stage runs under a tighter stopping profile
    than the caller's params by default.
    """
    t0 = time.perf_counter()
    stage = params.replace(inner_tol=inner_tol, inner_max_iters=inner_max_iters)
    res = ao_solve(a, l_levels, 0.0, stage)
    blocks = res.x.reshape(-1, 2)
    xq = np.empty_like(res.x)
    for i in range(blocks.shape[0]):
        vert, _ = nearest_vertex(blocks[i], l_levels)
        xq[2 * i:2 * i + 2] = vert
    relaxed, _ = ci_objective(a, res.x)
    quantized, _ = ci_objective(a, xq)
    return PrecodeSolution(
        algorithm="msm", x=xq, feasible=True, objective=quantized,
        margin=None if m_order is None else margin_from_objective(quantized, m_order),
        solve_time_s=time.perf_counter() - t0,
        iterations=res.iterations, relaxed_objective=relaxed)


def zf_precoder(h, s, p_t: float = 1.0) -> np.ndarray:
    """Zero-forcing transmit vector t = c * H^H (H H^H)^{-1} s, ||t||^2 = P_T.

    Solved through a Cholesky factorization of the K x K Gram matrix; a
    failed factorization or a condition estimate above 1e12 signals a
    degenerate channel draw that callers should resample.
    """
    h = np.asarray(h, dtype=np.complex128)
    s = np.asarray(s, dtype=np.complex128)
    if h.ndim != 2 or s.shape != (h.shape[0],):
        raise ValueError("dimension mismatch between h and s")
    if h.shape[0] > h.shape[1]:
        raise ValueError("zero forcing needs K <= N")
    if not p_t > 0.0:
        raise ValueError("p_t must be positive")
    gram = h @ h.conj().T
    if np.linalg.cond(gram) > 1e12:
        raise DegenerateChannelError("Gram matrix condition estimate above 1e12")
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise DegenerateChannelError("Gram matrix not positive definite") from exc
    w = np.linalg.solve(chol.conj().T, np.linalg.solve(chol, s))
    t = h.conj().T @ w
    norm = np.linalg.norm(t)
    if norm == 0.0:
        raise DegenerateChannelError("zero-forcing direction vanished")
    return math.sqrt(p_t) / norm * t


@njit(cache=True, nogil=True)
def _exhaustive_scan(contrib):
    """Depth-first scan over all vertex assignments.

    contrib[b, l, m] is the objective-row contribution of putting block b on
    vertex l. Enumeration is lexicographic in (l_1, ..., l_N) and a strict
    improvement test keeps the lexicographically first optimum.
    """
    nblocks, nverts, twok = contrib.shape
    digits = np.zeros(nblocks, np.int64)
    best_digits = np.zeros(nblocks, np.int64)
    partial = np.zeros((nblocks + 1, twok))
    best = 1e300
    level = 0
    while level >= 0:
        if digits[level] == nverts:
            digits[level] = 0
            level -= 1
            if level >= 0:
                digits[level] += 1
            continue
        l = digits[level]
        for m in range(twok):
            partial[level + 1, m] = partial[level, m] + contrib[level, l, m]
        if level == nblocks - 1:
            v = -1e300
            for m in range(twok):
                if partial[nblocks, m] > v:
                    v = partial[nblocks, m]
            if v < best:
                best = v
                best_digits[:] = digits
            digits[level] += 1
        else:
            level += 1
            digits[level] = 0
    return best, best_digits


def exhaustive_search(a, l_levels: int, n_antennas: int | None = None,
                      m_order: int | None = None) -> PrecodeSolution:
    """Global optimum of the vertex-constrained min-max problem by full
    enumeration (guarded to L^N <= 1e6)."""
    a = _validated_matrix(a)
    l_levels = check_order(l_levels, "l_levels")
    n = a.shape[1] // 2
    if n_antennas is not None and n_antennas != n:
        raise ValueError("n_antennas does not match the matrix width")
    count = l_levels ** n
    if count > 10 ** 6:
        raise ValueError(f"refusing exhaustive search over {count} assignments")
    verts = _vertex_table(l_levels)
    t0 = time.perf_counter()
    # contrib[b, l, :] = a[:, 2b:2b+2] @ verts[l]
    contrib = np.einsum("mbr,lr->blm", a.reshape(a.shape[0], n, 2), verts)
    best, digits = _exhaustive_scan(np.ascontiguousarray(contrib))
    x = verts[digits].reshape(-1)
    return PrecodeSolution(
        algorithm="exhaustive", x=x, feasible=True, objective=float(best),
        margin=None if m_order is None else margin_from_objective(float(best), m_order),
        solve_time_s=time.perf_counter() - t0, enumerated=count)
