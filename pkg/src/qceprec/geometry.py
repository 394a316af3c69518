"""Geometry of the quantized constant-envelope transmit set.

Per antenna the transmit signal is one of L unit vectors at angles
(2l+1)*pi/L, l = 0..L-1 (the vertex set V_L). The relaxed solver works on
conv(V_L), a regular L-gon with inradius c = cos(pi/L), and its x-step needs
the penalized projection

    minimize_{p in conv(V_L)}  ||p - p_tilde||^2 - beta * ||p||,   beta >= 0.

After rotating p_tilde by a multiple of 2*pi/L into the sector bisected by
angle 0 (so the rotated point (u~, v~) has argument in [-pi/L, pi/L)), the
minimizer is either radial (inside the hull) or sits on the edge u = c, which
collapses the search to one dimension in r = ||p||:

    r in [0, r0]:  (r - q)^2 - beta*r,                q = ||p_tilde||,
    r in [r0, 1]:  (c - u~)^2 + (sqrt(r^2 - c^2) - |v~|)^2 - beta*r,

where r0 = c*q/u~ is the radius at which the ray through p_tilde leaves the
hull. The first branch is a clamped quadratic. The second is strictly convex
(second derivative 2 + 2|v~|c^2 (r^2-c^2)^{-3/2} > 0), so its stationary
point, when one exists, is the unique admissible positive root of

    4r^4 - 4 beta r^3 + (beta^2 - 4c^2 - 4 v~^2) r^2 + 4 beta c^2 r
        - beta^2 c^2 = 0,

obtained by squaring (2r - beta) sqrt(r^2 - c^2) = 2|v~| r. The quartic is
solved in closed form (Ferrari) with Newton polish, and any root must also
satisfy the unsquared equation; a safeguarded bisection of the derivative
covers floating-point corner cases near r = c. beta >= 2 always drives the
minimizer to r = 1, i.e. to an exact vertex.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from numba import njit

from .model import check_order

# Module-wide tolerances (SolverParams can override per solve).
HULL_TOL = 1e-10
ROOT_RESIDUAL_TOL = 1e-8

TWO_PI = 2.0 * math.pi


class SectorFrame(NamedTuple):
    alpha: float
    u_rot: float
    v_rot: float


class QuarticDiagnostics:
    """Counters for the closed-form root path (reset between experiments)."""

    def __init__(self) -> None:
        self.calls = 0
        self.fallbacks = 0

    def reset(self) -> None:
        self.calls = 0
        self.fallbacks = 0


quartic_diagnostics = QuarticDiagnostics()


@lru_cache(maxsize=None)
def _vertex_table(l_levels: int) -> np.ndarray:
    # Build one quadrant and mirror it so the table is exactly symmetric in
    # both axes; distance ties at symmetric query points then break by index
    # instead of by last-ulp libm noise.
    quarter = l_levels // 4
    verts = np.empty((l_levels, 2))
    for i in range(quarter):
        ang = (2 * i + 1) * math.pi / l_levels
        u, v = math.cos(ang), math.sin(ang)
        verts[i] = (u, v)
        verts[l_levels // 2 - 1 - i] = (-u, v)
        verts[l_levels // 2 + i] = (-u, -v)
        verts[l_levels - 1 - i] = (u, -v)
    verts.setflags(write=False)
    return verts


def vertex_table(l_levels: int) -> np.ndarray:
    """Read-only cached vertex array (internal fast path)."""
    return _vertex_table(check_order(l_levels, "l_levels"))


def qce_vertices(l_levels: int) -> np.ndarray:
    """The L unit-norm transmit points at angles (2l+1)*pi/L, l = 0..L-1."""
    return vertex_table(l_levels).copy()


def hull_inradius(l_levels: int) -> float:
    """Inradius cos(pi/L) of conv(V_L)."""
    return math.cos(math.pi / check_order(l_levels, "l_levels"))


def nearest_vertex(p, l_levels: int) -> tuple[np.ndarray, int]:
    """Closest vertex in Euclidean distance; ties break to the lower index.

    The origin is equidistant from all vertices and maps to index 0 by
    convention.
    """
    verts = vertex_table(l_levels)
    u, v = float(p[0]), float(p[1])
    d2 = (verts[:, 0] - u) ** 2 + (verts[:, 1] - v) ** 2
    idx = int(np.argmin(d2))
    return verts[idx].copy(), idx


def is_qce_feasible(x, l_levels: int, tol: float = 0.0) -> bool:
    """True iff every real-block pair of x is within tol of some vertex."""
    if tol < 0.0:
        raise ValueError("tol must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size % 2:
        raise ValueError("expected a flat real vector of even length")
    verts = vertex_table(l_levels)
    blocks = x.reshape(-1, 2)
    if tol == 0.0:
        hit = (blocks[:, None, :] == verts[None, :, :]).all(axis=2)
        return bool(hit.any(axis=1).all())
    d2 = ((blocks[:, None, :] - verts[None, :, :]) ** 2).sum(axis=2)
    return bool((d2.min(axis=1) <= tol * tol).all())


def in_hull(p, l_levels: int, tol: float = HULL_TOL) -> bool:
    """Membership in conv(V_L): all L half-plane constraints within tol."""
    l_levels = check_order(l_levels, "l_levels")
    u, v = float(p[0]), float(p[1])
    c = math.cos(math.pi / l_levels)
    ang = TWO_PI * np.arange(l_levels) / l_levels
    return bool(np.max(u * np.cos(ang) + v * np.sin(ang)) <= c + tol)


# --- kernels ---------------------------------------------------------------


@njit(cache=True, nogil=True)
def _sector_rotate(u, v, l_levels):
    """Rotate (u, v) by -alpha, alpha = j*2pi/L, into the sector around angle 0.

    Returns (j, u_rot, v_rot); by the floor convention the rotated argument
    lies in [-pi/L, pi/L), points exactly on the lower boundary included.
    """
    step = TWO_PI / l_levels
    ang = math.atan2(v, u)
    j = math.floor((ang + 0.5 * step) / step)
    alpha = j * step
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    return j, ca * u + sa * v, ca * v - sa * u


@njit(cache=True, nogil=True)
def _cbrt(x):
    if x >= 0.0:
        return x ** (1.0 / 3.0)
    return -((-x) ** (1.0 / 3.0))


@njit(cache=True, nogil=True)
def _cubic_largest_real_root(b, c, d):
    """Largest real root of x^3 + b x^2 + c x + d."""
    p = c - b * b / 3.0
    q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d
    off = -b / 3.0
    disc = 0.25 * q * q + p * p * p / 27.0
    if disc >= 0.0:
        s = math.sqrt(disc)
        return _cbrt(-0.5 * q + s) + _cbrt(-0.5 * q - s) + off
    m = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    if arg > 1.0:
        arg = 1.0
    elif arg < -1.0:
        arg = -1.0
    theta = math.acos(arg) / 3.0
    return m * math.cos(theta) + off


@njit(cache=True, nogil=True)
def _quartic_roots(a3, a2, a1, a0):
    """All four roots of x^4 + a3 x^3 + a2 x^2 + a1 x + a0 (Ferrari)."""
    p = a2 - 0.375 * a3 * a3
    q = a1 - 0.5 * a3 * a2 + 0.125 * a3 * a3 * a3
    r = a0 - 0.25 * a3 * a1 + 0.0625 * a3 * a3 * a2 - (3.0 / 256.0) * a3 * a3 * a3 * a3
    off = -0.25 * a3
    scale = 1.0 + abs(p) + math.sqrt(abs(r))
    if abs(q) <= 1e-12 * scale:
        # biquadratic in t^2
        sd = np.sqrt(complex(p * p - 4.0 * r, 0.0))
        z1 = 0.5 * (-p + sd)
        z2 = 0.5 * (-p - sd)
        s1 = np.sqrt(z1)
        s2 = np.sqrt(z2)
        return off + s1, off - s1, off + s2, off - s2
    m = _cubic_largest_real_root(p, 0.25 * p * p - r, -0.125 * q * q)
    if m < 1e-300:
        m = 1e-300
    s = math.sqrt(2.0 * m)
    half = 0.5 * p + m
    qa = half - 0.5 * q / s
    qb = half + 0.5 * q / s
    d1 = np.sqrt(complex(s * s - 4.0 * qa, 0.0))
    d2 = np.sqrt(complex(s * s - 4.0 * qb, 0.0))
    return (off + 0.5 * (-s + d1), off + 0.5 * (-s - d1),
            off + 0.5 * (s + d2), off + 0.5 * (s - d2))


@njit(cache=True, nogil=True)
def _hprime(r, va, beta, c):
    w2 = r * r - c * c
    if w2 <= 0.0:
        return -1e300 if va > 0.0 else 2.0 * r - beta
    return 2.0 * r - beta - 2.0 * va * r / math.sqrt(w2)


@njit(cache=True, nogil=True)
def _polish_root(r, va, beta, c):
    """A few guarded Newton steps on h'(r) = 2r - beta - 2 va r / sqrt(r^2-c^2)."""
    for _ in range(3):
        w2 = r * r - c * c
        if w2 <= 0.0:
            r = c + 1e-12 * (1.0 + c)
            w2 = r * r - c * c
        w = math.sqrt(w2)
        hp = 2.0 * r - beta - 2.0 * va * r / w
        hpp = 2.0 + 2.0 * va * c * c / (w2 * w)
        rn = r - hp / hpp
        if rn <= c:
            rn = 0.5 * (r + c)
        r = rn
    return r


@njit(cache=True, nogil=True)
def _edge_stationary(va, beta, c, residual_tol):
    """Stationary radius of the edge branch on (c, inf).

    Returns (r, status): status 0 closed form, 1 bisection fallback,
    2 no stationary point. The root may exceed 1; callers clamp by their
    candidate logic.
    """
    if va == 0.0:
        if beta > 2.0 * c:
            return 0.5 * beta, 0
        return 0.0, 2
    if beta == 0.0:
        return math.sqrt(c * c + va * va), 0
    a3 = -beta
    a2 = 0.25 * (beta * beta - 4.0 * c * c - 4.0 * va * va)
    a1 = beta * c * c
    a0 = -0.25 * beta * beta * c * c
    z1, z2, z3, z4 = _quartic_roots(a3, a2, a1, a0)
    lo = c if c > 0.5 * beta else 0.5 * beta
    tol = residual_tol * (1.0 + beta + va)
    best_r = -1.0
    best_hp = 1e300
    for z in (z1, z2, z3, z4):
        if abs(z.imag) > 1e-7 * (1.0 + abs(z.real)):
            continue
        r = z.real
        if r < lo - 1e-6:
            continue
        r = _polish_root(r, va, beta, c)
        if 2.0 * r - beta < -1e-9:
            continue
        hp = abs(_hprime(r, va, beta, c))
        if hp < best_hp:
            best_hp = hp
            best_r = r
    if best_r > 0.0 and best_hp <= tol:
        return best_r, 0
    # Fallback: h' is increasing on (c, inf) and -inf at c+, so bisect.
    lo = c + 1e-14 * (1.0 + c)
    if 0.5 * beta > lo:
        lo = 0.5 * beta
    hi = 0.5 * beta + va + c + 1.0
    for _ in range(64):
        if _hprime(hi, va, beta, c) > 0.0:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _hprime(mid, va, beta, c) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), 1


@njit(cache=True, nogil=True)
def _solve_block(u, v, beta, l_levels, c, verts, residual_tol):
    """Minimize ||p - (u, v)||^2 - beta ||p|| over conv(V_L).

    Returns (uo, vo, vidx, fallback): vidx is the vertex index when the
    output is an exact vertex-table entry, else -1; fallback counts a
    bisection rescue inside the quartic path.
    """
    q = math.hypot(u, v)
    if q == 0.0:
        # Free direction: objective r^2 - beta r. Inside the inradius any
        # direction works, take (1, 0); beyond it only vertex rays remain,
        # take vertex 0.
        r = 0.5 * beta
        if r <= c:
            return r, 0.0, -1, 0
        if r >= 1.0:
            return verts[0, 0], verts[0, 1], 0, 0
        return r * verts[0, 0], r * verts[0, 1], -1, 0

    j, ur, vr = _sector_rotate(u, v, l_levels)
    if beta >= 2.0:
        # The edge branch derivative is <= 2 - beta <= 0 up to r = 1 and the
        # radial branch cannot stop before r0, so the minimizer is the vertex
        # on p_tilde's side of the sector.
        l = j % l_levels if vr >= 0.0 else (j - 1) % l_levels
        return verts[l, 0], verts[l, 1], l, 0

    if beta == 0.0 and ur <= c:
        return u, v, -1, 0

    va = abs(vr)
    r0 = c * q / ur
    if r0 < c:
        r0 = c
    elif r0 > 1.0:
        r0 = 1.0

    # radial branch
    r1 = q + 0.5 * beta
    if r1 > r0:
        r1 = r0
    best_r = r1
    best_f = (r1 - q) * (r1 - q) - beta * r1
    best_edge = False

    # edge branch: stationary candidate plus both endpoints
    du2 = (c - ur) * (c - ur)
    rbar, status = _edge_stationary(va, beta, c, residual_tol)
    fallback = 1 if status == 1 else 0
    for pick in range(3):
        if pick == 0:
            if status == 2 or rbar < r0 or rbar > 1.0:
                continue
            r = rbar
        elif pick == 1:
            r = r0
        else:
            r = 1.0
        w2 = r * r - c * c
        w = math.sqrt(w2) if w2 > 0.0 else 0.0
        f = du2 + (w - va) * (w - va) - beta * r
        if f < best_f:
            best_f = f
            best_r = r
            best_edge = True

    if best_r == 1.0:
        l = j % l_levels if vr >= 0.0 else (j - 1) % l_levels
        return verts[l, 0], verts[l, 1], l, fallback

    if not best_edge:
        scale = best_r / q
        return scale * u, scale * v, -1, fallback

    w2 = best_r * best_r - c * c
    w = math.sqrt(w2) if w2 > 0.0 else 0.0
    ve = w if vr >= 0.0 else -w
    alpha = j * (TWO_PI / l_levels)
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    return ca * c - sa * ve, sa * c + ca * ve, -1, fallback


# --- public wrappers --------------------------------------------------------


def rotate_to_sector(p, l_levels: int) -> SectorFrame:
    """Sector frame of p: rotation angle (multiple of 2*pi/L) and coordinates."""
    l_levels = check_order(l_levels, "l_levels")
    u, v = float(p[0]), float(p[1])
    if u == 0.0 and v == 0.0:
        raise ValueError("the origin has no sector frame")
    j, ur, vr = _sector_rotate(u, v, l_levels)
    return SectorFrame(float(j) * TWO_PI / l_levels, float(ur), float(vr))


def quartic_stationary_root(u_rot: float, v_rot: float, beta: float,
                            l_levels: int):
    """Stationary radius of the edge branch, or None when h is increasing.

    u_rot, v_rot are sector-frame coordinates (u_rot > 0). The returned root
    can exceed 1; the projection logic discards it then. Bisection rescues
    are counted in quartic_diagnostics.
    """
    l_levels = check_order(l_levels, "l_levels")
    if not u_rot > 0.0:
        raise ValueError("u_rot must be positive (sector frame)")
    if beta < 0.0:
        raise ValueError("beta must be >= 0")
    c = math.cos(math.pi / l_levels)
    r, status = _edge_stationary(abs(float(v_rot)), float(beta), c,
                                 ROOT_RESIDUAL_TOL)
    quartic_diagnostics.calls += 1
    if status == 2:
        return None
    if status == 1:
        quartic_diagnostics.fallbacks += 1
    return float(r)


def penalized_projection(p_tilde, beta: float, l_levels: int,
                         residual_tol: float = ROOT_RESIDUAL_TOL) -> np.ndarray:
    """Global minimizer of ||p - p_tilde||^2 - beta*||p|| over conv(V_L).

    beta >= 2 always lands on an exact vertex (bit-equal to the vertex
    table), which is what terminates the penalty solver in finite time.
    """
    l_levels = check_order(l_levels, "l_levels")
    beta = float(beta)
    if beta < 0.0:
        raise ValueError("beta must be >= 0")
    verts = _vertex_table(l_levels)
    c = math.cos(math.pi / l_levels)
    uo, vo, vidx, fallback = _solve_block(float(p_tilde[0]), float(p_tilde[1]),
                                          beta, l_levels, c, verts,
                                          float(residual_tol))
    quartic_diagnostics.calls += 1
    quartic_diagnostics.fallbacks += fallback
    return np.array([uo, vo])
