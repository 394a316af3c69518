"""Vertex geometry, the sector frame, and the penalized block projection."""

import math

import numpy as np
import pytest

from qceprec import (hull_inradius, in_hull, is_qce_feasible, nearest_vertex,
                     penalized_projection, qce_vertices,
                     quartic_stationary_root, rotate_to_sector)
from qceprec.geometry import _hprime
from qceprec.selftest import check_projection_against_grid, projection_objective

SQ2 = math.sqrt(2.0) / 2.0


# --- vertex set ---------------------------------------------------------------


def test_vertex_norms():
    for l in (4, 8, 16, 32):
        v = qce_vertices(l)
        assert v.shape == (l, 2)
        assert np.max(np.abs(np.hypot(v[:, 0], v[:, 1]) - 1.0)) <= 1e-12


def test_vertex_angular_gaps():
    for l in (4, 8, 16, 32):
        ang = np.unwrap(np.arctan2(qce_vertices(l)[:, 1], qce_vertices(l)[:, 0]))
        assert np.allclose(np.diff(ang), 2 * math.pi / l, atol=1e-12)
        assert abs(ang[0] - math.pi / l) <= 1e-12


def test_vertices_return_copy():
    v = qce_vertices(4)
    v[0, 0] = 99.0
    assert qce_vertices(4)[0, 0] != 99.0


def test_hull_inradius():
    for l in (4, 8, 16, 32):
        assert hull_inradius(l) == math.cos(math.pi / l)


# --- nearest vertex ---------------------------------------------------------------


def test_nearest_vertex_tie_breaks_low():
    # (1, 0) is equidistant from the first and last vertices of L=4
    vert, idx = nearest_vertex((1.0, 0.0), 4)
    assert idx == 0
    assert np.allclose(vert, [SQ2, SQ2], atol=1e-12)


def test_nearest_vertex_fixed_points():
    for l in (4, 8, 16):
        verts = qce_vertices(l)
        for i in range(l):
            vert, idx = nearest_vertex(verts[i], l)
            assert idx == i
            assert np.array_equal(vert, verts[i])


def test_nearest_vertex_matches_scan():
    rng = np.random.default_rng(2)
    for _ in range(1000):
        l = int(rng.choice((4, 8, 16, 32)))
        p = rng.uniform(-2, 2, size=2)
        _, idx = nearest_vertex(p, l)
        verts = qce_vertices(l)
        d2 = np.sum((verts - p) ** 2, axis=1)
        assert d2[idx] <= d2.min() + 1e-15


def test_nearest_vertex_origin():
    _, idx = nearest_vertex((0.0, 0.0), 8)
    assert idx == 0


# --- feasibility and hull tests ---------------------------------------------------


def test_feasible_exact_vertices():
    x = qce_vertices(8)[[0, 3, 5]].reshape(-1)
    assert is_qce_feasible(x, 8, tol=0.0)


def test_feasible_edge_midpoint_rejected():
    v = qce_vertices(8)
    mid = 0.5 * (v[0] + v[1])
    assert not is_qce_feasible(mid, 8, tol=1e-6)


def test_feasible_tiny_perturbation():
    x = qce_vertices(8)[2] + 1e-9
    assert is_qce_feasible(x, 8, tol=1e-6)
    assert not is_qce_feasible(x, 8, tol=0.0)


def test_feasible_validation():
    with pytest.raises(ValueError):
        is_qce_feasible(np.zeros(3), 4)
    with pytest.raises(ValueError):
        is_qce_feasible(np.zeros(2), 4, tol=-1.0)


def test_in_hull():
    assert in_hull((0.0, 0.0), 4)
    assert in_hull(qce_vertices(4)[0], 4)
    assert in_hull((hull_inradius(4), 0.0), 4)
    assert not in_hull((1.0, 0.0), 4)
    assert not in_hull((2.0, 0.0), 32)


# --- sector frame ---------------------------------------------------------------


def test_rotate_identity_sector():
    frame = rotate_to_sector((1.0, 0.0), 8)
    assert frame.alpha == 0.0
    assert (frame.u_rot, frame.v_rot) == (1.0, 0.0)


def test_rotate_quarter_turn():
    frame = rotate_to_sector((0.0, 1.0), 4)
    assert abs(frame.alpha - math.pi / 2) <= 1e-12
    assert abs(frame.u_rot - 1.0) <= 1e-12
    assert abs(frame.v_rot) <= 1e-12


def test_rotate_preserves_norm_and_centers():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        l = int(rng.choice((4, 8, 16, 32)))
        p = rng.uniform(-3, 3, size=2)
        if p[0] == 0.0 and p[1] == 0.0:
            continue
        frame = rotate_to_sector(p, l)
        assert abs(math.hypot(frame.u_rot, frame.v_rot) - math.hypot(*p)) <= 1e-9
        # rotated point sits in the sector centered on angle zero
        assert abs(math.atan2(frame.v_rot, frame.u_rot)) <= math.pi / l + 1e-12
        # alpha is a multiple of the sector angle and undoes the rotation
        steps = frame.alpha / (2 * math.pi / l)
        assert abs(steps - round(steps)) <= 1e-9


def test_rotate_origin_rejected():
    with pytest.raises(ValueError):
        rotate_to_sector((0.0, 0.0), 4)


# --- stationary radius of the edge branch -------------------------------------------


def test_quartic_no_stationary_point():
    assert quartic_stationary_root(1.0, 0.0, 0.0, 8) is None


def test_quartic_beta_zero_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(200):
        l = int(rng.choice((4, 8, 16, 32)))
        v = float(rng.uniform(0.01, 3.0))
        root = quartic_stationary_root(1.0, v, 0.0, l)
        c = hull_inradius(l)
        assert root is not None
        assert abs(root - math.hypot(c, v)) <= 1e-10


def test_quartic_matches_polynomial_oracle():
    # companion-matrix roots of the expanded quartic, filtered to the
    # admissible branch, must agree with the closed-form root
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(400):
        l = int(rng.choice((4, 8, 16, 32)))
        v = float(rng.uniform(-3.0, 3.0))
        beta = float(rng.uniform(0.0, 4.0))
        c = hull_inradius(l)
        root = quartic_stationary_root(1.0, v, beta, l)
        coeffs = [4.0, -4.0 * beta, beta * beta - 4 * c * c - 4 * v * v,
                  4.0 * beta * c * c, -beta * beta * c * c]
        cands = [r.real for r in np.roots(coeffs)
                 if abs(r.imag) <= 1e-8 and r.real >= c - 1e-12
                 and 2 * r.real - beta >= -1e-12
                 and abs(_hprime(max(r.real, c), abs(v), beta, c)) <= 1e-6]
        if root is None:
            assert not cands
            continue
        assert cands
        assert min(abs(r - root) for r in cands) <= 1e-7
        checked += 1
    assert checked > 200


def test_quartic_residual_small():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        l = int(rng.choice((4, 8, 16, 32)))
        v = float(rng.uniform(-4.0, 4.0))
        beta = float(rng.uniform(0.0, 4.0))
        root = quartic_stationary_root(1.0, v, beta, l)
        if root is None:
            continue
        assert abs(_hprime(root, abs(v), beta, hull_inradius(l))) <= 1e-7


def test_quartic_validation():
    with pytest.raises(ValueError):
        quartic_stationary_root(0.0, 1.0, 1.0, 4)
    with pytest.raises(ValueError):
        quartic_stationary_root(1.0, 1.0, -0.5, 4)


# --- penalized projection ---------------------------------------------------------


def test_projection_identity_inside_hull():
    p = np.array([0.2, -0.1])
    out = penalized_projection(p, 0.0, 8)
    assert np.allclose(out, p, atol=1e-12)


def test_projection_forced_vertex_example():
    out = penalized_projection((0.9, 0.1), 3.0, 4)
    assert np.allclose(out, [SQ2, SQ2], atol=1e-12)


def test_projection_beta_two_lands_on_exact_vertices():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        l = int(rng.choice((4, 8, 16, 32)))
        p = rng.uniform(-3.0, 3.0, size=2)
        beta = float(rng.uniform(2.0, 4.0))
        out = penalized_projection(p, beta, l)
        assert is_qce_feasible(out, l, tol=0.0)


def test_projection_beats_vertex_and_interior_candidates():
    # output objective must not exceed that of any vertex or the plain
    # hull projection of p_tilde itself
    rng = np.random.default_rng(12)
    for _ in range(300):
        l = int(rng.choice((4, 8, 16)))
        p = rng.uniform(-2.0, 2.0, size=2)
        beta = float(rng.uniform(0.0, 2.0))
        out = penalized_projection(p, beta, l)
        got = projection_objective(out, p, beta)
        for vert in qce_vertices(l):
            assert got <= projection_objective(vert, p, beta) + 1e-9
        if in_hull(p, l):
            assert got <= projection_objective(p, p, beta) + 1e-9


def test_projection_grid_oracle_small():
    res = check_projection_against_grid(200, 801, seed=77)
    assert res.passed, res.detail


def test_projection_validation():
    with pytest.raises(ValueError):
        penalized_projection((0.0, 0.0), -1.0, 4)
    with pytest.raises(ValueError):
        penalized_projection((0.0, 0.0), 1.0, 6)
