"""Hull-relaxation, zero-forcing, and exhaustive baselines."""

import math

import numpy as np
import pytest

from qceprec import (DegenerateChannelError, build_ci_matrix, ci_objective,
                     default_params, exhaustive_search, homotopy_solve,
                     is_qce_feasible, msm_solve, sample_instance, zf_precoder)
from tests.test_ci import qpsk_unit_instance

SQ2 = math.sqrt(2.0) / 2.0


# --- hull relaxation + quantization -----------------------------------------------


def test_msm_outputs_exact_vertices():
    for seed in range(10):
        inst = sample_instance(2, 5, 8, 8, seed=seed)
        a = build_ci_matrix(inst)
        sol = msm_solve(a, 8, default_params(a, 8), m_order=8)
        assert sol.feasible
        assert is_qce_feasible(sol.x, 8, tol=0.0)
        assert sol.margin is not None


def test_msm_quantization_never_improves():
    # the quantized point cannot beat the hull optimum it was snapped from
    for seed in range(100):
        inst = sample_instance(2, 4, 4, 4, seed=seed)
        a = build_ci_matrix(inst)
        sol = msm_solve(a, 4, default_params(a, 4))
        assert sol.objective >= sol.relaxed_objective - 1e-9


def test_msm_unit_instance_hits_optimum():
    a = build_ci_matrix(qpsk_unit_instance())
    sol = msm_solve(a, 4, default_params(a, 4))
    best = exhaustive_search(a, 4)
    assert abs(sol.objective - best.objective) <= 1e-9


def test_msm_objective_matches_x():
    inst = sample_instance(3, 6, 8, 8, seed=42)
    a = build_ci_matrix(inst)
    sol = msm_solve(a, 8, default_params(a, 8))
    value, _ = ci_objective(a, sol.x)
    assert abs(value - sol.objective) <= 1e-12


# --- zero forcing ---------------------------------------------------------------


def test_zf_identity_channel():
    t = zf_precoder(np.eye(1, dtype=complex), np.array([1.0 + 0j]), p_t=1.0)
    assert np.allclose(t, [1.0 + 0j], atol=1e-12)


def test_zf_aligns_received_points():
    rng = np.random.default_rng(33)
    for _ in range(20):
        h = (rng.normal(size=(2, 8)) + 1j * rng.normal(size=(2, 8))) * SQ2
        s = np.exp(1j * rng.uniform(0, 2 * math.pi, size=2))
        t = zf_precoder(h, s, p_t=2.0)
        received = h @ t
        # every user sees the same positive real multiple of its symbol
        ratios = received / s
        assert np.max(np.abs(ratios - ratios[0])) <= 1e-9
        assert ratios[0].real > 0 and abs(ratios[0].imag) <= 1e-9


def test_zf_power_normalization():
    rng = np.random.default_rng(34)
    for p_t in (0.5, 1.0, 4.0):
        h = rng.normal(size=(3, 6)) + 1j * rng.normal(size=(3, 6))
        s = np.exp(1j * rng.uniform(0, 2 * math.pi, size=3))
        t = zf_precoder(h, s, p_t=p_t)
        assert abs(np.linalg.norm(t) ** 2 - p_t) <= 1e-12


def test_zf_degenerate_channel():
    h = np.ones((2, 4), dtype=complex)  # rank one
    with pytest.raises(DegenerateChannelError):
        zf_precoder(h, np.array([1.0 + 0j, 1j]))


def test_zf_validation():
    with pytest.raises(ValueError):
        zf_precoder(np.eye(2, dtype=complex), np.ones(3, dtype=complex))
    with pytest.raises(ValueError):
        zf_precoder(np.ones((3, 2), dtype=complex), np.ones(3, dtype=complex))
    with pytest.raises(ValueError):
        zf_precoder(np.eye(2, dtype=complex), np.ones(2, dtype=complex), p_t=0.0)


# --- exhaustive enumeration -----------------------------------------------------


def test_exhaustive_unit_instance():
    a = build_ci_matrix(qpsk_unit_instance())
    sol = exhaustive_search(a, 4)
    assert abs(sol.objective - (-SQ2)) <= 1e-12
    assert np.allclose(sol.x, [SQ2, SQ2], atol=1e-12)
    assert sol.enumerated == 4


def test_exhaustive_enumeration_count():
    inst = sample_instance(2, 3, 4, 8, seed=0)
    a = build_ci_matrix(inst)
    assert exhaustive_search(a, 8).enumerated == 8 ** 3


def test_exhaustive_lower_bounds_heuristics():
    for seed in range(20):
        inst = sample_instance(2, 4, 4, 4, seed=seed)
        a = build_ci_matrix(inst)
        best = exhaustive_search(a, 4).objective
        params = default_params(a, 4)
        x, _ = homotopy_solve(a, 4, params)
        hom, _ = ci_objective(a, x)
        msm = msm_solve(a, 4, params).objective
        assert best <= hom + 1e-9
        assert best <= msm + 1e-9


def test_exhaustive_refuses_large_grids():
    a = np.zeros((2, 10))
    a[0, 0] = 1.0
    with pytest.raises(ValueError):
        exhaustive_search(a, 32)  # 32^5 > 1e6
