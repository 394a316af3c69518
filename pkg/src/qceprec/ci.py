"""Constructive-interference symbol-scaling transform.

The noiseless received point of user k, y_hat = sqrt(P_T/N) * h_k^T z, is
decomposed along the two decision-boundary directions of its intended PSK
symbol s_k:

    y_hat = alpha_A * s_A + alpha_B * s_B,   s_A = s_k e^{-j pi/M},
                                             s_B = s_k e^{+j pi/M}.

Both coefficients nonnegative means the point lies inside the symbol's sector;
min(alpha_A, alpha_B) * sin(2 pi / M) is its distance to the nearest boundary
(the safety margin). The transform below packs all 2K coefficients into one
real matrix A such that A x = -(alpha_1_A, alpha_1_B, alpha_2_A, ...), where x
is the real block form of the transmit vector. Maximizing the worst margin is
then the min-max problem min_x max_m (A x)_m.

Real-block convention: complex N-vector z maps to the real 2N-vector
[Re z_1, Im z_1, ..., Re z_N, Im z_N]; block i is x[2i:2i+2].
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .model import ProblemInstance, check_order

TWO_PI = 2.0 * math.pi


class AlphaPair(NamedTuple):
    alpha_a: float
    alpha_b: float


def blocks_to_complex(x: np.ndarray) -> np.ndarray:
    """Real 2N block vector -> complex N vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size % 2:
        raise ValueError("expected a flat real vector of even length")
    return x[0::2] + 1j * x[1::2]


def complex_to_blocks(z: np.ndarray) -> np.ndarray:
    """Complex N vector -> real 2N block vector."""
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def boundary_vectors(s_k: complex, m_order: int) -> tuple[complex, complex]:
    """The two decision-boundary directions (s_A, s_B) of a PSK symbol."""
    check_order(m_order, "m_order")
    rot = np.exp(-1j * math.pi / m_order)
    return complex(s_k) * rot, complex(s_k) * np.conj(rot)


def decompose_alpha(y_hat: complex, s_k: complex, m_order: int) -> AlphaPair:
    """Coefficients of y_hat in the (s_A, s_B) basis of symbol s_k.

    Solves the real 2x2 system by Cramer's rule; the determinant is
    Im(conj(s_A) s_B) = |s_k|^2 sin(2 pi / M), nonzero for M >= 4.
    """
    s_a, s_b = boundary_vectors(s_k, m_order)
    y_hat = complex(y_hat)
    det = (np.conj(s_a) * s_b).imag
    alpha_a = (np.conj(y_hat) * s_b).imag / det
    alpha_b = (np.conj(s_a) * y_hat).imag / det
    return AlphaPair(float(alpha_a), float(alpha_b))


def build_ci_matrix(instance: ProblemInstance) -> np.ndarray:
    """Real 2K x 2N matrix A with (A x)_{2k} = -alpha_k_A, (A x)_{2k+1} = -alpha_k_B.

    Rows 2k and 2k+1 belong to user k (0-based); columns follow the real-block
    convention. Entries are linear in the channel and in sqrt(P_T).
    """
    hr = instance.h.real
    hi = instance.h.imag
    s = instance.symbols
    rot = np.exp(-1j * math.pi / instance.m_order)
    s_a = s * rot
    s_b = s * np.conj(rot)
    coeff = -math.sqrt(instance.p_t / instance.n) / math.sin(TWO_PI / instance.m_order)
    a = np.empty((2 * instance.k, 2 * instance.n))
    a[0::2, 0::2] = coeff * (s_b.imag[:, None] * hr - s_b.real[:, None] * hi)
    a[0::2, 1::2] = coeff * (-s_b.real[:, None] * hr - s_b.imag[:, None] * hi)
    a[1::2, 0::2] = coeff * (s_a.real[:, None] * hi - s_a.imag[:, None] * hr)
    a[1::2, 1::2] = coeff * (s_a.real[:, None] * hr + s_a.imag[:, None] * hi)
    return a


def ci_objective(a: np.ndarray, x: np.ndarray) -> tuple[float, int]:
    """max_m (A x)_m and the first row index attaining it."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or x.shape != (a.shape[1],):
        raise ValueError("dimension mismatch between A and x")
    vals = a @ x
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def margin_from_objective(value: float, m_order: int) -> float:
    """Geometric safety margin implied by the min-max objective value."""
    check_order(m_order, "m_order")
    return -value * math.sin(TWO_PI / m_order)


def min_alpha_margin(y_hat: np.ndarray, symbols: np.ndarray, m_order: int) -> float:
    """Worst-user safety margin of noiseless received points y_hat.

    Negative when some received point has crossed a decision boundary.
    """
    y_hat = np.atleast_1d(np.asarray(y_hat, dtype=np.complex128))
    symbols = np.atleast_1d(np.asarray(symbols, dtype=np.complex128))
    if y_hat.shape != symbols.shape:
        raise ValueError("y_hat and symbols must align")
    worst = math.inf
    for yk, sk in zip(y_hat, symbols):
        pair = decompose_alpha(yk, sk, m_order)
        worst = min(worst, pair.alpha_a, pair.alpha_b)
    return worst * math.sin(TWO_PI / m_order)
