"""PSK modulation model: constellations, Gray bit maps, sector detection, and
random problem instances (channel plus intended symbols)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

SeedLike = "int | np.random.SeedSequence | np.random.Generator"


def check_order(value: int, name: str, minimum: int = 4) -> int:
    """Validate a power-of-two order (PSK size M or phase-level count L)."""
    value = int(value)
    if value < minimum or value & (value - 1):
        raise ValueError(f"{name} must be a power of two >= {minimum}, got {value}")
    return value


@dataclass
class ProblemInstance:
    """One downlink precoding problem.

    Attributes
    ----------
    h : (K, N) complex ndarray
        Channel matrix, row k is user k.
    symbol_indices : (K,) int ndarray
        Intended PSK symbol index per user, in [0, m_order).
    m_order : int
        PSK constellation size (power of two, >= 4).
    l_levels : int
        Number of transmit phase levels per antenna (power of two, >= 4).
    p_t : float
        Total transmit power.
    """

    h: np.ndarray
    symbol_indices: np.ndarray
    m_order: int
    l_levels: int
    p_t: float = 1.0

    def __post_init__(self) -> None:
        self.h = np.asarray(self.h, dtype=np.complex128)
        if self.h.ndim != 2 or self.h.shape[0] < 1 or self.h.shape[1] < 1:
            raise ValueError(f"h must be a K x N matrix, got shape {self.h.shape}")
        if not np.all(np.isfinite(self.h.real)) or not np.all(np.isfinite(self.h.imag)):
            raise ValueError("h contains non-finite entries")
        self.symbol_indices = np.asarray(self.symbol_indices, dtype=np.int64)
        if self.symbol_indices.shape != (self.h.shape[0],):
            raise ValueError("symbol_indices must have one entry per user")
        self.m_order = check_order(self.m_order, "m_order")
        self.l_levels = check_order(self.l_levels, "l_levels")
        if np.any(self.symbol_indices < 0) or np.any(self.symbol_indices >= self.m_order):
            raise ValueError("symbol indices out of range for the PSK order")
        self.p_t = float(self.p_t)
        if not np.isfinite(self.p_t) or self.p_t <= 0.0:
            raise ValueError(f"p_t must be positive, got {self.p_t}")
        if self.h.shape[0] > self.h.shape[1]:
            warnings.warn("more users than antennas (K > N); precoding will struggle",
                          stacklevel=2)

    @property
    def k(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]

    @property
    def symbols(self) -> np.ndarray:
        """Intended unit-modulus symbols, one per user."""
        return psk_constellation(self.m_order)[self.symbol_indices]


def psk_constellation(m_order: int) -> np.ndarray:
    """Unit-modulus M-PSK points at phases (2m+1)*pi/M, m = 0..M-1.

    The offset places every point at the center of an angular sector bounded
    by multiples of 2*pi/M, so detection sectors sit symmetrically around the
    coordinate axes.
    """
    m_order = check_order(m_order, "m_order")
    phases = (2.0 * np.arange(m_order) + 1.0) * (np.pi / m_order)
    return np.exp(1j * phases)


def detect_psk(y, m_order: int):
    """Map received point(s) to the index of the angular sector they fall in.

    Sector m covers angles [2m*pi/M, 2(m+1)*pi/M), whose center is
    constellation point m. Zero input has angle 0 by convention and maps to
    index 0; callers that care about that degenerate case count zeros
    themselves.
    """
    m_order = check_order(m_order, "m_order")
    arr = np.asarray(y)
    step = TWO_PI / m_order
    idx = np.floor(np.mod(np.angle(arr), TWO_PI) / step).astype(np.int64) % m_order
    return int(idx) if arr.ndim == 0 else idx


def gray_bits(index: int, m_order: int) -> np.ndarray:
    """Binary-reflected Gray code of a symbol index, MSB first."""
    m_order = check_order(m_order, "m_order")
    index = int(index)
    if not 0 <= index < m_order:
        raise ValueError(f"index {index} out of range for M={m_order}")
    nbits = m_order.bit_length() - 1
    g = index ^ (index >> 1)
    return np.array([(g >> (nbits - 1 - b)) & 1 for b in range(nbits)], dtype=np.int64)


def gray_index(bits, m_order: int) -> int:
    """Inverse of gray_bits: recover the symbol index from its Gray bits."""
    m_order = check_order(m_order, "m_order")
    nbits = m_order.bit_length() - 1
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape != (nbits,) or np.any((bits != 0) & (bits != 1)):
        raise ValueError(f"expected {nbits} bits of 0/1")
    g = 0
    for b in bits:
        g = (g << 1) | int(b)
    # prefix-xor undoes g = m ^ (m >> 1)
    m = g
    shift = 1
    while shift < nbits:
        m ^= m >> shift
        shift <<= 1
    return m


def count_gray_bit_errors(idx_a, idx_b) -> int:
    """Number of differing Gray-coded bits between two index arrays."""
    a = np.asarray(idx_a, dtype=np.uint64)
    b = np.asarray(idx_b, dtype=np.uint64)
    ga = a ^ (a >> np.uint64(1))
    gb = b ^ (b >> np.uint64(1))
    return int(np.bitwise_count(ga ^ gb).sum())


def sample_instance(k: int, n: int, m_order: int, l_levels: int,
                    p_t: float = 1.0, seed=0) -> ProblemInstance:
    """Draw a random problem: i.i.d. CN(0,1) channel and uniform symbols.

    Draw order is fixed (channel first, then symbol indices) so a given seed
    always produces the same instance.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be >= 1")
    rng = np.random.default_rng(seed)
    h = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) * np.sqrt(0.5)
    idx = rng.integers(0, m_order, size=k)
    return ProblemInstance(h=h, symbol_indices=idx, m_order=m_order,
                           l_levels=l_levels, p_t=p_t)


def simulate_transmission(t: np.ndarray, h: np.ndarray, sigma2: float, seed=0) -> np.ndarray:
    """Received vector H t + n with i.i.d. complex Gaussian noise.

    Each entry of n has total variance sigma2 (sigma2/2 per real component).
    sigma2 = 0 returns exactly H t while still consuming the same draws, so
    streams line up across noise levels.
    """
    t = np.asarray(t, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or t.shape != (h.shape[1],):
        raise ValueError("dimension mismatch between h and t")
    sigma2 = float(sigma2)
    if sigma2 < 0.0:
        raise ValueError("sigma2 must be >= 0")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((h.shape[0], 2))
    noise = np.sqrt(sigma2 / 2.0) * (z[:, 0] + 1j * z[:, 1])
    return h @ t + noise
