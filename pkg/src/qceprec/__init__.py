"""Quantized constant-envelope precoding for the PSK downlink.

Design transmit vectors whose per-antenna entries are restricted to L equally
spaced phases, by maximizing the worst-user constructive-interference safety
margin through an exact penalty relaxation, and measure BER against
hull-relaxation and zero-forcing baselines by Monte-Carlo simulation.
"""

__version__ = "0.1.0"

from .baselines import (DegenerateChannelError, PrecodeSolution,
                        exhaustive_search, msm_solve, zf_precoder)
from .ci import (AlphaPair, blocks_to_complex, boundary_vectors,
                 build_ci_matrix, ci_objective, complex_to_blocks,
                 decompose_alpha, margin_from_objective, min_alpha_margin)
from .geometry import (SectorFrame, hull_inradius, in_hull, is_qce_feasible,
                       nearest_vertex, penalized_projection, qce_vertices,
                       quartic_diagnostics, quartic_stationary_root,
                       rotate_to_sector)
from .harness import (ALGORITHMS, PrecodeOutcome, SweepConfig, SweepResult,
                      SweepRow, TrialResult, precode_instance, run_sweep,
                      run_trial, sigma2_for_snr, write_csv)
from .model import (ProblemInstance, count_gray_bit_errors, detect_psk,
                    gray_bits, gray_index, psk_constellation, sample_instance,
                    simulate_transmission)
from .selftest import CheckResult, run_selftest
from .solver import (AoResult, SolverParams, SolveTrace, ao_solve,
                     default_params, homotopy_solve, lambda_threshold,
                     penalty_objective, project_simplex, spectral_norm)

__all__ = [
    "ALGORITHMS", "AlphaPair", "AoResult", "CheckResult",
    "DegenerateChannelError", "PrecodeOutcome", "PrecodeSolution",
    "ProblemInstance", "SectorFrame", "SolveTrace", "SolverParams",
    "SweepConfig", "SweepResult", "SweepRow", "TrialResult",
    "ao_solve", "blocks_to_complex", "boundary_vectors", "build_ci_matrix",
    "ci_objective", "complex_to_blocks", "count_gray_bit_errors",
    "decompose_alpha", "default_params", "detect_psk", "exhaustive_search",
    "gray_bits", "gray_index", "homotopy_solve", "hull_inradius", "in_hull",
    "is_qce_feasible", "lambda_threshold", "margin_from_objective",
    "min_alpha_margin", "msm_solve", "nearest_vertex", "penalized_projection",
    "penalty_objective", "precode_instance", "project_simplex",
    "psk_constellation", "qce_vertices", "quartic_diagnostics",
    "quartic_stationary_root", "rotate_to_sector", "run_selftest", "run_sweep",
    "run_trial", "sample_instance", "sigma2_for_snr", "simulate_transmission",
    "spectral_norm", "write_csv", "zf_precoder",
]
