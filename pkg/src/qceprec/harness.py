"""Monte-Carlo BER experiments: per-trial pipeline, SNR and quantization-level
sweeps, and CSV emission.

Randomness is split into named streams off one master seed:

    instance stream  SeedSequence([seed, 1, trial, resample])
    noise stream     SeedSequence([seed, 2, trial])

The instance stream does not depend on L or SNR and one unit-variance noise
draw per trial is rescaled per SNR point, so every algorithm and every grid
point of a sweep sees common random numbers and a precoder solve is shared
across the whole SNR axis. Trials are embarrassingly parallel; aggregation
always runs in trial order, which keeps parallel and serial sweeps
byte-identical.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import DegenerateChannelError, msm_solve, zf_precoder
from .ci import (blocks_to_complex, build_ci_matrix, ci_objective,
                 margin_from_objective, min_alpha_margin)
from .model import (ProblemInstance, check_order, count_gray_bit_errors,
                    detect_psk, sample_instance)
from .solver import default_params, homotopy_solve

ALGORITHMS = ("proposed", "msm", "zf")

_STREAM_INSTANCE = 1
_STREAM_NOISE = 2
_MAX_RESAMPLES = 50

CSV_HEADER = ("algorithm,K,N,M,L,snr_db,trials,bit_errors,bits,ber,"
              "mean_margin,mean_time_ms,seed")


@dataclass
class SweepConfig:
    k: int
    n: int
    m_order: int
    l_values: tuple[int, ...]
    snr_db_values: tuple[float, ...]
    trials: int
    seed: int
    algorithms: tuple[str, ...] = ALGORITHMS
    p_t: float = 1.0
    params_overrides: dict | None = None
    measure_time: bool = True
    workers: int | None = None
    out: str | None = None

    def __post_init__(self) -> None:
        self.l_values = tuple(int(l) for l in self.l_values)
        self.snr_db_values = tuple(float(s) for s in self.snr_db_values)
        self.algorithms = tuple(self.algorithms)
        check_order(self.m_order, "m_order")
        for l in self.l_values:
            check_order(l, "l_levels")
        if not self.l_values or not self.snr_db_values:
            raise ValueError("need at least one L and one SNR value")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k < 1 or self.n < 1:
            raise ValueError("k and n must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms: {sorted(unknown)}")
        if not self.algorithms:
            raise ValueError("need at least one algorithm")


@dataclass
class PrecodeOutcome:
    """One precoder run on one instance, in transmit-ready form."""

    algorithm: str
    t: np.ndarray
    x: np.ndarray | None
    feasible: bool
    objective: float
    margin: float
    iterations: int
    outer_iterations: int | None
    final_lambda: float | None
    solve_time_s: float


@dataclass
class TrialResult:
    bit_errors: int
    bits: int
    margin: float
    solve_time_s: float


@dataclass
class SweepRow:
    algorithm: str
    k: int
    n: int
    m_order: int
    l_levels: int
    snr_db: float
    trials: int
    bit_errors: int
    bits: int
    ber: float
    mean_margin: float
    mean_time_ms: float
    seed: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    diagnostics: dict[str, int] = field(default_factory=dict)


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit request, else QCE_THREADS (0 = auto), else CPUs."""
    if requested is None:
        env = os.environ.get("QCE_THREADS", "").strip()
        requested = int(env) if env else 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    return max(1, requested)


def sigma2_for_snr(snr_db: float, p_t: float) -> float:
    """Noise variance for SNR_dB = 10 log10(P_T / sigma^2)."""
    return p_t * 10.0 ** (-snr_db / 10.0)


def precode_instance(instance: ProblemInstance, algorithm: str = "proposed",
                     overrides: dict | None = None,
                     measure_time: bool = True) -> PrecodeOutcome:
    """Run one precoder and report the transmit vector plus its margin."""
    m_order = instance.m_order
    if algorithm in ("proposed", "msm"):
        a = build_ci_matrix(instance)
        params = default_params(a, m_order)
        if overrides:
            params = params.replace(**overrides)
        t0 = time.perf_counter()
        if algorithm == "proposed":
            x, trace = homotopy_solve(a, instance.l_levels, params)
            dt = time.perf_counter() - t0
            obj, _ = ci_objective(a, x)
            outcome = PrecodeOutcome(
                algorithm=algorithm,
                t=math.sqrt(instance.p_t / instance.n) * blocks_to_complex(x),
                x=x, feasible=trace.feasible, objective=obj,
                margin=margin_from_objective(obj, m_order),
                iterations=sum(trace.inner_iterations),
                outer_iterations=trace.outer_iterations,
                final_lambda=trace.final_lambda,
                solve_time_s=dt if measure_time else 0.0)
        else:
            sol = msm_solve(a, instance.l_levels, params, m_order)
            dt = time.perf_counter() - t0
            outcome = PrecodeOutcome(
                algorithm=algorithm,
                t=math.sqrt(instance.p_t / instance.n) * blocks_to_complex(sol.x),
                x=sol.x, feasible=sol.feasible, objective=sol.objective,
                margin=sol.margin, iterations=sol.iterations,
                outer_iterations=None, final_lambda=None,
                solve_time_s=dt if measure_time else 0.0)
        return outcome
    if algorithm == "zf":
        t0 = time.perf_counter()
        t = zf_precoder(instance.h, instance.symbols, instance.p_t)
        dt = time.perf_counter() - t0
        margin = min_alpha_margin(instance.h @ t, instance.symbols, m_order)
        return PrecodeOutcome(
            algorithm=algorithm, t=t, x=None, feasible=False,
            objective=-margin / math.sin(2.0 * math.pi / m_order),
            margin=margin, iterations=0, outer_iterations=None,
            final_lambda=None, solve_time_s=dt if measure_time else 0.0)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def draw_instance(cfg: SweepConfig, l_levels: int, trial: int):
    """Instance for one trial, resampling the rare near-singular channels.

    The degeneracy test does not depend on the requested algorithm set, so
    the instance stream is identical whether or not zero forcing runs.
    Returns (instance, resample count).
    """
    for resample in range(_MAX_RESAMPLES):
        ss = np.random.SeedSequence([cfg.seed, _STREAM_INSTANCE, trial, resample])
        inst = sample_instance(cfg.k, cfg.n, cfg.m_order, l_levels, cfg.p_t, ss)
        gram = inst.h @ inst.h.conj().T
        cond = np.linalg.cond(gram)
        if np.isfinite(cond) and cond <= 1e12:
            return inst, resample
    raise DegenerateChannelError(
        f"gave up after {_MAX_RESAMPLES} degenerate channel draws")


def _unit_noise(cfg: SweepConfig, trial: int) -> np.ndarray:
    rng = np.random.default_rng(
        np.random.SeedSequence([cfg.seed, _STREAM_NOISE, trial]))
    z = rng.standard_normal((cfg.k, 2))
    return math.sqrt(0.5) * (z[:, 0] + 1j * z[:, 1])


def _trial_multi(cfg: SweepConfig, l_levels: int, snrs, trial: int):
    """All algorithms and SNR points for one trial.

    Returns (per-algorithm dict of (errors-per-snr, margin, time, zeros),
    resample count). The precoder runs once per algorithm; noise is one unit
    draw rescaled per SNR point.
    """
    inst, resamples = draw_instance(cfg, l_levels, trial)
    noise = _unit_noise(cfg, trial)
    true_idx = inst.symbol_indices
    out = {}
    for algo in cfg.algorithms:
        sol = precode_instance(inst, algo, cfg.params_overrides, cfg.measure_time)
        received0 = inst.h @ sol.t
        errors = np.empty(len(snrs), dtype=np.int64)
        zeros = 0
        for i, snr in enumerate(snrs):
            sigma2 = sigma2_for_snr(snr, cfg.p_t)
            received = received0 + math.sqrt(sigma2) * noise
            det = detect_psk(received, cfg.m_order)
            errors[i] = count_gray_bit_errors(det, true_idx)
            zeros += int(np.count_nonzero(received == 0))
        out[algo] = (errors, sol.margin, sol.solve_time_s, zeros)
    return out, resamples


def run_trial(cfg: SweepConfig, l_levels: int, snr_db: float,
              trial: int) -> dict[str, TrialResult]:
    """One grid point of a sweep for one trial index."""
    per_algo, _ = _trial_multi(cfg, l_levels, [float(snr_db)], trial)
    bits = cfg.k * (cfg.m_order.bit_length() - 1)
    return {algo: TrialResult(bit_errors=int(errors[0]), bits=bits,
                              margin=margin, solve_time_s=dt)
            for algo, (errors, margin, dt, _) in per_algo.items()}


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Aggregate all (algorithm, L, SNR) cells of the configured grid.

    Trials may fan out across QCE_THREADS workers; the reduction is a sum of
    integer counts plus means taken in trial order, so the result does not
    depend on scheduling.
    """
    workers = resolve_workers(cfg.workers)
    snrs = list(cfg.snr_db_values)
    bits_per_trial = cfg.k * (cfg.m_order.bit_length() - 1)
    rows: list[SweepRow] = []
    diagnostics = {"resamples": 0, "zero_detections": 0}
    for l_levels in cfg.l_values:
        results = [None] * cfg.trials
        if workers > 1 and cfg.trials > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for trial, res in enumerate(
                        pool.map(lambda tr: _trial_multi(cfg, l_levels, snrs, tr),
                                 range(cfg.trials))):
                    results[trial] = res
        else:
            for trial in range(cfg.trials):
                results[trial] = _trial_multi(cfg, l_levels, snrs, trial)
        diagnostics["resamples"] += sum(res[1] for res in results)
        for algo in cfg.algorithms:
            errors = np.zeros(len(snrs), dtype=np.int64)
            margin_sum = 0.0
            time_sum = 0.0
            for per_algo, _ in results:
                errs, margin, dt, zeros = per_algo[algo]
                errors += errs
                margin_sum += margin
                time_sum += dt
                diagnostics["zero_detections"] += zeros
            bits = bits_per_trial * cfg.trials
            for i, snr in enumerate(snrs):
                rows.append(SweepRow(
                    algorithm=algo, k=cfg.k, n=cfg.n, m_order=cfg.m_order,
                    l_levels=l_levels, snr_db=snr, trials=cfg.trials,
                    bit_errors=int(errors[i]), bits=bits,
                    ber=errors[i] / bits,
                    mean_margin=margin_sum / cfg.trials,
                    mean_time_ms=(time_sum / cfg.trials) * 1e3,
                    seed=cfg.seed))
    rows.sort(key=lambda r: (r.algorithm, r.l_levels, r.snr_db))
    return SweepResult(rows=rows, diagnostics=diagnostics)


def _fmt(value: float) -> str:
    return "%.10g" % value


def format_csv(result: SweepResult) -> str:
    """Sweep rows as CSV text, sorted by (algorithm, L, snr), floats %.10g."""
    rows = sorted(result.rows, key=lambda r: (r.algorithm, r.l_levels, r.snr_db))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            r.algorithm, str(r.k), str(r.n), str(r.m_order), str(r.l_levels),
            _fmt(r.snr_db), str(r.trials), str(r.bit_errors), str(r.bits),
            _fmt(r.ber), _fmt(r.mean_margin), _fmt(r.mean_time_ms),
            str(r.seed)]))
    return "\n".join(lines) + "\n"


def write_csv(result: SweepResult, path: str) -> None:
    """Emit the sweep as UTF-8 CSV."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(result))
    except OSError as exc:
        raise OSError(f"could not write sweep CSV to {path!r}: {exc}") from exc
