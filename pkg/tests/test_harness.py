"""Monte-Carlo harness: trial plumbing, sweeps, determinism, CSV."""

import math

import numpy as np
import pytest

from qceprec import (SweepConfig, SweepResult, blocks_to_complex,
                     precode_instance, run_sweep, run_trial, sample_instance,
                     sigma2_for_snr, write_csv)
from qceprec.harness import (CSV_HEADER, draw_instance, format_csv,
                             resolve_workers)


def small_cfg(**overrides):
    base = dict(k=2, n=4, m_order=4, l_values=(4,), snr_db_values=(5.0,),
                trials=8, seed=99, algorithms=("proposed", "msm", "zf"),
                measure_time=False)
    base.update(overrides)
    return SweepConfig(**base)


# --- noise scale ---------------------------------------------------------------


def test_sigma2_for_snr():
    assert sigma2_for_snr(0.0, 1.0) == 1.0
    assert abs(sigma2_for_snr(10.0, 1.0) - 0.1) <= 1e-15
    assert abs(sigma2_for_snr(3.0, 2.0) - 2.0 * 10 ** -0.3) <= 1e-15
    assert sigma2_for_snr(math.inf, 1.0) == 0.0


# --- single-instance precoding ----------------------------------------------------


def test_precode_instance_proposed_contract():
    inst = sample_instance(2, 4, 4, 4, seed=7)
    out = precode_instance(inst, "proposed")
    assert out.algorithm == "proposed"
    assert out.feasible
    assert out.t.shape == (4,)
    scale = math.sqrt(inst.p_t / inst.n)
    assert np.allclose(out.t, scale * blocks_to_complex(out.x), atol=1e-12)
    assert abs(np.linalg.norm(out.t) ** 2 - inst.p_t) <= 1e-9
    assert out.margin == pytest.approx(-out.objective * math.sin(math.pi / 2))


def test_precode_instance_zf_contract():
    inst = sample_instance(2, 4, 4, 4, seed=7)
    out = precode_instance(inst, "zf")
    assert out.x is None
    assert abs(np.linalg.norm(out.t) ** 2 - inst.p_t) <= 1e-9
    assert out.margin > 0


def test_precode_instance_timing_flag():
    inst = sample_instance(2, 4, 4, 4, seed=7)
    assert precode_instance(inst, "msm", measure_time=False).solve_time_s == 0.0
    assert precode_instance(inst, "msm", measure_time=True).solve_time_s > 0.0


def test_precode_instance_rejects_unknown():
    inst = sample_instance(2, 4, 4, 4, seed=7)
    with pytest.raises(ValueError):
        precode_instance(inst, "genie")


# --- trial determinism -------------------------------------------------------------


def test_draw_instance_deterministic():
    cfg = small_cfg()
    a, ra = draw_instance(cfg, 4, trial=3)
    b, rb = draw_instance(cfg, 4, trial=3)
    assert np.array_equal(a.h, b.h)
    assert np.array_equal(a.symbol_indices, b.symbol_indices)
    assert ra == rb


def test_run_trial_deterministic():
    cfg = small_cfg()
    a = run_trial(cfg, 4, 5.0, trial=2)
    b = run_trial(cfg, 4, 5.0, trial=2)
    for algo in cfg.algorithms:
        assert a[algo].bit_errors == b[algo].bit_errors
        assert a[algo].bits == cfg.k * 2
        assert a[algo].margin == b[algo].margin


def test_trials_add_up():
    # sweep error counts are the sums of the individual trial counts
    cfg = small_cfg(trials=4)
    rows = run_sweep(cfg).rows
    per_trial = [run_trial(cfg, 4, 5.0, t) for t in range(4)]
    for row in rows:
        want = sum(tr[row.algorithm].bit_errors for tr in per_trial)
        assert row.bit_errors == want
        assert row.bits == 4 * cfg.k * 2


def test_single_trial_matches_run_trial():
    cfg = small_cfg(trials=1)
    row_by_algo = {r.algorithm: r for r in run_sweep(cfg).rows}
    direct = run_trial(cfg, 4, 5.0, 0)
    for algo, res in direct.items():
        assert row_by_algo[algo].bit_errors == res.bit_errors


# --- sweeps ---------------------------------------------------------------


def test_sweep_grid_shape():
    cfg = small_cfg(l_values=(4, 8), snr_db_values=(0.0, 5.0, 10.0), trials=2)
    result = run_sweep(cfg)
    assert len(result.rows) == 3 * 2 * 3  # algos x L x SNR
    keys = [(r.algorithm, r.l_levels, r.snr_db) for r in result.rows]
    assert keys == sorted(keys)


def test_sweep_noiseless_zero_forcing_is_error_free():
    cfg = small_cfg(algorithms=("zf",), snr_db_values=(math.inf,), trials=20)
    rows = run_sweep(cfg).rows
    assert len(rows) == 1
    assert rows[0].bit_errors == 0
    assert rows[0].ber == 0.0


def test_sweep_heavy_noise_approaches_coin_flip():
    # SNR -40 dB: detection is effectively random guessing
    cfg = small_cfg(algorithms=("zf",), snr_db_values=(-40.0,), trials=10000)
    row = run_sweep(cfg).rows[0]
    assert abs(row.ber - 0.5) <= 0.05


def test_sweep_parallel_matches_serial():
    cfg_serial = small_cfg(trials=16, workers=1)
    cfg_par = small_cfg(trials=16, workers=3)
    assert format_csv(run_sweep(cfg_serial)) == format_csv(run_sweep(cfg_par))


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        small_cfg(trials=0)
    with pytest.raises(ValueError):
        small_cfg(algorithms=("proposed", "oracle"))
    with pytest.raises(ValueError):
        small_cfg(algorithms=())
    with pytest.raises(ValueError):
        small_cfg(snr_db_values=())


def test_resolve_workers(monkeypatch):
    assert resolve_workers(3) == 3
    monkeypatch.setenv("QCE_THREADS", "5")
    assert resolve_workers() == 5
    monkeypatch.setenv("QCE_THREADS", "0")
    assert resolve_workers() >= 1
    monkeypatch.delenv("QCE_THREADS")
    assert resolve_workers() >= 1


# --- CSV ---------------------------------------------------------------


def test_csv_header_only_when_empty():
    text = format_csv(SweepResult(rows=[]))
    assert text == CSV_HEADER + "\n"
    assert CSV_HEADER == ("algorithm,K,N,M,L,snr_db,trials,bit_errors,bits,"
                          "ber,mean_margin,mean_time_ms,seed")


def test_csv_round_trip(tmp_path):
    cfg = small_cfg(trials=3, snr_db_values=(0.0, 7.5))
    result = run_sweep(cfg)
    path = tmp_path / "sweep.csv"
    write_csv(result, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(result.rows)
    for line, row in zip(lines[1:], result.rows):
        cells = line.split(",")
        assert cells[0] == row.algorithm
        assert [int(c) for c in (cells[1], cells[2], cells[3], cells[4])] == \
            [row.k, row.n, row.m_order, row.l_levels]
        assert float(cells[5]) == row.snr_db
        assert int(cells[6]) == row.trials
        assert int(cells[7]) == row.bit_errors
        assert int(cells[8]) == row.bits
        # %.10g keeps these exact at parse time
        assert float(cells[9]) == pytest.approx(row.ber, abs=1e-12)
        assert float(cells[10]) == pytest.approx(row.mean_margin, abs=1e-9)
        assert int(cells[12]) == row.seed


def test_csv_write_failure(tmp_path):
    result = SweepResult(rows=[])
    with pytest.raises(OSError):
        write_csv(result, str(tmp_path / "missing" / "out.csv"))
