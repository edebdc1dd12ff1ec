import numpy as np
import pytest

from phasesync.exceptions import InputError
from phasesync.psmetrics import Metric
from phasesync.simharness import (
    SimConfig,
    SimId,
    gen_null_pair,
    gen_ramp_pair,
    gen_sigmoid_pair,
    gen_two_state_group,
    phase_shift,
    run_replicate,
    run_simulation,
    summarize,
)
from phasesync.surrogates import make_rng


def test_null_pair_moments():
    cfg = SimConfig(sim_id="null")
    n = cfg.n_samples
    xs = [gen_null_pair(cfg, make_rng(0, k)) for k in range(200)]
    for x, y in xs[:20]:
        assert abs(x.mean()) < 4 / np.sqrt(n) and abs(y.mean()) < 4 / np.sqrt(n)
    r = np.mean([np.corrcoef(x, y)[0, 1] for x, y in xs])
    assert abs(r) < 4 / np.sqrt(n)
    a, b = gen_null_pair(cfg, make_rng(5, 1))
    c, d = gen_null_pair(cfg, make_rng(5, 1))
    assert np.array_equal(a, c) and np.array_equal(b, d)


def test_ramp_pair_noiseless():
    cfg = SimConfig(sim_id="ramp", noise_sd=0.0)
    x, y = gen_ramp_pair(cfg, make_rng(0))
    t = cfg.times_s
    before = t <= cfg.t0_seconds
    assert np.allclose(x[before], y[before])
    shift = phase_shift(cfg)
    assert shift[-1] == pytest.approx(4 * np.pi, abs=1e-12)
    assert np.all(shift[before] == 0)
    # where the shift passes through 2*pi the two cosines coincide again
    k = int(np.argmin(np.abs(shift - 2 * np.pi)))
    exact = cfg.replace(t0_seconds=t[-1] - 2 * (t[-1] - t[k]))
    xe, ye = gen_ramp_pair(exact, make_rng(0))
    assert phase_shift(exact)[k] == pytest.approx(2 * np.pi, abs=1e-12)
    assert ye[k] == pytest.approx(xe[k], abs=1e-9)


def test_raw_ramp_mode_unbounded():
    cfg = SimConfig(sim_id="ramp", ramp_mode="raw")
    assert phase_shift(cfg)[-1] == pytest.approx(4 * np.pi * (cfg.times_s[-1] - cfg.t0_seconds))


def test_sigmoid_shift():
    cfg = SimConfig(sim_id="sigmoid", noise_sd=0.0)
    shift = phase_shift(cfg)
    k0 = int(round(cfg.t0_seconds / cfg.tr_seconds))
    assert shift[k0] == pytest.approx(np.pi, abs=1e-15)
    assert np.all(np.diff(shift) > 0)
    far = cfg.replace(n_samples=5000)
    assert phase_shift(far)[-1] == pytest.approx(2 * np.pi, abs=1e-9)
    x, y = gen_sigmoid_pair(cfg, make_rng(0))
    assert y[k0] == pytest.approx(-x[k0], abs=1e-12)


def test_summarize_two_replicates():
    cell = summarize(np.array([[0.0], [1.0]]))
    assert cell.mean[0] == 0.5
    assert cell.sd[0] == pytest.approx(0.7071, abs=1e-4)
    assert cell.lower95[0] == pytest.approx(-0.886, abs=1e-3)
    assert cell.upper95[0] == pytest.approx(1.886, abs=1e-3)


def test_summarize_constant_and_missing():
    cell = summarize(np.array([[0.3, np.nan], [0.3, np.nan], [0.3, np.nan]]))
    assert cell.mean[0] == pytest.approx(0.3) and cell.upper95[0] == pytest.approx(cell.lower95[0])
    assert cell.n_valid.tolist() == [3, 0]
    assert cell.invalid.tolist() == [False, True]
    sem = summarize(np.array([[0.0], [1.0]]), band_mode="sem")
    assert sem.upper95[0] - sem.mean[0] == pytest.approx(1.959963984540054 * 0.70710678 / np.sqrt(2))


def test_summarize_coverage():
    stack = np.random.default_rng(0).standard_normal((400, 200))
    cell = summarize(stack)
    frac = ((stack >= cell.lower95) & (stack <= cell.upper95)).mean()
    assert 0.93 <= frac <= 0.97


def test_config_validation():
    with pytest.raises(InputError):
        SimConfig(t0_seconds=500).validate()
    with pytest.raises(InputError):
        SimConfig(n_realizations=0).validate()
    with pytest.raises(InputError):
        SimConfig(band=(0.03, 0.4)).validate()
    with pytest.raises(InputError):
        SimConfig(sim_id="sim9")
    assert SimConfig(sim_id="sim3").sim_id is SimId.SIGMOID


def test_cells_layout():
    cfg = SimConfig()
    assert len(cfg.cells) == 3 * 3 + 2
    assert (Metric.CRP, None) in cfg.cells


def test_replicate_shapes_and_determinism():
    cfg = SimConfig(sim_id="null", n_realizations=3)
    out, fails = run_replicate(cfg, 0)
    assert out[(Metric.PLV, 60)].shape == (151,)
    assert out[(Metric.CRP, None)].shape == (210,)
    again, _ = run_replicate(cfg, 0)
    for key in out:
        assert np.array_equal(out[key], again[key], equal_nan=True)


def test_run_simulation_deterministic(monkeypatch):
    cfg = SimConfig(sim_id="ramp", n_realizations=8, seed=3)
    monkeypatch.setenv("PHASESYNC_THREADS", "1")
    a = run_simulation(cfg)
    monkeypatch.setenv("PHASESYNC_THREADS", "4")
    b = run_simulation(cfg)
    for key in cfg.cells:
        assert np.array_equal(a.cells[key].mean, b.cells[key].mean)
        assert np.array_equal(a.cells[key].upper95, b.cells[key].upper95)
    assert a.cell("plv", 30).offset == 29
    assert np.all(a.cell("plv", 30).lower95 <= a.cell("plv", 30).mean)


def test_two_state_group():
    data, labels = gen_two_state_group(n_subjects=3, n_regions=6, n_samples=300)
    assert len(data) == 3 and data[0].values.shape == (6, 300)
    assert labels[0][0] == 0 and labels[1][0] == 1
    assert np.array_equal(labels[0][150:], np.ones(150, int))
