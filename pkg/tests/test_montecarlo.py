import numpy as np
import pytest

from mppcsim import (
    DetectorParams,
    SimulationConfig,
    SourceSpec,
    build_povm,
    g2_cross_from_joint,
    mean_counts_per_pulse,
    nrf_from_joint,
    photocount_moment,
    pmf_coherent,
    simulate_independent,
    simulate_single,
    simulate_twin,
    sweep,
)
from mppcsim.histograms import SweepSeries
from mppcsim.montecarlo import CHUNK


def single_cfg(**kw):
    base = dict(
        source=SourceSpec("coherent", mean=1.0),
        detector_s=DetectorParams(eta=0.5, p_xt=0.1, n_max=10),
        trials=50_000,
        seed=11,
    )
    base.update(kw)
    return SimulationConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        single_cfg(trials=0)
    with pytest.raises(ValueError):
        single_cfg(seed=-1)
    with pytest.raises(ValueError):
        single_cfg(crosstalk_mode="other")
    with pytest.raises(ValueError):
        SimulationConfig(
            source=SourceSpec("twin_thermal", mean=1.0),
            detector_s=DetectorParams(eta=1.0),
            trials=10,
        )


def test_deterministic_repeat():
    a = simulate_single(single_cfg(trials=2 * CHUNK + 177))
    b = simulate_single(single_cfg(trials=2 * CHUNK + 177))
    assert np.array_equal(a.counts, b.counts)


def test_chunk_streams_are_order_independent():
    # the first chunk's draws do not depend on how many trials follow
    long = simulate_single(single_cfg(trials=CHUNK + 500))
    short = simulate_single(single_cfg(trials=CHUNK))
    tail = simulate_single(single_cfg(trials=CHUNK + 500)).counts - short.counts
    assert np.all(tail >= 0)
    assert tail.sum() == 500
    assert long.counts.sum() == CHUNK + 500


def test_fock_deterministic_channel():
    cfg = single_cfg(
        source=SourceSpec("fock", fock_n=2),
        detector_s=DetectorParams(eta=1.0, p_xt=0.0, n_max=5),
        trials=1000,
    )
    hist = simulate_single(cfg)
    assert hist.counts[2] == 1000


def test_dark_and_source_off_gives_vacuum():
    cfg = single_cfg(
        source=SourceSpec("coherent", mean=0.0),
        detector_s=DetectorParams(eta=1.0, p_xt=0.2, n_max=5, dark_mean=0.0),
        trials=5000,
    )
    assert simulate_single(cfg).counts[0] == 5000


def test_totals_and_saturation():
    cfg = single_cfg(
        source=SourceSpec("coherent", mean=6.0),
        detector_s=DetectorParams(eta=0.9, p_xt=0.2, n_max=4),
        trials=30_000,
    )
    hist = simulate_single(cfg)
    assert hist.counts.sum() == cfg.trials
    assert hist.counts.size == 5  # nothing beyond n_max


def test_mean_against_moment_operator():
    dist = pmf_coherent(3.0)
    params = DetectorParams(eta=0.5, p_xt=0.1, n_max=10)
    cfg = single_cfg(
        source=SourceSpec("coherent", mean=3.0), detector_s=params, trials=200_000
    )
    hist = simulate_single(cfg)
    mean = mean_counts_per_pulse(hist)
    truth = photocount_moment(dist, params, 1)
    m2 = photocount_moment(dist, params, 2)
    se = np.sqrt((m2 - truth**2) / cfg.trials)
    assert abs(mean - truth) < 4 * se


def test_binomial_mode_matches_povm_column():
    params = DetectorParams(eta=0.5, p_xt=0.3, n_max=8)
    cfg = single_cfg(
        source=SourceSpec("fock", fock_n=3),
        detector_s=params,
        trials=200_000,
        seed=21,
    )
    hist = simulate_single(cfg)
    freq = hist.counts / cfg.trials
    column = build_povm(params, 3).q[:, 3]
    se = np.sqrt(np.maximum(column * (1 - column), 1e-12) / cfg.trials)
    assert np.all(np.abs(freq - column) <= 5 * se + 1e-9)


def test_cascade_exceeds_binomial_by_p_squared():
    p = 0.1
    trials = 2_000_000
    params = DetectorParams(eta=1.0, p_xt=p, n_max=50)
    src = SourceSpec("fock", fock_n=1)
    mean_b = mean_counts_per_pulse(
        simulate_single(single_cfg(source=src, detector_s=params, trials=trials))
    )
    mean_c = mean_counts_per_pulse(
        simulate_single(
            single_cfg(
                source=src,
                detector_s=params,
                trials=trials,
                crosstalk_mode="cascade",
            )
        )
    )
    diff = mean_c - mean_b
    assert 0.5 * p**2 <= diff <= 2 * p**2


def test_twin_requires_twin_source():
    with pytest.raises(ValueError):
        simulate_twin(single_cfg())
    with pytest.raises(ValueError):
        simulate_independent(
            SimulationConfig(
                source=SourceSpec("twin_thermal", mean=1.0),
                detector_s=DetectorParams(eta=1.0),
                detector_i=DetectorParams(eta=1.0),
                trials=10,
            )
        )
    with pytest.raises(ValueError):
        simulate_single(
            SimulationConfig(
                source=SourceSpec("twin_thermal", mean=1.0),
                detector_s=DetectorParams(eta=1.0),
                detector_i=DetectorParams(eta=1.0),
                trials=10,
            )
        )


def test_twin_fock_pair_perfectly_correlated():
    cfg = SimulationConfig(
        source=SourceSpec("fock", fock_n=1),
        detector_s=DetectorParams(eta=1.0, p_xt=0.0, n_max=3),
        detector_i=DetectorParams(eta=1.0, p_xt=0.0, n_max=3),
        trials=2000,
        seed=3,
    )
    joint = simulate_twin(cfg)
    assert joint.counts[1, 1] == 2000
    assert nrf_from_joint(joint, seed=0).value == 0.0


def test_twin_thermal_nrf_near_model_limit():
    params = DetectorParams(eta=0.163, p_xt=0.28, n_max=3)
    cfg = SimulationConfig(
        source=SourceSpec("twin_thermal", mean=0.05),
        detector_s=params,
        detector_i=params,
        trials=400_000,
        seed=17,
    )
    joint = simulate_twin(cfg)
    est = nrf_from_joint(joint)
    from mppcsim import joint_photocount, nrf_analytic, pmf_thermal

    truth = nrf_analytic(joint_photocount(pmf_thermal(0.05), params, params))
    assert abs(est.value - truth) < 4 * est.std_err


def test_independent_arms_cross_g2_is_flat():
    params = DetectorParams(eta=0.3, p_xt=0.28, n_max=10)
    cfg = SimulationConfig(
        source=SourceSpec("coherent", mean=2.0),
        detector_s=params,
        detector_i=params,
        trials=300_000,
        seed=29,
    )
    est = g2_cross_from_joint(simulate_independent(cfg))
    assert abs(est.value - 1.0) < 4 * est.std_err


def test_sweep_single_arm_returns_series():
    cfg = single_cfg(trials=20_000)
    series = sweep(cfg, [0.2, 0.5, 1.0, 2.0])
    assert isinstance(series, SweepSeries)
    assert series.points.shape == (4, 3)
    assert np.all(np.diff(series.n_total) > 0)
    again = sweep(cfg, [0.2, 0.5, 1.0, 2.0])
    assert np.array_equal(series.points, again.points)


def test_sweep_twin_returns_joint_list():
    cfg = SimulationConfig(
        source=SourceSpec("twin_thermal", mean=1.0),
        detector_s=DetectorParams(eta=0.5, p_xt=0.1, n_max=5),
        detector_i=DetectorParams(eta=0.5, p_xt=0.1, n_max=5),
        trials=5000,
        seed=5,
    )
    out = sweep(cfg, [0.1, 0.5, 1.0])
    assert len(out) == 3
    assert all(j.counts.sum() == 5000 for j in out)


def test_sweep_grid_validation():
    cfg = single_cfg(trials=100)
    with pytest.raises(ValueError):
        sweep(cfg, [])
    with pytest.raises(ValueError):
        sweep(cfg, [0.1, 0.2])
    with pytest.raises(ValueError):
        sweep(cfg, [0.1, -0.2, 0.3])


def test_event_stream_csv(tmp_path):
    from mppcsim.montecarlo import read_events

    path = tmp_path / "events.csv"
    cfg = single_cfg(trials=500)
    hist = simulate_single(cfg, events_path=str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "pulse,counts_s,counts_i"
    assert len(lines) == 501
    events = read_events(path)
    assert [e.pulse_index for e in events] == list(range(500))
    assert all(e.counts_i is None for e in events)
    recorded = [e.counts_s for e in events]
    assert max(recorded) <= cfg.detector_s.n_max
    assert np.array_equal(
        np.bincount(recorded, minlength=hist.counts.size), hist.counts
    )


def test_event_stream_twin(tmp_path):
    from mppcsim.montecarlo import read_events

    path = tmp_path / "events.csv"
    cfg = SimulationConfig(
        source=SourceSpec("twin_thermal", mean=0.8),
        detector_s=DetectorParams(eta=0.7, p_xt=0.1, n_max=4),
        detector_i=DetectorParams(eta=0.7, p_xt=0.1, n_max=4),
        trials=300,
        seed=8,
    )
    joint = simulate_twin(cfg, events_path=str(path))
    events = read_events(path)
    assert len(events) == 300
    rebuilt = np.zeros_like(joint.counts)
    for e in events:
        rebuilt[e.counts_s, e.counts_i] += 1
    assert np.array_equal(rebuilt, joint.counts)


def test_meta_carries_run_parameters():
    hist = simulate_single(single_cfg(trials=1000))
    assert hist.meta["source"] == "coherent"
    assert hist.meta["seed"] == 11
    assert hist.meta["xt_mode"] == "binomial"
