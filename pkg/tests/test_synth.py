"""合成语料生成与写出"""
import numpy as np
import pytest

from edaffect.core.errors import BadSpec
from edaffect.core.io import read_annotations_csv, read_eda_csv, read_stimulus_csv
from edaffect.cvxeda import BatemanIrf, sample_irf
from edaffect.pipeline import relabel_all
from edaffect.synth import SynthPlan, SynthSpec, gen_dataset, gen_from_plan, gen_trace, write_synth_corpus

SHORT = SynthSpec(sampling_hz=4.0, duration_s=30.0)


def test_quiet_trace_is_tonic_ramp():
    spec = SynthSpec(scr_rate_hz=0.0, noise_std=0.0, tonic_level=1.5, tonic_drift_per_s=0.01)
    trace, truth = gen_trace(spec, gain=2.0)
    t = np.arange(spec.n_samples) / spec.sampling_hz
    np.testing.assert_array_equal(trace.samples, 2.0 * (1.5 + 0.01 * t))
    assert truth.spike_times_s == ()
    np.testing.assert_array_equal(truth.true_phasic, np.zeros(spec.n_samples))


def test_single_spike_is_scaled_irf():
    spec = SynthSpec(sampling_hz=8.0, duration_s=60.0, noise_std=0.0, tonic_drift_per_s=0.0)
    trace, truth = gen_trace(spec, spikes=[(10.0, 0.5)])
    h = sample_irf(BatemanIrf(), 8.0)
    phasic = trace.samples - spec.tonic_level
    np.testing.assert_allclose(phasic[:80], 0.0, atol=1e-12)
    np.testing.assert_allclose(phasic[80:80 + h.size], 0.5 * h, atol=1e-12)
    assert truth.spike_times_s == (10.0,)
    assert truth.driver[80] == 0.5


def test_trace_is_sum_of_truth():
    trace, truth = gen_trace(SynthSpec(seed=3))
    np.testing.assert_allclose(trace.samples, truth.true_phasic + truth.true_tonic + truth.noise,
                               atol=1e-12)


def test_noise_is_absolute():
    spec = SynthSpec(seed=6, duration_s=600.0)
    _, low = gen_trace(spec, gain=1.0)
    _, high = gen_trace(spec, gain=3.0)
    np.testing.assert_array_equal(low.noise, high.noise)
    assert np.std(low.noise) == pytest.approx(spec.noise_std, rel=0.1)


def test_dataset_is_deterministic():
    a = gen_dataset(10, 4, SHORT, SHORT, music_dim=2, seed=9)
    b = gen_dataset(10, 4, SHORT, SHORT, music_dim=2, seed=9)
    c = gen_dataset(10, 4, SHORT, SHORT, music_dim=2, seed=10)
    for x, y in zip(a.traces, b.traces):
        np.testing.assert_array_equal(x.samples, y.samples)
    assert a.annotations == b.annotations
    assert not np.array_equal(a.traces[0].samples, c.traces[0].samples)


def test_dataset_layout():
    data = gen_dataset(10, 4, SHORT, SHORT, music_dim=6, seed=1)
    assert len(data.traces) == 40
    assert len(data.stimuli) == 4 and all(s.dim == 6 for s in data.stimuli)
    assert data.classes == {"stim000": 0, "stim001": 1, "stim002": 0, "stim003": 1}
    assert all(0.5 <= g <= 2.0 for g in data.gains.values())
    assert all(1.0 <= r.valence <= 9.0 for r in data.annotations)


def test_relabel_recovers_classes():
    data = gen_dataset(10, 6, SHORT, SHORT, music_dim=0, seed=2)
    labels = relabel_all(data.annotations)
    for (subject, stimulus), lab in labels.items():
        assert lab.arousal_class == data.classes[stimulus]
        assert lab.valence_class == data.classes[stimulus]


@pytest.mark.parametrize("kwargs", [
    {"duration_s": 5.0, "sampling_hz": 4.0},
    {"scr_rate_hz": -0.1},
    {"scr_amp_range": (1.0, 0.5)},
    {"sampling_hz": 0.0},
])
def test_bad_spec(kwargs):
    with pytest.raises(BadSpec):
        SynthSpec(**kwargs)


def test_bad_plan():
    with pytest.raises(BadSpec):
        SynthPlan(n_subjects=5)
    with pytest.raises(BadSpec):
        SynthPlan(low=SynthSpec(sampling_hz=4.0), high=SynthSpec(sampling_hz=8.0))


def test_write_corpus(tmp_path):
    plan = SynthPlan(n_subjects=10, traces_per_subject=2, music_dim=3, seed=4, low=SHORT,
                     high=SynthSpec(sampling_hz=4.0, duration_s=30.0, scr_rate_hz=0.25))
    data = gen_from_plan(plan)
    paths = write_synth_corpus(data, tmp_path)
    traces = read_eda_csv(paths["eda"])
    assert [t.key for t in traces] == [t.key for t in data.traces]
    np.testing.assert_array_equal(traces[5].samples, data.traces[5].samples)
    assert read_annotations_csv(paths["annotations"]) == data.annotations
    assert len(read_stimulus_csv(paths["music"])) == 2
    assert len(list(paths["truth"].glob("*.csv"))) == 20
