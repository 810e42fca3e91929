"""凸优化分解: 冲激响应、线性算子、求解器与端到端分解"""
import itertools
from dataclasses import replace

import numpy as np
import pytest

from edaffect.core.errors import BadParams, NoConvergence, TooShort
from edaffect.core.model import DecomposedEda, EdaTrace
from edaffect.cvxeda import (
    BatemanIrf,
    CvxedaConfig,
    QpProblem,
    build_phasic_operator,
    build_tonic_basis,
    decompose,
    decompose_many,
    sample_irf,
)
from edaffect.cvxeda.irf import peak_time
from edaffect.synth import SynthSpec, gen_trace

QUICK = CvxedaConfig(max_iter=2000)


@pytest.fixture
def noisy_trace():
    trace, _ = gen_trace(SynthSpec(sampling_hz=4.0, duration_s=60.0, scr_rate_hz=0.2, seed=5))
    return trace


def test_irf_shape():
    h = sample_irf(BatemanIrf(), 4.0)
    assert h.shape == (161,)
    assert h[0] == 0.0
    assert h.max() == pytest.approx(1.0)
    assert np.all(h >= 0)

    fine = sample_irf(BatemanIrf(), 1000.0)
    assert np.argmax(fine) / 1000.0 == pytest.approx(peak_time(BatemanIrf()), abs=2e-3)


@pytest.mark.parametrize("kwargs", [
    {"tau0": 2.0, "tau1": 0.7},
    {"tau0": -1.0},
    {"duration": 5.0},
])
def test_irf_params_validated(kwargs):
    with pytest.raises(BadParams):
        BatemanIrf(**kwargs)


@pytest.mark.parametrize("method", ["direct", "fft"])
def test_operator_matches_dense_matrix(method):
    rng = np.random.default_rng(0)
    op = build_phasic_operator(sample_irf(BatemanIrf(), 2.0), 40, method)
    h = op.matrix()
    p = rng.normal(size=40)
    q = rng.normal(size=40)
    np.testing.assert_allclose(op.apply(p), h @ p, atol=1e-10)
    np.testing.assert_allclose(op.apply_t(q), h.T @ q, atol=1e-10)
    assert np.allclose(np.triu(h, 1), 0.0)


def test_tonic_basis_partition_of_unity():
    basis = build_tonic_basis(200, 4.0, 10.0)
    np.testing.assert_allclose(basis.b.sum(axis=1), 1.0, atol=1e-12)
    assert basis.c.shape == (200, 2)
    with pytest.raises(TooShort):
        build_tonic_basis(30, 4.0, 10.0)


def test_reconstruction_identity(noisy_trace):
    dec = decompose(noisy_trace, cfg=QUICK)
    np.testing.assert_allclose(dec.phasic + dec.tonic + dec.residual, dec.origin, atol=1e-12)
    assert np.all(dec.driver >= 0)
    assert dec.origin.shape == dec.driver.shape == (noisy_trace.n_samples,)


def test_constant_trace_has_no_phasic():
    trace = EdaTrace("s", "m", 4.0, np.full(400, 3.0))
    dec = decompose(trace, strict=True)
    np.testing.assert_array_equal(dec.phasic, np.zeros(400))
    np.testing.assert_array_equal(dec.driver, np.zeros(400))
    np.testing.assert_allclose(dec.tonic, 3.0, atol=1e-12)


def test_objective_is_monotone(noisy_trace):
    y = noisy_trace.samples - noisy_trace.samples.min()
    op = build_phasic_operator(sample_irf(BatemanIrf(), 4.0), y.shape[0])
    basis = build_tonic_basis(y.shape[0], 4.0, 10.0)
    sol = QpProblem(y, op, basis, QUICK).solve(strict=False)
    assert np.all(np.diff(sol.objective_trace) <= 1e-9)
    p, lam, d, trace = sol
    assert p.shape == (y.shape[0],) and trace is sol.objective_trace


def test_tiny_problem_beats_grid_search():
    """N=5 时在 6^5 个格点上穷举，求解器的目标值不应更差"""
    op = build_phasic_operator(sample_irf(BatemanIrf(), 1.0), 5)
    basis = build_tonic_basis(5, 1.0, 2.5)
    cfg = CvxedaConfig(alpha=1e-3, gamma=1e3, knot_spacing_s=2.5, solver_tol=1e-10, max_iter=100000)
    y = op.apply(np.eye(5)[0])
    problem = QpProblem(y, op, basis, cfg)
    sol = problem.solve(strict=False)

    lattice = np.arange(6) * 0.25
    grid_best = min(problem.reduced_objective(np.array(p)) for p in itertools.product(lattice, repeat=5))
    assert sol.objective <= grid_best + 1e-4
    assert int(np.argmax(sol.p)) == 0


def test_single_spike_is_localized():
    trace, truth = gen_trace(
        SynthSpec(sampling_hz=8.0, duration_s=60.0, noise_std=0.0, tonic_drift_per_s=0.0),
        spikes=[(20.0, 1.0)],
    )
    dec = decompose(trace, cfg=CvxedaConfig(max_iter=5000))
    assert abs(np.argmax(dec.driver) / 8.0 - 20.0) <= 0.5


def test_scaling_covariance(noisy_trace):
    """y → c·y 且 α → c·α 时，目标值按 c² 缩放"""
    c = 2.0
    y = noisy_trace.samples - noisy_trace.samples.min()
    op = build_phasic_operator(sample_irf(BatemanIrf(), 4.0), y.shape[0])
    basis = build_tonic_basis(y.shape[0], 4.0, 10.0)
    cfg = CvxedaConfig(solver_tol=1e-9, max_iter=5000)
    small = QpProblem(y, op, basis, cfg)
    big = QpProblem(c * y, op, basis, replace(cfg, alpha=c * cfg.alpha))

    p = np.abs(np.random.default_rng(1).normal(size=y.shape[0]))
    assert big.reduced_objective(c * p) == pytest.approx(c * c * small.reduced_objective(p), rel=1e-9)

    sol_small = small.solve(strict=False)
    sol_big = big.solve(strict=False)
    assert sol_big.objective == pytest.approx(c * c * sol_small.objective, rel=1e-4)


def test_strict_raises_with_best(noisy_trace):
    with pytest.raises(NoConvergence) as info:
        decompose(noisy_trace, cfg=CvxedaConfig(max_iter=1), strict=True)
    assert info.value.exit_code == 3
    assert isinstance(info.value.best, DecomposedEda)
    # 非严格模式返回同一个最优迭代点
    loose = decompose(noisy_trace, cfg=CvxedaConfig(max_iter=1))
    np.testing.assert_array_equal(loose.phasic, info.value.best.phasic)


def test_penalize_driver_variant(noisy_trace):
    dec = decompose(noisy_trace, cfg=replace(QUICK, penalize_driver=True))
    np.testing.assert_allclose(dec.phasic + dec.tonic + dec.residual, dec.origin, atol=1e-12)


def test_parallel_matches_sequential():
    traces = [gen_trace(SynthSpec(sampling_hz=4.0, duration_s=40.0, seed=s), stimulus_id=f"m{s}")[0]
              for s in range(4)]
    cfg = CvxedaConfig(max_iter=300)
    seq = decompose_many(traces, cfg=cfg, jobs=1)
    par = decompose_many(traces, cfg=cfg, jobs=3)
    for a, b in zip(seq, par):
        np.testing.assert_array_equal(a.driver, b.driver)


def _driver_peaks_s(driver: np.ndarray, fs: float) -> np.ndarray:
    padded = np.concatenate(([-np.inf], driver, [-np.inf]))
    mid = padded[1:-1]
    return np.flatnonzero((mid > 0) & (mid >= padded[:-2]) & (mid >= padded[2:])) / fs


@pytest.mark.slow
def test_synthetic_corpus_recovers_spikes():
    """50 条合成记录: 真实脉冲附近 ±0.5 s 内有驱动局部极大，残差不超过注入噪声的 2 倍"""
    low, high = [], []
    found = total = 0
    for seed in range(50):
        rate = 0.25 if seed % 2 else 0.05
        trace, truth = gen_trace(SynthSpec(sampling_hz=8.0, duration_s=60.0, scr_rate_hz=rate, seed=seed))
        dec = decompose(trace)
        np.testing.assert_allclose(dec.phasic + dec.tonic + dec.residual, dec.origin, atol=1e-12)
        assert dec.driver.min() >= 0.0
        noise_rms = np.sqrt(np.mean(truth.noise ** 2))
        assert np.sqrt(np.mean(dec.residual ** 2)) <= 2.0 * noise_rms

        peaks = _driver_peaks_s(dec.driver, trace.sampling_hz)
        for t in truth.spike_times_s:
            total += 1
            found += int(peaks.size > 0 and np.min(np.abs(peaks - t)) <= 0.5)
        (high if seed % 2 else low).append(dec.driver.sum())
    assert np.mean(high) > 1.5 * np.mean(low)
    assert total > 0 and found >= 0.9 * total
