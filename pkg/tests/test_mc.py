"""Estimator harness: determinism, exclusion, and the gradient sampler."""

import numpy as np
import pytest

from plateau.linalg import HermitianObservable, UnitaryGate, pauli_string
from plateau.mc import CASE_NAMES, EnsembleSpec, EstimateResult, estimate, grad_variance_mps


def fields(r):
    return (
        r.mean,
        r.variance,
        r.stderr_mean,
        r.stderr_variance,
        r.samples,
        r.seed,
        r.excluded,
    )


def test_constant_sampler():
    r = estimate(lambda i, rng: 2.5, samples=500, seed=0)
    assert r.mean == 2.5
    assert r.variance == 0.0
    assert r.stderr_mean == 0.0
    assert r.excluded == 0
    assert r.samples == 500


def test_worker_count_does_not_change_bits():
    def sampler(i, rng):
        return rng.standard_normal() + 0.01 * i

    base = estimate(sampler, samples=3000, seed=42, workers=1)
    for workers in (2, 3, 8):
        r = estimate(sampler, samples=3000, seed=42, workers=workers)
        assert fields(r) == fields(base)


def test_mean_and_variance_of_gaussian():
    r = estimate(lambda i, rng: rng.normal(loc=1.0), samples=40_000, seed=3)
    assert abs(r.mean - 1.0) <= 4.0 * r.stderr_mean
    assert abs(r.variance - 1.0) <= 4.0 * r.stderr_variance
    assert r.stderr_mean == pytest.approx(np.sqrt(r.variance / r.samples))
    # jackknife error of the variance should sit near sqrt(2/n) for normals
    theory = np.sqrt(2.0 / 40_000)
    assert 0.5 * theory < r.stderr_variance < 2.0 * theory


def test_stderr_shrinks_with_samples():
    small = estimate(lambda i, rng: rng.normal(), samples=2000, seed=5)
    large = estimate(lambda i, rng: rng.normal(), samples=200_000, seed=5)
    ratio = small.stderr_mean / large.stderr_mean
    assert 7.0 < ratio < 14.0  # 10x expected


def test_nan_samples_are_excluded():
    def sampler(i, rng):
        return float("nan") if i % 10 == 0 else float(i)

    r = estimate(sampler, samples=100, seed=0)
    kept = [float(i) for i in range(100) if i % 10 != 0]
    assert r.excluded == 10
    assert r.mean == pytest.approx(np.mean(kept))
    assert r.variance == pytest.approx(np.var(kept, ddof=1))


def test_sample_index_stream_is_stable():
    # the per-index generator must not depend on the total sample count
    seen = {}

    def recorder(i, rng):
        v = rng.standard_normal()
        if i in seen:
            assert seen[i] == v
        seen[i] = v
        return v

    estimate(recorder, samples=50, seed=9)
    estimate(recorder, samples=80, seed=9)


def test_estimate_validation():
    with pytest.raises(ValueError):
        estimate(lambda i, rng: 0.0, samples=1, seed=0)
    with pytest.raises(ValueError):
        estimate(lambda i, rng: 0.0, samples=100, seed=0, workers=0)


def test_ensemble_spec_draws():
    haar = EnsembleSpec.haar(4)
    u = haar.draw(np.random.default_rng(0))
    assert np.allclose(u.conj().T @ u, np.eye(4))
    g = UnitaryGate(np.diag([1.0, 1j]))
    fixed = EnsembleSpec.fixed(g)
    assert np.array_equal(fixed.draw(np.random.default_rng(1)), g.matrix)
    with pytest.raises(ValueError):
        EnsembleSpec(kind="bogus", dim=2)
    with pytest.raises(ValueError):
        EnsembleSpec(kind="fixed", dim=2, gate=None)


def test_pauli_group_is_exact_one_design():
    # averaging P x P+ over shift-clock labels erases everything but the trace
    d = 2
    spec = EnsembleSpec.pauli_group(d)
    omega = np.exp(2j * np.pi / d)
    rng = np.random.default_rng(14)
    x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    acc = np.zeros((d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            p = np.roll(np.eye(d), a, axis=0) * omega ** (b * np.arange(d))
            acc += p @ x @ p.conj().T
    assert np.allclose(acc / d**2, np.trace(x) / d * np.eye(d), atol=1e-12)
    drawn = spec.draw(np.random.default_rng(2))
    assert np.allclose(drawn.conj().T @ drawn, np.eye(d))


def test_grad_variance_zero_mean_onsite():
    o = HermitianObservable(pauli_string("Z"))
    g = HermitianObservable(pauli_string("ZI"))
    r = grad_variance_mps(
        "onsite-both", n=3, D=2, d=2, delta=None, o_builder=lambda rng: o.matrix, g=g,
        samples=4000, seed=10,
    )
    assert abs(r.mean) <= 3.0 * r.stderr_mean
    assert r.variance > 0.0


def test_grad_variance_accepts_all_cases():
    o = HermitianObservable(pauli_string("Z"))
    g = HermitianObservable(pauli_string("ZI"))
    for case in CASE_NAMES:
        delta = 1 if case.startswith("offsite") else None
        r = grad_variance_mps(
            case, n=3, D=2, d=2, delta=delta, o_builder=lambda rng: o.matrix, g=g,
            samples=200, seed=0,
        )
        assert np.isfinite(r.variance)


def test_grad_variance_worker_determinism():
    o = HermitianObservable(pauli_string("Z"))
    g = HermitianObservable(pauli_string("ZI"))
    kw = dict(n=3, D=2, d=2, delta=None, o_builder=lambda rng: o.matrix, g=g,
              samples=1500, seed=21)
    a = grad_variance_mps("onsite-both", **kw, workers=1)
    b = grad_variance_mps("onsite-both", **kw, workers=4)
    assert fields(a) == fields(b)


def test_grad_variance_rejects_unknown_case():
    o = HermitianObservable(pauli_string("Z"))
    g = HermitianObservable(pauli_string("ZI"))
    with pytest.raises(ValueError):
        grad_variance_mps("sideways", n=3, D=2, d=2, delta=None,
                          o_builder=lambda rng: o.matrix, g=g, samples=100, seed=0)
    with pytest.raises(ValueError):
        grad_variance_mps("offsite-both", n=3, D=2, d=2, delta=None,
                          o_builder=lambda rng: o.matrix, g=g, samples=100, seed=0)


def test_estimate_result_validation():
    with pytest.raises(ValueError):
        EstimateResult(0.0, -1.0, 0.0, 0.0, 10, 0)
