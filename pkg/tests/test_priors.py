import math

import numpy as np
import pytest

from relay_truth.priors import (
    BLOCK_SIZE,
    EstimationError,
    McConfig,
    Prior,
    expect,
    sample_reports,
)

H3 = 1.0 + 1.0 / 2.0 + 1.0 / 3.0  # E[max of 3 Exp(1)]


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(samples=0)
    with pytest.raises(ValueError):
        McConfig(workers=0)
    with pytest.raises(ValueError):
        Prior(kind="normal")
    with pytest.raises(ValueError):
        Prior(kind="point_mass")


def test_sample_shapes_and_empty():
    cfg = McConfig(samples=1000, seed=1)
    draws = sample_reports(Prior.exponential(), 3, cfg)
    assert draws.shape == (1000, 3)
    assert sample_reports(Prior.exponential(), 0, cfg).shape == (1000, 0)


def test_reproducibility_bit_identical():
    cfg = McConfig(samples=BLOCK_SIZE + 17, seed=42, stream_id=3)
    a = sample_reports(Prior.exponential(), 2, cfg)
    b = sample_reports(Prior.exponential(), 2, cfg)
    assert np.array_equal(a, b)
    other = McConfig(samples=BLOCK_SIZE + 17, seed=42, stream_id=4)
    assert not np.array_equal(a, sample_reports(Prior.exponential(), 2, other))


def test_exponential_moments():
    cfg = McConfig(samples=10**6, seed=7)
    draws = sample_reports(Prior.exponential(), 2, cfg)
    means = draws.mean(axis=0)
    assert np.all((means > 0.997) & (means < 1.003))
    frac_above_median = (draws[:, 0] > math.log(2)).mean()
    assert frac_above_median == pytest.approx(0.5, abs=0.002)


def test_expect_constant_and_identity():
    cfg = McConfig(samples=10**5, seed=11)
    est, se = expect(lambda x: np.full(x.shape[0], 2.5), Prior.exponential(), 1, cfg)
    assert (est, se) == (2.5, 0.0)
    est, se = expect(lambda x: x[:, 0], Prior.exponential(), 1, cfg)
    assert abs(est - 1.0) < 3 * se


def test_expect_max_of_three_matches_harmonic_sum():
    cfg = McConfig(samples=10**6, seed=13)
    est, se = expect(lambda x: x.max(axis=1), Prior.exponential(), 3, cfg)
    assert abs(est - H3) < 3 * se


def test_expect_rejects_nonfinite_output():
    cfg = McConfig(samples=1000, seed=1)
    with pytest.raises(EstimationError, match="non-finite"):
        expect(lambda x: np.where(x[:, 0] > 10.0, x[:, 0], np.inf),
               Prior.exponential(), 1, cfg)


def test_crn_reuses_draws_across_functionals():
    cfg = McConfig(samples=10**5, seed=5)
    # same draws: the two estimates differ by exactly the constant shift
    a, _ = expect(lambda x: x[:, 0], Prior.exponential(), 2, cfg)
    b, _ = expect(lambda x: x[:, 0] + 1.0, Prior.exponential(), 2, cfg)
    assert b - a == pytest.approx(1.0, abs=1e-12)


def test_crn_monotone_functional_gives_monotone_curve():
    cfg = McConfig(samples=10**5, seed=5)
    estimates = [
        expect(lambda x, t=t: np.minimum(x[:, 0], t), Prior.exponential(), 1, cfg)[0]
        for t in np.linspace(0.1, 3.0, 15)
    ]
    assert all(b >= a for a, b in zip(estimates, estimates[1:]))


def test_se_scaling_over_a_decade():
    ses = []
    for samples in (10**4, 10**5):
        cfg = McConfig(samples=samples, seed=21)
        _, se = expect(lambda x: x[:, 0], Prior.exponential(), 1, cfg)
        ses.append(se)
    ratio = ses[0] / ses[1]
    assert math.sqrt(10) / 2 < ratio < math.sqrt(10) * 2


def test_worker_count_does_not_change_estimates():
    base = McConfig(samples=3 * BLOCK_SIZE + 101, seed=9)
    par = McConfig(samples=3 * BLOCK_SIZE + 101, seed=9, workers=8)
    f = lambda x: np.sort(x, axis=1)[:, -1]
    assert expect(f, Prior.exponential(), 3, base) == expect(f, Prior.exponential(), 3, par)


def test_point_mass_prior_is_exact():
    prior = Prior.point_mass([0.5, 2.0])
    cfg = McConfig(samples=10**6, seed=3)
    est, se = expect(lambda x: x.sum(axis=1), prior, 2, cfg)
    assert (est, se) == (2.5, 0.0)


def test_exponential_density_integrates_to_one():
    # spot-check the density normalization by simple quadrature
    xs = np.linspace(0.0, 60.0, 400_001)
    mass = np.trapezoid(np.exp(-xs), xs)
    assert mass == pytest.approx(1.0, abs=1e-6)
