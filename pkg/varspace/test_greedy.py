import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.dictionaries.atoms import RidgeAtom
from app.dictionaries.service import atom_norm_bound
from app.domain.service import norm_l2, sample
from app.errors import ContractViolation
from app.greedy.service import (
    RateSeries,
    average_samples,
    benchmark_combination,
    maurey_rate_series,
    maurey_sample,
    orthogonal_greedy,
    rate_fit,
    sample_error,
)
from app.varnorm.combination import SparseCombination
from app.varnorm.service import synth


# ============================================================================
# RATE FITS
# ============================================================================

def test_rate_fit_recovers_power_law():
    n = [1, 2, 4, 8, 16]
    fit = rate_fit(n, [3.0 / math.sqrt(k) for k in n])
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert not fit.truncated


def test_rate_fit_truncates_at_exact_recovery():
    fit = rate_fit([1, 2, 4, 8], [1.0, 0.5, 0.0, 0.0])
    assert fit.truncated
    assert fit.points_used == 2
    assert fit.slope == pytest.approx(-1.0)


def test_rate_fit_rejects_short_or_degenerate_series():
    with pytest.raises(ContractViolation):
        rate_fit([1, 2], [1.0, 0.5])
    with pytest.raises(ContractViolation):
        rate_fit([1, 2, 4], [1.0, 0.0, 0.0])


def test_rate_fit_of_series():
    n = (1, 4, 16, 64)
    means = tuple(2.0 / math.sqrt(k) for k in n)
    series = RateSeries(n_values=n, mean_errors=means, std_errors=(0.0,) * 4)
    assert rate_fit(series) == rate_fit(list(n), list(means))
    assert rate_fit(series).slope == pytest.approx(-0.5)
    with pytest.raises(ContractViolation):
        rate_fit(list(n))


def test_rate_series_validation_and_frame():
    with pytest.raises(ContractViolation):
        RateSeries(n_values=(4, 2, 8), mean_errors=(1.0, 1.0, 1.0), std_errors=(0.0, 0.0, 0.0))
    series = RateSeries(n_values=(1, 2, 4), mean_errors=(1.0, 0.7, 0.5), std_errors=(0.1, 0.1, 0.1))
    frame = series.to_frame()
    assert list(frame.columns) == ["n", "mean_error", "std_error", "slope", "intercept"]
    assert math.isnan(series.slope)


# ============================================================================
# MAUREY SAMPLING
# ============================================================================

def test_sample_carries_the_full_mass(p1_square):
    representation = benchmark_combination(p1_square, atoms=30, seed=2)
    for n in (1, 7, 64):
        drawn = maurey_sample(representation, n, seed=5)
        assert drawn.size == n
        assert drawn.mass == pytest.approx(representation.mass, rel=1e-12)


def test_sampling_is_deterministic(p1_square):
    representation = benchmark_combination(p1_square, atoms=30, seed=2)
    a = maurey_sample(representation, 16, seed=9)
    b = maurey_sample(representation, 16, seed=9)
    assert a.atoms == b.atoms
    assert_allclose(a.coefficients, b.coefficients)


def test_single_atom_sample_is_exact(interval_quadrature):
    atom = RidgeAtom(1, (1.0,), 0.3)
    representation = SparseCombination.single(atom, -2.0)
    drawn = maurey_sample(representation, 5, seed=0)
    assert set(drawn.atoms) == {atom}
    assert_allclose(drawn.coefficients, -0.4)
    assert sample_error(representation, drawn, interval_quadrature) <= 1e-14


def test_zero_mass_cannot_be_sampled():
    with pytest.raises(ContractViolation):
        maurey_sample(SparseCombination.empty(), 4, seed=0)
    with pytest.raises(ContractViolation):
        maurey_sample(SparseCombination.single(RidgeAtom(1, (1.0,), 0.0)), 0, seed=0)


def test_sample_average_is_unbiased(p1_square, square_quadrature):
    representation = benchmark_combination(p1_square, atoms=50, seed=0)
    n, trials = 64, 200
    samples = [maurey_sample(representation, n, seed) for seed in range(trials)]
    mean = average_samples(samples, square_quadrature)
    bound = atom_norm_bound(p1_square, square_quadrature) * representation.mass / math.sqrt(trials * n)
    assert norm_l2(mean - synth(representation, square_quadrature)) <= 3.0 * bound


@pytest.mark.slow
def test_maurey_rate_stays_below_bound(p1_square, square_quadrature):
    representation = benchmark_combination(p1_square, atoms=50, seed=0)
    norm_bound = atom_norm_bound(p1_square, square_quadrature)
    series = maurey_rate_series(
        representation, square_quadrature, norm_bound, [1, 2, 4, 8, 16, 32, 64, 128, 256], range(20),
        greedy_config=p1_square,
    )
    assert all(mean <= bound for mean, bound in zip(series.mean_errors, series.bounds))
    assert series.slope <= -0.4
    assert len(series.greedy_errors) == 9
    assert series.greedy_errors[-1] <= series.mean_errors[-1]


# ============================================================================
# ORTHOGONAL GREEDY
# ============================================================================

def test_greedy_recovers_grid_atom(p1_interval, interval_quadrature):
    f = synth(SparseCombination.single(RidgeAtom(1, (1.0,), 0.5), 2.0), interval_quadrature)
    result = orthogonal_greedy(f, p1_interval, 1)
    assert result.errors[0] <= 1e-8 * norm_l2(f)
    assert result.combination.coefficients[0] == pytest.approx(2.0, rel=1e-8)


def test_greedy_errors_do_not_increase(p1_square, square_quadrature):
    f = sample(lambda x: np.exp(x[:, 0]) * np.cos(2.0 * x[:, 1]), square_quadrature)
    result = orthogonal_greedy(f, p1_square, 12)
    assert len(result.errors) == 12
    assert all(b <= a * (1.0 + 1e-10) for a, b in zip(result.errors, result.errors[1:]))
    assert result.errors[-1] < norm_l2(f)


def test_greedy_rejects_nonpositive_steps(p1_interval, interval_quadrature):
    f = sample(lambda x: x[:, 0], interval_quadrature)
    with pytest.raises(ContractViolation):
        orthogonal_greedy(f, p1_interval, 0)
