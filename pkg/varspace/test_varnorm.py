import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.dictionaries.atoms import RidgeAtom, SpectralAtom
from app.dictionaries.service import grid_atoms
from app.domain.service import make_generator, norm_l2, sample, zeros
from app.errors import ContractViolation, SolverFailure
from app.greedy.service import maurey_sample
from app.varnorm.combination import SparseCombination
from app.varnorm.service import (
    barron_norm_bracket,
    converse_maurey_check,
    estimate_with_certificate,
    l2_embedding_bound,
    monomial_exponents,
    polynomial_fit,
    quotient_variation_upper,
    radon_style_synthesis,
    synth,
    variation_upper,
)
from app.varnorm.utils import lasso_coordinate_descent, refine_atom, soft_threshold


def _identity(quadrature):
    return sample(lambda x: x[:, 0], quadrature)


def _ridge_combination(terms, k=1):
    """terms are (omega, b, coefficient) triples on the line"""
    atoms = tuple(RidgeAtom(k, (omega,), b) for omega, b, _ in terms)
    return SparseCombination(atoms, np.array([a for _, _, a in terms], dtype=float))


KNOWN_COMBINATIONS = [
    [(1.0, -0.3, 2.0)],
    [(1.0, 0.5, 1.0), (1.0, -0.5, -1.0)],
    [(1.0, 0.2, 1.5), (-1.0, 0.7, -0.5), (1.0, -1.0, 0.25)],
]


# ============================================================================
# KERNELS
# ============================================================================

def test_soft_threshold_real_and_complex():
    assert soft_threshold(3.0, 1.0) == pytest.approx(2.0)
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(3.0 + 4.0j, 1.0) == pytest.approx(2.4 + 3.2j)


def test_coordinate_descent_on_orthonormal_gram():
    c = lasso_coordinate_descent(np.eye(2), np.array([3.0, 0.2]), np.zeros(2), lam=1.0)
    assert_allclose(c, [2.5, 0.0])


def test_combination_mass_and_merge():
    atom = RidgeAtom(1, (1.0,), 0.5)
    combination = SparseCombination((atom, atom), np.array([1.0, -3.0]))
    assert combination.mass == pytest.approx(4.0)
    merged = combination.merged()
    assert merged.size == 1
    assert merged.coefficients[0] == pytest.approx(-2.0)
    with pytest.raises(ContractViolation):
        SparseCombination((atom,), np.array([1.0, 2.0]))


@pytest.mark.parametrize("steps, expected", [(1, 0.1), (2, 0.15), (3, 0.175)])
def test_refinement_steps_start_at_grid_spacing(p1_interval, steps, expected):
    refined, score = refine_atom(RidgeAtom(1, (1.0,), 0.0), lambda a: a.b, p1_interval, steps=steps)
    assert refined.b == pytest.approx(expected)
    assert score == pytest.approx(expected)


def test_refinement_clamps_offsets(p1_interval):
    refined, _ = refine_atom(RidgeAtom(1, (1.0,), 1.95), lambda a: a.b, p1_interval, steps=4)
    assert refined.b == pytest.approx(p1_interval.c2)


# ============================================================================
# UPPER AND LOWER BOUNDS
# ============================================================================

def test_single_atom_has_norm_at_most_one(p1_interval, interval_quadrature):
    f = synth(SparseCombination.single(RidgeAtom(1, (1.0,), 0.5)), interval_quadrature)
    report, combination = variation_upper(f, p1_interval)
    assert report.success
    assert report.upper <= 1.05
    assert norm_l2(synth(combination, interval_quadrature) - f) <= report.eps * (1 + 1e-9)


def test_single_atom_in_two_dimensions(p1_square, square_quadrature):
    f = synth(SparseCombination.single(RidgeAtom(1, (1.0, 0.0), 0.4)), square_quadrature)
    report, _ = variation_upper(f, p1_square)
    assert report.success
    assert report.upper <= 1.05


def test_identity_bracket(p1_interval, interval_quadrature):
    f = _identity(interval_quadrature)
    report, _ = estimate_with_certificate(f, p1_interval)
    assert report.upper == pytest.approx(1.0, rel=0.05)
    assert report.lower >= 0.99
    assert report.lower <= report.upper + report.lower_slack


def test_identity_as_difference_of_two_ridges(p1_interval, interval_quadrature):
    # x = (sigma(x + 1) - sigma(1 - x)) / 2 on [-1, 1]
    representation = _ridge_combination([(1.0, 1.0, 0.5), (-1.0, 1.0, -0.5)])
    f = synth(representation, interval_quadrature)
    assert_allclose(f.values, interval_quadrature.nodes[:, 0], atol=1e-12)
    report, combination = variation_upper(f, p1_interval)
    assert report.success
    assert report.upper <= 1.05
    assert norm_l2(synth(combination, interval_quadrature) - f) <= report.eps * (1 + 1e-9)


@pytest.mark.parametrize("terms", KNOWN_COMBINATIONS)
def test_upper_bound_of_known_combination(p1_interval, interval_quadrature, terms):
    representation = _ridge_combination(terms)
    f = synth(representation, interval_quadrature)
    report, _ = estimate_with_certificate(f, p1_interval)
    assert report.success
    assert report.upper <= representation.mass * 1.05
    assert report.lower <= representation.mass * 1.05 + report.lower_slack


@pytest.mark.parametrize(
    "config_name, quadrature_name, seed",
    [
        ("p1_interval", "interval_quadrature", 0),
        ("p1_interval", "interval_quadrature", 1),
        ("p1_interval", "interval_quadrature", 2),
        ("p1_square", "square_quadrature", 0),
    ],
)
def test_upper_bound_of_random_ten_atom_combination(request, config_name, quadrature_name, seed):
    config = request.getfixturevalue(config_name)
    quadrature = request.getfixturevalue(quadrature_name)
    atoms = grid_atoms(config)
    rng = make_generator(seed)
    picks = rng.choice(len(atoms), size=10, replace=False)
    representation = SparseCombination(tuple(atoms[i] for i in picks), rng.normal(size=10))
    report, _ = variation_upper(synth(representation, quadrature), config)
    assert report.success
    assert report.upper <= representation.mass * 1.05


@pytest.mark.parametrize("c", [0.1, 2.0, 10.0])
def test_homogeneity(p1_interval, interval_quadrature, c):
    f = sample(lambda x: np.maximum(x[:, 0] - 0.25, 0.0) - 0.5 * np.maximum(-x[:, 0], 0.0), interval_quadrature)
    one, _ = variation_upper(f, p1_interval)
    scaled, _ = variation_upper(c * f, p1_interval)
    assert scaled.upper == pytest.approx(c * one.upper, rel=0.05)


@pytest.mark.parametrize("terms", KNOWN_COMBINATIONS[1:])
def test_upper_bound_grows_as_tolerance_shrinks(p1_interval, interval_quadrature, terms):
    f = synth(_ridge_combination(terms), interval_quadrature)
    uppers = [variation_upper(f, p1_interval, eps=fraction * norm_l2(f))[0].upper for fraction in (1e-1, 1e-2, 1e-3)]
    for looser, tighter in zip(uppers, uppers[1:]):
        assert tighter >= looser * (1.0 - 0.02)


def test_triangle_inequality(p1_interval, interval_quadrature):
    f = sample(lambda x: np.abs(x[:, 0]), interval_quadrature)
    g = sample(lambda x: np.maximum(x[:, 0] - 0.5, 0.0), interval_quadrature)
    nf, _ = variation_upper(f, p1_interval)
    ng, _ = variation_upper(g, p1_interval)
    nfg, _ = variation_upper(f + g, p1_interval)
    assert nfg.upper <= (nf.upper + ng.upper) * 1.05


def test_zero_target(p1_interval, interval_quadrature):
    report, combination = variation_upper(zeros(interval_quadrature), p1_interval, eps=1e-6)
    assert report.upper == 0.0
    assert combination.size == 0
    assert report.success


def test_exhausted_budget_keeps_best_so_far(p1_interval, interval_quadrature):
    f = sample(lambda x: x[:, 0] ** 2, interval_quadrature)
    report, combination = variation_upper(f, p1_interval, eps=1e-8, budget=1)
    assert not report.success
    assert "budget" in report.message
    assert not report.valid_gauge_estimate
    assert combination.size >= 1
    with pytest.raises(SolverFailure) as caught:
        report.raise_for_status()
    assert caught.value.result is report


def test_spectral_atom_norm(fs_interval, interval_quadrature):
    f = synth(SparseCombination.single(SpectralAtom(0.0, (0.5,))), interval_quadrature)
    report, _ = variation_upper(f, fs_interval)
    assert report.success
    assert report.upper <= 1.05


def test_embedding_bound_dominates_l2_norm(p1_interval, interval_quadrature):
    f = _identity(interval_quadrature)
    report, _ = variation_upper(f, p1_interval)
    assert norm_l2(f) <= l2_embedding_bound(f, p1_interval, report.upper) + report.eps


# ============================================================================
# QUOTIENT NORMS AND SYNTHESIS
# ============================================================================

def test_monomial_exponents():
    assert len(monomial_exponents(2, 2)) == 6
    assert monomial_exponents(1, 3) == [(0,), (1,), (2,), (3,)]


def test_polynomial_fit_reproduces_polynomials(square_quadrature):
    f = sample(lambda x: 1.0 + x[:, 0] - 2.0 * x[:, 0] * x[:, 1], square_quadrature)
    assert_allclose(polynomial_fit(f, 2).values, f.values, atol=1e-12)


def test_quotient_norm_of_polynomial_vanishes(p1_interval, interval_quadrature):
    f = sample(lambda x: 1.0 + x[:, 0], interval_quadrature)
    report, combination, polynomial = quotient_variation_upper(f, p1_interval)
    assert report.upper == 0.0
    assert combination.size == 0
    assert_allclose(polynomial.values, f.values, atol=1e-12)


def test_quotient_norm_never_exceeds_plain_norm(p1_interval, interval_quadrature):
    f = sample(lambda x: np.maximum(x[:, 0], 0.0) + 0.3 * x[:, 0], interval_quadrature)
    plain, _ = variation_upper(f, p1_interval)
    quotient, combination, polynomial = quotient_variation_upper(f, p1_interval)
    assert quotient.upper <= plain.upper * 1.05
    rebuilt = synth(combination, interval_quadrature) + polynomial
    assert norm_l2(rebuilt - f) <= quotient.eps * 1.01


def test_radon_synthesis_drops_atoms_above_c2(p1_interval, interval_quadrature):
    measure = SparseCombination.single(RidgeAtom(1, (1.0,), 3.0), 2.0)
    result = radon_style_synthesis(measure, 1, p1_interval, interval_quadrature)
    assert result.in_range.size == 0
    assert_allclose(result.values.values, 0.0)


def test_radon_synthesis_keeps_only_polynomial_below_c1(p1_interval, interval_quadrature):
    measure = SparseCombination.single(RidgeAtom(2, (1.0,), -3.0), 2.0)
    result = radon_style_synthesis(measure, 2, p1_interval, interval_quadrature)
    x = interval_quadrature.nodes[:, 0]
    assert result.in_range.size == 0
    assert_allclose(result.values.values, -(x - 3.0) ** 2, atol=1e-12)


def test_radon_synthesis_in_range_atom(p1_interval, interval_quadrature):
    measure = SparseCombination.single(RidgeAtom(1, (1.0,), 0.5), 1.0)
    result = radon_style_synthesis(measure, 1, p1_interval, interval_quadrature)
    x = interval_quadrature.nodes[:, 0]
    assert result.in_range.size == 1
    assert_allclose(result.values.values, np.maximum(x + 0.5, 0.0) - (x + 0.5), atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_radon_synthesis_matches_direct_formula(p1_interval, interval_quadrature, k):
    measure = _ridge_combination([(1.0, 0.3, 1.0), (-1.0, -0.2, -0.5), (1.0, -3.0, 0.7), (-1.0, 2.5, 0.4)], k=k)
    result = radon_style_synthesis(measure, k, p1_interval, interval_quadrature)
    x = interval_quadrature.nodes[:, 0]
    direct = np.zeros_like(x)
    for atom, a in zip(measure.atoms, measure.coefficients):
        t = atom.omega[0] * x + atom.b
        direct += a * (np.maximum(t, 0.0) ** k - t ** k) / math.factorial(k)
    assert np.max(np.abs(result.values.values - direct)) <= 1e-8


@pytest.mark.parametrize("k", [1, 2])
def test_radon_synthesis_outside_the_box_is_polynomial(p1_interval, interval_quadrature, k):
    # no hyperplane meets [-1, 1], so sigma_k(t) - t^k is a polynomial there
    measure = _ridge_combination([(1.0, -1.5, 1.0), (1.0, 1.5, -2.0), (-1.0, -3.0, 0.5), (1.0, 2.5, 1.0)], k=k)
    result = radon_style_synthesis(measure, k, p1_interval, interval_quadrature)
    fitted = polynomial_fit(result.values, k)
    assert np.max(np.abs(fitted.values - result.values.values)) <= 1e-8


@pytest.mark.parametrize("k", [1, 2])
def test_radon_synthesis_quotient_norm_within_mass(p1_interval, interval_quadrature, k):
    config = p1_interval.model_copy(update={"k": k})
    measure = _ridge_combination([(1.0, 0.3, 1.0), (-1.0, -0.2, -0.5), (1.0, -3.0, 0.7)], k=k)
    result = radon_style_synthesis(measure, k, config, interval_quadrature)
    report, _, _ = quotient_variation_upper(result.values, config)
    assert report.upper <= measure.mass / math.factorial(k) * 1.05 + 1e-6


# ============================================================================
# CONVERSE CHECK AND BARRON BRACKET
# ============================================================================

def test_converse_check_accepts_converging_sequence(p1_interval, interval_quadrature):
    target = RidgeAtom(1, (1.0,), 0.5)
    f = synth(SparseCombination.single(target), interval_quadrature)
    sequence = [SparseCombination.single(RidgeAtom(1, (1.0,), 0.5 + shift)) for shift in (0.4, 0.1, 0.01)]
    check = converse_maurey_check(sequence, f, p1_interval)
    assert check.bound == pytest.approx(1.0)
    assert check.upper <= 1.05
    assert check.distances[0] > check.distances[-1]


def test_converse_check_with_sampled_sequence(p1_interval, interval_quadrature):
    representation = _ridge_combination(KNOWN_COMBINATIONS[2])
    f = synth(representation, interval_quadrature)
    sequence = [maurey_sample(representation, n, seed=n) for n in (4, 256, 4096)]
    check = converse_maurey_check(sequence, f, p1_interval)
    assert check.bound == pytest.approx(representation.mass)
    assert check.upper <= representation.mass * 1.05
    assert check.distances[-1] < check.distances[0]


def test_converse_check_of_cancelling_pairs_is_zero(p1_interval, interval_quadrature):
    atoms = [RidgeAtom(1, (1.0,), b) for b in (-0.5, 0.0, 0.5)]
    sequence = [SparseCombination((atom, atom), np.array([0.5, -0.5])) for atom in atoms]
    check = converse_maurey_check(sequence, zeros(interval_quadrature), p1_interval, bound=1.0)
    assert check.bound == 1.0
    assert check.distances == (0.0, 0.0, 0.0)
    assert check.upper == pytest.approx(0.0, abs=1e-12)


def test_converse_check_rejects_non_converging_sequence(p1_interval, interval_quadrature):
    f = _identity(interval_quadrature)
    sequence = [SparseCombination.single(RidgeAtom(1, (1.0,), 0.5))] * 3
    with pytest.raises(ContractViolation):
        converse_maurey_check(sequence, f, p1_interval)


@pytest.mark.slow
def test_barron_bracket_within_constants(p1_interval, interval_quadrature):
    f = sample(lambda x: np.maximum(x[:, 0], 0.0), interval_quadrature)
    bracket = barron_norm_bracket(f, p1_interval)
    assert bracket.ridge_upper <= 1.05
    assert bracket.within_constants
