import math

import numpy as np
import pytest

from app.dictionaries.atoms import RidgeAtom, SpectralAtom
from app.domain.service import make_generator
from app.errors import ConfigurationError, ContractViolation
from app.spectral.service import (
    build_cutoff,
    extension_norm_bound,
    fs_equality_experiment,
    fs_equality_table,
    gaussian_factor_integral,
    inversion_error,
    pair_from_manifest,
    product_cutoff_bound,
    spectral_barron_norm,
    weight_submultiplicative,
)
from app.spectral.utils import cauchy_pair, gaussian_pair, hat_pair
from app.varnorm.combination import SparseCombination


# ============================================================================
# SPECTRAL BARRON NORM
# ============================================================================

def test_gaussian_norm_without_weight_is_its_peak_value():
    norm = spectral_barron_norm(gaussian_pair(1.0), 0.0)
    assert norm.value == pytest.approx(1.0, abs=1e-6)
    assert norm.tail <= 1e-6 * norm.value


def test_gaussian_first_moment():
    expected = 1.0 + math.sqrt(2.0 * math.pi) / (2.0 * math.pi ** 2)
    assert float(spectral_barron_norm(gaussian_pair(1.0), 1.0)) == pytest.approx(expected, rel=1e-6)


def test_norm_grows_with_decay_order():
    pair = gaussian_pair(0.5)
    values = [spectral_barron_norm(pair, s).value for s in (0.0, 1.0, 2.0)]
    assert values[0] < values[1] < values[2]


def test_cauchy_and_planar_gaussian():
    assert spectral_barron_norm(cauchy_pair(1.0), 0.0).value == pytest.approx(1.0 / math.pi, rel=1e-5)
    assert spectral_barron_norm(gaussian_pair(1.0, dim=2), 0.0).value == pytest.approx(1.0, rel=1e-6)


def test_slowly_decaying_transform_is_rejected():
    with pytest.raises(ConfigurationError):
        spectral_barron_norm(hat_pair(1.0), 0.0)


def test_pairs_are_limited_to_two_dimensions():
    with pytest.raises(ConfigurationError):
        gaussian_pair(1.0, dim=3)


def test_fourier_inversion_of_builtin_pairs():
    for pair in (gaussian_pair(1.0), cauchy_pair(0.5), gaussian_pair(0.7, dim=2)):
        truncation = spectral_barron_norm(pair, 0.0).r_max
        assert inversion_error(pair, truncation) <= 1e-4


# ============================================================================
# GAUSSIAN CUTOFF
# ============================================================================

@pytest.mark.parametrize("R", [0.5, 10.0, 100.0])
def test_gaussian_factor_integral_closed_form(R):
    assert gaussian_factor_integral(R, 0.0) == pytest.approx(1.0, abs=1e-10)
    expected = 1.0 + 1.0 / (math.pi ** 1.5 * math.sqrt(2.0 * R))
    assert gaussian_factor_integral(R, 1.0) == pytest.approx(expected, abs=1e-10)


def test_gaussian_factor_integral_decreases_towards_one():
    values = [gaussian_factor_integral(R, 2.0) for R in (1.0, 10.0, 100.0, 1000.0)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] > 1.0


def test_cutoff_is_one_on_the_domain_and_its_correction_shrinks():
    reports = [build_cutoff(R, 1.0) for R in (1.0, 10.0, 100.0)]
    for report in reports:
        assert report.k == 4
        assert report.on_domain_max_error <= 1e-10
        assert report.total >= 1.0 - 1e-3
        assert report.total <= report.gaussian_integral + report.correction_integral + 1e-9
    corrections = [r.correction_integral for r in reports]
    assert corrections[0] > corrections[1] > corrections[2]
    totals = [r.total for r in reports]
    assert totals[0] > totals[1] > totals[2]


def test_cutoff_needs_enough_smoothness():
    with pytest.raises(ContractViolation):
        build_cutoff(10.0, 1.0, k=3)
    with pytest.raises(ContractViolation):
        build_cutoff(-1.0, 1.0)


def test_product_and_extension_bounds():
    report = build_cutoff(10.0, 1.0)
    assert product_cutoff_bound(report, 2) == pytest.approx(report.total ** 2)
    combination = SparseCombination(
        (SpectralAtom(1.0, (0.5,)), SpectralAtom(1.0, (-1.0,))), np.array([1.0 + 1.0j, -0.5])
    )
    assert extension_norm_bound(combination, report) == pytest.approx(report.total * combination.mass)
    with pytest.raises(ContractViolation):
        extension_norm_bound(SparseCombination.single(RidgeAtom(1, (1.0,), 0.0)), report)
    with pytest.raises(ContractViolation):
        extension_norm_bound(SparseCombination.single(SpectralAtom(2.0, (0.5,))), report)


def test_weight_is_submultiplicative():
    rng = make_generator(13)
    xi = rng.normal(size=(500, 2)) * 5.0
    nu = rng.normal(size=(500, 2)) * 5.0
    for s in (0.0, 0.5, 1.0, 3.0):
        assert weight_submultiplicative(xi, nu, s).all()


# ============================================================================
# F_s EQUALITY AND MANIFEST RECORDS
# ============================================================================

def test_fs_norm_of_restricted_gaussian_matches_spectral_norm(fs_interval):
    row = fs_equality_experiment(gaussian_pair(1.0), 0.0, fs_interval)
    assert row["within"]
    assert row["status"] == "ok"
    assert row["variation_upper"] <= row["spectral_value"] * 1.1


def test_fs_check_rejects_mismatched_settings(fs_interval, p1_interval):
    with pytest.raises(ConfigurationError):
        fs_equality_experiment(gaussian_pair(1.0), 1.0, fs_interval)
    with pytest.raises(ConfigurationError):
        fs_equality_experiment(gaussian_pair(1.0), 0.0, p1_interval)
    with pytest.raises(ConfigurationError):
        fs_equality_experiment(gaussian_pair(1.0, dim=2), 0.0, fs_interval)


@pytest.mark.slow
def test_fs_equality_table_over_decay_orders(fs_interval):
    table = fs_equality_table(gaussian_pair(1.0), [0.0, 1.0], fs_interval)
    assert list(table["s"]) == [0.0, 1.0]
    assert bool(table["within"].all())


def test_pair_from_manifest_builds_and_checks():
    pair = pair_from_manifest({"family": "gaussian", "params": {"sigma": 0.5}, "dim": 2})
    assert pair.dim == 2
    assert pair_from_manifest({"family": "hat", "params": {"width": 2.0}}, check=False).dim == 1


@pytest.mark.parametrize(
    "record,loc",
    [
        ({"family": "bessel"}, "pair.family"),
        ({"family": "gaussian", "color": "red"}, "pair.color"),
        ({"family": "gaussian", "params": {"width": 1.0}}, "pair.params"),
        ({"family": "hat", "dim": 2}, "pair.dim"),
    ],
)
def test_pair_from_manifest_reports_field(record, loc):
    with pytest.raises(ConfigurationError) as caught:
        pair_from_manifest(record, check=False)
    assert caught.value.errors[0]["loc"] == loc
