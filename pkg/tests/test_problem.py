import numpy as np
import torch
import pytest
from pytest import raises

from asymptolab.grids import FrequencyGrid
from asymptolab.problem import reference_spec, validate_spec, Annulus, Sector, build_good_covering, check_covering
from asymptolab.problem import CoefficientFamily, ForcingSpec, check_coefficient_bounds, check_forcing_bound
from asymptolab.problem import as_polynomial, degree, decay_profile, profile_bound
from asymptolab.exceptions import PolynomialEvaluationError, InfeasibleCoveringError

MAGIC = 42
np.random.seed(MAGIC)


@pytest.fixture
def spec():
    return reference_spec()


@pytest.fixture
def m_grid():
    return FrequencyGrid(40, 8.0)


def test_reference_spec_is_valid(spec, m_grid):
    report = validate_spec(spec, m_grid)
    assert report.passed, report.failed
    assert spec.n_roots == 7
    assert spec.leading_factor == 10.0
    assert spec.lower_indices == [(1, 1)]
    assert spec.eps_exponent(1, 1) == 1
    assert spec.tau_exponent(1, 1) == 0

    frame = report.to_frame()
    assert list(frame.columns) == ['check_name', 'pass', 'detail']
    assert frame['pass'].all()


def test_validate_spec_flags_broken_hypotheses(m_grid):
    report = validate_spec(reference_spec(k_prime=2), m_grid)
    assert 'intermediate-order' in report.failed

    report = validate_spec(reference_spec(lambda1=1), m_grid)
    assert 'leading-exponent' in report.failed
    assert 'inner-scaling' in report.failed
    assert not report['leading-exponent'].passed

    report = validate_spec(reference_spec(mu2=2), m_grid)
    assert 'inner-exponent' in report.failed

    report = validate_spec(reference_spec(Q=[5.0]), m_grid)
    assert report.failed == ['sectorial-annulus']


def test_validate_spec_rejects_vanishing_leading_polynomial(m_grid):
    with raises(PolynomialEvaluationError):
        validate_spec(reference_spec(R_D=[0.0, 1.0]), m_grid)


def test_validate_spec_needs_symmetric_grid(spec):
    with raises(ValueError):
        validate_spec(spec, np.array([0.0, 1.0, 2.0]))
    with raises(ValueError):
        validate_spec(spec, np.array([]))


def test_spec_shape_checks():
    with raises(ValueError):
        reference_spec(D1=1)
    with raises(ValueError):
        reference_spec(delta_l1=(0, 1))
    with raises(ValueError):
        Annulus(2.0, 1.0, 0.0, 1.0)
    with raises(ValueError):
        Annulus(1.0, 2.0, 1.0, 0.0)


def test_polynomials():
    p = as_polynomial([1.0, [0.0, 2.0]])
    assert np.isclose(p(1.0), 1 + 2j)
    assert degree(p) == 1
    assert degree(as_polynomial([1.0, 0.0, 0.0])) == 0
    assert degree(as_polynomial([0.0])) == -1
    with raises(ValueError):
        as_polynomial([[1.0, 2.0, 3.0]])
    with raises(ValueError):
        as_polynomial([])


def test_annulus_contains():
    annulus = Annulus(1.0, 3.0, -np.pi / 8, np.pi / 8)
    assert annulus.contains(2.0)
    assert annulus.contains(3.0)
    assert not annulus.contains(0.5)
    assert not annulus.contains(2j)
    wrapped = Annulus(1.0, 2.0, 3.0, 3.5)
    assert wrapped.contains(1.5 * np.exp(1j * 3.3))
    assert not wrapped.contains(1.5)


def test_decay_profile_bound():
    m = np.linspace(-30, 30, 2001)
    for beta, mu in [(1.0, 3.0), (0.5, 1.5), (2.0, 4.0)]:
        weighted = (1 + np.abs(m)) ** mu * np.exp(beta * np.abs(m)) * decay_profile(m, beta, mu)
        assert weighted.max() <= profile_bound(mu)
    t = torch.linspace(-2, 2, 5)
    assert torch.allclose(decay_profile(t, 1.0, 3.0), torch.as_tensor(decay_profile(t.numpy(), 1.0, 3.0)))


def test_coefficient_and_forcing_bounds(spec, m_grid):
    family = CoefficientFamily.uniform(spec, 1e-2)
    assert check_coefficient_bounds(spec, family, m_grid, [0.1, 0.2j]).passed
    zero = CoefficientFamily.zero(spec)
    assert check_coefficient_bounds(spec, zero, m_grid, [0.1]).passed

    forcing = ForcingSpec.standard(spec)
    assert forcing.nu_f == spec.nu / 2
    taus = np.concatenate([np.linspace(0.1, 4, 20), 3 * np.exp(1j * np.linspace(-np.pi, np.pi, 17))])
    assert check_forcing_bound(spec, forcing, m_grid, taus, [0.1]).passed
    assert check_forcing_bound(spec, ForcingSpec.zero(spec), m_grid, taus, [0.1]).passed

    with raises(ValueError):
        ForcingSpec.standard(spec, nu_f=2 * spec.nu)

    values = family(1, 1, torch.linspace(-1, 1, 3), torch.as_tensor(0.1 + 0j))
    assert values.dtype == torch.complex128
    assert torch.all(family(2, 2, torch.zeros(3), torch.as_tensor(0.1 + 0j)) == 0)


def test_sector():
    s = Sector(np.pi - 0.05, 0.1, radius=2.0)
    assert s.contains(np.exp(1j * (np.pi + 0.02)))
    assert not s.contains(3 * np.exp(1j * np.pi))
    assert not s.contains(1j)
    assert s.opening == pytest.approx(0.2)
    with raises(ValueError):
        Sector(0.0, 0.0)
    with raises(ValueError):
        Sector(0.0, 0.1, radius=1.0, inner_radius=2.0)
    assert Sector(3 * np.pi, 0.1).direction == pytest.approx(np.pi)


@pytest.mark.parametrize('iota', [3, 5, 24])
def test_good_covering(iota):
    covering = build_good_covering(iota, radius=0.25)
    assert covering.iota == iota
    assert check_covering(covering).passed
    for h in range(iota):
        eps = 0.1 * np.exp(1j * covering.overlap_direction(h))
        assert sorted(covering.indices_containing(eps)) == sorted([h, (h + 1) % iota])
    assert covering[iota] is covering[0]


def test_opening_constrained_covering(spec):
    lambda2k2 = spec.lambda2 * spec.k2
    covering = build_good_covering(24, kind='opening-constrained', lambda2k2=lambda2k2, radius=spec.epsilon0)
    report = check_covering(covering)
    assert report.passed
    assert report['minimum-opening'].passed
    assert all(s.opening > np.pi / lambda2k2 for s in covering.sectors)


def test_infeasible_coverings():
    with raises(InfeasibleCoveringError):
        build_good_covering(2)
    with raises(InfeasibleCoveringError):
        build_good_covering(24, kind='opening-constrained', lambda2k2=2)
    with raises(InfeasibleCoveringError):
        build_good_covering(6, min_opening=3.0)
    with raises(ValueError):
        build_good_covering(24, kind='opening-constrained')
    with raises(ValueError):
        build_good_covering(1)
    with raises(ValueError):
        build_good_covering(4, kind='unknown')


def test_check_covering_detects_gaps():
    covering = build_good_covering(6)
    broken = type(covering)(sectors=covering.sectors[:-1] + (Sector(covering[5].direction, 0.01),))
    report = check_covering(broken)
    assert not report['coverage'].passed
    assert not report.passed
