import warnings

import numpy as np
import torch
import pytest
from pytest import raises, warns
from scipy.special import gamma

from asymptolab.grids import FrequencyGrid, RayGrid
from asymptolab.transforms import TruncatedSeries, formal_borel_mk, borel_multiplier, laplace_mk_ray
from asymptolab.transforms import inverse_fourier, fourier_matrix, convolve_frequency, convolution_matrix
from asymptolab.transforms import interpolate_linear
from asymptolab.exceptions import InadmissibleDirectionError, StripViolationError, GridMismatchError
from asymptolab.exceptions import TruncationWarning


def test_truncated_series():
    f = TruncatedSeries([1.0, 2.0, 3.0])
    assert f.N == 3
    assert f(2.0) == pytest.approx(2 + 8 + 24)
    assert f.coefficient(2) == 2.0
    assert f.coefficient(7) == 0
    g = TruncatedSeries.monomial(2)
    assert (f + g).coefficient(2) == 3.0
    assert (2 * f).coefficient(3) == 6.0
    # t^{k+1} d/dt t^3 = 3 t^{3+k}
    h = TruncatedSeries.monomial(3).t_operator(2)
    assert h.coefficient(5) == 3.0 and h.N == 5
    with raises(ValueError):
        TruncatedSeries([])


@pytest.mark.parametrize('N', [1, 4, 20])
@pytest.mark.parametrize('k', [1, 2, 3, 4, 5])
def test_formal_borel_intertwines_t_operator(k, N):
    # B(t^{k+1} d/dt f) = k tau^k B(f)
    rng = np.random.default_rng(10 * k + N)
    f = TruncatedSeries(rng.normal(size=N) + 1j * rng.normal(size=N))
    left = formal_borel_mk(f.t_operator(k), k)
    right = borel_multiplier(formal_borel_mk(f, k), k)
    assert left.N == right.N == N + k
    assert np.allclose(left.coeffs, right.coeffs, rtol=1e-12, atol=0)


def test_formal_borel_coefficients():
    f = TruncatedSeries([1.0, 1.0, 1.0])
    b = formal_borel_mk(f, 2)
    assert np.allclose(b.coeffs, 1 / gamma(np.array([0.5, 1.0, 1.5])))
    with raises(ValueError):
        formal_borel_mk(f, 0)
    with raises(ValueError):
        formal_borel_mk(f, 1.5)


@pytest.mark.parametrize('k,n', [(1, 1), (2, 1), (2, 3), (3, 2)])
def test_laplace_of_borel_monomial(k, n):
    # the m_k-Laplace transform of tau^n / Gamma(n/k) is t^n
    t = 0.6 * np.exp(0.1j)
    value, tail = laplace_mk_ray(lambda u: u ** n / gamma(n / k), k, t, direction=0.1, ratio=1.01)
    assert complex(value) == pytest.approx(t ** n, rel=1e-6)
    assert tail < 1e-12


@pytest.mark.parametrize('k', [1, 2, 3])
def test_borel_laplace_round_trip_on_polynomials(k):
    rng = np.random.default_rng(k)
    for _ in range(10):
        degree = int(rng.integers(1, 13))
        f = TruncatedSeries(rng.normal(size=degree))
        borel = formal_borel_mk(f, k)
        t = rng.uniform(0.2, 0.8) * np.exp(1j * rng.uniform(-0.3, 0.3) / k)
        value, _ = laplace_mk_ray(lambda u: sum(complex(b) * u ** n for n, b in enumerate(borel.coeffs, 1)), k, t,
                                  direction=np.angle(t), ratio=1.01)
        scale = sum(abs(c) * abs(t) ** n for n, c in enumerate(f.coeffs, 1))
        assert abs(complex(value) - f(t)) < 1e-6 * scale


def test_laplace_is_linear_and_grid_consistent():
    grid = RayGrid.geometric(0.1, 1e-12, 20.0, 1.01)
    u = grid.tau_tensor()
    f, g = u ** 2 / gamma(1.0), torch.sin(u) * u
    t = 0.7 * np.exp(0.1j)
    a, b = 2.0 - 1.0j, 0.5j
    combined, _ = laplace_mk_ray(a * f + b * g, 2, t, grid=grid)
    separate = a * laplace_mk_ray(f, 2, t, grid=grid).value + b * laplace_mk_ray(g, 2, t, grid=grid).value
    assert complex(combined) == pytest.approx(complex(separate), rel=1e-12)

    coarse, _ = laplace_mk_ray(lambda v: torch.sin(v) * v, 2, t, direction=0.1, ratio=1.02)
    fine, _ = laplace_mk_ray(lambda v: torch.sin(v) * v, 2, t, direction=0.1, ratio=1.01)
    assert complex(coarse) == pytest.approx(complex(fine), rel=1e-6)


def test_laplace_on_given_grid():
    grid = RayGrid.geometric(0.0, 1e-12, 20.0, 1.01)
    values = grid.tau_tensor() / gamma(1.0)
    value, _ = laplace_mk_ray(values, 1, 1.0, grid=grid)
    assert complex(value) == pytest.approx(1.0, rel=1e-6)
    with raises(ValueError):
        laplace_mk_ray(values, 1, 1.0)


def test_laplace_rejects_inadmissible_direction():
    with raises(InadmissibleDirectionError) as info:
        laplace_mk_ray(lambda u: u, 2, 1.0, direction=np.pi / 4)
    assert info.value.suggestion == pytest.approx(0.0)


def test_laplace_truncation_warning():
    grid = RayGrid.geometric(0.0, 1e-6, 1.0, 1.05)
    with warns(TruncationWarning):
        laplace_mk_ray(grid.tau_tensor(), 1, 1.0, grid=grid)


@pytest.fixture
def m_grid():
    return FrequencyGrid.for_decay(1.0, 0.0, spacing=0.05, tol=1e-14, strip=0.5)


def test_inverse_fourier_of_sech(m_grid):
    # the inverse Fourier transform of sech(m) is sqrt(pi/2) sech(pi z/2)
    z = torch.tensor([0.0, 0.7, -1.3 + 0.3j, 0.2 - 0.45j])
    value, tail = inverse_fourier(lambda m: 1 / torch.cosh(m), m_grid, z, beta=1.0)
    exact = np.sqrt(np.pi / 2) / np.cosh(np.pi * z.numpy() / 2)
    assert np.allclose(value.numpy(), exact, atol=1e-10)
    assert tail < 1e-9


def test_inverse_fourier_strip(m_grid):
    with raises(StripViolationError):
        inverse_fourier(lambda m: 1 / torch.cosh(m), m_grid, torch.tensor([1.0j]), beta=1.0)
    with warns(TruncationWarning):
        inverse_fourier(lambda m: 1 / torch.cosh(m), FrequencyGrid(4, 2.0), torch.tensor([0.0j]), beta=1.0,
                        tol=1e-12)


def test_fourier_matrix_matches_inverse_fourier(m_grid):
    z = torch.tensor([0.1, 0.4j])
    values = 1 / torch.cosh(m_grid.nodes_tensor).to(torch.complex128)
    E = fourier_matrix(m_grid, z)
    assert E.shape == (2, m_grid.size)
    direct, _ = inverse_fourier(values, m_grid, z, beta=1.0)
    assert torch.allclose(E @ values, direct)


def test_convolution_of_gaussians():
    grid = FrequencyGrid(200, 10.0)
    # (1/sqrt(2 pi)) int e^{-(m-s)^2/2} e^{-s^2/2} ds = e^{-m^2/4} / sqrt(2)
    f = lambda m: torch.exp(-m ** 2 / 2)
    result = convolve_frequency(f, f, grid)
    exact = np.exp(-grid.nodes ** 2 / 4) / np.sqrt(2)
    assert np.allclose(result.numpy(), exact, atol=1e-10)

    values = torch.exp(-grid.nodes_tensor ** 2 / 2)
    from_values = convolve_frequency(values, values, grid, g_grid=grid)
    inner = slice(50, -50)
    assert np.allclose(from_values.numpy()[inner], exact[inner], atol=1e-3)
    with raises(GridMismatchError):
        convolve_frequency(f, values, grid, g_grid=FrequencyGrid(100, 10.0))


def test_convolution_matrix_weight():
    grid = FrequencyGrid(20, 2.0)
    weight = torch.linspace(0, 1, grid.size)
    K = convolution_matrix(lambda m: torch.exp(-m ** 2), grid)
    Kw = convolution_matrix(lambda m: torch.exp(-m ** 2), grid, weight=weight)
    assert torch.allclose(Kw, K * weight.to(torch.complex128).reshape(1, -1))


def test_interpolate_linear():
    grid = FrequencyGrid(10, 1.0)
    values = torch.as_tensor(2 * grid.nodes + 1, dtype=torch.complex128)
    points = torch.tensor([-0.95, 0.03, 0.5, 1.5])
    result = interpolate_linear(values, grid, points)
    expected = torch.tensor([-0.9, 1.06, 2.0, 0.0], dtype=torch.complex128)
    assert torch.allclose(result, expected)


def test_no_warning_when_accurate(m_grid):
    with warnings.catch_warnings():
        warnings.simplefilter('error', TruncationWarning)
        inverse_fourier(lambda m: 1 / torch.cosh(m), m_grid, torch.tensor([0.0j]), beta=1.0, tol=1e-8)


@pytest.fixture
def gaussian_grid():
    return FrequencyGrid(240, 12.0)


def test_inverse_fourier_of_gaussian(gaussian_grid):
    z = torch.tensor([0.0, 0.9, -2.1 + 0.4j, 0.3 - 0.8j])
    value, _ = inverse_fourier(lambda m: torch.exp(-m ** 2 / 2), gaussian_grid, z, beta=2.0)
    assert np.allclose(value.numpy(), np.exp(-z.numpy() ** 2 / 2), rtol=0, atol=1e-8)


def test_inverse_fourier_derivative_and_product(gaussian_grid):
    z = torch.tensor([0.0, 0.5, -1.2 + 0.3j])
    zs = z.numpy()
    # multiplication by i m is differentiation in z
    derivative, _ = inverse_fourier(lambda m: 1j * m * torch.exp(-m ** 2 / 2), gaussian_grid, z, beta=2.0)
    assert np.allclose(derivative.numpy(), -zs * np.exp(-zs ** 2 / 2), rtol=0, atol=1e-8)

    # the convolution becomes a product
    f, g = (lambda m: torch.exp(-m ** 2 / 2)), (lambda m: torch.exp(-m ** 2))
    product, _ = inverse_fourier(convolve_frequency(f, g, gaussian_grid), gaussian_grid, z, beta=2.0)
    inverse_f, _ = inverse_fourier(f, gaussian_grid, z, beta=2.0)
    inverse_g, _ = inverse_fourier(g, gaussian_grid, z, beta=2.0)
    assert np.allclose(product.numpy(), (inverse_f * inverse_g).numpy(), rtol=0, atol=1e-8)
    assert np.allclose(inverse_g.numpy(), np.exp(-zs ** 2 / 4) / np.sqrt(2), rtol=0, atol=1e-8)


def test_inverse_fourier_is_linear_and_grid_consistent(m_grid):
    z = torch.tensor([0.2, -0.7 + 0.2j])
    f, g = (lambda m: 1 / torch.cosh(m)), (lambda m: 1 / torch.cosh(m) ** 2)
    combined, _ = inverse_fourier(lambda m: 3 * f(m) - 2j * g(m), m_grid, z, beta=1.0)
    separate = 3 * inverse_fourier(f, m_grid, z, beta=1.0).value - 2j * inverse_fourier(g, m_grid, z, beta=1.0).value
    assert torch.allclose(combined, separate, rtol=1e-12, atol=1e-14)

    coarse = FrequencyGrid(m_grid.n_half // 2, m_grid.cutoff)
    on_coarse, _ = inverse_fourier(f, coarse, z, beta=1.0)
    on_fine, _ = inverse_fourier(f, m_grid, z, beta=1.0)
    assert np.allclose(on_coarse.numpy(), on_fine.numpy(), rtol=0, atol=1e-9)
