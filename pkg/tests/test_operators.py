import numpy as np
import torch
import pytest
from pytest import raises

from asymptolab.operators import diff, unsafe_diff, complex_leaf, holomorphic_diff, t_operator
from asymptolab.operators import cauchy_riemann_residual

torch.manual_seed(42)
np.random.seed(42)

EPS = 1e-12


def test_diff():
    x = torch.rand(10, 1, requires_grad=True)
    assert torch.allclose(diff(x ** 2, x), 2 * x)
    assert torch.allclose(diff(x ** 3, x, order=2), 6 * x)
    with raises(ValueError):
        diff(x.reshape(-1) ** 2, x)
    # a graph that does not involve t
    y = torch.rand(10, 1, requires_grad=True)
    assert torch.all(unsafe_diff(y ** 2, x) == 0)


def test_complex_leaf():
    x, y, z = complex_leaf(np.array([1 + 2j, -0.5j]))
    assert x.requires_grad and y.requires_grad
    assert z.dtype == torch.complex128
    assert torch.allclose(z, torch.tensor([1 + 2j, -0.5j], dtype=torch.complex128))


def test_holomorphic_diff():
    points = np.exp(1j * np.linspace(0, 2 * np.pi, 7)) * 1.3
    x, y, z = complex_leaf(points)
    u = z ** 3
    assert torch.allclose(holomorphic_diff(u, x), 3 * z ** 2, atol=EPS)
    assert torch.allclose(holomorphic_diff(u, x, order=2), 6 * z, atol=EPS)
    v = torch.exp(2 * z)
    assert torch.allclose(holomorphic_diff(v, x), 2 * v, atol=EPS)


@pytest.mark.parametrize('k', [1, 2, 5])
def test_t_operator_on_monomials(k):
    x, y, t = complex_leaf(np.array([0.3 + 0.4j, 1.1 - 0.2j, -0.7j]))
    n = 3
    assert torch.allclose(t_operator(t ** n, x, t, k), n * t ** (n + k), atol=EPS)


def test_cauchy_riemann_residual():
    assert cauchy_riemann_residual(lambda z: z ** 2 + torch.exp(z), 0.3 + 0.2j) < 1e-13
    assert cauchy_riemann_residual(lambda z: torch.stack([z, z ** 3]), 1.0 - 1.0j) < 1e-13
    assert cauchy_riemann_residual(lambda z: torch.conj(z), 0.3 + 0.2j) == pytest.approx(2.0)
