"""Formal Borel transforms of truncated series, Laplace transforms along rays,
the inverse Fourier transform on exponentially decaying frequency functions and frequency convolution.
"""
import logging
import warnings
from typing import NamedTuple

import numpy as np
import torch
from scipy.special import gamma

from .exceptions import InadmissibleDirectionError, StripViolationError, TruncationWarning
from .grids import RayGrid
from .utils import wrap_angle

logger = logging.getLogger(__name__)

SQRT_2PI = float(np.sqrt(2 * np.pi))


class QuadratureResult(NamedTuple):
    value: object
    tail: float


class TruncatedSeries:
    r"""A truncated series :math:`\sum_{n=1}^N f_n t^n` without constant term.

    :param coeffs: The coefficients :math:`f_1, \dots, f_N`.
    :type coeffs: list or `numpy.ndarray`
    """

    def __init__(self, coeffs):
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=complex))
        if coeffs.ndim != 1 or len(coeffs) < 1:
            raise ValueError("a truncated series needs at least one coefficient")
        self.coeffs = coeffs

    @property
    def N(self):
        return len(self.coeffs)

    @classmethod
    def monomial(cls, n, N=None):
        coeffs = np.zeros(max(n, N or n), dtype=complex)
        coeffs[n - 1] = 1.0
        return cls(coeffs)

    def coefficient(self, n):
        return self.coeffs[n - 1] if 1 <= n <= self.N else 0j

    def __call__(self, t):
        result = 0
        for c in self.coeffs[::-1]:
            result = (result + c) * t
        return result

    def _padded(self, other):
        n = max(self.N, other.N)
        a = np.zeros(n, dtype=complex)
        b = np.zeros(n, dtype=complex)
        a[:self.N] = self.coeffs
        b[:other.N] = other.coeffs
        return a, b

    def __add__(self, other):
        a, b = self._padded(other)
        return TruncatedSeries(a + b)

    def __mul__(self, scalar):
        return TruncatedSeries(self.coeffs * scalar)

    __rmul__ = __mul__

    def t_operator(self, k):
        r"""The series of :math:`t^{k+1}\partial_t f`, that is :math:`\sum_n n f_n t^{n+k}`."""
        coeffs = np.zeros(self.N + k, dtype=complex)
        coeffs[k:] = np.arange(1, self.N + 1) * self.coeffs
        return TruncatedSeries(coeffs)

    def __repr__(self):
        return f'TruncatedSeries(N={self.N})'


def formal_borel_mk(series, k):
    r"""The formal :math:`m_k`-Borel transform :math:`\sum_n f_n \tau^n / \Gamma(n/k)`.

    :param series: The series to transform.
    :type series: TruncatedSeries
    :param k: Order of the transform, a positive integer.
    :type k: int
    :rtype: TruncatedSeries
    """
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    n = np.arange(1, series.N + 1)
    return TruncatedSeries(series.coeffs / gamma(n / k))


def borel_multiplier(series, k):
    r""":math:`k\tau^k` times a Borel-plane series; the Borel image of :math:`t^{k+1}\partial_t`."""
    coeffs = np.zeros(series.N + k, dtype=complex)
    coeffs[k:] = k * series.coeffs
    return TruncatedSeries(coeffs)


def _as_values(f, points):
    if callable(f):
        return torch.as_tensor(f(points)).to(torch.complex128)
    return torch.as_tensor(f).to(torch.complex128)


def laplace_mk_ray(f, k, t, direction=0.0, delta1=0.25, grid=None, tol=1e-12, r_min=1e-12, ratio=1.05,
                   max_doublings=12):
    r"""The :math:`m_k`-Laplace transform :math:`k\int_{L_\xi} f(u) e^{-(u/t)^k}\, du/u` along the ray of
    direction :math:`\xi`.

    When ``f`` is callable and no grid is given, the truncation radius starts where the damping reaches
    :math:`e^{-40}` and doubles until the integrand at the last node is below :math:`10^{-16}` of its peak.

    :param f: A function of a complex tensor, or its values on ``grid``.
    :type f: callable or `torch.Tensor`
    :param k: Order of the transform.
    :type k: int
    :param t: The point of evaluation.
    :type t: complex
    :param direction: The direction :math:`\xi`, defaults to 0.
    :type direction: float
    :param delta1: Admissibility margin; requires :math:`\cos(k(\xi - \arg t)) > \delta_1`, defaults to 0.25.
    :type delta1: float
    :param grid: The ray grid; required when ``f`` is given by values.
    :type grid: `asymptolab.grids.RayGrid`, optional
    :param tol: Tolerance for the tail estimate, defaults to 1e-12.
    :type tol: float
    :return: The value and the estimated truncation tail.
    :rtype: QuadratureResult
    :raises InadmissibleDirectionError: If the direction violates the admissibility margin.
    """
    t = complex(t)
    if grid is not None:
        direction = grid.direction
    damping = np.cos(k * (direction - np.angle(t)))
    if damping <= delta1:
        raise InadmissibleDirectionError(
            f"cos(k (xi - arg t)) = {damping:.6g} <= delta1 = {delta1} for xi = {direction:.6g}, arg t = "
            f"{np.angle(t):.6g}", suggestion=wrap_angle(np.angle(t)),
        )
    if grid is None and not callable(f):
        raise ValueError("values of f need the grid they were sampled on")

    r_max = abs(t) * (40.0 / damping) ** (1.0 / k) if grid is None else grid.r_max
    for attempt in range(max_doublings + 1):
        ray = grid if grid is not None else RayGrid.geometric(direction, r_min, r_max, ratio)
        u = ray.tau_tensor()
        integrand = _as_values(f, u) * torch.exp(-(u / t) ** k)
        magnitude = integrand.abs()
        peak = float(magnitude.max())
        if grid is not None or float(magnitude[-1]) <= 1e-16 * peak:
            break
        r_max *= 2
    value = k * torch.sum(ray.weight_tensor() * integrand)
    tail = float(magnitude[-1]) * abs(t) ** k / (damping * ray.r_max ** k)
    if tail > tol * max(1.0, float(value.abs())):
        warnings.warn(f"Laplace tail estimate {tail:.3g} exceeds tolerance {tol:.3g}", TruncationWarning)
    return QuadratureResult(value, tail)


def fourier_matrix(grid, z):
    r"""Matrix :math:`E_{ij} = w_j e^{i z_i m_j} / \sqrt{2\pi}` so that ``E @ values`` is the inverse
    Fourier transform at the points ``z`` (differentiable with respect to ``z``)."""
    z = torch.as_tensor(z).to(torch.complex128).reshape(-1, 1)
    m = grid.nodes_tensor.reshape(1, -1)
    return torch.exp(1j * z * m) * grid.weights_tensor.reshape(1, -1) / SQRT_2PI


def inverse_fourier(f, grid, z, beta, mu=0.0, tol=None):
    r"""The inverse Fourier transform :math:`\frac{1}{\sqrt{2\pi}}\int f(m) e^{izm}\, dm` by the trapezoid rule.

    :param f: A function of a real tensor of frequencies, or values on the grid (first axis).
    :type f: callable or `torch.Tensor`
    :param grid: The frequency grid.
    :type grid: `asymptolab.grids.FrequencyGrid`
    :param z: Evaluation point(s), :math:`|\mathrm{Im}\, z| < \beta`.
    :type z: complex or `torch.Tensor`
    :param beta: Exponential decay rate of ``f``.
    :type beta: float
    :param mu: Polynomial decay rate of ``f``, defaults to 0.
    :type mu: float
    :param tol: If given, a truncation warning is issued when the tail estimate exceeds it.
    :type tol: float, optional
    :return: Values shaped like ``z`` (times trailing value axes) and the tail estimate
        :math:`C (1+M)^{-\mu} e^{-(\beta - |\mathrm{Im}\, z|)M}`.
    :rtype: QuadratureResult
    :raises StripViolationError: If some :math:`|\mathrm{Im}\, z| \ge \beta`.
    """
    z = torch.as_tensor(z).to(torch.complex128)
    max_imag = float(z.imag.abs().max()) if z.numel() else 0.0
    if max_imag >= beta:
        raise StripViolationError(f"|Im z| = {max_imag:.6g} is not below beta = {beta}")
    values = _as_values(f, grid.nodes_tensor)
    flat = values.reshape(grid.size, -1)
    result = (fourier_matrix(grid, z) @ flat).reshape(tuple(z.shape) + tuple(values.shape[1:]))

    m = grid.nodes
    weight = (1 + np.abs(m)) ** mu * np.exp(beta * np.abs(m))
    scale = float(np.max(weight[:, None] * flat.detach().abs().numpy())) if flat.numel() else 0.0
    rate = beta - max_imag
    tail = 2 * scale * grid.tail_bound(beta, mu, max_imag) / (rate * SQRT_2PI)
    if tol is not None and tail > tol:
        warnings.warn(f"Fourier tail estimate {tail:.3g} exceeds tolerance {tol:.3g}", TruncationWarning)
    return QuadratureResult(result, tail)


def interpolate_linear(values, grid, points):
    """Piecewise linear interpolation of grid values at arbitrary real points, zero outside the grid."""
    values = torch.as_tensor(values)
    points = torch.as_tensor(points, dtype=torch.float64)
    s = (points + grid.cutoff) / grid.spacing
    idx = torch.clamp(torch.floor(s).long(), 0, grid.size - 2)
    frac = (s - idx).to(values.dtype)
    result = (1 - frac) * values[idx] + frac * values[idx + 1]
    inside = (points >= -grid.cutoff - 1e-12) & (points <= grid.cutoff + 1e-12)
    return torch.where(inside, result, torch.zeros_like(result))


def convolution_matrix(f, grid, weight=None):
    r"""Matrix :math:`K_{ji} = w_i f(m_j - m_i)\, c_i / \sqrt{2\pi}` of the frequency convolution, where
    :math:`c_i` is an optional weight folded into the second factor.

    :param f: A function of a real tensor, or its values on the grid (interpolated linearly off the grid).
    :type f: callable or `torch.Tensor`
    :param grid: The frequency grid.
    :type grid: `asymptolab.grids.FrequencyGrid`
    :param weight: Values :math:`c_i` on the grid, defaults to 1.
    :type weight: `torch.Tensor`, optional
    :rtype: `torch.Tensor`
    """
    m = grid.nodes_tensor
    shifts = m.reshape(-1, 1) - m.reshape(1, -1)
    if callable(f):
        kernel = torch.as_tensor(f(shifts)).to(torch.complex128)
    else:
        kernel = interpolate_linear(torch.as_tensor(f).to(torch.complex128), grid, shifts)
    kernel = kernel * grid.weights_tensor.reshape(1, -1)
    if weight is not None:
        kernel = kernel * torch.as_tensor(weight).to(torch.complex128).reshape(1, -1)
    return kernel / SQRT_2PI


def convolve_frequency(f, g, grid, g_grid=None):
    r"""The convolution :math:`\psi(m) = \frac{1}{\sqrt{2\pi}}\int f(m - m_1) g(m_1)\, dm_1` on the grid.

    :param f: A function of a real tensor, or values on ``grid``.
    :type f: callable or `torch.Tensor`
    :param g: Values on the grid (first axis) or a function.
    :type g: callable or `torch.Tensor`
    :param grid: The shared frequency grid.
    :type grid: `asymptolab.grids.FrequencyGrid`
    :param g_grid: The grid ``g`` lives on, checked against ``grid``.
    :type g_grid: `asymptolab.grids.FrequencyGrid`, optional
    :rtype: `torch.Tensor`
    :raises GridMismatchError: If ``g_grid`` differs from ``grid``.
    """
    if g_grid is not None:
        grid.check_compatible(g_grid)
    values = _as_values(g, grid.nodes_tensor)
    return convolution_matrix(f, grid) @ values
