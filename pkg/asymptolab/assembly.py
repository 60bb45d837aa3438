"""Assembly of the solutions from the Borel-plane fixed point: the kernel :math:`\\Omega`, the forcing
:math:`F`, the cone conditions that make Laplace directions admissible, the inner and outer solution
samples, and the deformed-path splitting of sector-to-sector differences.
"""
import logging
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import torch

from .exceptions import (
    InadmissibleDirectionError, InfeasibleConeError, DomainViolationError, OverlapEmptyError,
    StripViolationError, TruncationWarning,
)
from .grids import RayGrid, ArcGrid, sector_samples
from .operators import complex_leaf, t_operator, cauchy_riemann_residual
from .problem import Annulus, CheckResult, ValidationReport, at_imaginary
from .borel import borel_sectors
from .transforms import QuadratureResult, fourier_matrix, convolution_matrix
from .utils import wrap_angle, arg_distance, to_complex_tensor

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


def ipow(z, n):
    """Integer power by repeated squaring (keeps autograd graphs free of complex logarithms)."""
    if n < 0:
        return 1 / ipow(z, -n)
    result, base = None, z
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return torch.ones_like(z) if result is None else result


def kernel_exponent(u, T1, T2, spec):
    r""":math:`-(u/T_1)^{k_1} - (u/T_2)^{k_2}`."""
    return -ipow(u / T1, spec.k1) - ipow(u / T2, spec.k2)


def kernel_Omega(u, T1, T2, spec):
    r"""The kernel :math:`\Omega(u, T_1, T_2) = \exp(-(u/T_1)^{k_1} - (u/T_2)^{k_2})`.

    :param u: Borel-plane point(s).
    :type u: complex or `torch.Tensor`
    :param T1: First time variable, nonzero.
    :type T1: complex or `torch.Tensor`
    :param T2: Second time variable, nonzero.
    :type T2: complex or `torch.Tensor`
    :param spec: The problem (for :math:`k_1, k_2`).
    :type spec: `asymptolab.problem.ProblemSpec`
    :rtype: `torch.Tensor`
    """
    u, T1, T2 = to_complex_tensor(u), to_complex_tensor(T1), to_complex_tensor(T2)
    if bool((T1 == 0).any()) or bool((T2 == 0).any()):
        raise ValueError("T1 and T2 must be nonzero")
    return torch.exp(kernel_exponent(u, T1, T2, spec))


# ---------------------------------------------------------------------------------------------------------------------
# Periodic interval arithmetic on the circle [0, 2 pi)
# ---------------------------------------------------------------------------------------------------------------------

def _split(a, b):
    if b - a >= TWO_PI:
        return [(0.0, TWO_PI)]
    a0 = float(np.mod(a, TWO_PI))
    b0 = a0 + (b - a)
    if b0 <= TWO_PI:
        return [(a0, b0)]
    return [(a0, TWO_PI), (0.0, b0 - TWO_PI)]


def _union(intervals):
    merged = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _intersect(first, second):
    out = []
    for a1, b1 in first:
        for a2, b2 in second:
            lo, hi = max(a1, a2), min(b1, b2)
            if lo < hi:
                out.append((lo, hi))
    return _union(out)


def components(intervals):
    """Connected components of a subset of the circle; a component may end past :math:`2\\pi`."""
    parts = _union(intervals)
    if len(parts) > 1 and parts[0][0] <= 0.0 and parts[-1][1] >= TWO_PI:
        head = parts.pop(0)
        parts[-1] = (parts[-1][0], head[1] + TWO_PI)
    return parts


def cone_intervals(phase, k, delta):
    r"""Directions :math:`\xi` with :math:`k(\xi - \varphi) \in (-\pi/2 + \delta, \pi/2 - \delta) \bmod 2\pi`."""
    half = (np.pi / 2 - delta) / k
    out = []
    for n in range(k):
        center = phase + TWO_PI * n / k
        out.extend(_split(center - half, center + half))
    return _union(out)


def sector_intervals(sector):
    return _split(*sector.bounds)


def _phases(spec, t1, t2, eps):
    arg_eps = float(np.angle(complex(eps)))
    return (spec.lambda1 * arg_eps + float(np.angle(complex(t1))),
            spec.lambda2 * arg_eps + float(np.angle(complex(t2))))


def feasible_directions(spec, t1, t2, eps, borel_sector=None, delta=np.pi / 12):
    r"""The directions satisfying both cone conditions for :math:`(t_1, t_2, \epsilon)`, optionally
    restricted to a Borel sector, as sorted disjoint intervals of :math:`[0, 2\pi)`."""
    phi1, phi2 = _phases(spec, t1, t2, eps)
    feasible = _intersect(cone_intervals(phi1, spec.k1, delta), cone_intervals(phi2, spec.k2, delta))
    if borel_sector is not None:
        feasible = _intersect(feasible, sector_intervals(borel_sector))
    return feasible


def _widest_midpoint(intervals):
    parts = components(intervals)
    a, b = max(parts, key=lambda p: p[1] - p[0])
    return wrap_angle((a + b) / 2), b - a


def _infeasible(spec, points, borel_sector, delta, what):
    cones = [(cone_intervals(p1, spec.k1, delta), cone_intervals(p2, spec.k2, delta))
             for p1, p2 in (_phases(spec, *pt) for pt in points[:3])]
    sector = sector_intervals(borel_sector) if borel_sector is not None else [(0.0, TWO_PI)]
    intervals = [cones[0][0], cones[0][1], sector]
    return InfeasibleConeError(
        f"no direction satisfies both cone conditions inside the Borel sector for {what}; "
        f"cone 1: {np.round(intervals[0], 4).tolist()}, cone 2: {np.round(intervals[1], 4).tolist()}, "
        f"sector: {np.round(intervals[2], 4).tolist()}", intervals=intervals,
    )


def select_xi(spec, t1, t2, eps, borel_sector, delta=np.pi / 12):
    r"""Midpoint of the widest feasible direction interval for :math:`(t_1, t_2, \epsilon)`.

    :param spec: The problem.
    :type spec: `asymptolab.problem.ProblemSpec`
    :param borel_sector: The root-free sector :math:`S_d` the direction must lie in.
    :type borel_sector: `asymptolab.problem.Sector`
    :param delta: Cone margin, defaults to :math:`\pi/12`.
    :type delta: float
    :rtype: float
    :raises InfeasibleConeError: If the two cones and the sector have empty intersection.
    """
    feasible = feasible_directions(spec, t1, t2, eps, borel_sector, delta)
    if not feasible:
        raise _infeasible(spec, [(t1, t2, eps)], borel_sector, delta, f"(t1, t2, eps) = ({t1}, {t2}, {eps})")
    return _widest_midpoint(feasible)[0]


def select_common_xi(spec, points, borel_sector, delta=np.pi / 12):
    """A single direction admissible for every ``(t1, t2, eps)`` in ``points``."""
    feasible = sector_intervals(borel_sector) if borel_sector is not None else [(0.0, TWO_PI)]
    for t1, t2, eps in points:
        feasible = _intersect(feasible, feasible_directions(spec, t1, t2, eps, None, delta))
        if not feasible:
            raise _infeasible(spec, list(points), borel_sector, delta, f"{len(points)} sample points")
    return _widest_midpoint(feasible)[0]


def select_xi_pair(spec, t1, t2, eps, sector_h, sector_next, delta=np.pi / 12):
    r"""Directions :math:`(\xi_h, \xi_{h+1})` in :math:`S_{d_h}` and :math:`S_{d_{h+1}}`, taken from one
    connected component of the feasible set when possible."""
    cones = feasible_directions(spec, t1, t2, eps, None, delta)
    if not cones:
        raise _infeasible(spec, [(t1, t2, eps)], sector_h, delta, 'the overlap point')
    for a, b in sorted(components(cones), key=lambda p: p[0] - p[1]):
        part = _split(a, b)
        first = _intersect(part, sector_intervals(sector_h))
        second = _intersect(part, sector_intervals(sector_next))
        if first and second:
            return _widest_midpoint(first)[0], _widest_midpoint(second)[0]
    return select_xi(spec, t1, t2, eps, sector_h, delta), select_xi(spec, t1, t2, eps, sector_next, delta)


# ---------------------------------------------------------------------------------------------------------------------
# Admissible sets and inner domains
# ---------------------------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleSet:
    r"""Sectors :math:`\mathcal{T}_1` (bounded) and :math:`\mathcal{T}_2` (unbounded), a good covering and one
    root-free Borel sector :math:`S_{d_h}` per covering sector (None where no sector is admissible).

    ``T1_sectors`` and ``T2_sectors`` hold the time sectors turned for each covering sector; without them
    every covering sector uses ``T1`` and ``T2`` as given.
    """
    T1: object
    T2: object
    covering: object
    borel_sectors: Tuple[Optional[object], ...]
    delta: float
    slack: Tuple[float, ...]
    T1_sectors: Optional[Tuple[object, ...]] = None
    T2_sectors: Optional[Tuple[object, ...]] = None

    def sector_for(self, h):
        sector = self.borel_sectors[h % self.covering.iota]
        if sector is None:
            raise InfeasibleConeError(f"covering sector {h} has no admissible Borel direction")
        return sector

    def T1_for(self, h):
        return self.T1 if self.T1_sectors is None else self.T1_sectors[h % self.covering.iota]

    def T2_for(self, h):
        return self.T2 if self.T2_sectors is None else self.T2_sectors[h % self.covering.iota]

    def pair_direction(self, h):
        r"""A direction admissible in :math:`S_{d_h}` and :math:`S_{d_{h+1}}` alike: their common bisector, or
        the root direction halfway between two neighbouring ones."""
        first, second = self.sector_for(h), self.sector_for(h + 1)
        return wrap_angle(first.direction + wrap_angle(second.direction - first.direction) / 2)

    @property
    def feasible(self):
        return [s is not None for s in self.borel_sectors]


def _eps_samples(sector, n_eps):
    radius = sector.radius / 2 if np.isfinite(sector.radius) else 0.5
    return [radius * np.exp(1j * a) for a in sector.direction + 0.999 * sector.half_opening * np.linspace(-1, 1, n_eps)]


def _time_samples(T1, T2, t2_radius, n_t):
    t1 = sector_samples(T1, 2, n_t, r_max=T1.radius if np.isfinite(T1.radius) else 1.0)
    t2 = sector_samples(T2, 2, n_t, r_max=T2.radius if np.isfinite(T2.radius) else t2_radius)
    return t1, t2


def inner_half_opening(spec, sector, chi2, pad=0.01):
    r"""Half opening of a :math:`\mathcal{T}_2` holding :math:`x_2\epsilon^{-\mu_2}e^{i\theta}` for every
    :math:`x_2 \in \chi_2` and :math:`\epsilon` in ``sector``."""
    return (chi2.beta - chi2.alpha) / 2 + spec.mu2 * sector.half_opening + pad


def turned_sectors(spec, T1, T2, d, eps_direction, t2_half_opening=None):
    r"""``T1`` and ``T2`` turned so that :math:`\arg(\epsilon^{\lambda_j} t_j) = d` plus the configured
    direction when :math:`\arg\epsilon` and :math:`\arg t_j` sit on the bisectors."""
    t1 = replace(T1, direction=d - spec.lambda1 * eps_direction + T1.direction)
    t2 = replace(T2, direction=d - spec.lambda2 * eps_direction + T2.direction,
                 half_opening=T2.half_opening if t2_half_opening is None else t2_half_opening)
    return t1, t2


def _sample_slack(spec, borel_sector, T1, T2, eps_list, n_t, t2_radius, delta):
    """Smallest width of the widest feasible interval over the samples; 0 as soon as one sample has none."""
    t1s, t2s = _time_samples(T1, T2, t2_radius, n_t)
    slack = np.inf
    for eps in eps_list:
        for t1 in t1s:
            for t2 in t2s:
                feasible = feasible_directions(spec, t1, t2, eps, borel_sector, delta)
                if not feasible:
                    return 0.0
                slack = min(slack, _widest_midpoint(feasible)[1])
    return float(slack)


def build_admissible_set(spec, covering, T1, T2, m_grid, delta=np.pi / 12, n_t=3, t2_radius=1.0, chi2=None,
                         n_eps=3):
    r"""Pick a root-free Borel sector :math:`S_{d_h}` for every covering sector :math:`h` and turn the time
    sectors towards it.

    Candidates are tried by increasing distance of their bisector from :math:`\lambda_2 d(h) +` the direction
    of ``T2``, where :math:`d(h)` is the bisector of sector :math:`h`. For each, :math:`\mathcal{T}_j` is turned
    so that the cone phases meet at the candidate bisector, and the first candidate for which every sampled
    :math:`(t_1, t_2, \epsilon)` (with :math:`\arg\epsilon` spread over the sector) admits a direction inside it
    is kept. The direction itself may differ from sample to sample. Sectors without one are logged and left
    infeasible.

    :param chi2: The inner domain :math:`\chi_2`. If given, :math:`\mathcal{T}_2` is widened in every sector to
        hold :math:`x_2\epsilon^{-\mu_2}e^{i\theta_h}`, see :func:`inner_half_opening`.
    :type chi2: `asymptolab.problem.Annulus`, optional
    :rtype: AdmissibleSet
    """
    candidates = borel_sectors(spec, m_grid)
    chosen, slacks, t1_sectors, t2_sectors = [], [], [], []
    for h in range(covering.iota):
        s = covering[h]
        half = None if chi2 is None else max(T2.half_opening, inner_half_opening(spec, s, chi2))
        target = spec.lambda2 * s.direction + T2.direction
        ordered = sorted(candidates, key=lambda c: (round(float(arg_distance(c.direction, target)), 9), c.direction))
        eps_list = _eps_samples(s, n_eps)
        best, best_slack, turned = None, 0.0, None
        for sector in ordered:
            t1_h, t2_h = turned_sectors(spec, T1, T2, sector.direction, s.direction, half)
            turned = turned or (t1_h, t2_h)
            slack = _sample_slack(spec, sector, t1_h, t2_h, eps_list, n_t, t2_radius, delta)
            if slack > 0:
                best, best_slack, turned = sector, slack, (t1_h, t2_h)
                break
        if best is None:
            logger.error(f"covering sector {h} (direction {s.direction:.4f}) admits no Borel direction")
        chosen.append(best)
        slacks.append(float(best_slack))
        t1_sectors.append(turned[0])
        t2_sectors.append(turned[1])
    logger.info(f"admissible set: {sum(s is not None for s in chosen)}/{covering.iota} sectors feasible, "
                f"smallest slack {min(slacks):.4g}")
    return AdmissibleSet(T1=T1, T2=T2, covering=covering, borel_sectors=tuple(chosen), delta=delta,
                         slack=tuple(slacks), T1_sectors=tuple(t1_sectors), T2_sectors=tuple(t2_sectors))


def validate_admissible_set(spec, admissible, n_eps=5, n_t=3, t2_radius=1.0):
    r"""Check pointwise feasibility on a finer sample of :math:`\epsilon` arguments across each sector."""
    checks = []
    for h, sector in enumerate(admissible.borel_sectors):
        if sector is None:
            checks.append(CheckResult(f'admissible-h{h}', False, 'no Borel direction selected'))
            continue
        t1s, t2s = _time_samples(admissible.T1_for(h), admissible.T2_for(h), t2_radius, n_t)
        bad = []
        for eps in _eps_samples(admissible.covering[h], n_eps):
            for t1 in t1s:
                for t2 in t2s:
                    if not feasible_directions(spec, t1, t2, eps, sector, admissible.delta):
                        bad.append((round(float(np.angle(eps)), 4), complex(t1), complex(t2)))
        checks.append(CheckResult(f'admissible-h{h}', not bad,
                                  f"infeasible samples: {bad[:3]}" if bad else f"d_h = {sector.direction:.6g}"))
    return ValidationReport(tuple(checks))


@dataclass(frozen=True)
class InnerDomain:
    r"""The bounded domain :math:`\chi_2` of the inner variable :math:`x_2` and the rotations
    :math:`\theta_h` so that :math:`t_2 = x_2 \epsilon^{-\mu_2} e^{i\theta_h}` lies in :math:`\mathcal{T}_2`
    of sector :math:`h`."""
    chi2: Annulus
    theta: Tuple[float, ...]
    mu2: int
    T2: Tuple[object, ...]

    @classmethod
    def build(cls, spec, admissible, chi2):
        r""":math:`\theta_h` puts :math:`t_2` on the bisector of :math:`\mathcal{T}_2` for the central :math:`x_2`
        and :math:`\epsilon` on the bisector of sector :math:`h`.

        :param admissible: The admissible set of the plain covering.
        :type admissible: AdmissibleSet
        """
        center = (chi2.alpha + chi2.beta) / 2
        covering = admissible.covering
        T2 = tuple(admissible.T2_for(h) for h in range(covering.iota))
        theta = tuple(float(T2[h].direction - center + spec.mu2 * covering[h].direction) for h in range(covering.iota))
        return cls(chi2=chi2, theta=theta, mu2=spec.mu2, T2=T2)

    def t2(self, x2, eps, h, check=True):
        r""":math:`t_2 = x_2 \epsilon^{-\mu_2} e^{i\theta_h}`.

        :raises DomainViolationError: If ``check`` and some :math:`t_2` falls outside :math:`\mathcal{T}_2`.
        """
        x2 = np.asarray(x2, dtype=complex)
        t2 = x2 * complex(eps) ** (-self.mu2) * np.exp(1j * self.theta[h % len(self.theta)])
        if check:
            inside = np.asarray(self.T2[h % len(self.T2)].contains(t2))
            if not inside.all():
                raise DomainViolationError(
                    f"t2 = x2 eps^-mu2 e^(i theta_{h}) leaves T2 for eps = {complex(eps):.4g} at "
                    f"x2 = {np.atleast_1d(x2)[~np.atleast_1d(inside)][:3].tolist()}"
                )
        return t2

    def samples(self, n_radial, n_angular):
        chi = self.chi2
        radii = np.linspace(chi.r1, chi.r2, n_radial)
        angles = np.linspace(chi.alpha, chi.beta, n_angular) if n_angular > 1 else np.array([(chi.alpha + chi.beta) / 2])
        return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()

    def min_distance(self, eps):
        return self.chi2.r1 * abs(complex(eps)) ** (-self.mu2)


# ---------------------------------------------------------------------------------------------------------------------
# Laplace-Fourier representations
# ---------------------------------------------------------------------------------------------------------------------

def forcing_F(psi, T1, T2, m, eps, gamma, spec, r_min=1e-12, ratio=1.05, max_doublings=12, tol=1e-12):
    r"""The forcing :math:`F(T_1, T_2, m, \epsilon) = \int_{L_\gamma} \psi(u, m, \epsilon)\, \Omega(u, T_1, T_2)\, du/u`.

    :param psi: The Borel-plane forcing.
    :type psi: `asymptolab.problem.ForcingSpec`
    :param m: Frequencies.
    :type m: `torch.Tensor` or `numpy.ndarray`
    :param gamma: The direction of integration.
    :type gamma: float
    :return: Values shaped like ``m`` and the truncation tail.
    :rtype: `asymptolab.transforms.QuadratureResult`
    :raises InadmissibleDirectionError: If :math:`\cos(k_j(\gamma - \arg T_j)) \le 0` for some :math:`j`;
        the error suggests a rotated direction.
    """
    T1, T2 = complex(T1), complex(T2)
    damping = [np.cos(spec.k1 * (gamma - np.angle(T1))), np.cos(spec.k2 * (gamma - np.angle(T2)))]
    if min(damping) <= 0:
        feasible = _intersect(cone_intervals(np.angle(T1), spec.k1, 0.0), cone_intervals(np.angle(T2), spec.k2, 0.0))
        suggestion = _widest_midpoint(feasible)[0] if feasible else None
        raise InadmissibleDirectionError(
            f"direction gamma = {gamma:.6g} is not admissible for T1 = {T1:.4g}, T2 = {T2:.4g}"
            + (f"; try gamma = {suggestion:.6g}" if suggestion is not None else ''),
            suggestion=suggestion,
        )
    m = torch.as_tensor(m, dtype=torch.float64).reshape(1, -1)
    scale = min(abs(T1) * (40 / damping[0]) ** (1 / spec.k1), abs(T2) * (40 / damping[1]) ** (1 / spec.k2))
    r_max = scale
    for _ in range(max_doublings + 1):
        ray = RayGrid.geometric(gamma, r_min, r_max, ratio)
        u = ray.tau_tensor()
        integrand = psi(u.reshape(-1, 1), m, to_complex_tensor(eps)) * kernel_Omega(u, T1, T2, spec).reshape(-1, 1)
        magnitude = integrand.abs().max(dim=1).values
        if float(magnitude[-1]) <= 1e-16 * float(magnitude.max()):
            break
        r_max *= 2
    value = (ray.weight_tensor().reshape(-1, 1) * integrand).sum(dim=0)
    tail = float(magnitude[-1]) * abs(T1) ** spec.k1 / (damping[0] * ray.r_max ** spec.k1)
    if tail > tol * max(1.0, float(value.abs().max())):
        warnings.warn(f"forcing tail estimate {tail:.3g} exceeds {tol:.3g}", TruncationWarning)
    return QuadratureResult(value.reshape(-1), tail)


def _laplace_sum(taus, weights, values, T1, T2, spec):
    r"""Matrix of :math:`\sum_i w_i \omega(\tau_i, m) \Omega(\tau_i, T_1^{(p)}, T_2^{(p)})`, shape ``(n_m, n_points)``."""
    T1 = to_complex_tensor(T1).reshape(1, -1)
    T2 = to_complex_tensor(T2).reshape(1, -1)
    kernel = torch.exp(kernel_exponent(taus.reshape(-1, 1), T1, T2, spec))
    return (weights.reshape(-1, 1) * values).transpose(0, 1) @ kernel


def solution_U(omega, T1, T2, xi, spec, m=None):
    r""":math:`U(T_1, T_2, m) = \int_{L_\xi} \omega(u, m)\, \Omega(u, T_1, T_2)\, du/u` by ray quadrature.

    :param omega: The Borel-plane solution; must hold an unbounded ray of direction ``xi``.
    :type omega: `asymptolab.borel.GridFunction`
    :param xi: The direction.
    :type xi: float
    :param m: If given, a single frequency (a grid node) to return.
    :type m: float, optional
    :return: Values over the frequency grid (or at ``m``) and a tail estimate.
    :rtype: `asymptolab.transforms.QuadratureResult`
    :raises DirectionUnavailableError: If ``omega`` has no ray of direction ``xi``.
    """
    ray, values = omega.ray(xi)
    u = ray.tau_tensor()
    U = _laplace_sum(u, ray.weight_tensor(), values, T1, T2, spec).reshape(-1)
    last = (values[-1].abs() * torch.exp(kernel_exponent(u[-1], to_complex_tensor(T1), to_complex_tensor(T2),
                                                         spec)).abs()).max()
    T1c = complex(T1)
    damping = max(np.cos(spec.k1 * (xi - np.angle(T1c))), 1e-3)
    tail = float(last) * abs(T1c) ** spec.k1 / (damping * ray.r_max ** spec.k1)
    if m is not None:
        U = U[omega.m_grid.index_of(m)]
    return QuadratureResult(U, tail)


def _check_strip(z, beta_prime):
    z = np.asarray(z, dtype=complex)
    if z.size and np.abs(z.imag).max() >= beta_prime:
        raise StripViolationError(f"|Im z| = {np.abs(z.imag).max():.6g} is not below beta' = {beta_prime}")


@dataclass
class SolutionSample:
    r"""Values :math:`u(t_1, t_2, z, \epsilon)` on a product grid for one covering sector and one :math:`\epsilon`.

    ``values`` has shape ``(len(t1), len(t2), len(z))``; for inner samples ``t2`` holds the effective
    :math:`x_2 \epsilon^{-\mu_2} e^{i\theta_h}` and ``x2`` the inner variable.
    """
    kind: str
    h: int
    eps: complex
    t1: np.ndarray
    t2: np.ndarray
    z: np.ndarray
    values: np.ndarray
    xi: np.ndarray
    x2: Optional[np.ndarray] = None

    @property
    def sup(self):
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def to_frame(self):
        i, j, k = np.meshgrid(np.arange(len(self.t1)), np.arange(len(self.t2)), np.arange(len(self.z)), indexing='ij')
        i, j, k = i.ravel(), j.ravel(), k.ravel()
        t1, t2, z, u = self.t1[i], self.t2[j], self.z[k], self.values.ravel()
        return pd.DataFrame(dict(
            h=self.h, eps_re=self.eps.real, eps_im=self.eps.imag,
            t1_re=t1.real, t1_im=t1.imag, t2_re=t2.real, t2_im=t2.imag,
            z_re=z.real, z_im=z.imag, u_re=u.real, u_im=u.imag,
        ))


def _sample(spec, solver, borel_sector, h, eps, t1s, t2s, zs, beta_prime, delta, omega=None, kind='outer',
            x2=None):
    _check_strip(zs, beta_prime)
    eps = complex(eps)
    t1s = np.atleast_1d(np.asarray(t1s, dtype=complex))
    t2s = np.atleast_1d(np.asarray(t2s, dtype=complex))
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    xi = np.array([[select_xi(spec, t1, t2, eps, borel_sector, delta) for t2 in t2s] for t1 in t1s])
    unique = sorted(set(np.round(xi.ravel(), 12).tolist()))
    if omega is None:
        omega = solver.solve(eps, directions=unique).omega
    grid = omega.m_grid
    E = fourier_matrix(grid, torch.as_tensor(zs))
    values = np.zeros((len(t1s), len(t2s), len(zs)), dtype=complex)
    for direction in unique:
        ray, w_values = omega.ray(direction)
        mask = np.isclose(np.round(xi, 12), direction, rtol=0, atol=1e-12)
        i, j = np.nonzero(mask)
        T1 = torch.as_tensor(eps ** spec.lambda1 * t1s[i])
        T2 = torch.as_tensor(eps ** spec.lambda2 * t2s[j])
        U = _laplace_sum(ray.tau_tensor(), ray.weight_tensor(), w_values, T1, T2, spec)
        values[i, j, :] = (E @ U).transpose(0, 1).detach().numpy()
    sample = SolutionSample(kind=kind, h=h, eps=eps, t1=t1s, t2=t2s, z=zs, values=values, xi=xi, x2=x2)
    logger.debug(f"{kind} sample h = {h}, eps = {eps:.4g}: sup |u| = {sample.sup:.6g}")
    return sample


def outer_solution(spec, solver, admissible, h, eps, t1s, t2s, zs, beta_prime=None, rho2=1.0, omega=None):
    r"""Outer solution :math:`u(t_1, t_2, z, \epsilon) = \mathcal{F}^{-1}[U(\epsilon^{\lambda_1}t_1,
    \epsilon^{\lambda_2}t_2, \cdot, \epsilon)](z)` for :math:`\epsilon` in sector ``h`` of the covering.

    :param solver: Solver of the Borel-plane equation.
    :type solver: `asymptolab.borel.BorelSolver`
    :param admissible: The admissible set (opening-constrained covering).
    :type admissible: AdmissibleSet
    :param t1s: Points of :math:`\mathcal{T}_1`.
    :param t2s: Points of :math:`\mathcal{T}_2 \cap D(0, \rho_2)`.
    :param zs: Points of the strip :math:`H_{\beta'}`.
    :param beta_prime: Half width of the strip, defaults to :math:`\beta/2`.
    :type beta_prime: float, optional
    :param omega: A precomputed solution holding the needed rays; solved on demand otherwise.
    :type omega: `asymptolab.borel.GridFunction`, optional
    :rtype: SolutionSample
    :raises DomainViolationError: If ``eps`` is not in sector ``h`` or some :math:`t_2` lies outside
        :math:`\mathcal{T}_2 \cap D(0, \rho_2)`.
    """
    beta_prime = spec.beta / 2 if beta_prime is None else beta_prime
    if not admissible.covering[h].contains(complex(eps)):
        raise DomainViolationError(f"eps = {complex(eps):.4g} is not in covering sector {h}")
    t2s = np.atleast_1d(np.asarray(t2s, dtype=complex))
    if not (np.all(admissible.T2_for(h).contains(t2s)) and np.all(np.abs(t2s) < rho2)):
        raise DomainViolationError(f"outer t2 samples must lie in T2 within |t2| < {rho2}")
    return _sample(spec, solver, admissible.sector_for(h), h, eps, t1s, t2s, zs, beta_prime, admissible.delta,
                   omega=omega, kind='outer')


def inner_solution(spec, solver, admissible, domain, h, eps, t1s, x2s, zs, beta_prime=None, omega=None):
    r"""Inner solution: the outer representation evaluated at :math:`t_2 = x_2 \epsilon^{-\mu_2} e^{i\theta_h}`
    for :math:`x_2` in the bounded domain :math:`\chi_2` and :math:`\epsilon` in sector ``h`` of the plain covering.

    :param domain: The inner domain.
    :type domain: InnerDomain
    :rtype: SolutionSample
    :raises DomainViolationError: If some constructed :math:`t_2` leaves :math:`\mathcal{T}_2`.
    """
    beta_prime = spec.beta / 2 if beta_prime is None else beta_prime
    if not admissible.covering[h].contains(complex(eps)):
        raise DomainViolationError(f"eps = {complex(eps):.4g} is not in covering sector {h}")
    x2s = np.atleast_1d(np.asarray(x2s, dtype=complex))
    t2s = domain.t2(x2s, eps, h)
    return _sample(spec, solver, admissible.sector_for(h), h, eps, t1s, t2s, zs, beta_prime, admissible.delta,
                   omega=omega, kind='inner', x2=x2s)


def fubini_oracle(omega, T1, T2, xi, z, spec):
    r"""The solution at one point with the two integrals nested the other way round: first the inverse
    Fourier transform of :math:`\omega(\tau, \cdot)` at every ray node, then the ray integral (plain numpy)."""
    ray, values = omega.ray(xi)
    grid = omega.m_grid
    values = values.detach().numpy()
    fourier = values @ (grid.weights * np.exp(1j * complex(z) * grid.nodes)) / np.sqrt(2 * np.pi)
    u = np.asarray(ray.taus, dtype=complex)
    kernel = np.exp(-(u / complex(T1)) ** spec.k1 - (u / complex(T2)) ** spec.k2)
    return complex(np.sum(ray.weights * kernel * fourier))


def auxiliary_residual(spec, coefficients, forcing, solver, eps, T1, T2, xi, m_window=None):
    r"""Relative residual of the auxiliary equation satisfied by :math:`U`,

    .. math::
        Q(im)U - R_{D_1D_2}(im)\,(T_1^{k_1+1}\partial_{T_1})^{\delta_{D_1}}(T_2^{k_2+1}\partial_{T_2})^{\delta_{D_2}} U
        = \sum_\ell \epsilon^{e_\ell} (T_1^{k_1+1}\partial_{T_1})^{\delta_{\ell_1}}(T_2^{k_2+1}\partial_{T_2})^{\delta_{\ell_2}}
        \frac{1}{\sqrt{2\pi}}\int C_\ell(m-m_1) R_\ell(im_1) U(m_1)\,dm_1 + F,

    with the :math:`T`-derivatives taken by autograd. The maximum over frequencies (optionally those with
    :math:`|m| \le` ``m_window``) of :math:`|\mathrm{lhs} - \mathrm{rhs}| / (|\text{terms}|)` is returned.
    """
    grid = solver.m_grid
    n_m = grid.size
    ray = RayGrid.geometric(xi, solver.r_min, solver.r_max, solver.ratio)
    taus = ray.tau_tensor()
    omega = solver.solve_points(eps, taus).detach()
    x1, y1, T1s = complex_leaf(np.full(n_m, complex(T1)))
    x2, y2, T2s = complex_leaf(np.full(n_m, complex(T2)))
    kernel = torch.exp(kernel_exponent(taus.reshape(-1, 1), T1s.reshape(1, -1), T2s.reshape(1, -1), spec))
    U = (ray.weight_tensor().reshape(-1, 1) * omega * kernel).sum(dim=0)

    def operators(values, d1, d2):
        for _ in range(d2):
            values = t_operator(values, x2, T2s, spec.k2)
        for _ in range(d1):
            values = t_operator(values, x1, T1s, spec.k1)
        return values

    m = grid.nodes
    q = torch.as_tensor(at_imaginary(spec.Q, m), dtype=torch.complex128)
    r = torch.as_tensor(at_imaginary(spec.R_D, m), dtype=torch.complex128)
    leading = r * operators(U, spec.delta_D1, spec.delta_D2)
    lhs = q * U - leading
    eps_t = to_complex_tensor(eps)
    rhs = forcing(taus.reshape(-1, 1), grid.nodes_tensor.reshape(1, -1), eps_t)
    rhs = (ray.weight_tensor().reshape(-1, 1) * rhs * kernel).sum(dim=0)
    scale = (q * U).abs() + leading.abs() + rhs.abs()
    for l1, l2 in spec.lower_indices:
        if (l1, l2) not in coefficients.coefficients:
            continue
        weight = torch.as_tensor(at_imaginary(spec.R_lower(l1, l2), m), dtype=torch.complex128)
        K = convolution_matrix(lambda s: coefficients(l1, l2, s, eps_t), grid, weight=weight)
        term = eps_t ** spec.eps_exponent(l1, l2) * (K @ operators(U, spec.delta_l1[l1 - 1], spec.delta_l2[l2 - 1]))
        rhs = rhs + term
        scale = scale + term.abs()
    residual = ((lhs - rhs).abs() / scale.clamp_min(1e-300)).detach().numpy()
    if m_window is not None:
        residual = residual[np.abs(m) <= m_window]
    return float(residual.max())


def solution_holomorphy_residual(spec, solver, t1, t2, z, eps, xi):
    r"""Cauchy-Riemann residual of :math:`\epsilon \mapsto u(t_1, t_2, z, \epsilon)` with the direction held fixed."""
    ray = RayGrid.geometric(xi, solver.r_min, solver.r_max, solver.ratio)
    taus = ray.tau_tensor()
    E = fourier_matrix(solver.m_grid, torch.as_tensor([complex(z)]))

    def u(e):
        omega = solver.solve_points(e, taus)
        T1 = e ** spec.lambda1 * complex(t1)
        T2 = e ** spec.lambda2 * complex(t2)
        kernel = torch.exp(kernel_exponent(taus, T1, T2, spec))
        U = (ray.weight_tensor().reshape(-1, 1) * omega * kernel.reshape(-1, 1)).sum(dim=0)
        return E @ U

    return cauchy_riemann_residual(u, complex(eps))


# ---------------------------------------------------------------------------------------------------------------------
# Deformed paths
# ---------------------------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class DeformationResult:
    direct: complex
    E1: complex
    E2: complex
    E3: complex
    log_E1: float
    log_E2: float
    log_E3: float
    mismatch: float
    xi_h: float
    xi_next: float

    @property
    def log_flatness(self):
        r""":math:`\log(|E_1| + |E_2| + |E_3|)`, evaluated without leaving log space."""
        logs = np.array([self.log_E1, self.log_E2, self.log_E3])
        logs = logs[np.isfinite(logs)]
        if logs.size == 0:
            return -np.inf
        top = logs.max()
        return float(top + np.log(np.exp(logs - top).sum()))


def _shifted_piece(solver, eps, path, T1, T2, spec, E):
    """``(value * exp(-shift), shift)`` of the inverse Fourier transform of one path integral."""
    taus = path.tau_tensor()
    exponent = kernel_exponent(taus, to_complex_tensor(T1), to_complex_tensor(T2), spec)
    shift = float(exponent.real.max())
    omega = solver.solve_points(eps, taus).detach()
    weights = path.weight_tensor() * torch.exp(exponent - shift)
    U = (weights.reshape(-1, 1) * omega).sum(dim=0)
    return complex((E @ U).reshape(-1)[0]), shift


def _log_abs(value, shift):
    return float(np.log(abs(value)) + shift) if value != 0 else -np.inf


def _restore(value, shift):
    return value * np.exp(shift) if shift > -700 else 0j


def difference_deformed(spec, solver, covering, admissible, h, t1, t2, z, eps, rho=None, xi=None, r_max=None,
                        panel_ratio=1.05, order=16, arc_order=64, tol=1e-8):
    r"""The difference :math:`u_{h+1} - u_h` of two consecutive solutions at one point, computed directly
    (two full rays) and through the deformed path :math:`E_1 - E_2 + E_3`: :math:`E_1, E_2` integrate from
    :math:`\rho/2` to infinity along :math:`\xi_{h+1}, \xi_h` and :math:`E_3` along the arc of radius
    :math:`\rho/2` from :math:`\xi_h` to :math:`\xi_{h+1}`.

    :param xi: Directions :math:`(\xi_h, \xi_{h+1})`; selected from the admissible set if omitted.
    :type xi: tuple[float], optional
    :return: The pieces, their log-magnitudes and the mismatch :math:`|\mathrm{direct} - (E_1 - E_2 + E_3)|`.
    :rtype: DeformationResult
    :raises OverlapEmptyError: If ``eps`` is not in the overlap of sectors ``h`` and ``h + 1``.
    """
    eps = complex(eps)
    if not covering.overlap(h).contains(eps):
        raise OverlapEmptyError(f"eps = {eps:.4g} is not in the overlap of sectors {h} and {(h + 1) % covering.iota}")
    rho = solver.direction.rho if rho is None else rho
    r_max = solver.r_max if r_max is None else r_max
    if xi is None:
        xi = select_xi_pair(spec, t1, t2, eps, admissible.sector_for(h), admissible.sector_for(h + 1),
                            admissible.delta)
    xi_h, xi_next = xi
    T1 = eps ** spec.lambda1 * complex(t1)
    T2 = eps ** spec.lambda2 * complex(t2)
    E = fourier_matrix(solver.m_grid, torch.as_tensor([complex(z)]))

    full = [RayGrid.geometric(x, solver.r_min, r_max, solver.ratio) for x in (xi_h, xi_next)]
    u_h, s_h = _shifted_piece(solver, eps, full[0], T1, T2, spec, E)
    u_next, s_next = _shifted_piece(solver, eps, full[1], T1, T2, spec, E)
    direct = _restore(u_next, s_next) - _restore(u_h, s_h)

    half = rho / 2
    outer = [RayGrid.gauss(x, half, r_max, panel_ratio=panel_ratio, order=order, from_origin=False)
             for x in (xi_next, xi_h)]
    e1, s1 = _shifted_piece(solver, eps, outer[0], T1, T2, spec, E)
    e2, s2 = _shifted_piece(solver, eps, outer[1], T1, T2, spec, E)
    sweep = wrap_angle(xi_next - xi_h)
    if abs(sweep) > 1e-14:
        arc = ArcGrid(half, xi_h, xi_h + sweep, order=arc_order)
        e3, s3 = _shifted_piece(solver, eps, arc, T1, T2, spec, E)
    else:
        e3, s3 = 0j, -np.inf
    E1, E2, E3 = _restore(e1, s1), _restore(e2, s2), (_restore(e3, s3) if np.isfinite(s3) else 0j)
    mismatch = abs(direct - (E1 - E2 + E3))
    if mismatch > tol:
        warnings.warn(f"deformation identity off by {mismatch:.3g} (> {tol:.3g}) at eps = {eps:.4g}",
                      TruncationWarning)
    return DeformationResult(
        direct=direct, E1=E1, E2=E2, E3=E3,
        log_E1=_log_abs(e1, s1), log_E2=_log_abs(e2, s2),
        log_E3=_log_abs(e3, s3) if np.isfinite(s3) else -np.inf,
        mismatch=float(mismatch), xi_h=float(xi_h), xi_next=float(xi_next),
    )
