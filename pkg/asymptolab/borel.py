"""Root geometry of the Borel-plane denominator, the choice of a root-free direction, and the
fixed-point solution :math:`\\omega(\\tau, m, \\epsilon)` of the Borel-plane equation.

The map whose fixed point is computed reads

.. math::
    \\omega \\mapsto \\frac{1}{P_m(\\tau)}\\Big(\\sum_{\\ell} \\epsilon^{e_\\ell}
    (k_1\\tau^{k_1})^{\\delta_{\\ell_1}}(k_2\\tau^{k_2})^{\\delta_{\\ell_2}}
    \\frac{1}{\\sqrt{2\\pi}}\\int C_\\ell(m - m_1, \\epsilon) R_\\ell(im_1)\\,\\omega(\\tau, m_1)\\,dm_1
    + \\psi(\\tau, m, \\epsilon)\\Big),

with :math:`P_m(\\tau) = Q(im) - k_1^{\\delta_{D_1}}k_2^{\\delta_{D_2}}\\tau^{k_1\\delta_{D_1}+k_2\\delta_{D_2}}R_{D_1D_2}(im)`.
It acts pointwise in :math:`\\tau`, so the fixed point can be computed on any set of nodes.
"""
import logging
import warnings
from dataclasses import dataclass, field
from typing import Dict, NamedTuple, Tuple

import numpy as np
import pandas as pd
import torch

from .callbacks import _LoggerMixin, StopCallback, DivergenceCallback, MetricBelow, RepeatedMetricUp
from .exceptions import (
    PolynomialEvaluationError, NoGapError, BoundViolationError, DirectionUnavailableError, NonConvergenceWarning,
)
from .grids import RayGrid, sector_samples
from .operators import cauchy_riemann_residual
from .problem import Sector, at_imaginary
from .transforms import convolution_matrix
from .utils import wrap_angle, arg_distance, to_complex_tensor

logger = logging.getLogger(__name__)


def eval_Pm(tau, m, spec):
    r""":math:`P_m(\tau) = Q(im) - k_1^{\delta_{D_1}} k_2^{\delta_{D_2}} \tau^{N} R_{D_1D_2}(im)` with
    :math:`N = k_1\delta_{D_1} + k_2\delta_{D_2}`; ``tau`` and ``m`` broadcast (numpy)."""
    tau = np.asarray(tau, dtype=complex)
    m = np.asarray(m, dtype=float)
    return at_imaginary(spec.Q, m) - spec.leading_factor * tau ** spec.n_roots * at_imaginary(spec.R_D, m)


def _denominator(spec, taus, m):
    q = torch.as_tensor(at_imaginary(spec.Q, m), dtype=torch.complex128).reshape(1, -1)
    r = torch.as_tensor(at_imaginary(spec.R_D, m), dtype=torch.complex128).reshape(1, -1)
    return q - spec.leading_factor * taus.reshape(-1, 1) ** spec.n_roots * r


@dataclass(frozen=True)
class RootSet:
    r"""Roots :math:`q_\ell(m)` of :math:`\tau \mapsto P_m(\tau)`, one row per frequency."""
    m: np.ndarray
    q: np.ndarray

    @property
    def count(self):
        return self.q.shape[-1]

    @property
    def min_modulus(self):
        return float(np.abs(self.q).min()) if self.q.size else np.inf

    @property
    def arguments(self):
        return np.angle(self.q)


def roots_qlm(m, spec):
    r"""The :math:`N = k_1\delta_{D_1} + k_2\delta_{D_2}` roots of :math:`P_m`, by the explicit formula

    .. math::
        q_\ell(m) = \Big(\frac{|Q(im)|}{|R_{D_1D_2}(im)|\, k_1^{\delta_{D_1}}k_2^{\delta_{D_2}}}\Big)^{1/N}
        \exp\Big(i\,\frac{\arg(Q(im)/R_{D_1D_2}(im)) + 2\pi\ell}{N}\Big).

    :param m: Frequency or frequencies.
    :type m: float or `numpy.ndarray`
    :param spec: The problem.
    :type spec: `asymptolab.problem.ProblemSpec`
    :return: Roots shaped ``(len(m), N)``.
    :rtype: RootSet
    :raises PolynomialEvaluationError: If :math:`R_{D_1D_2}(im) = 0` at some frequency.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    n = spec.n_roots
    r = at_imaginary(spec.R_D, m)
    scale = max(1.0, float(np.abs(spec.R_D.coef).max()))
    if np.any(np.abs(r) <= 1e-14 * scale):
        raise PolynomialEvaluationError(f"R_D1D2(im) vanishes at m = {m[np.abs(r) <= 1e-14 * scale].tolist()}")
    if n == 0:
        return RootSet(m=m, q=np.zeros((len(m), 0), dtype=complex))
    ratio = at_imaginary(spec.Q, m) / r
    modulus = (np.abs(ratio) / spec.leading_factor) ** (1.0 / n)
    angles = (np.angle(ratio)[:, None] + 2 * np.pi * np.arange(n)[None, :]) / n
    return RootSet(m=m, q=modulus[:, None] * np.exp(1j * angles))


class Gap(NamedTuple):
    start: float
    width: float

    @property
    def center(self):
        return wrap_angle(self.start + self.width / 2)


def root_gaps(spec, m_grid, min_width=1e-9):
    r"""Angular gaps left between the root arguments over a frequency grid, counterclockwise from angle 0.

    :return: Gaps ``(start, width)``, ordered by start angle in :math:`[0, 2\pi)`.
    :rtype: list[Gap]
    """
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    args = np.mod(roots_qlm(m, spec).arguments.ravel(), 2 * np.pi)
    if args.size == 0:
        return [Gap(0.0, 2 * np.pi)]
    args[args > 2 * np.pi - 1e-12] = 0.0
    args = np.unique(np.round(args, 14))
    ends = np.append(args[1:], args[0] + 2 * np.pi)
    return [Gap(float(a), float(b - a)) for a, b in zip(args, ends) if b - a > min_width]


def borel_sectors(spec, m_grid, fraction=0.95):
    r"""One root-free sector per angular gap, of half opening ``fraction`` times half the gap width."""
    return [Sector(g.center, fraction * g.width / 2) for g in root_gaps(spec, m_grid)]


class DirectionChoice(NamedTuple):
    d: float
    rho: float
    frakm: float
    half_opening: float
    min_modulus: float

    @property
    def sector(self):
        return Sector(self.d, self.half_opening)


def _borel_samples(d, half_opening, rho, min_modulus, n_radial=40, n_angular=25, n_disc=16):
    r_far = 50 * max(min_modulus, rho, 1.0) if np.isfinite(min_modulus) else 50.0
    radii = np.geomspace(1e-3, r_far, n_radial)
    angles = d + half_opening * np.linspace(-1, 1, n_angular)
    sector = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    disc = sector_samples(Sector(0.0, np.pi, radius=rho), n_disc, 2 * n_disc, r_min=rho / n_disc, r_max=rho,
                          margin=1.0)
    return np.concatenate([[0j], sector, disc])


def _frakm(spec, taus, m):
    q = roots_qlm(m, spec).q
    if q.size == 0:
        return np.inf
    dist = np.abs(taus[:, None, None] - q[None, :, :]) / (1 + np.abs(taus))[:, None, None]
    return float(dist.min())


def select_direction(spec, m_grid, fraction=0.95, m_subsample=64):
    r"""The root-free Borel direction :math:`d`, the disc radius :math:`\rho` and the sampled constant
    :math:`\mathfrak{m} = \min |\tau - q_\ell(m)| / (1 + |\tau|)` over :math:`S_d \cup D(0, \rho)`.

    :math:`d` bisects the first widest gap between root arguments (counterclockwise from angle 0) and
    :math:`\rho = \min(\rho_\mathrm{disc}, \min_{\ell, m} |q_\ell(m)| / 2)`.

    :param spec: The problem.
    :type spec: `asymptolab.problem.ProblemSpec`
    :param m_grid: Frequency nodes.
    :type m_grid: `asymptolab.grids.FrequencyGrid` or `numpy.ndarray`
    :param fraction: Half opening of :math:`S_d` relative to half the gap, defaults to 0.95.
    :type fraction: float
    :rtype: DirectionChoice
    :raises NoGapError: If the root arguments leave no gap.
    """
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    gaps = root_gaps(spec, m)
    if not gaps:
        raise NoGapError("root arguments of P_m cover every direction; no root-free sector S_d exists")
    widest = max(g.width for g in gaps)
    gap = next(g for g in gaps if g.width >= widest - 1e-9)
    roots = roots_qlm(m, spec)
    rho = min(spec.rho_disc, roots.min_modulus / 2)
    half_opening = min(fraction * gap.width / 2, np.pi)
    sub = m[np.unique(np.linspace(0, len(m) - 1, min(len(m), m_subsample)).astype(int))]
    taus = _borel_samples(gap.center, half_opening, rho, roots.min_modulus)
    frakm = _frakm(spec, taus, sub)
    if not frakm > 0:
        raise NoGapError(f"sampled distance to the roots vanishes (frakm = {frakm})")
    logger.info(f"Borel direction d = {gap.center:.6g}, rho = {rho:.6g}, frakm = {frakm:.6g}")
    return DirectionChoice(d=gap.center, rho=rho, frakm=frakm, half_opening=half_opening,
                           min_modulus=roots.min_modulus)


def lower_bound_certify(spec, d, rho, m_grid, tau_samples=None, half_opening=None, slack=1e-10):
    r"""Sampled lower bound :math:`C_P = \inf |P_m(\tau)| / (|R_{D_1D_2}(im)|(1+|\tau|)^N)` over
    :math:`\tau \in S_d \cup D(0, \rho)`, checked against :math:`k_1^{\delta_{D_1}}k_2^{\delta_{D_2}}\mathfrak{m}^N`.

    :return: The estimate of :math:`C_P`.
    :rtype: float
    :raises BoundViolationError: If :math:`\rho` exceeds half the smallest root modulus, or the bound fails.
    """
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    roots = roots_qlm(m, spec)
    if rho > roots.min_modulus / 2 * (1 + 1e-12):
        raise BoundViolationError(
            f"rho = {rho:.6g} exceeds half the smallest root modulus {roots.min_modulus / 2:.6g}"
        )
    if half_opening is None:
        gaps = root_gaps(spec, m)
        containing = [g for g in gaps if arg_distance(d, g.center) < g.width / 2]
        half_opening = 0.95 * containing[0].width / 2 if containing else 1e-3
    taus = np.asarray(tau_samples, dtype=complex) if tau_samples is not None \
        else _borel_samples(d, half_opening, rho, roots.min_modulus)
    n = spec.n_roots
    r = np.abs(at_imaginary(spec.R_D, m))
    ratio = np.abs(eval_Pm(taus[:, None], m[None, :], spec)) / (r[None, :] * (1 + np.abs(taus[:, None])) ** n)
    c_p = float(ratio.min())
    if n > 0:
        expected = spec.leading_factor * _frakm(spec, taus, m) ** n
        if c_p < expected * (1 - slack):
            raise BoundViolationError(f"C_P = {c_p:.6g} is below k1^dD1 k2^dD2 frakm^N = {expected:.6g}")
    logger.debug(f"C_P estimate {c_p:.6g} over {taus.size} x {m.size} samples")
    return c_p


def weighted_norm(values, taus, m, norm_params):
    r""":math:`\max (1+|m|)^\mu e^{\beta|m|} e^{-\nu|\tau|^{k'}} |\omega(\tau,m)| / |\tau|` (torch)."""
    nu, beta, mu, kp = norm_params
    if values.numel() == 0:
        return 0.0
    m = torch.as_tensor(m, dtype=torch.float64).reshape(1, -1)
    r = torch.as_tensor(taus).abs().reshape(-1, 1)
    weight = (1 + m.abs()) ** mu * torch.exp(beta * m.abs()) * torch.exp(-nu * r ** kp) / r
    return float((weight * values.detach().abs()).max())


@dataclass
class GridFunction:
    r"""Values of :math:`\omega(\tau, m)` on named Borel-plane paths times a frequency grid.

    Path keys are ``'main'`` (the ray of direction :math:`d`), ``'disc-j'`` (interior rays of length
    :math:`\rho`) and ``'ray-j'`` (extra rays requested by the caller).
    """
    paths: Dict[str, RayGrid]
    values: Dict[str, torch.Tensor]
    m_grid: object
    norm_params: Tuple[float, float, float, float]
    eps: complex = 0j

    def __post_init__(self):
        for key, path in self.paths.items():
            v = self.values[key]
            if tuple(v.shape) != (path.size, self.m_grid.size):
                raise ValueError(f"values on '{key}' have shape {tuple(v.shape)}, "
                                 f"expected {(path.size, self.m_grid.size)}")

    def ray(self, direction, tol=1e-9, unbounded=True):
        r"""The ray from the origin along ``direction`` and the values on it.

        :raises DirectionUnavailableError: If no stored ray has that direction.
        """
        best = None
        for key, path in self.paths.items():
            if isinstance(path, RayGrid) and path.from_origin and arg_distance(path.direction, direction) < tol:
                if best is None or path.r_max > self.paths[best].r_max:
                    best = key
        if best is None or (unbounded and key_is_disc(best)):
            raise DirectionUnavailableError(
                f"omega holds no {'unbounded ' if unbounded else ''}ray of direction {direction:.6g}; "
                f"available: {sorted((k, round(p.direction, 6)) for k, p in self.paths.items())}"
            )
        return self.paths[best], self.values[best]

    def norm(self):
        return max((weighted_norm(self.values[k], self.paths[k].tau_tensor(), self.m_grid.nodes, self.norm_params)
                    for k in self.paths), default=0.0)

    def __mul__(self, scalar):
        return GridFunction(self.paths, {k: v * scalar for k, v in self.values.items()}, self.m_grid,
                            self.norm_params, self.eps)

    __rmul__ = __mul__

    def to_frame(self):
        frames = []
        m = self.m_grid.nodes
        for key, path in self.paths.items():
            v = self.values[key].detach().numpy()
            frames.append(pd.DataFrame(dict(
                ray_id=key,
                r=np.repeat(path.radii, len(m)),
                m=np.tile(m, path.size),
                re=v.real.ravel(),
                im=v.imag.ravel(),
            )))
        return pd.concat(frames, ignore_index=True)


def key_is_disc(key):
    return key.startswith('disc-')


def exp_norm(omega):
    r"""The weighted sup norm
    :math:`\max (1+|m|)^\mu e^{\beta|m|} e^{-\nu|\tau|^{k'}} |\omega(\tau,m)|/|\tau|` over all nodes of ``omega``.

    :param omega: The grid function.
    :type omega: GridFunction
    :rtype: float
    """
    return omega.norm()


@dataclass
class FixedPointResult:
    omega: object
    iterations: int
    contraction_factor: float
    residual: float
    ball_radius: float
    metrics_history: Dict[str, list] = field(default_factory=dict)


class BorelSolver(_LoggerMixin):
    r"""Fixed-point solver of the Borel-plane equation on a frequency grid.

    :param spec: The problem.
    :type spec: `asymptolab.problem.ProblemSpec`
    :param coefficients: The coefficients :math:`C_{\ell_1\ell_2}`.
    :type coefficients: `asymptolab.problem.CoefficientFamily`
    :param forcing: The forcing :math:`\psi`.
    :type forcing: `asymptolab.problem.ForcingSpec`
    :param m_grid: The frequency grid.
    :type m_grid: `asymptolab.grids.FrequencyGrid`
    :param direction: Root-free direction; computed by :func:`select_direction` if omitted.
    :type direction: DirectionChoice, optional
    :param r_max: Truncation radius of the unbounded rays, defaults to 4.
    :type r_max: float
    :param ratio: Ratio of consecutive radial nodes, defaults to 1.05.
    :type ratio: float
    :param r_min: Smallest radial node, defaults to 1e-12.
    :type r_min: float
    :param n_disc_rays: Number of interior rays covering :math:`D(0, \rho)`, defaults to 8.
    :type n_disc_rays: int
    :param tol: Stopping tolerance on the weighted norm of the increment, defaults to 1e-10.
    :type tol: float
    :param max_iterations: Iteration cap, defaults to 200.
    :type max_iterations: int
    :param logger: The logger (or its name).
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, spec, coefficients, forcing, m_grid, direction=None, r_max=4.0, ratio=1.05, r_min=1e-12,
                 n_disc_rays=8, tol=1e-10, max_iterations=200, logger=None):
        super(BorelSolver, self).__init__(logger=logger)
        self.spec = spec
        self.coefficients = coefficients
        self.forcing = forcing
        self.m_grid = m_grid
        self.direction = direction or select_direction(spec, m_grid)
        self.sectors = borel_sectors(spec, m_grid)
        self.r_max = r_max
        self.ratio = ratio
        self.r_min = r_min
        self.n_disc_rays = n_disc_rays
        self.tol = tol
        self.max_iterations = max_iterations
        self.norm_params = (spec.nu, spec.beta, spec.mu, spec.k_prime)

        self.metrics_history = {'increment': [], 'norm': [], 'ratio': []}
        self.iteration = 0
        self.eps = None
        self.omega = None
        self._stop_iterating = False

    def check_direction(self, xi):
        r"""Raise :class:`DirectionUnavailableError` unless ``xi`` lies in a root-free Borel sector."""
        if not any(s.contains_angle(xi) for s in self.sectors):
            raise DirectionUnavailableError(f"direction {xi:.6g} is not inside a root-free sector of P_m")

    def build_paths(self, directions=()):
        rho = self.direction.rho
        paths = {'main': RayGrid.geometric(self.direction.d, self.r_min, self.r_max, self.ratio)}
        for j in range(self.n_disc_rays):
            paths[f'disc-{j}'] = RayGrid.geometric(2 * np.pi * j / self.n_disc_rays, self.r_min, rho, self.ratio)
        for j, xi in enumerate(directions):
            self.check_direction(xi)
            paths[f'ray-{j}'] = paths['main'].rotated(xi)
        return paths

    def _lower_terms(self, taus, eps):
        spec, m = self.spec, self.m_grid.nodes
        terms = []
        for l1, l2 in spec.lower_indices:
            if (l1, l2) not in self.coefficients.coefficients:
                continue
            weight = torch.as_tensor(at_imaginary(spec.R_lower(l1, l2), m), dtype=torch.complex128)
            kernel = convolution_matrix(lambda s: self.coefficients(l1, l2, s, eps), self.m_grid, weight=weight)
            factor = eps ** spec.eps_exponent(l1, l2) * spec.tau_factor(l1, l2) \
                * taus.reshape(-1, 1) ** spec.tau_exponent(l1, l2)
            terms.append((factor, kernel.transpose(0, 1)))
        return terms

    def default_callbacks(self):
        return [
            StopCallback(logger=self.logger).conditioned_on(MetricBelow('increment', self.tol, logger=self.logger)),
            DivergenceCallback(logger=self.logger).conditioned_on(
                RepeatedMetricUp(metric='increment', repetition=3, logger=self.logger)),
        ]

    def _iterate(self, eps, taus, initial='forcing', callbacks=None):
        eps = to_complex_tensor(eps)
        m = self.m_grid.nodes
        m_row = self.m_grid.nodes_tensor.reshape(1, -1)
        denominator = _denominator(self.spec, taus, m)
        psi = self.forcing(taus.reshape(-1, 1), m_row, eps).to(torch.complex128)
        psi = torch.broadcast_to(psi, denominator.shape)
        terms = self._lower_terms(taus, eps)

        def apply(w):
            acc = psi
            for factor, kernel_t in terms:
                acc = acc + factor * (w @ kernel_t)
            return acc / denominator

        if initial == 'forcing':
            omega = psi / denominator
        elif initial == 'zero':
            omega = torch.zeros_like(denominator)
        else:
            raise ValueError(f"initial must be 'forcing' or 'zero', got '{initial}'")

        self.metrics_history = {'increment': [], 'norm': [], 'ratio': []}
        self.iteration = 0
        self._stop_iterating = False
        self.eps = complex(eps.detach())
        callbacks = self.default_callbacks() + list(callbacks or [])
        omega_0 = omega

        for iteration in range(1, self.max_iterations + 1):
            if self._stop_iterating:
                break
            self.iteration = iteration
            new = apply(omega)
            increment = weighted_norm(new - omega, taus, m, self.norm_params)
            previous = self.metrics_history['increment'][-1] if self.metrics_history['increment'] else None
            self.metrics_history['increment'].append(increment)
            self.metrics_history['norm'].append(weighted_norm(new, taus, m, self.norm_params))
            self.metrics_history['ratio'].append(
                float('nan') if previous is None else (increment / previous if previous > 0 else 0.0)
            )
            omega = new
            self.omega = omega
            for cb in callbacks:
                cb(self)
        else:
            if not self._stop_iterating:
                warnings.warn(f"fixed point not reached within {self.max_iterations} iterations "
                              f"(last increment {self.metrics_history['increment'][-1]:.3e})",
                              NonConvergenceWarning)

        residual = weighted_norm(apply(omega) - omega, taus, m, self.norm_params)
        return omega, omega_0, residual

    def _summary(self, omega_0, taus, residual):
        ratios = [r for r in self.metrics_history['ratio'] if np.isfinite(r)]
        contraction = max(ratios, default=0.0)
        increments = self.metrics_history['increment']
        start = weighted_norm(omega_0, taus, self.m_grid.nodes, self.norm_params)
        if contraction < 1:
            ball = start + (increments[0] if increments else 0.0) / (1 - contraction)
        else:
            ball = np.inf
        self.logger.info(
            f"eps = {self.eps:.6g}: {self.iteration} iterations, contraction factor = {contraction:.4g}, "
            f"residual = {residual:.3e}"
        )
        return contraction, ball

    def solve(self, eps, directions=(), callbacks=None, initial='forcing'):
        r"""Solve on the main ray, the disc rays and one extra ray per entry of ``directions``.

        :param eps: The perturbation parameter.
        :type eps: complex
        :param directions: Extra ray directions, each inside a root-free sector.
        :type directions: list[float]
        :param callbacks: Callbacks run after every iteration, after the default stop/divergence ones.
        :type callbacks: list[`asymptolab.callbacks.BaseCallback`]
        :param initial: ``'forcing'`` (:math:`\psi/P_m`) or ``'zero'``, defaults to ``'forcing'``.
        :type initial: str
        :rtype: FixedPointResult
        :raises DivergenceError: If the increment grows three iterations in a row.
        """
        paths = self.build_paths(directions)
        keys = list(paths)
        taus = torch.cat([paths[k].tau_tensor() for k in keys])
        omega, omega_0, residual = self._iterate(eps, taus, initial=initial, callbacks=callbacks)
        sizes = [paths[k].size for k in keys]
        values = dict(zip(keys, torch.split(omega.detach(), sizes)))
        grid_function = GridFunction(paths, values, self.m_grid, self.norm_params, complex(eps))
        contraction, ball = self._summary(omega_0, taus, residual)
        return FixedPointResult(
            omega=grid_function, iterations=self.iteration, contraction_factor=contraction,
            residual=residual, ball_radius=ball,
            metrics_history={k: list(v) for k, v in self.metrics_history.items()},
        )

    def solve_points(self, eps, taus, initial='forcing'):
        r"""The fixed point at arbitrary Borel-plane points (differentiable in ``eps``).

        :param eps: The perturbation parameter, possibly a tensor requiring grad.
        :type eps: complex or `torch.Tensor`
        :param taus: Points inside :math:`S_d \cup D(0,\rho)` or another root-free sector.
        :type taus: `numpy.ndarray` or `torch.Tensor`
        :return: Values shaped ``(len(taus), n_m)``.
        :rtype: `torch.Tensor`
        """
        taus = to_complex_tensor(taus).reshape(-1)
        omega, _, _ = self._iterate(eps, taus, initial=initial)
        return omega

    def _get_internal_variables(self):
        return {
            "spec": self.spec,
            "m_grid": self.m_grid,
            "direction": self.direction,
            "eps": self.eps,
            "iteration": self.iteration,
            "metrics_history": self.metrics_history,
            "omega": None if self.omega is None else self.omega.detach(),
            "tol": self.tol,
            "norm_params": self.norm_params,
        }

    def get_internals(self, var_names=None, return_type='list'):
        r"""Internal variable(s) of the solver: all of them as a dict for ``'all'`` or None,
        one for a string, a list or dict (per ``return_type``) for a list of names."""
        available_variables = self._get_internal_variables()
        if var_names == "all" or var_names is None:
            return available_variables
        if isinstance(var_names, str):
            return available_variables[var_names]
        if return_type == 'list':
            return [available_variables[name] for name in var_names]
        elif return_type == "dict":
            return {name: available_variables[name] for name in var_names}
        else:
            raise ValueError(f"unrecognized return_type = {return_type}")


def fixed_point_solve(spec, coefficients, forcing, eps, m_grid, tol=1e-10, directions=(), callbacks=None,
                      initial='forcing', **solver_kwargs):
    r"""Solve the Borel-plane equation by iterating the affine map from :math:`\psi/P_m`.

    :return: The solution on the main and disc rays (plus ``directions``), the iteration count, the measured
        contraction factor (sup of successive increment ratios), the residual and the ball radius
        :math:`\|\omega_0\| + \|\omega_1 - \omega_0\| / (1 - q)`.
    :rtype: FixedPointResult
    """
    solver = BorelSolver(spec, coefficients, forcing, m_grid, tol=tol, **solver_kwargs)
    return solver.solve(eps, directions=directions, callbacks=callbacks, initial=initial)


def borel_residual(spec, coefficients, forcing, omega):
    r"""Recompute both sides of the Borel-plane equation with plain numpy and return the weighted norm of
    :math:`\omega - (\text{right-hand side})/P_m`.

    :param omega: A solution returned by :meth:`BorelSolver.solve`.
    :type omega: GridFunction
    :rtype: float
    """
    m = omega.m_grid.nodes
    w = omega.m_grid.weights
    eps = complex(omega.eps)
    eps_t = torch.as_tensor(eps)
    shifts = m[:, None] - m[None, :]
    worst = 0.0
    for key, path in omega.paths.items():
        taus = np.asarray(path.taus, dtype=complex)
        values = omega.values[key].detach().numpy()
        rhs = forcing(torch.as_tensor(taus[:, None]), torch.as_tensor(m[None, :]), eps_t).detach().numpy()
        rhs = np.broadcast_to(rhs, values.shape).astype(complex)
        for l1, l2 in spec.lower_indices:
            if (l1, l2) not in coefficients.coefficients:
                continue
            c = coefficients(l1, l2, torch.as_tensor(shifts), eps_t).detach().numpy()
            r_l = at_imaginary(spec.R_lower(l1, l2), m)
            conv = np.einsum('ji,ti->tj', c * w[None, :] * r_l[None, :], values) / np.sqrt(2 * np.pi)
            rhs = rhs + eps ** spec.eps_exponent(l1, l2) * spec.tau_factor(l1, l2) \
                * taus[:, None] ** spec.tau_exponent(l1, l2) * conv
        lhs = eval_Pm(taus[:, None], m[None, :], spec)
        diff = torch.as_tensor(values - rhs / lhs)
        worst = max(worst, weighted_norm(diff, torch.as_tensor(taus), m, omega.norm_params))
    return worst


def omega_holomorphy_residual(solver, eps, taus, m_index=None):
    r"""Cauchy-Riemann residual of :math:`\epsilon \mapsto \omega(\tau, m, \epsilon)` at fixed nodes."""
    taus = to_complex_tensor(taus).reshape(-1)

    def fn(e):
        values = solver.solve_points(e, taus)
        return values if m_index is None else values[:, m_index]

    return cauchy_riemann_residual(fn, complex(eps))


@dataclass(frozen=True)
class DemoReport:
    applicable: bool
    rho0: float
    frame: pd.DataFrame
    detail: str = ''

    @property
    def passed(self):
        return (not self.applicable) or bool((self.frame['max_abs_tau1'] <= self.rho0 / 2 * (1 + 1e-10)).all())


def small_divisor_demo(spec, rho0, m_samples):
    r"""Show that the roots in :math:`\tau_1` of the two-variable denominator collapse into
    :math:`D(0, \rho_0/2)` once :math:`|\tau_2|` passes the threshold
    :math:`(r_2 / ((\rho_0/2)^{k_1\delta_{D_1}} k_1^{\delta_{D_1}}k_2^{\delta_{D_2}}))^{1/(k_2\delta_{D_2})}`.

    :param spec: The problem.
    :type spec: `asymptolab.problem.ProblemSpec`
    :param rho0: Radius of the disc, positive.
    :type rho0: float
    :param m_samples: Frequencies.
    :type m_samples: `numpy.ndarray`
    :return: Per frequency, the threshold and the largest root modulus; not applicable when
        :math:`\delta_{D_1}` or :math:`\delta_{D_2}` vanishes.
    :rtype: DemoReport
    """
    if not rho0 > 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    columns = ['m', 'threshold_tau2', 'max_abs_tau1']
    n1 = spec.k1 * spec.delta_D1
    n2 = spec.k2 * spec.delta_D2
    if n1 == 0 or n2 == 0:
        return DemoReport(False, rho0, pd.DataFrame(columns=columns),
                          'not-applicable: the denominator does not involve both Borel variables')
    m = np.atleast_1d(np.asarray(m_samples, dtype=float))
    threshold = (spec.annulus.r2 / ((rho0 / 2) ** n1 * spec.leading_factor)) ** (1 / n2)
    ratio = at_imaginary(spec.Q, m) / (at_imaginary(spec.R_D, m) * spec.leading_factor)
    largest = []
    for target in ratio / threshold ** n2:
        # tau1^n1 = target
        coeffs = np.zeros(n1 + 1, dtype=complex)
        coeffs[0], coeffs[-1] = 1.0, -target
        largest.append(float(np.abs(np.roots(coeffs)).max()))
    frame = pd.DataFrame(dict(m=m, threshold_tau2=np.full(len(m), threshold), max_abs_tau1=largest))
    report = DemoReport(True, rho0, frame, f"|tau2| = {threshold:.6g}, max |tau1| = {max(largest):.6g}")
    logger.info(f"small-divisor demo with rho0 = {rho0}: {report.detail}")
    return report
