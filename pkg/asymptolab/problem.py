"""Problem data of the two-time singularly perturbed equation and the checks of its hypotheses,
together with the sectorial geometry (sectors and good coverings) used to glue solutions.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Tuple

import numpy as np
import pandas as pd
import torch
from numpy.polynomial import Polynomial

from .exceptions import PolynomialEvaluationError, InfeasibleCoveringError
from .utils import wrap_angle, arg_distance

logger = logging.getLogger(__name__)


def as_polynomial(coeffs):
    r"""Build a complex polynomial from a coefficient list, constant term first.
    Each coefficient may be a number or an ``[re, im]`` pair.

    :param coeffs: The coefficients, or an existing polynomial.
    :type coeffs: list or `numpy.polynomial.Polynomial`
    :rtype: `numpy.polynomial.Polynomial`
    """
    if isinstance(coeffs, Polynomial):
        return Polynomial(np.asarray(coeffs.coef, dtype=complex))
    if np.isscalar(coeffs):
        coeffs = [coeffs]
    values = []
    for c in coeffs:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise ValueError(f"complex coefficients must be [re, im] pairs, got {c}")
            values.append(complex(float(c[0]), float(c[1])))
        else:
            values.append(complex(c))
    if not values:
        raise ValueError("a polynomial needs at least one coefficient")
    return Polynomial(np.asarray(values, dtype=complex))


def degree(p):
    """Degree of a polynomial, ignoring vanishing leading coefficients; -1 for the zero polynomial."""
    nonzero = np.nonzero(np.abs(p.coef) > 0)[0]
    return int(nonzero[-1]) if len(nonzero) else -1


def at_imaginary(p, m):
    r"""Evaluate :math:`p(im)` for real ``m`` (numpy in, numpy out)."""
    return p(1j * np.asarray(m, dtype=float))


@dataclass(frozen=True)
class Annulus:
    r"""The sectorial annulus :math:`\{w : r_1 \le |w| \le r_2,\ \alpha \le \arg w \le \beta\}`."""
    r1: float
    r2: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 < self.r1 <= self.r2:
            raise ValueError(f"annulus radii must satisfy 0 < r1 <= r2, got ({self.r1}, {self.r2})")
        if not 0 < self.beta - self.alpha < 2 * np.pi:
            raise ValueError(f"annulus angles must satisfy 0 < beta - alpha < 2 pi, got ({self.alpha}, {self.beta})")

    def contains(self, w, rtol=1e-12):
        w = np.asarray(w, dtype=complex)
        modulus = np.abs(w)
        offset = wrap_angle(np.angle(w) - self.alpha)
        offset = np.where(offset < -rtol, offset + 2 * np.pi, offset)
        return (modulus >= self.r1 * (1 - rtol)) & (modulus <= self.r2 * (1 + rtol)) \
            & (offset <= self.beta - self.alpha + rtol)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    r"""All discrete and continuous data of the problem.

    Lower-order data are indexed by :math:`1 \le \ell_1 \le D_1 - 1`, :math:`1 \le \ell_2 \le D_2 - 1`
    and stored 0-based: ``delta_l1[l1 - 1]``, ``Delta[l1 - 1][l2 - 1]``, ``R_l[l1 - 1][l2 - 1]``.
    Hypotheses are *not* enforced at construction; :func:`validate_spec` checks them.
    """
    k1: int
    k2: int
    k_prime: int
    D1: int
    D2: int
    lambda1: int
    lambda2: int
    mu2: int
    delta_D1: int
    delta_D2: int
    Delta_D1D2: int
    delta_l1: Tuple[int, ...]
    delta_l2: Tuple[int, ...]
    Delta: Tuple[Tuple[int, ...], ...]
    Q: Polynomial
    R_D: Polynomial
    R_l: Tuple[Tuple[Polynomial, ...], ...]
    beta: float
    mu: float
    nu: float
    epsilon0: float
    annulus: Annulus
    rho_disc: float

    def __post_init__(self):
        if self.D1 < 2 or self.D2 < 2:
            raise ValueError(f"D1 and D2 must be at least 2, got ({self.D1}, {self.D2})")
        object.__setattr__(self, 'delta_l1', tuple(int(v) for v in self.delta_l1))
        object.__setattr__(self, 'delta_l2', tuple(int(v) for v in self.delta_l2))
        object.__setattr__(self, 'Delta', tuple(tuple(int(v) for v in row) for row in self.Delta))
        object.__setattr__(self, 'Q', as_polynomial(self.Q))
        object.__setattr__(self, 'R_D', as_polynomial(self.R_D))
        object.__setattr__(self, 'R_l', tuple(tuple(as_polynomial(p) for p in row) for row in self.R_l))
        if not isinstance(self.annulus, Annulus):
            object.__setattr__(self, 'annulus', Annulus(*self.annulus))
        if len(self.delta_l1) != self.D1 - 1 or len(self.delta_l2) != self.D2 - 1:
            raise ValueError("delta_l1 / delta_l2 must have D1 - 1 / D2 - 1 entries")
        for name in ('Delta', 'R_l'):
            table = getattr(self, name)
            if len(table) != self.D1 - 1 or any(len(row) != self.D2 - 1 for row in table):
                raise ValueError(f"{name} must be a (D1 - 1) x (D2 - 1) table")

    @property
    def n_roots(self):
        r""":math:`k_1\delta_{D_1} + k_2\delta_{D_2}`, the degree of the Borel denominator in :math:`\tau`."""
        return self.k1 * self.delta_D1 + self.k2 * self.delta_D2

    @property
    def leading_factor(self):
        r""":math:`k_1^{\delta_{D_1}} k_2^{\delta_{D_2}}`."""
        return float(self.k1 ** self.delta_D1 * self.k2 ** self.delta_D2)

    @property
    def lower_indices(self):
        return [(l1, l2) for l1 in range(1, self.D1) for l2 in range(1, self.D2)]

    def eps_exponent(self, l1, l2):
        r""":math:`\Delta_{\ell_1\ell_2} - \lambda_1 k_1 \delta_{\ell_1} - \lambda_2 k_2 \delta_{\ell_2}`."""
        return self.Delta[l1 - 1][l2 - 1] - self.lambda1 * self.k1 * self.delta_l1[l1 - 1] \
            - self.lambda2 * self.k2 * self.delta_l2[l2 - 1]

    def tau_exponent(self, l1, l2):
        return self.k1 * self.delta_l1[l1 - 1] + self.k2 * self.delta_l2[l2 - 1]

    def tau_factor(self, l1, l2):
        r""":math:`k_1^{\delta_{\ell_1}} k_2^{\delta_{\ell_2}}`."""
        return float(self.k1 ** self.delta_l1[l1 - 1] * self.k2 ** self.delta_l2[l2 - 1])

    def R_lower(self, l1, l2):
        return self.R_l[l1 - 1][l2 - 1]

    def replace(self, **changes):
        return replace(self, **changes)


def reference_spec(**changes):
    r"""The reference problem: :math:`k_1=2, k_2=5, k'=3, \lambda_1=4, \lambda_2=2, \mu_2=3`,
    one lower-order term, :math:`Q \equiv 2`, :math:`R_{D_1D_2} \equiv R_{11} \equiv 1`."""
    spec = ProblemSpec(
        k1=2, k2=5, k_prime=3, D1=2, D2=2,
        lambda1=4, lambda2=2, mu2=3,
        delta_D1=1, delta_D2=1, Delta_D1D2=18,
        delta_l1=(0,), delta_l2=(0,), Delta=((1,),),
        Q=[2.0], R_D=[1.0], R_l=(([1.0],),),
        beta=1.0, mu=3.0, nu=0.1, epsilon0=0.25,
        annulus=Annulus(1.0, 3.0, -np.pi / 8, np.pi / 8),
        rho_disc=0.35,
    )
    return spec.replace(**changes) if changes else spec


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''


@dataclass(frozen=True)
class ValidationReport:
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __add__(self, other):
        return ValidationReport(tuple(self.checks) + tuple(other.checks))

    def to_frame(self):
        return pd.DataFrame(
            dict(check_name=[c.name for c in self.checks],
                 **{'pass': [bool(c.passed) for c in self.checks]},
                 detail=[c.detail for c in self.checks])
        )


def validate_spec(spec, m_grid):
    r"""Check every hypothesis imposed on the problem data.

    :param spec: The problem.
    :type spec: ProblemSpec
    :param m_grid: Frequency nodes (a grid or an array), non-empty and symmetric about 0.
    :type m_grid: `asymptolab.grids.FrequencyGrid` or `numpy.ndarray`
    :return: One entry per hypothesis.
    :rtype: ValidationReport
    :raises PolynomialEvaluationError: If :math:`R_{D_1D_2}(im)` vanishes at a node.
    """
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    if m.size == 0 or not np.allclose(np.sort(m), -np.sort(m)[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("the frequency grid must be non-empty and symmetric about 0")

    r_d = at_imaginary(spec.R_D, m)
    scale = max(1.0, float(np.abs(spec.R_D.coef).max()))
    zeros = np.abs(r_d) <= 1e-14 * scale
    if zeros.any():
        raise PolynomialEvaluationError(
            f"R_D1D2(im) vanishes at m = {m[zeros].tolist()}; the leading polynomial must not vanish on the grid"
        )

    checks = []

    ranges = [
        (spec.k1 >= 1, 'k1 >= 1'), (spec.k1 < spec.k2, 'k1 < k2'),
        (spec.lambda1 >= 1 and spec.lambda2 >= 1, 'lambda1, lambda2 >= 1'),
        (min(spec.delta_D1, spec.delta_D2, *spec.delta_l1, *spec.delta_l2) >= 0, 'exponents delta >= 0'),
        (min(min(row) for row in spec.Delta) >= 0, 'Delta >= 0'),
        (spec.beta > 0 and spec.nu > 0, 'beta, nu > 0'), (spec.mu > 1, 'mu > 1'),
        (spec.epsilon0 > 0 and spec.rho_disc > 0, 'epsilon0, rho_disc > 0'),
    ]
    bad = [text for ok, text in ranges if not ok]
    checks.append(CheckResult('parameter-ranges', not bad, '; '.join(bad) or 'all within range'))

    checks.append(CheckResult(
        'intermediate-order', spec.k1 < spec.k_prime < spec.k2,
        f"k1 = {spec.k1} < k' = {spec.k_prime} < k2 = {spec.k2}",
    ))
    checks.append(CheckResult(
        'inner-exponent', spec.mu2 > spec.lambda2, f"mu2 = {spec.mu2} > lambda2 = {spec.lambda2}",
    ))

    leading = spec.lambda1 * spec.k1 * spec.delta_D1 + spec.lambda2 * spec.k2 * spec.delta_D2
    checks.append(CheckResult(
        'leading-exponent', spec.Delta_D1D2 == leading,
        f"Delta_D1D2 = {spec.Delta_D1D2}, lambda1 k1 deltaD1 + lambda2 k2 deltaD2 = {leading}",
    ))
    checks.append(CheckResult(
        'time-scale-order', spec.lambda2 * spec.k2 > spec.lambda1 * spec.k1,
        f"lambda2 k2 = {spec.lambda2 * spec.k2}, lambda1 k1 = {spec.lambda1 * spec.k1}",
    ))

    bad_exponents, bad_orders, bad_degrees = [], [], []
    lead_order = spec.k1 * spec.delta_D1 + spec.k2 * spec.delta_D2
    deg_d = degree(spec.R_D)
    for l1, l2 in spec.lower_indices:
        if spec.eps_exponent(l1, l2) <= 0:
            bad_exponents.append((l1, l2))
        if spec.tau_exponent(l1, l2) > lead_order:
            bad_orders.append((l1, l2))
        if degree(spec.R_lower(l1, l2)) > deg_d:
            bad_degrees.append((l1, l2))
    checks.append(CheckResult(
        'lower-exponents', not bad_exponents,
        f"violated at {bad_exponents}" if bad_exponents else 'Delta_l > lambda1 k1 delta_l1 + lambda2 k2 delta_l2',
    ))
    checks.append(CheckResult(
        'lower-operator-orders', not bad_orders,
        f"violated at {bad_orders}" if bad_orders else 'k1 delta_l1 + k2 delta_l2 <= k1 deltaD1 + k2 deltaD2',
    ))
    checks.append(CheckResult(
        'coefficient-degrees', not bad_degrees,
        f"violated at {bad_degrees}" if bad_degrees else f'deg R_l <= deg R_D1D2 = {deg_d}',
    ))
    checks.append(CheckResult(
        'denominator-nonvanishing', True, f"min |R_D1D2(im)| = {np.abs(r_d).min():.6g}",
    ))

    max_deg = max(degree(spec.R_lower(l1, l2)) for l1, l2 in spec.lower_indices)
    checks.append(CheckResult(
        'decay-exponent', spec.mu > 1 + max_deg, f"mu = {spec.mu}, 1 + max deg R_l = {1 + max_deg}",
    ))

    ratio = at_imaginary(spec.Q, m) / r_d
    inside = spec.annulus.contains(ratio)
    args = np.angle(ratio)
    checks.append(CheckResult(
        'sectorial-annulus', bool(inside.all()),
        f"|Q/R| in [{np.abs(ratio).min():.6g}, {np.abs(ratio).max():.6g}], "
        f"arg(Q/R) in [{args.min():.6g}, {args.max():.6g}]"
        + ('' if inside.all() else f"; outside at m = {m[~inside][:5].tolist()}"),
    ))

    if spec.k_prime < spec.k2 and spec.k_prime > 0:
        bound = (spec.mu2 - spec.lambda2) / (1 / spec.k_prime - 1 / spec.k2)
    else:
        bound = np.inf
    checks.append(CheckResult(
        'inner-scaling', spec.lambda1 * spec.k1 > bound,
        f"lambda1 k1 = {spec.lambda1 * spec.k1} vs (mu2 - lambda2) / (1/k' - 1/k2) = {bound:.6g}",
    ))

    report = ValidationReport(tuple(checks))
    logger.debug(f"validated spec: failed checks = {report.failed}")
    return report


def decay_profile(m, beta, mu):
    r"""The profile :math:`g(m) = \mathrm{sech}(\beta m)(1+m^2)^{-\mu/2}`, which satisfies
    :math:`(1+|m|)^\mu e^{\beta|m|} g(m) \le 2^{1+\mu/2}`."""
    if isinstance(m, torch.Tensor):
        return 1 / torch.cosh(beta * m) * (1 + m ** 2) ** (-mu / 2)
    m = np.asarray(m, dtype=float)
    return 1 / np.cosh(beta * m) * (1 + m ** 2) ** (-mu / 2)


def profile_bound(mu):
    return 2 ** (1 + mu / 2)


@dataclass(frozen=True)
class CoefficientFamily:
    r"""Frequency-space coefficients :math:`C_{\ell_1\ell_2}(m, \epsilon)` and their bounds
    :math:`\mathcal{C}_{\ell_1\ell_2}`. Each coefficient maps a real tensor of frequencies and a complex
    scalar tensor :math:`\epsilon` to a complex tensor shaped like the frequencies."""
    coefficients: Dict[Tuple[int, int], Callable] = field(default_factory=dict)
    bounds: Dict[Tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def uniform(cls, spec, coupling):
        r""":math:`C_{\ell_1\ell_2}(m, \epsilon) = c\, g(m)` for every lower index, with the profile of
        :func:`decay_profile`."""
        beta, mu = spec.beta, spec.mu

        def coefficient(m, eps):
            return coupling * decay_profile(m, beta, mu).to(torch.complex128)

        return cls(
            coefficients={idx: coefficient for idx in spec.lower_indices},
            bounds={idx: abs(coupling) * profile_bound(mu) for idx in spec.lower_indices},
        )

    @classmethod
    def zero(cls, spec):
        return cls.uniform(spec, 0.0)

    def __call__(self, l1, l2, m, eps):
        fn = self.coefficients.get((l1, l2))
        m = torch.as_tensor(m, dtype=torch.float64)
        if fn is None:
            return torch.zeros(m.shape, dtype=torch.complex128)
        return fn(m, eps)


@dataclass(frozen=True)
class ForcingSpec:
    r"""The Borel-plane forcing :math:`\psi(\tau, m, \epsilon)`, entire in :math:`\tau`.

    ``psi`` maps a complex tensor of :math:`\tau` values shaped ``(n, 1)``, a real tensor of frequencies
    shaped ``(1, n_m)`` and a complex scalar tensor :math:`\epsilon` to a complex ``(n, n_m)`` tensor.
    """
    psi: Callable
    c_psi: float
    nu_f: float
    is_zero: bool = False

    @classmethod
    def standard(cls, spec, amplitude=1.0, nu_f=None):
        r""":math:`\psi = a\,\tau\, e^{\nu_F \tau^{k'}} g(m)` with :math:`\nu_F \le \nu`, so that
        :math:`|\psi| \le a\, 2^{1+\mu/2} (1+|m|)^{-\mu} e^{-\beta|m|} e^{\nu|\tau|^{k'}} |\tau|`."""
        nu_f = spec.nu / 2 if nu_f is None else nu_f
        if not 0 < nu_f <= spec.nu:
            raise ValueError(f"nu_f must lie in (0, nu = {spec.nu}], got {nu_f}")
        beta, mu, kp = spec.beta, spec.mu, spec.k_prime

        def psi(tau, m, eps):
            return amplitude * tau * torch.exp(nu_f * tau ** kp) * decay_profile(m, beta, mu)

        return cls(psi=psi, c_psi=abs(amplitude) * profile_bound(mu), nu_f=nu_f)

    @classmethod
    def zero(cls, spec):
        def psi(tau, m, eps):
            return torch.zeros(torch.broadcast_shapes(tau.shape, m.shape), dtype=torch.complex128)

        return cls(psi=psi, c_psi=0.0, nu_f=spec.nu, is_zero=True)

    def __call__(self, tau, m, eps):
        return self.psi(tau, m, eps)


def check_coefficient_bounds(spec, family, m_grid, eps_samples):
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    weight = (1 + np.abs(m)) ** spec.mu * np.exp(spec.beta * np.abs(m))
    worst, where = 0.0, None
    for idx in spec.lower_indices:
        bound = family.bounds.get(idx, 0.0)
        for eps in eps_samples:
            values = family(*idx, torch.as_tensor(m), torch.as_tensor(complex(eps))).detach().numpy()
            weighted = float(np.max(weight * np.abs(values)))
            ratio = weighted / bound if bound > 0 else (0.0 if weighted == 0 else np.inf)
            if where is None or ratio > worst:
                worst, where = ratio, (idx, eps)
    return CheckResult('coefficient-bounds', worst <= 1 + 1e-12,
                       f"max weighted |C| / bound = {worst:.6g} at (index, eps) = {where}")


def check_forcing_bound(spec, forcing, m_grid, tau_samples, eps_samples):
    m = np.asarray(getattr(m_grid, 'nodes', m_grid), dtype=float)
    tau = np.asarray(tau_samples, dtype=complex)
    tau = tau[np.abs(tau) > 0]
    envelope = (1 + np.abs(m[None, :])) ** (-spec.mu) * np.exp(-spec.beta * np.abs(m[None, :])) \
        * np.exp(spec.nu * np.abs(tau[:, None]) ** spec.k_prime) * np.abs(tau[:, None])
    worst = 0.0
    for eps in eps_samples:
        values = forcing(torch.as_tensor(tau[:, None]), torch.as_tensor(m[None, :]),
                         torch.as_tensor(complex(eps))).detach().numpy()
        worst = max(worst, float(np.max(np.abs(values) / envelope)))
    passed = worst <= forcing.c_psi * (1 + 1e-12) or (forcing.is_zero and worst == 0)
    return CheckResult('forcing-bound', passed, f"max |psi| / envelope = {worst:.6g}, C_psi = {forcing.c_psi:.6g}")


@dataclass(frozen=True)
class Sector:
    r"""The open sector :math:`\{z : |\arg z - d| < \delta,\ r_0 < |z| < R\}`.

    ``direction`` is normalized into :math:`(-\pi, \pi]`.
    """
    direction: float
    half_opening: float
    radius: float = np.inf
    inner_radius: float = 0.0

    def __post_init__(self):
        if not self.half_opening > 0:
            raise ValueError(f"half_opening must be positive, got {self.half_opening}")
        if not 0 <= self.inner_radius < self.radius:
            raise ValueError(f"need 0 <= inner_radius < radius, got ({self.inner_radius}, {self.radius})")
        object.__setattr__(self, 'direction', wrap_angle(float(self.direction)))

    @property
    def opening(self):
        return 2 * self.half_opening

    @property
    def bounds(self):
        """Angular end points ``(d - delta, d + delta)``, not normalized."""
        return self.direction - self.half_opening, self.direction + self.half_opening

    def contains_angle(self, theta):
        return arg_distance(theta, self.direction) < self.half_opening

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        return (r > self.inner_radius) & (r < self.radius) & self.contains_angle(np.angle(z))


@dataclass(frozen=True)
class GoodCovering:
    r"""A cyclic family of sectors at the origin, consecutive ones overlapping, with no triple overlaps."""
    sectors: Tuple[Sector, ...]
    kind: str = 'plain'
    min_opening: float = 0.0

    @property
    def iota(self):
        return len(self.sectors)

    def __len__(self):
        return len(self.sectors)

    def __getitem__(self, h):
        return self.sectors[h % self.iota]

    def overlap(self, h):
        """The overlap of sectors ``h`` and ``h + 1`` (cyclically) as a sector."""
        a, b = self[h], self[h + 1]
        ahead = a.direction + (wrap_angle(b.direction - a.direction) % (2 * np.pi))
        lo = max(a.direction - a.half_opening, ahead - b.half_opening)
        hi = min(a.direction + a.half_opening, ahead + b.half_opening)
        if hi <= lo:
            raise InfeasibleCoveringError(f"sectors {h} and {(h + 1) % self.iota} do not overlap")
        return Sector((lo + hi) / 2, (hi - lo) / 2, radius=min(a.radius, b.radius))

    def overlap_direction(self, h):
        return self.overlap(h).direction

    def indices_containing(self, eps):
        return [h for h, s in enumerate(self.sectors) if bool(s.contains(eps))]


def build_good_covering(iota, min_opening=0.0, kind='plain', lambda2k2=None, radius=1.0, start=0.0, overlap=0.1):
    r"""A good covering with equal openings :math:`o` and equally spaced centres :math:`2\pi h/\iota`.

    Consecutive sectors overlap iff :math:`o > 2\pi/\iota` and sectors two apart stay disjoint iff
    :math:`o < 4\pi/\iota`. With two sectors the only consecutive pair would meet in two disjoint arcs,
    so :math:`\iota = 2` is infeasible.

    :param iota: Number of sectors, at least 2.
    :type iota: int
    :param min_opening: Smallest acceptable opening, defaults to 0.
    :type min_opening: float
    :param kind: ``'plain'`` or ``'opening-constrained'``, defaults to ``'plain'``.
    :type kind: str
    :param lambda2k2: :math:`\lambda_2 k_2`, required for opening-constrained coverings (openings exceed :math:`\pi/(\lambda_2 k_2)`).
    :type lambda2k2: int, optional
    :param radius: Radius of the sectors (:math:`\epsilon_0`), defaults to 1.
    :type radius: float
    :param start: Direction of sector 0, defaults to 0.
    :type start: float
    :param overlap: Relative excess of the opening over the spacing, defaults to 0.1.
    :type overlap: float
    :rtype: GoodCovering
    :raises InfeasibleCoveringError: If no such covering exists.
    """
    if int(iota) != iota or iota < 2:
        raise ValueError(f"iota must be an integer >= 2, got {iota}")
    if kind not in ('plain', 'opening-constrained'):
        raise ValueError(f"unknown covering kind '{kind}'")
    iota = int(iota)
    if iota == 2:
        raise InfeasibleCoveringError(
            "two sectors covering the circle overlap in two disjoint arcs, so the consecutive "
            "overlap is not a sector and the pair cannot be separated from a triple overlap"
        )
    spacing = 2 * np.pi / iota
    opening = max(spacing * (1 + overlap), min_opening)
    if kind == 'opening-constrained':
        if lambda2k2 is None:
            raise ValueError("opening-constrained coverings need lambda2k2")
        opening = max(opening, 1.05 * np.pi / lambda2k2)
        min_opening = max(min_opening, np.pi / lambda2k2)
    if not spacing < opening < 2 * spacing:
        raise InfeasibleCoveringError(
            f"iota = {iota} sectors of opening {opening:.6g} cannot overlap consecutively without "
            f"triple overlaps (need {spacing:.6g} < opening < {2 * spacing:.6g})"
        )
    sectors = tuple(Sector(start + h * spacing, opening / 2, radius=radius) for h in range(iota))
    logger.debug(f"built {kind} covering with {iota} sectors of opening {opening:.6g}")
    return GoodCovering(sectors=sectors, kind=kind, min_opening=float(min_opening))


def check_covering(covering, n_samples=10000):
    r"""Membership-based check of the good-covering properties on ``n_samples`` equally spaced angles.

    :param covering: The covering to check.
    :type covering: GoodCovering
    :param n_samples: Number of sampled angles, defaults to 10000.
    :type n_samples: int
    :rtype: ValidationReport
    """
    theta = -np.pi + 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    member = np.array([s.contains_angle(theta) for s in covering.sectors])
    counts = member.sum(axis=0)
    iota = covering.iota

    checks = [
        CheckResult('coverage', bool((counts >= 1).all()), f"uncovered samples: {int((counts == 0).sum())}"),
        CheckResult('overlap-count', bool((counts <= 2).all()), f"max multiplicity: {int(counts.max())}"),
    ]
    missing, split = [], []
    for h in range(iota):
        both = member[h] & member[(h + 1) % iota]
        if not both.any():
            missing.append(h)
        # number of arcs of the intersection on the circle
        starts = int(np.sum(both & ~np.roll(both, 1)))
        if starts > 1:
            split.append(h)
    checks.append(CheckResult('consecutive-overlap', not missing, f"pairs without overlap: {missing}"))
    checks.append(CheckResult('connected-overlaps', not split, f"pairs meeting in several arcs: {split}"))
    triple = []
    if iota >= 3:
        for h in range(iota):
            for g in range(h + 2, iota):
                if (g - h) % iota in (1, iota - 1):
                    continue
                if (member[h] & member[g]).any():
                    triple.append((h, g))
    checks.append(CheckResult('no-triple-overlap', not triple, f"non-consecutive overlapping pairs: {triple}"))
    if covering.kind == 'opening-constrained':
        small = [h for h, s in enumerate(covering.sectors) if not s.opening > covering.min_opening]
        checks.append(CheckResult('minimum-opening', not small,
                                  f"sectors not wider than {covering.min_opening:.6g}: {small}"))
    return ValidationReport(tuple(checks))
