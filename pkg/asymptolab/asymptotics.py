"""Quantitative checks of the asymptotic statements: flatness orders of sector differences, the kernel
integral bounds, the :math:`\\mathcal{L}` series, Mittag-Leffler growth and a Gevrey coefficient probe."""
import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, roots_legendre

from .exceptions import (
    DegenerateDataError, EnvelopeViolationError, ConditioningError, NonConvergenceWarning,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------------------------------------------------
# Flatness fits
# ---------------------------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    r"""Least-squares fit of :math:`\log|\Delta| = \log \hat C - \hat A / |\epsilon|^{\hat k}`."""
    order: float
    constant: float
    prefactor: float
    r_squared: float
    samples: Tuple[Tuple[float, float], ...]
    log_prefactor: float = 0.0

    def log_model(self, eps_abs):
        return self.log_prefactor - self.constant / np.asarray(eps_abs, dtype=float) ** self.order

    def to_frame(self):
        return pd.DataFrame([dict(order=self.order, constant=self.constant, prefactor=self.prefactor,
                                  log_prefactor=self.log_prefactor, r_squared=self.r_squared,
                                  n_samples=len(self.samples))])


def _linear_fit(eps, logs, k):
    x = eps ** (-k)
    scale = x.max()
    slope, intercept = np.polyfit(x / scale, logs, 1)
    residual = logs - (intercept + slope * x / scale)
    total = np.sum((logs - logs.mean()) ** 2)
    r_squared = 1.0 - np.sum(residual ** 2) / total
    return -slope / scale, intercept, float(r_squared)


def flatness_fit(samples, k_candidates, log_scale=False, refine=True):
    r"""Fit the flatness order of sector differences.

    For every candidate :math:`k` the model :math:`\log|\Delta| = \log C - A|\epsilon|^{-k}` is fitted by
    linear least squares; the best candidate (by :math:`R^2`) is then refined by a bounded scalar search
    between its neighbouring candidates, and the refinement is kept only if it improves :math:`R^2`.

    :param samples: Pairs ``(|eps|, |delta|)``, or ``(|eps|, log|delta|)`` if ``log_scale``.
    :type samples: list[tuple[float, float]]
    :param k_candidates: Candidate orders.
    :type k_candidates: list[float]
    :param log_scale: Whether the second entries are already logarithms, defaults to False.
    :type log_scale: bool
    :param refine: Whether to refine the best candidate, defaults to True.
    :type refine: bool
    :rtype: FitResult
    :raises DegenerateDataError: For fewer than 4 samples, repeated or non-positive entries, or when all
        differences are equal (no decay signal).
    """
    samples = sorted(((float(e), float(d)) for e, d in samples), reverse=True)
    if len(samples) < 4:
        raise DegenerateDataError(f"need at least 4 samples, got {len(samples)}")
    eps = np.array([s[0] for s in samples])
    values = np.array([s[1] for s in samples])
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DegenerateDataError("|eps| samples must be positive and distinct")
    if not log_scale:
        if np.any(values <= 0):
            raise DegenerateDataError("all |delta| samples must be positive")
        values = np.log(values)
    if not np.all(np.isfinite(values)):
        raise DegenerateDataError("log |delta| samples must be finite")
    if np.ptp(values) <= 1e-12 * max(1.0, np.abs(values).max()):
        raise DegenerateDataError("all differences are equal; no decay signal")

    candidates = sorted(float(k) for k in k_candidates)
    fits = {k: _linear_fit(eps, values, k) for k in candidates}
    best = max(candidates, key=lambda k: fits[k][2])
    order, (constant, log_c, r_squared) = best, fits[best]
    if refine and r_squared < 1 - 1e-14:
        i = candidates.index(best)
        lo = candidates[i - 1] if i > 0 else best / 2
        hi = candidates[i + 1] if i + 1 < len(candidates) else 2 * best
        search = minimize_scalar(lambda k: -_linear_fit(eps, values, k)[2], bounds=(lo, hi), method='bounded',
                                 options=dict(xatol=1e-10))
        refined = _linear_fit(eps, values, search.x)
        if refined[2] > r_squared:
            order, (constant, log_c, r_squared) = float(search.x), refined
    logger.info(f"flatness fit: k = {order:.6g}, A = {constant:.6g}, R^2 = {r_squared:.8f}")
    return FitResult(order=float(order), constant=float(constant), prefactor=float(np.exp(log_c)),
                     r_squared=float(r_squared), samples=tuple(samples), log_prefactor=float(log_c))


def flatness_plot_data(fit, log_scale=False):
    r"""Rows :math:`(1/|\epsilon|^{\hat k}, \log|\Delta|)` with the model line, for external plotting."""
    eps = np.array([s[0] for s in fit.samples])
    values = np.array([s[1] for s in fit.samples])
    return pd.DataFrame(dict(
        inv_eps_pow=eps ** (-fit.order),
        log_delta=values if log_scale else np.log(values),
        log_delta_model=fit.log_model(eps),
    ))


# ---------------------------------------------------------------------------------------------------------------------
# Series and special functions
# ---------------------------------------------------------------------------------------------------------------------

class GrowthConstant(NamedTuple):
    constant: float
    refined: float
    stable: bool


def _refine(points):
    points = np.sort(np.asarray(points, dtype=float))
    mids = np.sqrt(points[1:] * points[:-1])
    return np.sort(np.concatenate([points, mids]))


def _sum_log_terms(log_term, tol, max_terms, n_terms=None, what='series'):
    """Log of a sum of positive terms, stopping once past the peak with a term below ``tol`` of the sum."""
    logs = []
    total = -np.inf
    n = 0
    cap = max_terms if n_terms is None else n_terms
    while n < cap:
        t = log_term(n)
        logs.append(t)
        total = np.logaddexp(total, t)
        if n_terms is None and n > 0 and t < logs[-2] and t < total + np.log(tol):
            return total
        n += 1
    if len(logs) > 1 and logs[-1] >= total + np.log(tol):
        warnings.warn(f"{what} stopped at {cap} terms with last term {np.exp(logs[-1] - total):.3g} of the sum",
                      NonConvergenceWarning)
    return total


def script_L(x, nu, k_prime, k2, n_terms=None, tol=1e-16, max_terms=100000, log=False):
    r"""The series :math:`\mathcal{L}(x) = \frac{1}{k_2} x^{1/k_2} \sum_{n\ge0}
    (\nu x^{k'/k_2})^n \Gamma(k'n/k_2 + 1/k_2)/\Gamma(n+1)`, equal to
    :math:`\int_0^\infty e^{\nu r^{k'}} e^{-r^{k_2}/x}\, dr`.

    :param x: Positive argument.
    :type x: float
    :param n_terms: Fixed number of terms; by default terms are added until the last one is below ``tol``
        of the partial sum.
    :type n_terms: int, optional
    :param log: Whether to return the natural logarithm, defaults to False.
    :type log: bool
    :rtype: float
    """
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    if not k_prime < k2:
        raise ValueError(f"the series needs k' < k2, got ({k_prime}, {k2})")
    prefactor = np.log(x) / k2 - np.log(k2)
    if nu == 0:
        value = prefactor + gammaln(1 / k2)
    else:
        log_ratio = np.log(nu) + k_prime / k2 * np.log(x)
        value = prefactor + _sum_log_terms(
            lambda n: n * log_ratio + gammaln((k_prime * n + 1) / k2) - gammaln(n + 1),
            tol, max_terms, n_terms, what='L series',
        )
    return float(value) if log else float(np.exp(value))


def script_L_quadrature(x, nu, k_prime, k2):
    r"""Direct quadrature of :math:`\int_0^\infty e^{\nu r^{k'}} e^{-r^{k_2}/x}\, dr`."""
    r_damp = (2 * nu * x) ** (1 / (k2 - k_prime)) if nu > 0 else 0.0
    r_max = max(r_damp, (1600 * x) ** (1 / k2))
    peak = (nu * k_prime * x / k2) ** (1 / (k2 - k_prime)) if nu > 0 else 0.0
    value, _ = quad(lambda r: np.exp(nu * r ** k_prime - r ** k2 / x), 0, r_max,
                    points=[peak] if 0 < peak < r_max else None, limit=500, epsabs=0, epsrel=1e-13)
    return float(value)


def _log_growth_envelope(x, nu, k_prime, k2):
    power = 1 / k2 + 1 / (k2 - k_prime)
    return power * np.log(x) + nu ** (k2 / (k2 - k_prime)) * x ** (k_prime / (k2 - k_prime))


def script_L_growth_constant(xs, nu, k_prime, k2):
    r"""Fitted :math:`C_3` with :math:`\mathcal{L}(x) \le C_3 x^{1/k_2 + 1/(k_2-k')} \exp(\nu^{k_2/(k_2-k')}
    x^{k'/(k_2-k')})` for the sampled :math:`x \ge 1`, and its value on the doubled sample."""
    xs = np.asarray([x for x in xs if x >= 1], dtype=float)
    if xs.size == 0:
        raise ValueError("the growth bound is checked for x >= 1 only")

    def fitted(points):
        return float(np.exp(max(script_L(x, nu, k_prime, k2, log=True) - _log_growth_envelope(x, nu, k_prime, k2)
                                for x in points)))

    constant, refined = fitted(xs), fitted(_refine(xs))
    return GrowthConstant(constant, refined, refined < 2 * constant)


class MittagLefflerValue(NamedTuple):
    """``value`` is ``inf`` when ``log_scaled``; ``log_value`` is always available."""
    value: float
    log_value: float
    log_scaled: bool


def mittag_leffler_wiman(alpha, beta, z, n_terms=None, tol=1e-16, max_terms=200000):
    r"""The Wiman function :math:`E_{\alpha,\beta}(z) = \sum_{n\ge0} z^n/\Gamma(\beta + \alpha n)` for real
    :math:`z \ge 0`, summed in log space. For :math:`z^{1/\alpha} > 700` only the logarithm is returned.

    :param alpha: :math:`\alpha > 0` (the growth bound of :func:`wiman_constant` needs :math:`\alpha < 2`).
    :type alpha: float
    :param beta: :math:`\beta > 0`.
    :type beta: float
    :param z: Non-negative argument.
    :type z: float
    :rtype: MittagLefflerValue
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if beta <= 0 or z < 0:
        raise ValueError(f"need beta > 0 and z >= 0, got ({beta}, {z})")
    if z == 0:
        log_value = -gammaln(beta)
    else:
        log_z = np.log(z)
        log_value = _sum_log_terms(lambda n: n * log_z - gammaln(beta + alpha * n), tol, max_terms, n_terms,
                                   what='Mittag-Leffler series')
    log_scaled = z > 0 and z ** (1 / alpha) > 700
    return MittagLefflerValue(np.inf if log_scaled else float(np.exp(log_value)), float(log_value), bool(log_scaled))


def wiman_constant(alpha, beta, zs):
    r"""Fitted :math:`C_2` with :math:`E_{\alpha,\beta}(z) \le C_2 z^{(1-\beta)/\alpha} e^{z^{1/\alpha}}` over
    the sampled :math:`z \ge 1`, and its value on the doubled sample."""
    zs = np.asarray([z for z in zs if z >= 1], dtype=float)
    if zs.size == 0:
        raise ValueError("the Wiman bound is checked for z >= 1 only")

    def fitted(points):
        return float(np.exp(max(mittag_leffler_wiman(alpha, beta, z).log_value
                                - (1 - beta) / alpha * np.log(z) - z ** (1 / alpha) for z in points)))

    constant, refined = fitted(zs), fitted(_refine(zs))
    return GrowthConstant(constant, refined, refined < 2 * constant)


# ---------------------------------------------------------------------------------------------------------------------
# Kernel integral bounds
# ---------------------------------------------------------------------------------------------------------------------

@dataclass
class BoundReport:
    """Fitted envelope constants with the per-sample table (``ratio`` is the sample over its envelope)."""
    c1: float
    c1_fitted: float
    c_large: float
    c_small: float
    stable: bool
    frame: pd.DataFrame

    @property
    def passed(self):
        return self.stable and self.c1_fitted <= self.c1 * (1 + 1e-10)


def _kernel_phase(spec, t1_abs, t2_abs, damping):
    def phi(r):
        return (spec.nu * r ** spec.k_prime - damping * (r / t1_abs) ** spec.k1
                - damping * (r / t2_abs) ** spec.k2)
    return phi


def _log_integral(phi, a, b=np.inf, n_grid=4001, order=8):
    r""":math:`\log\int_a^b e^{\varphi(r)}\, dr` by composite Gauss-Legendre on a grid graded towards ``a``,
    with the maximum of :math:`\varphi` factored out."""
    upper = b
    if not np.isfinite(b):
        upper = max(2 * a, 1.0)
        for _ in range(200):
            if phi(upper) < phi(a) - 800 and phi(upper) < phi(upper / 2):
                break
            upper *= 2
    length = upper - a
    edges = np.unique(np.concatenate([np.linspace(a, upper, n_grid), a + length * np.geomspace(1e-10, 1, n_grid)]))
    x, w = roots_legendre(order)
    mid = (edges[1:] + edges[:-1]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    values = phi(r)
    shift = float(values.max())
    total = float(np.sum(weights * np.exp(values - shift)))
    return shift + np.log(total) if total > 0 else -np.inf


def _log_envelope_large(spec, rho, t1_abs, t2_abs, damping):
    k, kp = spec.k2, spec.k_prime
    x = t2_abs ** k / damping
    return (-damping * rho ** spec.k1 / t1_abs ** spec.k1 + (1 + k / (k - kp)) * np.log(t2_abs)
            + spec.nu ** (k / (k - kp)) * x ** (kp / (k - kp)))


def _log_envelope_small(spec, rho, t1_abs, t2_abs, damping):
    return -damping * rho ** spec.k1 / (2 * t1_abs ** spec.k1) - damping * rho ** spec.k2 / (2 * t2_abs ** spec.k2)


def _bound_table(spec, rho, t1s, t2s, damping, rho1, rho2_inf, rho2_small):
    rows = []
    for a in t1s:
        for b in t2s:
            phi = _kernel_phase(spec, a, b, damping)
            log_l1 = _log_integral(phi, 0.0, rho)
            log_l2 = _log_integral(phi, rho)
            if a < rho1 and b >= rho2_inf:
                regime, envelope = 'large-t2', _log_envelope_large(spec, rho, a, b, damping)
            elif a < rho1 and b < rho2_small:
                regime, envelope = 'small-t2', _log_envelope_small(spec, rho, a, b, damping)
            else:
                regime, envelope = '-', np.nan
            rows.append(dict(t1_abs=a, t2_abs=b, regime=regime, log_L1=log_l1, log_L2=log_l2,
                             log_envelope=envelope, log_ratio=log_l2 - envelope))
    return pd.DataFrame(rows)


def _fitted(frame, regime):
    part = frame[frame.regime == regime]
    return float(np.exp(part.log_ratio.max())) if len(part) else np.nan


def kernel_bound_check(spec, rho, t1_samples, t2_samples, delta=np.pi / 12, rho1=1.0, rho2_inf=1.0,
                       rho2_small=1.0):
    r"""Bounds on the kernel integrals :math:`L_1 = \int_0^\rho e^{\varphi}` and
    :math:`L_2 = \int_\rho^\infty e^{\varphi}`, where
    :math:`\varphi(r) = \nu r^{k'} - \delta_1 (r/|T_1|)^{k_1} - \delta_2 (r/|T_2|)^{k_2}` and
    :math:`\delta_j = \sin\delta` (the damping left by a cone margin :math:`\delta`).

    Checks that :math:`L_1 \le C_1 = \int_0^\rho e^{\nu r^{k'}} dr`, and fits
    :math:`C_{\mathrm{large}}` (:math:`|T_1| < \rho_1`, :math:`|T_2| \ge \rho_2^\infty`, envelope
    :math:`e^{-\delta_1\rho^{k_1}/|T_1|^{k_1}} |T_2|^{1+k_2/(k_2-k')} \exp(\nu^{k_2/(k_2-k')}(|T_2|^{k_2}/\delta_2)^{k'/(k_2-k')})`)
    and :math:`C_{\mathrm{small}}` (both small, envelope
    :math:`e^{-\delta_1\rho^{k_1}/(2|T_1|^{k_1}) - \delta_2\rho^{k_2}/(2|T_2|^{k_2})}`) as maximal ratios,
    then repeats the fit on the doubled sample.

    :param t1_samples: Sampled :math:`|T_1|`.
    :param t2_samples: Sampled :math:`|T_2|`.
    :rtype: BoundReport
    :raises EnvelopeViolationError: If :math:`L_1 > C_1` somewhere, or the doubled sample exceeds twice a
        fitted constant; ``offending`` lists the :math:`(|T_1|, |T_2|)` pairs.
    """
    damping = np.sin(delta)
    t1s = np.sort(np.abs(np.asarray(t1_samples, dtype=float)))
    t2s = np.sort(np.abs(np.asarray(t2_samples, dtype=float)))
    c1 = quad(lambda r: np.exp(spec.nu * r ** spec.k_prime), 0, rho, epsabs=0, epsrel=1e-13)[0]
    frame = _bound_table(spec, rho, t1s, t2s, damping, rho1, rho2_inf, rho2_small)

    over = frame[frame.log_L1 > np.log(c1) + 1e-10]
    if len(over):
        raise EnvelopeViolationError(f"L1 exceeds C1 = {c1:.6g} at {len(over)} samples",
                                     offending=list(zip(over.t1_abs, over.t2_abs)))
    c_large, c_small = _fitted(frame, 'large-t2'), _fitted(frame, 'small-t2')

    doubled = _bound_table(spec, rho, _refine(t1s), _refine(t2s), damping, rho1, rho2_inf, rho2_small)
    offending = []
    for regime, constant in (('large-t2', c_large), ('small-t2', c_small)):
        if np.isnan(constant):
            continue
        part = doubled[(doubled.regime == regime) & (doubled.log_ratio > np.log(2 * constant))]
        offending.extend(zip(part.t1_abs, part.t2_abs))
    if offending:
        raise EnvelopeViolationError(f"fitted envelope constants unstable at {len(offending)} refined samples",
                                     offending=offending)
    logger.info(f"kernel bounds: C1 = {c1:.6g}, C_large = {c_large:.6g}, C_small = {c_small:.6g}")
    return BoundReport(c1=float(c1), c1_fitted=float(np.exp(frame.log_L1.max())), c_large=c_large, c_small=c_small,
                       stable=True, frame=frame)


# ---------------------------------------------------------------------------------------------------------------------
# Gevrey coefficients
# ---------------------------------------------------------------------------------------------------------------------

def leja_order(nodes):
    """Leja ordering: start at the largest modulus, then maximize the product of distances."""
    nodes = np.asarray(nodes, dtype=complex)
    remaining = list(range(len(nodes)))
    order = [max(remaining, key=lambda i: abs(nodes[i]))]
    remaining.remove(order[0])
    while remaining:
        nxt = max(remaining, key=lambda i: np.sum(np.log(np.abs(nodes[i] - nodes[order]) + 1e-300)))
        order.append(nxt)
        remaining.remove(nxt)
    return nodes[order], np.array(order)


def divided_differences(x, y):
    """Newton divided-difference coefficients of the interpolant of ``(x, y)``."""
    coeffs = np.array(y, dtype=complex)
    for j in range(1, len(x)):
        coeffs[j:] = (coeffs[j:] - coeffs[j - 1:-1]) / (x[j:] - x[:-j])
    return coeffs


@dataclass
class GevreyReport:
    """Advisory report of the probe; ``growth`` holds one fit per candidate order."""
    coefficients: np.ndarray
    condition: float
    growth: pd.DataFrame
    best_order: float
    advisory: bool = True


def gevrey_coefficient_probe(eps, values, n_max, k_candidates=None, spec=None, cond_limit=1e12):
    r"""Approximate the expansion coefficients :math:`f_0, \dots, f_{n_\max}` of :math:`u(\epsilon)` from samples
    on a ray by Newton interpolation on Leja-ordered nodes, and fit :math:`\log|f_n| \approx \log D + n\log M +
    \log\Gamma(n/k + 1)` for every candidate :math:`k` (:math:`k = \infty` drops the Gamma factor).

    :param eps: Distinct sample points, at least ``n_max + 2`` of them.
    :param values: Samples :math:`u(\epsilon)`.
    :param n_max: Highest coefficient returned.
    :type n_max: int
    :param k_candidates: Candidate orders; defaults to :math:`(1, \lambda_1k_1, \lambda_2k_2, \infty)` with a
        ``spec``, :math:`(1, \infty)` without.
    :rtype: GevreyReport
    :raises ConditioningError: If the scaled Vandermonde matrix has condition number above ``cond_limit``.
    """
    eps = np.asarray(eps, dtype=complex)
    values = np.asarray(values, dtype=complex)
    if len(np.unique(np.round(eps, 15))) < n_max + 2:
        raise ValueError(f"need at least n_max + 2 = {n_max + 2} distinct eps samples")
    if k_candidates is None:
        k_candidates = (1, spec.lambda1 * spec.k1, spec.lambda2 * spec.k2, np.inf) if spec is not None else (1, np.inf)

    scale = np.abs(eps).max()
    nodes, order = leja_order(eps / scale)
    condition = float(np.linalg.cond(np.vander(nodes, increasing=True)))
    if condition > cond_limit:
        raise ConditioningError(f"scaled Vandermonde condition number {condition:.3g} exceeds {cond_limit:.3g}")
    newton = divided_differences(nodes, values[order])
    poly = np.array([newton[-1]])
    for j in range(len(nodes) - 2, -1, -1):
        poly = npoly.polyadd(npoly.polymulx(poly) - nodes[j] * poly, [newton[j]])
    coefficients = poly[:n_max + 1] / scale ** np.arange(n_max + 1)

    n = np.arange(1, n_max + 1)
    logs = np.log(np.abs(coefficients[1:]) + 1e-300)
    rows = []
    for k in k_candidates:
        gamma_part = np.zeros_like(n, dtype=float) if np.isinf(k) else gammaln(n / k + 1)
        A = np.stack([np.ones_like(n, dtype=float), n.astype(float)], axis=1)
        (log_d, log_m), *_ = np.linalg.lstsq(A, logs - gamma_part, rcond=None)
        residual = float(np.sqrt(np.mean((A @ [log_d, log_m] + gamma_part - logs) ** 2)))
        rows.append(dict(k=float(k), log_D=float(log_d), log_M=float(log_m), rms_residual=residual))
    growth = pd.DataFrame(rows)
    best = float(growth.loc[growth.rms_residual.idxmin(), 'k'])
    logger.info(f"Gevrey probe (advisory): condition {condition:.3g}, best order k = {best}")
    return GevreyReport(coefficients=coefficients, condition=condition, growth=growth, best_order=best)
