"""The experiment pipeline behind the command-line interface.

An :class:`Experiment` builds every object of a run from an :class:`~asymptolab.config.ExperimentConfig`
and executes the commands one (covering sector, :math:`\\epsilon`) job at a time, writing CSV artifacts.
"""
import multiprocessing
from functools import cached_property
from pathlib import Path

import dill
import numpy as np
import pandas as pd

from .assembly import (
    InnerDomain, build_admissible_set, validate_admissible_set, select_xi, outer_solution, inner_solution,
    difference_deformed,
)
from .asymptotics import (
    flatness_fit, flatness_plot_data, kernel_bound_check, script_L, script_L_quadrature, script_L_growth_constant,
    mittag_leffler_wiman, wiman_constant,
)
from .borel import BorelSolver, small_divisor_demo
from .callbacks import _LoggerMixin, ReportCallback, PeriodIteration
from .config import config_from_mapping
from .exceptions import InfeasibleConeError, DomainViolationError, DirectionUnavailableError
from .grids import FrequencyGrid, sector_samples, strip_samples
from .problem import (
    CoefficientFamily, ForcingSpec, Sector, ValidationReport, CheckResult, validate_spec, build_good_covering,
    check_covering, check_coefficient_bounds, check_forcing_bound,
)
from .utils import write_csv, safe_mkdir

KINDS = ('outer', 'inner')


class Experiment(_LoggerMixin):
    r"""Everything one configured run needs, built lazily.

    Outer solutions use the opening-constrained covering (``iota1`` sectors), inner solutions the plain
    one (``iota2`` sectors). The :math:`\epsilon` values of sector :math:`h` are the ladder entries rotated
    by the direction of the sector's bisector.

    :param config: The configuration.
    :type config: `asymptolab.config.ExperimentConfig`
    :param out_dir: Output directory, defaults to the configured one.
    :type out_dir: str or `pathlib.Path`, optional
    :param logger: The logger (or its name), defaults to the 'asymptolab' logger.
    :type logger: str or ``logging.Logger``
    """

    def __init__(self, config, out_dir=None, logger=None):
        super(Experiment, self).__init__(logger=logger)
        self.config = config
        self.spec = config.spec
        self.out_dir = Path(out_dir if out_dir is not None else config.output_dir)
        self.sha = config.config_sha256
        self.beta_prime = config.beta_prime
        geometry = config.geometry
        self.T1 = Sector(*geometry.T1)
        self.T2 = Sector(*geometry.T2)
        self.rng = np.random.default_rng(config.seed)

    # ----------------------------------------------------------------------------------------------------------------
    # Lazily built objects
    # ----------------------------------------------------------------------------------------------------------------

    @cached_property
    def m_grid(self):
        g = self.config.grids
        if g.n_m is not None and g.cutoff is not None:
            return FrequencyGrid(g.n_m, g.cutoff)
        return FrequencyGrid.for_decay(self.spec.beta, self.spec.mu, spacing=g.m_spacing,
                                       tol=self.config.tolerances.fourier_tol, strip=self.beta_prime)

    @cached_property
    def coefficients(self):
        return CoefficientFamily.uniform(self.spec, self.config.coupling)

    @cached_property
    def forcing(self):
        if self.config.forcing == 'zero':
            return ForcingSpec.zero(self.spec)
        return ForcingSpec.standard(self.spec, amplitude=self.config.forcing_amplitude, nu_f=self.config.nu_f)

    @cached_property
    def solver(self):
        g, tol = self.config.grids, self.config.tolerances
        return BorelSolver(self.spec, self.coefficients, self.forcing, self.m_grid, r_max=g.r_max,
                           ratio=g.ray_ratio, tol=tol.fp_tol, max_iterations=tol.max_iterations, logger=self.logger)

    def covering(self, kind):
        if kind == 'outer':
            return self._constrained
        if kind == 'inner':
            return self._plain
        raise ValueError(f"kind must be 'outer' or 'inner', got {kind!r}")

    @cached_property
    def _plain(self):
        c = self.config.coverings
        return build_good_covering(c.iota2, min_opening=c.min_opening, kind='plain', radius=self.spec.epsilon0,
                                   overlap=c.overlap)

    @cached_property
    def _constrained(self):
        c = self.config.coverings
        return build_good_covering(c.iota1, min_opening=c.min_opening, kind='opening-constrained',
                                   lambda2k2=self.spec.lambda2 * self.spec.k2, radius=self.spec.epsilon0,
                                   overlap=c.overlap)

    @cached_property
    def _admissible(self):
        geometry = self.config.geometry
        return {kind: build_admissible_set(self.spec, self.covering(kind), self.T1, self.T2, self.m_grid,
                                           delta=geometry.delta, t2_radius=geometry.rho2,
                                           chi2=geometry.chi2 if kind == 'inner' else None)
                for kind in KINDS}

    def admissible(self, kind):
        return self._admissible[kind]

    @cached_property
    def inner_domain(self):
        return InnerDomain.build(self.spec, self.admissible('inner'), self.config.geometry.chi2)

    def eps(self, kind, h, j):
        return complex(self.config.eps_ladder[j]) * np.exp(1j * self.covering(kind)[h].direction)

    def jobs(self, kind):
        return [(kind, h, j) for h in range(self.covering(kind).iota) for j in range(len(self.config.eps_ladder))]

    # ----------------------------------------------------------------------------------------------------------------
    # Sample grids
    # ----------------------------------------------------------------------------------------------------------------

    def t1_samples(self, kind, h):
        T1 = self.admissible(kind).T1_for(h)
        return sector_samples(T1, self.config.grids.n_t1, 1, r_max=0.9 * T1.radius)

    def t2_samples(self, h):
        """Outer :math:`t_2` samples in the turned :math:`\mathcal{T}_2` of sector ``h``."""
        return sector_samples(self.admissible('outer').T2_for(h), self.config.grids.n_t2, 1,
                              r_max=0.9 * self.config.geometry.rho2)

    @cached_property
    def x2_samples(self):
        n = self.config.grids.n_x2
        return self.inner_domain.samples(n, 1)

    @cached_property
    def z_samples(self):
        g = self.config.grids
        return strip_samples(self.beta_prime, g.n_z, 1, x_max=g.z_max)

    def _points(self, kind, h, eps):
        if kind == 'outer':
            t2s = self.t2_samples(h)
        else:
            t2s = self.inner_domain.t2(self.x2_samples, eps, h)
        return [(t1, t2) for t1 in self.t1_samples(kind, h) for t2 in t2s]

    def directions(self, kind, h, eps):
        """The distinct Laplace directions needed by the samples of one job."""
        adm = self.admissible(kind)
        sector = adm.sector_for(h)
        xi = {round(select_xi(self.spec, t1, t2, eps, sector, adm.delta), 12) for t1, t2 in self._points(kind, h, eps)}
        return sorted(xi)

    # ----------------------------------------------------------------------------------------------------------------
    # Commands
    # ----------------------------------------------------------------------------------------------------------------

    def validate(self):
        """Hypotheses of the problem, both coverings, the data bounds and both admissible sets.

        :rtype: `asymptolab.problem.ValidationReport`
        """
        report = validate_spec(self.spec, self.m_grid)
        for kind in KINDS:
            covering = self.covering(kind)
            report = report + ValidationReport(tuple(
                CheckResult(f"{kind}-{c.name}", c.passed, c.detail) for c in check_covering(covering).checks
            ))
        eps_samples = [self.eps('outer', 0, j) for j in range(len(self.config.eps_ladder))] or [self.spec.epsilon0 / 2]
        tau_samples = sector_samples(Sector(0.0, np.pi), 8, 8, r_max=self.config.grids.r_max)
        report = report + ValidationReport((
            check_coefficient_bounds(self.spec, self.coefficients, self.m_grid, eps_samples),
            check_forcing_bound(self.spec, self.forcing, self.m_grid, tau_samples, eps_samples),
        ))
        for kind in KINDS:
            adm = validate_admissible_set(self.spec, self.admissible(kind), t2_radius=self.config.geometry.rho2)
            report = report + ValidationReport(tuple(
                CheckResult(f"{kind}-{c.name}", c.passed, c.detail) for c in adm.checks
            ))
        return report

    def omega_path(self, kind, h, j, suffix):
        return self.out_dir / 'omega' / f'omega_{kind}_h{h:02d}_e{j:02d}.{suffix}'

    def solve_job(self, kind, h, j):
        """Solve the Borel-plane equation for one job on every direction its samples need; writes the
        solution as CSV and as a dill checkpoint and returns one row of the convergence log."""
        eps = self.eps(kind, h, j)
        report = ReportCallback(logger=self.logger).conditioned_on(PeriodIteration(10))
        result = self.solver.solve(eps, directions=self.directions(kind, h, eps), callbacks=[report])
        write_csv(result.omega.to_frame(), self.omega_path(kind, h, j, 'csv'), self.sha)
        safe_mkdir(self.omega_path(kind, h, j, 'pkl').parent)
        with open(self.omega_path(kind, h, j, 'pkl'), 'wb') as f:
            dill.dump(result.omega, f)
        self.logger.info(f"solved {kind} h = {h}, eps = {eps:.4g}: {result.iterations} iterations, "
                         f"contraction {result.contraction_factor:.3g}, residual {result.residual:.3e}")
        return dict(kind=kind, h=h, j=j, eps_re=eps.real, eps_im=eps.imag, iterations=result.iterations,
                    contraction_factor=result.contraction_factor, residual=result.residual,
                    ball_radius=result.ball_radius)

    def load_omega(self, kind, h, j):
        """The checkpointed solution of one job.

        :raises FileNotFoundError: If the job was never solved.
        """
        path = self.omega_path(kind, h, j, 'pkl')
        if not path.exists():
            raise FileNotFoundError(f"missing omega checkpoint {path}; run 'solve' first or drop --no-solve")
        with open(path, 'rb') as f:
            return dill.load(f)

    def sample_job(self, kind, h, j, no_solve=False):
        """Inner or outer solution samples of one job, written as CSV; returns a summary row."""
        eps = self.eps(kind, h, j)
        omega = self.load_omega(kind, h, j) if no_solve else None
        adm = self.admissible(kind)
        t1s = self.t1_samples(kind, h)
        if kind == 'outer':
            sample = outer_solution(self.spec, self.solver, adm, h, eps, t1s, self.t2_samples(h), self.z_samples,
                                    beta_prime=self.beta_prime, rho2=self.config.geometry.rho2, omega=omega)
        else:
            sample = inner_solution(self.spec, self.solver, adm, self.inner_domain, h, eps, t1s, self.x2_samples,
                                    self.z_samples, beta_prime=self.beta_prime, omega=omega)
        write_csv(sample.to_frame(), self.out_dir / kind / f'{kind}_h{h:02d}_e{j:02d}.csv', self.sha)
        return dict(kind=kind, h=h, j=j, eps_re=eps.real, eps_im=eps.imag, sup_abs_u=sample.sup, status='ok')

    def run(self, method, kind, jobs=1, **kwargs):
        """Run ``method`` (``'solve_job'`` or ``'sample_job'``) over every job of ``kind``; errors of a
        single job are logged and recorded, the others proceed.

        :return: One row per job and the number of failed jobs.
        :rtype: tuple[`pandas.DataFrame`, int]
        """
        tasks = [(self.config.raw, str(self.out_dir), method, kind, h, j, kwargs) for _, h, j in self.jobs(kind)]
        if jobs > 1 and len(tasks) > 1:
            with multiprocessing.Pool(jobs) as pool:
                rows = pool.map(_run_job, tasks)
        else:
            rows = [self._guarded(method, kind, h, j, **kwargs) for *_, h, j, _ in tasks]
        frame = pd.DataFrame(rows)
        failures = int((frame.status != 'ok').sum()) if len(frame) else 0
        return frame, failures

    def _guarded(self, method, kind, h, j, **kwargs):
        try:
            row = getattr(self, method)(kind, h, j, **kwargs)
            row.setdefault('status', 'ok')
            return row
        except (InfeasibleConeError, DomainViolationError, DirectionUnavailableError, FileNotFoundError,
                ValueError, RuntimeError) as e:
            self.logger.error(f"{method} {kind} h = {h}, j = {j} failed: {e}")
            return dict(kind=kind, h=h, j=j, status=f'{type(e).__name__}: {e}')

    def flatness(self, which):
        r"""Fit the flatness order of consecutive differences on every selected overlap.

        :math:`\epsilon` runs over the ladder moduli on the bisector of the overlap and :math:`\epsilon^{\lambda_1}t_1`
        (and for the outer kind :math:`\epsilon^{\lambda_2}t_2`) points along a direction admissible in both Borel
        sectors; the fit uses :math:`\log(|E_1| + |E_2| + |E_3|)`. Writes the differences, the fits and plot data.

        :rtype: `pandas.DataFrame`
        :raises DegenerateDataError: If the ladder has fewer than 4 entries or carries no decay signal.
        """
        geometry = self.config.geometry
        covering = self.covering(which)
        adm = self.admissible(which)
        overlaps = geometry.flatness_overlaps if geometry.flatness_overlaps is not None else range(covering.iota)
        x2 = (self.inner_domain.chi2.r1 + self.inner_domain.chi2.r2) / 2 * np.exp(
            1j * (self.inner_domain.chi2.alpha + self.inner_domain.chi2.beta) / 2)
        candidates = sorted({self.spec.k1, self.spec.k2, self.spec.lambda1 * self.spec.k1,
                             self.spec.lambda2 * self.spec.k2})
        rows, fits = [], []
        for h in overlaps:
            direction = covering.overlap_direction(h)
            aim = adm.pair_direction(h)
            t1 = geometry.flatness_t1 * np.exp(1j * (aim - self.spec.lambda1 * direction))
            samples = []
            for modulus in np.abs(np.asarray(self.config.eps_ladder, dtype=complex)):
                eps = modulus * np.exp(1j * direction)
                if which == 'inner':
                    t2 = complex(self.inner_domain.t2(x2, eps, h, check=False))
                else:
                    t2 = geometry.flatness_t2 * np.exp(1j * (aim - self.spec.lambda2 * direction))
                result = difference_deformed(self.spec, self.solver, covering, adm, h, t1, t2, 0.0, eps)
                rows.append(dict(h=h, eps_abs=modulus, direct_abs=abs(result.direct), E1_abs=abs(result.E1),
                                 E2_abs=abs(result.E2), E3_abs=abs(result.E3), log_E1=result.log_E1,
                                 log_E2=result.log_E2, log_E3=result.log_E3, log_flatness=result.log_flatness,
                                 mismatch=result.mismatch))
                samples.append((modulus, result.log_flatness))
            fit = flatness_fit(samples, candidates, log_scale=True)
            write_csv(flatness_plot_data(fit, log_scale=True), self.out_dir / 'flatness' /
                      f'flatness_{which}_h{h:02d}_plot.csv', self.sha)
            fits.append(fit.to_frame().assign(h=h, which=which))
        write_csv(pd.DataFrame(rows), self.out_dir / 'flatness' / f'differences_{which}.csv', self.sha)
        frame = pd.concat(fits, ignore_index=True) if fits else pd.DataFrame()
        write_csv(frame, self.out_dir / 'flatness' / f'flatness_{which}.csv', self.sha)
        return frame

    def demos(self):
        """The small-divisor demonstration, the kernel integral bounds and the special-function checks;
        writes one CSV per report and returns whether all of them passed."""
        spec, out = self.spec, self.out_dir / 'demos'
        rho = self.solver.direction.rho
        divisor = small_divisor_demo(spec, spec.rho_disc, self.m_grid.nodes[::max(1, self.m_grid.size // 50)])
        write_csv(divisor.frame, out / 'small_divisor.csv', self.sha)

        t1_abs = np.concatenate([[0.05, 0.1, 0.2, 0.4], self.rng.uniform(0.05, 0.5, 2)])
        t2_abs = np.concatenate([[0.05, 0.1, 0.2, 1.0, 2.0, 4.0], self.rng.uniform(0.05, 0.5, 2)])
        bounds = kernel_bound_check(spec, rho, t1_abs, t2_abs, delta=self.config.geometry.delta)
        write_csv(bounds.frame.assign(C1=bounds.c1, C_large=bounds.c_large, C_small=bounds.c_small),
                  out / 'kernel_bounds.csv', self.sha)

        xs = [0.5, 1.0, 5.0, 20.0]
        series = pd.DataFrame([dict(x=x, series=script_L(x, spec.nu, spec.k_prime, spec.k2),
                                    quadrature=script_L_quadrature(x, spec.nu, spec.k_prime, spec.k2)) for x in xs])
        series['relative_error'] = np.abs(series.series - series.quadrature) / series.quadrature
        growth = script_L_growth_constant([1.0, 5.0, 20.0, 100.0], spec.nu, spec.k_prime, spec.k2)
        write_csv(series.assign(C3=growth.constant, C3_refined=growth.refined), out / 'script_L.csv', self.sha)

        alpha, beta = 1 - spec.k_prime / spec.k2, 1 - 1 / spec.k2
        zs = np.linspace(0.0, 20.0, 11)
        ml = pd.DataFrame(dict(
            z=zs,
            E11=[mittag_leffler_wiman(1.0, 1.0, z).value for z in zs],
            exp=np.exp(zs),
            E21=[mittag_leffler_wiman(2.0, 1.0, z ** 2).value for z in zs],
            cosh=np.cosh(zs),
        ))
        wiman = wiman_constant(alpha, beta, [1.0, 4.0, 16.0])
        write_csv(ml.assign(C2=wiman.constant, C2_refined=wiman.refined), out / 'mittag_leffler.csv', self.sha)

        ml_error = max(np.max(np.abs(ml.E11 - ml.exp) / ml.exp), np.max(np.abs(ml.E21 - ml.cosh) / ml.cosh))
        passed = bool(
            (divisor.passed or not divisor.applicable) and bounds.passed and growth.stable and wiman.stable
            and series.relative_error.max() < 1e-8 and ml_error < 1e-10
        )
        self.logger.info(f"demos {'passed' if passed else 'FAILED'}")
        return passed


def _run_job(task):
    raw, out_dir, method, kind, h, j, kwargs = task
    experiment = Experiment(config_from_mapping(raw), out_dir=out_dir)
    return experiment._guarded(method, kind, h, j, **kwargs)
