"""Experiment configuration: YAML files parsed into frozen dataclasses.

Polynomials are coefficient lists, constant term first; complex numbers are ``[re, im]`` pairs.
The ``spec`` section overrides the reference problem field by field.
"""
import copy
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import yaml

from .exceptions import ConfigError, SpecValidationError
from .problem import Annulus, ProblemSpec, reference_spec
from .utils import config_hash

logger = logging.getLogger(__name__)

_INT_FIELDS = ('k1', 'k2', 'k_prime', 'D1', 'D2', 'lambda1', 'lambda2', 'mu2', 'delta_D1', 'delta_D2', 'Delta_D1D2')
_FLOAT_FIELDS = ('beta', 'mu', 'nu', 'epsilon0', 'rho_disc')
_TOP_LEVEL = ('spec', 'problem', 'grids', 'coverings', 'geometry', 'tolerances', 'eps_ladder', 'seed',
              'output_dir', 'jobs')
MIN_COUNT = 4


def reference_config_path():
    """Path of the packaged reference experiment."""
    return Path(__file__).resolve().parent / 'configs' / 'reference.yaml'


def parse_complex(value, what='value'):
    """A number or an ``[re, im]`` pair as a complex number."""
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{what}: expected a number or [re, im], got {value!r}")


def _int(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what}: expected an integer, got {value!r}")
    return value


def _float(value, what, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what}: expected a number, got {value!r}")
    return float(value)


def _polynomial(value, what):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{what}: expected a non-empty coefficient list, got {value!r}")
    coeffs = [parse_complex(c, f"{what}[{i}]") for i, c in enumerate(value)]
    if all(c.imag == 0 for c in coeffs):
        return [c.real for c in coeffs]
    return coeffs


def _int_tuple(value, what):
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{what}: expected a list of integers, got {value!r}")
    return tuple(_int(v, f"{what}[{i}]") for i, v in enumerate(value))


def _check_keys(mapping, allowed, section):
    if not isinstance(mapping, dict):
        raise ConfigError(f"section '{section}' must be a mapping, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(map(str, unknown))}")


def _annulus(value, what):
    if isinstance(value, dict):
        _check_keys(value, ('r1', 'r2', 'alpha', 'beta'), what)
        try:
            return Annulus(*(_float(value[k], f"{what}.{k}") for k in ('r1', 'r2', 'alpha', 'beta')))
        except KeyError as e:
            raise ConfigError(f"{what}: missing key {e}") from e
    if isinstance(value, (list, tuple)) and len(value) == 4:
        return Annulus(*(_float(v, what) for v in value))
    raise ConfigError(f"{what}: expected {{r1, r2, alpha, beta}}, got {value!r}")


def spec_from_dict(mapping, base=None):
    r"""A :class:`~asymptolab.problem.ProblemSpec` from a mapping of its fields; absent fields are taken
    from ``base`` (the reference problem by default).

    :raises ConfigError: For unknown keys or values of the wrong type or shape.
    """
    base = reference_spec() if base is None else base
    mapping = {} if mapping is None else mapping
    _check_keys(mapping, [f.name for f in fields(ProblemSpec)], 'spec')
    changes = {}
    for key, value in mapping.items():
        what = f"spec.{key}"
        if key in _INT_FIELDS:
            changes[key] = _int(value, what)
        elif key in _FLOAT_FIELDS:
            changes[key] = _float(value, what)
        elif key in ('delta_l1', 'delta_l2'):
            changes[key] = _int_tuple(value, what)
        elif key == 'Delta':
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{what}: expected a table of integers")
            changes[key] = tuple(_int_tuple(row, f"{what}[{i}]") for i, row in enumerate(value))
        elif key in ('Q', 'R_D'):
            changes[key] = _polynomial(value, what)
        elif key == 'R_l':
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{what}: expected a table of polynomials")
            changes[key] = tuple(
                tuple(_polynomial(p, f"{what}[{i}][{j}]") for j, p in enumerate(row if isinstance(row, (list, tuple)) else [row]))
                for i, row in enumerate(value)
            )
        elif key == 'annulus':
            changes[key] = _annulus(value, what)
    try:
        return base.replace(**changes)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"spec: {e}") from e


@dataclass(frozen=True)
class GridConfig:
    n_m: Optional[int] = None
    cutoff: Optional[float] = None
    m_spacing: float = 0.2
    r_max: float = 4.0
    ray_ratio: float = 1.05
    n_t1: int = 4
    n_t2: int = 4
    n_x2: int = 4
    n_z: int = 4
    z_max: float = 2.0


@dataclass(frozen=True)
class CoveringConfig:
    iota1: int = 24
    iota2: int = 32
    overlap: float = 0.1
    min_opening: float = 0.0


@dataclass(frozen=True)
class GeometryConfig:
    r"""Admissible-set geometry. ``T1 = (offset, half_opening, radius)`` and ``T2 = (offset, half_opening)``;
    in covering sector :math:`h` the sector :math:`\mathcal{T}_j` is turned so that :math:`\arg(\epsilon^{\lambda_j}
    t_j)` at the bisectors equals :math:`d_h` plus the offset."""
    delta: float = np.pi / 12
    T1: Tuple[float, float, float] = (0.0, 0.08, 1.0)
    T2: Tuple[float, float] = (0.0, 0.08)
    chi2: Annulus = Annulus(1.0, 2.0, -0.08, 0.08)
    rho2: float = 1.0
    beta_prime: Optional[float] = None
    flatness_t1: float = 1.0
    flatness_t2: float = 0.3
    flatness_overlaps: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class ToleranceConfig:
    quad_tol: float = 1e-12
    fourier_tol: float = 1e-12
    fp_tol: float = 1e-10
    max_iterations: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    r"""A complete experiment: the problem, its data, grids, coverings, geometry, tolerances and the
    :math:`\epsilon` ladder. ``raw`` keeps the parsed mapping so that worker processes can rebuild it."""
    spec: ProblemSpec
    coupling: float = 1e-2
    forcing: str = 'standard'
    forcing_amplitude: float = 1.0
    nu_f: Optional[float] = None
    grids: GridConfig = GridConfig()
    coverings: CoveringConfig = CoveringConfig()
    geometry: GeometryConfig = GeometryConfig()
    tolerances: ToleranceConfig = ToleranceConfig()
    eps_ladder: Tuple[complex, ...] = (0.2, 0.14, 0.1, 0.07, 0.05)
    seed: int = 0
    output_dir: str = 'results'
    jobs: int = 1
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def config_sha256(self):
        """SHA-256 of the parsed mapping without the output directory and job count."""
        mapping = {k: v for k, v in self.raw.items() if k not in ('output_dir', 'jobs')}
        return config_hash(mapping)

    @property
    def beta_prime(self):
        bp = self.geometry.beta_prime
        return self.spec.beta / 2 if bp is None else bp


def _section(cls, mapping, name, converters):
    mapping = {} if mapping is None else mapping
    _check_keys(mapping, [f.name for f in fields(cls)], name)
    values = {}
    for key, value in mapping.items():
        values[key] = converters[key](value, f"{name}.{key}")
    return cls(**values)


def _counts(config):
    g = config.grids
    for name in ('n_t1', 'n_t2', 'n_x2', 'n_z'):
        if getattr(g, name) < MIN_COUNT:
            raise ConfigError(f"grids.{name} must be at least {MIN_COUNT}, got {getattr(g, name)}")
    if g.n_m is not None and g.n_m < MIN_COUNT:
        raise ConfigError(f"grids.n_m must be at least {MIN_COUNT}, got {g.n_m}")
    for name in ('iota1', 'iota2'):
        if getattr(config.coverings, name) < MIN_COUNT:
            raise ConfigError(f"coverings.{name} must be at least {MIN_COUNT}, got {getattr(config.coverings, name)}")


def _check_ladder(ladder, epsilon0):
    moduli = np.abs(np.asarray(ladder, dtype=complex))
    if moduli.size and (np.any(np.diff(moduli) >= 0) or moduli.max() >= epsilon0):
        raise SpecValidationError(
            f"eps ladder moduli must be strictly decreasing and below epsilon0 = {epsilon0}, got {moduli.tolist()}"
        )


def _int_or_none(v, w):
    return None if v is None else _int(v, w)


def _tuple_of(n, v, w):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ConfigError(f"{w}: expected {n} numbers, got {v!r}")
    return tuple(_float(x, w) for x in v)


def _overlaps(v, w):
    return None if v is None else _int_tuple(v, w)


_GRID = dict(n_m=_int_or_none, cutoff=lambda v, w: _float(v, w, allow_none=True), m_spacing=_float, r_max=_float,
             ray_ratio=_float, n_t1=_int, n_t2=_int, n_x2=_int, n_z=_int, z_max=_float)
_COVERING = dict(iota1=_int, iota2=_int, overlap=_float, min_opening=_float)
_GEOMETRY = dict(delta=_float, T1=lambda v, w: _tuple_of(3, v, w), T2=lambda v, w: _tuple_of(2, v, w),
                 chi2=_annulus, rho2=_float, beta_prime=lambda v, w: _float(v, w, allow_none=True),
                 flatness_t1=_float, flatness_t2=_float, flatness_overlaps=_overlaps)
_TOLERANCE = dict(quad_tol=_float, fourier_tol=_float, fp_tol=_float, max_iterations=_int)
_PROBLEM = ('coupling', 'forcing', 'forcing_amplitude', 'nu_f')


def config_from_mapping(mapping):
    """An :class:`ExperimentConfig` from an already parsed mapping.

    :raises ConfigError: For structural problems (unknown keys, wrong types, counts below 4).
    :raises SpecValidationError: For an :math:`\\epsilon` ladder that is not strictly decreasing below
        :math:`\\epsilon_0`.
    """
    if not isinstance(mapping, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(mapping).__name__}")
    _check_keys(mapping, _TOP_LEVEL, 'config')
    spec = spec_from_dict(mapping.get('spec'))

    problem = mapping.get('problem') or {}
    _check_keys(problem, _PROBLEM, 'problem')
    forcing = problem.get('forcing', 'standard')
    if forcing not in ('standard', 'zero'):
        raise ConfigError(f"problem.forcing must be 'standard' or 'zero', got {forcing!r}")

    ladder = mapping.get('eps_ladder', [0.2, 0.14, 0.1, 0.07, 0.05])
    if not isinstance(ladder, (list, tuple)):
        raise ConfigError(f"eps_ladder must be a list, got {ladder!r}")
    ladder = tuple(parse_complex(e, f"eps_ladder[{i}]") for i, e in enumerate(ladder))

    output_dir = mapping.get('output_dir', 'results')
    if not isinstance(output_dir, str):
        raise ConfigError(f"output_dir must be a string, got {output_dir!r}")

    config = ExperimentConfig(
        spec=spec,
        coupling=_float(problem.get('coupling', 1e-2), 'problem.coupling'),
        forcing=forcing,
        forcing_amplitude=_float(problem.get('forcing_amplitude', 1.0), 'problem.forcing_amplitude'),
        nu_f=_float(problem.get('nu_f'), 'problem.nu_f', allow_none=True),
        grids=_section(GridConfig, mapping.get('grids'), 'grids', _GRID),
        coverings=_section(CoveringConfig, mapping.get('coverings'), 'coverings', _COVERING),
        geometry=_section(GeometryConfig, mapping.get('geometry'), 'geometry', _GEOMETRY),
        tolerances=_section(ToleranceConfig, mapping.get('tolerances'), 'tolerances', _TOLERANCE),
        eps_ladder=ladder,
        seed=_int(mapping.get('seed', 0), 'seed'),
        output_dir=output_dir,
        jobs=_int(mapping.get('jobs', 1), 'jobs'),
        raw=copy.deepcopy(mapping),
    )
    _counts(config)
    _check_ladder(config.eps_ladder, spec.epsilon0)
    return config


def load_config(path):
    """Read a YAML experiment file.

    :param path: Path of the file.
    :type path: str or `pathlib.Path`
    :rtype: ExperimentConfig
    :raises ConfigError: If the file cannot be read or parsed, or is structurally invalid.
    :raises SpecValidationError: If the :math:`\\epsilon` ladder is invalid.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    try:
        mapping = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if mapping is None:
        mapping = {}
    config = config_from_mapping(mapping)
    logger.debug(f"loaded {path} (config_sha256={config.config_sha256})")
    return config
