import pytest
from pytest import raises

from asymptolab.config import reference_config_path, load_config, config_from_mapping, spec_from_dict
from asymptolab.config import parse_complex, MIN_COUNT
from asymptolab.problem import reference_spec
from asymptolab.exceptions import ConfigError, SpecValidationError


@pytest.fixture
def reference():
    return load_config(reference_config_path())


@pytest.fixture
def write_yaml(tmp_path):
    def write(text, name='experiment.yaml'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return write


def test_reference_config(reference):
    assert len(reference.eps_ladder) == 5
    assert reference.coverings.iota1 == 24
    assert reference.coverings.iota2 == 32
    assert reference.spec.k1 == 2 and reference.spec.k2 == 5 and reference.spec.k_prime == 3
    assert reference.spec.Delta_D1D2 == 18
    assert reference.beta_prime == pytest.approx(reference.spec.beta / 2)
    assert reference.forcing == 'standard'
    assert reference.geometry.T1 == (0.0, 0.08, 1.0)
    assert reference.geometry.T2 == (0.0, 0.08)
    assert reference.geometry.flatness_overlaps == (0, 1)


def test_empty_mapping_gives_defaults():
    config = config_from_mapping({})
    assert config.eps_ladder == (0.2, 0.14, 0.1, 0.07, 0.05)
    assert config.spec.k2 == reference_spec().k2
    assert config.grids.n_t1 == MIN_COUNT


def test_config_hash(reference):
    raw = dict(reference.raw)
    same = config_from_mapping(dict(raw, output_dir='elsewhere', jobs=8))
    assert same.config_sha256 == reference.config_sha256
    other = config_from_mapping(dict(raw, seed=7))
    assert other.config_sha256 != reference.config_sha256
    assert len(reference.config_sha256) == 64


@pytest.mark.parametrize('mapping', [
    dict(unknown=1),
    dict(spec=dict(k3=2)),
    dict(spec=dict(k1='two')),
    dict(grids=dict(n_t1=MIN_COUNT - 1)),
    dict(grids=dict(n_m=2)),
    dict(coverings=dict(iota1=3)),
    dict(problem=dict(forcing='random')),
    dict(geometry=dict(T1=[0.0, 0.3])),
    dict(eps_ladder=0.1),
    dict(output_dir=3),
    dict(spec=dict(annulus=dict(r1=1.0))),
])
def test_structural_errors(mapping):
    with raises(ConfigError):
        config_from_mapping(mapping)


@pytest.mark.parametrize('ladder', [[0.1, 0.2], [0.3, 0.2], [0.1, 0.1]])
def test_ladder_errors(ladder):
    with raises(SpecValidationError):
        config_from_mapping(dict(eps_ladder=ladder))


def test_complex_ladder():
    config = config_from_mapping(dict(eps_ladder=[[0.2, 0.0], [0.0, 0.1]]))
    assert config.eps_ladder == (0.2, 0.1j)


def test_load_errors(write_yaml, tmp_path):
    with raises(ConfigError):
        load_config(tmp_path / 'missing.yaml')
    with raises(ConfigError):
        load_config(write_yaml("spec: [unclosed\n"))
    with raises(ConfigError):
        load_config(write_yaml("- 1\n- 2\n"))
    assert load_config(write_yaml("")).eps_ladder == (0.2, 0.14, 0.1, 0.07, 0.05)


def test_load_overrides(write_yaml):
    config = load_config(write_yaml("spec:\n  nu: 0.5\ngrids:\n  n_t1: 6\nseed: 3\n"))
    assert config.spec.nu == 0.5
    assert config.grids.n_t1 == 6
    assert config.seed == 3


def test_spec_from_dict():
    spec = spec_from_dict(dict(beta=2.0, Q=[3.0], Delta=[[2]]))
    assert spec.beta == 2.0
    assert spec.Delta == ((2,),)
    assert spec.k2 == reference_spec().k2
    base = reference_spec(nu=0.3)
    assert spec_from_dict(None, base=base).nu == 0.3
    with raises(ConfigError):
        spec_from_dict(dict(R_D=[]))
    with raises(ConfigError):
        spec_from_dict(dict(Delta=1))


def test_parse_complex():
    assert parse_complex([1, 2]) == 1 + 2j
    assert parse_complex(0.5) == 0.5
    with raises(ConfigError):
        parse_complex([1, 2, 3])
    with raises(ConfigError):
        parse_complex('one')
