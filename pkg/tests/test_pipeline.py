import numpy as np
import pytest

from asymptolab.config import reference_config_path, load_config, config_from_mapping
from asymptolab.pipeline import Experiment, KINDS
from asymptolab.utils import read_csv


@pytest.fixture
def reference():
    return load_config(reference_config_path())


@pytest.fixture
def small(reference):
    raw = reference.raw
    return config_from_mapping(dict(raw, grids=dict(raw['grids'], n_m=30, cutoff=6.0),
                                    geometry=dict(raw['geometry'], flatness_overlaps=[1])))


def test_reference_validation_passes(reference, tmp_path):
    experiment = Experiment(reference, out_dir=tmp_path)
    report = experiment.validate()
    assert report.passed, report.failed
    for kind in KINDS:
        admissible = experiment.admissible(kind)
        assert all(admissible.feasible)
        assert len(admissible.borel_sectors) == experiment.covering(kind).iota
    assert any(name.startswith('inner-admissible-h') for name in report.to_frame().check_name)


def test_samples_lie_in_turned_sectors(small, tmp_path):
    experiment = Experiment(small, out_dir=tmp_path)
    outer = experiment.admissible('outer')
    for h in (0, 5, 17):
        assert np.all(outer.T1_for(h).contains(experiment.t1_samples('outer', h)))
        assert np.all(outer.T2_for(h).contains(experiment.t2_samples(h)))
        assert np.all(np.abs(experiment.t2_samples(h)) < small.geometry.rho2)
    inner = experiment.admissible('inner')
    for h in (0, 9):
        eps = experiment.eps('inner', h, 2)
        assert np.all(inner.T2_for(h).contains(experiment.inner_domain.t2(experiment.x2_samples, eps, h)))
        assert experiment.directions('inner', h, eps)


def test_jobs(small, tmp_path):
    experiment = Experiment(small, out_dir=tmp_path)
    assert len(experiment.jobs('outer')) == 24 * 5
    assert len(experiment.jobs('inner')) == 32 * 5
    assert experiment.eps('outer', 3, 0) == pytest.approx(0.2 * np.exp(1j * experiment.covering('outer')[3].direction))
    empty = Experiment(config_from_mapping(dict(small.raw, eps_ladder=[])), out_dir=tmp_path)
    assert empty.jobs('outer') == []
    with pytest.raises(ValueError):
        experiment.covering('middle')


@pytest.mark.parametrize('which, target', [('outer', 10), ('inner', 8)])
def test_flatness_orders(small, tmp_path, which, target):
    experiment = Experiment(small, out_dir=tmp_path)
    frame = experiment.flatness(which)
    assert len(frame) == 1
    fit = frame.iloc[0]
    assert fit.h == 1
    assert abs(fit.order - target) <= 0.15 * target
    assert fit.r_squared > 0.99

    differences = read_csv(tmp_path / 'flatness' / f'differences_{which}.csv')
    assert len(differences) == len(small.eps_ladder)
    # smaller eps, flatter difference
    assert np.all(np.diff(differences.log_flatness) < 0)
    assert (tmp_path / 'flatness' / f'flatness_{which}_h01_plot.csv').exists()
