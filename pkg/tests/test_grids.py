import numpy as np
import torch
import pytest
from pytest import raises

from asymptolab.grids import FrequencyGrid, RayGrid, ArcGrid, sector_samples, strip_samples
from asymptolab.problem import Sector
from asymptolab.exceptions import GridMismatchError


def test_frequency_grid():
    grid = FrequencyGrid(10, 2.0)
    assert grid.size == 21
    assert grid.nodes[10] == 0.0
    assert np.allclose(grid.nodes, -grid.nodes[::-1])
    assert grid.spacing == pytest.approx(0.2)
    assert grid.weights.sum() == pytest.approx(4.0)
    assert grid.index_of(0.4) == 12
    with raises(KeyError):
        grid.index_of(0.3)
    with raises(ValueError):
        FrequencyGrid(0, 1.0)
    with raises(ValueError):
        FrequencyGrid(4, -1.0)
    assert 'FrequencyGrid' in repr(grid)


def test_frequency_grid_for_decay():
    grid = FrequencyGrid.for_decay(1.0, 3.0, spacing=0.2, tol=1e-12)
    assert grid.tail_bound(1.0, 3.0) < 1e-12
    assert grid.spacing == pytest.approx(0.2)
    coarser = FrequencyGrid.for_decay(1.0, 3.0, spacing=0.2, tol=1e-6)
    assert coarser.cutoff < grid.cutoff
    wider = FrequencyGrid.for_decay(1.0, 3.0, spacing=0.2, tol=1e-12, strip=0.5)
    assert wider.cutoff > grid.cutoff
    assert wider.tail_bound(1.0, 3.0, strip=0.5) < 1e-12
    with raises(ValueError):
        FrequencyGrid.for_decay(1.0, 3.0, strip=1.0)


def test_frequency_grid_compatibility():
    a, b, c = FrequencyGrid(10, 2.0), FrequencyGrid(10, 2.0), FrequencyGrid(12, 2.0)
    a.check_compatible(b)
    assert a == b
    assert a != c
    assert hash(a) == hash(b)
    with raises(GridMismatchError):
        a.check_compatible(c)


def test_geometric_ray_integrates_du_over_u():
    ray = RayGrid.geometric(0.3, r_min=1e-8, r_max=4.0, ratio=1.01)
    # int_0^R u e^{-u} du/u along the real direction, rotated
    values = ray.taus * np.exp(-ray.taus * np.exp(-0.3j))
    exact = np.exp(0.3j) * (1 - np.exp(-4.0))
    assert ray.integrate(values) == pytest.approx(exact, rel=1e-4)
    assert ray.from_origin
    assert ray.r_max == pytest.approx(4.0)
    rotated = ray.rotated(1.0)
    assert np.allclose(rotated.radii, ray.radii)
    assert rotated.direction == 1.0


def test_gauss_ray_is_spectrally_accurate():
    ray = RayGrid.gauss(0.0, r_min=0.5, r_max=3.0, panel_ratio=1.5, order=16, from_origin=False)
    # int_a^b u^2 du/u = (b^2 - a^2) / 2
    assert ray.integrate(ray.taus ** 2) == pytest.approx((9.0 - 0.25) / 2, rel=1e-13)
    assert ray.radii[0] > 0.5
    assert not ray.from_origin


def test_ray_grid_checks():
    with raises(ValueError):
        RayGrid(0.0, [1.0], [1.0])
    with raises(ValueError):
        RayGrid(0.0, [0.0, 1.0], [1.0, 1.0])
    with raises(ValueError):
        RayGrid(0.0, [2.0, 1.0], [1.0, 1.0])


def test_arc_grid():
    arc = ArcGrid(0.5, 0.0, np.pi / 2, order=32)
    # int over the arc of du/u = i (end - start)
    assert arc.integrate(np.ones(arc.size)) == pytest.approx(1j * np.pi / 2)
    # int u du/u from 0.5 to 0.5i equals 0.5i - 0.5
    assert arc.integrate(arc.taus) == pytest.approx(0.5j - 0.5, abs=1e-13)
    assert np.allclose(np.abs(arc.taus), 0.5)
    reverse = ArcGrid(0.5, np.pi / 2, 0.0, order=32)
    assert reverse.integrate(np.ones(reverse.size)) == pytest.approx(-1j * np.pi / 2)
    with raises(ValueError):
        ArcGrid(0.0, 0.0, 1.0)


def test_path_tensors():
    ray = RayGrid.geometric(0.0, r_min=0.1, r_max=1.0, ratio=1.2)
    assert ray.tau_tensor().dtype == torch.complex128
    assert ray.weight_tensor().shape == (ray.size,)


def test_sector_samples():
    sector = Sector(1.0, 0.2, radius=2.0)
    points = sector_samples(sector, 4, 3, r_max=1.9)
    assert points.shape == (12,)
    assert sector.contains(points).all()
    bisector = sector_samples(sector, 3, 1)
    assert np.allclose(np.angle(bisector), 1.0)
    with raises(ValueError):
        sector_samples(Sector(0.0, 0.2), 3, 3)
    unbounded = sector_samples(Sector(0.0, 0.2), 3, 3, r_max=5.0)
    assert np.abs(unbounded).max() == pytest.approx(5.0)


def test_strip_samples():
    points = strip_samples(0.5, 5, 3, x_max=2.0)
    assert points.shape == (15,)
    assert np.abs(points.imag).max() < 0.5
    assert np.abs(points.real).max() == pytest.approx(2.0)
    assert np.all(strip_samples(0.5, 4).imag == 0)
