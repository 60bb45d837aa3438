"""This module contains the grids that discretize the Fourier variable :math:`m`, the Borel variable :math:`\\tau`
along rays and arcs, and helpers that sample points in sectors and horizontal strips.
"""
import numpy as np
import torch
from scipy.special import roots_legendre

from .exceptions import GridMismatchError


class BaseGrid:
    """Base class for all grids; children classes must set a `.size` field.
    """

    def __init__(self):
        self.size = None

    def _internal_vars(self) -> dict:
        return dict(size=self.size)

    @staticmethod
    def _obj_repr(obj) -> str:
        if isinstance(obj, tuple):
            return '(' + ', '.join(BaseGrid._obj_repr(item) for item in obj) + ')'
        if isinstance(obj, list):
            return '[' + ', '.join(BaseGrid._obj_repr(item) for item in obj) + ']'
        if isinstance(obj, torch.Tensor):
            return f'tensor(shape={tuple(obj.shape)})'
        if isinstance(obj, np.ndarray):
            return f'ndarray(shape={tuple(obj.shape)})'
        if isinstance(obj, float):
            return f'{obj:.6g}'
        return repr(obj)

    def __repr__(self):
        d = self._internal_vars()
        keys = ', '.join(f'{k}={self._obj_repr(d[k])}' for k in d)
        return f'{self.__class__.__name__}({keys})'


class FrequencyGrid(BaseGrid):
    r"""A symmetric uniform grid :math:`m_j = jh`, :math:`-n \le j \le n`, with trapezoid weights.

    :param n_half: Number of nodes on each side of 0 (the grid has ``2 * n_half + 1`` nodes).
    :type n_half: int
    :param cutoff: The cutoff :math:`M = \max_j |m_j|`.
    :type cutoff: float
    """

    def __init__(self, n_half, cutoff):
        super(FrequencyGrid, self).__init__()
        if int(n_half) < 1:
            raise ValueError(f"n_half must be a positive integer, got {n_half}")
        if cutoff <= 0:
            raise ValueError(f"cutoff must be positive, got {cutoff}")
        self.n_half = int(n_half)
        self.cutoff = float(cutoff)
        self.spacing = self.cutoff / self.n_half
        self.nodes = np.linspace(-self.cutoff, self.cutoff, 2 * self.n_half + 1)
        self.nodes[self.n_half] = 0.0
        self.weights = np.full_like(self.nodes, self.spacing)
        self.weights[[0, -1]] = self.spacing / 2
        self.size = len(self.nodes)

    @classmethod
    def for_decay(cls, beta, mu, spacing=0.2, tol=1e-12, strip=0.0):
        r"""Smallest grid of the given spacing whose truncation tail
        :math:`(1+M)^{-\mu} e^{-(\beta - |\mathrm{strip}|) M}` is below ``tol``.

        :param beta: Exponential decay rate of the grid functions.
        :type beta: float
        :param mu: Polynomial decay rate of the grid functions.
        :type mu: float
        :param spacing: Grid spacing, defaults to 0.2.
        :type spacing: float
        :param tol: Target tail bound, defaults to 1e-12.
        :type tol: float
        :param strip: Largest :math:`|\mathrm{Im}\, z|` the grid will be evaluated at, defaults to 0.
        :type strip: float
        :rtype: FrequencyGrid
        """
        rate = beta - abs(strip)
        if rate <= 0:
            raise ValueError(f"|strip| = {abs(strip)} must be smaller than beta = {beta}")
        n = 1
        while (1 + n * spacing) ** (-mu) * np.exp(-rate * n * spacing) >= tol:
            n += 1
        return cls(n, n * spacing)

    def tail_bound(self, beta, mu, strip=0.0):
        return (1 + self.cutoff) ** (-mu) * np.exp(-(beta - abs(strip)) * self.cutoff)

    @property
    def nodes_tensor(self):
        return torch.as_tensor(self.nodes, dtype=torch.float64)

    @property
    def weights_tensor(self):
        return torch.as_tensor(self.weights, dtype=torch.float64)

    def index_of(self, m):
        idx = int(np.argmin(np.abs(self.nodes - m)))
        if not np.isclose(self.nodes[idx], m, rtol=0, atol=1e-9 * self.spacing):
            raise KeyError(f"m = {m} is not a node of {self}")
        return idx

    def check_compatible(self, other):
        if other is self:
            return
        if not isinstance(other, FrequencyGrid) or other.n_half != self.n_half \
                or not np.isclose(other.cutoff, self.cutoff, rtol=1e-12, atol=0):
            raise GridMismatchError(f"{other} does not match {self}")

    def __eq__(self, other):
        try:
            self.check_compatible(other)
        except GridMismatchError:
            return False
        return True

    def __hash__(self):
        return hash((self.n_half, self.cutoff))

    def _internal_vars(self) -> dict:
        d = super(FrequencyGrid, self)._internal_vars()
        d.update(dict(cutoff=self.cutoff, spacing=self.spacing))
        return d


class PathGrid(BaseGrid):
    r"""Base class for quadrature paths in the Borel plane.
    Children classes set ``.taus`` (complex nodes) and ``.weights``,
    such that :math:`\int g(u)\, du/u \approx \sum_i w_i g(\tau_i)`.
    """

    def __init__(self):
        super(PathGrid, self).__init__()
        self.taus = None
        self.weights = None

    def tau_tensor(self):
        return torch.as_tensor(np.asarray(self.taus, dtype=complex), dtype=torch.complex128)

    def weight_tensor(self):
        return torch.as_tensor(np.asarray(self.weights, dtype=complex), dtype=torch.complex128)

    def integrate(self, values):
        """Quadrature of ``values`` (sampled at ``.taus``, first axis) against :math:`du/u`."""
        values = np.asarray(values)
        return np.tensordot(np.asarray(self.weights, dtype=complex), values, axes=(0, 0))


class RayGrid(PathGrid):
    r"""Nodes :math:`\tau_i = r_i e^{i\xi}` on a ray with weights for :math:`\int g(u)\, du/u`.

    :param direction: The direction :math:`\xi` of the ray.
    :type direction: float
    :param radii: Strictly increasing positive radii.
    :type radii: `numpy.ndarray`
    :param weights: Quadrature weights for the measure :math:`du/u` (real).
    :type weights: `numpy.ndarray`
    :param from_origin: Whether the weights account for the segment between 0 and the first node.
    :type from_origin: bool
    """

    def __init__(self, direction, radii, weights, from_origin=True):
        super(RayGrid, self).__init__()
        radii = np.asarray(radii, dtype=float)
        if radii.ndim != 1 or len(radii) < 2:
            raise ValueError("a ray needs at least two radial nodes")
        if radii[0] <= 0:
            raise ValueError(f"radial nodes must be positive, got r_1 = {radii[0]}")
        if np.any(np.diff(radii) <= 0):
            raise ValueError("radial nodes must be strictly increasing")
        self.direction = float(direction)
        self.radii = radii
        self.weights = np.asarray(weights, dtype=float)
        self.from_origin = bool(from_origin)
        self.taus = self.radii * np.exp(1j * self.direction)
        self.size = len(self.radii)

    @property
    def r_max(self):
        return float(self.radii[-1])

    @classmethod
    def geometric(cls, direction, r_min=1e-12, r_max=4.0, ratio=1.05, from_origin=True):
        r"""Geometrically graded nodes with the trapezoid rule in :math:`s = \ln r`.

        :param direction: Direction of the ray.
        :type direction: float
        :param r_min: Smallest node, defaults to 1e-12.
        :type r_min: float
        :param r_max: Largest node (the truncation radius), defaults to 4.
        :type r_max: float
        :param ratio: Target ratio between consecutive radii, defaults to 1.05.
        :type ratio: float
        :param from_origin: Whether to add the head weight for :math:`(0, r_\min)`, defaults to True.
        :type from_origin: bool
        :rtype: RayGrid
        """
        n = int(np.ceil(np.log(r_max / r_min) / np.log(ratio))) + 1
        s = np.linspace(np.log(r_min), np.log(r_max), n)
        h = s[1] - s[0]
        weights = np.full(n, h)
        weights[[0, -1]] = h / 2
        if from_origin:
            # the integrand vanishes linearly at 0, so the head integrates to its value at r_min
            weights[0] += 1.0
        return cls(direction, np.exp(s), weights, from_origin=from_origin)

    @classmethod
    def gauss(cls, direction, r_min=1e-12, r_max=4.0, panel_ratio=1.5, order=8, from_origin=True):
        r"""Composite Gauss-Legendre nodes in :math:`s = \ln r` on panels of ratio ``panel_ratio``.

        :param direction: Direction of the ray.
        :type direction: float
        :param r_min: Start of the first panel, defaults to 1e-12.
        :type r_min: float
        :param r_max: End of the last panel, defaults to 4.
        :type r_max: float
        :param panel_ratio: Target ratio between panel ends, defaults to 1.5.
        :type panel_ratio: float
        :param order: Gauss-Legendre nodes per panel, defaults to 8.
        :type order: int
        :param from_origin: Whether to add the head weight for :math:`(0, r_\min)`, defaults to True.
        :type from_origin: bool
        :rtype: RayGrid
        """
        s0, s1 = np.log(r_min), np.log(r_max)
        n_panels = max(1, int(np.ceil((s1 - s0) / np.log(panel_ratio))))
        edges = np.linspace(s0, s1, n_panels + 1)
        x, w = roots_legendre(order)
        half = (edges[1:] - edges[:-1])[:, None] / 2
        mid = (edges[1:] + edges[:-1])[:, None] / 2
        s = (mid + half * x[None, :]).ravel()
        weights = (half * w[None, :]).ravel()
        radii = np.exp(s)
        if from_origin:
            weights[0] += r_min / radii[0]
        return cls(direction, radii, weights, from_origin=from_origin)

    def rotated(self, direction):
        """The same radial nodes and weights along another direction."""
        return RayGrid(direction, self.radii, self.weights, from_origin=self.from_origin)

    def _internal_vars(self) -> dict:
        d = super(RayGrid, self)._internal_vars()
        d.update(dict(
            direction=self.direction,
            r_min=float(self.radii[0]),
            r_max=self.r_max,
            from_origin=self.from_origin,
        ))
        return d


class ArcGrid(PathGrid):
    r"""Gauss-Legendre nodes on the arc :math:`\{\rho e^{i\theta}\}` from ``start`` to ``end``.
    Since :math:`du/u = i\, d\theta` on the arc, weights are :math:`i w_j` and carry the orientation.

    :param radius: Radius of the arc.
    :type radius: float
    :param start: Starting angle.
    :type start: float
    :param end: Final angle.
    :type end: float
    :param order: Number of nodes, defaults to 64.
    :type order: int
    """

    def __init__(self, radius, start, end, order=64):
        super(ArcGrid, self).__init__()
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        self.radius = float(radius)
        self.start = float(start)
        self.end = float(end)
        x, w = roots_legendre(order)
        half = (self.end - self.start) / 2
        self.thetas = (self.end + self.start) / 2 + half * x
        self.weights = 1j * half * w
        self.taus = self.radius * np.exp(1j * self.thetas)
        self.size = int(order)

    def _internal_vars(self) -> dict:
        d = super(ArcGrid, self)._internal_vars()
        d.update(dict(radius=self.radius, start=self.start, end=self.end))
        return d


def sector_samples(sector, n_radial, n_angular, r_min=None, r_max=None, margin=0.9):
    r"""Points on a polar product grid inside a sector.

    :param sector: Any object with ``direction``, ``half_opening``, ``inner_radius`` and ``radius`` attributes.
    :param n_radial: Number of radii.
    :type n_radial: int
    :param n_angular: Number of angles; a single angle means the bisecting direction.
    :type n_angular: int
    :param r_min: Smallest radius; defaults to the inner radius (or ``r_max / n_radial`` when the inner radius is 0).
    :type r_min: float, optional
    :param r_max: Largest radius; defaults to the sector radius, required for unbounded sectors.
    :type r_max: float, optional
    :param margin: Fraction of the half opening spanned by the angles, defaults to 0.9.
    :type margin: float
    :return: Complex sample points, radius-major order.
    :rtype: `numpy.ndarray`
    """
    r_max = sector.radius if r_max is None else r_max
    if not np.isfinite(r_max):
        raise ValueError("r_max is required for unbounded sectors")
    if r_min is None:
        r_min = sector.inner_radius if sector.inner_radius > 0 else r_max / n_radial
    radii = np.linspace(r_min, r_max, n_radial)
    if n_angular == 1:
        angles = np.array([sector.direction])
    else:
        angles = sector.direction + margin * sector.half_opening * np.linspace(-1, 1, n_angular)
    return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()


def strip_samples(beta_prime, n_real, n_imag=1, x_max=2.0, margin=0.9):
    r"""Points on a product grid in the strip :math:`H_{\beta'} = \{|\mathrm{Im}\, z| < \beta'\}`.

    :param beta_prime: Half width of the strip.
    :type beta_prime: float
    :param n_real: Number of real parts in :math:`[-x_\max, x_\max]`.
    :type n_real: int
    :param n_imag: Number of imaginary parts; a single value means the real axis.
    :type n_imag: int
    :param x_max: Largest real part, defaults to 2.
    :type x_max: float
    :param margin: Fraction of the half width spanned by the imaginary parts, defaults to 0.9.
    :type margin: float
    :rtype: `numpy.ndarray`
    """
    xs = np.linspace(-x_max, x_max, n_real)
    ys = np.array([0.0]) if n_imag == 1 else margin * beta_prime * np.linspace(-1, 1, n_imag)
    return (xs[:, None] + 1j * ys[None, :]).ravel()
