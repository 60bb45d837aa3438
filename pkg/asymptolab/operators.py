import numpy as np
import torch
import torch.autograd as autograd


def unsafe_diff(u, t, order=1):
    r"""The derivative of a variable with respect to another.
    While there's no requirement for shapes, ``u`` must depend on each entry of ``t`` through that entry only,
    otherwise the result sums contributions of different entries.

    :param u: The :math:`u` in :math:`\displaystyle\frac{\partial u}{\partial t}`.
    :type u: `torch.Tensor`
    :param t: The :math:`t` in :math:`\displaystyle\frac{\partial u}{\partial t}`.
    :type t: `torch.Tensor`
    :param order: The order of the derivative, defaults to 1.
    :type order: int
    :returns: The derivative evaluated at ``t``.
    :rtype: `torch.Tensor`
    """
    ones = torch.ones_like(u)
    der, = autograd.grad(u, t, create_graph=True, grad_outputs=ones, allow_unused=True)
    if der is None:
        return torch.zeros_like(t, requires_grad=True)
    else:
        der.requires_grad_()
    for i in range(1, order):
        ones = torch.ones_like(der)
        der, = autograd.grad(der, t, create_graph=True, grad_outputs=ones, allow_unused=True)
        if der is None:
            return torch.zeros_like(t, requires_grad=True)
        else:
            der.requires_grad_()
    return der


def diff(u, t, order=1, shape_check=True):
    r"""The derivative of a real variable with respect to another.

    :param u: The :math:`u` in :math:`\displaystyle\frac{\partial u}{\partial t}`.
    :type u: `torch.Tensor`
    :param t: The :math:`t` in :math:`\displaystyle\frac{\partial u}{\partial t}`.
    :type t: `torch.Tensor`
    :param order: The order of the derivative, defaults to 1.
    :type order: int
    :param shape_check: Whether to require ``u`` and ``t`` to have the same shape, defaults to True.
    :type shape_check: bool
    :returns: The derivative evaluated at t.
    :rtype: `torch.Tensor`
    """
    if shape_check and u.shape != t.shape:
        raise ValueError(f"Input shapes must be the same; got {u.shape} != {t.shape}. "
                         f"Pass one copy of the independent variable per dependent value, "
                         f"or use `unsafe_diff`")
    return unsafe_diff(u, t, order=order)


def complex_leaf(z):
    r"""Real leaves :math:`x, y` (requiring grad) and the complex tensor :math:`x + iy` built from them.

    :param z: Complex value(s).
    :type z: complex or `numpy.ndarray` or `torch.Tensor`
    :return: ``(x, y, x + iy)``
    :rtype: tuple[`torch.Tensor`]
    """
    z = torch.as_tensor(np.asarray(z, dtype=complex)) if not isinstance(z, torch.Tensor) else z.detach()
    z = z.to(torch.complex128)
    x = z.real.clone().requires_grad_(True)
    y = z.imag.clone().requires_grad_(True)
    return x, y, torch.complex(x, y)


def holomorphic_diff(u, x, order=1):
    r"""Complex derivative :math:`\partial u / \partial z` of a holomorphic ``u`` with respect to
    :math:`z = x + iy`, computed as :math:`\partial_x \mathrm{Re}\, u + i\, \partial_x \mathrm{Im}\, u`.

    :param u: Values holomorphic in :math:`z`; must have the same shape as ``x``, one copy of ``x`` per value.
    :type u: `torch.Tensor`
    :param x: The real leaf of :math:`z`.
    :type x: `torch.Tensor`
    :param order: The order of the derivative, defaults to 1.
    :type order: int
    :rtype: `torch.Tensor`
    """
    der = u
    for _ in range(order):
        der = torch.complex(diff(der.real, x), diff(der.imag, x))
    return der


def t_operator(u, x, t, k):
    r"""The operator :math:`T^{k+1}\partial_T` applied to ``u``, where :math:`T = x + iy`.

    :param u: Values holomorphic in :math:`T`, same shape as ``x``.
    :type u: `torch.Tensor`
    :param x: The real leaf of :math:`T`.
    :type x: `torch.Tensor`
    :param t: The complex tensor :math:`T` built from ``x``.
    :type t: `torch.Tensor`
    :param k: The exponent :math:`k`.
    :type k: int
    :rtype: `torch.Tensor`
    """
    return t ** (k + 1) * holomorphic_diff(u, x)


def cauchy_riemann_residual(fn, z):
    r"""Relative Cauchy-Riemann residual :math:`|\partial_y g - i\partial_x g| / |\partial_x g|` of a map
    :math:`z \mapsto` ``fn(z)`` at a point, where :math:`g` is a fixed complex combination of all outputs.
    Vanishes (up to rounding) iff the combination is holomorphic at ``z``.

    :param fn: Maps a complex scalar tensor to a complex tensor of any shape.
    :type fn: callable
    :param z: The point.
    :type z: complex
    :rtype: float
    """
    x, y, zz = complex_leaf(z)
    out = fn(zz).reshape(-1)
    n = out.shape[0]
    weights = torch.exp(1j * torch.arange(n, dtype=torch.float64) * 2.399963229728653) / n
    g = (out * weights).sum()
    gx_re, gy_re = autograd.grad(g.real, (x, y), retain_graph=True, allow_unused=True)
    gx_im, gy_im = autograd.grad(g.imag, (x, y), allow_unused=True)
    zero = torch.zeros((), dtype=torch.float64)
    gx = torch.complex(gx_re if gx_re is not None else zero, gx_im if gx_im is not None else zero)
    gy = torch.complex(gy_re if gy_re is not None else zero, gy_im if gy_im is not None else zero)
    scale = max(float(gx.abs()), float(gy.abs()), 1e-300)
    return float((gy - 1j * gx).abs()) / scale
