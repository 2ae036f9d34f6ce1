"""Central finite differences used as fallbacks for missing closed forms.

All helpers accept functions of a 1-D float array. The ``batched`` variants
evaluate ``fun`` once on a stack of perturbed points, which requires ``fun``
to broadcast over leading axes.
"""

import numpy as np


def _steps(x, rel):
    return rel * (1.0 + np.abs(x))


def gradient(fun, x, rel_step=1e-6):
    """Second-order central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel_step)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h[i])
    return g


def hessian(fun, x, grad=None, rel_step=1e-5):
    """Finite-difference Hessian, symmetrized.

    Differentiates ``grad`` when supplied, otherwise uses second differences
    of ``fun`` with step ``rel_step * 10``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    if grad is not None:
        h = _steps(x, rel_step)
        for i in range(n):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h[i]
            xm[i] -= h[i]
            H[:, i] = (np.asarray(grad(xp)) - np.asarray(grad(xm))) / (2.0 * h[i])
    else:
        h = _steps(x, rel_step * 10)
        f0 = fun(x)
        for i in range(n):
            for j in range(i, n):
                if i == j:
                    xp = x.copy()
                    xm = x.copy()
                    xp[i] += h[i]
                    xm[i] -= h[i]
                    H[i, i] = (fun(xp) - 2.0 * f0 + fun(xm)) / h[i] ** 2
                else:
                    vals = []
                    for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                        xq = x.copy()
                        xq[i] += si * h[i]
                        xq[j] += sj * h[j]
                        vals.append(fun(xq))
                    H[i, j] = H[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (
                        4.0 * h[i] * h[j]
                    )
    return 0.5 * (H + H.T)


# fourth-order central stencil: offsets and weights (divide by h)
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def jacobian_batched(fun, x, rel_step=1e-3):
    """Fourth-order central-difference Jacobian of a vector function.

    ``fun`` must accept an array of shape ``(k, n)`` and return ``(k, m)``.
    Returns the ``(m, n)`` Jacobian at ``x``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, rel_step)
    pts = np.repeat(x[None, :], 4 * n, axis=0)
    for i in range(n):
        pts[4 * i:4 * i + 4, i] += _OFFSETS * h[i]
    vals = np.asarray(fun(pts))
    vals = vals.reshape(n, 4, -1)
    return (np.einsum("k,ikm->mi", _WEIGHTS, vals)) / h[None, :]


def gradient_batched(fun, x, rel_step=1e-3):
    """Fourth-order central-difference gradient of a broadcasting scalar function."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _steps(x, rel_step)
    pts = np.repeat(x[None, :], 4 * n, axis=0)
    for i in range(n):
        pts[4 * i:4 * i + 4, i] += _OFFSETS * h[i]
    vals = np.asarray(fun(pts)).reshape(n, 4)
    return vals @ _WEIGHTS / h


def gradient4(fun, x, rel_step=1e-3):
    """Fourth-order central-difference gradient, one evaluation at a time."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, rel_step)
    g = np.empty_like(x)
    for i in range(x.size):
        acc = 0.0
        for off, w in zip(_OFFSETS, _WEIGHTS):
            xq = x.copy()
            xq[i] += off * h[i]
            acc += w * fun(xq)
        g[i] = acc / h[i]
    return g
