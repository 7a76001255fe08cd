"""Pure NumPy phase-completion kernel (fallback for the compiled ``_lm``).

The residual map for a real square-root matrix ``s`` and full phase matrix
``phi`` (first row and column pinned to zero) is built from the Gram matrix
``G = S^dagger S`` with ``S = s * exp(1j * phi)``::

    r = [sqrt2 * Re G_ab, sqrt2 * Im G_ab  for a < b] + [G_aa - 1  for all a]

so that ``r @ r == ||G - I||_F**2``. Parameters are the interior phases
``phi[1:, 1:]`` in row-major order.

All starts are iterated together as one batch; each start follows exactly the
per-start damped least-squares recurrence of the compiled kernel.
"""
import numpy as np

from ._constants import GTOL, MU_DOWN, MU_MAX, MU_MIN, MU_UP, XTOL

SQRT2 = np.sqrt(2.0)


class _Layout:
    def __init__(self, n):
        self.n = n
        self.m = (n - 1) ** 2
        a, b = np.triu_indices(n, 1)
        self.a, self.b = a, b
        self.npairs = a.size
        self.nres = 2 * self.npairs + n
        p = np.arange(self.npairs)
        k = np.arange(1, n)
        K, P = np.meshgrid(k, p, indexing="ij")
        K, P = K.ravel(), P.ravel()
        # d/dphi[k, b]: every pair has b >= 1
        self.kb, self.pb = K, P
        self.col_b = (K - 1) * (n - 1) + (b[P] - 1)
        # d/dphi[k, a]: only pairs with a >= 1
        sel = a[P] >= 1
        self.ka, self.pa = K[sel], P[sel]
        self.col_a = (K[sel] - 1) * (n - 1) + (a[P[sel]] - 1)


def _evaluate(sigma, params, lay, jac=True):
    n = lay.n
    S = params.shape[0]
    phi = np.zeros((S, n, n))
    phi[:, 1:, 1:] = params.reshape(S, n - 1, n - 1)
    w = sigma[:, lay.a] * sigma[:, lay.b]
    ang = phi[:, :, lay.b] - phi[:, :, lay.a]
    tr = w * np.cos(ang)
    ti = w * np.sin(ang)
    r = np.empty((S, lay.nres))
    r[:, 0:2 * lay.npairs:2] = SQRT2 * tr.sum(axis=1)
    r[:, 1:2 * lay.npairs:2] = SQRT2 * ti.sum(axis=1)
    r[:, 2 * lay.npairs:] = (sigma * sigma).sum(axis=0) - 1.0
    if not jac:
        return r, None
    J = np.zeros((S, lay.nres, lay.m))
    J[:, 2 * lay.pb, lay.col_b] = -SQRT2 * ti[:, lay.kb, lay.pb]
    J[:, 2 * lay.pb + 1, lay.col_b] = SQRT2 * tr[:, lay.kb, lay.pb]
    J[:, 2 * lay.pa, lay.col_a] = SQRT2 * ti[:, lay.ka, lay.pa]
    J[:, 2 * lay.pa + 1, lay.col_a] = -SQRT2 * tr[:, lay.ka, lay.pa]
    return r, J


def residual_jacobian(sigma, params):
    """Residual vector and Jacobian at one interior-phase vector."""
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64)
    lay = _Layout(sigma.shape[0])
    r, J = _evaluate(sigma, params[None, :], lay)
    return r[0], J[0]


def lm_multistart(sigma, starts, max_iter, stop_res, mu0):
    """Run damped least squares from every row of ``starts``.

    Returns ``(params, f, iters)`` with one row / entry per start, where
    ``f`` is the final squared residual norm.
    """
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    x = np.array(starts, dtype=np.float64, ndmin=2)
    lay = _Layout(sigma.shape[0])
    S = x.shape[0]
    iters = np.zeros(S, dtype=np.int64)
    r, J = _evaluate(sigma, x, lay)
    f = np.einsum("sr,sr->s", r, r)
    if lay.m == 0 or S == 0:
        return x, f, iters
    mu = np.full(S, float(mu0))
    active = np.ones(S, dtype=bool)
    eye = np.eye(lay.m)

    for _ in range(max_iter):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        g = np.einsum("srm,sr->sm", J[act], r[act])
        stop = (np.sqrt(f[act]) <= stop_res) | (np.abs(g).max(axis=1) <= GTOL)
        active[act[stop]] = False
        act, g = act[~stop], g[~stop]
        if act.size == 0:
            break
        Ja = J[act]
        A = np.einsum("srm,srk->smk", Ja, Ja) + mu[act, None, None] * eye
        d = np.linalg.solve(A, -g[..., None])[..., 0]
        iters[act] += 1
        xn = x[act] + d
        rn, Jn = _evaluate(sigma, xn, lay)
        fn = np.einsum("sr,sr->s", rn, rn)
        acc = fn < f[act]
        ia, ir = act[acc], act[~acc]
        x[ia], r[ia], J[ia], f[ia] = xn[acc], rn[acc], Jn[acc], fn[acc]
        mu[ia] = np.maximum(mu[ia] * MU_DOWN, MU_MIN)
        small = np.abs(d[acc]).max(axis=1) <= XTOL
        active[ia[small]] = False
        mu[ir] *= MU_UP
        active[ir[mu[ir] > MU_MAX]] = False
    return x, f, iters
