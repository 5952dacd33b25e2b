"""Brute-force reference computations shared by the test modules."""
import math

import numpy as np

from subsample_opt.design import InformationMatrix, d_criterion


def _logdet_hankel(moments):
    """Vectorized log det of Hankel matrices; ``moments`` has shape (..., 2q+1)."""
    q = (moments.shape[-1] - 1) // 2
    idx = np.add.outer(np.arange(q + 1), np.arange(q + 1))
    mats = moments[..., idx]
    sign, ld = np.linalg.slogdet(mats)
    return np.where(sign > 0, ld, -np.inf)


def grid_best_q2(dist, alpha, n=500):
    """Best log det over three-piece supports on an ``n x n`` grid of tail masses.

    Support: ``(-inf, -a1] u [-b, b] u [a2, inf)`` with lower tail mass ``pl``,
    upper tail mass ``pr`` and centre mass ``alpha - pl - pr``.  Asymmetric
    tails are allowed.
    """
    lo, hi = dist.support
    ps = np.linspace(0.0, alpha, n)
    def mom(a, b):
        return np.array([dist.partial_moment(k, a, b) for k in range(5)])

    left = np.array([mom(lo, dist.quantile(p)) if p > 0 else np.zeros(5) for p in ps])
    right = np.array([mom(dist.isf(p), hi) if p > 0 else np.zeros(5) for p in ps])
    centre = {}
    best = -math.inf
    for i, pl in enumerate(ps):
        rows = []
        for j, pr in enumerate(ps):
            pc = alpha - pl - pr
            if pc < -1e-12:
                break
            key = round(i + j)
            if key not in centre:
                c = max(pc, 0.0)
                if c > 0:
                    b = dist.quantile(0.5 + c / 2) - dist.center
                    centre[key] = mom(dist.center - b, dist.center + b)
                else:
                    centre[key] = np.zeros(5)
            if pl + pc / 2 >= 0.5 or pr + pc / 2 >= 0.5:
                continue
            rows.append(left[i] + right[j] + centre[key])
        if rows:
            best = max(best, float(np.max(_logdet_hankel(np.array(rows)))))
    return best


def uniform_q3_grid(alpha, n=2000):
    """Best symmetric support ``|x| in [a3, a2] u [a1, 1]`` for U(-1, 1), cubic model.

    The grid runs over ``(a1, a2)``; ``a3`` follows from the mass constraint.
    """
    a1 = np.linspace(1 - alpha, 1, n)[:-1]
    a2 = np.linspace(0, 1, n)
    A1, A2 = np.meshgrid(a1, a2, indexing="ij")
    A3 = A2 - (alpha - (1 - A1))
    ok = (A3 >= 0) & (A2 < A1)
    k = np.arange(7)
    # m_k = 2 * 1/2 * int over |x| pieces for even k, zero for odd k
    def piece(lo, hi):
        return (hi[..., None] ** (k + 1) - lo[..., None] ** (k + 1)) / (k + 1)

    m = piece(A1, np.ones_like(A1)) + piece(np.where(ok, A3, 0), np.where(ok, A2, 0))
    m[..., 1::2] = 0.0
    ld = _logdet_hankel(m)
    ld = np.where(ok, ld, -np.inf)
    i, j = np.unravel_index(np.argmax(ld), ld.shape)
    return float(A1[i, j]), float(A2[i, j]), float(A3[i, j]), float(ld[i, j])


def logdet_of(moments):
    return d_criterion(InformationMatrix.from_moments(moments))
