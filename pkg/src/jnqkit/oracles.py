"""Brute-force reference computations, deliberately independent of the fast paths.

Slow by design: explicit loops over cells and cell pairs, scipy quadrature for
kernel weights, exhaustive enumeration of packings and antichains.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .core import Params


def mo_loop(x: np.ndarray, q: float) -> float:
    vals = [float(v) for v in np.ravel(x)]
    mean = sum(vals) / len(vals)
    return (sum(abs(v - mean) ** q for v in vals) / len(vals)) ** (1.0 / q)


def dd_loop(x: np.ndarray, q: float) -> float:
    vals = [float(v) for v in np.ravel(x)]
    total = sum(abs(a - b) ** q for a in vals for b in vals)
    return (total / len(vals) ** 2) ** (1.0 / q)


@lru_cache(maxsize=None)
def quad_weight_1d(u: float, beta: float) -> float:
    """``int_0^1 int_u^{u+1} |x-y|^{-beta} dy dx`` by adaptive quadrature, split at contact."""
    def inner(x: float) -> float:
        lo, hi = u, u + 1.0
        pts = [x] if lo < x < hi else None
        return integrate.quad(lambda y: abs(x - y) ** (-beta), lo, hi, points=pts,
                              epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return integrate.quad(inner, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


@lru_cache(maxsize=None)
def quad_weight_2d(u1: float, u2: float, beta: float) -> float:
    """Tent form of the 2D cell-pair weight integrated quadrant by quadrant with dblquad."""
    def f(s2: float, s1: float) -> float:
        r = math.hypot(u1 + s1, u2 + s2)
        return (1 - abs(s1)) * (1 - abs(s2)) * r ** (-beta) if r > 0 else 0.0
    total = 0.0
    for a in ((-1.0, 0.0), (0.0, 1.0)):
        for b in ((-1.0, 0.0), (0.0, 1.0)):
            total += integrate.dblquad(f, a[0], a[1], b[0], b[1], epsabs=1e-14, epsrel=1e-11)[0]
    return total


def phi_loop(x: np.ndarray, params: Params) -> float:
    """``Phi`` of the cube with cell values ``x`` by an explicit double loop over cells."""
    n = x.ndim
    m = x.shape[0]
    beta, q = params.beta(n), params.q
    cells = list(np.ndindex(*x.shape))
    total = 0.0
    for i in cells:
        for j in cells:
            if i == j:
                continue
            diff = abs(float(x[i]) - float(x[j])) ** q
            if diff == 0.0:
                continue
            if n == 1:
                w = quad_weight_1d(float(abs(j[0] - i[0])), beta)
            else:
                a, b = sorted((abs(j[0] - i[0]), abs(j[1] - i[1])))
                w = quad_weight_2d(float(a), float(b), beta)
            total += diff * w
    return (total * float(m) ** (q * params.alpha - n)) ** (1.0 / q)


def phi_dyadic_loop(x: np.ndarray, params: Params) -> float:
    """Dyadic ``Phi`` by explicit pairs; cell edge is the unit."""
    n = x.ndim
    m = x.shape[0]
    beta, q = params.beta(n), params.q
    cells = list(np.ndindex(*x.shape))
    total = 0.0
    for i in cells:
        for j in cells:
            if i == j:
                continue
            climb = max((a ^ b).bit_length() for a, b in zip(i, j))
            total += abs(float(x[i]) - float(x[j])) ** q * float(2**climb) ** (-beta)
    return (total * float(m) ** (q * params.alpha - n)) ** (1.0 / q)


def psi_loop(x: np.ndarray, params: Params) -> float:
    """``Psi`` from its defining sum over all dyadic generations."""
    n = x.ndim
    m = x.shape[0]
    q = params.q
    total = 0.0
    k = 0
    b = m
    while b >= 1:
        for start in itertools.product(range(0, m, b), repeat=n):
            block = x[tuple(slice(s, s + b) for s in start)]
            total += 2.0 ** ((q * params.alpha - n) * k) * mo_loop(block, q) ** q
        b //= 2
        k += 1
    return total ** (1.0 / q)


def best_packing_enumeration(weights: np.ndarray, m: int) -> float:
    """Max total weight over all sets of pairwise disjoint ``m``-cubes, by full enumeration."""
    n = weights.ndim
    positions = list(np.ndindex(*weights.shape))
    side = weights.shape[0] + m - 1

    def cells(s):
        return {tuple(a + o for a, o in zip(s, offs)) for offs in itertools.product(range(m), repeat=n)}

    cover = [cells(s) for s in positions]
    best = 0.0

    def rec(i: int, used: set, acc: float) -> None:
        nonlocal best
        if i == len(positions):
            best = max(best, acc)
            return
        rec(i + 1, used, acc)
        if not (cover[i] & used):
            rec(i + 1, used | cover[i], acc + float(weights[positions[i]]))

    assert side > 0
    rec(0, set(), 0.0)
    return best


def antichains(depth: int, n: int):
    """Every antichain of the complete ``2^n``-ary tree of the given depth (root at depth 0)."""
    def rec(j: int, idx: tuple[int, ...]):
        yield ((j, idx),)
        if j == depth:
            yield ()
            return
        kids = [tuple(2 * i + b for i, b in zip(idx, bits))
                for bits in itertools.product((0, 1), repeat=n)]
        options = [list(rec(j + 1, k)) for k in kids]
        for combo in itertools.product(*options):
            yield tuple(itertools.chain.from_iterable(combo))

    return rec(0, (0,) * n)


def best_antichain_enumeration(levels: list[np.ndarray]) -> tuple[float, int]:
    """Max antichain weight and the number of antichains enumerated."""
    depth = len(levels) - 1
    n = levels[0].ndim
    best, count = 0.0, 0
    for chain in antichains(depth, n):
        count += 1
        total = sum(float(levels[j][idx]) for j, idx in chain)
        best = max(best, total)
    return best, count
