"""Per-cube functionals of grid functions: MO, DD, Phi, Psi, the dyadic Phi, and moduli.

All values are exact finite sums over cells; the only approximation enters through
the kernel weights of ``kernels``. Batch evaluators return a functional for every
grid position of a given edge so the packing optimizers never loop over cubes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import AlignmentError, Cube, DivergenceError, GridBox, GridFunction, Params
from .kernels import weight_table_1d, weight_table_2d

_PAIR_CHUNK = 1 << 21


def pair_power_sum(x: np.ndarray, q: float, y: np.ndarray | None = None) -> float:
    """``sum_{i,j} |x_i - y_j|^q`` (``y = x`` by default), chunked to bound memory."""
    x = np.ravel(x)
    y = x if y is None else np.ravel(y)
    rows = max(1, _PAIR_CHUNK // max(1, len(y)))
    parts = [
        np.sum(np.abs(x[s:s + rows, None] - y[None, :]) ** q) for s in range(0, len(x), rows)
    ]
    return float(np.sum(parts))


def _block(f: GridFunction, Q: Cube) -> tuple[GridBox, np.ndarray]:
    box = f.locate(Q)
    return box, f.block(box)


def mo_power(values: np.ndarray, q: float) -> float:
    return float(np.mean(np.abs(values - np.mean(values)) ** q))


def mean_oscillation(f: GridFunction, Q: Cube, q: float) -> float:
    """``[avg_Q |f - f_Q|^q]^{1/q}``."""
    _, x = _block(f, Q)
    return mo_power(x, q) ** (1.0 / q)


def double_diff_moment(f: GridFunction, Q: Cube, q: float) -> float:
    """``[avg_Q avg_Q |f(x) - f(y)|^q]^{1/q}``."""
    _, x = _block(f, Q)
    return (pair_power_sum(x, q) / x.size**2) ** (1.0 / q)


def _check_touching(m: int, params: Params, n: int) -> None:
    if m >= 2 and params.beta(n) >= n + 1:
        raise DivergenceError(
            f"alpha={params.alpha:g} >= 1/q={1 / params.q:g}: touching cells have infinite weight"
        )


def _half_offsets(m: int, n: int) -> list[tuple[int, ...]]:
    if n == 1:
        return [(d,) for d in range(1, m)]
    out = [(0, d2) for d2 in range(1, m)]
    out += [(d1, d2) for d1 in range(1, m) for d2 in range(-m + 1, m)]
    return out


def _shifted_pair(x: np.ndarray, d: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Views ``(x[i], x[i + d])`` over all ``i`` with both cells inside ``x``."""
    a, b = [], []
    for size, di in zip(x.shape, d):
        if di >= 0:
            a.append(slice(0, size - di))
            b.append(slice(di, size))
        else:
            a.append(slice(-di, size))
            b.append(slice(0, size + di))
    return x[tuple(a)], x[tuple(b)]


def phi_power_block(x: np.ndarray, params: Params) -> float:
    """``Phi^q`` of the cube whose cell values are the (hyper)cubic array ``x``."""
    n = x.ndim
    m = x.shape[0]
    _check_touching(m, params, n)
    if m == 1:
        return 0.0
    beta, q = params.beta(n), params.q
    table = weight_table_1d(beta, m - 1) if n == 1 else weight_table_2d(beta, m)
    terms = []
    for d in _half_offsets(m, n):
        u, v = _shifted_pair(x, d)
        w = table[abs(d[0])] if n == 1 else table[abs(d[0]), abs(d[1])]
        terms.append(w * np.sum(np.abs(u - v) ** q))
    return 2.0 * float(np.sum(terms)) * float(m) ** (q * params.alpha - n)


def phi(f: GridFunction, Q: Cube, params: Params, tol: float = 1e-12) -> float:
    """``Phi_{f,q,alpha}(Q)`` as an exact cell-pair sum against the kernel weights."""
    _, x = _block(f, Q)
    return phi_power_block(x, params) ** (1.0 / params.q)


def _is_dyadic_box(box: GridBox) -> bool:
    s = box.size
    return s & (s - 1) == 0 and all(st % s == 0 for st in box.start)


def _blocks(x: np.ndarray, b: int) -> np.ndarray:
    """Split a cubic array into blocks of side ``b``: shape ``(k,)*n + (b**n,)``."""
    n = x.ndim
    k = x.shape[0] // b
    if n == 1:
        return x.reshape(k, b)
    return x.reshape(k, b, k, b).transpose(0, 2, 1, 3).reshape(k, k, b * b)


def psi_pyramid(x: np.ndarray, params: Params) -> list[np.ndarray]:
    """``Psi^q`` of every dyadic block of ``x`` (side a power of two), coarsest level first."""
    n, q = x.ndim, params.q
    side = x.shape[0]
    depth = side.bit_length() - 1
    ratio = 2.0 ** (q * params.alpha - n)
    level = np.zeros((side,) * n)  # single cells: nothing oscillates
    out = [level]
    for j in range(1, depth + 1):
        b = 1 << j
        blk = _blocks(x, b)
        mo = np.mean(np.abs(blk - blk.mean(axis=-1, keepdims=True)) ** q, axis=-1)
        child_sum = _blocks_sum(level, 2)
        level = mo + ratio * child_sum
        out.append(level)
    return out[::-1]


def _blocks_sum(a: np.ndarray, b: int) -> np.ndarray:
    return _blocks(a, b).sum(axis=-1)


def psi(f: GridFunction, Q: Cube, params: Params) -> float:
    """``Psi_{f,q,alpha}(Q)``; ``Q`` must be a dyadic cube of the grid hierarchy."""
    box, x = _block(f, Q)
    if not _is_dyadic_box(box):
        raise AlignmentError(f"{Q} is not a dyadic cube of the grid hierarchy")
    return float(psi_pyramid(x, params)[0].ravel()[0]) ** (1.0 / params.q)


def _cross_child_sums(x: np.ndarray, b: int, q: float) -> np.ndarray:
    """For each block of side ``b``: ordered pair sum over pairs in different children."""
    n = x.ndim
    h = b // 2
    k = x.shape[0] // b
    if n == 1:
        ch = x.reshape(k, 2, h)
    else:
        ch = x.reshape(k, 2, h, k, 2, h).transpose(0, 3, 1, 4, 2, 5).reshape(k * k, 4, h * h)
    nchild = ch.shape[1]
    total = np.zeros(ch.shape[0])
    for c in range(nchild):
        for c2 in range(c + 1, nchild):
            a, bb = ch[:, c, :], ch[:, c2, :]
            rows = max(1, _PAIR_CHUNK // max(1, a.shape[0] * bb.shape[1]))
            acc = np.zeros(ch.shape[0])
            for s in range(0, a.shape[1], rows):
                acc += np.sum(np.abs(a[:, s:s + rows, None] - bb[:, None, :]) ** q, axis=(1, 2))
            total += 2.0 * acc
    return total.reshape((k,) * n)


def phi_dyadic_pyramid(x: np.ndarray, params: Params) -> list[np.ndarray]:
    """Dyadic ``Phi^q`` of every dyadic block of ``x``, coarsest level first.

    With cell edge as the unit, ``Phi_d^q(B) = side^{q alpha - n} A(B)`` where
    ``A(B) = sum_children A(c) + cross(B) side^{-beta}``: pairs split between
    different children of ``B`` have dyadic distance exactly ``side(B)``.
    """
    n, q = x.ndim, params.q
    beta = params.beta(n)
    side = x.shape[0]
    depth = side.bit_length() - 1
    acc = np.zeros((side,) * n)
    out = [acc.copy()]
    for j in range(1, depth + 1):
        b = 1 << j
        acc = _blocks_sum(acc, 2) + _cross_child_sums(x, b, q) * float(b) ** (-beta)
        out.append(acc * float(b) ** (q * params.alpha - n))
    return out[::-1]


def phi_dyadic(f: GridFunction, Q, params: Params) -> float:
    """Dyadic-distance analogue of ``Phi``; ``Q`` a DyadicCube or dyadic Cube."""
    cube = Q.to_cube() if hasattr(Q, "to_cube") else Q
    box, x = _block(f, cube)
    if not _is_dyadic_box(box):
        raise AlignmentError(f"{cube} is not a dyadic cube of the grid hierarchy")
    return float(phi_dyadic_pyramid(x, params)[0].ravel()[0]) ** (1.0 / params.q)


# batch evaluators ------------------------------------------------------------

def mo_power_windows(x: np.ndarray, m: int, q: float) -> np.ndarray:
    """``MO^q`` of every ``m``-cell window of ``x`` (indexed by window start)."""
    win = sliding_window_view(x, (m,) * x.ndim)
    axes = tuple(range(x.ndim, 2 * x.ndim))
    mean = win.mean(axis=axes, keepdims=True)
    return np.mean(np.abs(win - mean) ** q, axis=axes)


def phi_power_blocks(x: np.ndarray, b: int, params: Params) -> np.ndarray:
    """``Phi^q`` of every block of the ``b``-grid of ``x``, indexed by block position.

    Unlike the window evaluator this uses no prefix sums, so blocks on which ``x``
    is constant come out exactly zero.
    """
    n = x.ndim
    k = x.shape[0] // b
    _check_touching(b, params, n)
    if b == 1:
        return np.zeros((k,) * n)
    blocks = x.reshape(k, b) if n == 1 else x.reshape(k, b, k, b).transpose(0, 2, 1, 3)
    beta, q = params.beta(n), params.q
    table = weight_table_1d(beta, b - 1) if n == 1 else weight_table_2d(beta, b)
    inner = tuple(range(n, 2 * n))
    total = np.zeros((k,) * n)
    for d in _half_offsets(b, n):
        sl_a, sl_b = [], []
        for di in d:
            sl_a.append(slice(0, b - di) if di >= 0 else slice(-di, b))
            sl_b.append(slice(di, b) if di >= 0 else slice(0, b + di))
        u = blocks[(Ellipsis,) + tuple(sl_a)]
        v = blocks[(Ellipsis,) + tuple(sl_b)]
        w = table[abs(d[0])] if n == 1 else table[abs(d[0]), abs(d[1])]
        total += w * np.sum(np.abs(u - v) ** q, axis=inner)
    return 2.0 * total * float(b) ** (q * params.alpha - n)


def _window_sums(g: np.ndarray, sizes: tuple[int, ...], count: tuple[int, ...]) -> np.ndarray:
    """Sums of ``g`` over boxes ``[s, s + sizes)`` for starts ``s < count``."""
    # extended precision keeps the prefix-difference residue far below the window sums
    c = np.zeros(tuple(s + 1 for s in g.shape), dtype=np.longdouble)
    inner = tuple(slice(1, None) for _ in g.shape)
    c[inner] = g
    for ax in range(g.ndim):
        np.cumsum(c, axis=ax, out=c)
    if g.ndim == 1:
        (a,), (na,) = sizes, count
        return (c[a:a + na] - c[:na]).astype(np.float64)
    (a, b), (na, nb) = sizes, count
    out = c[a:a + na, b:b + nb] - c[:na, b:b + nb] - c[a:a + na, :nb] + c[:na, :nb]
    return out.astype(np.float64)


def phi_power_windows(x: np.ndarray, m: int, params: Params) -> np.ndarray:
    """``Phi^q`` of every ``m``-cell window of ``x``."""
    n = x.ndim
    side = x.shape[0]
    count = (side - m + 1,) * n
    _check_touching(m, params, n)
    if m == 1:
        return np.zeros(count)
    beta, q = params.beta(n), params.q
    table = weight_table_1d(beta, m - 1) if n == 1 else weight_table_2d(beta, m)
    total = np.zeros(count)
    for d in _half_offsets(m, n):
        u, v = _shifted_pair(x, d)
        g = np.abs(u - v) ** q
        w = table[abs(d[0])] if n == 1 else table[abs(d[0]), abs(d[1])]
        total += w * _window_sums(g, tuple(m - abs(di) for di in d), count)
    return 2.0 * total * float(m) ** (q * params.alpha - n)


# moduli ------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusPair:
    t: float
    omega: float
    omega_star: float


def shift_norm_power(values: np.ndarray, k: tuple[int, ...], p: float, h: float) -> float:
    """``||f(. + k h) - f||_p^p`` for the zero extension of a grid function."""
    n = values.ndim
    shape = tuple(s + ki for s, ki in zip(values.shape, k))
    base = np.zeros(shape)
    moved = np.zeros(shape)
    base[tuple(slice(0, s) for s in values.shape)] = values
    moved[tuple(slice(ki, ki + s) for s, ki in zip(values.shape, k))] = values
    return float(np.sum(np.abs(base - moved) ** p)) * h**n


def _lattice_count_ball(r: float, n: int) -> int:
    """``#{k in N^n : |k| <= r}`` (including 0)."""
    if r < 0:
        return 0
    r2 = r * r * (1.0 + 1e-12)
    if n == 1:
        return math.floor(math.sqrt(r2)) + 1
    k1 = np.arange(0, math.floor(math.sqrt(r2)) + 1, dtype=np.float64)
    rest = np.floor(np.sqrt(np.maximum(r2 - k1 * k1, 0.0)))
    return int(np.sum(rest + 1))


def _overlap_shifts(side: int, n: int):
    for k in np.ndindex(*(side,) * n):
        if any(k):
            yield tuple(int(v) for v in k)


def moduli(f: GridFunction, t: float, p: float, shift_stride: int = 1) -> ModulusPair:
    """``omega(f,t)`` and ``omega*(f,t)`` over grid shifts of the zero-extended ``f``.

    Shifts with ``k_i >= side`` in some coordinate move the support off itself,
    so ``||Delta f||_p^p = 2 ||f||_p^p`` there; those are counted, not evaluated.
    ``shift_stride`` thins the evaluated lattice for large grids.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    n, side, h = f.n, f.side, f.h
    full = 2.0 * float(np.sum(np.abs(f.values) ** p)) * h**n
    r1, r2 = t / h, 2.0 * t / h
    eps = 1e-12

    def norm2(k):
        return float(sum(v * v for v in k))

    omega = None
    shell_sum = 0.0
    shell_overlap = 0
    for k in _overlap_shifts(side, n):
        if any(v % shift_stride for v in k):
            continue
        s2 = norm2(k)
        inside_ball = s2 <= r1 * r1 * (1 + eps)
        in_shell = r1 * r1 * (1 + eps) < s2 <= r2 * r2 * (1 + eps)
        if not (inside_ball or in_shell):
            continue
        val = shift_norm_power(f.values, k, p, h)
        if inside_ball:
            omega = val if omega is None else max(omega, val)
        else:
            shell_sum += val
            shell_overlap += 1
    # lattice points with some coordinate >= side (evaluated analytically)
    def far_count(r: float) -> int:
        total = _lattice_count_ball(r / shift_stride, n)
        near = sum(
            1 for k in np.ndindex(*(side,) * n)
            if not any(v % shift_stride for v in k) and norm2(k) <= r * r * (1 + eps)
        )
        return total - near

    far_ball = far_count(r1)
    if far_ball > 0:
        omega = full if omega is None else max(omega, full)
    if omega is None:
        raise ValueError(f"no grid shift of size <= t={t:g} (cell size {h:g})")
    far_shell = far_count(r2) - far_ball
    if shell_overlap + far_shell == 0:
        raise ValueError(f"no grid shift in the shell ({t:g}, {2 * t:g}]")
    omega_star = (shell_sum + far_shell * full) * (shift_stride * h) ** n / t**n
    return ModulusPair(t, omega, omega_star)


def _signed_table(table: np.ndarray, M: int, n: int) -> np.ndarray:
    """Weights indexed by signed offsets ``d + M - 1`` for ``|d_i| < M``."""
    idx = np.abs(np.arange(-M + 1, M))
    return table[idx] if n == 1 else table[np.ix_(idx, idx)]


def phi_zero_padded_chain(x: np.ndarray, doublings: int, params: Params) -> list[float]:
    """``Phi^q`` of the cubes ``[0, 2^j N)^n`` (cell units), ``j = 0..doublings``.

    The function is ``x`` on ``[0, N)^n`` and zero elsewhere. Pairs with both cells
    outside the support vanish, so each value is the support sum plus, for every
    support cell, ``|x_i|^q`` times the summed weight to the non-support cells.
    """
    n, N = x.ndim, x.shape[0]
    q = params.q
    _check_touching(2, params, n)
    beta = params.beta(n)
    Mmax = N << doublings
    table = weight_table_1d(beta, Mmax - 1) if n == 1 else weight_table_2d(beta, Mmax)
    inner = phi_power_block(x, params) / float(N) ** (q * params.alpha - n)
    signed = _signed_table(table, Mmax, n)
    csum = signed
    for ax in range(n):
        csum = np.pad(np.cumsum(csum, axis=ax), [(1, 0) if a == ax else (0, 0) for a in range(n)])
    absq = np.abs(x) ** q
    cells = np.argwhere(absq > 0)
    out = []
    for j in range(doublings + 1):
        M = N << j
        cross = 0.0
        for i in cells:
            # offsets d = y - i for y in [0, M)^n, shifted by Mmax - 1 into the table
            lo = [Mmax - 1 - int(c) for c in i]
            hi = [Mmax - 1 - int(c) + M for c in i]
            slo = [Mmax - 1 - int(c) for c in i]
            shi = [Mmax - 1 - int(c) + N for c in i]
            if n == 1:
                total = csum[hi[0]] - csum[lo[0]] - (csum[shi[0]] - csum[slo[0]])
            else:
                def rect(a, b):
                    return csum[b[0], b[1]] - csum[a[0], b[1]] - csum[b[0], a[1]] + csum[a[0], a[1]]
                total = rect(lo, hi) - rect(slo, shi)
            cross += absq[tuple(i)] * total
        out.append((inner + 2.0 * cross) * float(M) ** (q * params.alpha - n))
    return out
