"""Maximum-weight packing of congruent grid cubes, and the dyadic-tree antichain DP.

Weights are given per grid position (start index of the cube, in cells, relative
to a window); every routine returns the optimal total and the chosen starts.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import ConfigError, InvariantError


def dp_exact_1d(weights: np.ndarray, m: int) -> tuple[float, list[tuple[int]]]:
    """Weighted interval scheduling for intervals ``[s, s+m)``: exact optimum."""
    w = np.asarray(weights, dtype=np.float64)
    span = len(w) + m - 1
    best = np.zeros(span + 1)
    take = np.zeros(span + 1, dtype=bool)
    for i in range(1, span + 1):
        best[i] = best[i - 1]
        s = i - m
        if s >= 0:
            cand = best[s] + w[s]
            if cand > best[i]:
                best[i] = cand
                take[i] = True
    starts = []
    i = span
    while i > 0:
        if take[i]:
            starts.append((i - m,))
            i -= m
        else:
            i -= 1
    starts.reverse()
    return float(best[span]), starts


def tiling_candidates(count: tuple[int, ...], m: int) -> list[list[tuple[int, ...]]]:
    """Tilings by ``m``-cubes at offsets ``{0, m//2}^n`` restricted to valid starts."""
    offsets = sorted({0, m // 2})
    out = []
    for off in itertools.product(offsets, repeat=len(count)):
        axes = [range(o, c, m) for o, c in zip(off, count)]
        out.append([tuple(s) for s in itertools.product(*axes)])
    return out


def lattice_shift(weights: np.ndarray, m: int) -> tuple[float, list[tuple[int, ...]]]:
    """Best of the shifted tilings (a certified lower bound on the packing optimum)."""
    best, chosen = -1.0, []
    for starts in tiling_candidates(weights.shape, m):
        score = float(np.sum([weights[s] for s in starts])) if starts else 0.0
        if score > best:
            best, chosen = score, starts
    return max(best, 0.0), chosen


def exhaustive_small(
    weights: np.ndarray, m: int, cap: int = 64
) -> tuple[float, list[tuple[int, ...]]]:
    """Exact optimum by integer programming over all positions (at most ``cap`` of them)."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    positions = [tuple(int(v) for v in s) for s in np.ndindex(*weights.shape)]
    if len(positions) > cap:
        raise ConfigError(f"{len(positions)} positions exceed the exhaustive cap {cap}")
    n = weights.ndim
    side = weights.shape[0] + m - 1
    cells = list(np.ndindex(*(side,) * n))
    cell_row = {c: r for r, c in enumerate(cells)}
    A = lil_matrix((len(cells), len(positions)))
    for col, s in enumerate(positions):
        for offs in itertools.product(range(m), repeat=n):
            A[cell_row[tuple(a + o for a, o in zip(s, offs))], col] = 1.0
    c = -np.array([weights[s] for s in positions])
    res = milp(
        c,
        constraints=LinearConstraint(A.tocsr(), -np.inf, 1.0),
        integrality=np.ones(len(positions)),
        bounds=Bounds(0, 1),
        options={"mip_rel_gap": 0.0},
    )
    if not res.success:
        raise InvariantError(f"integer program failed: {res.message}")
    chosen = [s for s, v in zip(positions, res.x) if v > 0.5]
    # re-add the tilings so the result never falls below the shifted-tiling bound
    tile_val, tile_starts = lattice_shift(weights, m)
    ilp_val = float(np.sum([weights[s] for s in chosen])) if chosen else 0.0
    if tile_val > ilp_val:
        return tile_val, tile_starts
    return ilp_val, chosen


def single_cube(weights: np.ndarray) -> tuple[float, list[tuple[int, ...]]]:
    idx = np.unravel_index(int(np.argmax(weights)), weights.shape)
    return float(weights[idx]), [tuple(int(v) for v in idx)]


def tree_dp(levels: list[np.ndarray]) -> tuple[float, list[tuple[int, tuple[int, ...]]]]:
    """Max-weight antichain in a complete ``2^n``-ary tree.

    ``levels[j]`` holds the weights of the depth-``j`` nodes as an ``n``-dimensional
    array (side ``2^j``). Returns the optimum and the chosen ``(depth, index)`` nodes.
    """
    depth = len(levels) - 1
    n = levels[0].ndim
    best = np.asarray(levels[depth], dtype=np.float64).copy()
    take = [None] * (depth + 1)
    take[depth] = best > 0
    for j in range(depth - 1, -1, -1):
        w = np.asarray(levels[j], dtype=np.float64)
        k = w.shape[0]
        if n == 1:
            kids = best.reshape(k, 2).sum(axis=1)
        else:
            kids = best.reshape(k, 2, k, 2).sum(axis=(1, 3))
        take[j] = w > kids
        best = np.where(take[j], w, kids)
    chosen: list[tuple[int, tuple[int, ...]]] = []

    def collect(j: int, idx: tuple[int, ...]) -> None:
        if take[j][idx]:
            chosen.append((j, idx))
            return
        if j == depth:
            return
        for bits in itertools.product((0, 1), repeat=n):
            collect(j + 1, tuple(2 * i + b for i, b in zip(idx, bits)))

    collect(0, (0,) * n)
    return float(best.ravel()[0]), chosen
