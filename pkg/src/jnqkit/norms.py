"""Whole-domain norms built from the per-cube functionals.

Every packing supremum is searched with batch-evaluated weights and then
re-scored directly from its certificate, so the reported value is always the
exact score of an explicit family of cubes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import packing as pk
from .catalog import Sampler
from .core import (
    ConfigError,
    Cube,
    DivergenceError,
    DyadicCube,
    GridBox,
    GridFunction,
    Packing,
    Params,
    Threshold,
    VerificationReport,
    inputs_digest,
)
from .functionals import (
    _half_offsets,
    _is_dyadic_box,
    _shifted_pair,
    mean_oscillation,
    mo_power_windows,
    phi,
    phi_dyadic_pyramid,
    phi_power_blocks,
    phi_power_windows,
    psi_pyramid,
)
from .kernels import (
    exterior_weight_1d,
    exterior_weight_2d,
    weight_table_1d,
    weight_table_2d,
)

VARIANTS = ("auto", "lattice_shift", "dp_exact_1d", "tree_dp_dyadic", "exhaustive_small", "single_cube")
EXACT_REL = 1e-12


@dataclass(frozen=True)
class PackingStrategy:
    variant: str = "auto"
    edges: tuple[int, ...] | None = None  # edge lengths in cells; None = dyadic sweep
    cap: int = 64

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown strategy {self.variant!r}; choose from {VARIANTS}")
        if self.edges is not None:
            object.__setattr__(self, "edges", tuple(int(e) for e in self.edges))
            if any(e < 1 for e in self.edges):
                raise ConfigError("edge lengths must be positive cell counts")


@dataclass(frozen=True)
class NormResult:
    value: float
    strategy: str
    edge: float | None = None
    certificate: tuple[Cube, ...] = ()
    detail: dict = field(default_factory=dict)

    @property
    def packing(self) -> Packing | None:
        if not self.certificate or len({c.edge for c in self.certificate}) != 1:
            return None
        return Packing(self.certificate, self.certificate[0].edge)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "strategy": self.strategy,
            "edge": self.edge,
            "certificate": [{"corner": list(c.corner), "edge": c.edge} for c in self.certificate],
            "detail": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                       for k, v in self.detail.items()},
        }


def _window(f: GridFunction, window: Cube | None) -> tuple[GridBox, np.ndarray]:
    box = f.locate(window) if window is not None else GridBox((0,) * f.n, f.side)
    return box, f.block(box)


def _dyadic_edges(side: int) -> list[int]:
    out, m = [], 1
    while m <= side:
        out.append(m)
        m *= 2
    return out


def _root_power(x: float, p: float) -> float:
    return x ** (1.0 / p) if x > 0 else 0.0


def _choose(variant: str, weights: np.ndarray, m: int, n: int, cap: int):
    if variant == "auto":
        if n == 1:
            return "dp_exact_1d", pk.dp_exact_1d(weights, m)
        if weights.size <= cap:
            return "exhaustive_small", pk.exhaustive_small(weights, m, cap)
        return "lattice_shift", pk.lattice_shift(weights, m)
    if variant == "dp_exact_1d":
        if n != 1:
            raise ConfigError("dp_exact_1d applies to n=1 only")
        return variant, pk.dp_exact_1d(weights, m)
    if variant == "lattice_shift":
        return variant, pk.lattice_shift(weights, m)
    if variant == "exhaustive_small":
        return variant, pk.exhaustive_small(weights, m, cap)
    if variant == "single_cube":
        return variant, pk.single_cube(weights)
    raise ConfigError(f"strategy {variant!r} is not a congruent-packing search")


def _packing_sup(
    f: GridFunction,
    window: Cube | None,
    p: float,
    q: float,
    power_windows: Callable[[np.ndarray, int], np.ndarray],
    direct: Callable[[Cube], float],
    strategy: PackingStrategy,
) -> NormResult:
    box, x = _window(f, window)
    n, h = f.n, f.h
    edges = strategy.edges if strategy.edges is not None else _dyadic_edges(box.size)
    edges = [m for m in edges if m <= box.size]
    p_inf = math.isinf(p)
    best = (-1.0, None, [], "")
    for m in edges:
        F = np.maximum(power_windows(x, m), 0.0) ** (1.0 / q)
        vol = (m * h) ** n
        if p_inf:
            used, (score, starts) = "single_cube", pk.single_cube(F)
        elif strategy.variant == "single_cube":
            used, (score, starts) = "single_cube", pk.single_cube(vol ** (1.0 / p) * F)
            score = score**p
        else:
            used, (score, starts) = _choose(strategy.variant, vol * F**p, m, n, strategy.cap)
        if score > best[0]:
            best = (score, m, starts, used)
    score, m, starts, used = best
    if m is None:
        return NormResult(0.0, strategy.variant, None, (), {"search_value": 0.0})
    cubes = tuple(f.box_to_cube(GridBox(tuple(b + s for b, s in zip(box.start, st)), m)) for st in starts)
    # re-score the certificate with the direct per-cube functional
    vals = [direct(Q) for Q in cubes]
    if p_inf:
        value = max(vals) if vals else 0.0
        search = score
    else:
        value = _root_power(float(np.sum([Q.volume * v**p for Q, v in zip(cubes, vals)])), p)
        search = _root_power(score, p)
    return NormResult(value, used, m * h, cubes, {"search_value": search, "edge_cells": m})


def jn_con_norm(
    f: GridFunction, p: float, q: float, strategy: PackingStrategy | None = None,
    window: Cube | None = None,
) -> NormResult:
    """Congruent John-Nirenberg norm: sup over packings of ``[sum |Q| MO_q(Q)^p]^{1/p}``."""
    Params(p, q, 0.0)
    strategy = strategy or PackingStrategy()
    if strategy.variant == "tree_dp_dyadic":
        raise ConfigError("tree_dp_dyadic scores antichains; it is not defined for the MO norm")
    return _packing_sup(
        f, window, p, q,
        lambda x, m: mo_power_windows(x, m, q),
        lambda Q: mean_oscillation(f, Q, q),
        strategy,
    )


def jnq_norm_packing(
    f: GridFunction, params: Params, strategy: PackingStrategy | None = None,
    tol: float = 1e-12, window: Cube | None = None,
) -> NormResult:
    """Congruent-packing JNQ norm; ``p = inf`` gives ``sup_Q Phi(Q)``."""
    strategy = strategy or PackingStrategy()
    if strategy.variant == "tree_dp_dyadic":
        return jnq_norm_variants(f, params, "III", window=window)
    return _packing_sup(
        f, window, params.p, params.q,
        lambda x, m: phi_power_windows(x, m, params),
        lambda Q: phi(f, Q, params, tol),
        strategy,
    )


def jnq_norm_integral(
    f: GridFunction, params: Params, center_stride: int = 1,
    edges: Sequence[int] | None = None, window: Cube | None = None,
) -> NormResult:
    """Translation-integral form: ``sup_m [sum_z (stride h)^n Phi(Q(z, m))^p]^{1/p}``.

    Cube positions run over a stride lattice of starts with every cube inside the
    window; the z-integral becomes a cell sum weighted by the stride volume.
    """
    box, x = _window(f, window)
    n, h, p, q = f.n, f.h, params.p, params.q
    if center_stride < 1:
        raise ValueError("center_stride must be >= 1")
    edges = list(edges) if edges is not None else _dyadic_edges(box.size)
    best, best_m = 0.0, None
    for m in [e for e in edges if e <= box.size]:
        F = np.maximum(phi_power_windows(x, m, params), 0.0) ** (1.0 / q)
        F = F[(slice(None, None, center_stride),) * n]
        if params.p_is_inf:
            val = float(F.max())
        else:
            val = _root_power(float(np.sum((center_stride * h) ** n * F**p)), p)
        if val > best or best_m is None:
            best, best_m = val, m
    return NormResult(best, "integral", None if best_m is None else best_m * h, (),
                      {"center_stride": center_stride})


# dyadic norms -----------------------------------------------------------------

def _dyadic_window(f: GridFunction, window: Cube | None) -> tuple[GridBox, np.ndarray]:
    box, x = _window(f, window)
    if not _is_dyadic_box(box):
        raise ConfigError(f"window {window} is not a dyadic cube")
    return box, x


def _level_sup(f: GridFunction, box: GridBox, levels: list[np.ndarray], p: float, q: float,
               label: str) -> NormResult:
    """``sup_j [sum_{Q in level j} |Q| F(Q)^p]^{1/p}`` given ``F^q`` per level."""
    n, h = f.n, f.h
    best, best_j = -1.0, 0
    for j, Fq in enumerate(levels):
        b = box.size >> j
        F = np.maximum(Fq, 0.0) ** (1.0 / q)
        if math.isinf(p):
            val = float(F.max())
        else:
            val = _root_power(float(np.sum((b * h) ** n * F**p)), p)
        if val > best:
            best, best_j = val, j
    b = box.size >> best_j
    cubes = tuple(
        f.box_to_cube(GridBox(tuple(s + b * i for s, i in zip(box.start, idx)), b))
        for idx in np.ndindex(*levels[best_j].shape)
    )
    return NormResult(max(best, 0.0), label, b * h, cubes, {"level_offset": best_j})


def jnq_dyadic_norm(f: GridFunction, params: Params, window: Cube | None = None) -> NormResult:
    """Dyadic JNQ norm: dyadic-distance functional summed over each dyadic level."""
    box, x = _dyadic_window(f, window)
    return _level_sup(f, box, phi_dyadic_pyramid(x, params), params.p, params.q, "dyadic")


def jnq_dyadic_psi_norm(f: GridFunction, params: Params, window: Cube | None = None) -> NormResult:
    box, x = _dyadic_window(f, window)
    return _level_sup(f, box, psi_pyramid(x, params), params.p, params.q, "dyadic_psi")


def phi_grid_pyramid(x: np.ndarray, params: Params) -> list[np.ndarray]:
    """``Phi^q`` of every dyadic block of ``x``, coarsest level first."""
    side = x.shape[0]
    out = []
    b = side
    while b >= 1:
        out.append(phi_power_blocks(x, b, params))
        b //= 2
    return out


def jnq_norm_variants(
    f: GridFunction, params: Params, which: str, window: Cube | None = None,
    strategy: PackingStrategy | None = None,
) -> NormResult:
    """Dyadic-edge norms: I (congruent, dyadic edges), II (dyadic grid), III (antichains)."""
    if which == "I":
        strategy = strategy or PackingStrategy()
        if strategy.variant == "tree_dp_dyadic":
            strategy = PackingStrategy("auto", strategy.edges, strategy.cap)
        return jnq_norm_packing(f, params, PackingStrategy(strategy.variant, None, strategy.cap),
                                window=window)
    box, x = _dyadic_window(f, window)
    levels = phi_grid_pyramid(x, params)
    if which == "II":
        return _level_sup(f, box, levels, params.p, params.q, "variant_II")
    if which != "III":
        raise ConfigError(f"unknown variant {which!r}")
    n, h, p, q = f.n, f.h, params.p, params.q
    if params.p_is_inf:
        return _level_sup(f, box, levels, p, q, "variant_III")
    weights = [((box.size >> j) * h) ** n * np.maximum(Fq, 0.0) ** (p / q) for j, Fq in enumerate(levels)]
    total, chosen = pk.tree_dp(weights)
    cubes = tuple(
        f.box_to_cube(GridBox(tuple(s + (box.size >> j) * i for s, i in zip(box.start, idx)), box.size >> j))
        for j, idx in chosen
    )
    rescored = float(np.sum([Q.volume * phi(f, Q, params) ** p for Q in cubes])) if cubes else 0.0
    return NormResult(_root_power(rescored, p), "tree_dp_dyadic", None, cubes,
                      {"search_value": _root_power(total, p)})


def jnq_norm_on_cube(
    f: GridFunction, Q0: Cube, params: Params, mode: str = "equal_edge",
    strategy: PackingStrategy | None = None,
) -> NormResult:
    """Norm restricted to subcubes of ``Q0``: congruent sweep or dyadic antichains."""
    if mode == "equal_edge":
        return jnq_norm_packing(f, params, strategy, window=Q0)
    if mode == "free_edge":
        return jnq_norm_variants(f, params, "III", window=Q0)
    raise ConfigError(f"unknown mode {mode!r}")


# Gagliardo, Sobolev, Lipschitz, Campanato ------------------------------------------

def _guarded_table(beta: float, size: int, n: int) -> np.ndarray:
    """Unit weight table with ``inf`` where touching weights diverge."""
    if n == 1:
        return weight_table_1d(beta, size - 1, divergent_as_inf=True)
    return weight_table_2d(beta, size, divergent_as_inf=True)


def _pair_sum_with_table(x: np.ndarray, table: np.ndarray, p: float) -> float:
    """``sum_{i != j} |x_i - x_j|^p w(i - j)``; infinite weights must meet zero numerators."""
    n = x.ndim
    m = x.shape[0]
    terms = []
    for d in _half_offsets(m, n):
        u, v = _shifted_pair(x, d)
        s = float(np.sum(np.abs(u - v) ** p))
        w = table[abs(d[0])] if n == 1 else table[abs(d[0]), abs(d[1])]
        if s == 0.0:
            continue
        if math.isinf(w):
            raise DivergenceError(f"infinite weight at offset {d} meets a nonzero difference")
        terms.append(w * s)
    return 2.0 * float(np.sum(terms)) if terms else 0.0


def gagliardo_seminorm(f: GridFunction, s: float, p_exp: float, margin: int | None = None,
                       tol: float = 1e-12) -> float:
    """``[int int |F(x)-F(y)|^p / |x-y|^{n+sp}]^{1/p}`` for the zero extension ``F`` of ``f``."""
    n, h = f.n, f.h
    beta = n + s * p_exp
    vals = f.values
    if not np.any(vals):
        return 0.0
    if s <= 0:
        raise DivergenceError(f"s={s:g} <= 0: the seminorm of a nonzero compactly supported f is infinite")
    if n == 1:
        side = f.side
        inner = _pair_sum_with_table(vals, _guarded_table(beta, side, 1), p_exp)
        A = f.root_cube.corner[0]
        B = A + f.root_cube.edge
        ext = 0.0
        for i, v in enumerate(vals):
            if v == 0.0:
                continue
            x0 = A + i * h
            ext += abs(v) ** p_exp * exterior_weight_1d(x0, x0 + h, A, B, beta)
        total = inner * h ** (2 - beta) + 2.0 * ext
        return total ** (1.0 / p_exp)
    M = f.side if margin is None else int(margin)
    big = np.zeros((f.side + 2 * M,) * 2)
    big[M:M + f.side, M:M + f.side] = vals
    inner = _pair_sum_with_table(big, _guarded_table(beta, big.shape[0], 2), p_exp)
    nz = np.argwhere(vals != 0.0)
    if M == 0:
        raise ConfigError("2D Gagliardo needs a positive margin")
    c0 = f.root_cube.corner
    lo = (c0[0] - M * h, c0[1] - M * h)
    hi = (lo[0] + big.shape[0] * h, lo[1] + big.shape[0] * h)
    cells = np.array([[c0[0] + i * h, c0[1] + j * h] for i, j in nz])
    T = exterior_weight_2d(cells, h, lo, hi, beta)
    ext = float(np.sum(np.abs(vals[tuple(nz.T)]) ** p_exp * T))
    total = inner * h ** (4 - beta) + 2.0 * ext
    return total ** (1.0 / p_exp)


def sobolev_w1_seminorm(sampler: Sampler, gamma: float, root: DyadicCube, level: int) -> float:
    """``[int |grad f|^gamma]^{1/gamma}`` by midpoint quadrature of the analytic gradient."""
    g = sampler.grad_at(root, level)
    h = math.ldexp(1.0, -level)
    mag = np.linalg.norm(g, axis=-1)
    return float(np.sum(mag**gamma) * h**root.n) ** (1.0 / gamma)


def lipschitz_norm(sampler: Sampler, root: DyadicCube, level: int, seed: int = 0) -> float:
    """Largest difference quotient over all pairs of cell midpoints."""
    f = sampler.sample(root, level, seed)
    vals = f.values.ravel()
    pts = f.cell_midpoints().reshape(-1, f.n)
    best = 0.0
    rows = max(1, (1 << 21) // len(vals))
    for s in range(0, len(vals), rows):
        dv = np.abs(vals[s:s + rows, None] - vals[None, :])
        dx = np.linalg.norm(pts[s:s + rows, None, :] - pts[None, :, :], axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(dx > 0, dv / dx, 0.0)
        best = max(best, float(ratio.max()))
    return best


def campanato_norm(f: GridFunction, q: float, edges: Sequence[int] | None = None) -> float:
    """``sup_Q |Q|^{-1/n} MO_q(Q)`` over all grid cubes of the sweep edges."""
    edges = list(edges) if edges is not None else _dyadic_edges(f.side)
    best = 0.0
    for m in edges:
        mo = mo_power_windows(f.values, m, q) ** (1.0 / q)
        best = max(best, float(mo.max()) / (m * f.h))
    return best


# extension, limits, compositions ---------------------------------------------------

def extend_cylinder(f: GridFunction, t0: float = 0.0) -> GridFunction:
    """``F(x, t) = f(x)`` on ``Q0 x [t0, t0 + l0)`` with ``Q0`` the root of the 1D ``f``."""
    if f.n != 1:
        raise ValueError("extension lifts a one-dimensional function to two dimensions")
    l0 = f.root.edge
    k = t0 / l0
    if k != math.floor(k) or k < 0:
        raise ValueError("t0 must be a nonnegative multiple of the root edge")
    root = DyadicCube(f.root.level, (f.root.index[0], int(k)))
    vals = np.repeat(f.values[:, None], f.side, axis=1)
    return GridFunction(root, f.level, vals)


@dataclass(frozen=True)
class LimitSequence:
    ps: tuple[float, ...]
    values: tuple[float, ...]
    p_inf_value: float
    gaps: tuple[float, ...]
    lower_bounds: tuple[float, ...]
    best_cube: Cube | None


def limit_p_sequence(
    f: GridFunction, alpha: float, ps: Sequence[float], q: float = 2.0,
    strategy: PackingStrategy | None = None,
) -> LimitSequence:
    inf_res = jnq_norm_packing(f, Params(math.inf, q, alpha), strategy)
    v_inf = inf_res.value
    cube = inf_res.certificate[0] if inf_res.certificate else None
    values, lowers = [], []
    for p in ps:
        values.append(jnq_norm_packing(f, Params(p, q, alpha), strategy).value)
        lowers.append(cube.volume ** (1.0 / p) * v_inf if cube is not None else 0.0)
    gaps = tuple(v_inf - v for v in values)
    return LimitSequence(tuple(ps), tuple(values), v_inf, gaps, tuple(lowers), cube)


def compose_left(f: GridFunction, L: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    return f.with_values(L(np.asarray(f.values)))


def rescale_function(f: GridFunction, r: float) -> GridFunction:
    """``x -> f(r x)`` for ``r`` a power of two; the grid maps onto itself."""
    mant, exp = math.frexp(r)
    if mant != 0.5:
        raise ValueError(f"scale factor {r} is not a power of two")
    e = exp - 1
    return GridFunction(DyadicCube(f.root.level + e, f.root.index), f.level + e, f.values)


def left_compose_norm_check(
    L: Callable[[np.ndarray], np.ndarray], lip: float, f: GridFunction, params: Params,
    name: str = "", strategy: PackingStrategy | None = None, slack: float = 1e-10,
) -> VerificationReport:
    base = jnq_norm_packing(f, params, strategy).value
    comp = jnq_norm_packing(compose_left(f, L), params, strategy).value
    ok = comp <= lip * base * (1.0 + slack) + 1e-300
    return VerificationReport(
        "left_composition", bool(ok), name, params.label(),
        {"composed": comp, "bound": lip * base, "lipschitz": lip},
        (Threshold("relative_slack", slack, "PAPER", "composition with a Lipschitz map"),),
        inputs_digest(f, params, name),
    )


def right_compose_scaling_check(
    f: GridFunction, r: float, p: float, q: float = 1.0, alpha: float | None = None,
    strategy: PackingStrategy | None = None, name: str = "",
) -> VerificationReport:
    """``||f(r .)|| = r^{-n/p} ||f||`` for the congruent norm (or JNQ when ``alpha`` is given)."""
    g = rescale_function(f, r)
    if alpha is None:
        a, b = jn_con_norm(f, p, q, strategy).value, jn_con_norm(g, p, q, strategy).value
        label = f"JNcon,p={p:g},q={q:g},r={r:g}"
    else:
        prm = Params(p, q, alpha)
        a, b = jnq_norm_packing(f, prm, strategy).value, jnq_norm_packing(g, prm, strategy).value
        label = f"JNQ,{prm.label()},r={r:g}"
    expected = r ** (-f.n / p) * a
    err = abs(b - expected) / expected if expected > 0 else abs(b)
    return VerificationReport(
        "scaling_identity", bool(err <= EXACT_REL), name, label,
        {"scaled": b, "expected": expected, "rel_error": err},
        (Threshold("rel_error", EXACT_REL, "PAPER", "r^{-n/p} scaling"),),
        inputs_digest(f, r, p, q, alpha),
    )
