"""Named test functions, sampled at cell midpoints onto a dyadic grid."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Cube, DyadicCube, GridFunction

# check groups a function may take part in
GRID = "grid"            # any functional of the grid values
NONCONSTANT = "nonconstant"
SMOOTH = "smooth"        # analytic gradient available (Sobolev / Lipschitz checks)


@dataclass(frozen=True)
class Sampler:
    """A function on a root cube, written in normalized coordinates ``u = (x - corner)/edge``.

    ``value(u, cube, seed)`` returns values; ``gradient(u, cube)`` the physical gradient.
    """

    name: str
    value: Callable[..., np.ndarray]
    gradient: Optional[Callable[[np.ndarray, Cube], np.ndarray]] = None
    checks: frozenset = field(default_factory=frozenset)

    def participates(self, check_group: str) -> bool:
        return check_group in self.checks

    def sample(self, root: DyadicCube, level: int, seed: int = 0) -> GridFunction:
        side = 1 << (level - root.level)
        u = (np.arange(side) + 0.5) / side
        grids = np.meshgrid(*([u] * root.n), indexing="ij")
        pts = np.stack(grids, axis=-1)
        return GridFunction(root, level, self.value(pts, root.to_cube(), seed))

    def grad_at(self, root: DyadicCube, level: int) -> np.ndarray:
        """Physical gradient at cell midpoints, shape ``(side,)*n + (n,)``."""
        if self.gradient is None:
            raise ValueError(f"sampler {self.name!r} has no gradient")
        side = 1 << (level - root.level)
        u = (np.arange(side) + 0.5) / side
        pts = np.stack(np.meshgrid(*([u] * root.n), indexing="ij"), axis=-1)
        return self.gradient(pts, root.to_cube())


def _constant(u, cube, seed: int = 0):
    return np.full(u.shape[:-1], 1.0)


def _step(u, cube, seed: int = 0):
    return np.where(u[..., 0] < 0.5, 1.0, 0.0)


def _linear(u, cube, seed: int = 0):
    # physical x_1, so the Lipschitz constant is 1 on any root
    return cube.corner[0] + cube.edge * u[..., 0]


def _linear_grad(u, cube):
    g = np.zeros(u.shape)
    g[..., 0] = 1.0
    return g


def _log(u, cube, seed: int = 0):
    r = np.linalg.norm(u - 0.5, axis=-1)
    return np.log(np.maximum(r, 2.0**-6))


_BUMP_RADIUS = 0.25


def _bump(u, cube, seed: int = 0):
    r = np.linalg.norm(u - 0.5, axis=-1)
    return np.maximum(0.0, 1.0 - r / _BUMP_RADIUS)


def _bump_grad(u, cube):
    d = u - 0.5
    r = np.linalg.norm(d, axis=-1, keepdims=True)
    inside = (r < _BUMP_RADIUS) & (r > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = -d / (r * _BUMP_RADIUS)
    return np.where(inside, g, 0.0) / cube.edge


RANDOM_BLOCKS = 8


def _random(u, cube, seed: int = 0):
    rng = np.random.default_rng(seed)
    n = u.shape[-1]
    table = rng.uniform(-1.0, 1.0, size=(RANDOM_BLOCKS,) * n)
    idx = np.minimum((u * RANDOM_BLOCKS).astype(int), RANDOM_BLOCKS - 1)
    return table[tuple(idx[..., i] for i in range(n))]


CATALOG: dict[str, Sampler] = {
    "constant": Sampler("constant", _constant, lambda u, cube: np.zeros(u.shape), frozenset({GRID, SMOOTH})),
    "step": Sampler("step", _step, None, frozenset({GRID, NONCONSTANT})),
    "linear": Sampler("linear", _linear, _linear_grad, frozenset({GRID, NONCONSTANT, SMOOTH})),
    "log": Sampler("log", _log, None, frozenset({GRID, NONCONSTANT})),
    "random": Sampler("random", _random, None, frozenset({GRID, NONCONSTANT})),
    "bump": Sampler("bump", _bump, _bump_grad, frozenset({GRID, NONCONSTANT, SMOOTH})),
}


def make_function(name: str, n: int, level: int, root_level: int = 0, seed: int = 0,
                  root_index: tuple[int, ...] | None = None) -> GridFunction:
    """Sample a catalog entry on the level-``level`` grid of a dyadic root."""
    if name not in CATALOG:
        raise KeyError(f"unknown catalog function {name!r}; choose from {sorted(CATALOG)}")
    root = DyadicCube(root_level, root_index or (0,) * n)
    return CATALOG[name].sample(root, level, seed)


def lipschitz_constant_of_bump(edge: float) -> float:
    return 1.0 / (_BUMP_RADIUS * edge)


# scalar maps for left composition: (map, Lipschitz constant)
def _g_map(x):
    return (np.sqrt(x * x + 4.0) + x) / 2.0


LIPSCHITZ_MAPS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], float]] = {
    "identity": (lambda x: x, 1.0),
    "double": (lambda x: 2.0 * x, 2.0),
    "abs": (np.abs, 1.0),
    "sin": (np.sin, 1.0),
    "g": (_g_map, 1.0),
    "g_recip": (lambda x: 1.0 / _g_map(x), 1.0),
}


def g_map(x: np.ndarray) -> np.ndarray:
    """``g(x) = (sqrt(x^2 + 4) + x)/2``, which satisfies ``g - 1/g = x``."""
    return _g_map(x)

