"""Domain types shared by every module: exponents, cubes, packings, grid functions.

Cubes are half-open axis-parallel boxes ``prod_i [corner_i, corner_i + edge)``.
Grid functions are piecewise constant on the level-L dyadic cells of a dyadic
root cube, so every functional below reduces to finite sums over cells.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class AlignmentError(ValueError):
    """A cube does not sit on the representation grid of a function."""


class DivergenceError(ArithmeticError):
    """An analytic quantity is infinite for the requested exponents."""


class InvariantError(RuntimeError):
    """An internal invariant that a proof guarantees was violated."""


class ConfigError(ValueError):
    """Bad configuration: missing goldens, schema violations, unknown keys."""


_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Params:
    """Exponent triple ``(p, q, alpha)``; ``p = inf`` selects the single-cube sup."""

    p: float
    q: float
    alpha: float

    def __post_init__(self) -> None:
        p, q, a = float(self.p), float(self.q), float(self.alpha)
        if not (p >= 1.0):
            raise ValueError(f"p must lie in [1, inf], got {self.p}")
        if not (1.0 <= q < math.inf):
            raise ValueError(f"q must lie in [1, inf), got {self.q}")
        if not math.isfinite(a):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", a)

    @property
    def p_is_inf(self) -> bool:
        return math.isinf(self.p)

    def alpha0(self, n: int) -> float:
        inv_p = 0.0 if self.p_is_inf else 1.0 / self.p
        return n * (1.0 / self.q - inv_p)

    def beta(self, n: int) -> float:
        """Kernel exponent ``n + q*alpha``."""
        return n + self.q * self.alpha

    def with_alpha(self, alpha: float) -> "Params":
        return Params(self.p, self.q, alpha)

    def with_p(self, p: float) -> "Params":
        return Params(p, self.q, self.alpha)

    def label(self) -> str:
        p = "inf" if self.p_is_inf else f"{self.p:g}"
        return f"p={p},q={self.q:g},alpha={self.alpha:g}"


@dataclass(frozen=True)
class Cube:
    corner: tuple[float, ...]
    edge: float

    def __post_init__(self) -> None:
        corner = tuple(float(c) for c in self.corner)
        if len(corner) not in (1, 2):
            raise ValueError(f"only n in {{1, 2}} is supported, got n={len(corner)}")
        edge = float(self.edge)
        if not (math.isfinite(edge) and edge > 0.0):
            raise ValueError(f"edge must be finite and positive, got {self.edge}")
        if not all(math.isfinite(c) for c in corner):
            raise ValueError("corner coordinates must be finite")
        object.__setattr__(self, "corner", corner)
        object.__setattr__(self, "edge", edge)

    @property
    def n(self) -> int:
        return len(self.corner)

    @property
    def volume(self) -> float:
        return self.edge**self.n

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(c + self.edge for c in self.corner)

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(c <= xi < c + self.edge for c, xi in zip(self.corner, x))

    def contains_cube(self, other: "Cube") -> bool:
        return all(
            a <= b and b + other.edge <= a + self.edge
            for a, b in zip(self.corner, other.corner)
        )

    def interiors_overlap(self, other: "Cube") -> bool:
        return all(
            a < b + other.edge and b < a + self.edge
            for a, b in zip(self.corner, other.corner)
        )

    def closures_meet(self, other: "Cube") -> bool:
        return all(
            a <= b + other.edge and b <= a + self.edge
            for a, b in zip(self.corner, other.corner)
        )


@dataclass(frozen=True, order=True)
class DyadicCube:
    """The cube ``2^-level * (index + [0, 1)^n)``."""

    level: int
    index: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "index", tuple(int(j) for j in self.index))
        if len(self.index) not in (1, 2):
            raise ValueError(f"only n in {{1, 2}} is supported, got n={len(self.index)}")

    @property
    def n(self) -> int:
        return len(self.index)

    @property
    def edge(self) -> float:
        return math.ldexp(1.0, -self.level)

    def to_cube(self) -> Cube:
        return Cube(tuple(math.ldexp(j, -self.level) for j in self.index), self.edge)

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.level - 1, tuple(j >> 1 for j in self.index))

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor level must not exceed own level")
        shift = self.level - level
        return DyadicCube(level, tuple(j >> shift for j in self.index))

    def children(self) -> list["DyadicCube"]:
        base = [2 * j for j in self.index]
        out = []
        for bits in np.ndindex(*(2,) * self.n):
            out.append(DyadicCube(self.level + 1, tuple(b + o for b, o in zip(base, bits))))
        return out

    def contains(self, other: "DyadicCube") -> bool:
        return other.level >= self.level and other.ancestor(self.level) == self


def _pairwise_disjoint(cubes: Sequence[Cube]) -> tuple[int, int] | None:
    """First overlapping pair, or None; sweep along x_1 so only candidates are compared."""
    order = sorted(range(len(cubes)), key=lambda i: cubes[i].corner[0])
    for a, i in enumerate(order):
        ci = cubes[i]
        reach = ci.corner[0] + ci.edge
        for j in order[a + 1:]:
            cj = cubes[j]
            if cj.corner[0] >= reach:
                break
            if ci.interiors_overlap(cj):
                return min(i, j), max(i, j)
    return None


@dataclass(frozen=True)
class Packing:
    """Congruent cubes with pairwise disjoint interiors."""

    cubes: tuple[Cube, ...]
    edge: float

    def __post_init__(self) -> None:
        cubes = tuple(self.cubes)
        object.__setattr__(self, "cubes", cubes)
        object.__setattr__(self, "edge", float(self.edge))
        for c in cubes:
            if c.edge != self.edge:
                raise ValueError(f"cube edge {c.edge} differs from packing edge {self.edge}")
        if len({c.n for c in cubes}) > 1:
            raise ValueError("mixed dimensions in packing")
        clash = _pairwise_disjoint(cubes)
        if clash is not None:
            i, j = clash
            raise ValueError(f"cubes {i} and {j} have overlapping interiors")

    def __len__(self) -> int:
        return len(self.cubes)


@dataclass(frozen=True)
class GridBox:
    """A grid-aligned cube in cell units relative to a function's root."""

    start: tuple[int, ...]
    size: int

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(s, s + self.size) for s in self.start)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on the level-``level`` cells of ``root``.

    ``values[i_1, ..., i_n]`` is the value on the cell whose lower corner is
    ``root.corner + h * (i_1, ..., i_n)`` with ``h = 2^-level``; array axis ``k``
    runs along coordinate ``x_{k+1}``.
    """

    root: DyadicCube
    level: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.level < self.root.level:
            raise ValueError("grid level must be >= root level")
        if any(j < 0 for j in self.root.index):
            raise ValueError("root must lie in the closed positive octant")
        vals = np.array(self.values, dtype=np.float64, copy=True)
        side = 1 << (self.level - self.root.level)
        expected = (side,) * self.root.n
        if vals.size != side**self.root.n:
            raise ValueError(f"expected {side ** self.root.n} values, got {vals.size}")
        vals = vals.reshape(expected)
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.root.n

    @property
    def side(self) -> int:
        """Number of cells along each axis."""
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def root_cube(self) -> Cube:
        return self.root.to_cube()

    def box_to_cube(self, box: GridBox) -> Cube:
        c0 = self.root_cube.corner
        return Cube(tuple(c + s * self.h for c, s in zip(c0, box.start)), box.size * self.h)

    def locate(self, Q: Cube) -> GridBox:
        """Grid coordinates of ``Q``; raises AlignmentError when off-grid or outside."""
        if Q.n != self.n:
            raise AlignmentError(f"cube dimension {Q.n} != function dimension {self.n}")
        size_f = Q.edge / self.h
        size = round(size_f)
        if size < 1 or abs(size_f - size) > _ALIGN_TOL * max(1.0, size_f):
            raise AlignmentError(f"edge {Q.edge} is not a multiple of the cell size {self.h}")
        start = []
        for c0, c in zip(self.root_cube.corner, Q.corner):
            s_f = (c - c0) / self.h
            s = round(s_f)
            if abs(s_f - s) > _ALIGN_TOL * max(1.0, abs(s_f)):
                raise AlignmentError(f"corner {Q.corner} is not on the level-{self.level} grid")
            start.append(s)
        if any(s < 0 or s + size > self.side for s in start):
            raise AlignmentError(f"cube {Q} is not contained in the root {self.root_cube}")
        return GridBox(tuple(start), size)

    def block(self, box: GridBox) -> np.ndarray:
        return self.values[box.slices()]

    def refine(self, extra_levels: int = 1) -> "GridFunction":
        """Same function, represented ``extra_levels`` levels finer."""
        vals = self.values
        for axis in range(self.n):
            vals = np.repeat(vals, 1 << extra_levels, axis=axis)
        return GridFunction(self.root, self.level + extra_levels, vals)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.root, self.level, values)

    def cell_midpoints(self) -> np.ndarray:
        """Array of shape ``values.shape + (n,)`` with cell centres."""
        c0 = self.root_cube.corner
        axes = [c + (np.arange(self.side) + 0.5) * self.h for c in c0]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def digest(self) -> str:
        m = hashlib.sha256()
        m.update(f"{self.root.level}:{self.root.index}:{self.level}".encode())
        m.update(np.ascontiguousarray(self.values).tobytes())
        return m.hexdigest()[:16]


PROVENANCE_TAGS = ("PAPER", "TRIVIAL", "DERIVED")


@dataclass(frozen=True)
class Threshold:
    name: str
    value: float | tuple[float, float]
    provenance: str
    source: str = ""

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCE_TAGS:
            raise ValueError(f"unknown provenance tag {self.provenance!r}")

    def to_json(self) -> dict:
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {
            "name": self.name,
            "value": value,
            "provenance": self.provenance,
            "source": self.source,
        }


@dataclass(frozen=True)
class VerificationReport:
    check: str
    passed: bool
    function: str = ""
    params: str = ""
    measured: dict[str, float] = field(default_factory=dict)
    thresholds: tuple[Threshold, ...] = ()
    digest: str = ""
    note: str = ""

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def sort_key(self) -> tuple[str, str, str]:
        return (self.check, self.function, self.params)

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "function": self.function,
            "params": self.params,
            "status": self.status,
            "measured": {k: _json_float(v) for k, v in self.measured.items()},
            "thresholds": [t.to_json() for t in self.thresholds],
            "digest": self.digest,
            "note": self.note,
        }


def _json_float(x: float):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def inputs_digest(*parts: object) -> str:
    m = hashlib.sha256()
    for part in parts:
        if isinstance(part, GridFunction):
            m.update(part.digest().encode())
        else:
            m.update(repr(part).encode())
    return m.hexdigest()[:16]


def cell_mean(f: GridFunction, Q: Cube) -> float:
    """Exact average of ``f`` over a grid-aligned cube inside the root."""
    return float(np.mean(f.block(f.locate(Q))))


def translate(Q: Cube, z: Sequence[float] | float) -> Cube:
    zs = (z,) * Q.n if np.isscalar(z) else tuple(z)
    if len(zs) != Q.n:
        raise ValueError("shift dimension mismatch")
    return Cube(tuple(c + dz for c, dz in zip(Q.corner, zs)), Q.edge)


def scale_cube(r: float, Q: Cube) -> Cube:
    """The image ``r x Q = {r x : x in Q}``."""
    if not r > 0:
        raise ValueError(f"scale factor must be positive, got {r}")
    return Cube(tuple(r * c for c in Q.corner), r * Q.edge)


def iter_boxes(side: int, size: int, n: int, stride: int = 1) -> Iterable[GridBox]:
    starts = range(0, side - size + 1, stride)
    for idx in np.ndindex(*(len(starts),) * n):
        yield GridBox(tuple(starts[i] for i in idx), size)
