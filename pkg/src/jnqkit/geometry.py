"""Dyadic-cube combinatorics: levels, dyadic distance, dominated cubes, packing partitions."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Cube, DyadicCube, InvariantError, Packing


def dyadic_cubes_of_level(root: DyadicCube, k: int) -> list[DyadicCube]:
    """All level-``k`` dyadic cubes inside ``root``, first coordinate varying slowest."""
    if k < root.level:
        raise ValueError(f"level {k} is coarser than the root level {root.level}")
    shift = k - root.level
    side = 1 << shift
    base = [j << shift for j in root.index]
    return [
        DyadicCube(k, tuple(b + o for b, o in zip(base, offs)))
        for offs in itertools.product(range(side), repeat=root.n)
    ]


def dyadic_distance(x_cell: DyadicCube, y_cell: DyadicCube) -> float:
    """Edge of the smallest dyadic cube containing both cells (``inf`` across octants)."""
    if x_cell.level != y_cell.level or x_cell.n != y_cell.n:
        raise ValueError("cells must share level and dimension")
    if any((a < 0) != (b < 0) for a, b in zip(x_cell.index, y_cell.index)):
        return math.inf
    # levels to climb = bit length of the largest coordinate xor
    climb = max((a ^ b).bit_length() for a, b in zip(x_cell.index, y_cell.index))
    return math.ldexp(1.0, climb - x_cell.level)


def check_delta_bound(
    x: Sequence[float], y: Sequence[float], x_cell: DyadicCube, y_cell: DyadicCube
) -> bool:
    """``|x - y| <= sqrt(n) * delta`` for representative points of two cells."""
    delta = dyadic_distance(x_cell, y_cell)
    dist = math.dist(tuple(x), tuple(y))
    return dist <= math.sqrt(len(tuple(x))) * delta


@dataclass(frozen=True)
class DominatedCube:
    base: Cube
    level: int
    lower_left: DyadicCube
    flat: Cube


def bracket_level(edge: float) -> int:
    """The integer ``k`` with ``edge`` in ``(2^{-k-1}, 2^{-k}]``."""
    if not (edge > 0 and math.isfinite(edge)):
        raise ValueError(f"edge must be finite and positive, got {edge}")
    mant, exp = math.frexp(edge)  # edge = mant * 2^exp, mant in [0.5, 1)
    # mant == 0.5 means edge is an exact power of two: edge = 2^{exp-1}
    return 1 - exp if mant == 0.5 else -exp


def dominated_cube(Q: Cube) -> DominatedCube:
    k = bracket_level(Q.edge)
    index = tuple(math.floor(math.ldexp(c, k)) for c in Q.corner)
    q1 = DyadicCube(k, index)
    flat = Cube(q1.to_cube().corner, math.ldexp(2.0, -k))
    if not flat.contains_cube(Q):
        raise InvariantError(f"dominated cube {flat} does not contain {Q}")
    return DominatedCube(Q, k, q1, flat)


def sparse_family_index(D: DyadicCube) -> int:
    """Mixed-radix code ``1 + sum_i (j_i mod 3) 3^i``; members of one family are 3 apart."""
    return 1 + sum((j % 3) * 3**i for i, j in enumerate(D.index))


@dataclass(frozen=True)
class PartitionResult:
    families: tuple[tuple[int, ...], ...]

    def to_json(self) -> str:
        return json.dumps({str(i): list(fam) for i, fam in enumerate(self.families)})

    @staticmethod
    def from_json(text: str) -> "PartitionResult":
        data = json.loads(text)
        return PartitionResult(tuple(tuple(data[k]) for k in sorted(data, key=int)))


def partition_packing(P: Packing) -> PartitionResult:
    """Split a congruent packing into at most ``6^n`` families with disjoint dominated cubes.

    The family key is (sparse family of ``Q^(1)``, rank of the cube among those
    sharing the same ``Q^(1)``, ranked lexicographically by corner).
    """
    if not P.cubes:
        return PartitionResult(())
    n = P.cubes[0].n
    doms = [dominated_cube(Q) for Q in P.cubes]
    sharers: dict[DyadicCube, list[int]] = {}
    for i, d in enumerate(doms):
        sharers.setdefault(d.lower_left, []).append(i)
    slot = [0] * len(doms)
    for members in sharers.values():
        members.sort(key=lambda i: P.cubes[i].corner)
        if len(members) > 2**n:
            raise InvariantError(
                f"{len(members)} cubes share the lower-left cube {doms[members[0]].lower_left}; "
                f"at most {2 ** n} are possible"
            )
        for rank, i in enumerate(members):
            slot[i] = rank
    groups: dict[tuple[int, int], list[int]] = {}
    for i, d in enumerate(doms):
        groups.setdefault((sparse_family_index(d.lower_left), slot[i]), []).append(i)
    families = tuple(tuple(groups[key]) for key in sorted(groups))
    if len(families) > 6**n:
        raise InvariantError(f"{len(families)} families exceed the bound 6^{n}")
    for fam in families:
        flats = [doms[i].flat for i in fam]
        for a, b in itertools.combinations(range(len(flats)), 2):
            if flats[a].interiors_overlap(flats[b]):
                raise InvariantError(
                    f"dominated cubes of members {fam[a]} and {fam[b]} overlap"
                )
    return PartitionResult(families)


def lattice_shift_covers(ell: float, root: Cube | None = None, n: int = 1) -> list[Packing]:
    """The ``2^n`` shifted families of doubled level-``m`` cubes used to cover ``root``.

    For ``ell`` in ``(2^{-m-1}, 2^{-m}]`` each family is ``{2 Q_{j+i}}_{j in 2Z^n}``,
    ``2Q`` the concentric double of ``2^{-m}(j + [0,1)^n)``; only members meeting
    ``root`` are returned. Every level-``m`` cube inside ``root`` lies in some member.
    """
    if root is None:
        root = Cube((0.0,) * n, 1.0)
    n = root.n
    m = bracket_level(ell)
    h = math.ldexp(1.0, -m)
    lo = [math.floor(c / h) - 2 for c in root.corner]
    hi = [math.ceil((c + root.edge) / h) + 2 for c in root.corner]
    families = []
    for shift in itertools.product((0, 1), repeat=n):
        members = []
        ranges = [
            [j for j in range(lo[a], hi[a]) if (j - shift[a]) % 2 == 0] for a in range(n)
        ]
        for js in itertools.product(*ranges):
            cube = Cube(tuple((j - 0.5) * h for j in js), 2 * h)
            if cube.interiors_overlap(root):
                members.append(cube)
        families.append(Packing(tuple(members), 2 * h))
    cells_per_side = max(1, round(root.edge / h))
    for offs in itertools.product(range(cells_per_side), repeat=n):
        cell = Cube(tuple(c + o * h for c, o in zip(root.corner, offs)), min(h, root.edge))
        if not any(any(mem.contains_cube(cell) for mem in fam.cubes) for fam in families):
            raise InvariantError(f"cell {cell} is not covered by the shifted families")
    return families


def random_grid_packing(
    rng: np.random.Generator, n: int, side: int, edge_cells: int, h: float, attempts: int = 200
) -> Packing:
    """Greedy random congruent packing of grid-aligned cubes inside ``[0, side*h)^n``."""
    placed: list[Cube] = []
    occupied = np.zeros((side,) * n, dtype=bool)
    for _ in range(attempts):
        start = tuple(int(s) for s in rng.integers(0, side - edge_cells + 1, size=n))
        sl = tuple(slice(s, s + edge_cells) for s in start)
        if occupied[sl].any():
            continue
        occupied[sl] = True
        placed.append(Cube(tuple(s * h for s in start), edge_cells * h))
    return Packing(tuple(placed), edge_cells * h)
