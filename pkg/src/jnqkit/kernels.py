"""Cell-pair weights of the kernel ``|x - y|^{-beta}``.

For two cells of edge ``h`` whose corners differ by ``h*u`` the weight is
``h^{2n-beta} * w(u)`` with the tent-convolution form

    w(u) = int_{[-1,1]^n} prod_i (1 - |s_i|) |u + s|^{-beta} ds.

In one dimension ``w`` is the second difference of an explicit antiderivative.
In two dimensions each of the four tent quadrants is a rectangle in ``v = u + s``
carrying a bilinear weight; rectangles that contain the origin are integrated in
polar coordinates with the radial integral done exactly, all others by adaptive
tensor Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import Cube, DivergenceError

LOG_BRANCH_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    beta: float
    n: int

    @staticmethod
    def from_params(n: int, q: float, alpha: float) -> "KernelSpec":
        return KernelSpec(n + q * alpha, n)

    @property
    def touching_finite(self) -> bool:
        """Whether pairs of cells with touching closures have finite weight."""
        return self.beta < self.n + 1


@lru_cache(maxsize=None)
def gauss_legendre(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(k)
    return (x + 1.0) / 2.0, w / 2.0


# one dimension ---------------------------------------------------------------

def _g1(t: float, beta: float) -> float:
    """Even antiderivative with ``g'' = |t|^{-beta}`` (valid away from 0 in the log cases)."""
    t = abs(t)
    if abs(beta - 1.0) < LOG_BRANCH_TOL:
        return 0.0 if t == 0 else t * math.log(t)
    if abs(beta - 2.0) < LOG_BRANCH_TOL:
        return -math.log(t)
    if t == 0.0:
        return 0.0
    return t ** (2.0 - beta) / ((1.0 - beta) * (2.0 - beta))


def _expm1_ratio(x: float) -> float:
    return 1.0 if x == 0.0 else math.expm1(x) / x


def _tent_gl_1d(u: np.ndarray, beta: float, k: int = 32) -> np.ndarray:
    x, w = gauss_legendre(k)
    u = np.asarray(u, dtype=np.float64)[..., None]
    # s in [0,1] with weight 1-s on both sides of u
    right = np.abs(u + x) ** (-beta)
    left = np.abs(u - x) ** (-beta)
    return ((right + left) * ((1.0 - x) * w)).sum(axis=-1)


def unit_weight_1d(u: float, beta: float) -> float:
    """``w(u)`` for unit cells ``[0,1)`` and ``[u, u+1)``."""
    u = abs(float(u))
    if u >= 2.0:
        return float(_tent_gl_1d(np.array(u), beta))
    if u == 1.0:
        if beta >= 2.0:
            raise DivergenceError(f"touching cells with beta={beta:g} >= 2 have infinite weight")
        x = (1.0 - beta) * math.log(2.0)
        return 2.0 * math.log(2.0) * _expm1_ratio(x) / (2.0 - beta)
    if u < 1.0 and beta >= 1.0:
        raise DivergenceError(f"overlapping cells with beta={beta:g} >= 1 have infinite weight")
    return _g1(u + 1.0, beta) - 2.0 * _g1(u, beta) + _g1(u - 1.0, beta)


def weight_table_1d(beta: float, dmax: int, divergent_as_inf: bool = False) -> np.ndarray:
    """``w(d)`` for integer ``d = 0..dmax`` with ``w(0) = 0`` (same-cell pairs never count).

    Divergent touching weights raise unless ``divergent_as_inf`` is set.
    """
    return _weight_table_1d_cached(float(beta), int(dmax), divergent_as_inf).copy()


def _near_weight(fn, *args, divergent_as_inf: bool) -> float:
    try:
        return fn(*args)
    except DivergenceError:
        if divergent_as_inf:
            return math.inf
        raise


@lru_cache(maxsize=64)
def _weight_table_1d_cached(beta: float, dmax: int, divergent_as_inf: bool) -> np.ndarray:
    out = np.zeros(dmax + 1)
    if dmax >= 1:
        out[1] = _near_weight(unit_weight_1d, 1.0, beta, divergent_as_inf=divergent_as_inf)
    if dmax >= 2:
        out[2:] = _tent_gl_1d(np.arange(2, dmax + 1, dtype=np.float64), beta)
    out.flags.writeable = False
    return out


# two dimensions --------------------------------------------------------------

def _adaptive_1d(fn, a: float, b: float, tol: float, depth: int = 0, k: int = 20) -> float:
    x, w = gauss_legendre(k)

    def rule(lo: float, hi: float) -> float:
        return float((hi - lo) * np.dot(w, fn(lo + (hi - lo) * x)))

    mid = 0.5 * (a + b)
    whole = rule(a, b)
    halves = rule(a, mid) + rule(mid, b)
    if abs(whole - halves) <= tol * abs(halves) + 1e-300 or depth >= 30:
        return halves
    return _adaptive_1d(fn, a, mid, tol, depth + 1, k) + _adaptive_1d(fn, mid, b, tol, depth + 1, k)


def _polar_corner(A: float, B: float, c00: float, c10: float, c01: float, c11: float,
                  beta: float, tol: float) -> float:
    """``int_{[0,A]x[0,B]} (c00 + c10 x + c01 y + c11 x y) |(x,y)|^{-beta}``, origin at a vertex."""
    terms = []  # (degree, coefficient function of theta)
    if c00 != 0.0:
        terms.append((0, lambda t: np.full_like(t, c00)))
    if c10 != 0.0 or c01 != 0.0:
        terms.append((1, lambda t: c10 * np.cos(t) + c01 * np.sin(t)))
    if c11 != 0.0:
        terms.append((2, lambda t: c11 * np.cos(t) * np.sin(t)))
    for deg, _ in terms:
        if deg + 2.0 - beta <= 0.0:
            raise DivergenceError(
                f"kernel exponent beta={beta:g} is not integrable at a contact of order {deg}"
            )
    if not terms:
        return 0.0
    split = math.atan2(B, A)

    def integrand(theta: np.ndarray, lower: bool) -> np.ndarray:
        rmax = A / np.cos(theta) if lower else B / np.sin(theta)
        total = np.zeros_like(theta)
        for deg, coef in terms:
            e = deg + 2.0 - beta
            total += coef(theta) * rmax**e / e
        return total

    return _adaptive_1d(lambda t: integrand(t, True), 0.0, split, tol) + _adaptive_1d(
        lambda t: integrand(t, False), split, math.pi / 2, tol
    )


def _gl_rect(lo1, hi1, lo2, hi2, a1, b1, a2, b2, beta, k: int = 12) -> float:
    x, w = gauss_legendre(k)
    v1 = lo1 + (hi1 - lo1) * x
    v2 = lo2 + (hi2 - lo2) * x
    p1 = (a1 + b1 * v1) * w * (hi1 - lo1)
    p2 = (a2 + b2 * v2) * w * (hi2 - lo2)
    r = np.hypot(v1[:, None], v2[None, :]) ** (-beta)
    return float(p1 @ r @ p2)


def _adaptive_rect(lo1, hi1, lo2, hi2, a1, b1, a2, b2, beta, tol, depth=0) -> float:
    whole = _gl_rect(lo1, hi1, lo2, hi2, a1, b1, a2, b2, beta)
    m1, m2 = 0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2)
    subs = [(lo1, m1, lo2, m2), (m1, hi1, lo2, m2), (lo1, m1, m2, hi2), (m1, hi1, m2, hi2)]
    parts = [_gl_rect(*s, a1, b1, a2, b2, beta) for s in subs]
    total = sum(parts)
    if abs(whole - total) <= tol * abs(total) + 1e-300 or depth >= 12:
        return total
    return sum(_adaptive_rect(*s, a1, b1, a2, b2, beta, tol, depth + 1) for s in subs)


def _rect_integral(lo1, hi1, lo2, hi2, a1, b1, a2, b2, beta, tol) -> float:
    """``int (a1 + b1 v1)(a2 + b2 v2) |v|^{-beta}`` over a rectangle in ``v``."""
    if not (lo1 <= 0.0 <= hi1 and lo2 <= 0.0 <= hi2):
        return _adaptive_rect(lo1, hi1, lo2, hi2, a1, b1, a2, b2, beta, tol)
    total = 0.0
    for lo, hi, sign1 in ((lo1, 0.0, -1.0), (0.0, hi1, 1.0)):
        if hi <= lo:
            continue
        for lo_, hi_, sign2 in ((lo2, 0.0, -1.0), (0.0, hi2, 1.0)):
            if hi_ <= lo_:
                continue
            # reflect so the sub-rectangle is [0, A] x [0, B] with v_i = sign_i w_i
            A, B = hi - lo, hi_ - lo_
            aa1, bb1 = a1, b1 * sign1
            aa2, bb2 = a2, b2 * sign2
            total += _polar_corner(A, B, aa1 * aa2, bb1 * aa2, aa1 * bb2, bb1 * bb2, beta, tol)
    return total


def unit_weight_2d(u: tuple[float, float], beta: float, tol: float = 1e-12) -> float:
    """``w(u)`` for unit squares whose corners differ by ``u``."""
    # symmetry of the tent lets us canonicalize to 0 <= u1 <= u2
    u1, u2 = sorted((abs(float(u[0])), abs(float(u[1]))))
    total = 0.0
    for s1 in (-1.0, 1.0):
        for s2 in (-1.0, 1.0):
            lo1, hi1 = (u1 - 1.0, u1) if s1 < 0 else (u1, u1 + 1.0)
            lo2, hi2 = (u2 - 1.0, u2) if s2 < 0 else (u2, u2 + 1.0)
            # 1 - |s_i| = (1 + sigma_i u_i) - sigma_i v_i on the quadrant
            total += _rect_integral(
                lo1, hi1, lo2, hi2, 1.0 + s1 * u1, -s1, 1.0 + s2 * u2, -s2, beta, tol
            )
    return total


def _tent_gl_2d(offsets: np.ndarray, beta: float, k: int = 16) -> np.ndarray:
    """Tensor Gauss-Legendre on the four tent quadrants; offsets of shape (K, 2), sup-norm >= 2."""
    x, w = gauss_legendre(k)
    s = np.concatenate([-x, x])
    ws = np.concatenate([(1.0 - x) * w, (1.0 - x) * w])
    out = np.zeros(len(offsets))
    chunk = max(1, 4_000_000 // (4 * k * k))
    for start in range(0, len(offsets), chunk):
        u = offsets[start:start + chunk]
        v1 = u[:, 0:1, None] + s[None, :, None]
        v2 = u[:, 1:2, None].transpose(0, 2, 1) + s[None, None, :]
        r = np.hypot(v1, v2) ** (-beta)
        out[start:start + chunk] = np.einsum("kij,i,j->k", r, ws, ws)
    return out


def weight_table_2d(beta: float, size: int, divergent_as_inf: bool = False) -> np.ndarray:
    """``W[a, b] = w((a, b))`` for ``0 <= a, b < size`` with ``W[0, 0] = 0``."""
    return _weight_table_2d_cached(float(beta), int(size), divergent_as_inf).copy()


@lru_cache(maxsize=32)
def _weight_table_2d_cached(beta: float, size: int, divergent_as_inf: bool) -> np.ndarray:
    W = np.zeros((size, size))
    near = [(a, b) for a in range(min(size, 2)) for b in range(a, min(size, 2)) if (a, b) != (0, 0)]
    for a, b in near:
        W[a, b] = W[b, a] = _near_weight(
            unit_weight_2d, (a, b), beta, divergent_as_inf=divergent_as_inf
        )
    far = [(a, b) for a in range(size) for b in range(a, size) if b >= 2]
    if far:
        vals = _tent_gl_2d(np.array(far, dtype=np.float64), beta)
        for (a, b), v in zip(far, vals):
            W[a, b] = W[b, a] = v
    W.flags.writeable = False
    return W


def kernel_weight(A: Cube, B: Cube, spec: KernelSpec, tol: float = 1e-12) -> float:
    """``int_A int_B |x - y|^{-beta} dx dy`` for two cells of equal edge."""
    if A.edge != B.edge or A.n != B.n or A.n != spec.n:
        raise ValueError("cells must share edge and dimension")
    h = A.edge
    u = tuple((b - a) / h for a, b in zip(A.corner, B.corner))
    scale = h ** (2 * spec.n - spec.beta)
    if spec.n == 1:
        return scale * unit_weight_1d(u[0], spec.beta)
    return scale * unit_weight_2d(u, spec.beta, tol)


# exterior terms for the Gagliardo seminorm -----------------------------------

def _power_diff(x0: float, x1: float, e: float) -> float:
    """``x1^e - x0^e`` for ``0 < x0 < x1`` without cancellation."""
    return x0**e * math.expm1(e * math.log1p((x1 - x0) / x0))


def exterior_weight_1d(x0: float, x1: float, A: float, B: float, beta: float) -> float:
    """``int_{[x0,x1]} int_{R \\ [A,B]} |x - y|^{-beta} dy dx`` for ``[x0,x1]`` inside ``[A,B]``."""
    if beta <= 1.0:
        raise DivergenceError(f"exterior tail diverges for beta={beta:g} <= 1")
    total = 0.0
    for near, far in ((x0 - A, x1 - A), (B - x1, B - x0)):
        if near == 0.0:
            if beta >= 2.0:
                raise DivergenceError(f"cell touching the boundary with beta={beta:g} >= 2")
            total += far ** (2.0 - beta) / ((beta - 1.0) * (2.0 - beta))
        elif abs(beta - 2.0) < LOG_BRANCH_TOL:
            total += math.log1p((far - near) / near) / (beta - 1.0)
        else:
            total += _power_diff(near, far, 2.0 - beta) / ((beta - 1.0) * (2.0 - beta))
    return total


def exterior_weight_2d(cells_lo: np.ndarray, h: float, E_lo: tuple[float, float],
                       E_hi: tuple[float, float], beta: float, k: int = 8, kt: int = 24) -> np.ndarray:
    """Exterior weights for square cells (lower corners ``cells_lo``, shape (K, 2)) well inside ``E``.

    Uses ``int_{R^2 \\ E} |x-y|^{-beta} dy = int_0^{2 pi} rho(theta)^{2-beta} / (beta - 2) dtheta``
    with ``rho`` the exit distance from ``x``; both integrals by Gauss-Legendre,
    the angle split at the four corner directions so each piece is smooth.
    """
    if beta <= 2.0:
        raise DivergenceError(f"exterior tail diverges for beta={beta:g} <= 2")
    xg, wg = gauss_legendre(k)
    tg, tw = gauss_legendre(kt)
    out = np.zeros(len(cells_lo))
    for idx, (c1, c2) in enumerate(np.asarray(cells_lo, dtype=np.float64)):
        px = (c1 + h * xg)[:, None].repeat(k, 1).ravel()
        py = (c2 + h * xg)[None, :].repeat(k, 0).ravel()
        pw = (np.outer(wg, wg) * h * h).ravel()
        dr, dl = E_hi[0] - px, px - E_lo[0]
        du, dd = E_hi[1] - py, py - E_lo[1]
        corners = np.stack([
            np.arctan2(du, dr), np.pi - np.arctan2(du, dl),
            np.pi + np.arctan2(dd, dl), 2 * np.pi - np.arctan2(dd, dr),
        ], axis=1)
        bounds = np.concatenate([np.zeros((len(px), 1)), corners, np.full((len(px), 1), 2 * np.pi)], axis=1)
        acc = np.zeros(len(px))
        for piece in range(5):
            lo, hi = bounds[:, piece], bounds[:, piece + 1]
            th = lo[:, None] + (hi - lo)[:, None] * tg[None, :]
            c, s = np.cos(th), np.sin(th)
            with np.errstate(divide="ignore"):
                if piece in (0, 4):
                    rho = dr[:, None] / c
                elif piece == 1:
                    rho = du[:, None] / s
                elif piece == 2:
                    rho = -dl[:, None] / c
                else:
                    rho = -dd[:, None] / s
            acc += (hi - lo) * (rho ** (2.0 - beta) @ tw)
        out[idx] = float(pw @ acc) / (beta - 2.0)
    return out
