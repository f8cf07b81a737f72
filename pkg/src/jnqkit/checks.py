"""Individual verification checks.

Each check takes a :class:`CheckContext` and returns exact-assertion reports plus
envelope measurements (ratios whose admissible band is frozen by calibration).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from . import packing as pk
from .catalog import CATALOG, LIPSCHITZ_MAPS, NONCONSTANT, SMOOTH, g_map, make_function
from .core import (
    DivergenceError,
    DyadicCube,
    GridBox,
    GridFunction,
    InvariantError,
    Params,
    Threshold,
    VerificationReport,
    inputs_digest,
)
from .functionals import (
    _check_touching,
    mo_power,
    mo_power_windows,
    pair_power_sum,
    phi_dyadic_pyramid,
    phi_power_block,
    phi_power_windows,
    phi_zero_padded_chain,
    psi_pyramid,
    moduli,
)
from .geometry import check_delta_bound, dominated_cube, partition_packing, random_grid_packing
from .norms import (
    PackingStrategy,
    extend_cylinder,
    gagliardo_seminorm,
    jn_con_norm,
    jnq_dyadic_norm,
    jnq_norm_integral,
    jnq_norm_on_cube,
    jnq_norm_packing,
    jnq_norm_variants,
    left_compose_norm_check,
    limit_p_sequence,
    lipschitz_norm,
    campanato_norm,
    phi_grid_pyramid,
    rescale_function,
    sobolev_w1_seminorm,
)

IDENTITY_REL = 1e-12
CONSTANT_SLACK = 1e-10

# parameters used for the envelope families (all with alpha < 1/q)
ENVELOPE_PARAMS = (Params(2.0, 2.0, -0.25), Params(2.0, 1.0, 0.25), Params(4.0, 2.0, 0.1))

# onecube probe parameters: (params, expected to fire)
PROBE_PARAMS = (
    (Params(2.0, 1.5, 0.5), True),     # alpha > alpha0
    (Params(1.0, 2.0, -0.5), True),    # p < q
    (Params(1.0, 2.0, 0.25), True),    # p < q
    (Params(2.0, 1.5, -0.5), False),   # collapse, p > q
    (Params(4.0, 2.0, -0.25), False),  # collapse, p > q
)
PROBE_DOUBLINGS = {1: 6, 2: 4}
SHELL_S = (0.25, 0.0, -0.25)           # first entry is the converging control
SHELL_MAX_DOUBLINGS = 12
LIMIT_PS = (2.0, 4.0, 8.0, 16.0, 32.0)


@dataclass(frozen=True)
class Measurement:
    """Range of one ratio family observed on one (function, params) instance."""

    family: str
    function: str
    params: str
    lo: float
    hi: float
    count: int
    digest: str = ""


@dataclass(frozen=True)
class BoundCheck:
    """Values that must all exceed the upper end of a frozen family band."""

    check: str
    function: str
    params: str
    values: tuple[tuple[str, float], ...]
    family: str
    digest: str = ""


@dataclass
class CheckOutput:
    reports: list[VerificationReport] = field(default_factory=list)
    measurements: list[Measurement] = field(default_factory=list)
    bounds: list[BoundCheck] = field(default_factory=list)

    def report(self, check: str, passed: bool, function: str, params: str, measured: dict,
               thresholds: tuple[Threshold, ...], digest: str = "", note: str = "") -> None:
        self.reports.append(VerificationReport(check, bool(passed), function, params,
                                               {k: float(v) for k, v in measured.items()},
                                               thresholds, digest, note))

    def measure(self, family: str, function: str, params: str, ratios, digest: str = "") -> None:
        r = [float(v) for v in ratios if math.isfinite(v)]
        if r:
            self.measurements.append(Measurement(family, function, params, min(r), max(r), len(r), digest))


@dataclass(frozen=True)
class CheckContext:
    function: str
    n: int
    seed: int
    levels: dict[str, int]  # scale name -> grid level
    identity_rel: float = IDENTITY_REL
    slack: float = CONSTANT_SLACK

    def grid(self, scale: str, root_level: int = 0) -> GridFunction:
        return make_function(self.function, self.n, self.levels[scale] + root_level,
                             root_level=root_level, seed=self.seed)

    def rng(self, salt: str) -> np.random.Generator:
        key = [self.seed, self.n] + [ord(c) for c in f"{salt}:{self.function}"]
        return np.random.default_rng(key)


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def _thr(name: str, value, provenance: str, source: str) -> tuple[Threshold, ...]:
    return (Threshold(name, value, provenance, source),)


# identities ----------------------------------------------------------------------

def check_osc_identity(ctx: CheckContext) -> CheckOutput:
    """``2 MO^2 = DD^2`` and ``1 <= DD/MO <= 2`` on random grid cubes."""
    out = CheckOutput()
    f = ctx.grid("desk")
    rng = ctx.rng("osc")
    cap = f.side if ctx.n == 1 else min(f.side, 32)
    boxes = []
    for _ in range(20):
        m = int(rng.integers(2, cap + 1))
        start = tuple(int(s) for s in rng.integers(0, f.side - m + 1, size=ctx.n))
        boxes.append(GridBox(start, m))
    for q in (1.0, 2.0, 3.0):
        worst_id, lo, hi, bad = 0.0, math.inf, -math.inf, 0
        for box in boxes:
            x = f.block(box)
            mo = mo_power(x, q) ** (1.0 / q)
            dd = (pair_power_sum(x, q) / x.size**2) ** (1.0 / q)
            if dd == 0.0:
                if mo != 0.0:
                    bad += 1
                continue
            ratio = dd / mo
            lo, hi = min(lo, ratio), max(hi, ratio)
            if not (1.0 - ctx.identity_rel <= ratio <= 2.0 * (1.0 + ctx.identity_rel)):
                bad += 1
            if q == 2.0:
                worst_id = max(worst_id, abs(2.0 * mo**2 - dd**2) / dd**2)
        ok = bad == 0 and worst_id <= ctx.identity_rel
        measured = {"violations": bad, "cubes": len(boxes)}
        if q == 2.0:
            measured["max_identity_rel_error"] = worst_id
        if math.isfinite(lo):
            measured.update(ratio_min=lo, ratio_max=hi)
        out.report("osc_identity", ok, ctx.function, f"n={ctx.n},q={q:g}", measured,
                   _thr("rel_error", ctx.identity_rel, "PAPER", "oscillation identity and sandwich"),
                   inputs_digest(f, boxes, q))
    return out


def check_scaling_identity(ctx: CheckContext) -> CheckOutput:
    """``||f(r .)|| = r^{-n/p} ||f||`` for the congruent norm and for JNQ."""
    out = CheckOutput()
    f = ctx.grid("desk")
    g = ctx.grid("medium")
    prm_q = Params(2.0, 2.0, -0.25)
    for p in (1.0, 2.0, 4.0):
        base_con = jn_con_norm(f, p, 1.0).value
        base_jnq = jnq_norm_packing(g, prm_q.with_p(p)).value
        for r in (0.5, 2.0):
            expected = r ** (-ctx.n / p)
            pairs = (
                (f"JNcon,p={p:g},q=1", base_con, jn_con_norm(rescale_function(f, r), p, 1.0).value),
                (f"JNQ,{prm_q.with_p(p).label()}", base_jnq,
                 jnq_norm_packing(rescale_function(g, r), prm_q.with_p(p)).value),
            )
            for label, base, scaled in pairs:
                err = _rel(scaled, expected * base)
                out.report("scaling_identity", err <= ctx.identity_rel, ctx.function,
                           f"n={ctx.n},{label},r={r:g}",
                           {"scaled": scaled, "expected": expected * base, "rel_error": err},
                           _thr("rel_error", ctx.identity_rel, "PAPER", "r^{-n/p} scaling"),
                           inputs_digest(f if label.startswith("JNcon") else g, r, label))
    return out


def _with_params(rep: VerificationReport, params: str) -> VerificationReport:
    return VerificationReport(rep.check, rep.passed, rep.function, params, rep.measured,
                              rep.thresholds, rep.digest, rep.note)


# geometry and optimizers -------------------------------------------------------------

def check_partition_lemma(ctx: CheckContext) -> CheckOutput:
    """1000 random congruent packings split into <= 6^n families with disjoint dominated cubes."""
    out = CheckOutput()
    rng = ctx.rng("partition")
    side = 64 if ctx.n == 1 else 32
    h = 1.0 / side
    failures, max_fam, max_size = 0, 0, 0
    for _ in range(1000):
        m = int(rng.integers(1, side // 2 + 1))
        P = random_grid_packing(rng, ctx.n, side, m, h, attempts=60)
        try:
            res = partition_packing(P)
        except InvariantError:
            failures += 1
            continue
        # exhaustive re-verification of pairwise disjoint dominated cubes
        for fam in res.families:
            doms = [dominated_cube(P.cubes[i]).flat for i in fam]
            for a, b in itertools.combinations(doms, 2):
                if a.interiors_overlap(b):
                    failures += 1
        if sum(len(f) for f in res.families) != len(P):
            failures += 1
        max_fam = max(max_fam, len(res.families))
        max_size = max(max_size, len(P))
    ok = failures == 0 and max_fam <= 6**ctx.n
    out.report("partition_lemma", ok, "", f"n={ctx.n}",
               {"failures": failures, "max_families": max_fam, "bound": 6**ctx.n,
                "packings": 1000, "largest_packing": max_size},
               _thr("families", 6**ctx.n, "PAPER", "sparse subfamily count"))
    return out


def check_delta_cells(ctx: CheckContext) -> CheckOutput:
    """Dyadic distance dominates Euclidean distance up to ``sqrt(n)`` on all cell pairs."""
    out = CheckOutput()
    level = 4 if ctx.n == 1 else 3
    root = DyadicCube(0, (0,) * ctx.n)
    cells = [DyadicCube(level, idx) for idx in np.ndindex(*(1 << level,) * ctx.n)]
    bad = 0
    for a in cells:
        ca = a.to_cube()
        for b in cells:
            cb = b.to_cube()
            # extreme corners of the two closed cells, in both orders
            bad += not check_delta_bound(ca.corner, cb.upper, a, b)
            bad += not check_delta_bound(ca.upper, cb.corner, a, b)
    out.report("delta_bound", bad == 0, "", f"n={ctx.n}",
               {"violations": bad, "pairs": len(cells) ** 2},
               _thr("violations", 0, "TRIVIAL", "distance bound"), inputs_digest(root, level))
    return out


def _window_weight_sets(x: np.ndarray, m: int) -> dict[str, np.ndarray]:
    prm = Params(2.0, 2.0, -0.25)
    return {
        "mo": m * mo_power_windows(x, m, 1.0),
        "phi": m * np.maximum(phi_power_windows(x, m, prm), 0.0),
    }


def check_optimizer_dp(ctx: CheckContext) -> CheckOutput:
    """1D interval DP against full enumeration on 12-cell windows and random weights."""
    out = CheckOutput()
    rng = ctx.rng("dp")
    instances = []
    if ctx.function:
        f = make_function(ctx.function, 1, 4, seed=ctx.seed)
        x = f.values[2:14]
        for m in (2, 3, 4, 5):
            for kind, w in _window_weight_sets(x, m).items():
                instances.append((f"{kind},m={m}", w, m))
    else:
        for i in range(240):
            cells = int(rng.integers(2, 13))
            m = int(rng.integers(1, min(5, cells) + 1))
            w = rng.random(cells - m + 1) * (rng.random(cells - m + 1) < 0.8)
            instances.append((f"random{i}", w, m))
    worst, bad = 0.0, 0
    for _, w, m in instances:
        a, starts = pk.dp_exact_1d(w, m)
        b = oracles.best_packing_enumeration(np.asarray(w), m)
        rescored = float(sum(w[s] for s in starts))
        err = max(_rel(a, b), _rel(a, rescored))
        worst = max(worst, err)
        bad += err > ctx.identity_rel
    out.report("optimizer_dp", bad == 0, ctx.function or "random", "n=1",
               {"instances": len(instances), "discrepancies": bad, "max_rel_error": worst},
               _thr("rel_error", ctx.identity_rel, "DERIVED", "exhaustive enumeration oracle"))
    return out


def check_optimizer_tree(ctx: CheckContext) -> CheckOutput:
    """Antichain tree DP against exhaustive antichain enumeration."""
    out = CheckOutput()
    depth = 3 if ctx.n == 1 else 2
    rng = ctx.rng("tree")
    trees = []
    if ctx.function:
        f = make_function(ctx.function, ctx.n, depth, seed=ctx.seed)
        prm = Params(2.0, 2.0, -0.25)
        levels = phi_grid_pyramid(f.values, prm)
        trees.append([(0.5**j) ** ctx.n * np.maximum(L, 0.0) for j, L in enumerate(levels)])
    else:
        for _ in range(12 if ctx.n == 1 else 3):
            trees.append([rng.random((1 << j,) * ctx.n) * (0.5**j) ** ctx.n for j in range(depth + 1)])
    worst, bad, enumerated = 0.0, 0, 0
    for levels in trees:
        a, chosen = pk.tree_dp(levels)
        b, count = oracles.best_antichain_enumeration(levels)
        enumerated = count
        rescored = float(sum(levels[j][idx] for j, idx in chosen))
        err = max(_rel(a, b), _rel(a, rescored))
        worst = max(worst, err)
        bad += err > ctx.identity_rel
    out.report("optimizer_tree", bad == 0, ctx.function or "random", f"n={ctx.n},depth={depth}",
               {"trees": len(trees), "antichains_per_tree": enumerated, "discrepancies": bad,
                "max_rel_error": worst},
               _thr("rel_error", ctx.identity_rel, "DERIVED", "exhaustive antichain oracle"))
    return out


def check_optimizer_ilp(ctx: CheckContext) -> CheckOutput:
    """2D integer program against full enumeration on small grids."""
    out = CheckOutput()
    rng = ctx.rng("ilp")
    instances = []
    if ctx.function:
        f = make_function(ctx.function, 2, 2, seed=ctx.seed)
        for m in (1, 2, 3):
            for kind, w in _window_weight_sets(f.values, m).items():
                instances.append((w, m))
    else:
        for _ in range(20):
            m = int(rng.integers(1, 4))
            side = int(rng.integers(m, m + 4))
            c = side - m + 1
            instances.append((rng.random((c, c)), m))
    worst, bad = 0.0, 0
    for w, m in instances:
        a, starts = pk.exhaustive_small(w, m)
        b = oracles.best_packing_enumeration(w, m)
        rescored = float(sum(w[s] for s in starts))
        err = max(_rel(a, b), _rel(a, rescored))
        worst = max(worst, err)
        bad += err > 1e-9
    out.report("optimizer_ilp", bad == 0, ctx.function or "random", "n=2",
               {"instances": len(instances), "discrepancies": bad, "max_rel_error": worst},
               _thr("rel_error", 1e-9, "DERIVED", "exhaustive enumeration oracle"))
    return out


def check_certificate(ctx: CheckContext) -> CheckOutput:
    """Re-scoring each returned certificate reproduces the searched value."""
    out = CheckOutput()
    f = ctx.grid("desk" if ctx.n == 1 else "small")
    prm = Params(2.0, 2.0, -0.25)
    results = {
        "jn_con": jn_con_norm(f, 2.0, 1.0),
        "jnq": jnq_norm_packing(f, prm),
        "variant_III": jnq_norm_variants(f, prm, "III"),
        "lattice_shift": jnq_norm_packing(f, prm, PackingStrategy("lattice_shift")),
    }
    for name, res in results.items():
        err = _rel(res.value, res.detail.get("search_value", res.value))
        out.report("certificate", err <= ctx.identity_rel, ctx.function, f"n={ctx.n},{name}",
                   {"value": res.value, "rel_error": err, "cubes": len(res.certificate)},
                   _thr("rel_error", ctx.identity_rel, "TRIVIAL", "certificate re-scoring"),
                   inputs_digest(f, name))
    return out


# envelope families ----------------------------------------------------------------------

ZERO_REL = 1e-12


def _zero_floor(*arrays: np.ndarray) -> float:
    """Values below this are rounding residue of a functional that vanishes exactly."""
    return ZERO_REL * max((float(np.max(a)) for a in arrays if a.size), default=0.0)


def _nonzero_ratio(num: np.ndarray, den: np.ndarray, floor: float = 0.0) -> np.ndarray:
    mask = (den > floor) & (num > floor)
    return num[mask] / den[mask]


def check_functional_envelopes(ctx: CheckContext) -> CheckOutput:
    """Psi/Phi, Phi_dyadic/Psi and Psi almost-increasing ratios over dyadic cubes."""
    out = CheckOutput()
    f = ctx.grid("small")
    x = f.values
    for prm in ENVELOPE_PARAMS:
        label = f"n={ctx.n},{prm.label()}"
        q = prm.q
        psi_l = [np.maximum(a, 0.0) ** (1 / q) for a in psi_pyramid(x, prm)]
        phi_l = [np.maximum(a, 0.0) ** (1 / q) for a in phi_grid_pyramid(x, prm)]
        dya_l = [np.maximum(a, 0.0) ** (1 / q) for a in phi_dyadic_pyramid(x, prm)]
        dig = inputs_digest(f, prm)
        psi_all = np.concatenate([a.ravel() for a in psi_l[:-1]])
        phi_all = np.concatenate([a.ravel() for a in phi_l[:-1]])
        dya_all = np.concatenate([a.ravel() for a in dya_l[:-1]])
        # the three functionals vanish together (exactly when f is constant on the cube)
        fl = _zero_floor(psi_all, phi_all, dya_all)
        zero_mismatch = int(np.sum((psi_all > fl) != (phi_all > fl)) + np.sum((psi_all > fl) != (dya_all > fl)))
        out.report("functional_zero_sets", zero_mismatch == 0, ctx.function, label,
                   {"mismatches": zero_mismatch},
                   _thr("mismatches", 0, "TRIVIAL", "vanishing exactly on constants"), dig)
        out.measure("psi_phi", ctx.function, label, _nonzero_ratio(psi_all, phi_all, fl), dig)
        out.measure("psidyasim", ctx.function, label, _nonzero_ratio(dya_all, psi_all, fl), dig)
        # almost increasing: Psi(Q1)/Psi(Q2) for dyadic Q1 strictly inside Q2
        ratios = []
        for j2 in range(len(psi_l) - 1):
            for j1 in range(j2 + 1, len(psi_l)):
                k = 1 << (j1 - j2)
                big = np.kron(psi_l[j2], np.ones((k,) * ctx.n))
                ratios.append(_nonzero_ratio(psi_l[j1], big, fl))
        out.measure("psi_almost_increasing", ctx.function, label, np.concatenate(ratios), dig)
    return out


def check_norm_envelopes(ctx: CheckContext) -> CheckOutput:
    """Integral/packing and intersection ratios; exact sub-supremum cases asserted."""
    out = CheckOutput()
    f = ctx.grid("small")
    n = ctx.n
    for prm in ENVELOPE_PARAMS + (Params(2.0, 2.0, -n / 2.0),):
        label = f"n={n},{prm.label()}"
        dig = inputs_digest(f, prm)
        jnq = jnq_norm_packing(f, prm).value
        integral = jnq_norm_integral(f, prm).value
        dyad = jnq_dyadic_norm(f, prm).value
        con = jn_con_norm(f, prm.p, prm.q).value
        if jnq > 0:
            out.measure("integral_packing", ctx.function, label, [integral / jnq], dig)
            out.measure("intersection", ctx.function, label, [jnq / (dyad + con)], dig)
        exact = {}
        if abs(prm.alpha + n / prm.q) < 1e-15:
            exact["jn_con_le_jnq"] = con <= jnq * (1 + ctx.slack)
            exact["jnq_le_2jn_con"] = jnq <= 2 * con * (1 + ctx.slack)
        if n == 1 and prm.beta(n) >= 0:
            exact["dyadic_le_jnq"] = dyad <= jnq * (1 + ctx.slack)
        if exact:
            out.report("intersection_exact", all(exact.values()), ctx.function, label,
                       {"jnq": jnq, "dyadic": dyad, "jn_con": con,
                        **{k: float(v) for k, v in exact.items()}},
                       _thr("relative_slack", ctx.slack, "PAPER", "sub-supremum and sandwich"), dig)
    return out


def check_extension(ctx: CheckContext) -> CheckOutput:
    """Cylinder lift: ``||F|| / (l0^{1/p} ||f||)`` for roots of edge 1, 2, 4."""
    out = CheckOutput()
    for prm in (Params(2.0, 2.0, -0.25), Params(2.0, 1.0, 0.25)):
        for mode in ("equal_edge", "free_edge"):
            ratios, replicated = [], True
            for k in (0, 1, 2):
                f = make_function(ctx.function, 1, 3 - k, root_level=-k, seed=ctx.seed)
                F = extend_cylinder(f)
                replicated &= all(np.array_equal(F.values[:, t], f.values) for t in range(F.side))
                nf = jnq_norm_on_cube(f, f.root_cube, prm, mode).value
                nF = jnq_norm_on_cube(F, F.root_cube, prm, mode).value
                if nf > 0:
                    ratios.append(nF / (f.root.edge ** (1.0 / prm.p) * nf))
                elif nF != 0:
                    replicated = False
            label = f"{prm.label()},{mode}"
            out.report("extension_replication", replicated, ctx.function, label,
                       {"replicated": replicated},
                       _thr("replication", 1, "TRIVIAL", "F(x,t)=f(x)"))
            out.measure("extension", ctx.function, label, ratios)
    return out


def check_modulus(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    f = ctx.grid("small")
    for p in (1.0, 2.0):
        ratios = []
        for k in (2, 4, 8):
            mp = moduli(f, k * f.h, p)
            if mp.omega_star > 0:
                ratios.append(mp.omega / mp.omega_star)
        out.measure("modulus", ctx.function, f"n={ctx.n},p={p:g}", ratios, inputs_digest(f, p))
    return out


def check_campanato_lipschitz(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    sampler = CATALOG[ctx.function]
    f = ctx.grid("small")
    lip = lipschitz_norm(sampler, f.root, f.level, ctx.seed)
    for q in (1.0, 2.0):
        camp = campanato_norm(f, q)
        if lip > 0:
            out.measure("campanato_lipschitz", ctx.function, f"n={ctx.n},q={q:g}", [camp / lip],
                        inputs_digest(f, q))
    return out


def check_sobolev(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    sampler = CATALOG[ctx.function]
    f = ctx.grid("small")
    for p in (2.0, 4.0):
        gamma = 1.0 / (1.0 / p + 1.0 / ctx.n)
        sob = sobolev_w1_seminorm(sampler, gamma, f.root, f.level)
        for alpha in (0.25, 0.5):
            prm = Params(p, 1.0, alpha)
            if sob > 0:
                out.measure("sobolev", ctx.function, f"n={ctx.n},{prm.label()}",
                            [jnq_norm_packing(f, prm).value / sob], inputs_digest(f, prm))
    return out


# constant-1 inequalities ----------------------------------------------------------------

GAGLIARDO_PARAMS = {1: (Params(4.0, 2.0, 0.25), Params(2.0, 1.0, 0.5)), 2: (Params(3.0, 2.0, 1.0 / 3.0),)}


def check_gagliardo_embedding(ctx: CheckContext) -> CheckOutput:
    """``||f||_{JNQ^{alpha0}} <= ||f||_{W^{alpha0, q}}`` with constant one."""
    out = CheckOutput()
    f = ctx.grid("small")
    for base in GAGLIARDO_PARAMS[ctx.n]:
        a0 = base.alpha0(ctx.n)
        prm = base.with_alpha(a0)
        jnq = jnq_norm_packing(f, prm).value
        w = gagliardo_seminorm(f, a0, prm.q)
        ok = jnq <= w * (1 + ctx.slack)
        out.report("gagliardo_embedding", ok, ctx.function, f"n={ctx.n},{prm.label()}",
                   {"jnq": jnq, "gagliardo": w, "alpha0": a0},
                   _thr("relative_slack", ctx.slack, "PAPER", "fractional Sobolev embedding"),
                   inputs_digest(f, prm))
    return out


def check_dyadic_monotone(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    f = ctx.grid("desk" if ctx.n == 1 else "medium")
    alphas = (-1.0, -0.5, -0.25, 0.0, 0.25)
    for p, q in ((2.0, 2.0), (2.0, 1.0)):
        vals = [jnq_dyadic_norm(f, Params(p, q, a)).value for a in alphas]
        worst = max((vals[i] - vals[i + 1]) / vals[i + 1] if vals[i + 1] > 0 else (1.0 if vals[i] > 0 else 0.0)
                    for i in range(len(vals) - 1))
        out.report("dyadic_alpha_monotone", worst <= ctx.slack, ctx.function,
                   f"n={ctx.n},p={p:g},q={q:g}",
                   {**{f"alpha={a:g}": v for a, v in zip(alphas, vals)}, "max_rel_decrease": max(worst, 0.0)},
                   _thr("relative_slack", ctx.slack, "PAPER", "monotone in alpha"), inputs_digest(f, p, q))
    return out


def check_left_composition(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    f = ctx.grid("medium" if ctx.n == 1 else "small")
    prm = Params(2.0, 2.0, -0.25)
    for name, (L, lip) in LIPSCHITZ_MAPS.items():
        rep = left_compose_norm_check(L, lip, f, prm, ctx.function, slack=ctx.slack)
        out.reports.append(_with_params(rep, f"n={ctx.n},{prm.label()},L={name}"))
        if name in ("identity", "double"):
            base = jnq_norm_packing(f, prm).value
            comp = rep.measured["composed"]
            err = _rel(comp, lip * base)
            out.report("left_composition_equality", err <= ctx.identity_rel, ctx.function,
                       f"n={ctx.n},{prm.label()},L={name}", {"rel_error": err},
                       _thr("rel_error", ctx.identity_rel, "TRIVIAL", "homogeneity"))
    g = g_map(f.values)
    resid = float(np.max(np.abs(g - 1.0 / g - f.values)))
    finite = all(math.isfinite(rep.measured["composed"]) for rep in out.reports if rep.check == "left_composition")
    out.report("g_decomposition", resid <= 1e-12 and finite, ctx.function, f"n={ctx.n}",
               {"max_residual": resid}, _thr("abs_error", 1e-12, "PAPER", "g - 1/g = identity"))
    return out


def check_variant_order(ctx: CheckContext) -> CheckOutput:
    """Norm I >= norm II, and free-edge antichains >= both."""
    out = CheckOutput()
    f = ctx.grid("desk" if ctx.n == 1 else "medium")
    for prm in (Params(2.0, 2.0, -0.25), Params(2.0, 1.0, 0.25)):
        one = jnq_norm_variants(f, prm, "I").value
        two = jnq_norm_variants(f, prm, "II").value
        three = jnq_norm_variants(f, prm, "III").value
        ok = one >= two * (1 - ctx.slack) and three >= two * (1 - ctx.slack)
        out.report("variant_order", ok, ctx.function, f"n={ctx.n},{prm.label()}",
                   {"I": one, "II": two, "III": three},
                   _thr("relative_slack", ctx.slack, "PAPER", "supremum over a superset"),
                   inputs_digest(f, prm))
    return out


def check_phi_almost_increasing(ctx: CheckContext) -> CheckOutput:
    """Grid cubes ``Q1 inside Q2`` with ``|Q1| <= 2^-n |Q2|``: ``Phi^q(Q1) <= C^{q alpha/n - 1} Phi^q(Q2)``."""
    out = CheckOutput()
    f = ctx.grid("small")
    x, n = f.values, ctx.n
    for prm in ENVELOPE_PARAMS:
        q, e = prm.q, prm.q * prm.alpha / n - 1.0
        worst_sharp, worst_loose, pairs = 0.0, 0.0, 0
        win = {m: np.maximum(phi_power_windows(x, m, prm), 0.0) for m in range(1, f.side + 1)}
        b = f.side
        while b >= 2:
            for start in itertools.product(range(0, f.side, b), repeat=n):
                big = win[b][start]
                for m in range(1, b // 2 + 1):
                    sub = win[m][tuple(slice(s, s + b - m + 1) for s in start)]
                    c1 = (m / b) ** n
                    pairs += sub.size
                    worst_sharp = max(worst_sharp, float(sub.max()) - c1**e * big)
                    worst_loose = max(worst_loose, float(sub.max()) ** (1 / q) - c1**e * big ** (1 / q))
            b //= 2
        scale = max(float(np.max(win[f.side])), 1e-300)
        ok = worst_sharp <= ctx.slack * scale and worst_loose <= ctx.slack * scale ** (1 / q)
        out.report("phi_almost_increasing", ok, ctx.function, f"n={n},{prm.label()}",
                   {"pairs": pairs, "max_excess_power": max(worst_sharp, 0.0),
                    "max_excess": max(worst_loose, 0.0)},
                   _thr("relative_slack", ctx.slack, "PAPER", "explicit almost-increasing constant"),
                   inputs_digest(f, prm))
    return out


def check_phi_alpha_monotone(ctx: CheckContext) -> CheckOutput:
    """Per cube ``Phi_{alpha1} <= n^{(alpha2-alpha1)/2} Phi_{alpha2}``."""
    out = CheckOutput()
    f = ctx.grid("small")
    x, n = f.values, ctx.n
    alphas = (-0.75, -0.25, 0.0, 0.25, 0.45)
    for q in (1.0, 2.0):
        worst = 0.0
        for m in (2, 4, f.side // 2, f.side):
            vals = [np.maximum(phi_power_windows(x, m, Params(2.0, q, a)), 0.0) ** (1 / q) for a in alphas]
            for i in range(len(alphas) - 1):
                bound = n ** ((alphas[i + 1] - alphas[i]) / 2) * vals[i + 1]
                den = max(float(bound.max()), 1e-300)
                worst = max(worst, float(np.max(vals[i] - bound)) / den)
        out.report("phi_alpha_monotone", worst <= ctx.slack, ctx.function, f"n={n},q={q:g}",
                   {"max_rel_excess": max(worst, 0.0)},
                   _thr("relative_slack", ctx.slack, "PAPER", "per-cube comparison in alpha"),
                   inputs_digest(f, q))
    return out


# limit and probes -------------------------------------------------------------------------

def check_limit(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    f = make_function(ctx.function, ctx.n, ctx.levels["small"] + 1, root_level=1, seed=ctx.seed)
    seq = limit_p_sequence(f, -0.25, LIMIT_PS, q=2.0)
    vals, gaps = seq.values, seq.gaps
    label = f"n={ctx.n},q=2,alpha=-0.25"
    if seq.p_inf_value == 0.0:
        ok = all(v == 0.0 for v in vals)
        out.report("limit_sequence", ok, ctx.function, label, {"p_inf": 0.0},
                   _thr("zeros", 0, "TRIVIAL", "constant function"))
        return out
    increasing = all(a < b for a, b in zip(vals, vals[1:]))
    shrinking = all(a > b > 0 for a, b in zip(gaps, gaps[1:]))
    lower = all(lb <= v * (1 + ctx.slack) for lb, v in zip(seq.lower_bounds, vals))
    measured = {f"p={p:g}": v for p, v in zip(seq.ps, vals)}
    measured.update(p_inf=seq.p_inf_value, final_gap=gaps[-1])
    out.report("limit_sequence", increasing and shrinking and lower, ctx.function, label, measured,
               _thr("monotone", 1, "PAPER", "convergence to the single-cube supremum"), inputs_digest(f))
    out.measure("limit_gap", ctx.function, label, [gaps[-1] / seq.p_inf_value])
    return out


def onecube_chain(x: np.ndarray, doublings: int, params: Params) -> list[float]:
    """``|Q_j|^{1/p} Phi(Q_j)`` along doublings of the support cube (support edge 1)."""
    n = x.ndim
    chain = phi_zero_padded_chain(x, doublings, params)
    return [(2.0**j) ** (n / params.p) * max(v, 0.0) ** (1.0 / params.q) for j, v in enumerate(chain)]


def probe_fires(chain: list[float]) -> bool:
    """Strict growth over the last three doublings."""
    tail = chain[-4:]
    return all(a < b for a, b in zip(tail, tail[1:]))


def check_triviality_probe(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    x = ctx.grid("small").values
    nonconstant = CATALOG[ctx.function].participates(NONCONSTANT)
    for prm, expect in PROBE_PARAMS:
        chain = onecube_chain(x, PROBE_DOUBLINGS[ctx.n], prm)
        fired = probe_fires(chain)
        ok = fired == expect if nonconstant else True
        out.report("triviality_probe", ok, ctx.function, f"n={ctx.n},{prm.label()}",
                   {"fired": fired, "expected": expect if nonconstant else False,
                    "alpha0": prm.alpha0(ctx.n), **{f"T{j}": v for j, v in enumerate(chain)}},
                   _thr("strict_growth_steps", 3, "PAPER", "one-cube bound"), inputs_digest(x.tobytes(), prm))
    return out


def shell_statistic(f: GridFunction, s: float, p: float) -> float:
    """``sum_{j=0}^{J} 2^{-j s p} omega*(f, 2^j) / (c_n 2 ||f||_p^p)`` over shells beyond the root.

    ``c_n`` is the measure of the unit shell ``B+_2 \\ B+_1`` over ``t^n``, so every
    term tends to one once the shifts leave the support.
    """
    orthant_ball = 1.0 if f.n == 1 else math.pi / 4.0
    c_n = (2**f.n - 1) * orthant_ball
    full = c_n * 2.0 * float(np.sum(np.abs(f.values) ** p)) * f.h**f.n
    if full == 0.0:
        return 0.0
    total = 0.0
    for j in range(SHELL_MAX_DOUBLINGS + 1):
        total += 2.0 ** (-j * s * p) * moduli(f, 2.0**j, p).omega_star / full
    return total


def check_shell_probe(ctx: CheckContext) -> CheckOutput:
    """Shell sums for ``s <= 0`` exceed the frozen bound set by the converging ``s > 0`` control."""
    out = CheckOutput()
    f = ctx.grid("small")
    for p in (1.0, 2.0):
        stats = {s: shell_statistic(f, s, p) for s in SHELL_S}
        label = f"n={ctx.n},p={p:g}"
        dig = inputs_digest(f, p)
        # the zero extension of any nonzero catalog entry (constants included) is nonconstant
        out.measure("shell_control", ctx.function, label, [stats[SHELL_S[0]]], dig)
        out.bounds.append(BoundCheck("shell_probe", ctx.function, label,
                                     tuple((f"s={s:g}", stats[s]) for s in SHELL_S[1:]),
                                     "shell_control", dig))
    return out


# classification -----------------------------------------------------------------------------

def default_classification_grid(n: int) -> list[Params]:
    grid = []
    for q in (1.0, 2.0):
        for p in (1.0, 2.0, 4.0):
            alphas = sorted({-n / q, -0.5, 0.0, 0.25, 0.6, 1.0})
            grid.extend(Params(p, q, a) for a in alphas)
    return grid


def classify_cell(f: GridFunction, prm: Params, doublings: int | None = None) -> dict:
    """Regime of one ``(p, q, alpha)`` cell and whether its numerical signature was observed."""
    row = _classify(f, prm, doublings)
    if row["observed"] is not None:
        row["observed"] = bool(row["observed"])
    return row


def _classify(f: GridFunction, prm: Params, doublings: int | None) -> dict:
    n = f.n
    a0 = prm.alpha0(n)
    doublings = PROBE_DOUBLINGS[n] if doublings is None else doublings
    row = {"p": prm.p, "q": prm.q, "alpha": prm.alpha, "alpha0": a0}
    constant = not np.any(f.values != f.values.flat[0])
    if prm.alpha >= 1.0 / prm.q:
        try:
            _check_touching(2, prm, n)
            phi_power_block(f.values, prm)
            observed = constant
        except DivergenceError:
            observed = True
        return {**row, "regime": "divergent", "signature": "touching weight infinite", "observed": observed}
    if abs(prm.alpha + n / prm.q) < 1e-15:
        con = jn_con_norm(f, prm.p, prm.q).value
        jnq = jnq_norm_packing(f, prm).value
        ok = con <= jnq * (1 + CONSTANT_SLACK) and jnq <= 2 * con * (1 + CONSTANT_SLACK)
        return {**row, "regime": "collapse to JN_con" if prm.p >= prm.q else "trivial (p<q)",
                "signature": "JN_con sandwich in [1,2]", "observed": ok}
    if prm.p < prm.q or prm.alpha > a0:
        if a0 >= 1.0 and prm.alpha >= 0 and prm.p >= prm.q:
            return {**row, "regime": "unresolved in paper", "signature": "none", "observed": None}
        fired = probe_fires(onecube_chain(f.values, doublings, prm))
        regime = "trivial (p<q)" if prm.p < prm.q else "trivial (alpha>alpha0)"
        return {**row, "regime": regime, "signature": "one-cube probe fires",
                "observed": fired if not constant else None}
    if prm.alpha < 0:
        if prm.p > prm.q:
            fired = probe_fires(onecube_chain(f.values, doublings, prm))
            return {**row, "regime": "collapse to JN_con", "signature": "one-cube probe silent",
                    "observed": (not fired) if not constant else None}
        return {**row, "regime": "collapse to JN_con", "signature": "none (p=q)", "observed": None}
    if a0 >= 1.0:
        return {**row, "regime": "unresolved in paper", "signature": "none", "observed": None}
    # 0 <= alpha <= alpha0 < 1: embedding with the per-cube alpha factor
    jnq = jnq_norm_packing(f, prm).value
    try:
        w = gagliardo_seminorm(f, a0, prm.q) if a0 > 0 else math.inf
    except DivergenceError:
        return {**row, "regime": "embedding", "signature": "seminorm infinite", "observed": True}
    factor = n ** ((a0 - prm.alpha) / 2.0)
    ok = jnq <= factor * w * (1 + CONSTANT_SLACK)
    return {**row, "regime": "embedding", "signature": f"JNQ <= {factor:.6g} * W", "observed": ok}


def check_classification(ctx: CheckContext) -> CheckOutput:
    out = CheckOutput()
    f = ctx.grid("small")
    rows = [classify_cell(f, prm) for prm in default_classification_grid(ctx.n)]
    failed = [r for r in rows if r["observed"] is False]
    regimes = sorted({r["regime"] for r in rows})
    out.report("classification", not failed, ctx.function, f"n={ctx.n}",
               {"cells": len(rows), "failed_cells": len(failed),
                "unobserved_cells": sum(r["observed"] is None for r in rows)},
               _thr("failed_cells", 0, "PAPER", "complete classification"), inputs_digest(f),
               "; ".join(f"{r['p']:g},{r['q']:g},{r['alpha']:g}:{r['regime']}" for r in failed)
               or "regimes: " + ", ".join(regimes))
    return out


# registry: name -> (callable, per-function?, required catalog group, dimensions)
CHECKS = {
    "osc_identity": (check_osc_identity, True, None, (1, 2)),
    "scaling_identity": (check_scaling_identity, True, None, (1, 2)),
    "partition_lemma": (check_partition_lemma, False, None, (1, 2)),
    "delta_bound": (check_delta_cells, False, None, (1, 2)),
    "optimizer_dp": (check_optimizer_dp, "both", None, (1,)),
    "optimizer_tree": (check_optimizer_tree, "both", None, (1, 2)),
    "optimizer_ilp": (check_optimizer_ilp, "both", None, (2,)),
    "certificate": (check_certificate, True, None, (1, 2)),
    "functional_envelopes": (check_functional_envelopes, True, None, (1, 2)),
    "norm_envelopes": (check_norm_envelopes, True, None, (1, 2)),
    "extension": (check_extension, True, None, (1,)),
    "modulus": (check_modulus, True, None, (1, 2)),
    "campanato_lipschitz": (check_campanato_lipschitz, True, SMOOTH, (1, 2)),
    "sobolev": (check_sobolev, True, SMOOTH, (2,)),
    "gagliardo_embedding": (check_gagliardo_embedding, True, None, (1, 2)),
    "dyadic_alpha_monotone": (check_dyadic_monotone, True, None, (1, 2)),
    "left_composition": (check_left_composition, True, None, (1, 2)),
    "variant_order": (check_variant_order, True, None, (1, 2)),
    "phi_almost_increasing": (check_phi_almost_increasing, True, None, (1, 2)),
    "phi_alpha_monotone": (check_phi_alpha_monotone, True, None, (1, 2)),
    "limit": (check_limit, True, None, (1, 2)),
    "triviality_probe": (check_triviality_probe, True, None, (1, 2)),
    "shell_probe": (check_shell_probe, True, None, (1, 2)),
    "classification": (check_classification, True, None, (1, 2)),
}

# envelope families and the checks that produce them
FAMILIES = {
    "psi_phi": "functional_envelopes",
    "psidyasim": "functional_envelopes",
    "psi_almost_increasing": "functional_envelopes",
    "integral_packing": "norm_envelopes",
    "intersection": "norm_envelopes",
    "extension": "extension",
    "modulus": "modulus",
    "campanato_lipschitz": "campanato_lipschitz",
    "sobolev": "sobolev",
    "limit_gap": "limit",
    "shell_control": "shell_probe",
}
