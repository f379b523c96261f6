"""Scenario generators and the convergence-experiment pipeline.

Four families of scenes:

  annulus      mod-2 boundary chains of m alternating annular sectors of
               {1 <= |z| <= 1 + 1/m^2}; flat norms shrink with the sector
               area while the varifolds approach the unit circle's.
  rectangle    mod-2 boundary of [m, m+1] x [0, 1/m]; mass tends to 2 but
               both the flat norm and the varifold distance to zero vanish
               (the support escapes every compact test support).  The scene
               is meshed near the origin and only the measures/varifolds are
               translated out to absolute coordinates.
  circle       real-coefficient inscribed 2^m-gons against a high-resolution
               reference polygon, on a shared sliver triangulation, so flat
               distances, masses and varifold distances all converge.
  square       dyadic refinements of one square boundary chain; a fixed
               point where every distance vanishes identically.

run_experiment computes, per m: mass, flat norm (value, optimality flag and
explicit-filling witness), the measure-weak distance and the varifold-weak
distances to the reference and to zero, and emits a deterministic CSV plus
an optional plot.  Each scenario carries its own acceptance checks.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import Chain, ChainMeasure, measure_weak_distance
from .coeff import cyclic, reals
from .flatnorm import flat_norm
from .simplicial import Complex
from .varifold import (TestDictionary, Varifold, default_dictionary,
                       var_of_chain, var_weak_distance)

Z2 = cyclic(2)


@dataclass
class Instance:
    """One scene of a scenario: the chain under study plus its references."""

    name: str
    m: int
    chain: Chain
    fill: Chain | None = None              # explicit filling, a flat-norm witness
    reference_chain: Chain | None = None   # None means the zero chain
    offset: np.ndarray | None = None       # translation to absolute coordinates
    atom_depth_offset: int = 0             # extra refinement for atom placement
    expected: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# scene builders
# ---------------------------------------------------------------------------

def unit_circle_chain(n_segments: int, radius: float = 1.0, group=None) -> Chain:
    """A closed polygon inscribed in the circle, with unit coefficients
    oriented counterclockwise (for signed groups)."""
    group = group or reals()
    ang = 2 * np.pi * np.arange(n_segments) / n_segments
    verts = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    edges = [(t, (t + 1) % n_segments) for t in range(n_segments)]
    k = Complex(verts, edges)
    pairs = []
    for a, b in edges:
        pairs.append(((a, b), 1 if a < b else (1 if group.kind == "Zmod" else -1)))
    return Chain.from_cells(k, 1, group, pairs)


def scenario_annulus(m: int, arc_resolution: int = 64) -> Instance:
    """Mod-2 boundary of m alternating sectors of the thin annulus
    {1 <= |z| <= 1 + 1/m^2}, sector k spanning angles [(2k-1) pi/m, 2k pi/m].

    arc_resolution is the number of polygon segments per radian of arc.
    """
    if m < 2:
        raise ValueError("annulus scenario needs m >= 2")
    r0, r1 = 1.0, 1.0 + 1.0 / m ** 2
    seg_per_sector = max(2, math.ceil(arc_resolution * math.pi / m))
    n_ang = 2 * m * seg_per_sector
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    inner = r0 * np.column_stack([np.cos(ang), np.sin(ang)])
    outer = r1 * np.column_stack([np.cos(ang), np.sin(ang)])
    verts = np.vstack([inner, outer])

    tris = []
    occupied = []
    for t in range(n_ang):
        t1 = (t + 1) % n_ang
        a, b = t, t1
        tris.append((a, b, n_ang + a))
        tris.append((b, n_ang + a, n_ang + b))
        # sector j covers angles [j pi/m, (j+1) pi/m]; odd j are the occupied
        # sectors [(2k-1) pi/m, 2k pi/m]
        occupied.append((t // seg_per_sector) % 2 == 1)
    k = Complex(verts, tris)

    fill_pairs = []
    for t in range(n_ang):
        if occupied[t]:
            fill_pairs.append((tris[2 * t], 1))
            fill_pairs.append((tris[2 * t + 1], 1))
    fill = Chain.from_cells(k, 2, Z2, fill_pairs)
    s_m = fill.boundary()

    area = (math.pi / 2.0) * (2.0 / m ** 2 + 1.0 / m ** 4)
    return Instance(
        name="annulus", m=m, chain=s_m, fill=fill,
        reference_chain=unit_circle_chain(n_ang, group=Z2),
        expected={
            "mass_formula": math.pi + math.pi * (1 + 1 / m ** 2) + 2.0 / m,
            "area": area,
        })


def scenario_escaping_rectangle(m: int) -> Instance:
    """Mod-2 boundary of Q_m = [m, m+1] x [0, 1/m], meshed as the translated
    strip [0, 1] x [0, 1/m] with offset (m, 0) applied to measures only."""
    if m < 1:
        raise ValueError("rectangle scenario needs m >= 1")
    h = 1.0 / m
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, h], [1.0, h]])
    tris = [(0, 1, 2), (1, 2, 3)]
    k = Complex(verts, tris)
    fill = Chain.from_cells(k, 2, Z2, [(t, 1) for t in tris])
    s_m = fill.boundary()
    return Instance(
        name="rectangle", m=m, chain=s_m, fill=fill,
        reference_chain=None, offset=np.array([float(m), 0.0]),
        expected={"mass_formula": 2.0 + 2.0 / m, "area": h})


def scenario_polygonal_limit(shape: str, m: int, ref_level: int = 11) -> Instance:
    """Inscribed 2^m-gon (circle) or dyadically refined square boundary, with
    a 2^ref_level reference, both carried by one complex so their flat
    distance is computable."""
    if shape == "square":
        return _square_instance(m, min(ref_level, 9))
    if shape == "circle":
        return _circle_instance(m, ref_level)
    raise ValueError("shape must be 'circle' or 'square'")


def _circle_instance(m: int, ref_level: int) -> Instance:
    if not 3 <= m <= ref_level:
        raise ValueError("circle scenario needs 3 <= m <= ref_level")
    group = reals()
    n_fine = 2 ** ref_level
    step = 2 ** (ref_level - m)
    ang = 2 * np.pi * np.arange(n_fine) / n_fine
    verts = np.column_stack([np.cos(ang), np.sin(ang)])

    fine_edges = [(t, (t + 1) % n_fine) for t in range(n_fine)]
    coarse_edges = [(c * step, ((c + 1) * step) % n_fine) for c in range(2 ** m)]
    tris = []
    if step > 1:
        for c in range(2 ** m):
            a = c * step
            for t in range(a + 1, a + step):
                tris.append((a, t % n_fine, (t + 1) % n_fine))
    k = Complex(verts, fine_edges + coarse_edges + tris)

    def oriented(edges):
        return [((a, b), 1 if a < b else -1) for a, b in edges]

    p_m = Chain.from_cells(k, 1, group, oriented(coarse_edges))
    s_ref = Chain.from_cells(k, 1, group, oriented(fine_edges))

    fill = None
    if tris:
        pairs = []
        for tri in tris:
            pts = verts[list(tri)]
            u, v = pts[1] - pts[0], pts[2] - pts[0]
            det = u[0] * v[1] - u[1] * v[0]
            pairs.append((tri, 1 if det > 0 else -1))
        fill = Chain.from_cells(k, 2, group, pairs)

    chord_mass = 2 ** m * 2.0 * math.sin(math.pi / 2 ** m)
    return Instance(
        name="circle", m=m, chain=p_m, fill=fill, reference_chain=s_ref,
        expected={"mass_formula": chord_mass, "limit_mass": 2 * math.pi})


_SQUARE_BASE: dict[int, Chain] = {}


def _square_instance(m: int, ref_level: int) -> Instance:
    # one shared base complex, so refinements are memoized across rows
    if 0 not in _SQUARE_BASE:
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        base = Complex(verts, [(0, 1), (1, 2), (2, 3), (0, 3)])
        _SQUARE_BASE[0] = Chain.from_cells(
            base, 1, reals(),
            [((0, 1), 1), ((1, 2), 1), ((2, 3), 1), ((0, 3), -1)])
    loop = _SQUARE_BASE[0]
    base = loop.complex
    p_m = loop.push_to(base.refine(m))
    s_ref = loop.push_to(base.refine(ref_level))
    return Instance(
        name="square", m=m, chain=p_m, reference_chain=s_ref,
        atom_depth_offset=ref_level - m,
        expected={"mass_formula": 4.0})


_BUILDERS = {
    "annulus": lambda m, cfg: scenario_annulus(m, cfg.get("arc_resolution", 64)),
    "rectangle": lambda m, cfg: scenario_escaping_rectangle(m),
    "circle": lambda m, cfg: scenario_polygonal_limit(
        "circle", m, cfg.get("ref_level", 11)),
    "square": lambda m, cfg: scenario_polygonal_limit(
        "square", m, cfg.get("ref_level", 9)),
}

DEFAULT_MS = {
    "annulus": range(2, 11),
    "rectangle": range(1, 13),
    "circle": range(3, 10),
    "square": range(1, 8),
}


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

@dataclass
class Row:
    m: int
    mass: float
    fn: float
    fn_optimal: bool
    fn_witness: float | None
    mu_dist: float | None
    var_dist: float | None
    var_dist_zero: float | None


@dataclass
class ConvergenceReport:
    scenario: str
    params: dict
    rows: list

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.params):
            buf.write(f"# {key}={self.params[key]}\n")
        cols = ["m", "mass", "fn", "fn_optimal", "fn_witness",
                "mu_dist", "var_dist", "var_dist_zero"]
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            vals = []
            for c in cols:
                v = getattr(r, c)
                if v is None:
                    vals.append("")
                elif isinstance(v, bool):
                    vals.append("1" if v else "0")
                elif isinstance(v, (int, np.integer)):
                    vals.append(str(int(v)))
                else:
                    vals.append(format(float(v), ".12g"))
            buf.write(",".join(vals) + "\n")
        return buf.getvalue()

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    def plot(self, path):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ms = self.column("m")
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name, label in [("fn", "flat norm"), ("mu_dist", "measure distance"),
                            ("var_dist", "varifold distance"),
                            ("var_dist_zero", "varifold distance to 0")]:
            ys = self.column(name)
            if any(y is not None for y in ys):
                xs = [m for m, y in zip(ms, ys) if y is not None]
                ys = [y for y in ys if y is not None]
                ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel("m")
        ax.set_yscale("symlog", linthresh=1e-12)
        ax.set_title(f"{self.scenario} convergence")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def spearman(values) -> float:
    """Spearman rank correlation of a sequence against its index."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        return 0.0

    def ranks(xs):
        order = np.argsort(xs, kind="stable")
        r = np.empty(n)
        i = 0
        while i < n:
            j = i
            while j + 1 < n and xs[order[j + 1]] == xs[order[i]]:
                j += 1
            r[order[i:j + 1]] = (i + j) / 2.0
            i = j + 1
        return r

    rx = ranks(np.arange(n, dtype=float))
    ry = ranks(values)
    sx, sy = rx.std(), ry.std()
    if sx == 0 or sy == 0:
        return 0.0
    return float(((rx - rx.mean()) * (ry - ry.mean())).mean() / (sx * sy))


def run_experiment(scenario: str, ms=None, atom_depth: int = 2,
                   dictionary: TestDictionary | None = None,
                   **config) -> ConvergenceReport:
    """Full pipeline for one scenario over a range of m values."""
    if scenario not in _BUILDERS:
        raise ValueError(f"unknown scenario {scenario!r}; "
                         f"choose from {sorted(_BUILDERS)}")
    ms = list(ms if ms is not None else DEFAULT_MS[scenario])
    dictionary = dictionary or default_dictionary()

    reference_cache: dict = {}
    rows = []
    for m in ms:
        inst = _BUILDERS[scenario](m, config)
        rows.append(_run_row(inst, atom_depth, dictionary, reference_cache))
    params = {"scenario": scenario, "ms": ",".join(str(m) for m in ms),
              "atom_depth": atom_depth, "dictionary": dictionary.name}
    params.update({k: v for k, v in sorted(config.items())})
    return ConvergenceReport(scenario, params, rows)


def _run_row(inst: Instance, atom_depth: int, dictionary: TestDictionary,
             reference_cache: dict) -> Row:
    chain = inst.chain
    n = chain.complex.n
    mass = chain.mass()

    if inst.reference_chain is not None and inst.name != "square" \
            and chain.complex is inst.reference_chain.complex:
        diff_target = inst.reference_chain
        value, decomp, rep = flat_norm(chain - diff_target)
    elif inst.reference_chain is not None and inst.name == "square":
        aligned = chain.push_to(inst.reference_chain.complex)
        value, decomp, rep = flat_norm(aligned - inst.reference_chain)
    else:
        value, decomp, rep = flat_norm(chain)
    witness = None
    if inst.fill is not None:
        witness = inst.fill.mass()
    elif not rep.optimal:
        witness = decomp.value

    mu = chain.induced_measure(atom_depth + inst.atom_depth_offset)
    var = var_of_chain(chain, atom_depth + inst.atom_depth_offset)
    if inst.offset is not None:
        mu = mu.translate(inst.offset)
        var = var.translate(inst.offset)

    if inst.reference_chain is None:
        mu_ref = ChainMeasure.empty(n)
        var_ref = None
    else:
        # keyed by the complex object itself: keeps it alive, so no id reuse
        key = inst.reference_chain.complex
        if key not in reference_cache:
            reference_cache[key] = (
                inst.reference_chain.induced_measure(atom_depth),
                var_of_chain(inst.reference_chain, atom_depth))
        mu_ref, var_ref = reference_cache[key]

    mu_dist = measure_weak_distance(mu, mu_ref, dictionary)
    d = chain.dim
    zero_var = Varifold.empty(n, d)
    var_dist = var_weak_distance(var, var_ref, dictionary) \
        if var_ref is not None else None
    var_dist_zero = var_weak_distance(var, zero_var, dictionary) \
        if inst.name in ("annulus", "rectangle") else None
    if var_dist is None:
        var_dist = var_dist_zero

    return Row(m=inst.m, mass=mass, fn=value, fn_optimal=rep.optimal,
               fn_witness=witness, mu_dist=mu_dist, var_dist=var_dist,
               var_dist_zero=var_dist_zero)


# ---------------------------------------------------------------------------
# scenario acceptance checks (also drive the CLI exit code)
# ---------------------------------------------------------------------------

def scenario_checks(report: ConvergenceReport) -> list:
    """Per-scenario assertions as (name, ok, detail) triples."""
    rows = report.rows
    ms = report.column("m")
    out = []

    def add(name, ok, detail=""):
        out.append((name, bool(ok), detail))

    if report.scenario == "annulus":
        for r in rows:
            bound = (math.pi / 2) * (2 / r.m ** 2 + 1 / r.m ** 4) * 1.05
            add(f"fn(m={r.m}) within sector-area bound",
                r.fn <= bound and (r.fn_witness or 0.0) <= bound,
                f"fn={r.fn:.4g} witness={r.fn_witness:.4g} bound={bound:.4g}")
        tail = [r for r in rows if 4 <= r.m <= 10]
        rho = spearman([r.var_dist for r in tail])
        add("varifold distance to circle decreasing (m=4..10)", rho <= -0.9,
            f"spearman={rho:.3f}")
        add("final varifold distance <= 0.05", rows[-1].var_dist <= 0.05,
            f"final={rows[-1].var_dist:.4g}")
        rho_fn = spearman([r.fn for r in rows])
        add("flat norm decreasing to 0", rho_fn <= -0.9 and rows[-1].fn <= 0.05,
            f"spearman={rho_fn:.3f} final={rows[-1].fn:.4g}")
        base = next((r.var_dist_zero for r in rows if r.m == 4),
                    rows[0].var_dist_zero)
        add("varifold distance to zero stays bounded below",
            all(r.var_dist_zero >= 0.5 * base for r in rows if r.m >= 4),
            f"reference={base:.4g}")
    elif report.scenario == "rectangle":
        for r in rows:
            add(f"mass(m={r.m}) = 2 + 2/m exactly",
                abs(r.mass - (2 + 2 / r.m)) <= 1e-9, f"mass={r.mass!r}")
            add(f"fn(m={r.m}) <= area 1/m",
                r.fn <= 1 / r.m + 1e-9, f"fn={r.fn:.4g}")
        escaped = [r for r in rows if r.m >= report.params.get("escape_m", 4)]
        add("varifold distance to zero vanishes once support escapes",
            all(r.var_dist_zero <= 1e-12 for r in escaped),
            f"max={max((r.var_dist_zero for r in escaped), default=0.0):.3g}")
    elif report.scenario == "circle":
        fns = [r.fn for r in rows]
        add("flat distance decreasing", all(b <= a + 1e-12 for a, b in
                                            zip(fns, fns[1:])), f"fns={fns}")
        add("final flat distance <= 1e-2", fns[-1] <= 1e-2, f"final={fns[-1]:.3g}")
        last = rows[-1]
        add("mass -> 2 pi within 1e-3 at final m",
            abs(last.mass - 2 * math.pi) <= 1e-3, f"mass={last.mass:.6f}")
        add("final varifold distance <= 2e-2 and decreasing",
            last.var_dist <= 2e-2 and spearman([r.var_dist for r in rows]) <= -0.9,
            f"final={last.var_dist:.4g}")
        add("final measure distance <= 2e-2 and decreasing",
            last.mu_dist <= 2e-2 and spearman([r.mu_dist for r in rows]) <= -0.9,
            f"final={last.mu_dist:.4g}")
    elif report.scenario == "square":
        add("all distances vanish identically",
            all(r.fn == 0.0 and r.mu_dist == 0.0 and r.var_dist == 0.0
                for r in rows),
            "")
    return out
