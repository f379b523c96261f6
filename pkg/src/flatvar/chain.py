"""Chains over a complex: mass, boundary, restriction and induced measures.

A chain assigns group coefficients to the d-cells of a complex (zeros are
never stored).  Mass is the volume-weighted sum of coefficient norms; cells
of a complex have disjoint interiors, so this sum realizes the infimum over
re-representations.  Restriction to a union of open boxes subdivides the
straddling cells up to a caller-chosen depth and settles leftovers by
barycenter membership; the induced measure places one atom per (optionally
refined) supported cell at its barycenter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .coeff import Group, GroupElement
from .simplicial import Complex, GEOM_TOL


class IntervalRegion:
    """A finite union of open axis-aligned boxes in R^n."""

    def __init__(self, boxes):
        self.boxes = []
        for lo, hi in boxes:
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if lo.shape != hi.shape or not (lo < hi).all():
                raise ValueError("each box needs lo < hi on every axis")
            self.boxes.append((lo, hi))
        if not self.boxes:
            raise ValueError("region needs at least one box")

    @classmethod
    def box(cls, lo, hi) -> "IntervalRegion":
        return cls([(lo, hi)])

    @classmethod
    def from_string(cls, text: str) -> "IntervalRegion":
        """Parse "x0,x1;y0,y1" (one box; axes separated by ';'), with multiple
        boxes separated by '|'."""
        boxes = []
        for part in text.split("|"):
            lo, hi = [], []
            for axis in part.split(";"):
                a, b = axis.split(",")
                lo.append(float(a))
                hi.append(float(b))
            boxes.append((lo, hi))
        return cls(boxes)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return any(bool((lo < x).all() and (x < hi).all()) for lo, hi in self.boxes)

    def classify(self, points, tol=GEOM_TOL) -> str:
        """'in' if the hull of points fits in one box, 'out' if it misses every
        box (coordinate separation), else 'split'."""
        pts = np.asarray(points, dtype=float)
        mins = pts.min(axis=0)
        maxs = pts.max(axis=0)
        for lo, hi in self.boxes:
            if (mins >= lo - tol).all() and (maxs <= hi + tol).all():
                return "in"
        for lo, hi in self.boxes:
            separated = ((maxs <= lo + tol) | (mins >= hi - tol)).any()
            if not separated:
                return "split"
        return "out"


@dataclass
class ChainMeasure:
    """A finite atomic measure on R^n: atom positions and positive weights."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def empty(cls, n) -> "ChainMeasure":
        return cls(np.zeros((0, n)), np.zeros(0))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, phi) -> float:
        if len(self.weights) == 0:
            return 0.0
        if hasattr(phi, "eval_x"):
            vals = phi.eval_x(self.points)
        else:
            vals = np.array([phi(x) for x in self.points])
        return float(self.weights @ vals)

    def translate(self, offset) -> "ChainMeasure":
        return ChainMeasure(self.points + np.asarray(offset, dtype=float),
                            self.weights.copy())

    def ball_mass(self, center, r) -> float:
        if len(self.weights) == 0:
            return 0.0
        d = np.linalg.norm(self.points - np.asarray(center, dtype=float), axis=1)
        return float(self.weights[d <= r].sum())


def measure_weak_distance(mu: ChainMeasure, nu: ChainMeasure, dictionary) -> float:
    """Max over the dictionary's x-only test functions of |mu(phi) - nu(phi)|.

    A pseudo-metric metrizing weak convergence on the span of the dictionary.
    """
    funcs = dictionary.x_only()
    if not funcs:
        raise ValueError("dictionary has no x-only test functions")
    return max(abs(mu.integrate(f) - nu.integrate(f)) for f in funcs)


class Chain:
    """A d-chain over a complex with coefficients in a normed abelian group."""

    __slots__ = ("complex", "dim", "group", "coeffs")

    def __init__(self, complex_: Complex, dim: int, group: Group, coeffs=None):
        if dim < 0:
            raise ValueError("chain dimension must be >= 0")
        n_cells = complex_.n_cells(dim)
        if coeffs and dim not in complex_.cells:
            raise ValueError(f"complex has no cells of dimension {dim}")
        self.complex = complex_
        self.dim = dim
        self.group = group
        out = {}
        for i, v in (coeffs or {}).items():
            if not 0 <= i < n_cells:
                raise ValueError(f"cell index {i} out of range for dim {dim}")
            v = group.canon(v)
            if not group.is_zero(v):
                out[int(i)] = v
        self.coeffs = out

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, complex_, dim, group) -> "Chain":
        return cls(complex_, dim, group, {})

    @classmethod
    def from_cells(cls, complex_, dim, group, pairs) -> "Chain":
        """Build from (cell, value) pairs where cell is a vertex tuple or index."""
        acc = {}
        for cell, v in pairs:
            i = cell if isinstance(cell, int) else complex_.index[dim][tuple(sorted(cell))]
            acc[i] = group.add(acc.get(i, group.zero), group.canon(v))
        return cls(complex_, dim, group, acc)

    # -- arithmetic ----------------------------------------------------------

    def _check_compatible(self, other: "Chain"):
        if self.complex is not other.complex:
            raise ValueError("chains live on different complexes")
        if self.dim != other.dim or self.group != other.group:
            raise ValueError("chains have mismatched dimension or group")

    def __add__(self, other: "Chain") -> "Chain":
        self._check_compatible(other)
        out = dict(self.coeffs)
        for i, v in other.coeffs.items():
            out[i] = self.group.add(out.get(i, self.group.zero), v)
        return Chain(self.complex, self.dim, self.group, out)

    def __neg__(self) -> "Chain":
        return Chain(self.complex, self.dim, self.group,
                     {i: self.group.neg(v) for i, v in self.coeffs.items()})

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __eq__(self, other):
        return (isinstance(other, Chain) and self.complex is other.complex
                and self.dim == other.dim and self.group == other.group
                and self.coeffs == other.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i) -> GroupElement:
        return GroupElement(self.group, self.coeffs.get(i, self.group.zero))

    def items(self):
        return sorted(self.coeffs.items())

    # -- measure-theoretic basics ------------------------------------------------

    def mass(self) -> float:
        vols = self.complex.volumes(self.dim)
        return float(sum(self.group.norm(v) * vols[i] for i, v in self.items()))

    def boundary(self) -> "Chain":
        if self.dim < 1:
            raise ValueError("boundary needs dimension >= 1")
        b = self.complex.boundary_matrix(self.dim)
        acc: dict[int, object] = {}
        g = self.group
        for i, v in self.items():
            start, end = b.indptr[i], b.indptr[i + 1]
            for row, sgn in zip(b.indices[start:end], b.data[start:end]):
                w = v if sgn > 0 else g.neg(v)
                acc[row] = g.add(acc.get(row, g.zero), w)
        return Chain(self.complex, self.dim - 1, g, acc)

    def support_indices(self):
        return sorted(self.coeffs)

    def support_cells(self):
        """The closed cells carrying nonzero coefficients, as vertex tuples."""
        return [self.complex.cells[self.dim][i] for i in self.support_indices()]

    def support_subchain(self) -> "Chain":
        """The same chain re-expressed on the subcomplex its support spans."""
        sub, cmap = self.complex.restricted_to(self.dim, self.support_indices())
        return Chain(sub, self.dim, self.group,
                     {cmap[i]: v for i, v in self.coeffs.items()})

    # -- refinement ----------------------------------------------------------------

    def subdivided(self) -> "Chain":
        sub = self.complex.subdivided()
        cmap = sub.parent_child_map[self.dim]
        g = self.group
        out: dict[int, object] = {}
        for i, v in self.coeffs.items():
            for child, sign in cmap[i]:
                w = v if sign > 0 else g.neg(v)
                out[child] = g.add(out.get(child, g.zero), w)
        return Chain(sub, self.dim, g, out)

    def refined_support(self, k: int) -> "Chain":
        ch = self.support_subchain()
        for _ in range(k):
            ch = ch.subdivided()
        return ch

    def push_to(self, target: Complex) -> "Chain":
        """Re-express this chain on a complex obtained from its own by iterated
        standard subdivision."""
        if target is self.complex:
            return self
        path = [target]
        k = target.parent
        while k is not None and k is not self.complex:
            path.append(k)
            k = k.parent
        if k is None:
            raise ValueError("target complex is not a refinement of the chain's")
        ch = self
        for _ in reversed(path):
            ch = ch.subdivided()
        assert ch.complex is target
        return ch

    # -- restriction and the induced measure ------------------------------------

    def restrict(self, region: IntervalRegion, depth: int = 6) -> "Chain":
        """The portion of the chain inside the region.

        Cells wholly inside one box keep their coefficient, cells missing the
        region are dropped, straddlers are subdivided up to `depth` times and
        then assigned by barycenter membership.  The result lives on the
        subdivided support subcomplex.
        """
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if self.is_zero():
            return self
        ch = self.support_subchain()
        for _ in range(depth):
            k = ch.complex
            split = any(
                region.classify(k.points_of(self.dim, i)) == "split"
                for i in ch.coeffs)
            if not split:
                break
            ch = ch.subdivided()
        k = ch.complex
        bary = k.barycenters(self.dim)
        keep = {}
        for i, v in ch.coeffs.items():
            cls = region.classify(k.points_of(self.dim, i))
            if cls == "in" or (cls == "split" and region.contains(bary[i])):
                keep[i] = v
        return Chain(k, self.dim, self.group, keep)

    def induced_measure(self, depth: int = 0) -> ChainMeasure:
        """Atomic measure with one atom per supported cell of the depth-times
        subdivided support, weighted |g| * volume.  Total weight equals mass."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        if self.is_zero():
            return ChainMeasure.empty(self.complex.n)
        ch = self.refined_support(depth)
        k = ch.complex
        idx = ch.support_indices()
        pts = k.barycenters(ch.dim)[idx]
        vols = k.volumes(ch.dim)[idx]
        w = np.array([ch.group.norm(ch.coeffs[i]) for i in idx]) * vols
        return ChainMeasure(pts, w)

    # -- serialization -------------------------------------------------------------

    def to_json(self) -> dict:
        coeffs = [[i, v] for i, v in self.items()]
        return {"dim": self.dim, "group": self.group.to_json(), "coeffs": coeffs}

    @staticmethod
    def from_json(complex_: Complex, payload) -> "Chain":
        if isinstance(payload, str):
            payload = json.loads(payload)
        group = Group.from_json(payload["group"])
        return Chain(complex_, int(payload["dim"]), group,
                     {int(i): v for i, v in payload.get("coeffs", [])})

    def __repr__(self):
        return (f"Chain(dim={self.dim}, group={self.group}, "
                f"support={len(self.coeffs)} cells)")
