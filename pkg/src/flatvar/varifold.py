"""Varifolds: weighted atoms pairing positions with unoriented d-planes.

A plane is an orthonormal basis; the Grassmannian metric is the operator
norm of the difference of orthogonal projectors.  A chain's varifold has
one atom per (refined) supported cell: barycenter, span of the cell, and
weight |g| * volume, so its weight measure coincides with the chain's
induced measure atom for atom.  Weak convergence is tested against a fixed
finite dictionary of compactly supported functions: radial bumps in x times
polynomial functions of projector entries.  Blow-ups, pushforwards, the
projection mass ratio diagnostic and a finite-radius density estimate round
out the toolkit.
"""

from __future__ import annotations

import itertools
import json
import math

import numpy as np

from .chain import Chain, ChainMeasure, IntervalRegion
from .lipmap import LipMap, pushforward_chain

_PIVOT_TOL = 1e-10


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


class Plane:
    """A d-dimensional linear subspace of R^n given by an orthonormal basis."""

    __slots__ = ("basis", "_projector")

    def __init__(self, basis):
        self.basis = np.atleast_2d(np.asarray(basis, dtype=float))
        self._projector = None

    @classmethod
    def from_vectors(cls, vectors) -> "Plane":
        """Orthonormalize spanning vectors by modified Gram-Schmidt; raises if
        they are linearly dependent."""
        vs = np.atleast_2d(np.asarray(vectors, dtype=float))
        rows = []
        for v in vs:
            u = v.copy()
            for b in rows:
                u -= (u @ b) * b
            nrm = float(np.linalg.norm(u))
            if nrm <= _PIVOT_TOL:
                raise ValueError("vectors do not span a plane of full rank")
            rows.append(u / nrm)
        return cls(np.array(rows))

    @classmethod
    def line(cls, theta: float) -> "Plane":
        return cls(np.array([[math.cos(theta), math.sin(theta)]]))

    @classmethod
    def zero(cls, n: int) -> "Plane":
        return cls(np.zeros((0, n)))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def n(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        if self._projector is None:
            self._projector = self.basis.T @ self.basis
        return self._projector

    def __repr__(self):
        return f"Plane(dim={self.dim}, n={self.n})"


def grassmann_dist(t1: Plane, t2: Plane) -> float:
    """Operator-norm distance of orthogonal projectors; a metric on the
    Grassmannian with values in [0, 1]."""
    if t1.n != t2.n or t1.dim != t2.dim:
        raise ValueError("planes live on different Grassmannians")
    diff = t1.projector - t2.projector
    if diff.size == 0:
        return 0.0
    return float(np.linalg.norm(diff, 2))


class Varifold:
    """A finite weighted atomic measure on R^n x G(n, d)."""

    def __init__(self, points, planes, weights):
        self.points = np.asarray(points, dtype=float).reshape(-1, 1) \
            if np.asarray(points).ndim == 1 else np.asarray(points, dtype=float)
        self.planes = list(planes)
        self.weights = np.asarray(weights, dtype=float)
        if len(self.planes) != len(self.points) or len(self.weights) != len(self.points):
            raise ValueError("atoms need matching points, planes and weights")
        if len(self.weights) and (self.weights <= 0).any():
            raise ValueError("atom weights must be positive")
        self._projs = None

    @classmethod
    def empty(cls, n: int, d: int) -> "Varifold":
        return cls(np.zeros((0, n)), [], np.zeros(0))

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def projectors(self) -> np.ndarray:
        if self._projs is None:
            if self.n_atoms == 0:
                self._projs = np.zeros((0, 0, 0))
            else:
                self._projs = np.stack([p.projector for p in self.planes])
        return self._projs

    def integrate(self, phi) -> float:
        if self.n_atoms == 0:
            return 0.0
        if hasattr(phi, "eval_atoms"):
            vals = phi.eval_atoms(self.points, self.projectors())
        else:
            vals = np.array([phi(x, t) for x, t in zip(self.points, self.planes)])
        return float(self.weights @ vals)

    def translate(self, offset) -> "Varifold":
        return Varifold(self.points + np.asarray(offset, dtype=float),
                        self.planes, self.weights.copy())

    def weight_measure(self) -> ChainMeasure:
        return ChainMeasure(self.points.copy(), self.weights.copy())

    def to_json(self) -> dict:
        return {"atoms": [{"x": [float(c) for c in x],
                           "basis": [[float(c) for c in row] for row in t.basis],
                           "w": float(w)}
                          for x, t, w in zip(self.points, self.planes, self.weights)]}

    @staticmethod
    def from_json(payload) -> "Varifold":
        if isinstance(payload, str):
            payload = json.loads(payload)
        atoms = payload.get("atoms", [])
        if not atoms:
            return Varifold.empty(0, 0)
        pts = np.array([a["x"] for a in atoms], dtype=float)
        planes = [Plane(np.array(a["basis"], dtype=float)) for a in atoms]
        ws = np.array([a["w"] for a in atoms], dtype=float)
        return Varifold(pts, planes, ws)

    def __repr__(self):
        return f"Varifold({self.n_atoms} atoms, weight={self.total_weight:.6g})"


def var_of_chain(p: Chain, levels: int = 0) -> Varifold:
    """One atom per supported cell of the level-times refined support:
    (barycenter, span of the cell, |g| * volume).  Total weight = mass."""
    if p.is_zero():
        return Varifold.empty(p.complex.n, p.dim)
    ch = p.refined_support(levels)
    k = ch.complex
    d = ch.dim
    idx = ch.support_indices()
    pts = k.barycenters(d)[idx]
    vols = k.volumes(d)[idx]
    ws = np.array([ch.group.norm(ch.coeffs[i]) for i in idx]) * vols
    planes = []
    for i in idx:
        cell_pts = k.points_of(d, i)
        if d == 0:
            planes.append(Plane.zero(k.n))
        else:
            planes.append(Plane.from_vectors(cell_pts[1:] - cell_pts[0]))
    return Varifold(pts, planes, ws)


def var_pushforward(f: LipMap, v: Varifold) -> Varifold:
    """Atom (x, T, w) -> (f(x), Df(x) T, w * apJ); atoms whose plane collapses
    under Df are dropped (their Jacobian factor is zero)."""
    pts, planes, ws = [], [], []
    for x, t, w in zip(v.points, v.planes, v.weights):
        df = f.differential(x)
        m = df @ t.basis.T
        sv = np.linalg.svd(m, compute_uv=False) if t.dim else np.zeros(0)
        jac = float(np.prod(sv)) if t.dim else 1.0
        if t.dim and (jac <= 1e-12 or sv.min() <= _PIVOT_TOL):
            continue
        pts.append(f(x))
        planes.append(Plane.from_vectors(m.T) if t.dim else Plane.zero(t.n))
        ws.append(w * jac)
    if not pts:
        return Varifold.empty(v.points.shape[1] if v.n_atoms else 0,
                              v.planes[0].dim if v.n_atoms else 0)
    return Varifold(np.array(pts), planes, np.array(ws))


def var_tangent(v: Varifold, a, radii) -> list:
    """Blow-ups (x -> (x - a) / r, weights / r^d) restricted to the unit ball,
    one varifold per radius."""
    a = np.asarray(a, dtype=float)
    radii = list(radii)
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    out = []
    d = v.planes[0].dim if v.n_atoms else 0
    n = v.points.shape[1] if v.n_atoms else 0
    for r in radii:
        pts = (v.points - a) / r
        keep = np.linalg.norm(pts, axis=1) <= 1.0 if len(pts) else np.zeros(0, bool)
        if not keep.any():
            out.append(Varifold.empty(n, d))
            continue
        out.append(Varifold(pts[keep],
                            [v.planes[i] for i in np.nonzero(keep)[0]],
                            v.weights[keep] / r ** d))
    return out


def var_weak_distance(v: Varifold, w: Varifold, dictionary) -> float:
    """Max over the dictionary of |V(phi) - W(phi)| / (1 + sup|phi|); a
    pseudo-metric for weak convergence relative to the dictionary."""
    funcs = dictionary.functions
    if not funcs:
        raise ValueError("empty test dictionary")
    return max(abs(v.integrate(f) - w.integrate(f)) / (1.0 + f.sup_norm)
               for f in funcs)


# ---------------------------------------------------------------------------
# test dictionary
# ---------------------------------------------------------------------------

class Bump:
    """Radial C^1 bump (1 - (|x-c|/rho)^2)^2 supported in |x-c| < rho."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def eval(self, points) -> np.ndarray:
        t2 = np.sum((points - self.center) ** 2, axis=1) / self.radius ** 2
        out = np.clip(1.0 - t2, 0.0, None)
        return out * out

    @property
    def lip(self) -> float:
        return 8.0 / (3.0 * math.sqrt(3.0) * self.radius)


class TestFunction:
    """phi(x, T) = bump(x) * factor(T), compactly supported in x.

    factor is one of: "one", ("entry", i, j) for a projector entry, or
    ("ref", Plane) for half the squared Frobenius distance to a reference
    plane's projector.
    """

    def __init__(self, bump: Bump, factor="one", name=""):
        self.bump = bump
        self.factor = factor
        self.name = name or self._default_name()
        if factor == "one":
            self.sup_norm = 1.0
        elif factor[0] == "entry":
            self.sup_norm = 1.0
        else:
            self.sup_norm = float(factor[1].dim) if factor[1].dim else 1.0

    def _default_name(self):
        if self.factor == "one":
            return "bump"
        if self.factor[0] == "entry":
            return f"bump*P{self.factor[1]}{self.factor[2]}"
        return "bump*refdist"

    @property
    def x_only_flag(self) -> bool:
        return self.factor == "one"

    def eval_x(self, points) -> np.ndarray:
        if not self.x_only_flag:
            raise ValueError("test function depends on the plane")
        return self.bump.eval(points)

    def _factor_values(self, projectors) -> np.ndarray:
        if self.factor == "one":
            return np.ones(len(projectors))
        if self.factor[0] == "entry":
            _, i, j = self.factor
            return projectors[:, i, j]
        ref = self.factor[1].projector
        diff = projectors - ref
        return 0.5 * np.einsum("aij,aij->a", diff, diff)

    def eval_atoms(self, points, projectors) -> np.ndarray:
        return self.bump.eval(points) * self._factor_values(projectors)

    def __call__(self, x, plane: Plane) -> float:
        pts = np.asarray(x, dtype=float)[None, :]
        return float(self.eval_atoms(pts, plane.projector[None, :, :])[0])


class TestDictionary:
    """A named, finite family of test functions; every convergence report is
    relative to its dictionary."""

    def __init__(self, name: str, functions, support_radius: float):
        self.name = name
        self.functions = list(functions)
        self.support_radius = float(support_radius)

    def x_only(self):
        return [f for f in self.functions if f.x_only_flag]

    def __len__(self):
        return len(self.functions)


def default_dictionary(n: int = 2, d: int = 1, extent: float = 2.0,
                       grid: int = 5, radius: float = 1.0) -> TestDictionary:
    """Radial bumps on a grid x {1, projector entries, squared distance to
    reference planes}.  Supports lie within |x| <= extent * sqrt(n) + radius."""
    if n != 2:
        raise NotImplementedError("default dictionary is built for the plane")
    centers = np.linspace(-extent, extent, grid)
    bumps = [Bump(np.array([cx, cy]), radius)
             for cx in centers for cy in centers]
    factors = ["one"]
    for i in range(n):
        for j in range(i, n):
            factors.append(("entry", i, j))
    if d == 1:
        refs = [Plane.line(0.0), Plane.line(math.pi / 2), Plane.line(math.pi / 4)]
    else:
        refs = [Plane(np.eye(n)[:d])]
    factors.extend(("ref", r) for r in refs)
    funcs = [TestFunction(b, fac) for b in bumps for fac in factors]
    support = extent * math.sqrt(n) + radius
    name = f"default(n={n},d={d},extent={extent:g},grid={grid},radius={radius:g})"
    return TestDictionary(name, funcs, support)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def inscribed_ball_region(center, r: float, grid: int = 9) -> IntervalRegion:
    """Union of grid cells of [-r, r]^n that fit inside the ball B(center, r);
    the interval-region stand-in for a ball used by restriction.  An odd grid
    keeps the center away from cell boundaries, so chains through the center
    do not sit on the open boxes' edges."""
    center = np.asarray(center, dtype=float)
    n = len(center)
    edges = np.linspace(-r, r, grid + 1)
    boxes = []
    for idx in itertools.product(range(grid), repeat=n):
        lo = np.array([edges[i] for i in idx])
        hi = np.array([edges[i + 1] for i in idx])
        corner = np.maximum(np.abs(lo), np.abs(hi))
        if np.linalg.norm(corner) <= r:
            boxes.append((center + lo, center + hi))
    if not boxes:
        raise ValueError("grid too coarse to inscribe boxes in the ball")
    return IntervalRegion(boxes)


def projection_mass_ratio(s: Chain, x, plane: Plane, radii,
                          depth: int = 6, grid: int = 9) -> list:
    """Per radius: mass of the orthogonal projection (onto the affine plane
    through x) of the chain restricted to the inscribed-box ball, divided by
    the restricted mass.  Ratios near 1 certify tangent-plane quality."""
    x = np.asarray(x, dtype=float)
    proj = plane.projector

    def f(y):
        return x + proj @ (y - x)

    pmap = LipMap(f, jac=lambda y: proj, name="projection", lip_bound=1.0)
    out = []
    for r in radii:
        region = inscribed_ball_region(x, r, grid)
        restricted = s.restrict(region, depth)
        denom = restricted.mass()
        if denom <= 0.0:
            raise ValueError(f"chain has no mass in the ball of radius {r}")
        image = pushforward_chain(pmap, restricted, 0)
        out.append(image.mass() / denom)
    return out


def density_estimate(mu: ChainMeasure, a, radii, d: int) -> list:
    """Finite-radius density estimates mu(B(a, r)) / (omega_d r^d)."""
    a = np.asarray(a, dtype=float)
    omega = unit_ball_volume(d)
    return [mu.ball_mass(a, r) / (omega * r ** d) for r in radii]
