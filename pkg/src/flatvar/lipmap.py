"""Lipschitz maps, simplexwise affine approximation, and chain pushforward.

A map is given analytically (with an optional analytic differential) or is
differentiated by central finite differences.  Pushing a chain forward at
level k subdivides its complex k times, maps the vertices, and carries the
coefficients to the image cells: collapsed images are dropped (their limit
mass is zero), coincident image cells merge with orientation-aware signs,
and overlapping non-identical cells are left alone, so the level-k mass is
an upper-bound convention for the limit.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .chain import Chain
from .simplicial import Complex, simplex_volume, simplex_diameter

_VERTEX_ROUND = 12        # decimals for image-vertex dedup
_IMAGE_DEGENERATE = 1e-10  # vol <= this * diam^d drops an image cell


class LipMap:
    """A Lipschitz map of R^n to itself with a differential."""

    def __init__(self, func, jac=None, name="map", lip_bound=None, fd_step=1e-6):
        self.func = func
        self.jac = jac
        self.name = name
        self.lip_bound = lip_bound
        self.fd_step = fd_step
        self._push_cache = {}

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def differential(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.jac is not None:
            return np.asarray(self.jac(x), dtype=float)
        n = len(x)
        h = self.fd_step
        cols = []
        for a in range(n):
            e = np.zeros(n)
            e[a] = h
            cols.append((self(x + e) - self(x - e)) / (2 * h))
        return np.column_stack(cols)

    def sampled_lip(self, lo, hi, pairs=10000, seed=0) -> float:
        """Largest |f(x)-f(y)| / |x-y| ratio over random pairs in a box."""
        rng = np.random.default_rng(seed)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        xs = rng.uniform(lo, hi, size=(pairs, len(lo)))
        ys = rng.uniform(lo, hi, size=(pairs, len(lo)))
        best = 0.0
        for x, y in zip(xs, ys):
            dxy = float(np.linalg.norm(x - y))
            if dxy < 1e-12:
                continue
            best = max(best, float(np.linalg.norm(self(x) - self(y))) / dxy)
        return best

    def __repr__(self):
        return f"LipMap({self.name})"


# ---------------------------------------------------------------------------
# builtin registry
# ---------------------------------------------------------------------------

def identity_map(n=2) -> LipMap:
    eye = np.eye(n)
    return LipMap(lambda x: x, jac=lambda x: eye, name="identity", lip_bound=1.0)


def scaling_map(c: float, n=2) -> LipMap:
    eye = float(c) * np.eye(n)
    return LipMap(lambda x: float(c) * x, jac=lambda x: eye,
                  name=f"scale:{c}", lip_bound=abs(float(c)))


def rotation_map(theta: float) -> LipMap:
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return LipMap(lambda x: rot @ x, jac=lambda x: rot,
                  name=f"rotation:{theta}", lip_bound=1.0)


def fold_map() -> LipMap:
    def f(x):
        out = x.copy()
        out[0] = abs(out[0])
        return out

    def jac(x):
        return np.diag([1.0 if x[0] >= 0 else -1.0, *([1.0] * (len(x) - 1))])

    return LipMap(f, jac=jac, name="fold", lip_bound=1.0)


def polar_wrap_map(r_max: float = 0.5) -> LipMap:
    """(x, y) -> ((1+y) cos x, (1+y) sin x); wraps the x-axis around the unit
    circle.  The declared bound is valid for |y| <= r_max."""
    def f(p):
        x, y = p
        return np.array([(1 + y) * math.cos(x), (1 + y) * math.sin(x)])

    def jac(p):
        x, y = p
        return np.array([[-(1 + y) * math.sin(x), math.cos(x)],
                         [(1 + y) * math.cos(x), math.sin(x)]])

    return LipMap(f, jac=jac, name=f"polar_wrap:{r_max}", lip_bound=1.0 + r_max)


def quadratic_map(lin=None, quad=None, name="poly", lip_bound=None) -> LipMap:
    """Plane map x -> lin @ x + quadratic terms.

    quad is a (2, 3) array of coefficients (xx, xy, yy) per output component.
    """
    lin = np.eye(2) if lin is None else np.asarray(lin, dtype=float)
    quad = np.zeros((2, 3)) if quad is None else np.asarray(quad, dtype=float)

    def f(p):
        x, y = p
        mono = np.array([x * x, x * y, y * y])
        return lin @ p + quad @ mono

    def jac(p):
        x, y = p
        dmono = np.array([[2 * x, 0.0], [y, x], [0.0, 2 * y]])
        return lin + quad @ dmono

    return LipMap(f, jac=jac, name=name, lip_bound=lip_bound)


def builtin_map(spec: str) -> LipMap:
    """Look up a map by CLI spec: identity | scale:c | rotation:t |
    polar_wrap[:rmax] | fold | poly:kxx=..,kxy=..,kyy=..,lxx=..  (poly keys:
    q0xx q0xy q0yy q1xx q1xy q1yy for the quadratic part)."""
    name, _, arg = spec.partition(":")
    if name == "identity":
        return identity_map()
    if name == "scale":
        return scaling_map(float(arg))
    if name == "rotation":
        return rotation_map(float(arg))
    if name == "fold":
        return fold_map()
    if name == "polar_wrap":
        return polar_wrap_map(float(arg) if arg else 0.5)
    if name == "poly":
        quad = np.zeros((2, 3))
        keys = {"q0xx": (0, 0), "q0xy": (0, 1), "q0yy": (0, 2),
                "q1xx": (1, 0), "q1xy": (1, 1), "q1yy": (1, 2)}
        for item in filter(None, arg.split(",")):
            key, val = item.split("=")
            quad[keys[key.strip()]] = float(val)
        return quadratic_map(quad=quad, name=f"poly:{arg}")
    raise ValueError(f"unknown map spec: {spec!r}")


# ---------------------------------------------------------------------------
# approximate Jacobians and the affine interpolant
# ---------------------------------------------------------------------------

def approx_jacobian(f: LipMap, x, basis) -> float:
    """d-volume scaling factor of Df(x) restricted to the plane spanned by the
    orthonormal rows of basis: the product of singular values of Df(x) B^T."""
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2:
        raise ValueError("basis must be a (d, n) array of orthonormal rows")
    m = f.differential(x) @ basis.T
    sv = np.linalg.svd(m, compute_uv=False)
    return float(np.prod(sv)) if len(sv) else 1.0


def _cell_plane_basis(points) -> np.ndarray:
    """Orthonormal basis (rows) of the plane spanned by a simplex's edges."""
    pts = np.asarray(points, dtype=float)
    e = (pts[1:] - pts[0]).T
    q, r = np.linalg.qr(e)
    return q.T


class AffineApprox:
    """The simplexwise affine interpolant of a map on a subdivided complex."""

    def __init__(self, f: LipMap, base: Complex, levels: int):
        self.map = f
        self.complex = base.refine(levels)
        self.levels = levels
        self.vertex_images = np.array([f(v) for v in self.complex.vertices])
        self._jac = None

    def value_in_cell(self, d, ci, bary) -> np.ndarray:
        cell = self.complex.cells[d][ci]
        return np.asarray(bary, dtype=float) @ self.vertex_images[list(cell)]

    def eval(self, x) -> np.ndarray:
        d = self.complex.top_dim
        for ci in range(self.complex.n_cells(d)):
            lam, resid = self.complex.barycentric_coords(d, ci, x)
            if resid <= 1e-9 and (lam >= -1e-9).all():
                return self.value_in_cell(d, ci, lam)
        raise ValueError("point lies outside the complex")

    def cell_jacobians(self) -> np.ndarray:
        """Per top-cell d-Jacobian of the interpolant: image volume / volume."""
        if self._jac is None:
            k = self.complex
            d = k.top_dim
            vols = k.volumes(d)
            out = np.zeros(k.n_cells(d))
            for ci, cell in enumerate(k.cells[d]):
                img = self.vertex_images[list(cell)]
                out[ci] = simplex_volume(img) / vols[ci]
            self._jac = out
        return self._jac

    def as_lipmap(self) -> LipMap:
        """The interpolant as a map in its own right (vertex-sampled maps);
        differentiated by finite differences, valid away from cell faces."""
        return LipMap(self.eval, name=f"affine[{self.map.name}]",
                      lip_bound=self.map.lip_bound)


def simplexwise_affine(f: LipMap, k: Complex, levels: int = 0) -> AffineApprox:
    if levels < 0:
        raise ValueError("levels must be >= 0")
    return AffineApprox(f, k, levels)


def jacobian_l1_error(f: LipMap, k: Complex, levels: int) -> float:
    """Integral over the complex of |ap J(affine interpolant) - ap J(f)|,
    one barycentric sample per cell of the level-times subdivided complex."""
    approx = simplexwise_affine(f, k, levels)
    sub = approx.complex
    d = sub.top_dim
    vols = sub.volumes(d)
    bary = sub.barycenters(d)
    jbar = approx.cell_jacobians()
    total = 0.0
    for ci in range(sub.n_cells(d)):
        basis = _cell_plane_basis(sub.points_of(d, ci))
        total += vols[ci] * abs(jbar[ci] - approx_jacobian(f, bary[ci], basis))
    return float(total)


# ---------------------------------------------------------------------------
# pushforward
# ---------------------------------------------------------------------------

def _pushforward_complex(f: LipMap, k: Complex, levels: int):
    """Map the whole (subdivided) complex through f.  Returns the subdivided
    source, the image complex, and per-dimension cell maps
    source cell -> (image cell, orientation) or None for collapsed cells.
    Cached per (complex, levels) so chains on one complex share an image."""
    key = (id(k), levels)
    hit = f._push_cache.get(key)
    if hit is not None and hit[0] is k:
        return hit[1], hit[2], hit[3]

    sub = k.refine(levels)
    images = np.array([f(v) for v in sub.vertices]) if len(sub.vertices) \
        else np.zeros((0, k.n))
    keys = [tuple(np.round(x, _VERTEX_ROUND)) for x in images]
    vid_of_key: dict[tuple, int] = {}
    vid_map = np.zeros(len(images), dtype=int)
    img_verts = []
    for t, key_t in enumerate(keys):
        if key_t not in vid_of_key:
            vid_of_key[key_t] = len(img_verts)
            img_verts.append(images[t])
        vid_map[t] = vid_of_key[key_t]
    img_verts = np.array(img_verts) if img_verts else np.zeros((0, k.n))

    cell_info: dict[int, list] = {}
    img_cells = set()
    for d in sorted(sub.cells):
        info = []
        for cell in sub.cells[d]:
            ids = [int(vid_map[v]) for v in cell]
            if len(set(ids)) != len(ids):
                info.append(None)
                continue
            order = np.argsort(ids, kind="stable")
            tup = tuple(ids[t] for t in order)
            sign = _argsort_sign(order)
            if d >= 1:
                pts = img_verts[list(tup)]
                diam = simplex_diameter(pts)
                if diam <= 0 or simplex_volume(pts) <= _IMAGE_DEGENERATE * diam ** d:
                    info.append(None)
                    continue
            img_cells.add(tup)
            info.append((tup, sign))
        cell_info[d] = info

    image = Complex(img_verts, sorted(img_cells), check=False)
    cell_map = {
        d: [None if entry is None else (image.index[d][entry[0]], entry[1])
            for entry in info]
        for d, info in cell_info.items()
    }
    f._push_cache[key] = (k, sub, image, cell_map)
    return sub, image, cell_map


def _argsort_sign(order) -> int:
    sign = 1
    order = list(order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


def pushforward_chain(f: LipMap, p: Chain, levels: int = 0) -> Chain:
    """Level-k pushforward: subdivide k times, map vertices, carry coefficients
    to image cells (signed by the vertex permutation), drop collapsed cells."""
    if levels < 0:
        raise ValueError("levels must be >= 0")
    sub, image, cell_map = _pushforward_complex(f, p.complex, levels)
    ch = p
    while ch.complex is not sub:
        ch = ch.subdivided()
    g = p.group
    acc: dict[int, object] = {}
    dropped = 0
    for i, v in ch.coeffs.items():
        entry = cell_map[p.dim][i]
        if entry is None:
            dropped += 1
            continue
        j, sign = entry
        w = v if sign > 0 else g.neg(v)
        acc[j] = g.add(acc.get(j, g.zero), w)
    out = Chain(image, p.dim, g, acc)
    if out.is_zero() and not p.is_zero() and dropped:
        warnings.warn("pushforward collapsed every supported cell; "
                      "returning the zero chain")
    return out


def rectifiable_approx_error(s: Chain, f: LipMap, p: Chain, levels: int = 0) -> float:
    """mass(S - level-k pushforward of P): the certificate that S is carried
    by a Lipschitz image of a polyhedral chain."""
    if s.dim != p.dim:
        raise ValueError("chains must have the same dimension")
    t = pushforward_chain(f, p, levels)
    return chain_difference_mass(s, t)


def chain_difference_mass(a: Chain, b: Chain, round_decimals: int = 9) -> float:
    """mass(A - B) where cells are matched geometrically: cells whose vertex
    coordinate sets coincide (after rounding) cancel with orientation-aware
    signs; everything else contributes its own mass.  Chains of mismatched
    granularity are subdivided toward a common mesh first, so dyadically
    compatible representations of one chain cancel exactly."""
    if a.dim != b.dim or a.group != b.group:
        raise ValueError("chains must share dimension and group")
    if a.complex is b.complex:
        return (a - b).mass()
    try:
        from .flatnorm import _align
        a2, b2 = _align(a, b)
        return (a2 - b2).mass()
    except ValueError:
        pass

    if a.is_zero() or b.is_zero():
        return a.mass() + b.mass()
    a = a.support_subchain()
    b = b.support_subchain()
    for _ in range(12):
        ma, mb = a.complex.mesh(), b.complex.mesh()
        if ma > mb * (1 + 1e-9):
            a = a.subdivided()
        elif mb > ma * (1 + 1e-9):
            b = b.subdivided()
        else:
            break

    g = a.group

    def keyed(ch: Chain):
        # reorder each cell's vertices by coordinates so matched cells compare
        # vertex-by-vertex, tracking the orientation of the reordering
        out = {}
        vols = ch.complex.volumes(ch.dim)
        for i, v in ch.coeffs.items():
            pts = ch.complex.points_of(ch.dim, i)
            rounded = [tuple(np.round(x, round_decimals)) for x in pts]
            order = sorted(range(len(rounded)), key=lambda t: rounded[t])
            key = tuple(rounded[t] for t in order)
            w = v if _argsort_sign(order) > 0 else g.neg(v)
            if key in out:
                w = g.add(out[key][0], w)
            out[key] = (w, float(vols[i]))
        return out

    da = keyed(a)
    db = keyed(b)
    total = 0.0
    for key in set(da) | set(db):
        wa, va = da.get(key, (g.zero, 0.0))
        wb, vb = db.get(key, (g.zero, 0.0))
        total += g.norm(g.sub(wa, wb)) * (va or vb)
    return float(total)


# ---------------------------------------------------------------------------
# quadrature of ap J over a chain's measure
# ---------------------------------------------------------------------------

_GL5_NODES, _GL5_WEIGHTS = np.polynomial.legendre.leggauss(5)
_GL5_NODES = (_GL5_NODES + 1.0) / 2.0
_GL5_WEIGHTS = _GL5_WEIGHTS / 2.0

# degree-5 symmetric triangle rule (7 points), barycentric coordinates
_TRI7 = [
    (np.array([1 / 3, 1 / 3, 1 / 3]), 0.225),
    (np.array([0.059715871789770, 0.470142064105115, 0.470142064105115]), 0.132394152788506),
    (np.array([0.470142064105115, 0.059715871789770, 0.470142064105115]), 0.132394152788506),
    (np.array([0.470142064105115, 0.470142064105115, 0.059715871789770]), 0.132394152788506),
    (np.array([0.797426985353087, 0.101286507323456, 0.101286507323456]), 0.125939180544827),
    (np.array([0.101286507323456, 0.797426985353087, 0.101286507323456]), 0.125939180544827),
    (np.array([0.101286507323456, 0.101286507323456, 0.797426985353087]), 0.125939180544827),
]


def jacobian_integral(f: LipMap, p: Chain, levels: int = 0) -> float:
    """Quadrature of the d-Jacobian of f against the chain's measure:
    Gauss-Legendre (5 nodes) per segment for d = 1, a degree-5 rule per
    triangle for d = 2, barycenter sampling otherwise."""
    if p.is_zero():
        return 0.0
    ch = p.refined_support(levels)
    k = ch.complex
    d = ch.dim
    vols = k.volumes(d)
    total = 0.0
    for i, v in ch.items():
        pts = k.points_of(d, i)
        basis = _cell_plane_basis(pts) if d >= 1 else np.zeros((0, k.n))
        weight = ch.group.norm(v) * vols[i]
        if d == 1:
            acc = 0.0
            for t, wq in zip(_GL5_NODES, _GL5_WEIGHTS):
                x = pts[0] + t * (pts[1] - pts[0])
                acc += wq * approx_jacobian(f, x, basis)
            total += weight * acc
        elif d == 2:
            acc = 0.0
            for bary, wq in _TRI7:
                x = bary @ pts
                acc += wq * approx_jacobian(f, x, basis)
            total += weight * acc
        else:
            total += weight * approx_jacobian(f, pts.mean(axis=0), basis)
    return float(total)
