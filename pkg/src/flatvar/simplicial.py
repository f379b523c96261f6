"""Embedded simplicial complexes with midpoint (standard) subdivision.

A complex stores its cells per dimension as sorted vertex tuples, closed
under faces, together with signed boundary matrices, per-cell volumes
(Gram determinant), diameters and barycenters.  Vertices carry a fixed
total order (their index); subdivision appends the edge midpoints after
the existing vertices, ordered lexicographically by endpoint pair, so
iterated subdivisions are reproducible.

The subdivision of a d-cell replaces it by the 2^d simplices spanned by
increasing chains of intervals [a, b] over its local vertex positions,
with the midpoint of (v_a, v_b) standing for [a, b].  Child orientations
relative to the parent are precomputed per chain pattern, which lets
chains of any coefficient group be carried through subdivision exactly.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import lru_cache

import numpy as np
from scipy import sparse

VOLUME_REL_TOL = 1e-12   # below vol / diam^d, a cell counts as degenerate
GEOM_TOL = 1e-9          # absolute tolerance for containment tests


# ---------------------------------------------------------------------------
# free functions on raw point arrays (used directly by tests as oracles too)
# ---------------------------------------------------------------------------

def simplex_volume(points) -> float:
    """d-volume of the simplex spanned by the rows of points: sqrt(det(E^T E)) / d!.

    A single point has H^0 volume 1 (counting measure).
    """
    pts = np.asarray(points, dtype=float)
    d = len(pts) - 1
    if d == 0:
        return 1.0
    e = pts[1:] - pts[0]
    gram = e @ e.T
    det = float(np.linalg.det(gram)) if d > 1 else float(gram[0, 0])
    return math.sqrt(max(det, 0.0)) / math.factorial(d)


def simplex_diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    best = 0.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            best = max(best, float(np.linalg.norm(pts[i] - pts[j])))
    return best


def fullness(points) -> float:
    """Shape quality vol / diam^d of a simplex of dimension >= 1."""
    pts = np.asarray(points, dtype=float)
    d = len(pts) - 1
    if d < 1:
        raise ValueError("fullness is defined for simplices of dimension >= 1")
    diam = simplex_diameter(pts)
    vol = simplex_volume(pts)
    if diam <= 0.0 or vol <= VOLUME_REL_TOL * diam ** d:
        raise ValueError("degenerate simplex has no fullness")
    return vol / diam ** d


# ---------------------------------------------------------------------------
# subdivision patterns (combinatorial, cached per dimension)
# ---------------------------------------------------------------------------

def _perm_sign(order) -> int:
    sign = 1
    order = list(order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


def _interval_chains(d):
    """Maximal increasing chains of intervals [a, b] in {0..d}, each grown
    one endpoint at a time from a diagonal [i, i] up to [0, d]."""
    chains = []

    def grow(chain):
        a, b = chain[-1]
        if a == 0 and b == d:
            chains.append(tuple(chain))
            return
        if a > 0:
            grow(chain + [(a - 1, b)])
        if b < d:
            grow(chain + [(a, b + 1)])

    for i in range(d + 1):
        grow([(i, i)])
    return chains


@lru_cache(maxsize=None)
def _subdivision_pattern(d):
    """For each child of a subdivided d-cell: the chain of intervals naming
    its vertices, and the orientation of the child (listed in sorted vertex
    order) relative to the parent's vertex order."""
    out = []
    for chain in _interval_chains(d):
        m = np.zeros((d + 1, d + 1))
        for row, (a, b) in enumerate(chain):
            m[row, a] += 0.5
            m[row, b] += 0.5
        det = float(np.linalg.det(m))
        # sorted vertex order: the single original vertex first (midpoints are
        # appended after all originals), then midpoints by interval length;
        # chain intervals have distinct lengths, so this is the chain order
        order = sorted(range(d + 1),
                       key=lambda r: (chain[r][0] != chain[r][1],
                                      chain[r][1] - chain[r][0], chain[r]))
        sign = (1 if det > 0 else -1) * _perm_sign(order)
        out.append((chain, sign))
    return tuple(out)


# ---------------------------------------------------------------------------
# the complex
# ---------------------------------------------------------------------------

class Simplex:
    """Lightweight view onto one cell of a complex."""

    __slots__ = ("complex", "dim", "index")

    def __init__(self, complex_, dim, index):
        self.complex = complex_
        self.dim = dim
        self.index = index

    @property
    def vertices(self):
        return self.complex.cells[self.dim][self.index]

    @property
    def points(self):
        return self.complex.vertices[list(self.vertices)]

    @property
    def volume(self) -> float:
        return float(self.complex.volumes(self.dim)[self.index])

    @property
    def diameter(self) -> float:
        return float(self.complex.diameters(self.dim)[self.index])

    @property
    def fullness(self) -> float:
        return fullness(self.points)

    def __repr__(self):
        return f"Simplex(dim={self.dim}, vertices={self.vertices})"


class Complex:
    """A finite simplicial complex embedded in R^n, closed under faces."""

    def __init__(self, vertices, cells, *, check=True, parent=None, level=0):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2:
            self.vertices = self.vertices.reshape(len(self.vertices), -1)
        self.n = self.vertices.shape[1]
        self.parent = parent
        self.parent_child_map = None   # filled in by subdivided()
        self.level = level
        self._subdivided = None

        by_dim: dict[int, set] = {0: {(i,) for i in range(len(self.vertices))}}
        for cell in cells:
            t = tuple(sorted(int(v) for v in cell))
            if len(set(t)) != len(t):
                raise ValueError(f"repeated vertex in cell {cell}")
            by_dim.setdefault(len(t) - 1, set()).add(t)
        # close under faces, cascading down through every dimension
        d = max(by_dim)
        while d >= 1:
            for cell in by_dim.get(d, ()):
                for face in itertools.combinations(cell, d):
                    by_dim.setdefault(d - 1, set()).add(face)
            d -= 1

        self.cells: dict[int, list] = {d: sorted(by_dim[d]) for d in sorted(by_dim)}
        self.index: dict[int, dict] = {
            d: {c: i for i, c in enumerate(cs)} for d, cs in self.cells.items()
        }

        self._volumes: dict[int, np.ndarray] = {}
        self._diameters: dict[int, np.ndarray] = {}
        self._barycenters: dict[int, np.ndarray] = {}
        self._bnd: dict[int, sparse.csc_matrix] = {}

        if check:
            for d in self.cells:
                if d == 0:
                    continue
                vols = self.volumes(d)
                diams = self.diameters(d)
                bad = np.nonzero(vols <= VOLUME_REL_TOL * diams ** d)[0]
                if len(bad):
                    raise ValueError(
                        f"degenerate {d}-simplex {self.cells[d][bad[0]]} "
                        f"(volume {vols[bad[0]]:.3e})")

    # -- bookkeeping --------------------------------------------------------

    @property
    def top_dim(self) -> int:
        return max(self.cells)

    def n_cells(self, d) -> int:
        return len(self.cells.get(d, ()))

    def simplex(self, d, i) -> Simplex:
        return Simplex(self, d, i)

    def points_of(self, d, i):
        return self.vertices[list(self.cells[d][i])]

    def _cell_arrays(self, d):
        return np.array(self.cells[d], dtype=int)

    def volumes(self, d) -> np.ndarray:
        if d not in self._volumes:
            if self.n_cells(d) == 0:
                self._volumes[d] = np.zeros(0)
            elif d == 0:
                self._volumes[d] = np.ones(self.n_cells(0))
            else:
                pts = self.vertices[self._cell_arrays(d)]
                e = pts[:, 1:, :] - pts[:, :1, :]
                gram = np.einsum("mia,mja->mij", e, e)
                det = gram[:, 0, 0] if d == 1 else np.linalg.det(gram)
                self._volumes[d] = np.sqrt(np.clip(det, 0.0, None)) / math.factorial(d)
        return self._volumes[d]

    def diameters(self, d) -> np.ndarray:
        if d not in self._diameters:
            if self.n_cells(d) == 0 or d == 0:
                self._diameters[d] = np.zeros(self.n_cells(d))
            else:
                pts = self.vertices[self._cell_arrays(d)]
                best = np.zeros(len(pts))
                for i in range(d + 1):
                    for j in range(i + 1, d + 1):
                        dist = np.linalg.norm(pts[:, i, :] - pts[:, j, :], axis=1)
                        best = np.maximum(best, dist)
                self._diameters[d] = best
        return self._diameters[d]

    def barycenters(self, d) -> np.ndarray:
        if d not in self._barycenters:
            if self.n_cells(d) == 0:
                self._barycenters[d] = np.zeros((0, self.n))
            else:
                self._barycenters[d] = self.vertices[self._cell_arrays(d)].mean(axis=1)
        return self._barycenters[d]

    def boundary_matrix(self, d) -> sparse.csc_matrix:
        """Signed incidence of d-cells in (d-1)-faces, shape (n_{d-1}, n_d)."""
        if d not in self._bnd:
            if d < 1 or self.n_cells(d) == 0:
                self._bnd[d] = sparse.csc_matrix((self.n_cells(d - 1), self.n_cells(d)))
            else:
                rows, cols, vals = [], [], []
                faces = self.index[d - 1]
                for ci, cell in enumerate(self.cells[d]):
                    for drop in range(d + 1):
                        face = cell[:drop] + cell[drop + 1:]
                        rows.append(faces[face])
                        cols.append(ci)
                        vals.append(1.0 if drop % 2 == 0 else -1.0)
                self._bnd[d] = sparse.csc_matrix(
                    (vals, (rows, cols)),
                    shape=(self.n_cells(d - 1), self.n_cells(d)))
        return self._bnd[d]

    def unsigned_boundary_matrix(self, d) -> sparse.csc_matrix:
        """Mod-2 incidence of d-cells in (d-1)-faces (entries 0/1)."""
        return abs(self.boundary_matrix(d))

    # -- mesh / fullness -----------------------------------------------------

    def mesh(self) -> float:
        if len(self.vertices) == 0:
            raise ValueError("mesh of an empty complex")
        out = 0.0
        for d in self.cells:
            if d >= 1 and self.n_cells(d):
                out = max(out, float(self.diameters(d).max()))
        return out

    def min_fullness(self) -> float:
        out = math.inf
        for d in self.cells:
            if d < 1 or self.n_cells(d) == 0:
                continue
            vols = self.volumes(d)
            diams = self.diameters(d)
            out = min(out, float((vols / diams ** d).min()))
        if out is math.inf:
            raise ValueError("complex has no cells of dimension >= 1")
        return out

    # -- subdivision ----------------------------------------------------------

    def subdivided(self) -> "Complex":
        """One standard subdivision.  Memoized so repeated calls return the
        identical complex and lineages of refinements stay comparable."""
        if self._subdivided is not None:
            return self._subdivided
        nv = len(self.vertices)
        # midpoints are appended after the original vertices, ordered by the
        # length of their endpoint interval first: this makes each child
        # cell's index-sorted vertex order coincide with its chain order, so
        # iterating the subdivision keeps a positive fullness floor
        edges = sorted(self.cells.get(1, []),
                       key=lambda e: (e[1] - e[0], e[0], e[1]))
        mid_of = {e: nv + k for k, e in enumerate(edges)}
        if edges:
            mids = np.array([(self.vertices[i] + self.vertices[j]) * 0.5
                             for (i, j) in edges])
            verts = np.vstack([self.vertices, mids])
        else:
            verts = self.vertices.copy()

        raw = []   # (dim, parent index, sorted child tuple, orientation)
        for d in sorted(self.cells):
            if d == 0:
                continue
            for ci, cell in enumerate(self.cells[d]):
                for chain, sign in _subdivision_pattern(d):
                    ids = tuple(sorted(
                        cell[a] if a == b else mid_of[(cell[a], cell[b])]
                        for (a, b) in chain))
                    raw.append((d, ci, ids, sign))

        sub = Complex(verts, [ids for (_, _, ids, _) in raw],
                      check=False, parent=self, level=self.level + 1)
        child_map = {0: [[(i, 1)] for i in range(nv)]}
        for d in sorted(self.cells):
            if d >= 1:
                child_map[d] = [[] for _ in self.cells[d]]
        for d, ci, ids, sign in raw:
            child_map[d][ci].append((sub.index[d][ids], sign))
        sub.parent_child_map = child_map
        self._subdivided = sub
        return sub

    def refine(self, levels: int) -> "Complex":
        out = self
        for _ in range(levels):
            out = out.subdivided()
        return out

    def ancestors(self):
        out, k = [], self.parent
        while k is not None:
            out.append(k)
            k = k.parent
        return out

    def fullness_floor(self, m_max: int) -> float:
        """Minimum fullness over all cells of the first m_max subdivisions."""
        if m_max < 1:
            raise ValueError("m_max must be >= 1")
        floor = math.inf
        k = self
        for _ in range(m_max):
            k = k.subdivided()
            floor = min(floor, k.min_fullness())
        return floor

    # -- subcomplexes -----------------------------------------------------------

    def restricted_to(self, d, indices):
        """Subcomplex spanned by the given d-cells (closed under faces), with
        vertices renumbered in increasing order of their old index.  Returns
        (subcomplex, map from old d-cell index to new)."""
        indices = sorted(indices)
        cells = [self.cells[d][i] for i in indices]
        used = sorted({v for c in cells for v in c})
        vmap = {v: t for t, v in enumerate(used)}
        sub = Complex(self.vertices[used],
                      [tuple(vmap[v] for v in c) for c in cells], check=False)
        cmap = {i: sub.index[d][tuple(vmap[v] for v in self.cells[d][i])]
                for i in indices}
        return sub, cmap

    # -- geometry helpers --------------------------------------------------------

    def barycentric_coords(self, d, i, x):
        """Barycentric coordinates of x in cell (d, i) plus the distance from
        x to the cell's affine span."""
        pts = self.points_of(d, i)
        x = np.asarray(x, dtype=float)
        if d == 0:
            return np.ones(1), float(np.linalg.norm(x - pts[0]))
        e = (pts[1:] - pts[0]).T
        lam_tail, *_ = np.linalg.lstsq(e, x - pts[0], rcond=None)
        resid = float(np.linalg.norm(e @ lam_tail - (x - pts[0])))
        lam = np.concatenate([[1.0 - lam_tail.sum()], lam_tail])
        return lam, resid

    def cell_contains(self, d, i, x, tol=GEOM_TOL) -> bool:
        lam, resid = self.barycentric_coords(d, i, x)
        return resid <= tol and bool((lam >= -tol).all())

    # -- serialization ------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "vertices": [[float(x) for x in v] for v in self.vertices],
            "simplices": {str(d): [list(c) for c in cs]
                          for d, cs in self.cells.items()},
        }

    @staticmethod
    def from_json(payload) -> "Complex":
        if isinstance(payload, str):
            payload = json.loads(payload)
        cells = []
        for d, cs in payload.get("simplices", {}).items():
            for c in cs:
                cells.append(tuple(c) if isinstance(c, (list, tuple)) else (c,))
        verts = np.asarray(payload["vertices"], dtype=float)
        if verts.size == 0:
            verts = verts.reshape(0, int(payload.get("n", 0)))
        return Complex(verts, cells)

    def __repr__(self):
        sizes = ", ".join(f"{len(cs)}x{d}d" for d, cs in self.cells.items())
        return f"Complex(n={self.n}, level={self.level}, cells=[{sizes}])"


def check_disjoint_interiors(k: Complex, tol=GEOM_TOL) -> bool:
    """Pairwise barycenter test on top-dimensional cells: no cell's barycenter
    may lie in another cell.  Quadratic; meant for desk-scale validation."""
    d = k.top_dim
    if d == 0:
        return True
    bary = k.barycenters(d)
    for i in range(k.n_cells(d)):
        for j in range(k.n_cells(d)):
            if i != j and k.cell_contains(d, j, bary[i], tol):
                return False
    return True
