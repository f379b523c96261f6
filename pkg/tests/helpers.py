"""Shared scene builders and independent oracles for the test suite."""

import heapq
import itertools
import math

import numpy as np

from flatvar import Chain, Complex, cyclic

Z2 = cyclic(2)


def unit_square_complex():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return Complex(verts, [(0, 1, 2), (1, 2, 3)])


def square_boundary_z2(k=None):
    k = k or unit_square_complex()
    fill = Chain.from_cells(k, 2, Z2, [((0, 1, 2), 1), ((1, 2, 3), 1)])
    return fill.boundary()


def right_triangle_complex():
    return Complex(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), [(0, 1, 2)])


def equilateral_complex(side=1.0):
    verts = side * np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    return Complex(verts, [(0, 1, 2)])


def segment_complex(a, b):
    return Complex(np.array([a, b], dtype=float), [(0, 1)])


def grid_complex(nx, ny, spacing=1.0):
    """Triangulated nx-by-ny grid of unit squares, diagonals all one way."""
    verts = np.array([[i * spacing, j * spacing]
                      for j in range(ny + 1) for i in range(nx + 1)])

    def vid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((a, b, c))
            tris.append((b, c, d))
    return Complex(verts, tris)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def volume_oracle(points):
    """Gram-determinant volume computed the slow way, term by term."""
    pts = np.asarray(points, dtype=float)
    d = len(pts) - 1
    if d == 0:
        return 1.0
    e = pts[1:] - pts[0]
    gram = np.array([[float(np.dot(e[i], e[j])) for j in range(d)]
                     for i in range(d)])
    det = np.linalg.det(gram)
    return math.sqrt(max(det, 0.0)) / math.factorial(d)


def z2_flat_norm_oracle(p):
    """Exact mod-2 flat norm by direct subset enumeration (no Gray code)."""
    k = p.complex
    d = p.dim
    nm = k.n_cells(d + 1)
    best = None
    best_pair = None
    for bits in itertools.product([0, 1], repeat=nm):
        r = Chain(k, d + 1, p.group, {j: b for j, b in enumerate(bits) if b})
        q = p - r.boundary() if r.coeffs else p
        cost = q.mass() + r.mass()
        if best is None or cost < best - 1e-15:
            best = cost
            best_pair = (q, r)
    return best, best_pair


def dijkstra_oracle(k, a, b):
    """Shortest path between vertices a, b over the 1-skeleton, edge weights
    the Euclidean edge lengths."""
    adj = {}
    lens = k.volumes(1)
    for i, (u, v) in enumerate(k.cells[1]):
        adj.setdefault(u, []).append((v, lens[i]))
        adj.setdefault(v, []).append((u, lens[i]))
    dist = {a: 0.0}
    heap = [(0.0, a)]
    while heap:
        du, u = heapq.heappop(heap)
        if u == b:
            return du
        if du > dist.get(u, math.inf):
            continue
        for v, w in adj.get(u, []):
            alt = du + w
            if alt < dist.get(v, math.inf):
                dist[v] = alt
                heapq.heappush(heap, (alt, v))
    return math.inf


def exact_segment_overlap(lo, hi, a=0.0, b=1.0):
    """Length of [a, b] inside the open interval (lo, hi)."""
    return max(0.0, min(b, hi) - max(a, lo))
