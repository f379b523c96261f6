"""Flat norm and boundary-constrained mass minimization over a complex.

The flat norm of a d-chain P is the cheapest decomposition P = Q + dR with
Q a d-chain and R a (d+1)-chain, cost mass(Q) + mass(R), infimized within
the ambient complex (an upper bound for the norm over all polyhedral
competitors; experiments report results along refinements).

Real coefficients give an exact linear program (positive/negative split).
Mod-2 coefficients are solved exactly by Gray-code enumeration over subsets
of (d+1)-cells up to a size cap; above the cap, a genuine LP relaxation is
used: r in [0,1] per (d+1)-cell and, per d-cell, the lower envelope of the
parity function q = p xor (sum of incident r) written as its parity-polytope
cuts.  The relaxation never exceeds the exact value, and an integral
optimum certifies exactness.  Integer coefficients run through the real LP
plus an integrality check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .chain import Chain

Z2_EXACT_LIMIT = 24       # brute force cap: at most ~16M subsets
_CLEAN_TOL = 1e-11        # LP output below this is treated as zero
_INT_TOL = 1e-7           # integrality certificate tolerance
RESIDUAL_TOL = 1e-9


@dataclass
class SolverReport:
    method: str                       # "linear_program" | "brute_force"
    optimal: bool
    value: float
    residual: float
    enumerated: int | None = None
    iterations: int | None = None
    relaxation_value: float | None = None
    note: str = ""

    def to_json(self):
        return {k: v for k, v in self.__dict__.items() if v is not None and v != ""}


@dataclass
class FlatDecomposition:
    q: Chain
    r: Chain

    @property
    def value(self) -> float:
        return self.q.mass() + self.r.mass()


def _as_vector(chain: Chain) -> np.ndarray:
    out = np.zeros(chain.complex.n_cells(chain.dim))
    for i, v in chain.coeffs.items():
        out[i] = float(v)
    return out


def _residual(p: Chain, q: Chain, r: Chain) -> float:
    """Max coefficient norm of P - Q - dR, in group arithmetic."""
    recon = q + r.boundary() if r.coeffs else q
    diff = p - recon
    if not diff.coeffs:
        return 0.0
    return max(p.group.norm(v) for v in diff.coeffs.values())


# ---------------------------------------------------------------------------
# real / integer linear program
# ---------------------------------------------------------------------------

def _flat_norm_lp(p: Chain):
    k = p.complex
    d = p.dim
    nd = k.n_cells(d)
    nm = k.n_cells(d + 1)
    w = k.volumes(d)
    pv = _as_vector(p)

    if nm == 0:
        q = Chain(k, d, p.group, dict(p.coeffs))
        r = Chain.zero(k, d + 1, p.group)
        rep = SolverReport("linear_program", True, p.mass(), 0.0,
                           note="no filling cells; value is mass")
        return rep.value, FlatDecomposition(q, r), rep

    v = k.volumes(d + 1)
    b = k.boundary_matrix(d + 1)
    eye = sparse.identity(nd, format="csc")
    a_eq = sparse.hstack([eye, -eye, b, -b], format="csc")
    c = np.concatenate([w, w, v, v])
    res = linprog(c, A_eq=a_eq, b_eq=pv, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"flat norm LP failed: {res.message}")

    x = res.x
    qv = x[:nd] - x[nd:2 * nd]
    rv = x[2 * nd:2 * nd + nm] - x[2 * nd + nm:]
    qv[np.abs(qv) < _CLEAN_TOL] = 0.0
    rv[np.abs(rv) < _CLEAN_TOL] = 0.0
    resid = float(np.max(np.abs(qv + b @ rv - pv))) if nd else 0.0
    value = float(res.fun)

    integral = True
    note = ""
    if p.group.kind == "Z":
        off = max(float(np.max(np.abs(qv - np.round(qv)))) if nd else 0.0,
                  float(np.max(np.abs(rv - np.round(rv)))) if nm else 0.0)
        integral = off <= _INT_TOL
        if integral:
            qv = np.round(qv)
            rv = np.round(rv)
        else:
            # fall back to a feasible integral witness; the LP value stays a
            # lower bound and is reported as such
            rv = np.round(rv)
            qv = pv - b @ rv
            note = "LP relaxation fractional; decomposition is a rounded witness"
    q = Chain(k, d, p.group, {i: qv[i] for i in np.nonzero(qv)[0]})
    r = Chain(k, d + 1, p.group, {j: rv[j] for j in np.nonzero(rv)[0]})
    if resid > RESIDUAL_TOL:
        integral = False
        note = (note + "; " if note else "") + "constraint residual above tolerance"
    rep = SolverReport("linear_program", integral, value, resid,
                       iterations=int(getattr(res, "nit", 0)),
                       relaxation_value=None if integral else value, note=note)
    return value, FlatDecomposition(q, r), rep


# ---------------------------------------------------------------------------
# exact mod-2 optimization by subset enumeration
# ---------------------------------------------------------------------------

def _column_rows(b: sparse.csc_matrix, j: int):
    return b.indices[b.indptr[j]:b.indptr[j + 1]]

def _flat_norm_z2_brute(p: Chain):
    k = p.complex
    d = p.dim
    nm = k.n_cells(d + 1)
    w = k.volumes(d)
    v = k.volumes(d + 1)
    b = k.boundary_matrix(d + 1)
    col_rows = [list(map(int, _column_rows(b, j))) for j in range(nm)]

    p_mask = 0
    for i in p.coeffs:
        p_mask |= 1 << i
    cost_q = sum(w[i] for i in p.coeffs)

    best_cost = cost_q
    best_subset = 0
    bnd = 0
    subset = 0
    cost_r = 0.0
    # Gray-code walk: each step toggles one filling cell, so the boundary mask
    # and both cost terms update in O(cell degree)
    for t in range(1, 1 << nm):
        j = (t & -t).bit_length() - 1
        bit_j = 1 << j
        subset ^= bit_j
        cost_r += v[j] if subset & bit_j else -v[j]
        for row in col_rows[j]:
            bit = 1 << row
            bnd ^= bit
            if (p_mask ^ bnd) & bit:
                cost_q += w[row]
            else:
                cost_q -= w[row]
        cost = cost_q + cost_r
        if cost < best_cost - 1e-15 or (abs(cost - best_cost) <= 1e-15
                                        and subset < best_subset):
            best_cost = cost
            best_subset = subset

    r = Chain(k, d + 1, p.group,
              {j: 1 for j in range(nm) if best_subset >> j & 1})
    q = p - r.boundary() if r.coeffs else Chain(k, d, p.group, dict(p.coeffs))
    resid = _residual(p, q, r)
    value = q.mass() + r.mass()
    rep = SolverReport("brute_force", True, value, resid, enumerated=1 << nm)
    return value, FlatDecomposition(q, r), rep


# ---------------------------------------------------------------------------
# mod-2 LP relaxation via parity-polytope cuts
# ---------------------------------------------------------------------------

def _parity_cut_rows(inc, parity, col_of, q_col, n_vars):
    """Inequality rows ruling out, fractionally, every incident-subset pattern
    whose parity disagrees with the cell's coefficient.

    For each subset T of the incident columns with |T| != parity (mod 2):
        q >= 1 - sum_{j in T} (1 - r_j) - sum_{j not in T} r_j
    written as  -q + sum_T r_j - sum_{not T} r_j <= |T| - 1.
    """
    rows = []
    deg = len(inc)
    if deg > 16:
        raise ValueError("parity relaxation limited to cells of degree <= 16")
    for bits in range(1 << deg):
        size = bin(bits).count("1")
        if size % 2 == parity % 2:
            continue
        cols, vals = [], []
        if q_col is not None:
            cols.append(q_col)
            vals.append(-1.0)
        for t, j in enumerate(inc):
            cols.append(col_of(j))
            vals.append(1.0 if bits >> t & 1 else -1.0)
        rows.append((cols, vals, size - 1.0))
    return rows


def _flat_norm_z2_lp(p: Chain):
    k = p.complex
    d = p.dim
    nd = k.n_cells(d)
    nm = k.n_cells(d + 1)
    w = k.volumes(d)
    v = k.volumes(d + 1)
    b = k.boundary_matrix(d + 1).tocsr()
    pv = np.zeros(nd, dtype=int)
    for i in p.coeffs:
        pv[i] = 1

    # variables: q_0..q_{nd-1}, r_0..r_{nm-1}
    bounds = []
    for i in range(nd):
        deg = b.indptr[i + 1] - b.indptr[i]
        bounds.append((float(pv[i]), float(pv[i])) if deg == 0 else (0.0, 1.0))
    bounds.extend([(0.0, 1.0)] * nm)

    rows, cols, vals, rhs = [], [], [], []
    for i in range(nd):
        inc = list(map(int, b.indices[b.indptr[i]:b.indptr[i + 1]]))
        if not inc:
            continue
        for cut_cols, cut_vals, cut_rhs in _parity_cut_rows(
                inc, int(pv[i]), lambda j: nd + j, i, nd + nm):
            row = len(rhs)
            rows.extend([row] * len(cut_cols))
            cols.extend(cut_cols)
            vals.extend(cut_vals)
            rhs.append(cut_rhs)
    a_ub = sparse.csc_matrix((vals, (rows, cols)), shape=(len(rhs), nd + nm))
    c = np.concatenate([w, v])
    res = linprog(c, A_ub=a_ub, b_ub=np.array(rhs), bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"mod-2 flat norm relaxation failed: {res.message}")

    value = float(res.fun)
    qv, rv = res.x[:nd], res.x[nd:]
    off = max(float(np.max(np.abs(qv - np.round(qv)))) if nd else 0.0,
              float(np.max(np.abs(rv - np.round(rv)))) if nm else 0.0)
    r = Chain(k, d + 1, p.group, {j: 1 for j in np.nonzero(np.round(rv))[0]})
    q = p - r.boundary() if r.coeffs else Chain(k, d, p.group, dict(p.coeffs))
    resid = _residual(p, q, r)
    if off <= _INT_TOL:
        rep = SolverReport("linear_program", True, value, resid,
                           iterations=int(getattr(res, "nit", 0)))
        return value, FlatDecomposition(q, r), rep
    rep = SolverReport("linear_program", False, value, resid,
                       iterations=int(getattr(res, "nit", 0)),
                       relaxation_value=value,
                       note="fractional relaxation; value is a lower bound, "
                            "decomposition a rounded witness")
    return value, FlatDecomposition(q, r), rep


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def flat_norm(p: Chain, method: str = "auto", z2_exact_limit: int = Z2_EXACT_LIMIT):
    """Whitney flat norm of a chain within its ambient complex.

    Returns (value, FlatDecomposition, SolverReport).  When the report has
    optimal=False the value is a certified lower bound and the decomposition
    a feasible witness, so value <= flat norm <= decomposition.value.
    """
    if p.is_zero():
        k, d = p.complex, p.dim
        rep = SolverReport("linear_program", True, 0.0, 0.0, note="zero chain")
        return 0.0, FlatDecomposition(p, Chain.zero(k, d + 1, p.group)), rep

    if method not in ("auto", "lp", "brute"):
        raise ValueError(f"unknown method {method!r}")
    if p.group.kind == "Zmod" and p.group.p == 2:
        nm = p.complex.n_cells(p.dim + 1)
        if method == "brute" or (method == "auto" and nm <= z2_exact_limit):
            if nm > z2_exact_limit:
                raise ValueError(
                    f"mod-2 instance with {nm} filling cells exceeds the "
                    f"exact-enumeration cap {z2_exact_limit}")
            return _flat_norm_z2_brute(p)
        return _flat_norm_z2_lp(p)
    if p.group.kind == "Zmod":
        raise NotImplementedError("flat norm implemented for Z, R, and Z mod 2")
    if method == "brute":
        raise ValueError("brute force applies to mod-2 chains only")
    return _flat_norm_lp(p)


def _align(p: Chain, q: Chain, depth_budget: int = 8):
    if p.complex is q.complex:
        return p, q
    if q.complex.level - p.complex.level <= depth_budget:
        try:
            return p.push_to(q.complex), q
        except ValueError:
            pass
    if p.complex.level - q.complex.level <= depth_budget:
        try:
            return p, q.push_to(p.complex)
        except ValueError:
            pass
    raise ValueError("chains share no common refinement within the depth budget")


def flat_distance(p: Chain, q: Chain, method: str = "auto") -> float:
    """flat_norm(P - Q) after re-expressing both chains on a common refinement
    (one complex must be an iterated standard subdivision of the other)."""
    if p.dim != q.dim:
        raise ValueError("flat distance needs chains of equal dimension")
    p2, q2 = _align(p, q)
    return flat_norm(p2 - q2, method)[0]


def mass_minimize(t: Chain, method: str = "auto",
                  z2_exact_limit: int = Z2_EXACT_LIMIT):
    """Minimal-mass chain S with boundary T, within T's complex.

    Returns (S, SolverReport).  Raises if no chain in the complex has the
    requested boundary (a homology obstruction).
    """
    k = t.complex
    d = t.dim + 1
    nd = k.n_cells(t.dim)
    nm = k.n_cells(d)
    if nm == 0:
        if t.is_zero():
            rep = SolverReport("linear_program", True, 0.0, 0.0, note="T = 0")
            return Chain.zero(k, d, t.group), rep
        raise ValueError("no cells available to bound T (homology obstruction)")
    v = k.volumes(d)
    b = k.boundary_matrix(d)

    if t.group.kind == "Zmod" and t.group.p == 2:
        if method == "brute" or (method == "auto" and nm <= z2_exact_limit):
            if nm > z2_exact_limit:
                raise ValueError(
                    f"mod-2 instance with {nm} cells exceeds the cap")
            return _mass_minimize_z2_brute(t)
        return _mass_minimize_z2_lp(t)
    if t.group.kind == "Zmod":
        raise NotImplementedError("mass minimization for Z, R, and Z mod 2")

    tv = _as_vector(t)
    a_eq = sparse.hstack([b, -b], format="csc")
    c = np.concatenate([v, v])
    res = linprog(c, A_eq=a_eq, b_eq=tv, bounds=(0, None), method="highs")
    if res.status == 2:
        raise ValueError("T is not a boundary in this complex "
                         "(homology obstruction): LP infeasible")
    if not res.success:
        raise RuntimeError(f"mass minimization LP failed: {res.message}")
    sv = res.x[:nm] - res.x[nm:]
    sv[np.abs(sv) < _CLEAN_TOL] = 0.0
    integral = True
    if t.group.kind == "Z":
        off = float(np.max(np.abs(sv - np.round(sv)))) if nm else 0.0
        integral = off <= _INT_TOL
        if integral:
            sv = np.round(sv)
    s = Chain(k, d, t.group, {j: sv[j] for j in np.nonzero(sv)[0]})
    resid = max((t.group.norm(x) for x in (t - s.boundary()).coeffs.values()),
                default=0.0)
    if resid > RESIDUAL_TOL:
        integral = False
    rep = SolverReport("linear_program", integral, float(res.fun), resid,
                       iterations=int(getattr(res, "nit", 0)))
    return s, rep


def _mass_minimize_z2_brute(t: Chain):
    k = t.complex
    d = t.dim + 1
    nm = k.n_cells(d)
    v = k.volumes(d)
    b = k.boundary_matrix(d)
    col_rows = [list(map(int, _column_rows(b, j))) for j in range(nm)]
    t_mask = 0
    for i in t.coeffs:
        t_mask |= 1 << i

    best = None
    best_subset = None
    bnd = 0
    subset = 0
    cost = 0.0
    if t_mask == 0:
        best, best_subset = 0.0, 0
    for step in range(1, 1 << nm):
        j = (step & -step).bit_length() - 1
        bit_j = 1 << j
        subset ^= bit_j
        cost += v[j] if subset & bit_j else -v[j]
        for row in col_rows[j]:
            bnd ^= 1 << row
        if bnd == t_mask and (best is None or cost < best - 1e-15):
            best = cost
            best_subset = subset
    if best is None:
        raise ValueError("T is not a boundary in this complex "
                         "(homology obstruction): enumeration found no filling")
    s = Chain(k, d, t.group, {j: 1 for j in range(nm) if best_subset >> j & 1})
    resid = max((t.group.norm(x) for x in (t - s.boundary()).coeffs.values()),
                default=0.0)
    rep = SolverReport("brute_force", True, s.mass(), resid, enumerated=1 << nm)
    return s, rep


def _mass_minimize_z2_lp(t: Chain):
    k = t.complex
    d = t.dim + 1
    nd = k.n_cells(t.dim)
    nm = k.n_cells(d)
    v = k.volumes(d)
    b = k.boundary_matrix(d).tocsr()
    tv = np.zeros(nd, dtype=int)
    for i in t.coeffs:
        tv[i] = 1

    rows, cols, vals, rhs = [], [], [], []
    for i in range(nd):
        inc = list(map(int, b.indices[b.indptr[i]:b.indptr[i + 1]]))
        if not inc:
            if tv[i]:
                raise ValueError("T touches a cell with no cofaces "
                                 "(homology obstruction)")
            continue
        # allowed incidence patterns have |T| == tv[i] (mod 2); cut the rest
        for cut_cols, cut_vals, cut_rhs in _parity_cut_rows(
                inc, int(tv[i]), lambda j: j, None, nm):
            row = len(rhs)
            rows.extend([row] * len(cut_cols))
            cols.extend(cut_cols)
            vals.extend(cut_vals)
            rhs.append(cut_rhs)
    a_ub = sparse.csc_matrix((vals, (rows, cols)), shape=(len(rhs), nm))
    res = linprog(v, A_ub=a_ub, b_ub=np.array(rhs), bounds=(0.0, 1.0),
                  method="highs")
    if res.status == 2:
        raise ValueError("T is not a boundary in this complex "
                         "(homology obstruction): relaxation infeasible")
    if not res.success:
        raise RuntimeError(f"mod-2 mass minimization failed: {res.message}")
    rv = res.x
    off = float(np.max(np.abs(rv - np.round(rv)))) if nm else 0.0
    s = Chain(k, d, t.group, {j: 1 for j in np.nonzero(np.round(rv))[0]})
    resid = max((t.group.norm(x) for x in (t - s.boundary()).coeffs.values()),
                default=0.0)
    if off <= _INT_TOL and resid == 0.0:
        rep = SolverReport("linear_program", True, float(res.fun), resid)
        return s, rep
    if resid != 0.0:
        raise ValueError("relaxation is fractional and rounding does not bound T; "
                         "cannot certify feasibility at this size")
    rep = SolverReport("linear_program", False, float(res.fun), resid,
                       relaxation_value=float(res.fun),
                       note="fractional relaxation; returned chain is a witness")
    return s, rep
