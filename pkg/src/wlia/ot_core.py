"""Exact discrete optimal transport on small dense instances.

Solves the balanced transportation problem

    min <C, P>   s.t.   P 1 = source,  P^T 1 = target,  P >= 0

with a primal transportation simplex: a least-cost initial basic solution
followed by u/v (MODI) pivots.  Tie-breaking is deterministic (lowest flat
index everywhere) and a Bland fallback guards against degenerate cycling,
so identical inputs always produce bit-identical plans.  The returned plan
is a vertex of the transportation polytope and carries the dual potentials
of its final basis, which certify optimality.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, MassImbalanceError

# Relative tolerance (w.r.t. total mass) for marginal feasibility and for the
# source/target mass-balance precondition.
MASS_RTOL = 1e-9

# Below this fraction of the total mass, a surplus instance is treated as
# "nothing to move" (see solve_surplus_transport).
MOVABLE_MASS_RTOL = 1e-12

_DEGENERATE_RUN_LIMIT = 64
_MAX_PIVOTS = 500_000


def _as_mass_vector(values):
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("mass vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ValueError("masses must be finite and non-negative")
    return arr


@dataclass(frozen=True, eq=False)
class DensityVector:
    """Non-negative mass vector with a cached total."""

    masses: np.ndarray
    total_mass: float = None

    def __post_init__(self):
        arr = _as_mass_vector(self.masses).copy()
        arr.setflags(write=False)
        computed = float(arr.sum())
        if self.total_mass is None:
            total = computed
        else:
            total = float(self.total_mass)
            scale = max(abs(total), abs(computed), 1e-300)
            if abs(total - computed) > 1e-12 * scale:
                raise ValueError("cached total_mass disagrees with entry sum")
        object.__setattr__(self, "masses", arr)
        object.__setattr__(self, "total_mass", total)

    def __len__(self):
        return self.masses.size


@dataclass(frozen=True, eq=False)
class GridCostMatrix:
    """Pairwise Euclidean distances between the pixels of an n-by-n grid.

    Flat index i maps to grid coordinate (i // side, i % side), row-major.
    """

    side: int
    entries: np.ndarray

    def __post_init__(self):
        if int(self.side) < 1:
            raise ValueError("side must be a positive integer")
        entries = np.ascontiguousarray(self.entries, dtype=np.float64).copy()
        length = int(self.side) ** 2
        if entries.shape != (length, length):
            raise ValueError("entries must be (side^2, side^2)")
        if not np.array_equal(entries, _euclidean_grid(int(self.side))):
            raise ValueError("entries are not the grid distance matrix")
        entries.setflags(write=False)
        object.__setattr__(self, "side", int(self.side))
        object.__setattr__(self, "entries", entries)

    @property
    def size(self):
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal coupling with its objective value and dual certificate.

    ``basis`` lists the (row, col) cells of the final spanning-tree basis;
    ``row_potentials``/``col_potentials`` satisfy u_i + v_j <= C(i, j)
    everywhere with equality on every basis cell.
    """

    coupling: np.ndarray
    objective: float
    basis_size: int
    basis: np.ndarray
    row_potentials: np.ndarray
    col_potentials: np.ndarray


@dataclass(frozen=True, eq=False)
class WorkMatrix:
    """Per-route workloads w(i, j) = C(i, j) * P(i, j)."""

    entries: np.ndarray

    @property
    def total(self):
        return float(self.entries.sum())


def _euclidean_grid(side):
    idx = np.arange(side * side)
    u = idx // side
    v = idx % side
    return np.hypot(u[:, None] - u[None, :], v[:, None] - v[None, :])


def build_grid_cost(side):
    """Build the pairwise-distance cost matrix of an n-by-n pixel grid."""
    if int(side) < 1:
        raise ValueError("side must be a positive integer")
    return GridCostMatrix(side=int(side), entries=_euclidean_grid(int(side)))


@lru_cache(maxsize=16)
def grid_cost_cached(side):
    """Shared read-only cost matrix, reused across patch solves."""
    return build_grid_cost(side)


def _cost_entries(cost, length):
    if isinstance(cost, GridCostMatrix):
        entries = cost.entries
    else:
        entries = np.ascontiguousarray(cost, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("cost must be a square matrix")
        if np.any(entries < 0.0) or not np.all(np.isfinite(entries)):
            raise ValueError("cost entries must be finite and non-negative")
    if entries.shape[0] != length:
        raise ValueError(
            f"cost dimension {entries.shape[0]} does not match density length {length}"
        )
    return entries


class _TransportSimplex:
    """One solve of the dense (possibly rectangular) transportation problem.

    Nodes 0..M-1 are sources, M..M+N-1 are targets.  The basis is kept both
    as a boolean matrix (for vectorised reduced costs) and as adjacency
    dictionaries over the spanning tree (for duals and pivot cycles).
    """

    def __init__(self, cost, supply, demand):
        self.C = cost
        self.s = supply.astype(np.float64, copy=True)
        self.d = demand.astype(np.float64, copy=True)
        self.M = supply.size
        self.N = demand.size

    def solve(self):
        self._initial_basis()
        self._optimize()
        flow = self._exact_tree_flows()
        cells = sorted((i, t - self.M) for i in range(self.M) for t in self.adj[i])
        return flow, self.u, self.v, np.array(cells, dtype=np.int64).reshape(-1, 2)

    def _initial_basis(self):
        # Least-cost rule: repeatedly allocate at the cheapest cell whose row
        # and column are both still active, retiring exactly one line per
        # step (ties retire the row, never the last line of either kind).
        M, N = self.M, self.N
        work = self.C.copy()
        rem_s = self.s.copy()
        rem_d = self.d.copy()
        rows_left = M
        cols_left = N
        flow = np.zeros((M, N))
        mask = np.zeros((M, N), dtype=bool)
        adj = [{} for _ in range(M + N)]
        steps = M + N - 1
        for step in range(steps):
            k = int(np.argmin(work))
            i, j = divmod(k, N)
            si = rem_s[i]
            dj = rem_d[j]
            q = si if si <= dj else dj
            flow[i, j] = q
            mask[i, j] = True
            adj[i][M + j] = None
            adj[M + j][i] = None
            rem_s[i] = si - q
            rem_d[j] = dj - q
            if step == steps - 1:
                break
            if rows_left > 1 and (si <= dj or cols_left == 1):
                work[i, :] = np.inf
                rows_left -= 1
            else:
                work[:, j] = np.inf
                cols_left -= 1
        self.flow = flow
        self.mask = mask
        self.adj = adj

    def _duals(self):
        # Propagate u/v over the spanning tree from source node 0 (u_0 = 0).
        M = self.M
        C = self.C
        adj = self.adj
        u = np.zeros(M)
        v = np.zeros(self.N)
        n_nodes = M + self.N
        parent = np.full(n_nodes, -1, dtype=np.int64)
        seen = np.zeros(n_nodes, dtype=bool)
        seen[0] = True
        order = [0]
        head = 0
        while head < len(order):
            node = order[head]
            head += 1
            if node < M:
                un = u[node]
                for other in adj[node]:
                    if not seen[other]:
                        seen[other] = True
                        parent[other] = node
                        v[other - M] = C[node, other - M] - un
                        order.append(other)
            else:
                vn = v[node - M]
                for other in adj[node]:
                    if not seen[other]:
                        seen[other] = True
                        parent[other] = node
                        u[other] = C[other, node - M] - vn
                        order.append(other)
        if head != n_nodes:
            raise RuntimeError("transport basis lost tree connectivity")
        return u, v, parent

    def _optimize(self):
        C = self.C
        tol = 1e-10 * (1.0 + float(C.max()))
        degen_run = 0
        bland = False
        for _ in range(_MAX_PIVOTS):
            u, v, parent = self._duals()
            reduced = C - u[:, None] - v[None, :]
            reduced[self.mask] = np.inf
            flat = reduced.ravel()
            if bland:
                eligible = flat < -tol
                if not eligible.any():
                    self.u, self.v = u, v
                    return
                k = int(np.argmax(eligible))
            else:
                k = int(np.argmin(flat))
                if flat[k] >= -tol:
                    self.u, self.v = u, v
                    return
            theta = self._pivot(k, parent)
            if theta == 0.0:
                degen_run += 1
                if degen_run >= _DEGENERATE_RUN_LIMIT:
                    bland = True
            else:
                degen_run = 0
                bland = False
        raise RuntimeError("transportation simplex failed to converge")

    def _pivot(self, k, parent):
        M = self.M
        ei, ej = divmod(k, self.N)
        # Unique tree path from target node M+ej back to source node ei;
        # adding the entering edge closes the pivot cycle.
        path_a = [ei]
        node = ei
        while parent[node] != -1:
            node = parent[node]
            path_a.append(node)
        pos_a = {n: t for t, n in enumerate(path_a)}
        path_b = [M + ej]
        node = M + ej
        while node not in pos_a:
            node = parent[node]
            path_b.append(node)
        lca_pos = pos_a[path_b[-1]]
        nodes = path_b + path_a[lca_pos - 1 :: -1] if lca_pos else path_b

        flow = self.flow
        minus = []
        plus = []
        for t in range(len(nodes) - 1):
            x, y = nodes[t], nodes[t + 1]
            cell = (x, y - M) if x < M else (y, x - M)
            (minus if t % 2 == 0 else plus).append(cell)
        theta = min(flow[c] for c in minus)
        leave = min(c for c in minus if flow[c] == theta)

        if theta != 0.0:
            for c in plus:
                flow[c] += theta
            flow[ei, ej] += theta
            for c in minus:
                flow[c] -= theta
        flow[leave] = 0.0

        li, lj = leave
        self.mask[li, lj] = False
        del self.adj[li][M + lj]
        del self.adj[M + lj][li]
        self.mask[ei, ej] = True
        self.adj[ei][M + ej] = None
        self.adj[M + ej][ei] = None
        return theta

    def _exact_tree_flows(self):
        # Re-derive the basic flows from the marginals by leaf elimination.
        # This removes float drift accumulated over pivot updates; tiny
        # negative residues (degenerate cells) are clamped to zero.
        M = self.M
        res_s = self.s.copy()
        res_d = self.d.copy()
        flow = np.zeros((M, self.N))
        work_adj = [dict(a) for a in self.adj]
        deg = [len(a) for a in work_adj]
        stack = [n for n in range(M + self.N) if deg[n] == 1]
        while stack:
            n = stack.pop()
            if deg[n] != 1:
                continue
            (other,) = work_adj[n]
            if n < M:
                i, j = n, other - M
                q = res_s[i]
                res_s[i] = 0.0
                res_d[j] -= q
            else:
                i, j = other, n - M
                q = res_d[j]
                res_d[j] = 0.0
                res_s[i] -= q
            flow[i, j] = q if q > 0.0 else 0.0
            del work_adj[n][other]
            del work_adj[other][n]
            deg[n] = 0
            deg[other] -= 1
            if deg[other] == 1:
                stack.append(other)
        return flow


def solve_transport(source, target, cost):
    """Solve the transportation LP exactly, returning a vertex plan.

    Parameters
    ----------
    source, target : DensityVector or 1-D array-like
        Equal-mass non-negative densities (balance checked to 1e-9 relative).
    cost : GridCostMatrix or square ndarray
        Ground cost; dimension must match the density length.

    Returns
    -------
    TransportPlan
        Optimal coupling, objective (computed as ``(C * P).sum()``), basis
        cells and dual potentials.  Deterministic: identical inputs yield
        bit-identical plans.
    """
    if not isinstance(source, DensityVector):
        source = DensityVector(source)
    if not isinstance(target, DensityVector):
        target = DensityVector(target)
    if len(source) != len(target):
        raise ValueError("source and target lengths differ")
    C = _cost_entries(cost, len(source))

    total = max(source.total_mass, target.total_mass)
    if total <= 0.0:
        raise DegenerateInputError("total mass must be positive")
    if abs(source.total_mass - target.total_mass) > MASS_RTOL * total:
        raise MassImbalanceError(
            f"mass imbalance {abs(source.total_mass - target.total_mass):.3e} "
            f"exceeds {MASS_RTOL:.0e} relative tolerance"
        )
    return _solve_core(C, source.masses, target.masses, total)


def _solve_core(C, src, tgt, total):
    # Zero-mass rows and columns carry no flow in any feasible plan; solve
    # the positive-support subproblem and extend the duals afterwards.
    length = src.size
    pos_rows = src > 0.0
    pos_cols = tgt > 0.0
    if pos_rows.all() and pos_cols.all():
        flow, u, v, basis = _TransportSimplex(C, src, tgt).solve()
        feas = max(
            float(np.max(np.abs(flow.sum(axis=1) - src))),
            float(np.max(np.abs(flow.sum(axis=0) - tgt))),
        )
    else:
        rows = np.flatnonzero(pos_rows)
        cols = np.flatnonzero(pos_cols)
        grid = np.ix_(rows, cols)
        sub_flow, sub_u, sub_v, sub_basis = _TransportSimplex(C[grid], src[rows], tgt[cols]).solve()
        feas = max(
            float(np.max(np.abs(sub_flow.sum(axis=1) - src[rows]))),
            float(np.max(np.abs(sub_flow.sum(axis=0) - tgt[cols]))),
        )
        flow = np.zeros((length, length))
        flow[grid] = sub_flow
        u = np.empty(length)
        v = np.empty(length)
        u[rows] = sub_u
        v[cols] = sub_v
        # Dropped nodes have no tight cells; the pointwise-minimum extension
        # keeps u_i + v_j <= C(i, j) everywhere.
        rest_rows = np.flatnonzero(~pos_rows)
        if rest_rows.size:
            u[rest_rows] = np.min(C[np.ix_(rest_rows, cols)] - v[cols][None, :], axis=1)
        rest_cols = np.flatnonzero(~pos_cols)
        if rest_cols.size:
            v[rest_cols] = np.min(C[:, rest_cols] - u[:, None], axis=0)
        basis = np.column_stack((rows[sub_basis[:, 0]], cols[sub_basis[:, 1]]))

    if feas > MASS_RTOL * total:
        raise RuntimeError(f"solver produced infeasible marginals ({feas:.3e})")

    objective = float((C * flow).sum())
    return TransportPlan(
        coupling=flow,
        objective=objective,
        basis_size=int(np.count_nonzero(flow > 0.0)),
        basis=basis,
        row_potentials=u,
        col_potentials=v,
    )


def work_matrix(plan, cost):
    """Elementwise product of cost and coupling (the per-route workloads)."""
    C = _cost_entries(cost, plan.coupling.shape[0])
    if C.shape != plan.coupling.shape:
        raise ValueError("cost and coupling dimensions disagree")
    return WorkMatrix(entries=C * plan.coupling)


def surplus_densities(source_masses, target_masses):
    """Cancel pointwise shared mass between two equal-mass densities.

    Returns ``(r0, r1)`` with ``r0 = source - min(source, target)`` and
    ``r1`` the corresponding target surplus, nudged on its largest entry so
    the two sums match exactly.  For a metric ground cost the shared mass
    can stay in place in some optimal plan, so transporting only the
    surpluses preserves the optimal value and the off-diagonal structure.
    """
    src = _as_mass_vector(source_masses)
    tgt = _as_mass_vector(target_masses)
    if src.size != tgt.size:
        raise ValueError("source and target lengths differ")
    shared = np.minimum(src, tgt)
    r0 = src - shared
    r1 = tgt - shared
    s0 = float(r0.sum())
    s1 = float(r1.sum())
    if s1 > 0.0 and s0 != s1:
        r1 = r1.copy()
        r1[int(np.argmax(r1))] += s0 - s1
    return r0, r1


def _checked_surplus(source_masses, target_masses):
    src = np.ascontiguousarray(source_masses, dtype=np.float64)
    tgt = np.ascontiguousarray(target_masses, dtype=np.float64)
    if src.shape != tgt.shape or src.ndim != 1:
        raise ValueError("source and target must be 1-D vectors of equal length")
    total = max(float(src.sum()), float(tgt.sum()))
    if not np.isfinite(total) or np.any(src < 0.0) or np.any(tgt < 0.0):
        raise ValueError("masses must be finite and non-negative")
    if total <= 0.0:
        raise DegenerateInputError("total mass must be positive")
    shared = np.minimum(src, tgt)
    r0 = src - shared
    r1 = tgt - shared
    movable = float(r0.sum())
    if movable <= MOVABLE_MASS_RTOL * total:
        return None
    s1 = float(r1.sum())
    if movable != s1:
        r1[int(np.argmax(r1))] += movable - s1
        if np.min(r1) < 0.0:
            return None
    return r0, r1, movable, src.size


def solve_surplus_transport(source_masses, target_masses, cost):
    """Solve transport between density surpluses after shared-mass cancelling.

    Returns ``None`` when the movable mass is negligible (below
    ``MOVABLE_MASS_RTOL`` of the total), i.e. the densities already agree.
    """
    reduced = _checked_surplus(source_masses, target_masses)
    if reduced is None:
        return None
    r0, r1, movable, length = reduced
    return _solve_core(_cost_entries(cost, length), r0, r1, movable)


def transport_cost(source_masses, target_masses, cost):
    """Optimal transport cost between equal-mass densities (value only).

    Shared mass is cancelled first (valid for the metric grid cost) and the
    optimum is read off the dual potentials, skipping plan assembly; use
    this when only the W1 value is needed.
    """
    reduced = _checked_surplus(source_masses, target_masses)
    if reduced is None:
        return 0.0
    r0, r1, _, length = reduced
    C = _cost_entries(cost, length)
    rows = np.flatnonzero(r0 > 0.0)
    cols = np.flatnonzero(r1 > 0.0)
    sub_s = r0[rows]
    sub_d = r1[cols]
    sim = _TransportSimplex(np.ascontiguousarray(C[np.ix_(rows, cols)]), sub_s, sub_d)
    sim._initial_basis()
    sim._optimize()
    return float(sim.u @ sub_s + sim.v @ sub_d)
