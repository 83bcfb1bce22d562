"""Exact discrete optimal transport between uniform empirical measures.

Solves the transportation linear program

    min <P, C>   s.t.  P 1 = a,  P^T 1 = b,  P >= 0

for squared-Euclidean cost C and uniform marginals a = 1/m, b = 1/n, using a
primal transportation simplex: Vogel-approximation initial basis, Bland's
anti-cycling pivot rule, and an infinitesimal perturbation of the row
marginals to break the degenerate ties that uniform masses create. The
perturbation is removed when flows are extracted from the final basis tree,
so the returned plan and objective are exact for the unperturbed problem.

A numba-compiled kernel (_simplex.py) carries the hot loop when numba is
importable; the pure-Python implementation below is the reference fallback.
The two are written to make identical pivot choices with identical float
operation order, and a test pins them bit-for-bit equal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

try:
    from . import _simplex

    _KERNEL = _simplex.solve_kernel
except ImportError:  # numba unavailable: pure-Python fallback
    _KERNEL = None

# Perturbation added to row marginal i is (i + 1) * _PERT; the total is folded
# into the last column so the problem stays balanced.
_PERT = 1e-12
_PIVOT_CAP_FACTOR = 50


class SolverError(RuntimeError):
    """Simplex failed to converge; signals a solver bug, not a data condition."""


class EmptySupportError(ValueError):
    """A response contributed zero retained tokens, so W2 is undefined."""

    def __init__(self, prompt_id: str | None = None, response_id: str | None = None):
        self.prompt_id = prompt_id
        self.response_id = response_id
        where = ""
        if prompt_id is not None or response_id is not None:
            where = f" (prompt={prompt_id!r}, response={response_id!r})"
        super().__init__(f"empty embedding support{where}")


@dataclass
class TransportPlan:
    matrix: np.ndarray  # (m, n) nonnegative flows
    row_marginals: np.ndarray
    col_marginals: np.ndarray
    objective: float


def cost_matrix(u, v) -> np.ndarray:
    """Pairwise squared Euclidean costs C[t][s] = ||u_t - v_s||^2."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 2 or v.ndim != 2:
        raise ValueError("cost_matrix expects 2-D matrices")
    if u.shape[0] == 0 or v.shape[0] == 0:
        raise EmptySupportError()
    if u.shape[1] != v.shape[1]:
        raise ValueError(f"dimension mismatch: {u.shape[1]} vs {v.shape[1]} columns")
    return cdist(u, v, "sqeuclidean")


def _vogel_basis(C: np.ndarray, ra: np.ndarray, rb: np.ndarray) -> list[tuple[int, int, float]]:
    """Vogel-approximation initial basic feasible solution.

    Returns exactly m + n - 1 cells (i, j, flow); degenerate cells carry zero
    flow. ra/rb are consumed in place.
    """
    m, n = C.shape
    row_active = np.ones(m, dtype=bool)
    col_active = np.ones(n, dtype=bool)
    n_rows, n_cols = m, n
    cells: list[tuple[int, int, float]] = []

    while True:
        if n_rows == 1 and n_cols == 1:
            i = int(row_active.argmax())
            j = int(col_active.argmax())
            cells.append((i, j, min(ra[i], rb[j])))
            return cells
        if n_rows == 1:
            i = int(row_active.argmax())
            for j in np.flatnonzero(col_active):
                cells.append((i, int(j), rb[j]))
            return cells
        if n_cols == 1:
            j = int(col_active.argmax())
            for i in np.flatnonzero(row_active):
                cells.append((int(i), j, ra[i]))
            return cells

        rows = np.flatnonzero(row_active)
        cols = np.flatnonzero(col_active)
        sub = C[np.ix_(rows, cols)]
        two_r = np.partition(sub, 1, axis=1)[:, :2]
        row_pen = two_r[:, 1] - two_r[:, 0]
        two_c = np.partition(sub, 1, axis=0)[:2, :]
        col_pen = two_c[1, :] - two_c[0, :]

        r_best = int(row_pen.argmax())
        c_best = int(col_pen.argmax())
        if row_pen[r_best] >= col_pen[c_best]:  # ties: rows first, lowest index
            i = int(rows[r_best])
            j = int(cols[int(np.argmin(sub[r_best, :]))])
        else:
            j = int(cols[c_best])
            i = int(rows[int(np.argmin(sub[:, c_best]))])

        take = min(ra[i], rb[j])
        cells.append((i, j, take))
        if ra[i] < rb[j]:
            rb[j] -= ra[i]
            ra[i] = 0.0
            row_active[i] = False
            n_rows -= 1
        elif rb[j] < ra[i]:
            ra[i] -= rb[j]
            rb[j] = 0.0
            col_active[j] = False
            n_cols -= 1
        else:
            # Exact tie before the final cell: close only the row and leave a
            # zero-mass column so the basis stays a spanning tree.
            ra[i] = 0.0
            rb[j] = 0.0
            row_active[i] = False
            n_rows -= 1


def _compute_duals(C, row_adj, col_adj, m, n):
    u = np.zeros(m)
    v = np.zeros(n)
    row_seen = np.zeros(m, dtype=bool)
    col_seen = np.zeros(n, dtype=bool)
    row_seen[0] = True
    queue = deque([(True, 0)])
    while queue:
        is_row, k = queue.popleft()
        if is_row:
            for j in row_adj[k]:
                if not col_seen[j]:
                    col_seen[j] = True
                    v[j] = C[k, j] - u[k]
                    queue.append((False, j))
        else:
            for i in col_adj[k]:
                if not row_seen[i]:
                    row_seen[i] = True
                    u[i] = C[i, k] - v[k]
                    queue.append((True, i))
    if not (row_seen.all() and col_seen.all()):
        raise SolverError("basis graph is not a spanning tree")
    return u, v


def _tree_path(ei: int, ej: int, row_adj, col_adj, m: int) -> list[tuple[int, int]]:
    """Unique basis-tree path from row node ei to column node ej, as cells."""
    # Nodes: rows are 0..m-1, column j is m + j.
    target = m + ej
    parent = {ei: -1}
    stack = [ei]
    while stack:
        node = stack.pop()
        if node == target:
            break
        if node < m:
            neighbors = (m + j for j in row_adj[node])
        else:
            neighbors = iter(col_adj[node - m])
        for nxt in neighbors:
            if nxt not in parent:
                parent[nxt] = node
                stack.append(nxt)
    if target not in parent:
        raise SolverError("entering cell has no cycle in the basis tree")
    path: list[tuple[int, int]] = []
    node = target
    while parent[node] != -1:
        prev = parent[node]
        if prev < m:
            path.append((prev, node - m))
        else:
            path.append((node, prev - m))
        node = prev
    path.reverse()
    return path


def _extract_tree_flows(cells, a, b, m, n):
    """Exact flows on the final basis tree for the unperturbed marginals."""
    row_adj = [dict() for _ in range(m)]  # j -> cell index
    col_adj = [dict() for _ in range(n)]
    for idx, (i, j) in enumerate(cells):
        row_adj[i][j] = idx
        col_adj[j][i] = idx
    res_a = a.astype(np.float64).copy()
    res_b = b.astype(np.float64).copy()
    flows = np.zeros(len(cells))
    leaves = deque()
    for i in range(m):
        if len(row_adj[i]) == 1:
            leaves.append((True, i))
    for j in range(n):
        if len(col_adj[j]) == 1:
            leaves.append((False, j))
    processed = 0
    while leaves and processed < len(cells):
        is_row, k = leaves.popleft()
        adj = row_adj[k] if is_row else col_adj[k]
        if len(adj) != 1:
            continue
        if is_row:
            j, idx = next(iter(adj.items()))
            flows[idx] = res_a[k]
            res_b[j] -= res_a[k]
            res_a[k] = 0.0
            del row_adj[k][j]
            del col_adj[j][k]
            if len(col_adj[j]) == 1:
                leaves.append((False, j))
        else:
            i, idx = next(iter(adj.items()))
            flows[idx] = res_b[k]
            res_a[i] -= res_b[k]
            res_b[k] = 0.0
            del col_adj[k][i]
            del row_adj[i][k]
            if len(row_adj[i]) == 1:
                leaves.append((True, i))
        processed += 1
    if processed != len(cells):
        raise SolverError("basis tree extraction stalled")
    return flows


def _solve_pure(C: np.ndarray, m: int, n: int, tol: float, max_pivots: int) -> TransportPlan:
    a = np.full(m, 1.0 / m)
    b = np.full(n, 1.0 / n)
    ra = a + _PERT * np.arange(1, m + 1)
    rb = b.copy()
    rb[-1] += _PERT * (m * (m + 1) // 2)

    init = _vogel_basis(C, ra, rb)
    flow = {(i, j): f for i, j, f in init}
    row_adj = [set() for _ in range(m)]
    col_adj = [set() for _ in range(n)]
    for i, j, _ in init:
        row_adj[i].add(j)
        col_adj[j].add(i)

    for _ in range(max_pivots):
        u, v = _compute_duals(C, row_adj, col_adj, m, n)
        reduced = C - u[:, None] - v[None, :]
        negative = (reduced < -tol).ravel()
        if not negative.any():
            break
        entering = int(negative.argmax())  # Bland: lowest flat index
        ei, ej = divmod(entering, n)
        path = _tree_path(ei, ej, row_adj, col_adj, m)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)  # Bland on ties
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[(ei, ej)] = theta
        row_adj[ei].add(ej)
        col_adj[ej].add(ei)
        del flow[leaving]
        row_adj[leaving[0]].discard(leaving[1])
        col_adj[leaving[1]].discard(leaving[0])
    else:
        raise SolverError(f"no convergence within {max_pivots} pivots")

    basis = sorted(flow.keys())
    exact = _extract_tree_flows(basis, a, b, m, n)
    if exact.min() < -1e-9:
        raise SolverError("extracted basis flow is infeasible")
    exact = np.maximum(exact, 0.0)
    P = np.zeros((m, n))
    objective = 0.0
    for (i, j), f in zip(basis, exact):
        P[i, j] = f
        objective += f * C[i, j]
    return TransportPlan(matrix=P, row_marginals=a, col_marginals=b, objective=float(objective))


def solve_emd2(C, force_pure: bool = False) -> TransportPlan:
    """Exact optimal transport for the uniform marginals implied by C's shape."""
    C = np.ascontiguousarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] == 0 or C.shape[1] == 0:
        raise ValueError(f"cost matrix must be 2-D and nonempty, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix has non-finite entries")
    if C.min() < 0:
        raise ValueError("cost matrix has negative entries")
    m, n = C.shape
    tol = 1e-10 * max(1.0, float(C.max()))
    max_pivots = _PIVOT_CAP_FACTOR * (m + n)
    if _KERNEL is not None and not force_pure:
        status, P, objective = _KERNEL(C, _PERT, tol, max_pivots)
        if status == 1:
            raise SolverError(f"no convergence within {max_pivots} pivots")
        if status != 0:
            raise SolverError("basis tree lost structural integrity")
        return TransportPlan(
            matrix=P,
            row_marginals=np.full(m, 1.0 / m),
            col_marginals=np.full(n, 1.0 / n),
            objective=float(objective),
        )
    return _solve_pure(C, m, n, tol, max_pivots)


def w2_distance(u, v) -> float:
    """2-Wasserstein distance between uniform empirical measures on rows."""
    plan = solve_emd2(cost_matrix(u, v))
    return float(np.sqrt(max(plan.objective, 0.0)))
