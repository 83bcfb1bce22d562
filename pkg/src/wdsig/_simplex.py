"""Compiled transportation-simplex kernel.

Mirrors the pure-Python implementation in ot.py pivot for pivot: identical
Vogel initialization, identical Bland entering/leaving choices, identical
floating-point operation order. Both paths must return bit-identical plans;
tests assert this, so any change here needs the twin change in ot.py.

Status codes: 0 optimal, 1 pivot cap exceeded, 2 internal structure failure.
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def solve_kernel(C, pert, tol, max_pivots):  # noqa: C901 - one hot loop on purpose
    m, n = C.shape
    nn = m + n
    nb = m + n - 1

    ra = np.empty(m)
    rb = np.empty(n)
    for i in range(m):
        ra[i] = 1.0 / m + pert * (i + 1)
    for j in range(n):
        rb[j] = 1.0 / n
    rb[n - 1] += pert * (m * (m + 1) // 2)

    bi = np.empty(nb, np.int64)
    bj = np.empty(nb, np.int64)
    bf = np.empty(nb, np.float64)
    count = 0

    # ---- Vogel-approximation initial basis (on perturbed marginals) ----
    row_active = np.ones(m, np.bool_)
    col_active = np.ones(n, np.bool_)
    n_rows = m
    n_cols = n
    while True:
        if n_rows == 1 and n_cols == 1:
            i = 0
            while not row_active[i]:
                i += 1
            j = 0
            while not col_active[j]:
                j += 1
            bi[count] = i
            bj[count] = j
            bf[count] = min(ra[i], rb[j])
            count += 1
            break
        if n_rows == 1:
            i = 0
            while not row_active[i]:
                i += 1
            for j in range(n):
                if col_active[j]:
                    bi[count] = i
                    bj[count] = j
                    bf[count] = rb[j]
                    count += 1
            break
        if n_cols == 1:
            j = 0
            while not col_active[j]:
                j += 1
            for i in range(m):
                if row_active[i]:
                    bi[count] = i
                    bj[count] = j
                    bf[count] = ra[i]
                    count += 1
            break

        best_row_pen = -INF
        best_row = -1
        for i in range(m):
            if not row_active[i]:
                continue
            c1 = INF
            c2 = INF
            for j in range(n):
                if not col_active[j]:
                    continue
                cij = C[i, j]
                if cij < c1:
                    c2 = c1
                    c1 = cij
                elif cij < c2:
                    c2 = cij
            pen = c2 - c1
            if pen > best_row_pen:
                best_row_pen = pen
                best_row = i
        best_col_pen = -INF
        best_col = -1
        for j in range(n):
            if not col_active[j]:
                continue
            c1 = INF
            c2 = INF
            for i in range(m):
                if not row_active[i]:
                    continue
                cij = C[i, j]
                if cij < c1:
                    c2 = c1
                    c1 = cij
                elif cij < c2:
                    c2 = cij
            pen = c2 - c1
            if pen > best_col_pen:
                best_col_pen = pen
                best_col = j

        if best_row_pen >= best_col_pen:  # ties: rows first
            i = best_row
            j = -1
            cmin = INF
            for jj in range(n):
                if col_active[jj] and C[i, jj] < cmin:
                    cmin = C[i, jj]
                    j = jj
        else:
            j = best_col
            i = -1
            cmin = INF
            for ii in range(m):
                if row_active[ii] and C[ii, j] < cmin:
                    cmin = C[ii, j]
                    i = ii

        take = min(ra[i], rb[j])
        bi[count] = i
        bj[count] = j
        bf[count] = take
        count += 1
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
            # Exact tie before the final cell: close only the row.
            ra[i] = 0.0
            rb[j] = 0.0
            row_active[i] = False
            n_rows -= 1

    P = np.zeros((m, n))
    if count != nb:
        return 2, P, 0.0

    # ---- pivoting ----
    deg = np.empty(nn, np.int64)
    adj_off = np.empty(nn + 1, np.int64)
    adj_pos = np.empty(nn, np.int64)
    adj_node = np.empty(2 * nb, np.int64)
    adj_edge = np.empty(2 * nb, np.int64)
    u = np.empty(m)
    v = np.empty(n)
    visited = np.empty(nn, np.bool_)
    stack = np.empty(nn, np.int64)
    parent_node = np.empty(nn, np.int64)
    parent_edge = np.empty(nn, np.int64)
    path_edges = np.empty(nn, np.int64)

    status = 1
    for _ in range(max_pivots):
        # rebuild CSR adjacency of the basis tree
        for t in range(nn):
            deg[t] = 0
        for k in range(nb):
            deg[bi[k]] += 1
            deg[m + bj[k]] += 1
        adj_off[0] = 0
        for t in range(nn):
            adj_off[t + 1] = adj_off[t] + deg[t]
            adj_pos[t] = adj_off[t]
        for k in range(nb):
            r = bi[k]
            c = m + bj[k]
            adj_node[adj_pos[r]] = c
            adj_edge[adj_pos[r]] = k
            adj_pos[r] += 1
            adj_node[adj_pos[c]] = r
            adj_edge[adj_pos[c]] = k
            adj_pos[c] += 1

        # duals from the tree, u[0] = 0 (values are path-determined, so
        # traversal order does not affect the arithmetic)
        for t in range(nn):
            visited[t] = False
        visited[0] = True
        u[0] = 0.0
        sp = 0
        stack[sp] = 0
        sp = 1
        seen = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            for q in range(adj_off[node], adj_off[node + 1]):
                nxt = adj_node[q]
                if not visited[nxt]:
                    visited[nxt] = True
                    k = adj_edge[q]
                    if nxt >= m:
                        v[nxt - m] = C[bi[k], bj[k]] - u[bi[k]]
                    else:
                        u[nxt] = C[bi[k], bj[k]] - v[bj[k]]
                    stack[sp] = nxt
                    sp += 1
                    seen += 1
        if seen != nn:
            status = 2
            break

        # Bland entering: lowest flat index with negative reduced cost
        enter_i = -1
        enter_j = -1
        for i in range(m):
            ui = u[i]
            for j in range(n):
                if C[i, j] - ui - v[j] < -tol:
                    enter_i = i
                    enter_j = j
                    break
            if enter_i >= 0:
                break
        if enter_i < 0:
            status = 0
            break

        # unique tree path from row node enter_i to column node m + enter_j
        for t in range(nn):
            visited[t] = False
        visited[enter_i] = True
        parent_node[enter_i] = -1
        parent_edge[enter_i] = -1
        sp = 0
        stack[sp] = enter_i
        sp = 1
        target = m + enter_j
        reached = False
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if node == target:
                reached = True
                break
            for q in range(adj_off[node], adj_off[node + 1]):
                nxt = adj_node[q]
                if not visited[nxt]:
                    visited[nxt] = True
                    parent_node[nxt] = node
                    parent_edge[nxt] = adj_edge[q]
                    stack[sp] = nxt
                    sp += 1
        if not reached:
            status = 2
            break
        plen = 0
        node = target
        while node != enter_i:
            path_edges[plen] = parent_edge[node]
            plen += 1
            node = parent_node[node]
        # path_edges runs target -> enter_i; position t from enter_i is
        # path_edges[plen - 1 - t]; even t carries -theta.
        theta = INF
        for t in range(0, plen, 2):
            f = bf[path_edges[plen - 1 - t]]
            if f < theta:
                theta = f
        leave_k = -1
        leave_flat = np.int64(9223372036854775807)
        for t in range(0, plen, 2):
            k = path_edges[plen - 1 - t]
            if bf[k] == theta:
                flat = bi[k] * n + bj[k]
                if flat < leave_flat:
                    leave_flat = flat
                    leave_k = k
        for t in range(plen):
            k = path_edges[plen - 1 - t]
            if t % 2 == 0:
                bf[k] -= theta
            else:
                bf[k] += theta
        bi[leave_k] = enter_i
        bj[leave_k] = enter_j
        bf[leave_k] = theta

    if status != 0:
        return status, P, 0.0

    # ---- exact flow extraction on the final tree, unperturbed marginals ----
    res_a = np.empty(m)
    res_b = np.empty(n)
    for i in range(m):
        res_a[i] = 1.0 / m
    for j in range(n):
        res_b[j] = 1.0 / n

    order = np.argsort(bi * np.int64(n) + bj)  # match pure path's sorted basis
    for t in range(nn):
        deg[t] = 0
    for k in range(nb):
        deg[bi[k]] += 1
        deg[m + bj[k]] += 1
    adj_off[0] = 0
    for t in range(nn):
        adj_off[t + 1] = adj_off[t] + deg[t]
        adj_pos[t] = adj_off[t]
    for idx in range(nb):
        k = order[idx]
        r = bi[k]
        c = m + bj[k]
        adj_node[adj_pos[r]] = c
        adj_edge[adj_pos[r]] = k
        adj_pos[r] += 1
        adj_node[adj_pos[c]] = r
        adj_edge[adj_pos[c]] = k
        adj_pos[c] += 1

    edge_alive = np.ones(nb, np.bool_)
    node_deg = deg.copy()
    queue = np.empty(4 * nn, np.int64)  # FIFO of leaf nodes (may hold repeats)
    qh = 0
    qt = 0
    for i in range(m):
        if node_deg[i] == 1:
            queue[qt] = i
            qt += 1
    for j in range(n):
        if node_deg[m + j] == 1:
            queue[qt] = m + j
            qt += 1
    processed = 0
    while qh < qt and processed < nb:
        node = queue[qh]
        qh += 1
        if node_deg[node] != 1:
            continue
        k = -1
        other = -1
        for q in range(adj_off[node], adj_off[node + 1]):
            if edge_alive[adj_edge[q]]:
                k = adj_edge[q]
                other = adj_node[q]
                break
        if k < 0:
            break
        if node < m:
            f = res_a[node]
            res_b[other - m] -= f
            res_a[node] = 0.0
        else:
            f = res_b[node - m]
            res_a[other] -= f
            res_b[node - m] = 0.0
        if f < -1e-9:
            return 2, P, 0.0
        if f < 0.0:
            f = 0.0
        edge_alive[k] = False
        node_deg[node] -= 1
        node_deg[other] -= 1
        if node_deg[other] == 1:
            queue[qt] = other
            qt += 1
        P[bi[k], bj[k]] = f
        processed += 1
    if processed != nb:
        return 2, P, 0.0

    objective = 0.0
    for idx in range(nb):
        k = order[idx]
        objective += P[bi[k], bj[k]] * C[bi[k], bj[k]]
    return 0, P, objective
