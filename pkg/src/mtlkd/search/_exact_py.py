"""Pure-Python exact solver kernel (fallback for the compiled ``_exact_ext``).

Two stages:

1. Route stage. For every customer subset S and last customer j, keep the
   Pareto set of (distance, departure time) labels of feasible single routes
   depot -> ... -> j covering exactly S. Without time windows the time
   coordinate is constant, so this collapses to a Held-Karp minimum.
2. Partition stage. best[S] = min over blocks T containing the lowest
   customer of S of route_cost[T] + best[S \\ T].

Both stages are exact; no time discretisation is needed because labels keep
real-valued departure times.
"""

from __future__ import annotations

import math

EPS = 1e-9


def solve(dist, demand, early, late, service, capacity, limit, speed, is_open, has_tw, has_l):
    """Returns (cost, routes) with routes as lists of node indices (1-based customers)."""
    n = len(demand) - 1
    full = (1 << n) - 1
    depot_late = late[0]
    t0 = early[0] if has_tw else 0.0

    lin = [0.0] * (full + 1)
    back = [0.0] * (full + 1)
    for S in range(1, full + 1):
        low = (S & -S).bit_length() - 1
        rest = S & (S - 1)
        dm = demand[low + 1]
        lin[S] = lin[rest] + (dm if dm > 0 else 0)
        back[S] = back[rest] + (-dm if dm < 0 else 0)
    cap_ok = [lin[S] <= capacity + EPS and back[S] <= capacity + EPS for S in range(full + 1)]

    def extend(dist_so_far, time, i, j):
        """Label after moving from node i to customer node j, or None if infeasible."""
        leg = dist[i][j]
        nd = dist_so_far + leg
        tnew = time
        if has_tw:
            start = max(time + leg / speed, early[j])
            if start > late[j] + EPS:
                return None
            tnew = start + service[j]
            if not is_open and tnew + dist[j][0] / speed > depot_late + EPS:
                return None
        if has_l:
            total = nd if is_open else nd + dist[j][0]
            if total > limit + EPS:
                return None
        return nd, tnew

    # labels[S][j] -> list of (dist, time, prev_j, prev_idx); prev_j = -1 for the depot.
    # Buckets are always scanned in customer-index order so ties break like the compiled kernel.
    labels: list[dict[int, list]] = [dict() for _ in range(full + 1)]

    def insert(bucket, lab):
        for e in bucket:
            if e[0] <= lab[0] and e[1] <= lab[1]:
                return
        bucket[:] = [e for e in bucket if not (lab[0] <= e[0] and lab[1] <= e[1])]
        bucket.append(lab)

    for j in range(n):
        S = 1 << j
        if not cap_ok[S]:
            continue
        r = extend(0.0, t0, 0, j + 1)
        if r is not None:
            labels[S][j] = [(r[0], r[1] if has_tw else 0.0, -1, -1)]

    for S in range(1, full + 1):
        for i in sorted(labels[S]):
            for idx, (dd, tt, _, _) in enumerate(labels[S][i]):
                for j in range(n):
                    bit = 1 << j
                    if S & bit or not cap_ok[S | bit]:
                        continue
                    r = extend(dd, tt, i + 1, j + 1)
                    if r is None:
                        continue
                    insert(labels[S | bit].setdefault(j, []), (r[0], r[1] if has_tw else 0.0, i, idx))

    route_cost = [math.inf] * (full + 1)
    route_end = [None] * (full + 1)
    for S in range(1, full + 1):
        for j in sorted(labels[S]):
            for idx, (dd, _, _, _) in enumerate(labels[S][j]):
                c = dd if is_open else dd + dist[j + 1][0]
                if c < route_cost[S]:
                    route_cost[S] = c
                    route_end[S] = (j, idx)

    def route_of(S):
        j, idx = route_end[S]
        order = []
        while j != -1:
            order.append(j + 1)
            _, _, pj, pidx = labels[S][j][idx]
            S ^= 1 << j
            j, idx = pj, pidx
        return order[::-1]

    best = [math.inf] * (full + 1)
    choice = [0] * (full + 1)
    best[0] = 0.0
    for S in range(1, full + 1):
        low = S & -S
        rest = S ^ low
        T = rest
        while True:
            U = T | low
            c = route_cost[U] + best[S ^ U]
            if c < best[S]:
                best[S] = c
                choice[S] = U
            if T == 0:
                break
            T = (T - 1) & rest

    if math.isinf(best[full]):
        return math.inf, []
    routes = []
    S = full
    while S:
        U = choice[S]
        routes.append(route_of(U))
        S ^= U
    return best[full], routes
