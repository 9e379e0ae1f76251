# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled exact solver kernel. Same algorithm and arithmetic as ``_exact_py``."""

from libcpp.vector cimport vector
from libc.math cimport INFINITY

cdef double EPS = 1e-9


cdef struct Label:
    double d
    double t
    int pj
    int pidx


cdef inline bint _insert(vector[Label]& bucket, Label lab):
    cdef size_t k, w = 0
    for k in range(bucket.size()):
        if bucket[k].d <= lab.d and bucket[k].t <= lab.t:
            return False
    for k in range(bucket.size()):
        if not (lab.d <= bucket[k].d and lab.t <= bucket[k].t):
            bucket[w] = bucket[k]
            w += 1
    bucket.resize(w)
    bucket.push_back(lab)
    return True


def solve(dist_in, demand_in, early_in, late_in, service_in, double capacity, double limit,
          double speed, bint is_open, bint has_tw, bint has_l):
    cdef int n = len(demand_in) - 1
    cdef int full = (1 << n) - 1
    cdef int N1 = n + 1
    cdef vector[double] dist = vector[double](N1 * N1)
    cdef vector[double] demand = vector[double](N1)
    cdef vector[double] early = vector[double](N1)
    cdef vector[double] late = vector[double](N1)
    cdef vector[double] service = vector[double](N1)
    cdef int a, b
    for a in range(N1):
        demand[a] = demand_in[a]
        early[a] = early_in[a]
        late[a] = late_in[a]
        service[a] = service_in[a]
        row = dist_in[a]
        for b in range(N1):
            dist[a * N1 + b] = row[b]

    cdef double depot_late = late[0]
    cdef double t0 = early[0] if has_tw else 0.0
    cdef vector[double] lin = vector[double](full + 1, 0.0)
    cdef vector[double] back = vector[double](full + 1, 0.0)
    cdef vector[char] cap_ok = vector[char](full + 1, 1)
    cdef int S, rest, low, i, j, bit, U, T
    cdef double dm
    for S in range(1, full + 1):
        low = 0
        while not (S >> low) & 1:
            low += 1
        rest = S & (S - 1)
        dm = demand[low + 1]
        lin[S] = lin[rest] + (dm if dm > 0 else 0.0)
        back[S] = back[rest] + (-dm if dm < 0 else 0.0)
        cap_ok[S] = lin[S] <= capacity + EPS and back[S] <= capacity + EPS

    cdef vector[vector[Label]] labels = vector[vector[Label]]((full + 1) * n)
    cdef Label lab, cur
    cdef double leg, nd, tnew, start, total
    cdef size_t idx

    # seed single-customer routes (prev node = depot, encoded as prev index 0)
    for j in range(n):
        S = 1 << j
        if not cap_ok[S]:
            continue
        if _extend(dist, early, late, service, N1, 0.0, t0, 0, j + 1, speed, limit, depot_late,
                   is_open, has_tw, has_l, &lab):
            if not has_tw:
                lab.t = 0.0
            lab.pj = -1
            lab.pidx = -1
            labels[S * n + j].push_back(lab)

    for S in range(1, full + 1):
        for i in range(n):
            if not (S >> i) & 1:
                continue
            for idx in range(labels[S * n + i].size()):
                cur = labels[S * n + i][idx]
                for j in range(n):
                    bit = 1 << j
                    if S & bit or not cap_ok[S | bit]:
                        continue
                    if not _extend(dist, early, late, service, N1, cur.d, cur.t, i + 1, j + 1, speed,
                                   limit, depot_late, is_open, has_tw, has_l, &lab):
                        continue
                    if not has_tw:
                        lab.t = 0.0
                    lab.pj = i
                    lab.pidx = <int>idx
                    _insert(labels[(S | bit) * n + j], lab)

    cdef vector[double] route_cost = vector[double](full + 1, INFINITY)
    cdef vector[int] end_j = vector[int](full + 1, -1)
    cdef vector[int] end_idx = vector[int](full + 1, -1)
    cdef double c
    for S in range(1, full + 1):
        for j in range(n):
            for idx in range(labels[S * n + j].size()):
                c = labels[S * n + j][idx].d
                if not is_open:
                    c = c + dist[(j + 1) * N1]
                if c < route_cost[S]:
                    route_cost[S] = c
                    end_j[S] = j
                    end_idx[S] = <int>idx

    cdef vector[double] best = vector[double](full + 1, INFINITY)
    cdef vector[int] choice = vector[int](full + 1, 0)
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

    if best[full] == INFINITY:
        return float("inf"), []
    routes = []
    cdef int SS, jj, ii, pj
    S = full
    while S:
        U = choice[S]
        order = []
        SS = U
        jj = end_j[U]
        ii = end_idx[U]
        while jj != -1:
            order.append(jj + 1)
            cur = labels[SS * n + jj][ii]
            SS ^= 1 << jj
            jj = cur.pj
            ii = cur.pidx
        routes.append(order[::-1])
        S ^= U
    return best[full], routes


cdef inline bint _extend(vector[double]& dist, vector[double]& early, vector[double]& late,
                         vector[double]& service, int N1, double dist_so_far, double time, int i, int j,
                         double speed, double limit, double depot_late, bint is_open, bint has_tw,
                         bint has_l, Label* out):
    cdef double leg = dist[i * N1 + j]
    cdef double nd = dist_so_far + leg
    cdef double tnew = time
    cdef double start, total
    if has_tw:
        start = time + leg / speed
        if early[j] > start:
            start = early[j]
        if start > late[j] + EPS:
            return False
        tnew = start + service[j]
        if not is_open and tnew + dist[j * N1] / speed > depot_late + EPS:
            return False
    if has_l:
        total = nd if is_open else nd + dist[j * N1]
        if total > limit + EPS:
            return False
    out.d = nd
    out.t = tnew
    return True
