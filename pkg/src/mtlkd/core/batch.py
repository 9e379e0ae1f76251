"""Vectorised decoding environment over a batch of instances.

Mirrors ``state.feasibility_mask`` / ``state.transition`` row by row. Rows may
mix variants and customer counts: short instances are padded with inert nodes
that start out visited.
"""

from __future__ import annotations

import numpy as np

from .instance import EPS, Instance
from .solution import Solution
from .state import ContractViolation


class BatchEnv:
    def __init__(self, instances: list[Instance], repeat: int = 1) -> None:
        if not instances:
            raise ValueError("empty batch")
        self.instances = list(instances)
        self.repeat = repeat
        rows = [inst for inst in instances for _ in range(repeat)]
        self.row_instance = np.repeat(np.arange(len(instances)), repeat)
        B = len(rows)
        N1 = max(inst.n for inst in rows) + 1
        self.B, self.N1 = B, N1

        self.node_valid = np.zeros((B, N1), dtype=bool)
        self.coords = np.zeros((B, N1, 2))
        self.dist = np.zeros((B, N1, N1))
        self.demand = np.zeros((B, N1))
        self.early = np.zeros((B, N1))
        self.late = np.full((B, N1), np.inf)
        self.service = np.zeros((B, N1))
        for b, inst in enumerate(rows):
            k = inst.n + 1
            self.node_valid[b, :k] = True
            self.coords[b, :k] = inst.coords
            self.coords[b, k:] = inst.coords[0]
            self.dist[b, :k, :k] = inst.dist
            self.demand[b, :k] = inst.demand
            self.early[b, :k] = inst.tw[:, 0]
            self.late[b, :k] = inst.tw[:, 1]
            self.service[b, :k] = inst.service_time
        self.capacity = np.array([inst.capacity for inst in rows], dtype=np.float64)
        self.limit = np.array([inst.duration_limit for inst in rows], dtype=np.float64)
        self.speed = np.array([inst.speed for inst in rows], dtype=np.float64)
        self.is_open = np.array([inst.variant.open for inst in rows])
        self.has_tw = np.array([inst.variant.time_window for inst in rows])
        self.has_l = np.array([inst.variant.duration_limit for inst in rows])
        self.n_customers = np.array([inst.n for inst in rows])
        self.reset()

    def reset(self) -> None:
        B = self.B
        self.visited = ~self.node_valid.copy()
        self.visited[:, 0] = False
        self.last = np.zeros(B, dtype=np.int64)
        self.t = np.where(self.has_tw, self.early[:, 0], 0.0)
        self.delivered = np.zeros(B)
        self.collected = np.zeros(B)
        self.route_dist = np.zeros(B)
        self.route_len = np.zeros(B, dtype=np.int64)
        self.cost = np.zeros(B)
        self.done = self.n_customers == 0
        self.actions: list[np.ndarray] = []
        self.active: list[np.ndarray] = []

    @property
    def rows(self) -> np.ndarray:
        return np.arange(self.B)

    def mask(self) -> np.ndarray:
        ar = self.rows
        d_last = self.dist[ar, self.last]  # (B, N1)
        d_back = self.dist[:, :, 0]
        dem = self.demand
        cap = self.capacity[:, None] + EPS
        cap_ok = np.where(dem > 0, self.delivered[:, None] + dem <= cap, self.collected[:, None] - dem <= cap)
        start = np.maximum(self.t[:, None] + d_last / self.speed[:, None], self.early)
        tw_ok = start <= self.late + EPS
        back_ok = start + self.service + d_back / self.speed[:, None] <= self.late[:, :1] + EPS
        travel = self.route_dist[:, None] + d_last
        travel = np.where(self.is_open[:, None], travel, travel + d_back)
        dur_ok = travel <= self.limit[:, None] + EPS

        ok = ~self.visited & cap_ok
        ok &= tw_ok | ~self.has_tw[:, None]
        ok &= back_ok | ~(self.has_tw & ~self.is_open)[:, None]
        ok &= dur_ok | ~self.has_l[:, None]
        ok[self.done] = False
        ok[:, 0] = (self.route_len > 0) | self.done
        return ok

    def dynamic_features(self) -> np.ndarray:
        """(B, 4) array of (l_r / C, t_c, d_r, o), inactive entries zeroed."""
        l_r = self.capacity - np.maximum(self.delivered, self.collected)
        d_r = self.limit - self.route_dist
        return np.stack(
            [
                l_r / self.capacity,
                np.where(self.has_tw, self.t, 0.0),
                np.where(self.has_l, d_r, 0.0),
                self.is_open.astype(np.float64),
            ],
            axis=1,
        )

    def step(self, actions, check: bool = True) -> None:
        a = np.asarray(actions, dtype=np.int64)
        ar = self.rows
        if check:
            allowed = self.mask()
            if not allowed[ar, a].all():
                bad = np.flatnonzero(~allowed[ar, a])
                raise ContractViolation(f"masked actions in rows {bad.tolist()}")
        active = ~self.done
        self.actions.append(a.copy())
        self.active.append(active.copy())
        to_depot = active & (a == 0)
        to_cust = active & (a != 0)

        d = self.dist[ar, self.last, a]
        self.cost += np.where(to_cust, d, 0.0)
        self.cost += np.where(to_depot & ~self.is_open, d, 0.0)

        if to_cust.any():
            idx = np.flatnonzero(to_cust)
            ac = a[idx]
            t_new = np.maximum(self.t[idx] + d[idx] / self.speed[idx], self.early[idx, ac]) + self.service[idx, ac]
            dem = self.demand[idx, ac]
            self.t[idx] = t_new
            self.delivered[idx] += np.maximum(dem, 0.0)
            self.collected[idx] += np.maximum(-dem, 0.0)
            self.route_dist[idx] += d[idx]
            self.route_len[idx] += 1
            self.visited[idx, ac] = True
            self.last[idx] = ac
        if to_depot.any():
            idx = np.flatnonzero(to_depot)
            self.t[idx] = np.where(self.has_tw[idx], self.early[idx, 0], 0.0)
            self.delivered[idx] = 0.0
            self.collected[idx] = 0.0
            self.route_dist[idx] = 0.0
            self.route_len[idx] = 0
            self.last[idx] = 0

        newly_done = active & self.visited[:, 1:].all(axis=1)
        # close the final route
        closing = newly_done & ~self.is_open
        self.cost += np.where(closing, self.dist[ar, self.last, 0], 0.0)
        self.done = self.done | newly_done

    @property
    def all_done(self) -> bool:
        return bool(self.done.all())

    def solutions(self) -> list[Solution]:
        if not self.actions:
            return [Solution([]) for _ in range(self.B)]
        acts = np.stack(self.actions, axis=1)
        act = np.stack(self.active, axis=1)
        return [Solution.from_giant_tour([0, *acts[b][act[b]], 0]) for b in range(self.B)]
