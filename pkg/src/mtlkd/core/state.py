"""Scalar decoding state machine and feasibility mask.

This is the reference implementation used by ``construct`` and the tests;
``mtlkd.core.batch`` holds the vectorised twin used in training loops.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .instance import EPS, Instance

# reason codes, ordered by precedence
OK, VISITED, CAPACITY, TIME_WINDOW, RETURN_WINDOW, DURATION, DEPOT_REPEAT = range(7)
REASON_NAMES = ("ok", "visited", "capacity", "time_window", "return_window", "duration", "depot_repeat")


class ContractViolation(RuntimeError):
    """An action or policy output broke the masking contract."""


@dataclass(frozen=True)
class DecodeState:
    visited: np.ndarray  # bool per node; depot entry is always False
    last: int
    l_r: float  # remaining load: capacity minus the larger accumulator
    t_c: float
    d_r: float  # remaining route distance budget
    o: int
    delivered_acc: float
    collected_acc: float
    route_dist: float  # distance travelled on the current route
    route_len: int  # customers served on the current route
    done: bool

    def dynamic_features(self, instance: Instance) -> np.ndarray:
        """D = (l_r / C, t_c, d_r, o) with inactive-constraint entries zeroed."""
        v = instance.variant
        return np.array(
            [
                self.l_r / instance.capacity,
                self.t_c if v.time_window else 0.0,
                self.d_r if v.duration_limit else 0.0,
                float(self.o),
            ]
        )


@dataclass(frozen=True)
class FeasibilityMask:
    allowed: np.ndarray
    reason: np.ndarray

    def reason_name(self, node: int) -> str:
        return REASON_NAMES[int(self.reason[node])]


def initial_state(instance: Instance) -> DecodeState:
    visited = np.zeros(instance.n + 1, dtype=bool)
    return DecodeState(
        visited=visited,
        last=0,
        l_r=float(instance.capacity),
        t_c=float(instance.tw[0, 0]) if instance.variant.time_window else 0.0,
        d_r=float(instance.duration_limit),
        o=int(instance.variant.open),
        delivered_acc=0.0,
        collected_acc=0.0,
        route_dist=0.0,
        route_len=0,
        done=instance.n == 0,
    )


def feasibility_mask(instance: Instance, state: DecodeState) -> FeasibilityMask:
    v = instance.variant
    d_last = instance.dist[state.last]
    d_back = instance.dist[:, 0]
    dem = instance.demand
    reason = np.zeros(instance.n + 1, dtype=np.int8)

    cap_ok = np.where(
        dem > 0,
        state.delivered_acc + dem <= instance.capacity + EPS,
        state.collected_acc - dem <= instance.capacity + EPS,
    )
    start = np.maximum(state.t_c + d_last / instance.speed, instance.tw[:, 0])
    tw_ok = start <= instance.tw[:, 1] + EPS
    back_ok = start + instance.service_time + d_back / instance.speed <= instance.tw[0, 1] + EPS
    travel = state.route_dist + d_last
    if not v.open:
        travel = travel + d_back
    dur_ok = travel <= instance.duration_limit + EPS

    checks = [(state.visited, VISITED, True), (cap_ok, CAPACITY, False)]
    if v.time_window:
        checks.append((tw_ok, TIME_WINDOW, False))
        if not v.open:
            checks.append((back_ok, RETURN_WINDOW, False))
    if v.duration_limit:
        checks.append((dur_ok, DURATION, False))
    # apply in reverse so the highest-precedence reason wins
    for arr, code, bad_when in reversed(checks):
        bad = arr if bad_when else ~arr
        reason[bad] = code
    reason[0] = OK if (state.route_len > 0 and not state.done) else DEPOT_REPEAT
    allowed = reason == OK
    if state.done:
        allowed[:] = False
    return FeasibilityMask(allowed, reason)


def transition(instance: Instance, state: DecodeState, action: int) -> DecodeState:
    action = int(action)
    mask = feasibility_mask(instance, state)
    if not 0 <= action <= instance.n or not mask.allowed[action]:
        why = mask.reason_name(action) if 0 <= action <= instance.n else "out_of_range"
        raise ContractViolation(f"action {action} is masked ({why})")
    if action == 0:
        return replace(
            state,
            last=0,
            l_r=float(instance.capacity),
            t_c=float(instance.tw[0, 0]) if instance.variant.time_window else 0.0,
            d_r=float(instance.duration_limit),
            delivered_acc=0.0,
            collected_acc=0.0,
            route_dist=0.0,
            route_len=0,
        )
    dist = float(instance.dist[state.last, action])
    t_c = max(state.t_c + dist / instance.speed, float(instance.tw[action, 0])) + float(
        instance.service_time[action]
    )
    dem = int(instance.demand[action])
    delivered = state.delivered_acc + max(dem, 0)
    collected = state.collected_acc + max(-dem, 0)
    visited = state.visited.copy()
    visited[action] = True
    route_dist = state.route_dist + dist
    return replace(
        state,
        visited=visited,
        last=action,
        l_r=float(instance.capacity) - max(delivered, collected),
        t_c=t_c,
        d_r=float(instance.duration_limit) - route_dist,
        delivered_acc=delivered,
        collected_acc=collected,
        route_dist=route_dist,
        route_len=state.route_len + 1,
        done=bool(visited[1:].all()),
    )
