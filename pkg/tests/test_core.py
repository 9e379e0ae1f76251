import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlkd.core import (
    ALL_VARIANTS,
    CVRP,
    OVRP,
    OVRPTW,
    VRPB,
    VRPL,
    VRPTW,
    BatchEnv,
    ContractViolation,
    Solution,
    StructureError,
    VariantSpec,
    construct,
    evaluate,
    feasibility_mask,
    initial_state,
    make_instance,
    nearest_policy,
    softmin_distance_policy,
    transition,
    uniform_policy,
    verify,
)
from mtlkd.core.state import DecodeState
from mtlkd.data.generate import generate_instance, make_rng
from mtlkd.search.oracle import enumerate_optimum

# ---------------------------------------------------------------- variants


def test_sixteen_distinct_variants_with_stable_names():
    names = [v.name for v in ALL_VARIANTS]
    assert len(set(names)) == 16
    assert VariantSpec(open=True, backhaul=True, duration_limit=True, time_window=True).name == "OVRPBLTW"
    assert CVRP.name == "CVRP" and OVRP.name == "OVRP" and VRPTW.name == "VRPTW"
    for v in ALL_VARIANTS:
        assert VariantSpec.from_name(v.name) == v
        assert VariantSpec.from_code(v.code) == v


def test_reversal_safe_only_for_closed_non_tw():
    safe = {v.name for v in ALL_VARIANTS if v.reversal_safe}
    assert safe == {"CVRP", "VRPB", "VRPL", "VRPBL"}


# ---------------------------------------------------------------- distance / evaluate


def test_distance_examples():
    inst = make_instance([[0, 0], [0.3, 0.4], [0.2, 0.7], [0.7, 0.2]], [1, 1, 1], CVRP)
    assert inst.distance(0, 1) == pytest.approx(0.5, abs=1e-12)
    assert inst.distance(2, 2) == 0.0
    assert inst.distance(2, 3) == pytest.approx(0.7071068, abs=1e-6)
    assert inst.distance(1, 3) == inst.distance(3, 1)
    with pytest.raises(IndexError):
        inst.distance(0, 4)


def test_evaluate_closed_and_open():
    coords = [[0, 0], [0.5, 0.5]]
    assert evaluate(make_instance(coords, [3], CVRP), Solution([[1]])) == pytest.approx(1.4142136, abs=1e-6)
    assert evaluate(make_instance(coords, [3], OVRP), Solution([[1]])) == pytest.approx(0.7071068, abs=1e-6)


def test_evaluate_rejects_bad_partition():
    inst = generate_instance(CVRP, 4, 0)
    with pytest.raises(StructureError):
        evaluate(inst, Solution([[1, 2], [3]]))
    with pytest.raises(StructureError):
        evaluate(inst, Solution([[1, 2], [3, 4, 1]]))


def test_evaluate_matches_enumeration_optimum_n8():
    inst = generate_instance(CVRP, 8, 11)
    sol, best = enumerate_optimum(inst)
    assert evaluate(inst, sol) == best
    # every other feasible single-route order is no better
    for perm in itertools.islice(itertools.permutations(range(1, 9)), 2000):
        s = Solution([perm])
        if verify(inst, s).feasible:
            assert evaluate(inst, s) >= best - 1e-12


def test_giant_tour_text_round_trip():
    s = Solution.from_text("0 3 1 0 2 0")
    assert s.routes == ((3, 1), (2,))
    assert s.to_text() == "0 3 1 0 2 0"


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), variant=st.sampled_from(ALL_VARIANTS))
def test_evaluate_invariant_to_route_order_and_closed_reversal(seed, variant):
    inst = generate_instance(variant, 9, seed)
    sol, _ = construct(inst, uniform_policy, "sample", make_rng(seed))
    base = evaluate(inst, sol)
    rng = np.random.default_rng(seed)
    perm = [sol.routes[i] for i in rng.permutation(len(sol.routes))]
    assert evaluate(inst, Solution(perm)) == base
    if not variant.open:
        rev = [r[::-1] for r in sol.routes]
        assert evaluate(inst, Solution(rev)) == base


def test_open_route_reversal_generally_changes_cost():
    inst = make_instance([[0, 0], [0.1, 0], [0.9, 0]], [1, 1], OVRP)
    assert evaluate(inst, Solution([[1, 2]])) != evaluate(inst, Solution([[2, 1]]))


# ---------------------------------------------------------------- verify


def test_verify_time_window_violation():
    tw = np.array([[0, 3], [0, 0.6], [0, 2.0]])
    inst = make_instance([[0, 0], [0.5, 0], [0.1, 0]], [1, 1], VRPTW, tw=tw, service_time=[0, 0.2, 0.2])
    rep = verify(inst, Solution([[2, 1]]))
    assert not rep.feasible and "time_window" in rep.codes
    assert verify(inst, Solution([[1], [2]])).feasible


def test_verify_duration_violation():
    short = make_instance([[0, 0], [0.8, 0], [0.8, 0.8]], [1, 1], VRPL)  # 0.8 + 0.8 + 1.131 < 3
    far = make_instance([[0, 0], [0.8, 0], [0.8, 0.8], [0.0, 0.8]], [1, 1, 1], VRPL)
    length = evaluate(far, Solution([[1, 2, 3]]))
    assert length == pytest.approx(3.2)
    rep = verify(far, Solution([[1, 2, 3]]))
    assert "duration" in rep.codes
    assert verify(short, Solution([[1, 2]])).feasible


def test_verify_capacity_and_backhaul_accumulators():
    inst = make_instance([[0, 0], [0.1, 0], [0.2, 0], [0.3, 0]], [30, 25, -40], VRPB)
    assert "capacity" in verify(inst, Solution([[1, 2, 3]])).codes
    # linehaul 30 and backhaul 40 each fit separately
    assert verify(inst, Solution([[1, 3], [2]])).feasible


def test_verify_never_raises_on_garbage():
    inst = generate_instance(CVRP, 3, 0)
    rep = verify(inst, Solution([[1, 1, 7]]))
    assert not rep.feasible and "partition" in rep.codes


def test_verify_accepts_greedy_solutions():
    for v in ALL_VARIANTS:
        inst = generate_instance(v, 12, 3)
        sol, _ = construct(inst, nearest_policy, "greedy")
        rep = verify(inst, sol)
        assert rep.feasible and rep.violations == []


# ---------------------------------------------------------------- state machine


def test_initial_state_examples():
    s = initial_state(generate_instance(CVRP, 5, 0))
    assert s.l_r == 50 and not s.visited.any() and s.last == 0 and s.t_c == 0
    assert initial_state(generate_instance(VRPL, 5, 0)).d_r == 3
    assert initial_state(generate_instance(OVRP, 5, 0)).o == 1


def test_transition_load_time_and_reset():
    inst = make_instance([[0, 0], [0.1, 0]], [7], CVRP)
    s = transition(inst, initial_state(inst), 1)
    assert s.l_r == 43 and s.done

    tw = np.array([[0, 3], [1.2, 2.0], [0, 2.5]])
    inst = make_instance([[0, 0], [0.9, 0], [0.1, 0]], [1, 1], VRPTW, tw=tw, service_time=[0, 0.2, 0.2])
    s = transition(inst, initial_state(inst), 1)
    assert s.t_c == pytest.approx(1.4)
    back = transition(inst, s, 0)
    assert back.l_r == 50 and back.t_c == 0 and back.d_r == 3 and back.delivered_acc == 0


def test_transition_rejects_masked_action():
    inst = make_instance([[0, 0], [0.1, 0], [0.2, 0]], [1, 1], CVRP)
    s0 = initial_state(inst)
    with pytest.raises(ContractViolation):
        transition(inst, s0, 0)  # empty route: depot masked
    s1 = transition(inst, s0, 1)
    with pytest.raises(ContractViolation):
        transition(inst, s1, 1)  # already visited


def test_mask_capacity_reason():
    inst = make_instance([[0, 0], [0.1, 0], [0.2, 0]], [47, 5], CVRP)
    s = transition(inst, initial_state(inst), 1)
    m = feasibility_mask(inst, s)
    assert not m.allowed[2] and m.reason_name(2) == "capacity"
    assert m.allowed[0]


def test_mask_return_window_closed_vs_open():
    tw = np.array([[0, 3], [2.7, 2.75]])
    for variant, allowed in ((VRPTW, False), (OVRPTW, True)):
        inst = make_instance([[0, 0], [0.4, 0]], [1], variant, tw=tw, service_time=[0, 0.2])
        m = feasibility_mask(inst, initial_state(inst))
        assert bool(m.allowed[1]) is allowed
        if not allowed:
            assert m.reason_name(1) == "return_window"


def test_mask_duration_reserves_return_leg_when_closed():
    coords = [[0, 0], [1.0, 0], [1.0, 0.9]]
    closed = make_instance(coords, [1, 1], VRPL)
    s = transition(closed, initial_state(closed), 1)
    # 1 + 0.9 + sqrt(1.81) > 3 closed; 1.9 <= 3 open
    assert feasibility_mask(closed, s).reason_name(2) == "duration"
    opened = make_instance(coords, [1, 1], VariantSpec(open=True, duration_limit=True))
    s = transition(opened, initial_state(opened), 1)
    assert feasibility_mask(opened, s).allowed[2]


def _rollout_states(inst, rng):
    state = initial_state(inst)
    while not state.done:
        yield state
        m = feasibility_mask(inst, state)
        state = transition(inst, state, int(rng.choice(np.flatnonzero(m.allowed))))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), variant=st.sampled_from(ALL_VARIANTS), n=st.integers(1, 15))
def test_state_invariants_and_non_stranding(seed, variant, n):
    inst = generate_instance(variant, n, seed)
    rng = np.random.default_rng(seed)
    prev: DecodeState | None = None
    for s in _rollout_states(inst, rng):
        assert feasibility_mask(inst, s).allowed.any()
        assert 0 <= s.delivered_acc <= inst.capacity and 0 <= s.collected_acc <= inst.capacity
        if prev is not None and s.last != 0 and prev.last != 0:
            assert s.t_c >= prev.t_c
        prev = s


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), variant=st.sampled_from(ALL_VARIANTS))
def test_mask_and_verify_agree_on_replay(seed, variant):
    inst = generate_instance(variant, 10, seed)
    sol, _ = construct(inst, uniform_policy, "sample", make_rng(seed))
    assert verify(inst, sol).feasible
    state = initial_state(inst)
    for a in sol.giant_tour()[1:-1]:
        assert feasibility_mask(inst, state).allowed[a]
        state = transition(inst, state, a)
    assert state.done


def test_single_route_violation_found_by_both():
    # verify-infeasible routes hit a masked action when replayed
    tw = np.array([[0, 3], [0, 0.6], [0, 2.0]])
    inst = make_instance([[0, 0], [0.5, 0], [0.1, 0]], [1, 1], VRPTW, tw=tw, service_time=[0, 0.2, 0.2])
    state = transition(inst, initial_state(inst), 2)
    assert not feasibility_mask(inst, state).allowed[1]


# ---------------------------------------------------------------- construct


def test_uniform_rollouts_feasible_n20():
    rng = make_rng(5)
    for k in range(1000):
        v = ALL_VARIANTS[k % 16]
        inst = generate_instance(v, 20, 77, index=k // 16)
        sol, trace = construct(inst, uniform_policy, "sample", rng)
        assert verify(inst, sol).feasible
        assert len(trace) == len(sol.giant_tour()) - 2


def test_nearest_on_single_customer():
    inst = make_instance([[0, 0], [0.4, 0.1]], [3], CVRP)
    sol, _ = construct(inst, nearest_policy, "greedy")
    assert sol.routes == ((1,),)


def _handwritten_nearest_neighbor(inst):
    """Nearest feasible node from the current one; the depot competes once the route is non-empty."""
    load, last, route, routes, left = 0, 0, [], [], set(range(1, inst.n + 1))
    while left:
        cands = [(math.dist(inst.coords[last], inst.coords[c]), c) for c in sorted(left) if load + inst.demand[c] <= inst.capacity]
        if route:
            cands.append((math.dist(inst.coords[last], inst.coords[0]), 0))
        _, j = min(cands)
        if j == 0:
            routes.append(route)
            route, load, last = [], 0, 0
            continue
        route.append(j)
        load += inst.demand[j]
        last = j
        left.remove(j)
    routes.append(route)
    return Solution(routes)


def test_greedy_softmin_equals_nearest_neighbor():
    for seed in range(30):
        inst = generate_instance(CVRP, 6, seed)
        sol, _ = construct(inst, softmin_distance_policy, "greedy")
        assert sol == _handwritten_nearest_neighbor(inst)


def test_construct_rejects_mass_on_masked_node():
    inst = generate_instance(CVRP, 4, 0)

    def bad(instance, state):
        p = np.zeros(instance.n + 1)
        p[0] = 1.0  # depot is masked at the start
        return p

    with pytest.raises(ContractViolation):
        construct(inst, bad)


def test_greedy_ties_break_to_lowest_index():
    inst = generate_instance(CVRP, 5, 0)

    def flat(instance, state):
        return uniform_policy(instance, state)

    sol, _ = construct(inst, flat, "greedy")
    assert sol.routes[0][0] == 1


# ---------------------------------------------------------------- batched env


@pytest.mark.parametrize("variant", ALL_VARIANTS, ids=lambda v: v.name)
def test_batch_env_matches_scalar_state_machine(variant):
    insts = [generate_instance(variant, n, 3, index=n) for n in (3, 7, 5)]
    env = BatchEnv(insts)
    states = [initial_state(i) for i in insts]
    rng = np.random.default_rng(0)
    while not env.all_done:
        mask = env.mask()
        actions = np.zeros(env.B, dtype=int)
        for b, (inst, s) in enumerate(zip(insts, states)):
            if s.done:
                assert mask[b, 0] and mask[b].sum() == 1
                continue
            m = feasibility_mask(inst, s).allowed
            assert np.array_equal(mask[b, : inst.n + 1], m)
            assert not mask[b, inst.n + 1 :].any()
            actions[b] = rng.choice(np.flatnonzero(m))
            states[b] = transition(inst, s, actions[b])
        env.step(actions)
    for inst, sol, c in zip(insts, env.solutions(), env.cost):
        assert verify(inst, sol).feasible
        assert c == pytest.approx(evaluate(inst, sol), abs=1e-12)
