from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlkd.core import ALL_VARIANTS, CVRP, VRPB, VRPTW, Solution, evaluate, verify
from mtlkd.core.construct import construct, uniform_policy
from mtlkd.data import (
    DatasetFormatError,
    ParseError,
    augment8,
    dihedral8,
    dumps_dataset,
    generate_dataset,
    generate_instance,
    instance_from_json,
    instance_to_json,
    load_dataset,
    loads_dataset,
    parse_cvrplib,
    parse_solomon,
    save_dataset,
)
from mtlkd.data.generate import make_rng

DATA = Path(__file__).parent / "data"


# ---------------------------------------------------------------- generation


def test_cvrp_capacity_and_demands():
    inst = generate_instance(CVRP, 100, 3)
    assert inst.capacity == 50
    assert set(np.unique(inst.demand[1:])) <= set(range(1, 10))
    assert inst.demand[0] == 0


def test_backhaul_count_is_twenty_percent():
    for seed in range(10):
        inst = generate_instance(VRPB, 10, seed)
        assert (inst.demand < 0).sum() == 2
        assert set(np.unique(-inst.demand[inst.demand < 0])) <= set(range(1, 10))


def test_generation_is_deterministic():
    a = generate_instance(VRPTW, 50, 9)
    b = generate_instance(VRPTW, 50, 9)
    assert a.equals(b)
    assert not a.equals(generate_instance(VRPTW, 50, 10))


def test_instance_index_matches_dataset_position():
    ds = generate_dataset(CVRP, 7, 5, 42)
    assert ds[3].equals(generate_instance(CVRP, 7, 42, index=3))


def test_n_zero_rejected():
    with pytest.raises(ValueError):
        generate_instance(CVRP, 0, 1)


def test_time_window_instance_fields():
    inst = generate_instance(VRPTW, 30, 1)
    assert list(inst.tw[0]) == [0.0, 3.0]
    assert np.all(inst.service_time[1:] == 0.2) and inst.service_time[0] == 0
    assert np.all(inst.tw[1:, 0] <= inst.tw[1:, 1])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), variant=st.sampled_from([v for v in ALL_VARIANTS if v.time_window]))
def test_singleton_routes_feasible(seed, variant):
    inst = generate_instance(variant, 25, seed)
    assert verify(inst, Solution([[c] for c in range(1, 26)])).feasible


def test_variants_share_coordinates_for_a_seed():
    insts = [generate_instance(v, 12, 5) for v in ALL_VARIANTS]
    for inst in insts[1:]:
        assert np.array_equal(inst.coords, insts[0].coords)


# ---------------------------------------------------------------- dataset files


def test_dataset_round_trip(tmp_path):
    for v in (CVRP, VRPTW, VRPB):
        ds = generate_dataset(v, 9, 6, 7)
        p = tmp_path / f"{v.name}.bin"
        save_dataset(p, ds)
        back = load_dataset(p)
        assert back.header == ds.header
        assert all(a.equals(b) for a, b in zip(ds.instances, back.instances))


def test_dataset_bytes_stable():
    a = dumps_dataset(generate_dataset(VRPTW, 200, 128, 3))
    b = dumps_dataset(generate_dataset(VRPTW, 200, 128, 3))
    assert a == b and len(a) == len(b)


def test_dataset_corruption_detected():
    buf = dumps_dataset(generate_dataset(CVRP, 5, 3, 1))
    with pytest.raises(DatasetFormatError):
        loads_dataset(b"XXXXXXXX" + buf[8:])
    with pytest.raises(DatasetFormatError):
        loads_dataset(buf[:-10])
    bad_version = buf[:8] + (99).to_bytes(4, "little") + buf[12:]
    with pytest.raises(DatasetFormatError):
        loads_dataset(bad_version)


def test_instance_json_round_trip():
    for v in (CVRP, VRPTW):
        inst = generate_instance(v, 6, 2)
        assert instance_from_json(instance_to_json(inst)).equals(inst)


# ---------------------------------------------------------------- parsers

MINI_CVRPLIB = """NAME : mini
TYPE : CVRP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 206
NODE_COORD_SECTION
1 0 0
2 30 40
3 60 0
4 0 80
DEMAND_SECTION
1 0
2 5
3 7
4 9
DEPOT_SECTION
1
-1
EOF
"""


def test_cvrplib_capacity_and_scale():
    inst = parse_cvrplib(MINI_CVRPLIB)
    assert inst.capacity == 206 and inst.n == 3 and inst.name == "mini"
    assert inst.scale == 80
    assert inst.distance(0, 1) * inst.scale == pytest.approx(50.0)
    assert inst.variant == CVRP


def test_cvrplib_missing_section_and_bad_demand():
    with pytest.raises(ParseError):
        parse_cvrplib(MINI_CVRPLIB.replace("DEPOT_SECTION\n1\n-1\n", ""))
    with pytest.raises(ParseError):
        parse_cvrplib(MINI_CVRPLIB.replace("3 7", "3 7.5"))
    with pytest.raises(ParseError):
        parse_cvrplib(MINI_CVRPLIB.replace("1 0\n2 5", "1 3\n2 5"))


def test_cvrplib_depot_not_first_is_reordered():
    text = MINI_CVRPLIB.replace("DEPOT_SECTION\n1\n", "DEPOT_SECTION\n3\n").replace("1 0\n", "1 4\n").replace("3 7", "3 0")
    inst = parse_cvrplib(text)
    assert inst.demand[0] == 0
    assert np.allclose(inst.coords[0] * inst.scale, [60, 0])


def test_x_n101_k25_header():
    inst = parse_cvrplib((DATA / "X-n101-k25.vrp").read_text())
    assert inst.n == 100 and inst.capacity == 206 and inst.name == "X-n101-k25"


MINI_SOLOMON = """C-mini

VEHICLE
NUMBER     CAPACITY
  3          200

CUSTOMER
CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME

    0      0         0          0          0        100          0
    1      3         4         10          0         50          5
    2      3         0         10         10         60          7
"""


def test_solomon_fields_and_known_tour():
    inst = parse_solomon(MINI_SOLOMON)
    assert inst.variant == VRPTW and inst.n == 2 and inst.capacity == 200
    assert inst.tw[0, 0] == 0
    assert inst.service_time[1] * inst.scale == pytest.approx(5)
    assert inst.service_time[2] * inst.scale == pytest.approx(7)
    # hand-computed: 0 -> 1 (5) -> 2 (4) -> 0 (3) = 12
    assert evaluate(inst, Solution([[1, 2]])) * inst.scale == pytest.approx(12.0)


def test_solomon_malformed_columns():
    with pytest.raises(ParseError):
        parse_solomon(MINI_SOLOMON.replace("    2      3         0         10         10         60          7", "    2 3 0 10 10 60"))


def test_r101_header():
    inst = parse_solomon((DATA / "R101.txt").read_text())
    assert inst.n == 100 and inst.name == "R101" and inst.tw[0, 0] == 0
    assert inst.tw[0, 1] * inst.scale == pytest.approx(230)


# ---------------------------------------------------------------- augmentation


def test_dihedral_images_of_a_point():
    imgs = {tuple(np.round(a[0], 12)) for a in dihedral8(np.array([[0.2, 0.7]]))}
    assert (0.7, 0.2) in imgs and (0.8, 0.7) in imgs
    assert len(imgs) == 8


def test_augment_first_is_original_and_objective_preserved():
    for v in ALL_VARIANTS:
        inst = generate_instance(v, 10, 4)
        sol, _ = construct(inst, uniform_policy, "sample", make_rng(1))
        imgs = augment8(inst)
        assert np.array_equal(imgs[0].coords, inst.coords)
        base = evaluate(inst, sol)
        for img in imgs:
            assert np.array_equal(img.demand, inst.demand) and np.array_equal(img.tw, inst.tw)
            assert evaluate(img, sol) == pytest.approx(base, abs=1e-9)
