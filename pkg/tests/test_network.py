import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridid.network import (
    Branch,
    Bus,
    NetworkError,
    NetworkModel,
    build_admittance,
    load_network,
    network_to_dict,
    save_network,
)

from conftest import radial, two_bus


def test_two_bus_matrix():
    y = build_admittance(two_bus(1 - 2j)).y
    np.testing.assert_allclose(y, [[1 - 2j, -1 + 2j], [-1 + 2j, 1 - 2j]], atol=1e-14)


def test_shunt_only_touches_diagonal():
    plain = build_admittance(two_bus(1 - 2j)).y
    shunted = build_admittance(two_bus(1 - 2j, shunt_b=0.1)).y
    assert shunted[0, 0] == pytest.approx(1 - 1.9j, abs=1e-14)
    mask = np.ones((2, 2), bool)
    mask[0, 0] = False
    assert np.array_equal(plain[mask], shunted[mask])


def test_ieee33_structure(net33, y33):
    assert net33.n == 33 and len(net33.branches) == 32
    off = y33 != 0
    np.fill_diagonal(off, False)
    # every nonzero off-diagonal entry is one of the 32 branches, seen from both sides
    assert off.sum() == 64
    assert np.array_equal(off, net33.adjacency())
    p0, q0 = net33.nominal_injections()
    assert -p0.sum() * net33.base_power == pytest.approx(3.715)
    assert -q0.sum() * net33.base_power == pytest.approx(2.3)
    assert (net33.base_power, net33.base_voltage) == (10.0, 12.66)
    assert net33.slack == 0


def test_ieee33_admittance_invariants(y33):
    g, b = y33.real, y33.imag
    assert np.array_equal(g, g.T) and np.array_equal(b, b.T)
    assert np.abs(g.sum(axis=1)).max() < 1e-12
    assert np.abs(b.sum(axis=1)).max() < 1e-12
    off = ~np.eye(33, dtype=bool)
    assert np.all(g[off] <= 0)


def test_ieee33_first_branch_per_unit(y33):
    # branch 1-2: 0.0922 + j0.0470 ohm on 12.66 kV / 10 MVA
    z = (0.0922 + 0.0470j) / (12.66**2 / 10)
    assert y33[0, 1] == pytest.approx(-1 / z, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_random_laplacian_properties(n, seed):
    y = build_admittance(radial(n, seed)).y
    assert np.array_equal(y, y.T)
    assert np.abs(y.sum(axis=1)).max() < 1e-12
    assert np.count_nonzero(y[~np.eye(n, dtype=bool)]) == 2 * (n - 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10_000))
def test_save_load_round_trip(tmp_path_factory, n, seed):
    net = radial(n, seed)
    path = tmp_path_factory.mktemp("net") / "net.json"
    save_network(net, path)
    assert load_network(path) == net


def _write(tmp_path, doc):
    path = tmp_path / "net.json"
    path.write_text(json.dumps(doc))
    return path


def _doc():
    return network_to_dict(two_bus())


def test_load_two_bus(tmp_path):
    net = load_network(_write(tmp_path, _doc()))
    assert net.n == 2
    assert build_admittance(net).y[0, 1] == pytest.approx(-(1 - 2j))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["branches"].append({"from": 2, "to": 1, "r_ohm": 1.0, "x_ohm": 1.0}), "duplicate"),
        (lambda d: d["branches"].append({"from": 2, "to": 2, "r_ohm": 1.0, "x_ohm": 1.0}), "self loop"),
        (lambda d: d["branches"][0].update(r_ohm=0.0), "resistance"),
        (lambda d: d["buses"][1].update(kind="slack"), "exactly one slack"),
        (lambda d: d["buses"][0].update(p_mw=1.0), "zero nominal load"),
        (lambda d: d["buses"][1].update(id=3), "contiguous"),
        (lambda d: d["buses"].append({"id": 3, "kind": "PQ"}), "disconnected"),
        (lambda d: d.pop("base_mva"), "malformed"),
    ],
)
def test_invalid_networks(tmp_path, mutate, message):
    doc = _doc()
    mutate(doc)
    with pytest.raises(NetworkError, match=message):
        load_network(_write(tmp_path, doc))


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "base_mva": 10,\n  oops\n}')
    with pytest.raises(NetworkError, match="line 3"):
        load_network(path)


def test_model_is_immutable(net33):
    with pytest.raises(Exception):
        net33.base_power = 1.0
    assert isinstance(net33.buses, tuple)


def test_direct_construction_validates():
    with pytest.raises(NetworkError):
        NetworkModel([Bus(1, "slack"), Bus(2)], [Branch(1, 2, -0.1, 0.2)])
