"""Grid model and admittance matrix construction.

A network is an undirected, connected graph of buses joined by series
branches. Buses carry their nominal load and an optional shunt admittance
to neutral; branches carry a series impedance in per-unit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Bus",
    "Branch",
    "NetworkModel",
    "AdmittanceMatrix",
    "NetworkError",
    "build_admittance",
    "load_network",
    "save_network",
    "ieee33",
]


class NetworkError(ValueError):
    """Raised for malformed or structurally invalid network data."""


@dataclass(frozen=True)
class Bus:
    """A network node.

    ``nominal_p`` and ``nominal_q`` are the nominal *consumption* in MW and
    MVAr; the nodal injection is their negative.
    """

    id: int
    kind: str = "PQ"
    nominal_p: float = 0.0
    nominal_q: float = 0.0
    shunt_g: float = 0.0
    shunt_b: float = 0.0


@dataclass(frozen=True)
class Branch:
    """Series branch with per-unit impedance ``r + jx``."""

    from_bus: int
    to_bus: int
    r: float
    x: float

    @property
    def admittance(self) -> complex:
        return 1.0 / complex(self.r, self.x)


@dataclass(frozen=True)
class NetworkModel:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    base_power: float = 1.0
    base_voltage: float = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        validate_network(self)

    @property
    def n(self) -> int:
        return len(self.buses)

    @property
    def slack(self) -> int:
        """Zero-based index of the slack bus."""
        return next(i for i, b in enumerate(self.buses) if b.kind == "slack")

    def nominal_injections(self) -> tuple[np.ndarray, np.ndarray]:
        """Nominal per-unit injections ``(p, q)`` (negated loads)."""
        p = -np.array([b.nominal_p for b in self.buses]) / self.base_power
        q = -np.array([b.nominal_q for b in self.buses]) / self.base_power
        return p, q

    def adjacency(self) -> np.ndarray:
        """Boolean n-by-n adjacency matrix of the branch graph."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for br in self.branches:
            adj[br.from_bus - 1, br.to_bus - 1] = True
            adj[br.to_bus - 1, br.from_bus - 1] = True
        return adj


@dataclass(frozen=True)
class AdmittanceMatrix:
    """Complex admittance matrix stored as conductance ``g`` and susceptance ``b``."""

    g: np.ndarray
    b: np.ndarray = field(repr=False)

    @classmethod
    def from_complex(cls, y: np.ndarray) -> "AdmittanceMatrix":
        y = np.asarray(y, dtype=complex)
        return cls(np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag))

    @property
    def y(self) -> np.ndarray:
        return self.g + 1j * self.b

    @property
    def n(self) -> int:
        return self.g.shape[0]


def validate_network(net: NetworkModel) -> None:
    n = len(net.buses)
    if n == 0:
        raise NetworkError("network has no buses")
    ids = [b.id for b in net.buses]
    if ids != list(range(1, n + 1)):
        raise NetworkError(f"bus ids must be contiguous 1..{n} in order, got {ids}")
    slacks = [b.id for b in net.buses if b.kind == "slack"]
    if len(slacks) != 1:
        raise NetworkError(f"exactly one slack bus required, found {len(slacks)}")
    for b in net.buses:
        if b.kind not in ("slack", "PQ"):
            raise NetworkError(f"bus {b.id}: unknown kind {b.kind!r}")
        if b.shunt_g < 0:
            raise NetworkError(f"bus {b.id}: negative shunt conductance")
        if b.kind == "slack" and (b.nominal_p != 0 or b.nominal_q != 0):
            raise NetworkError(f"slack bus {b.id} must have zero nominal load")
    seen = set()
    for br in net.branches:
        if not (1 <= br.from_bus <= n and 1 <= br.to_bus <= n):
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): unknown bus")
        if br.from_bus == br.to_bus:
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): self loop")
        pair = frozenset((br.from_bus, br.to_bus))
        if pair in seen:
            raise NetworkError(f"duplicate branch ({br.from_bus},{br.to_bus})")
        seen.add(pair)
        if br.r <= 0:
            # g = r / (r^2 + x^2) must be strictly positive
            raise NetworkError(f"branch ({br.from_bus},{br.to_bus}): resistance must be > 0")
    _check_connected(n, net.branches)


def _check_connected(n: int, branches) -> None:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for br in branches:
        a, b = find(br.from_bus - 1), find(br.to_bus - 1)
        if a != b:
            parent[a] = b
    roots = {find(i) for i in range(n)}
    if len(roots) > 1:
        raise NetworkError(f"branch graph is disconnected ({len(roots)} components)")


def build_admittance(network: NetworkModel) -> AdmittanceMatrix:
    """Assemble the bus admittance matrix.

    Off-diagonal entries are the negated branch admittances, diagonal entries
    the sum of incident branch admittances plus the bus shunt. Both triangles
    are written from the same value so the result is exactly symmetric.
    """
    n = network.n
    y = np.zeros((n, n), dtype=complex)
    for br in network.branches:
        h, k = br.from_bus - 1, br.to_bus - 1
        yl = br.admittance
        y[h, k] -= yl
        y[k, h] = y[h, k]
    for h, bus in enumerate(network.buses):
        # row sum of the off-diagonal part, negated; keeps Laplacian rows at zero
        y[h, h] = complex(bus.shunt_g, bus.shunt_b) - (y[h].sum() - y[h, h])
    return AdmittanceMatrix.from_complex(y)


def _network_from_dict(doc: dict, source: str = "<dict>") -> NetworkModel:
    try:
        base_mva = float(doc["base_mva"])
        base_kv = float(doc["base_kv"])
        z_base = base_kv**2 / base_mva
        buses = [
            Bus(
                id=int(b["id"]),
                kind=str(b.get("kind", "PQ")),
                nominal_p=float(b.get("p_mw", 0.0)),
                nominal_q=float(b.get("q_mvar", 0.0)),
                shunt_g=float(b.get("shunt_g_pu", 0.0)),
                shunt_b=float(b.get("shunt_b_pu", 0.0)),
            )
            for b in doc["buses"]
        ]
        branches = [
            Branch(int(br["from"]), int(br["to"]), float(br["r_ohm"]) / z_base, float(br["x_ohm"]) / z_base)
            for br in doc["branches"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkError(f"{source}: malformed network description ({exc!r})") from exc
    buses.sort(key=lambda b: b.id)
    return NetworkModel(buses, branches, base_mva, base_kv, name=str(doc.get("name", "")))


def load_network(path) -> NetworkModel:
    """Read a network JSON file; impedances in ohms are converted to per-unit."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return _network_from_dict(doc, str(path))


def network_to_dict(net: NetworkModel) -> dict:
    z_base = net.base_voltage**2 / net.base_power
    return {
        "name": net.name,
        "base_mva": net.base_power,
        "base_kv": net.base_voltage,
        "buses": [
            {"id": b.id, "kind": b.kind, "p_mw": b.nominal_p, "q_mvar": b.nominal_q,
             "shunt_g_pu": b.shunt_g, "shunt_b_pu": b.shunt_b}
            for b in net.buses
        ],
        "branches": [
            {"from": br.from_bus, "to": br.to_bus,
             "r_ohm": _to_ohm(br.r, z_base), "x_ohm": _to_ohm(br.x, z_base)}
            for br in net.branches
        ],
    }


def _to_ohm(value_pu: float, z_base: float) -> float:
    # pick the float that divides back to exactly value_pu so save/load round-trips
    ohm = value_pu * z_base
    for direction in (np.inf, -np.inf):
        cand = ohm
        for _ in range(4):
            if cand / z_base == value_pu:
                return float(cand)
            cand = np.nextafter(cand, direction)
    return float(ohm)


def save_network(net: NetworkModel, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1), encoding="utf-8")


def ieee33() -> NetworkModel:
    """The Baran-Wu 33-bus radial feeder shipped with the package."""
    return load_network(Path(__file__).parent / "data" / "ieee33.json")
