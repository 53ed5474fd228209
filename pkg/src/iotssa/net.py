"""Stochastic colored Petri net over IoT assets.

Places are assets, token colors are threat types, and each directed
connection carries one transition per threat that can exploit the target.
All values are immutable; operations return new nets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DanglingEndpointError,
    DuplicateIdError,
    RangeError,
    UnknownPlaceError,
    UnknownThreatError,
)

MAX_TOKENS = 3
LEVELS = range(1, 6)


def _check_level(name: str, value: int) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value not in LEVELS:
        raise RangeError(name, value, "integer 1-5")


@dataclass(frozen=True)
class Vulnerability:
    vul_id: str
    impact: float
    exploitable_by: frozenset = frozenset()
    cvss_base: float | None = None
    description: str = ""

    def __post_init__(self):
        if not 0 <= self.impact <= 10:
            raise RangeError(f"{self.vul_id}.impact", self.impact, "0-10")
        if self.cvss_base is not None and not 0 <= self.cvss_base <= 10:
            raise RangeError(f"{self.vul_id}.cvss_base", self.cvss_base, "0-10")
        object.__setattr__(self, "exploitable_by", frozenset(self.exploitable_by))


@dataclass(frozen=True)
class Asset:
    id: str
    name: str
    asset_level: int
    vulnerabilities: tuple[Vulnerability, ...] = ()

    def __post_init__(self):
        _check_level(f"{self.id}.asset_level", self.asset_level)
        object.__setattr__(self, "vulnerabilities", tuple(self.vulnerabilities))

    def exploitable_by(self, threat_id: str) -> list[Vulnerability]:
        return [v for v in self.vulnerabilities if threat_id in v.exploitable_by]

    def max_impact(self, threat_id: str) -> float:
        return max((v.impact for v in self.exploitable_by(threat_id)), default=0.0)


@dataclass(frozen=True)
class ThreatToken:
    threat_id: str
    color: str = "red"


@dataclass(frozen=True)
class Connection:
    source: str
    target: str
    path_level: int
    exploitability: int

    def __post_init__(self):
        _check_level(f"{self.key_str}.path_level", self.path_level)
        _check_level(f"{self.key_str}.exploitability", self.exploitability)
        if self.source == self.target:
            raise RangeError(f"{self.key_str}", self.source, "source must differ from target")

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.target)

    @property
    def key_str(self) -> str:
        return f"{self.source}->{self.target}"

    @property
    def firing_probability(self) -> float:
        return self.exploitability / 5


@dataclass(frozen=True)
class Place:
    asset: Asset
    # (threat_id, multiplicity) pairs, sorted, multiplicity > 0
    tokens: tuple[tuple[str, int], ...] = ()

    @property
    def id(self) -> str:
        return self.asset.id

    def count(self, threat_id: str) -> int:
        return dict(self.tokens).get(threat_id, 0)

    def with_count(self, threat_id: str, n: int) -> Place:
        counts = dict(self.tokens)
        n = min(n, MAX_TOKENS)
        if n > 0:
            counts[threat_id] = n
        else:
            counts.pop(threat_id, None)
        return replace(self, tokens=tuple(sorted(counts.items())))


@dataclass(frozen=True)
class Transition:
    connection: Connection
    threat_id: str
    firing_probability: float

    def __post_init__(self):
        if not 0 <= self.firing_probability <= 1:
            raise RangeError("firing_probability", self.firing_probability, "0-1")


@dataclass(frozen=True)
class ScpnNet:
    places: tuple[Place, ...]
    connections: tuple[Connection, ...]
    transitions: tuple[Transition, ...]
    threats: tuple[ThreatToken, ...]

    @cached_property
    def place_index(self) -> dict[str, Place]:
        return {p.id: p for p in self.places}

    @cached_property
    def threat_ids(self) -> tuple[str, ...]:
        return tuple(t.threat_id for t in self.threats)

    def place(self, place_id: str) -> Place:
        try:
            return self.place_index[place_id]
        except KeyError:
            raise UnknownPlaceError(place_id) from None

    def require_threat(self, threat_id: str) -> None:
        if threat_id not in self.threat_ids:
            raise UnknownThreatError(threat_id)

    def infected(self, threat_id: str) -> list[str]:
        return [p.id for p in self.places if p.count(threat_id) > 0]

    def marking(self) -> dict[str, dict[str, int]]:
        """Token counts as ``{place_id: {threat_id: n}}``, omitting empty places."""
        return {p.id: dict(p.tokens) for p in self.places if p.tokens}


@dataclass(frozen=True)
class ThreatSubnet:
    threat_id: str
    nodes: tuple[str, ...]
    paths: tuple[Connection, ...] = field(default=())


def build_net(
    assets: Iterable[Asset],
    connections: Iterable[Connection],
    threats: Iterable[ThreatToken],
    initial_infections: Mapping[str, Iterable[str]] | None = None,
) -> ScpnNet:
    assets = sorted(assets, key=lambda a: a.id)
    connections = sorted(connections, key=lambda c: c.key)
    threats = sorted(threats, key=lambda t: t.threat_id)

    seen: set[str] = set()
    for a in assets:
        if a.id in seen:
            raise DuplicateIdError(a.id)
        seen.add(a.id)
    threat_ids: set[str] = set()
    for t in threats:
        if t.threat_id in threat_ids:
            raise DuplicateIdError(t.threat_id)
        threat_ids.add(t.threat_id)
    conn_keys: set[tuple[str, str]] = set()
    for c in connections:
        for end in c.key:
            if end not in seen:
                raise DanglingEndpointError(end)
        if c.key in conn_keys:
            raise DuplicateIdError(c.key_str)
        conn_keys.add(c.key)

    tokens: dict[str, dict[str, int]] = {}
    for threat_id, place_ids in sorted((initial_infections or {}).items()):
        if threat_id not in threat_ids:
            raise UnknownThreatError(threat_id)
        for pid in place_ids:
            if pid not in seen:
                raise UnknownPlaceError(pid)
            tokens.setdefault(pid, {})[threat_id] = 1

    places = tuple(
        Place(a, tuple(sorted(tokens.get(a.id, {}).items()))) for a in assets
    )
    by_id = {a.id: a for a in assets}
    transitions = tuple(
        Transition(c, t.threat_id, c.firing_probability)
        for c in connections
        for t in threats
        if by_id[c.target].exploitable_by(t.threat_id)
    )
    return ScpnNet(places, tuple(connections), transitions, tuple(threats))


def threat_subnet(net: ScpnNet, threat_id: str) -> ThreatSubnet:
    net.require_threat(threat_id)
    nodes = sorted(
        p.id
        for p in net.places
        if p.count(threat_id) > 0 or p.asset.exploitable_by(threat_id)
    )
    members = set(nodes)
    paths = tuple(
        c for c in net.connections if c.source in members and c.target in members
    )
    return ThreatSubnet(threat_id, tuple(nodes), paths)


def enumerate_attack_paths(
    net: ScpnNet, threat_id: str, entry: str, target: str
) -> list[list[Connection]]:
    """All simple directed paths from ``entry`` to ``target`` inside the threat subnet.

    ``entry == target`` yields a single empty path. Results are ordered by
    their node sequence.
    """
    net.place(entry)
    net.place(target)
    sub = threat_subnet(net, threat_id)
    if entry == target:
        return [[]]
    out_edges: dict[str, list[Connection]] = {}
    for c in sub.paths:
        out_edges.setdefault(c.source, []).append(c)

    found: list[list[Connection]] = []
    trail: list[Connection] = []
    visited = {entry}

    def dfs(node: str) -> None:
        for c in out_edges.get(node, ()):
            if c.target in visited:
                continue
            trail.append(c)
            if c.target == target:
                found.append(list(trail))
            else:
                visited.add(c.target)
                dfs(c.target)
                visited.discard(c.target)
            trail.pop()

    dfs(entry)
    found.sort(key=path_nodes)
    return found


def path_nodes(path: list[Connection], entry: str | None = None) -> list[str]:
    if not path:
        return [entry] if entry is not None else []
    return [path[0].source] + [c.target for c in path]


def step_rng(rng_seed: int, step_index: int, *extra: int) -> np.random.Generator:
    """Generator keyed on (seed, step, ...) so every step draws an independent stream."""
    return np.random.default_rng([rng_seed, step_index, *extra])


def enabled_transitions(net: ScpnNet) -> list[Transition]:
    return [
        t for t in net.transitions if net.place(t.connection.source).count(t.threat_id) > 0
    ]


def fire_step(net: ScpnNet, rng_seed: int, step_index: int) -> ScpnNet:
    """One Monte-Carlo epoch: every enabled transition fires independently.

    Enablement is evaluated on the marking at the start of the step. Firing
    copies a token to the target; the source keeps its own.
    """
    rng = step_rng(rng_seed, step_index)
    enabled = enabled_transitions(net)
    draws = rng.random(len(enabled))
    places = dict(net.place_index)
    for t, u in zip(enabled, draws):
        if u < t.firing_probability:
            tgt = places[t.connection.target]
            places[tgt.id] = tgt.with_count(t.threat_id, tgt.count(t.threat_id) + 1)
    return replace(net, places=tuple(places[p.id] for p in net.places))
