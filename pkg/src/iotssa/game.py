"""Attacker/defender Markov game played over one threat subnet.

The per-epoch reward is the attacker's damage plus the defender's reward,
and the defender's reward already contains the negated damage. The two
cancel, so what remains is the defender's mitigation gain. Values are
discounted over a finite horizon and solved by memoized backward recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Union

from .errors import IllegalActionError, RangeError, StateMismatchError
from .net import ScpnNet, threat_subnet


@dataclass(frozen=True)
class GameConfig:
    discount: float = 0.9
    horizon: int = 10
    restore_fraction: float = 0.5
    cut_penalty: float = 0.2
    removal_penalty: float = 0.6

    def __post_init__(self):
        if not 0 <= self.discount < 1:
            raise RangeError("discount", self.discount, "0 <= discount < 1")
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 1:
            raise RangeError("horizon", self.horizon, "integer >= 1")
        if not 0 <= self.restore_fraction <= 1:
            raise RangeError("restore_fraction", self.restore_fraction, "0-1")
        if self.cut_penalty < 0:
            raise RangeError("cut_penalty", self.cut_penalty, ">= 0")
        if self.removal_penalty < 0:
            raise RangeError("removal_penalty", self.removal_penalty, ">= 0")


@dataclass(frozen=True)
class NodeState:
    place_id: str
    asset_level: int
    infected: bool
    vulnerable: bool
    max_exploitable_impact: float
    removed: bool = False
    mitigated: bool = False

    @property
    def active(self) -> bool:
        """Infected and still on the network, so it can damage paths and spread."""
        return self.infected and not self.removed

    @property
    def exposed(self) -> bool:
        return self.vulnerable and not self.mitigated and not self.removed and not self.infected


@dataclass(frozen=True)
class PathState:
    source: str
    target: str
    path_level: int
    exploitability: int
    cut: bool = False

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.target)

    @property
    def probability(self) -> float:
        return 0.0 if self.cut else self.exploitability / 5


@dataclass(frozen=True)
class GameState:
    threat_id: str
    tau: int
    node_states: tuple[NodeState, ...]
    path_states: tuple[PathState, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "node_states", tuple(sorted(self.node_states, key=lambda n: n.place_id))
        )
        object.__setattr__(
            self, "path_states", tuple(sorted(self.path_states, key=lambda p: p.key))
        )

    def node(self, place_id: str) -> NodeState:
        for n in self.node_states:
            if n.place_id == place_id:
                return n
        raise KeyError(place_id)

    def path(self, key: tuple[str, str]) -> PathState:
        for p in self.path_states:
            if p.key == key:
                return p
        raise KeyError(key)

    @property
    def canonical(self) -> tuple:
        """Everything that determines future play; ``tau`` is excluded."""
        return (self.threat_id, self.node_states, self.path_states)

    def _with_node(self, place_id: str, **changes) -> GameState:
        nodes = tuple(
            replace(n, **changes) if n.place_id == place_id else n for n in self.node_states
        )
        return replace(self, node_states=nodes)

    def _with_path(self, key: tuple[str, str], **changes) -> GameState:
        paths = tuple(replace(p, **changes) if p.key == key else p for p in self.path_states)
        return replace(self, path_states=paths)


# -- actions ---------------------------------------------------------------


@dataclass(frozen=True)
class Idle:
    def __str__(self):
        return "idle"


@dataclass(frozen=True)
class Propagate:
    source: str
    target: str

    @property
    def key(self):
        return (self.source, self.target)

    def __str__(self):
        return f"propagate({self.source}->{self.target})"


@dataclass(frozen=True)
class FixVulnerability:
    place_id: str

    def __str__(self):
        return f"fix({self.place_id})"


@dataclass(frozen=True)
class CutPath:
    source: str
    target: str

    @property
    def key(self):
        return (self.source, self.target)

    def __str__(self):
        return f"cut({self.source}->{self.target})"


@dataclass(frozen=True)
class RemoveNode:
    place_id: str

    def __str__(self):
        return f"remove({self.place_id})"


AttackerAction = Union[Idle, Propagate]
DefenderAction = Union[Idle, FixVulnerability, CutPath, RemoveNode]
IDLE = Idle()


# -- construction ------------------------------------------------------------


def initial_state(net: ScpnNet, threat_id: str, tau: int = 0) -> GameState:
    sub = threat_subnet(net, threat_id)
    nodes = []
    for pid in sub.nodes:
        place = net.place(pid)
        nodes.append(
            NodeState(
                place_id=pid,
                asset_level=place.asset.asset_level,
                infected=place.count(threat_id) > 0,
                vulnerable=bool(place.asset.exploitable_by(threat_id)),
                max_exploitable_impact=place.asset.max_impact(threat_id),
            )
        )
    paths = [
        PathState(c.source, c.target, c.path_level, c.exploitability) for c in sub.paths
    ]
    return GameState(threat_id, tau, tuple(nodes), tuple(paths))


# -- rewards ---------------------------------------------------------------


def node_damage(n: NodeState) -> float:
    if n.infected and not n.removed and not n.mitigated:
        return n.asset_level * (n.max_exploitable_impact / 10)
    return 0.0


def path_damage(p: PathState, node_states) -> float:
    if p.cut:
        return 0.0
    for n in node_states:
        if n.place_id == p.source:
            return p.path_level * (p.exploitability / 5) if n.active else 0.0
    return 0.0


def attacker_reward(s: GameState) -> float:
    # path_damage is zero unless the source is infected, so summing over all
    # paths is the same as summing over paths incident to infected nodes,
    # with each path counted once.
    return sum(node_damage(n) for n in s.node_states) + sum(
        path_damage(p, s.node_states) for p in s.path_states
    )


def performance_cost(s: GameState, d: DefenderAction, cfg: GameConfig) -> float:
    if isinstance(d, CutPath):
        return cfg.cut_penalty * s.path(d.key).path_level
    if isinstance(d, RemoveNode):
        return cfg.removal_penalty * s.node(d.place_id).asset_level
    return 0.0


def strategy_variation(s: GameState, d: DefenderAction, cfg: GameConfig) -> float:
    after = apply_defender(s, d)
    removed = attacker_reward(s) - attacker_reward(after)
    return cfg.restore_fraction * removed - performance_cost(s, d, cfg)


def identify_defender_action(s_before: GameState, s_after: GameState) -> DefenderAction:
    """Recover the single defender action that turns ``s_before`` into ``s_after``."""
    target = s_after.canonical
    for d in legal_defender_actions(s_before):
        if apply_defender(s_before, d).canonical == target:
            return d
    raise StateMismatchError("s_after is not a one-action successor of s_before")


def defender_reward(
    s_before: GameState, s_after: GameState, cfg: GameConfig | None = None
) -> float:
    cfg = cfg or GameConfig()
    d = identify_defender_action(s_before, s_after)
    return -attacker_reward(s_before) + strategy_variation(s_before, d, cfg)


# -- actions and dynamics -----------------------------------------------------


def _propagation_enabled(s: GameState, key: tuple[str, str]) -> bool:
    p = s.path(key)
    return not p.cut and s.node(p.source).active and s.node(p.target).exposed


def legal_attacker_actions(s: GameState) -> list[AttackerAction]:
    acts: list[AttackerAction] = [IDLE]
    acts += [Propagate(*p.key) for p in s.path_states if _propagation_enabled(s, p.key)]
    return acts


def legal_defender_actions(s: GameState) -> list[DefenderAction]:
    removed = {n.place_id for n in s.node_states if n.removed}
    acts: list[DefenderAction] = [IDLE]
    acts += [
        FixVulnerability(n.place_id)
        for n in s.node_states
        if n.vulnerable and not n.mitigated and not n.removed
    ]
    acts += [
        CutPath(*p.key)
        for p in s.path_states
        if not p.cut and p.source not in removed and p.target not in removed
    ]
    acts += [RemoveNode(n.place_id) for n in s.node_states if not n.removed]
    return acts


def legal_actions(s: GameState) -> tuple[list[AttackerAction], list[DefenderAction]]:
    return legal_attacker_actions(s), legal_defender_actions(s)


def apply_defender(s: GameState, d: DefenderAction) -> GameState:
    if isinstance(d, FixVulnerability):
        return s._with_node(d.place_id, mitigated=True, vulnerable=False)
    if isinstance(d, CutPath):
        return s._with_path(d.key, cut=True)
    if isinstance(d, RemoveNode):
        return s._with_node(d.place_id, removed=True)
    return s


def transition(
    s: GameState, a: AttackerAction, d: DefenderAction
) -> list[tuple[GameState, float]]:
    """Successor distribution: the defender acts first, then the attacker's spread is rolled."""
    if a not in legal_attacker_actions(s):
        raise IllegalActionError(f"attacker action {a} is not legal")
    if d not in legal_defender_actions(s):
        raise IllegalActionError(f"defender action {d} is not legal")
    mid = replace(apply_defender(s, d), tau=s.tau + 1)
    if isinstance(a, Idle) or not _propagation_enabled(mid, a.key):
        return [(mid, 1.0)]
    p = mid.path(a.key).probability
    hit = mid._with_node(a.target, infected=True)
    if p >= 1.0:
        return [(hit, 1.0)]
    return [(hit, p), (mid, 1.0 - p)]


# -- solving ---------------------------------------------------------------


class Solution(NamedTuple):
    """Root value and the policies keyed by ``(canonical state, depth_remaining)``."""

    value: float
    attacker_policy: dict
    defender_policy: dict

    def root_actions(self, s: GameState, depth: int) -> tuple[AttackerAction, DefenderAction]:
        key = (s.canonical, depth)
        return self.attacker_policy.get(key, IDLE), self.defender_policy.get(key, IDLE)


def best_defender_action(s: GameState, cfg: GameConfig) -> tuple[DefenderAction, float]:
    """Defender's follower response: maximize its one-step reward, first action wins ties."""
    base = -attacker_reward(s)
    best, best_r = IDLE, None
    for d in legal_defender_actions(s):
        r = base + strategy_variation(s, d, cfg)
        if best_r is None or r > best_r:
            best, best_r = d, r
    return best, best_r


class _Solver:
    def __init__(self, cfg: GameConfig, memoize: bool = True):
        self.cfg = cfg
        self.memo: dict | None = {} if memoize else None
        self.attacker_policy: dict = {}
        self.defender_policy: dict = {}

    def value(self, s: GameState, depth: int) -> float:
        key = (s.canonical, depth)
        if self.memo is not None and key in self.memo:
            return self.memo[key]
        damage = attacker_reward(s)
        if depth == 0:
            v = damage + (-damage + strategy_variation(s, IDLE, self.cfg))
        else:
            d, d_reward = best_defender_action(s, self.cfg)
            immediate = damage + d_reward
            best_a, best_future = IDLE, None
            for a in legal_attacker_actions(s):
                future = sum(p * self.value(nxt, depth - 1) for nxt, p in transition(s, a, d))
                if best_future is None or future > best_future:
                    best_a, best_future = a, future
            v = immediate + self.cfg.discount * best_future
            self.attacker_policy[key] = best_a
            self.defender_policy[key] = d
        if self.memo is not None:
            self.memo[key] = v
        return v


def total_reward(
    s: GameState, cfg: GameConfig, depth_remaining: int, memoize: bool = True
) -> float:
    if depth_remaining < 0:
        raise RangeError("depth_remaining", depth_remaining, ">= 0")
    return _Solver(cfg, memoize).value(s, depth_remaining)


def solve(s: GameState, cfg: GameConfig, memoize: bool = True) -> Solution:
    """Worst-case value of ``s`` over ``cfg.horizon`` epochs.

    The attacker leads and picks the action with the largest discounted
    value; the defender follows with its best one-step response.
    """
    solver = _Solver(cfg, memoize)
    v = solver.value(s, cfg.horizon)
    return Solution(v, solver.attacker_policy, solver.defender_policy)
