"""Security situational awareness for IoT networks.

Threat propagation is modeled as a stochastic colored Petri net. Each threat
subnet is solved as an attacker/defender Markov game, and the per-threat
values are aggregated into one security-situation curve.
"""

from .game import GameConfig, GameState, initial_state, solve
from .net import (
    Asset,
    Connection,
    ScpnNet,
    ThreatToken,
    Vulnerability,
    build_net,
    enumerate_attack_paths,
    fire_step,
    threat_subnet,
)
from .scenario import ScenarioDoc, builtin_fixtures, parse_scenario, serialize_scenario
from .ssa import aggregate, compare, normalize, situation_series

__version__ = "0.1.0"

__all__ = [
    "Asset",
    "Connection",
    "GameConfig",
    "GameState",
    "ScenarioDoc",
    "ScpnNet",
    "ThreatToken",
    "Vulnerability",
    "aggregate",
    "build_net",
    "builtin_fixtures",
    "compare",
    "enumerate_attack_paths",
    "fire_step",
    "initial_state",
    "normalize",
    "parse_scenario",
    "serialize_scenario",
    "situation_series",
    "solve",
    "threat_subnet",
]
