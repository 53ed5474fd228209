"""Scenario files: YAML documents describing assets, paths, threats and run settings.

Grammar (all keys lower-case; ``?`` marks optional keys)::

    scenario_id: str
    threats: [str, ...]
    assets:
      - id: str
        name?: str
        asset_level: int 1-5
        vulnerabilities?:
          - vul_id: str
            impact: number 0-10
            exploitable_by: [threat id, ...]
            cvss_base?: number 0-10 | null
            description?: str
    connections?:
      - {source: asset id, target: asset id, path_level: int 1-5, exploitability: int 1-5}
    initial_infections?: {threat id: [asset id, ...]}
    game?: {discount: [0,1), horizon: int >= 1, restore_fraction: [0,1],
            cut_penalty: >= 0, removal_penalty: >= 0}
    ssa?: {radix: > 1, mode: expectation | montecarlo, trials: int >= 1, seed: int >= 0}

Parsing reports every problem found, each with the offending field path and
source line, rather than stopping at the first.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .errors import SsaError
from .game import GameConfig
from .net import Asset, Connection, ScpnNet, ThreatToken, Vulnerability, build_net
from .ssa import MODES

FIXTURE_NAMES = ("smart-home-scenario-1", "smart-home-scenario-2")
FIXTURES_ENV = "IOTSSA_FIXTURES_DIR"
PALETTE = ("red", "blue", "green", "orange", "purple", "brown", "black")


@dataclass(frozen=True)
class SsaSettings:
    radix: float = 10.0
    mode: str = "expectation"
    trials: int = 200
    seed: int = 0


@dataclass(frozen=True)
class ScenarioDoc:
    scenario_id: str
    assets: tuple[Asset, ...]
    connections: tuple[Connection, ...]
    threats: tuple[str, ...]
    initial_infections: dict[str, tuple[str, ...]] = field(default_factory=dict)
    game: GameConfig = GameConfig()
    ssa: SsaSettings = SsaSettings()

    def to_net(self) -> ScpnNet:
        tokens = [ThreatToken(t, PALETTE[i % len(PALETTE)]) for i, t in enumerate(self.threats)]
        return build_net(self.assets, self.connections, tokens, self.initial_infections)

    def asset(self, asset_id: str) -> Asset:
        return next(a for a in self.assets if a.id == asset_id)


# -- errors ---------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    kind: str  # SyntaxError | TypeError | MissingField | RangeError | DanglingReference | DuplicateId
    field: str
    line: int | None
    message: str

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.kind} at {self.field}: {self.message}"


class ScenarioError(SsaError):
    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}


class ScenarioSyntaxError(ScenarioError):
    def __init__(self, line: int | None, message: str):
        super().__init__([Issue("SyntaxError", "<document>", line, message)])
        self.line = line


class ScenarioValidationError(ScenarioError):
    pass


# -- parsing --------------------------------------------------------------


class _Reader:
    """Walks a composed YAML node tree, converting values and recording issues."""

    def __init__(self, loader: yaml.SafeLoader):
        self.loader = loader
        self.issues: list[Issue] = []

    def add(self, kind, path, node, message):
        line = node.start_mark.line + 1 if node is not None else None
        self.issues.append(Issue(kind, path, line, message))

    def mapping(self, node, path) -> dict | None:
        if not isinstance(node, yaml.MappingNode):
            self.add("TypeError", path, node, "expected a mapping")
            return None
        out = {}
        for k, v in node.value:
            key = self.construct(k) if isinstance(k, yaml.ScalarNode) else None
            if not isinstance(key, str):
                self.add("TypeError", path, k, "mapping keys must be strings")
                continue
            if key in out:
                self.add("DuplicateId", f"{path}.{key}", k, f"key {key!r} repeated")
            out[key] = v
        return out

    def sequence(self, node, path) -> list | None:
        if not isinstance(node, yaml.SequenceNode):
            self.add("TypeError", path, node, "expected a list")
            return None
        return list(node.value)

    def scalar(self, node, path):
        if not isinstance(node, yaml.ScalarNode):
            self.add("TypeError", path, node, "expected a scalar")
            return _BAD
        v = self.construct(node)
        if v is _BAD:
            self.add("TypeError", path, node, "unreadable value")
        return v

    def construct(self, node):
        try:
            return self.loader.construct_object(node)
        except yaml.YAMLError:
            return _BAD

    def string(self, node, path) -> str | None:
        v = self.scalar(node, path)
        if v is _BAD:
            return None
        if not isinstance(v, str):
            self.add("TypeError", path, node, f"expected a string, got {v!r}")
            return None
        return v

    def number(self, node, path, lo=None, hi=None, lo_open=False, hi_open=False, integer=False):
        v = self.scalar(node, path)
        if v is _BAD:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (
            integer and not isinstance(v, int)
        ):
            self.add("TypeError", path, node, f"expected {'an integer' if integer else 'a number'}, got {v!r}")
            return None
        if isinstance(v, float) and not math.isfinite(v):
            self.add("RangeError", path, node, f"{v!r} is not finite")
            return None
        bad = (
            (lo is not None and (v <= lo if lo_open else v < lo))
            or (hi is not None and (v >= hi if hi_open else v > hi))
        )
        if bad:
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            rng = f"{left}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{right}"
            self.add("RangeError", path, node, f"{v!r} outside {rng}")
            return None
        return v if integer else float(v)

    def strings(self, node, path) -> list[str] | None:
        items = self.sequence(node, path)
        if items is None:
            return None
        out = []
        for i, item in enumerate(items):
            s = self.string(item, f"{path}[{i}]")
            if s is not None:
                out.append((s, item))
        return out

    def require(self, m: dict, key, path, parent):
        if key not in m:
            self.add("MissingField", f"{path}.{key}" if path else key, parent, "required field missing")
            return None
        return m[key]

    def unknown_keys(self, m: dict, allowed, path):
        for k, v in m.items():
            if k not in allowed:
                self.add("TypeError", f"{path}.{k}" if path else k, v, "unknown field")


_BAD = object()


def parse_scenario(text: bytes | str) -> ScenarioDoc:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ScenarioSyntaxError(None, f"not valid UTF-8: {exc}") from None
    try:
        loader = yaml.SafeLoader(text)
    except yaml.reader.ReaderError as exc:
        line = text.count("\n", 0, exc.position) + 1
        raise ScenarioSyntaxError(line, f"{exc.reason} (character #x{exc.character:04x})") from None
    try:
        try:
            root = loader.get_single_node()
        except yaml.MarkedYAMLError as exc:
            mark = exc.problem_mark or exc.context_mark
            line = mark.line + 1 if mark else None
            raise ScenarioSyntaxError(line, exc.problem or str(exc)) from None
        except yaml.YAMLError as exc:
            raise ScenarioSyntaxError(None, str(exc)) from None
        if root is None:
            raise ScenarioSyntaxError(1, "empty document")
        reader = _Reader(loader)
        doc = _read_doc(reader, root)
    finally:
        loader.dispose()
    if reader.issues:
        raise ScenarioValidationError(reader.issues)
    return doc


def _read_doc(r: _Reader, root) -> ScenarioDoc | None:
    top = r.mapping(root, "<document>")
    if top is None:
        return None
    r.unknown_keys(
        top,
        {"scenario_id", "threats", "assets", "connections", "initial_infections", "game", "ssa"},
        "",
    )

    sid_node = r.require(top, "scenario_id", "", root)
    scenario_id = r.string(sid_node, "scenario_id") if sid_node is not None else None

    threats: list[str] = []
    t_node = r.require(top, "threats", "", root)
    if t_node is not None:
        for i, (tid, node) in enumerate(r.strings(t_node, "threats") or []):
            if tid in threats:
                r.add("DuplicateId", f"threats[{i}]", node, f"threat {tid!r} listed twice")
            else:
                threats.append(tid)

    assets, asset_ids = _read_assets(r, top, root, set(threats))
    connections = _read_connections(r, top.get("connections"), asset_ids)
    infections = _read_infections(r, top.get("initial_infections"), set(threats), asset_ids)
    game = _read_game(r, top.get("game"))
    ssa = _read_ssa(r, top.get("ssa"))

    if r.issues:
        return None
    return ScenarioDoc(
        scenario_id, tuple(assets), tuple(connections), tuple(threats), infections, game, ssa
    )


def _read_assets(r: _Reader, top, root, threats: set[str]) -> tuple[list[Asset], set[str]]:
    """Valid assets, plus every id seen so later references are not reported twice."""
    node = r.require(top, "assets", "", root)
    if node is None:
        return [], set()
    out: list[Asset] = []
    seen: set[str] = set()
    for i, item in enumerate(r.sequence(node, "assets") or []):
        path = f"assets[{i}]"
        m = r.mapping(item, path)
        if m is None:
            continue
        before = len(r.issues)
        id_node = r.require(m, "id", path, item)
        aid = r.string(id_node, f"{path}.id") if id_node is not None else None
        if aid is not None:
            path = f"assets[{aid}]"
            if aid in seen:
                r.add("DuplicateId", f"{path}.id", id_node, f"asset id {aid!r} repeated")
            seen.add(aid)
        r.unknown_keys(m, {"id", "name", "asset_level", "vulnerabilities"}, path)
        name = r.string(m["name"], f"{path}.name") if "name" in m else (aid or "")
        lvl_node = r.require(m, "asset_level", path, item)
        level = (
            r.number(lvl_node, f"{path}.asset_level", 1, 5, integer=True)
            if lvl_node is not None
            else None
        )
        vulns = _read_vulns(r, m.get("vulnerabilities"), f"{path}.vulnerabilities", threats)
        if len(r.issues) == before:
            out.append(Asset(aid, name, level, tuple(vulns)))
    return out, seen


def _read_vulns(r: _Reader, node, path, threats: set[str]) -> list[Vulnerability]:
    if node is None:
        return []
    out = []
    seen: set[str] = set()
    for i, item in enumerate(r.sequence(node, path) or []):
        vpath = f"{path}[{i}]"
        m = r.mapping(item, vpath)
        if m is None:
            continue
        before = len(r.issues)
        id_node = r.require(m, "vul_id", vpath, item)
        vid = r.string(id_node, f"{vpath}.vul_id") if id_node is not None else None
        if vid is not None:
            vpath = f"{path}[{vid}]"
            if vid in seen:
                r.add("DuplicateId", f"{vpath}.vul_id", id_node, f"vulnerability {vid!r} repeated")
            seen.add(vid)
        r.unknown_keys(m, {"vul_id", "impact", "exploitable_by", "cvss_base", "description"}, vpath)
        imp_node = r.require(m, "impact", vpath, item)
        impact = r.number(imp_node, f"{vpath}.impact", 0, 10) if imp_node is not None else None
        by: list[str] = []
        if "exploitable_by" in m:
            for tid, tnode in r.strings(m["exploitable_by"], f"{vpath}.exploitable_by") or []:
                if tid not in threats:
                    r.add("DanglingReference", f"{vpath}.exploitable_by", tnode, f"unknown threat {tid!r}")
                by.append(tid)
        cvss = None
        if "cvss_base" in m and not _is_null(r, m["cvss_base"]):
            cvss = r.number(m["cvss_base"], f"{vpath}.cvss_base", 0, 10)
        desc = r.string(m["description"], f"{vpath}.description") if "description" in m else ""
        if len(r.issues) == before:
            out.append(Vulnerability(vid, impact, frozenset(by), cvss, desc))
    return out


def _is_null(r: _Reader, node) -> bool:
    return isinstance(node, yaml.ScalarNode) and r.construct(node) is None


def _read_connections(r: _Reader, node, asset_ids: set[str]) -> list[Connection]:
    if node is None:
        return []
    out = []
    seen: set[tuple[str, str]] = set()
    for i, item in enumerate(r.sequence(node, "connections") or []):
        path = f"connections[{i}]"
        m = r.mapping(item, path)
        if m is None:
            continue
        before = len(r.issues)
        ends = {}
        for key in ("source", "target"):
            n = r.require(m, key, path, item)
            ends[key] = r.string(n, f"{path}.{key}") if n is not None else None
        src, tgt = ends["source"], ends["target"]
        if src is not None and tgt is not None:
            path = f"connections[{src}->{tgt}]"
            for key, val in ends.items():
                if val not in asset_ids:
                    r.add("DanglingReference", f"{path}.{key}", m[key], f"unknown node {val!r}")
            if src == tgt:
                r.add("RangeError", path, item, "source and target must differ")
            if (src, tgt) in seen:
                r.add("DuplicateId", path, item, "connection repeated")
            seen.add((src, tgt))
        r.unknown_keys(m, {"source", "target", "path_level", "exploitability"}, path)
        nums = {}
        for key in ("path_level", "exploitability"):
            n = r.require(m, key, path, item)
            nums[key] = r.number(n, f"{path}.{key}", 1, 5, integer=True) if n is not None else None
        if len(r.issues) == before:
            out.append(Connection(src, tgt, nums["path_level"], nums["exploitability"]))
    return out


def _read_infections(r: _Reader, node, threats: set[str], asset_ids: set[str]):
    if node is None:
        return {}
    m = r.mapping(node, "initial_infections")
    if m is None:
        return {}
    out = {}
    for tid, v in m.items():
        path = f"initial_infections.{tid}"
        if tid not in threats:
            r.add("DanglingReference", path, v, f"unknown threat {tid!r}")
        ids = []
        for aid, anode in r.strings(v, path) or []:
            if aid not in asset_ids:
                r.add("DanglingReference", path, anode, f"unknown node {aid!r}")
            elif aid in ids:
                r.add("DuplicateId", path, anode, f"node {aid!r} listed twice")
            else:
                ids.append(aid)
        out[tid] = tuple(ids)
    return out


def _read_game(r: _Reader, node) -> GameConfig:
    if node is None:
        return GameConfig()
    m = r.mapping(node, "game")
    if m is None:
        return GameConfig()
    r.unknown_keys(m, {f.name for f in fields(GameConfig)}, "game")
    specs = {
        "discount": dict(lo=0, hi=1, hi_open=True),
        "horizon": dict(lo=1, integer=True),
        "restore_fraction": dict(lo=0, hi=1),
        "cut_penalty": dict(lo=0),
        "removal_penalty": dict(lo=0),
    }
    vals = {}
    for key, spec in specs.items():
        if key in m:
            v = r.number(m[key], f"game.{key}", **spec)
            if v is not None:
                vals[key] = v
    return GameConfig(**vals)


def _read_ssa(r: _Reader, node) -> SsaSettings:
    if node is None:
        return SsaSettings()
    m = r.mapping(node, "ssa")
    if m is None:
        return SsaSettings()
    r.unknown_keys(m, {f.name for f in fields(SsaSettings)}, "ssa")
    vals = {}
    if "radix" in m:
        v = r.number(m["radix"], "ssa.radix", lo=1, lo_open=True)
        if v is not None:
            vals["radix"] = v
    if "mode" in m:
        mode = r.string(m["mode"], "ssa.mode")
        if mode is not None and mode not in MODES:
            r.add("RangeError", "ssa.mode", m["mode"], f"{mode!r} not one of {', '.join(MODES)}")
        elif mode is not None:
            vals["mode"] = mode
    for key, lo in (("trials", 1), ("seed", 0)):
        if key in m:
            v = r.number(m[key], f"ssa.{key}", lo=lo, integer=True)
            if v is not None:
                vals[key] = v
    return SsaSettings(**vals)


# -- serialization ----------------------------------------------------------


def scenario_to_dict(doc: ScenarioDoc) -> dict:
    def vuln(v: Vulnerability) -> dict:
        return {
            "vul_id": v.vul_id,
            "impact": float(v.impact),
            "exploitable_by": sorted(v.exploitable_by),
            "cvss_base": None if v.cvss_base is None else float(v.cvss_base),
            "description": v.description,
        }

    return {
        "scenario_id": doc.scenario_id,
        "threats": list(doc.threats),
        "assets": [
            {
                "id": a.id,
                "name": a.name,
                "asset_level": a.asset_level,
                "vulnerabilities": [vuln(v) for v in a.vulnerabilities],
            }
            for a in doc.assets
        ],
        "connections": [
            {
                "source": c.source,
                "target": c.target,
                "path_level": c.path_level,
                "exploitability": c.exploitability,
            }
            for c in doc.connections
        ],
        "initial_infections": {t: list(ids) for t, ids in sorted(doc.initial_infections.items())},
        "game": {
            "discount": float(doc.game.discount),
            "horizon": doc.game.horizon,
            "restore_fraction": float(doc.game.restore_fraction),
            "cut_penalty": float(doc.game.cut_penalty),
            "removal_penalty": float(doc.game.removal_penalty),
        },
        "ssa": {
            "radix": float(doc.ssa.radix),
            "mode": doc.ssa.mode,
            "trials": doc.ssa.trials,
            "seed": doc.ssa.seed,
        },
    }


def serialize_scenario(doc: ScenarioDoc) -> bytes:
    text = yaml.safe_dump(
        scenario_to_dict(doc),
        sort_keys=False,
        allow_unicode=True,
        default_flow_style=False,
        width=1000,
    )
    return text.encode("utf-8")


# -- fixtures -------------------------------------------------------------


def _package_data() -> Path:
    return Path(str(resources.files("iotssa") / "data"))


def fixtures_dir() -> Path:
    override = os.environ.get(FIXTURES_ENV)
    return Path(override) if override else _package_data()


def builtin_fixtures() -> list[ScenarioDoc]:
    base = _package_data()
    return [parse_scenario((base / f"{name}.yaml").read_bytes()) for name in FIXTURE_NAMES]


class UnknownScenarioError(SsaError):
    def __init__(self, ref: str, searched: Path):
        super().__init__(f"no scenario file or fixture named {ref!r} (searched {searched})")
        self.ref = ref


def resolve_scenario(ref: str) -> ScenarioDoc:
    """Load a scenario from a file path, or by fixture name from the fixtures directory."""
    path = Path(ref)
    if path.suffix in (".yaml", ".yml") or path.is_file():
        return parse_scenario(path.read_bytes())
    base = fixtures_dir()
    candidate = base / f"{ref}.yaml"
    if not candidate.is_file():
        raise UnknownScenarioError(ref, base)
    return parse_scenario(candidate.read_bytes())
