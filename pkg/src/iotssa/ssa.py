"""Security-situation curves: per-threat game values folded into one trend line."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyThreatSetError, HorizonMismatchError, InvalidRadixError, RangeError
from .game import (
    GameConfig,
    GameState,
    Idle,
    Solution,
    apply_defender,
    initial_state,
    solve,
    transition,
)
from .net import ScpnNet, step_rng

MODES = ("expectation", "montecarlo")
INFECTION_THRESHOLD = 0.5


def aggregate(per_threat: Mapping[str, float], radix: float = 10.0) -> float:
    """``log_B(sum(B**v))`` over all threats, shifted by the max exponent to stay finite."""
    if not radix > 1 or not math.isfinite(radix):
        raise InvalidRadixError(f"radix must be a finite number > 1, got {radix!r}")
    values = list(per_threat.values())
    if not values:
        raise EmptyThreatSetError("aggregate needs at least one threat")
    top = max(values)
    ln_b = math.log(radix)
    total = math.fsum(math.exp((v - top) * ln_b) for v in values)
    return top + math.log(total) / ln_b


def normalize(series: Sequence[float]) -> list[float]:
    if len(series) == 0:
        raise ValueError("cannot normalize an empty series")
    lo, hi = min(series), max(series)
    if hi == lo:
        return [0.0] * len(series)
    span = hi - lo
    return [(x - lo) / span for x in series]


@dataclass(frozen=True)
class SituationPoint:
    tau: int
    per_threat: dict[str, float]
    aggregate: float
    normalized: float = 0.0


@dataclass(frozen=True)
class SituationSeries:
    scenario_id: str
    radix: float
    points: tuple[SituationPoint, ...]
    threat_ids: tuple[str, ...] = field(default=())

    @property
    def aggregates(self) -> list[float]:
        return [p.aggregate for p in self.points]

    @property
    def normalized(self) -> list[float]:
        return [p.normalized for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(["tau", *self.threat_ids, "aggregate", "normalized"]) + "\n")
        for p in self.points:
            cells = [str(p.tau)]
            cells += [f"{p.per_threat[t]:.6f}" for t in self.threat_ids]
            cells += [f"{p.aggregate:.6f}", f"{p.normalized:.6f}"]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


class _Rollout:
    """Receding-horizon play of one threat; solutions are shared across epochs and trials."""

    def __init__(self, cfg: GameConfig):
        self.cfg = cfg
        self.cache: dict[tuple, Solution] = {}

    def solve(self, s: GameState) -> Solution:
        key = s.canonical
        if key not in self.cache:
            self.cache[key] = solve(s, self.cfg)
        return self.cache[key]

    def actions(self, s: GameState):
        return self.solve(s).root_actions(s, self.cfg.horizon)


def advance_expected(s: GameState, attacker, defender) -> GameState:
    """Deterministic epoch: defender acts, spread lands only if it is at least even odds."""
    mid = replace(apply_defender(s, defender), tau=s.tau + 1)
    if isinstance(attacker, Idle):
        return mid
    successors = transition(s, attacker, defender)
    if len(successors) == 1:
        return successors[0][0]
    hit, p = successors[0]
    return hit if p >= INFECTION_THRESHOLD else mid


def advance_sampled(s: GameState, attacker, defender, u: float) -> GameState:
    acc = 0.0
    successors = transition(s, attacker, defender)
    for nxt, p in successors:
        acc += p
        if u < acc:
            return nxt
    return successors[-1][0]


def situation_series(
    net: ScpnNet,
    cfg: GameConfig | None = None,
    radix: float = 10.0,
    *,
    mode: str = "expectation",
    trials: int = 200,
    seed: int = 0,
    scenario_id: str = "",
) -> SituationSeries:
    cfg = cfg or GameConfig()
    if mode not in MODES:
        raise RangeError("mode", mode, " | ".join(MODES))
    if trials < 1:
        raise RangeError("trials", trials, ">= 1")
    if not net.threats:
        raise EmptyThreatSetError("net has no threats")
    aggregate({"_": 0.0}, radix)  # radix check before any solving

    horizon = cfg.horizon
    threat_ids = net.threat_ids
    curves: dict[str, list[float]] = {}
    for k, tid in enumerate(threat_ids):
        roll = _Rollout(cfg)
        start = initial_state(net, tid)
        if mode == "expectation":
            curves[tid] = _expected_curve(roll, start, horizon)
        else:
            runs = [
                _sampled_curve(roll, start, horizon, seed, r, k) for r in range(trials)
            ]
            curves[tid] = list(np.mean(runs, axis=0))

    raw = []
    for tau in range(horizon + 1):
        per = {tid: float(curves[tid][tau]) for tid in threat_ids}
        raw.append(SituationPoint(tau, per, aggregate(per, radix)))
    norm = normalize([p.aggregate for p in raw])
    points = tuple(replace(p, normalized=x) for p, x in zip(raw, norm))
    return SituationSeries(scenario_id, radix, points, threat_ids)


def _expected_curve(roll: _Rollout, s: GameState, horizon: int) -> list[float]:
    out = []
    for _ in range(horizon + 1):
        out.append(roll.solve(s).value)
        s = advance_expected(s, *roll.actions(s))
    return out


def _sampled_curve(
    roll: _Rollout, s: GameState, horizon: int, seed: int, trial: int, threat_index: int
) -> list[float]:
    out = []
    for tau in range(horizon + 1):
        out.append(roll.solve(s).value)
        u = step_rng(seed, tau, trial, threat_index).random()
        s = advance_sampled(s, *roll.actions(s), u)
    return out


# -- comparison -------------------------------------------------------------


def time_to_half_peak(values: Sequence[float]) -> int | None:
    """First epoch at or above half the curve's own maximum; None if it never rises above zero."""
    peak = max(values)
    if peak <= 0:
        return None
    half = peak / 2
    return next(t for t, v in enumerate(values) if v >= half)


@dataclass(frozen=True)
class SeriesSummary:
    scenario_id: str
    peak: float
    time_to_half_peak: int | None
    auc: float

    @classmethod
    def of(cls, series: SituationSeries) -> SeriesSummary:
        vals = series.aggregates
        return cls(
            series.scenario_id,
            max(vals),
            time_to_half_peak(vals),
            float(np.trapezoid(vals)) if len(vals) > 1 else 0.0,
        )


@dataclass(frozen=True)
class ComparisonReport:
    a: SeriesSummary
    b: SeriesSummary
    faster: str | None
    higher_impact: str | None

    @property
    def verdict(self) -> str:
        if self.faster is None and self.higher_impact is None:
            return "equal"
        return f"faster: {self.faster or 'tie'}; higher impact: {self.higher_impact or 'tie'}"

    @property
    def peak_delta(self) -> float:
        return self.b.peak - self.a.peak

    @property
    def auc_delta(self) -> float:
        return self.b.auc - self.a.auc

    @property
    def half_peak_delta(self) -> int | None:
        if self.a.time_to_half_peak is None or self.b.time_to_half_peak is None:
            return None if self.a.time_to_half_peak != self.b.time_to_half_peak else 0
        return self.b.time_to_half_peak - self.a.time_to_half_peak

    def to_text(self) -> str:
        def fmt_t(t):
            return "never" if t is None else str(t)

        lines = ["scenario,peak,time_to_half_peak,auc"]
        for s in (self.a, self.b):
            lines.append(f"{s.scenario_id},{s.peak:.6f},{fmt_t(s.time_to_half_peak)},{s.auc:.6f}")
        delta_t = self.half_peak_delta
        lines.append(
            f"delta,{self.peak_delta:.6f},{'n/a' if delta_t is None else delta_t},{self.auc_delta:.6f}"
        )
        lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines) + "\n"


def compare(a: SituationSeries, b: SituationSeries) -> ComparisonReport:
    if len(a.points) != len(b.points):
        raise HorizonMismatchError(
            f"horizons differ: {len(a.points) - 1} vs {len(b.points) - 1}"
        )
    sa, sb = SeriesSummary.of(a), SeriesSummary.of(b)
    name_a = a.scenario_id or "a"
    name_b = b.scenario_id or "b"

    ta = math.inf if sa.time_to_half_peak is None else sa.time_to_half_peak
    tb = math.inf if sb.time_to_half_peak is None else sb.time_to_half_peak
    faster = None if ta == tb else (name_a if ta < tb else name_b)
    higher = None if sa.peak == sb.peak else (name_a if sa.peak > sb.peak else name_b)
    return ComparisonReport(sa, sb, faster, higher)
