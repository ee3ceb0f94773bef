"""Analytic blind-period simulation of sufficiency under four drift regimes.

Day by day, freshness decays as ``exp(-lambda * d)``, completeness follows a
schedule (linear by default), and reliability / representativeness decay
multiplicatively at per-drift daily rates. The composite is recomputed with
the actual-mode gate at every step.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .config import DRIFT_TYPES, Config, SimulatorSettings
from .engine import DimensionScores, classify_status, readiness_gate, weighted_sum


def linear_completeness(start: float = 1.0, slope: float = 0.005) -> Callable[[int], float]:
    def schedule(day: int) -> float:
        return min(1.0, max(0.0, start - slope * day))

    return schedule


@dataclass(frozen=True)
class SimulationSpec:
    drift_type: str = "none"
    horizon_days: int = 180
    initial: DimensionScores = DimensionScores(1.0, 1.0, 0.133, 1.0)
    lam: float = 0.02
    completeness_schedule: Callable[[int], float] = field(default_factory=linear_completeness)
    decay_r: float = 1.0
    decay_p: float = 1.0

    def __post_init__(self) -> None:
        if self.drift_type not in DRIFT_TYPES:
            raise ValueError(f"unknown drift type {self.drift_type!r}")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        for name in ("decay_r", "decay_p"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")

    @classmethod
    def from_config(cls, drift_type: str, config: Config, horizon_days: int | None = None) -> "SimulationSpec":
        sim: SimulatorSettings = config.simulator
        decay_r, decay_p = sim.decay(drift_type)
        return cls(
            drift_type=drift_type,
            horizon_days=horizon_days or sim.horizon_days,
            initial=DimensionScores(sim.initial_c, 1.0, sim.initial_r, sim.initial_p),
            lam=config.assessment.freshness_lambda,
            completeness_schedule=linear_completeness(sim.initial_c, sim.completeness_slope),
            decay_r=decay_r,
            decay_p=decay_p,
        )


@dataclass(frozen=True)
class SimulationStep:
    day: int
    dims: DimensionScores
    gate: float
    score: float
    status: str


@dataclass(frozen=True)
class SimulationTrajectory:
    drift_type: str
    steps: tuple[SimulationStep, ...]
    crossing_days: dict[float, int | None] = field(default_factory=dict)

    def score_at(self, day: int) -> float:
        return self.steps[day - 1].score

    @property
    def scores(self) -> list[float]:
        return [s.score for s in self.steps]


def simulate(spec: SimulationSpec, config: Config | None = None, thresholds: Sequence[float] = (0.8, 0.5)) -> SimulationTrajectory:
    config = config or Config()
    gate_cfg = config.gate
    steps = []
    for day in range(1, spec.horizon_days + 1):
        dims = DimensionScores(
            completeness=spec.completeness_schedule(day),
            freshness=math.exp(-spec.lam * day),
            reliability=spec.initial.reliability * spec.decay_r**day,
            representativeness=spec.initial.representativeness * spec.decay_p**day,
        )
        gate = readiness_gate(dims.completeness, dims.reliability, gate_cfg.tau_c, gate_cfg.tau_r)
        score = gate * weighted_sum(dims, config.weights)
        steps.append(SimulationStep(day, dims, gate, score, classify_status(score, config.status)))
    traj = SimulationTrajectory(spec.drift_type, tuple(steps))
    traj.crossing_days.update({th: threshold_crossing(traj, th) for th in thresholds})
    return traj


def threshold_crossing(trajectory: SimulationTrajectory, threshold: float) -> int | None:
    """First day with ``S < threshold``, or ``None`` if it never happens."""
    if not trajectory.steps:
        raise ValueError("empty trajectory")
    for step in trajectory.steps:
        if step.score < threshold:
            return step.day
    return None


def simulate_all(config: Config | None = None, horizon_days: int | None = None) -> dict[str, SimulationTrajectory]:
    config = config or Config()
    return {
        kind: simulate(SimulationSpec.from_config(kind, config, horizon_days), config)
        for kind in DRIFT_TYPES
    }


def trajectory_table(trajectory: SimulationTrajectory) -> str:
    """Tab-separated export, one row per day."""
    buf = io.StringIO()
    buf.write("day\tC\tF\tR\tP\tA\tS\tstatus\n")
    for s in trajectory.steps:
        d = s.dims
        buf.write(
            f"{s.day}\t{d.completeness:.6f}\t{d.freshness:.6f}\t{d.reliability:.6f}\t"
            f"{d.representativeness:.6f}\t{s.gate:.6f}\t{s.score:.6f}\t{s.status}\n"
        )
    return buf.getvalue()
