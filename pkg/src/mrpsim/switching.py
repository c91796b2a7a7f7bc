"""Shadow-set switching rules and chattering metrics.

Four rules are supported:

* ``none``          never switch.
* ``point_current`` switch when the current norm |sigma(t)| reaches 1.
* ``point_delayed`` switch when the measured norm |sigma(t - tau)| reaches 1.
* ``hysteretic``    switch once each time the measured norm enters the layer
                    1 <= n <= 1 + epsilon from below, re-arming only after the
                    norm has left the layer again.

Point rules are level-triggered by default (fire on every sample with
n >= 1). With ``trigger="edge"`` they fire only on upward crossings of 1. For
the current norm the two are equivalent, because a switch always lands the
current norm below 1. For the delayed norm they differ: a switch is written
into the measurement stream and the level rule keeps reacting to it one delay
later, which is what sustains chattering.
"""
from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, field

import numpy as np

from mrpsim.attitude import shadow_map


class Crossing(enum.Enum):
    NONE = "none"
    UPWARD = "upward"
    DOWNWARD = "downward"


def detect_threshold_crossing(n_prev: float, n_curr: float, level: float = 1.0) -> Crossing:
    if n_prev < level <= n_curr:
        return Crossing.UPWARD
    if n_curr < level <= n_prev:
        return Crossing.DOWNWARD
    return Crossing.NONE


class Variant(str, enum.Enum):
    NO_SWITCH = "none"
    POINT_CURRENT = "point_current"
    POINT_DELAYED = "point_delayed"
    HYSTERETIC = "hysteretic"


@dataclass(frozen=True)
class SwitchStrategy:
    variant: Variant = Variant.NO_SWITCH
    epsilon: float | None = None
    trigger: str = "level"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.HYSTERETIC:
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError("hysteretic switching needs epsilon > 0")
        if self.trigger not in ("level", "edge"):
            raise ValueError(f"trigger must be 'level' or 'edge', got {self.trigger!r}")

    @property
    def uses_delayed_norm(self) -> bool:
        return self.variant in (Variant.POINT_DELAYED, Variant.HYSTERETIC)

    @property
    def label(self) -> str:
        if self.variant is Variant.HYSTERETIC:
            return f"hysteretic(eps={self.epsilon:g})"
        if self.variant in (Variant.POINT_CURRENT, Variant.POINT_DELAYED) and self.trigger == "edge":
            return f"{self.variant.value}(edge)"
        return self.variant.value


def monitored_norm(strategy: SwitchStrategy, current, delayed) -> float:
    """Norm of the MRP block the rule watches: delayed for measured-norm rules."""
    x = delayed if strategy.uses_delayed_norm else current
    x1, x2, x3 = x[0], x[1], x[2]
    return float(np.sqrt(x1 * x1 + x2 * x2 + x3 * x3))


@dataclass
class SwitchMachine:
    """Per-run switching state. One instance per simulation, never shared."""

    strategy: SwitchStrategy
    armed: bool = True
    monitored_prev: float | None = None
    switch_count: int = 0

    def decide(self, n: float) -> bool:
        """Feed the next monitored norm; True means switch the current MRP now."""
        prev = self.monitored_prev
        self.monitored_prev = n
        fire = False
        v = self.strategy.variant
        if v is Variant.NO_SWITCH:
            pass
        elif v is Variant.HYSTERETIC:
            upper = 1.0 + self.strategy.epsilon
            if self.armed:
                # entry from below, or a full traversal of the layer in one sample
                if prev is not None and prev < 1.0 and n >= 1.0:
                    fire = True
                    self.armed = False
            elif n < 1.0 or n > upper:
                self.armed = True
        elif self.strategy.trigger == "edge":
            fire = prev is not None and detect_threshold_crossing(prev, n) is Crossing.UPWARD
        else:
            fire = n >= 1.0
        if fire:
            self.switch_count += 1
        return fire


def switch_decision(machine: SwitchMachine, n_curr: float) -> str:
    return "switch" if machine.decide(n_curr) else "hold"


def apply_shadow_switch(x) -> np.ndarray:
    """Replace sigma by its shadow set; the rate block is left untouched."""
    x = np.array(x, dtype=float)
    x[:3] = shadow_map(x[:3])
    return x


def replay_switch_times(strategy: SwitchStrategy, times, norms) -> list[float]:
    """Run a recorded monitored-norm sequence through a fresh machine."""
    machine = SwitchMachine(strategy)
    return [t for t, n in zip(times, norms) if machine.decide(float(n))]


@dataclass
class ChatterMetrics:
    total_switches: int
    max_window_rate: int
    min_interswitch: float | None
    alternation_persistent: bool
    window: float = field(default=1.0, repr=False)


def chatter_metrics_from_times(event_times, t_start: float, t_end: float, window_w: float) -> ChatterMetrics:
    times = sorted(float(t) for t in event_times)
    if not times:
        return ChatterMetrics(0, 0, None, False, window_w)
    tol = 1e-9
    max_rate = max(bisect.bisect_right(times, t + window_w + tol) - i for i, t in enumerate(times))
    gaps = np.diff(times)
    min_gap = float(gaps.min()) if len(gaps) else None
    final_quarter = t_start + 0.75 * (t_end - t_start)
    persistent = times[-1] >= final_quarter - tol
    return ChatterMetrics(len(times), int(max_rate), min_gap, bool(persistent), window_w)


def chattering_metrics(traj, window_w: float = 1.0) -> ChatterMetrics:
    return chatter_metrics_from_times(
        [e.t for e in traj.switch_events], float(traj.t[0]), float(traj.t[-1]), window_w
    )
