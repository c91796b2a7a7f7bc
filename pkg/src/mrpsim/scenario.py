"""Scenario documents, batch execution, telemetry CSV and run summaries.

Scenario files are flat ``key = value`` text, one key per line, ``#`` starts
a comment. Vectors are whitespace- or comma-separated, optionally wrapped in
brackets. Recognised keys::

    name                    run label (defaults to the file stem)
    inertia.diag            3 reals, principal inertias [kg m^2]
    initial.phi_deg         principal angle [deg]      } one of these two forms
    initial.axis            3 reals, rotation axis      }
    initial.sigma           3 reals, initial MRP        }
    initial.omega           3 reals, body rates [rad/s]
    gain.mode               paper | explicit | pd
    gain.matrix             18 reals, row-major 3x6 K   (explicit)
    gain.k1, gain.k2        3 (diagonal) or 9 (row-major) reals  (pd)
    gain.saturation         optional torque limit [N m]
    tau                     measurement delay [s]
    strategy                none | point_current | point_delayed | hysteretic
    epsilon                 layer thickness (hysteretic)
    trigger                 level | edge  (point rules, default level)
    integrator.sample_rate  Hz, default 1000
    integrator.horizon      s, default 60
    blowup_bound            |sigma| abort level, default 100
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from mrpsim.attitude import PrincipalRotation, as_mrp, mrp_from_principal
from mrpsim.controller import GainMatrix, compose_gain, paper_gain
from mrpsim.dde import IntegratorConfig, SwitchEvent, TrajectoryRecord, simulate
from mrpsim.dynamics import InertiaModel, pack_state
from mrpsim.errors import MrpSimError, ParseError, ValidationError
from mrpsim.switching import ChatterMetrics, SwitchStrategy, Variant, chattering_metrics

TELEMETRY_COLUMNS = ("t", "s1", "s2", "s3", "w1", "w2", "w3", "sigma_norm", "u1", "u2", "u3", "active_set")
EVENT_COLUMNS = ("t", "norm_before", "norm_after", "strategy")

SETTLING_THRESHOLD = 1e-2
CHATTER_WINDOW = 1.0

BUNDLED = (
    "fig2_no_delay",
    "fig3_delay_point_current",
    "fig45_delay_point_delayed",
    "fig6_delay_no_switch",
    "fig7_delay_hysteretic",
)

_KNOWN_KEYS = {
    "name", "inertia.diag", "initial.phi_deg", "initial.axis", "initial.sigma", "initial.omega",
    "gain.mode", "gain.matrix", "gain.k1", "gain.k2", "gain.saturation", "tau", "strategy",
    "epsilon", "trigger", "integrator.sample_rate", "integrator.horizon", "blowup_bound",
}


@dataclass(frozen=True)
class Scenario:
    name: str
    inertia: InertiaModel
    initial_attitude: PrincipalRotation | np.ndarray
    initial_omega: np.ndarray
    gain: GainMatrix
    strategy: SwitchStrategy
    integrator: IntegratorConfig
    blowup_bound: float = 100.0
    gain_mode: str = "paper"

    @property
    def tau(self) -> float:
        return self.integrator.tau

    @property
    def initial_sigma(self) -> np.ndarray:
        if isinstance(self.initial_attitude, PrincipalRotation):
            return mrp_from_principal(self.initial_attitude)
        return np.asarray(self.initial_attitude, dtype=float)

    @property
    def x0(self) -> np.ndarray:
        return pack_state(self.initial_sigma, self.initial_omega)

    def with_horizon(self, horizon: float) -> "Scenario":
        cfg = IntegratorConfig(self.integrator.sample_rate, horizon, self.integrator.tau)
        return replace(self, integrator=cfg)


def _tokenize(text: str) -> dict[str, tuple[int, str]]:
    entries: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError(f"line {lineno}: missing key before '='")
        if not value:
            raise ParseError(f"line {lineno}: key {key!r} has no value")
        if key in entries:
            raise ParseError(f"line {lineno}: duplicate key {key!r} (first set on line {entries[key][0]})")
        entries[key] = (lineno, value)
    return entries


class _Doc:
    def __init__(self, entries):
        self.entries = entries

    def __contains__(self, key):
        return key in self.entries

    def text(self, key, default=None):
        if key not in self.entries:
            return default
        return self.entries[key][1]

    def real(self, key, default=None):
        if key not in self.entries:
            return default
        lineno, value = self.entries[key]
        try:
            out = float(value)
        except ValueError:
            raise ParseError(f"line {lineno}: key {key!r} expects a number, got {value!r}") from None
        if not math.isfinite(out):
            raise ValidationError(f"key {key!r} must be finite")
        return out

    def vector(self, key, sizes):
        lineno, value = self.entries[key]
        parts = value.strip("[]()").replace(",", " ").split()
        try:
            vec = np.array([float(p) for p in parts])
        except ValueError:
            raise ParseError(f"line {lineno}: key {key!r} expects numbers, got {value!r}") from None
        if len(vec) not in sizes:
            want = " or ".join(str(s) for s in sizes)
            raise ParseError(f"line {lineno}: key {key!r} expects {want} values, got {len(vec)}")
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"key {key!r} must be finite")
        return vec


def _gain_block(vec: np.ndarray) -> np.ndarray:
    return np.diag(vec) if len(vec) == 3 else vec.reshape(3, 3)


def parse_scenario(text: str, default_name: str = "scenario") -> Scenario:
    doc = _Doc(_tokenize(text))
    unknown = sorted(set(doc.entries) - _KNOWN_KEYS)
    if unknown:
        key = unknown[0]
        raise ParseError(f"line {doc.entries[key][0]}: unknown key {key!r}")

    if "inertia.diag" not in doc:
        raise ValidationError("inertia.diag is required")
    try:
        inertia = InertiaModel(np.diag(doc.vector("inertia.diag", (3,))))
    except ValueError as exc:
        raise ValidationError(f"inertia.diag: {exc}") from None

    has_pr = "initial.phi_deg" in doc or "initial.axis" in doc
    has_sigma = "initial.sigma" in doc
    if has_pr and has_sigma:
        raise ValidationError("give exactly one initial attitude form: initial.phi_deg/axis or initial.sigma, not both")
    if not has_pr and not has_sigma:
        raise ValidationError("missing initial attitude: give initial.phi_deg with initial.axis, or initial.sigma")
    if has_pr:
        if "initial.phi_deg" not in doc or "initial.axis" not in doc:
            raise ValidationError("initial.phi_deg and initial.axis must be given together")
        axis = doc.vector("initial.axis", (3,))
        if np.linalg.norm(axis) == 0:
            raise ValidationError("initial.axis must be non-zero")
        attitude = PrincipalRotation.from_degrees(doc.real("initial.phi_deg"), axis)
        try:
            mrp_from_principal(attitude)
        except MrpSimError as exc:
            raise ValidationError(f"initial attitude: {exc}") from None
    else:
        attitude = as_mrp(doc.vector("initial.sigma", (3,)))
    omega = doc.vector("initial.omega", (3,)) if "initial.omega" in doc else np.zeros(3)

    mode = doc.text("gain.mode", "paper")
    saturation = doc.real("gain.saturation")
    try:
        if mode == "paper":
            gain = paper_gain()
        elif mode == "explicit":
            if "gain.matrix" not in doc:
                raise ValidationError("gain.mode = explicit needs gain.matrix (18 values)")
            gain = GainMatrix(doc.vector("gain.matrix", (18,)).reshape(3, 6))
        elif mode == "pd":
            if "gain.k1" not in doc or "gain.k2" not in doc:
                raise ValidationError("gain.mode = pd needs gain.k1 and gain.k2")
            k1 = _gain_block(doc.vector("gain.k1", (3, 9)))
            k2 = _gain_block(doc.vector("gain.k2", (3, 9)))
            gain = compose_gain(k1, k2, inertia)
        else:
            raise ValidationError(f"gain.mode must be paper, explicit or pd, got {mode!r}")
        if saturation is not None:
            gain = GainMatrix(gain.K, saturation)
    except ValueError as exc:
        raise ValidationError(f"gain: {exc}") from None

    try:
        strategy = SwitchStrategy(
            Variant(doc.text("strategy", "none")),
            doc.real("epsilon"),
            doc.text("trigger", "level"),
        )
    except ValueError as exc:
        raise ValidationError(f"strategy: {exc}") from None

    integrator = IntegratorConfig(
        sample_rate=doc.real("integrator.sample_rate", 1000.0),
        horizon=doc.real("integrator.horizon", 60.0),
        tau=doc.real("tau", 0.0),
    )
    blowup = doc.real("blowup_bound", 100.0)
    if not blowup > 1.0:
        raise ValidationError("blowup_bound must exceed 1")

    return Scenario(
        name=doc.text("name", default_name),
        inertia=inertia,
        initial_attitude=attitude,
        initial_omega=omega,
        gain=gain,
        strategy=strategy,
        integrator=integrator,
        blowup_bound=blowup,
        gain_mode=mode,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return parse_scenario(text, default_name=path.stem)
    except (ParseError, ValidationError) as exc:
        raise type(exc)(f"{path}: {exc}") from None


def bundled_scenario_text(name: str) -> str:
    return resources.files("mrpsim").joinpath("scenarios", f"{name}.cfg").read_text()


def bundled_scenarios() -> list[Scenario]:
    return [parse_scenario(bundled_scenario_text(n), default_name=n) for n in BUNDLED]


def bundled_scenario(name: str) -> Scenario:
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return parse_scenario(bundled_scenario_text(name), default_name=name)


@dataclass
class RunSummary:
    name: str
    status: str
    final_sigma_norm: float
    final_omega_norm: float
    settling_time: float | None
    switch_count: int
    chattering: bool
    max_sigma_norm: float
    error: str | None = None


@dataclass
class RunResult:
    scenario: str
    trajectory: TrajectoryRecord | None
    metrics: ChatterMetrics | None
    summary: RunSummary
    extra: dict = field(default_factory=dict)


def settling_time(traj: TrajectoryRecord, threshold: float = SETTLING_THRESHOLD) -> float | None:
    """First time after which |x| stays below threshold; None if it never does."""
    above = np.nonzero(traj.x_norm >= threshold)[0]
    if len(above) == 0:
        return float(traj.t[0])
    last = above[-1]
    if last == len(traj.t) - 1:
        return None
    return float(traj.t[last + 1])


def summarize_run(traj: TrajectoryRecord, metrics: ChatterMetrics, name: str = "") -> RunSummary:
    return RunSummary(
        name=name,
        status=traj.status,
        final_sigma_norm=float(traj.sigma_norm[-1]),
        final_omega_norm=float(np.linalg.norm(traj.omega[-1])),
        settling_time=settling_time(traj),
        switch_count=len(traj.switch_events),
        chattering=metrics.alternation_persistent,
        max_sigma_norm=float(traj.sigma_norm.max()),
    )


def run_scenario(scenario: Scenario) -> RunResult:
    """Simulate one scenario, capturing divergence in the summary."""
    try:
        traj = simulate(scenario)
        error = None
    except MrpSimError as exc:
        traj = getattr(exc, "trajectory", None)
        error = f"{type(exc).__name__}: {exc}"
    if traj is None or len(traj) == 0:
        summary = RunSummary(scenario.name, "error", math.nan, math.nan, None, 0, False, math.nan, error)
        return RunResult(scenario.name, None, None, summary)
    metrics = chattering_metrics(traj, CHATTER_WINDOW)
    summary = summarize_run(traj, metrics, scenario.name)
    summary.error = error
    return RunResult(scenario.name, traj, metrics, summary)


def run_batch(scenarios, parallelism: int = 1) -> list[RunResult]:
    """Run scenarios independently; results come back in input order."""
    scenarios = list(scenarios)
    if not scenarios:
        return []
    if parallelism <= 1 or len(scenarios) == 1:
        return [run_scenario(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=min(parallelism, len(scenarios))) as pool:
        return list(pool.map(run_scenario, scenarios))


def _fmt(v: float) -> str:
    # + 0.0 folds -0.0 into 0.0
    return f"{v + 0.0:.9g}"


def events_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_events{path.suffix or '.csv'}")


def write_trajectory_csv(traj: TrajectoryRecord, destination) -> tuple[Path, Path]:
    """Write telemetry to ``destination`` and switch events to ``<stem>_events.csv``."""
    dest = Path(destination)
    events = events_path_for(dest)
    try:
        with dest.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TELEMETRY_COLUMNS)
            active = traj.active_set
            for i in range(len(traj.t)):
                w.writerow(
                    [_fmt(traj.t[i])]
                    + [_fmt(v) for v in traj.sigma[i]]
                    + [_fmt(v) for v in traj.omega[i]]
                    + [_fmt(traj.sigma_norm[i])]
                    + [_fmt(v) for v in traj.u[i]]
                    + [active[i]]
                )
        with events.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(EVENT_COLUMNS)
            for e in traj.switch_events:
                w.writerow([_fmt(e.t), _fmt(e.norm_before), _fmt(e.norm_after), traj.strategy])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write telemetry: {exc.strerror}", str(exc.filename or dest)) from exc
    return dest, events


def read_trajectory_csv(path) -> TrajectoryRecord:
    """Load telemetry written by write_trajectory_csv (plus its events file, if present)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TELEMETRY_COLUMNS:
            raise ParseError(f"{path}: unexpected telemetry header {header}")
        rows = list(reader)
    num = np.array([[float(v) for v in r[:-1]] for r in rows]).reshape(-1, 11)
    shadow = np.array([r[-1] == "shadow" for r in rows], dtype=bool)
    events: list[SwitchEvent] = []
    strategy = "none"
    ev_path = events_path_for(path)
    if ev_path.exists():
        with ev_path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            for r in reader:
                strategy = r["strategy"]
                events.append(SwitchEvent(float(r["t"]), float(r["norm_before"]), float(r["norm_after"]), (), ()))
    dt = float(num[1, 0] - num[0, 0]) if len(num) > 1 else 1e-3
    return TrajectoryRecord(
        t=num[:, 0],
        sigma=num[:, 1:4],
        omega=num[:, 4:7],
        sigma_norm=num[:, 7],
        u=num[:, 8:11],
        shadow=shadow,
        monitored=np.full(len(num), np.nan),
        switch_events=events,
        strategy=strategy,
        dt=dt,
    )


def format_summary_table(results) -> str:
    head = f"{'scenario':<28} {'status':<14} {'switches':>8} {'chatter':>7} {'max|s|':>8} {'settle[s]':>9} {'final|s|':>10}"
    lines = [head, "-" * len(head)]
    for r in results:
        s = r.summary
        settle = "-" if s.settling_time is None else f"{s.settling_time:.3f}"
        lines.append(
            f"{s.name:<28} {s.status:<14} {s.switch_count:>8d} {('yes' if s.chattering else 'no'):>7} "
            f"{s.max_sigma_norm:>8.4f} {settle:>9} {s.final_sigma_norm:>10.3e}"
        )
    return "\n".join(lines)
