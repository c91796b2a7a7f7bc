"""Fixed-step integration of the delayed closed loop.

The controller sees a sampled measurement stream: integration runs at the
sample period dt, the torque is held constant over each step, and the delay
is a whole number of samples. Before t = 0 the history is the constant
initial function phi(theta) = x(0).

Per sample k (t = k dt) the loop does, in order:
    1. watch the rule's monitored norm and maybe switch sigma(t) to its shadow
    2. append the (possibly switched) state to history
    3. u = K x(t - tau) from history
    4. record the row, then RK4 over [t, t + dt] with u held

Past samples are never rewritten after a switch.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from mrpsim.controller import GainMatrix
from mrpsim.dynamics import InertiaModel, state_derivative
from mrpsim.errors import NonFiniteState, QueryTooOld, SingularMrp, ValidationError
from mrpsim.switching import (  # noqa: F401  (re-exported)
    Crossing,
    SwitchMachine,
    SwitchStrategy,
    detect_threshold_crossing,
)

SAMPLE_TOL = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size is locked to the measurement rate: dt = 1 / sample_rate."""

    sample_rate: float = 1000.0
    horizon: float = 60.0
    tau: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if not self.tau >= 0:
            raise ValidationError("tau must be non-negative")
        for name in ("tau", "horizon"):
            samples = getattr(self, name) * self.sample_rate
            if abs(samples - round(samples)) > SAMPLE_TOL * max(1.0, samples):
                raise ValidationError(
                    f"{name}={getattr(self, name)!r} is {samples!r} samples at "
                    f"{self.sample_rate:g} Hz; it must be a whole number of samples"
                )

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon * self.sample_rate))

    @property
    def delay_steps(self) -> int:
        return int(round(self.tau * self.sample_rate))


class HistoryBuffer:
    """Sampled past states x(k dt) over the last delay window.

    Holds at most delay_steps + 2 samples; older samples fall off the back.
    """

    def __init__(self, initial_state, dt: float, tau: float):
        self.initial_state = np.array(initial_state, dtype=float)
        self.dt = dt
        self.tau = tau
        self.capacity = int(round(tau / dt)) + 2
        self._samples: deque = deque(maxlen=self.capacity)
        self._newest = -1

    def __len__(self):
        return len(self._samples)

    @property
    def newest_time(self) -> float:
        return self._newest * self.dt

    def append(self, x) -> None:
        self._samples.append(x)
        self._newest += 1

    def at_index(self, k: int):
        """Sample k (time k dt); negative k returns the initial function."""
        if k < 0:
            return self.initial_state
        offset = self._newest - k
        if offset < 0:
            raise ValueError(f"sample {k} is in the future (newest is {self._newest})")
        if offset >= len(self._samples):
            raise QueryTooOld(f"sample {k} has been discarded")
        return self._samples[-1 - offset]

    def lookup(self, t_query: float) -> np.ndarray:
        if t_query < 0:
            return self.initial_state.copy()
        newest_t = self.newest_time
        if t_query > newest_t + SAMPLE_TOL * self.dt:
            raise ValueError(f"t={t_query!r} is newer than the newest sample {newest_t!r}")
        if t_query < newest_t - self.tau - self.dt - SAMPLE_TOL * self.dt:
            raise QueryTooOld(f"t={t_query!r} is older than the retained window")
        pos = t_query / self.dt
        k = round(pos)
        if abs(pos - k) <= SAMPLE_TOL:
            return np.array(self.at_index(int(k)), dtype=float)
        k0 = math.floor(pos)
        frac = pos - k0
        xa = np.asarray(self.at_index(k0), dtype=float)
        xb = np.asarray(self.at_index(k0 + 1), dtype=float)
        return (1.0 - frac) * xa + frac * xb


def history_lookup(h: HistoryBuffer, t_query: float) -> np.ndarray:
    return h.lookup(t_query)


@dataclass(frozen=True)
class SwitchEvent:
    t: float
    norm_before: float
    norm_after: float
    sigma_before: tuple
    sigma_after: tuple


@dataclass
class TrajectoryRecord:
    t: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    sigma_norm: np.ndarray
    u: np.ndarray
    shadow: np.ndarray  # True where the active set is the shadow set
    monitored: np.ndarray  # norm the switching rule saw at each sample
    switch_events: list[SwitchEvent] = field(default_factory=list)
    strategy: str = "none"
    dt: float = 1e-3
    status: str = "ok"

    def __len__(self):
        return len(self.t)

    @property
    def active_set(self) -> np.ndarray:
        return np.where(self.shadow, "shadow", "standard")

    @property
    def x(self) -> np.ndarray:
        return np.hstack((self.sigma, 0.25 * self.omega))

    @property
    def x_norm(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)


def _make_rhs(inertia: InertiaModel):
    """Scalar-float right-hand side of xdot = A x + B u + f(x)."""
    (j11, j12, j13), (j21, j22, j23), (j31, j32, j33) = inertia.J.tolist()
    (i11, i12, i13), (i21, i22, i23), (i31, i32, i33) = inertia.J_inv.tolist()

    def rhs(s1, s2, s3, y1, y2, y3, u1, u2, u3):
        ss = s1 * s1 + s2 * s2 + s3 * s3
        sy = s1 * y1 + s2 * y2 + s3 * y3
        a = 1.0 - ss
        # sigma' = B(sigma) y with y = omega / 4
        d1 = a * y1 + 2.0 * (s2 * y3 - s3 * y2) + 2.0 * s1 * sy
        d2 = a * y2 + 2.0 * (s3 * y1 - s1 * y3) + 2.0 * s2 * sy
        d3 = a * y3 + 2.0 * (s1 * y2 - s2 * y1) + 2.0 * s3 * sy
        # y' = J^-1 (u/4 - 4 y x (J y))
        h1 = j11 * y1 + j12 * y2 + j13 * y3
        h2 = j21 * y1 + j22 * y2 + j23 * y3
        h3 = j31 * y1 + j32 * y2 + j33 * y3
        g1 = 0.25 * u1 - 4.0 * (y2 * h3 - y3 * h2)
        g2 = 0.25 * u2 - 4.0 * (y3 * h1 - y1 * h3)
        g3 = 0.25 * u3 - 4.0 * (y1 * h2 - y2 * h1)
        return (
            d1, d2, d3,
            i11 * g1 + i12 * g2 + i13 * g3,
            i21 * g1 + i22 * g2 + i23 * g3,
            i31 * g1 + i32 * g2 + i33 * g3,
        )

    return rhs


def _make_stepper(inertia: InertiaModel, dt: float):
    rhs = _make_rhs(inertia)
    h = 0.5 * dt
    w6 = dt / 6.0

    def step(x, u1, u2, u3):
        a1, a2, a3, a4, a5, a6 = x
        p1, p2, p3, p4, p5, p6 = rhs(a1, a2, a3, a4, a5, a6, u1, u2, u3)
        q1, q2, q3, q4, q5, q6 = rhs(a1 + h * p1, a2 + h * p2, a3 + h * p3,
                                     a4 + h * p4, a5 + h * p5, a6 + h * p6, u1, u2, u3)
        r1, r2, r3, r4, r5, r6 = rhs(a1 + h * q1, a2 + h * q2, a3 + h * q3,
                                     a4 + h * q4, a5 + h * q5, a6 + h * q6, u1, u2, u3)
        v1, v2, v3, v4, v5, v6 = rhs(a1 + dt * r1, a2 + dt * r2, a3 + dt * r3,
                                     a4 + dt * r4, a5 + dt * r5, a6 + dt * r6, u1, u2, u3)
        return (
            a1 + w6 * (p1 + 2.0 * (q1 + r1) + v1),
            a2 + w6 * (p2 + 2.0 * (q2 + r2) + v2),
            a3 + w6 * (p3 + 2.0 * (q3 + r3) + v3),
            a4 + w6 * (p4 + 2.0 * (q4 + r4) + v4),
            a5 + w6 * (p5 + 2.0 * (q5 + r5) + v5),
            a6 + w6 * (p6 + 2.0 * (q6 + r6) + v6),
        )

    return step


def rk4_step(x, u_held, dt: float, inertia: InertiaModel) -> np.ndarray:
    """One classical RK4 step of the open-loop dynamics with torque held fixed."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    f = lambda y: state_derivative(y, u_held, inertia)  # noqa: E731
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("RK4 step produced a non-finite state")
    return out


def simulate(scenario) -> TrajectoryRecord:
    """Integrate one closed-loop run.

    ``scenario`` needs attributes ``x0``, ``inertia``, ``gain``,
    ``strategy``, ``integrator`` and ``blowup_bound`` (see
    ``mrpsim.scenario.Scenario``). Raises NonFiniteState or SingularMrp on
    divergence; the partial record is attached as ``exc.trajectory``.
    """
    return run_closed_loop(
        scenario.x0,
        scenario.inertia,
        scenario.gain,
        scenario.strategy,
        scenario.integrator,
        blowup_bound=scenario.blowup_bound,
    )


def run_closed_loop(
    x0,
    inertia: InertiaModel,
    gain: GainMatrix,
    strategy: SwitchStrategy,
    config: IntegratorConfig,
    blowup_bound: float = 100.0,
) -> TrajectoryRecord:
    dt = config.dt
    n = config.n_steps
    d = config.delay_steps
    step = _make_stepper(inertia, dt)
    (k11, k12, k13, k14, k15, k16), (k21, k22, k23, k24, k25, k26), (k31, k32, k33, k34, k35, k36) = (
        gain.K.tolist()
    )
    sat = gain.saturation
    machine = SwitchMachine(strategy)
    delayed_rule = strategy.uses_delayed_norm
    bound2 = blowup_bound * blowup_bound

    x = tuple(float(v) for v in np.asarray(x0, dtype=float))
    hist = HistoryBuffer(x, dt, config.tau)
    rows: list[tuple] = []
    monitored: list[float] = []
    shadow: list[bool] = []
    events: list[SwitchEvent] = []
    in_shadow = False

    def finish(status: str) -> TrajectoryRecord:
        arr = np.array(rows, dtype=float).reshape(-1, 10)
        return TrajectoryRecord(
            t=arr[:, 0],
            sigma=arr[:, 1:4],
            omega=4.0 * arr[:, 4:7],
            sigma_norm=np.linalg.norm(arr[:, 1:4], axis=1),
            u=arr[:, 7:10],
            shadow=np.array(shadow, dtype=bool),
            monitored=np.array(monitored),
            switch_events=events,
            strategy=strategy.label,
            dt=dt,
            status=status,
        )

    for k in range(n + 1):
        t = k * dt
        src = hist.at_index(k - d) if (delayed_rule and d > 0) else x
        nm = math.sqrt(src[0] * src[0] + src[1] * src[1] + src[2] * src[2])
        monitored.append(nm)
        if machine.decide(nm):
            s1, s2, s3 = x[0], x[1], x[2]
            ss = s1 * s1 + s2 * s2 + s3 * s3
            if ss == 0.0:
                # shadow of the identity is undefined; nothing to switch
                machine.switch_count -= 1
            else:
                new = (-s1 / ss, -s2 / ss, -s3 / ss)
                events.append(SwitchEvent(t, math.sqrt(ss), 1.0 / math.sqrt(ss), (s1, s2, s3), new))
                x = new + x[3:]
                in_shadow = not in_shadow
        hist.append(x)
        xd = hist.at_index(k - d)
        e1, e2, e3, e4, e5, e6 = xd
        u = (
            k11 * e1 + k12 * e2 + k13 * e3 + k14 * e4 + k15 * e5 + k16 * e6,
            k21 * e1 + k22 * e2 + k23 * e3 + k24 * e4 + k25 * e5 + k26 * e6,
            k31 * e1 + k32 * e2 + k33 * e3 + k34 * e4 + k35 * e5 + k36 * e6,
        )
        if sat is not None:
            u = tuple(min(max(v, -sat), sat) for v in u)
        rows.append((t, *x, *u))
        shadow.append(in_shadow)
        if k == n:
            break
        x = step(x, u[0], u[1], u[2])
        if not math.isfinite(x[0] + x[1] + x[2] + x[3] + x[4] + x[5]):
            exc = NonFiniteState(f"state became non-finite at t={t + dt:.6g}")
            exc.trajectory = finish("NonFiniteState")
            raise exc
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > bound2:
            exc = SingularMrp(
                f"|sigma| exceeded {blowup_bound:g} at t={t + dt:.6g} (approaching the 360 deg singularity)"
            )
            exc.trajectory = finish("SingularMrp")
            raise exc
    return finish("ok")
