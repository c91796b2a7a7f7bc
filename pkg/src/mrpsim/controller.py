"""Delayed linear state feedback u(t) = K x(t - tau)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrpsim.dynamics import InertiaModel

PAPER_KP = -70.11
PAPER_KV = -163.08


@dataclass(frozen=True)
class GainMatrix:
    """3x6 feedback gain partitioned as [K_pos | K_vel].

    ``saturation`` optionally clips each torque component to +/- that value;
    None (the default) leaves the torque unbounded.
    """

    K: np.ndarray
    saturation: float | None = None

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        if K.shape != (3, 6):
            raise ValueError(f"gain must be 3x6, got shape {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ValueError("gain entries must be finite")
        if self.saturation is not None and self.saturation <= 0:
            raise ValueError("saturation limit must be positive")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @property
    def K_pos(self) -> np.ndarray:
        return self.K[:, :3]

    @property
    def K_vel(self) -> np.ndarray:
        return self.K[:, 3:]

    def decompose(self, inertia: InertiaModel) -> tuple[np.ndarray, np.ndarray]:
        """Recover (K1, K2) with K_pos = 4 J K1 and K_vel = J K2."""
        return 0.25 * inertia.J_inv @ self.K_pos, inertia.J_inv @ self.K_vel


def compose_gain(k1, k2, inertia: InertiaModel) -> GainMatrix:
    J = inertia.J
    return GainMatrix(np.hstack((4.0 * J @ np.asarray(k1, float), J @ np.asarray(k2, float))))


def paper_gain() -> GainMatrix:
    """The fixed gain [-70.11 I | -163.08 I] used in every reference scenario."""
    return GainMatrix(np.hstack((PAPER_KP * np.eye(3), PAPER_KV * np.eye(3))))


def control_torque(gain: GainMatrix, x_delayed) -> np.ndarray:
    u = gain.K @ np.asarray(x_delayed, dtype=float)
    if gain.saturation is not None:
        u = np.clip(u, -gain.saturation, gain.saturation)
    return u


def linearized_closed_loop(gain: GainMatrix, inertia: InertiaModel) -> np.ndarray:
    """6x6 matrix of xdot = (A + B K) x for the small-angle model with tau = 0.

    With x2 = omega / 4 this is [[0, I], [K1, K2 / 4]], so each axis obeys
    sigma'' = K1 sigma + (K2 / 4) sigma'.
    """
    k1, k2 = gain.decompose(inertia)
    return np.block([[np.zeros((3, 3)), np.eye(3)], [k1, 0.25 * k2]])
