"""Rigid-body rotational dynamics in the scaled state x = [sigma, omega / 4].

Units are SI throughout: inertia in kg m^2, torque in N m, rates in rad/s.
A state is a length-6 float array; ``pack_state``/``unpack_state`` convert
to and from (sigma, omega).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mrpsim.attitude import bmat, mrp_rate


@dataclass(frozen=True)
class InertiaModel:
    J: np.ndarray
    J_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if J.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got shape {J.shape}")
        if not np.allclose(J, J.T, atol=1e-12, rtol=0):
            raise ValueError("inertia matrix must be symmetric")
        if np.min(np.linalg.eigvalsh(J)) <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        J.setflags(write=False)
        J_inv = np.linalg.inv(J)
        J_inv.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_inv", J_inv)

    @classmethod
    def diag(cls, j1: float, j2: float, j3: float) -> "InertiaModel":
        return cls(np.diag([j1, j2, j3]))

    def kinetic_energy(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return 0.5 * w @ self.J @ w

    def momentum_norm(self, w) -> float:
        return float(np.linalg.norm(self.J @ np.asarray(w, dtype=float)))


PAPER_INERTIA = InertiaModel.diag(140.0, 100.0, 80.0)


def euler_rate(w, u, inertia: InertiaModel) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    return inertia.J_inv @ (u - np.cross(w, inertia.J @ w))


def pack_state(m, w) -> np.ndarray:
    return np.concatenate((np.asarray(m, dtype=float), 0.25 * np.asarray(w, dtype=float)))


def unpack_state(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    return x[:3].copy(), 4.0 * x[3:]


def nonlinear_residual(x, inertia: InertiaModel) -> np.ndarray:
    """f(x) such that xdot = A x + B u + f(x).

    f1 = (B(x1) - I) x2,  f2 = -4 J^-1 (x2 x (J x2)).
    """
    x = np.asarray(x, dtype=float)
    x1, x2 = x[:3], x[3:]
    f1 = (bmat(x1) - np.eye(3)) @ x2
    f2 = -4.0 * inertia.J_inv @ np.cross(x2, inertia.J @ x2)
    return np.concatenate((f1, f2))


def state_derivative(x, u, inertia: InertiaModel) -> np.ndarray:
    # A x = [x2; 0], B u = [0; J^-1 u / 4]
    x = np.asarray(x, dtype=float)
    lin = np.concatenate((x[3:], 0.25 * inertia.J_inv @ np.asarray(u, dtype=float)))
    return lin + nonlinear_residual(x, inertia)


def state_derivative_direct(x, u, inertia: InertiaModel) -> np.ndarray:
    """Same derivative assembled from the kinematic and Euler equations.

    Kept separate from ``state_derivative`` so the two decompositions can be
    checked against each other.
    """
    m, w = unpack_state(x)
    return np.concatenate((mrp_rate(m, w), 0.25 * euler_rate(w, u, inertia)))
