"""MRP algebra: construction, shadow set, kinematic matrix, quaternion oracle.

MRPs are carried as plain length-3 float arrays. The quaternion helpers are
only used to cross-check attitude equivalence; the control path never calls
them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mrpsim.errors import SingularProjection, SingularRotation, ZeroNormMrp

ALGEBRA_TOL = 1e-12
ROUNDTRIP_TOL = 1e-10

DEFAULT_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class PrincipalRotation:
    """Euler axis/angle pair with phi canonicalized to [0, 2*pi)."""

    phi: float
    axis: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,):
            raise ValueError(f"axis must be a 3-vector, got shape {axis.shape}")
        if abs(np.linalg.norm(axis) - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"axis must be unit length, |axis| = {np.linalg.norm(axis)!r}")
        object.__setattr__(self, "axis", axis)
        phi = float(self.phi)
        # 2*pi itself is kept so that mrp_from_principal can flag the singularity
        if not 0.0 <= phi <= 2.0 * np.pi:
            phi %= 2.0 * np.pi
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_degrees(cls, phi_deg: float, axis) -> "PrincipalRotation":
        axis = np.asarray(axis, dtype=float)
        return cls(np.radians(phi_deg), axis / np.linalg.norm(axis))


@dataclass(frozen=True)
class UnitQuaternion:
    """Euler parameters (b0, b) with b0**2 + |b|**2 = 1."""

    b0: float
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b0", float(self.b0))
        if abs(self.b0**2 + b @ b - 1.0) > ROUNDTRIP_TOL:
            raise ValueError("quaternion violates the unit constraint")

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.b0], self.b))


def as_mrp(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (3,):
        raise ValueError(f"MRP must be a 3-vector, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("MRP components must be finite")
    return m


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == np.cross(v, w)."""
    v1, v2, v3 = v
    return np.array([[0.0, -v3, v2], [v3, 0.0, -v1], [-v2, v1, 0.0]])


def mrp_from_principal(pr: PrincipalRotation, tol: float = ALGEBRA_TOL) -> np.ndarray:
    if abs(pr.phi - 2.0 * np.pi) < tol:
        raise SingularRotation(f"phi = {pr.phi!r} is at the 360 deg singularity")
    return np.tan(pr.phi / 4.0) * pr.axis


def principal_from_mrp(m) -> PrincipalRotation:
    """Inverse of mrp_from_principal.

    The zero MRP has no physical axis; [1, 0, 0] is returned by convention.
    """
    m = as_mrp(m)
    n = np.linalg.norm(m)
    if n == 0.0:
        return PrincipalRotation(0.0, DEFAULT_AXIS.copy())
    return PrincipalRotation(4.0 * np.arctan(n), m / n)


def shadow_map(m, tol: float = ALGEBRA_TOL) -> np.ndarray:
    m = as_mrp(m)
    n2 = m @ m
    if np.sqrt(n2) < tol:
        raise ZeroNormMrp("shadow set of the zero MRP is undefined")
    return -m / n2


def bmat(m) -> np.ndarray:
    """MRP kinematic matrix (1 - s's) I + 2 [s x] + 2 s s'."""
    m = np.asarray(m, dtype=float)
    return (1.0 - m @ m) * np.eye(3) + 2.0 * skew(m) + 2.0 * np.outer(m, m)


def mrp_rate(m, w) -> np.ndarray:
    return 0.25 * bmat(m) @ np.asarray(w, dtype=float)


def mrp_to_quaternion(m) -> UnitQuaternion:
    m = as_mrp(m)
    s2 = m @ m
    return UnitQuaternion((1.0 - s2) / (1.0 + s2), 2.0 * m / (1.0 + s2))


def quaternion_to_mrp(q: UnitQuaternion, tol: float = ALGEBRA_TOL) -> np.ndarray:
    """Stereographic projection onto the MRP set.

    Raises SingularProjection at b0 = -1; pass the negated quaternion to get
    the shadow set instead.
    """
    if 1.0 + q.b0 < tol:
        raise SingularProjection("b0 = -1 maps to the 360 deg singularity")
    return q.b / (1.0 + q.b0)


def same_attitude(m1, m2, tol: float = 1e-9) -> bool:
    """True when two MRPs describe one orientation (quaternions equal up to sign)."""
    q1 = mrp_to_quaternion(m1).as_array()
    q2 = mrp_to_quaternion(m2).as_array()
    return bool(np.allclose(q1, q2, atol=tol, rtol=0) or np.allclose(q1, -q2, atol=tol, rtol=0))
