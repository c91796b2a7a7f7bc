"""Exception types raised by the simulator."""


class MrpSimError(Exception):
    """Base class for all simulator errors."""


class SingularRotation(MrpSimError):
    """Principal angle at 360 deg, where tan(phi/4) is unbounded."""


class ZeroNormMrp(MrpSimError):
    """Shadow map requested for the zero MRP (identity attitude)."""


class SingularProjection(MrpSimError):
    """Quaternion with b0 = -1 has no standard-set MRP."""


class QueryTooOld(MrpSimError):
    """History lookup fell outside the retained delay window."""


class NonFiniteState(MrpSimError):
    """Integration produced NaN or inf; the run has diverged."""


class SingularMrp(MrpSimError):
    """MRP norm exceeded the blow-up bound (approaching phi = 360 deg)."""


class ParseError(MrpSimError):
    """Scenario document is syntactically malformed."""


class ValidationError(MrpSimError):
    """Scenario document parsed but violates a configuration invariant."""
