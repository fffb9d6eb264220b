"""Exception hierarchy.

Every failure mode that callers are expected to branch on gets its own type.
CLI exit-code mapping: validation/parse problems -> 2, numerical aborts -> 3,
infeasible certificates -> 4 (see ``multilift.cli``).
"""


class MultiliftError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(MultiliftError):
    """An array argument has the wrong shape."""


class NotSkewError(MultiliftError):
    """vee() received a matrix that is not skew-symmetric within tolerance."""


class DegenerateRotationError(MultiliftError):
    """Rotation reprojection failed (singular/reflected factor)."""


class ValidationError(MultiliftError):
    """A parameter set, state, gain set or scenario violates an invariant."""


class ScenarioParseError(MultiliftError):
    """Scenario file could not be parsed or contains unknown keys."""


class SingularMassError(MultiliftError):
    """The inertia matrix of the coupled system is numerically singular."""


class NonFiniteError(MultiliftError):
    """A state or derivative stopped being finite during integration.

    ``t`` carries the simulation time at which the abort happened.
    """

    def __init__(self, message: str, t: float = float("nan")):
        super().__init__(message)
        self.t = t


class RankDeficientError(MultiliftError):
    """Attachment geometry cannot realize an arbitrary 6-DOF wrench."""


class DegenerateTensionError(MultiliftError):
    """A desired link force vanished; no link direction can be derived."""


class DegenerateThrustError(MultiliftError):
    """A commanded quadrotor force vanished; no thrust axis can be derived."""


class CollinearHeadingError(MultiliftError):
    """Heading reference is (anti)parallel to the thrust axis."""


class DegenerateCommandError(MultiliftError):
    """Command trajectory cannot define the requested frame (zero tangent)."""
