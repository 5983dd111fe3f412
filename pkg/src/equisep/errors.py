"""Exception types shared across the package."""


class EquisepError(Exception):
    """Base class for all package errors."""


class InvalidPermutation(EquisepError):
    """Input is not a bijection of {0..n-1}."""


class SizeCapExceeded(EquisepError):
    """A group, action, or expansion would exceed the configured size cap."""


class PointOutOfRange(EquisepError):
    """Point index is not a member of the acted-on set."""


class DimensionMismatch(EquisepError):
    """Vector length does not match the acted-on set."""


class GroupMismatch(EquisepError):
    """Two actions that must share a group do not."""


class ActionMismatch(EquisepError):
    """Layer construction received an incompatible action."""


class ShapeMismatch(EquisepError):
    """Coefficient or input shapes do not match a layer space or architecture."""


class NonFiniteValue(EquisepError):
    """A forward or gradient pass produced NaN or Inf."""


class ArchMismatch(EquisepError):
    """Networks do not share a compatible architecture."""


class DivergenceDetected(EquisepError):
    """Training loss exceeded the divergence threshold."""


class NotAPushforward(EquisepError):
    """Operation requires a coordinate-pushforward layer space."""


class IdentityMissing(EquisepError):
    """Repeated layer space does not contain the identity map."""


class NotStabilizerInvariant(EquisepError):
    """Scalar function is not invariant under the required stabilizer."""


class FixtureMissing(EquisepError):
    """Threshold fixtures file is absent; run `equisep fixtures regen`."""


class FixtureStale(EquisepError):
    """Fixtures file does not match freshly recomputed oracle values."""
