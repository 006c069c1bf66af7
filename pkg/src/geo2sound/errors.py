"""Exception hierarchy shared across the toolkit."""


class Geo2SoundError(Exception):
    """Base class for all toolkit errors."""


# --- tensor file / manifest IO ---

class TensorIoError(Geo2SoundError):
    pass


class BadMagic(TensorIoError):
    """File does not start with the expected array-file magic bytes."""


class UnsupportedDtype(TensorIoError):
    """Array file declares a dtype other than little-endian float32."""


class TruncatedFile(TensorIoError):
    """Array file payload is shorter than its header promises."""


class NonFiniteData(TensorIoError):
    """Strict-mode write refused a tensor containing NaN or infinity."""


class IoFailure(TensorIoError):
    """Underlying filesystem operation failed."""


class SchemaViolation(Geo2SoundError):
    """Manifest JSON does not satisfy the documented schema."""


# --- clustering / descriptors ---

class TooFewPoints(Geo2SoundError):
    """Fewer points than requested clusters."""


class EmptyGrid(Geo2SoundError):
    pass


class EmptyCluster(Geo2SoundError):
    pass


class LengthMismatch(Geo2SoundError):
    pass


class AreaSumViolation(Geo2SoundError):
    """Cluster area ratios do not sum to 1 within tolerance."""


class NotADistribution(Geo2SoundError):
    """Vector is not a probability distribution."""


# --- classifier ---

class EmptyTrainingSet(Geo2SoundError):
    pass


class DimensionMismatch(Geo2SoundError):
    pass


# --- hypothesis expansion / generation ---

class EmptyCaption(Geo2SoundError):
    pass


class MalformedResponse(Geo2SoundError):
    """LLM response does not contain exactly two numbered hypothesis lines."""


class GeneratorUnavailable(Geo2SoundError):
    """External audio generator endpoint cannot be reached."""


class PartialFailure(Geo2SoundError):
    """Some candidate generations failed; carries per-entry details."""

    def __init__(self, message, failures):
        super().__init__(message)
        self.failures = list(failures)


# --- alignment ---

class ZeroVector(Geo2SoundError):
    pass


class EmptyCandidateSet(Geo2SoundError):
    pass


class EmptyDataset(Geo2SoundError):
    pass


# --- metrics ---

class TooFewSamples(Geo2SoundError):
    pass


class NotSymmetric(Geo2SoundError):
    pass


class IndefiniteBeyondTolerance(Geo2SoundError):
    """Matrix has an eigenvalue below the negative tolerance for PSD inputs."""


class ShapeMismatch(Geo2SoundError):
    pass


class EmptyMatrix(Geo2SoundError):
    pass


class MissingInput(Geo2SoundError):
    """One or more required input files are absent; carries the list."""

    def __init__(self, message, missing):
        super().__init__(message)
        self.missing = list(missing)
