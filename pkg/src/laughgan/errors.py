"""Exception types shared across the package."""


class LaughganError(Exception):
    """Base class for all package-specific errors."""


# --- audio / spectrogram pipeline ---

class UnreadableFile(LaughganError):
    """File is not a parseable RIFF/WAVE container."""


class UnsupportedEncoding(LaughganError):
    """WAV encoding outside PCM 16/24/32-bit int or 32-bit float."""


class EmptyAudio(LaughganError):
    """Audio file decoded to zero samples."""


class BadLength(LaughganError):
    """Clip length does not match the fixed frame size."""


class BadLevel(LaughganError):
    """Downsampling level outside the supported ladder."""


# --- corpus / manifest ---

class MissingFile(LaughganError):
    """Referenced file does not exist."""


class EmptyManifest(LaughganError):
    """Manifest contains no valid entries."""


class SchemaViolation(LaughganError):
    """A manifest line failed validation (collected per line, not raised)."""


class SingleClassCorpus(LaughganError):
    """Classifier training requires at least two distinct classes."""


# --- networks / training ---

class ShapeMismatch(LaughganError):
    """Parameter or activation shapes incompatible with the configuration."""


class BadIndex(LaughganError):
    """Class index outside the label vocabulary."""


class EmptyBatch(LaughganError):
    """Loss called with an empty score vector."""


class ResumeError(LaughganError):
    """Checkpoint cannot be resumed (missing or incompatible)."""


# --- latent toolkit ---

class DimensionMismatch(LaughganError):
    """Vector dimensions disagree."""


class ZeroVectorSlerp(LaughganError):
    """Spherical interpolation is undefined for a zero endpoint."""


class UnconditionalModel(LaughganError):
    """Operation requires a conditional model."""
