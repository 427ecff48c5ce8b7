"""Exception types shared across the package.

File-content problems (bad bytes, bad CSV rows, inconsistent manifests) are
DataError subclasses so callers can separate them from plain OSError (missing
or unreadable files) and from ConfigError (bad user-supplied options). The CLI
maps these three groups to distinct exit codes.
"""


class AmvaError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(AmvaError):
    """Invalid user configuration (flags, option values, run setup)."""


class DataError(AmvaError):
    """Input data violates a documented format or consistency rule."""


class TensorFormatError(DataError):
    """Malformed AMVT tensor file."""


class BadMagicError(TensorFormatError):
    """File does not start with the AMVT magic bytes."""


class VersionMismatchError(TensorFormatError):
    """AMVT version byte is not supported."""


class UnsupportedDtypeError(TensorFormatError):
    """AMVT dtype byte is not float32."""


class TruncatedFileError(TensorFormatError):
    """File ends before the declared payload is complete."""


class NonFiniteValuesError(TensorFormatError):
    """Payload contains NaN or Inf."""


class CsvFormatError(DataError):
    """Malformed quality or pairs CSV."""


class ManifestError(DataError):
    """Malformed or inconsistent dataset manifest."""
