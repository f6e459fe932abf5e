"""Exception types raised across the package.

Everything derives from :class:`FewShotError`. :class:`ConfigError` marks bad
user-supplied settings (the CLI maps it to exit code 1); every other
subclass is a data or runtime failure (exit code 2).
"""


class FewShotError(Exception):
    """Base class for all package errors."""


class ConfigError(FewShotError, ValueError):
    """Inconsistent or out-of-range configuration."""


class DimensionMismatchError(FewShotError, ValueError):
    pass


class NonFiniteError(FewShotError, ValueError):
    pass


class EmptySetError(FewShotError, ValueError):
    pass


class ZeroVectorError(FewShotError, ValueError):
    pass


class InsufficientClassesError(FewShotError, ValueError):
    pass


class InsufficientRecordsError(FewShotError, ValueError):
    def __init__(self, label, available, required):
        super().__init__(
            f"class {label} has {available} records, episode needs {required}"
        )
        self.label = label
        self.available = available
        self.required = required


class InsufficientDataError(FewShotError, ValueError):
    pass


class SplitError(FewShotError, ValueError):
    """Malformed or inconsistent multiway split description."""


class CodebookError(FewShotError, ValueError):
    pass


class CodeTooShortError(CodebookError):
    pass


class DuplicateClassError(CodebookError):
    pass


class UnknownLabelError(FewShotError, ValueError):
    pass


class NonFiniteLossError(FewShotError, ArithmeticError):
    pass


class FeatureFileError(FewShotError):
    """Base for feature-file parse failures."""


class BadMagicError(FeatureFileError):
    pass


class BadVersionError(FeatureFileError):
    pass


class TruncatedFileError(FeatureFileError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class TrailingDataError(FeatureFileError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class NonFiniteValueError(FeatureFileError):
    def __init__(self, record_index):
        super().__init__(f"non-finite value in record {record_index}")
        self.record_index = record_index


class CsvFormatError(FeatureFileError):
    def __init__(self, message, row, column=None):
        where = f"row {row}" if column is None else f"row {row}, column {column}"
        super().__init__(f"{message} at {where}")
        self.row = row
        self.column = column


class RaggedRowError(CsvFormatError):
    pass
