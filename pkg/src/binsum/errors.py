"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class BinsumError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(BinsumError):
    """A value violates a schema invariant."""


class DatasetParseError(BinsumError):
    """A dataset line could not be parsed."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ElfFormatError(BinsumError):
    """Input is not a well-formed ELF file."""


class NoDebugInfoError(BinsumError):
    """ELF carries no usable DWARF debug information.

    ``kind`` is ``"stripped"`` when the file is a valid ELF that simply
    lacks debug sections, and ``"malformed"`` when debug sections exist
    but cannot be decoded.
    """

    def __init__(self, message: str, kind: str = "stripped"):
        self.kind = kind
        super().__init__(message)


class AddressRangeError(BinsumError):
    """A function boundary falls outside any mapped section."""


class CapabilityError(BinsumError):
    """A disassembler adapter does not support the requested architecture."""


class AmbiguityError(BinsumError):
    """External code entries resolve to the same binary function."""


class ConsistencyError(BinsumError):
    """A symbol table does not match the code it describes."""


class RenameNoOpError(BinsumError):
    """The identifier to rename does not occur in the code."""


class EmptyPoolError(BinsumError):
    """Prompt synthesis produced zero parseable candidates."""


class SelectionError(BinsumError):
    """Prompt selection cannot run (e.g. empty dataset)."""


class LeakageError(BinsumError):
    """A few-shot demonstration equals the test input."""


class GatewayError(BinsumError):
    """Base class for LLM gateway failures."""


class AuthError(GatewayError):
    """The endpoint rejected the configured credential."""


class RetryExhaustedError(GatewayError):
    """Rate-limit retries ran out without a successful response."""


class MalformedResponseError(GatewayError):
    """The endpoint returned a body that does not match the wire schema."""


class EmptySummaryError(BinsumError):
    """A summary tokenized to zero tokens."""


class DegenerateEmbeddingError(BinsumError):
    """Mean-pooled embedding has zero norm; cosine is undefined."""


class ConfigError(BinsumError):
    """A run configuration is invalid or incomplete."""
