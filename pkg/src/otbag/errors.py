"""Exception hierarchy.

Every error raised by the library derives from :class:`OTBagError`. The
class name doubles as the machine-readable error name reported by the CLI.
"""

from __future__ import annotations


class OTBagError(Exception):
    """Base class for all library errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class EmptyCommittee(OTBagError, ValueError):
    pass


class BadDimension(OTBagError, ValueError):
    pass


class DimensionMismatch(OTBagError, ValueError):
    pass


class BadValue(OTBagError, ValueError):
    """Non-finite feature value or malformed vector."""


class BadLabel(OTBagError, ValueError):
    pass


class BadSupport(OTBagError, ValueError):
    pass


class EmptyStream(OTBagError, ValueError):
    pass


class NoTargetData(OTBagError, ValueError):
    pass


class BadSegment(OTBagError, ValueError):
    pass


class EmptyTestSet(OTBagError, ValueError):
    pass


class RaggedCsv(OTBagError, ValueError):
    pass


class EmptyFile(RaggedCsv):
    pass


class BadNumber(OTBagError, ValueError):
    pass


class NotBinary(OTBagError, ValueError):
    pass


class IndexOutOfRange(OTBagError, ValueError):
    pass


class BadSparseLine(OTBagError, ValueError):
    pass


class BadFraction(OTBagError, ValueError):
    pass


class DegenerateSplit(OTBagError, ValueError):
    pass


class BadConfig(OTBagError, ValueError):
    pass


class BadModelFile(OTBagError, ValueError):
    pass


class EmptyTable(OTBagError, ValueError):
    pass


class IoError(OTBagError, OSError):
    pass
