"""Exception hierarchy shared by all sarforge modules."""


class SarForgeError(Exception):
    """Base class; ``code`` is the machine-readable name printed by the CLI."""

    code = "SarForgeError"


class NonuniformTrack(SarForgeError):
    code = "NonuniformTrack"


class EmptySupport(SarForgeError):
    code = "EmptySupport"


class DegenerateTrack(SarForgeError):
    code = "DegenerateTrack"


class MalformedTDM(SarForgeError):
    code = "MalformedTDM"


class WeakReference(SarForgeError):
    code = "WeakReference"


class NoTarget(SarForgeError):
    code = "NoTarget"


class ConfigError(SarForgeError):
    code = "ConfigError"


class FormatError(SarForgeError):
    """Base for file-format errors; ``offset`` is the byte offset of the problem."""

    code = "FormatError"

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class BadMagic(FormatError):
    code = "BadMagic"


class TruncatedFile(FormatError):
    code = "TruncatedFile"


class VersionMismatch(FormatError):
    code = "VersionMismatch"


class TrailingData(FormatError):
    code = "TrailingData"
