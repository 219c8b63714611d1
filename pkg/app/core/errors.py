from __future__ import annotations


class ModemError(Exception):
    """Base class for every error the modem reports to its callers."""

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message


class UnsupportedCharacter(ModemError):
    def __init__(self, char: str) -> None:
        super().__init__(f"unsupported character {char!r}")
        self.char = char


class UnknownCode(ModemError):
    def __init__(self, code: str) -> None:
        super().__init__(f"no character for morse code {code!r}")
        self.code = code


class EmptyPayload(ModemError):
    pass


class InvalidCutoff(ModemError):
    pass


class InvalidSize(ModemError):
    pass


class InvalidBand(ModemError):
    pass


class ZeroSignal(ModemError):
    pass


class NoHailFound(ModemError):
    pass


class EmptyReference(ModemError):
    pass


class FormatMismatch(ModemError):
    pass


class IoFailure(ModemError):
    pass


class InvalidConfig(ModemError):
    pass
