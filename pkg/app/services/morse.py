"""Text <-> Morse elements, and the framing of elements into a timed symbol timeline.

Dots and dashes are told apart by tone frequency, not duration, so every
element occupies one fixed-length frame. Boundaries are carried by the
silence between frames: element gap < character gap < word gap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

from app.core.errors import EmptyPayload, UnknownCode, UnsupportedCharacter
from app.schemas.modem import ModemConfig, MorseElement, Silence, Slot, SymbolClass, SymbolTimeline, Tone

logger = logging.getLogger(__name__)

MORSE_TABLE = {
    "A": ".-",
    "B": "-...",
    "C": "-.-.",
    "D": "-..",
    "E": ".",
    "F": "..-.",
    "G": "--.",
    "H": "....",
    "I": "..",
    "J": ".---",
    "K": "-.-",
    "L": ".-..",
    "M": "--",
    "N": "-.",
    "O": "---",
    "P": ".--.",
    "Q": "--.-",
    "R": ".-.",
    "S": "...",
    "T": "-",
    "U": "..-",
    "V": "...-",
    "W": ".--",
    "X": "-..-",
    "Y": "-.--",
    "Z": "--..",
    "0": "-----",
    "1": ".----",
    "2": "..---",
    "3": "...--",
    "4": "....-",
    "5": ".....",
    "6": "-....",
    "7": "--...",
    "8": "---..",
    "9": "----.",
}

CHARSET = frozenset(MORSE_TABLE)

# Lenient mode stands '?' in for anything outside the charset, on both ends of the link.
SUBSTITUTE = "?"
SUBSTITUTE_CODE = "..--.."

MAX_CODE_LENGTH = 6

_DECODE = {code: char for char, code in MORSE_TABLE.items()}
_MARKS = {".": MorseElement.DOT, "-": MorseElement.DASH}


@dataclass(frozen=True)
class CharCode:
    character: str
    elements: Tuple[MorseElement, ...]

    def __str__(self) -> str:
        return code_string(self.elements)


def code_string(elements: Iterable[MorseElement]) -> str:
    return "".join("." if e is MorseElement.DOT else "-" for e in elements)


def char_to_morse(c: str) -> CharCode:
    key = c.upper()
    code = MORSE_TABLE.get(key) if len(key) == 1 else None
    if code is None:
        raise UnsupportedCharacter(c)
    return CharCode(character=key, elements=tuple(_MARKS[mark] for mark in code))


def morse_to_char(elements: Sequence[MorseElement]) -> str:
    code = code_string(elements)
    char = _DECODE.get(code)
    if char is None:
        raise UnknownCode(code)
    return char


def normalize_text(text: str) -> str:
    """Uppercase and collapse every whitespace run to one word gap."""
    return " ".join(text.upper().split())


def _lookup(c: str, strict: bool) -> CharCode:
    try:
        return char_to_morse(c)
    except UnsupportedCharacter:
        if strict:
            raise
        logger.warning("substituting %r with %r", c, SUBSTITUTE)
        return CharCode(character=SUBSTITUTE, elements=tuple(_MARKS[mark] for mark in SUBSTITUTE_CODE))


def build_timeline(text: str, cfg: ModemConfig, strict: bool = False) -> SymbolTimeline:
    normalized = normalize_text(text)
    if not normalized:
        raise EmptyPayload("nothing to send after normalization")

    slots: List[Slot] = [Tone(SymbolClass.HAIL, cfg.hail_ms)]
    gap = cfg.post_hail_gap_ms
    for word_index, word in enumerate(normalized.split(" ")):
        if word_index:
            gap = cfg.word_gap_ms
        for char_index, char in enumerate(word):
            if char_index:
                gap = cfg.char_gap_ms
            for element_index, element in enumerate(_lookup(char, strict).elements):
                if element_index:
                    gap = cfg.element_gap_ms
                slots.append(Silence(gap))
                slots.append(Tone(SymbolClass.of(element), cfg.frame_ms))
    return SymbolTimeline(tuple(slots))


def decode_symbols(
    symbols: Iterable[Tuple[MorseElement, float]], cfg: ModemConfig, strict: bool = False
) -> Tuple[str, List[str]]:
    """Turn (element, gap-before-ms) pairs into text; returns the text and lenient-mode warnings."""
    out: List[str] = []
    warnings: List[str] = []
    current: List[MorseElement] = []
    space_pending = False

    def flush() -> None:
        nonlocal space_pending
        if not current:
            return
        try:
            char = morse_to_char(current)
        except UnknownCode as exc:
            if strict:
                raise
            warnings.append(f"unknown code {exc.code!r} replaced with {SUBSTITUTE!r}")
            char = SUBSTITUTE
        if space_pending and out:
            out.append(" ")
        space_pending = False
        out.append(char)
        current.clear()

    for element, gap in symbols:
        if gap < 0:
            raise ValueError("gap durations must be nonnegative")
        if gap >= cfg.char_gap_threshold_ms:
            flush()
        if gap >= cfg.word_gap_threshold_ms:
            space_pending = True
        current.append(element)
    flush()
    return "".join(out), warnings


def timeline_to_text(symbols: Iterable[Tuple[MorseElement, float]], cfg: ModemConfig, strict: bool = False) -> str:
    text, _ = decode_symbols(symbols, cfg, strict=strict)
    return text
