"""Link quality: bit error rate, character error rate, throughput.

Every character weighs 8 bits. Received text is aligned to the sent text by
minimum edit distance; a substitution costs the Hamming distance between the
two 8-bit codes, an insertion or deletion costs all 8 bits. Among alignments
with the fewest edits the one with the fewest bit errors is used.
"""

from __future__ import annotations

import logging
from typing import List, Tuple

from app.core.errors import EmptyReference, InvalidConfig
from app.schemas.link import LinkReport

logger = logging.getLogger(__name__)

BITS_PER_CHAR = 8


def char_bit_errors(a: str, b: str) -> int:
    return bin((ord(a) ^ ord(b)) & 0xFF).count("1")


def align_and_score(sent: str, received: str) -> Tuple[int, int, int]:
    """Returns (bit_errors, bits_total, char_errors)."""
    if not sent:
        raise EmptyReference("the sent text must not be empty")

    rows, cols = len(sent) + 1, len(received) + 1
    # cost[i][j] = (edits, bit errors) aligning sent[:i] with received[:j]
    cost: List[List[Tuple[int, int]]] = [[(0, 0)] * cols for _ in range(rows)]
    for i in range(1, rows):
        cost[i][0] = (i, i * BITS_PER_CHAR)
    for j in range(1, cols):
        cost[0][j] = (j, j * BITS_PER_CHAR)

    for i in range(1, rows):
        for j in range(1, cols):
            s, r = sent[i - 1], received[j - 1]
            diag_edits, diag_bits = cost[i - 1][j - 1]
            if s == r:
                best = (diag_edits, diag_bits)
            else:
                best = (diag_edits + 1, diag_bits + char_bit_errors(s, r))
            up_edits, up_bits = cost[i - 1][j]
            left_edits, left_bits = cost[i][j - 1]
            best = min(best, (up_edits + 1, up_bits + BITS_PER_CHAR), (left_edits + 1, left_bits + BITS_PER_CHAR))
            cost[i][j] = best

    char_errors, bit_errors = cost[-1][-1]
    return bit_errors, BITS_PER_CHAR * len(sent), char_errors


def measure_link(sent: str, received: str, audio_duration_sec: float) -> LinkReport:
    if audio_duration_sec <= 0:
        raise InvalidConfig("audio duration must be positive")
    bit_errors, bits_total, char_errors = align_and_score(sent, received)
    if bit_errors > bits_total:
        logger.warning("clamping %d bit errors to the %d bits sent", bit_errors, bits_total)
        bit_errors = bits_total
    cer = min(char_errors / len(sent), 1.0)
    return LinkReport(
        sent_chars=len(sent),
        received_chars=len(received),
        bit_errors=bit_errors,
        bits_total=bits_total,
        ber=bit_errors / bits_total,
        char_errors=char_errors,
        cer=cer,
        audio_duration_sec=audio_duration_sec,
        throughput_bps=BITS_PER_CHAR * len(sent) * (1 - cer) / audio_duration_sec,
    )
