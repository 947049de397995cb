"""
SPICE number grammar shared by netlists, expressions and the command line
"""

import re
from typing import Optional

from config.settings import SPICE_SUFFIXES
from services.exceptions import NetlistParseError

_NUMBER_RE = re.compile(r'^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([a-zA-Z]*)$')


def parse_number(token: str, line: Optional[int] = None, column: Optional[int] = None) -> float:
    """
    Parse a number with an optional SPICE magnitude suffix

    Suffixes are case-insensitive; F is femto. Letters after a recognized
    suffix (or letters that are not a suffix at all, e.g. units) are ignored.
    """
    match = _NUMBER_RE.match(token.strip())
    if match is None:
        raise NetlistParseError(f"malformed number '{token}'", line, column)
    mantissa, letters = match.groups()
    value = float(mantissa)
    letters = letters.lower()
    if letters.startswith('meg'):
        return value * SPICE_SUFFIXES['meg']
    if letters and letters[0] in SPICE_SUFFIXES:
        return value * SPICE_SUFFIXES[letters[0]]
    return value
