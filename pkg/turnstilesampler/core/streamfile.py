"""
Stream file reader.

One update per line, ``<k> <c>``: k a decimal value in [1, m), c a signed
decimal count in [-r, r]. Lines starting with ``#`` and blank lines are
skipped.
"""

import re
from pathlib import Path
from typing import IO, Iterator, NamedTuple, Union

from .errors import InputError

DECIMAL = re.compile(r"-?[0-9]+", re.ASCII)


class Update(NamedTuple):
    """One stream update."""
    k: int
    c: int


def parse_updates(lines: IO[str], universe: int, max_count: int) -> Iterator[Update]:
    """
    Parse updates from an open text stream.

    Raises:
        InputError: naming the offending line number
    """
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise InputError(f"expected '<k> <c>', got {line!r}", line=number)
        if not all(DECIMAL.fullmatch(f) for f in fields):
            raise InputError(f"non-decimal field in {line!r}", line=number)
        k, c = int(fields[0]), int(fields[1])
        if not 1 <= k < universe:
            raise InputError(f"value {k} outside [1, {universe})", line=number)
        if abs(c) > max_count:
            raise InputError(f"count {c} outside [-{max_count}, {max_count}]", line=number)
        yield Update(k, c)


def iter_updates(path: Union[str, Path], universe: int, max_count: int) -> Iterator[Update]:
    """Updates of the stream file at ``path``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            yield from parse_updates(fh, universe, max_count)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e
    except UnicodeDecodeError as e:
        raise InputError(f"{path} is not UTF-8 text") from e
