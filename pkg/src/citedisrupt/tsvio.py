"""Reading and writing the tab-separated formats used throughout."""
from __future__ import annotations

import csv
import math
from typing import Iterable, Sequence, TextIO

from .errors import ParseError

NA = "NA"


def is_na(x) -> bool:
    return x is None or (isinstance(x, float) and math.isnan(x))


def fmt_sig(x, digits: int = 6) -> str:
    """Real with ``digits`` significant digits (Python formatting rounds half-even)."""
    if is_na(x):
        return NA
    s = format(float(x), f".{digits}g")
    return "0" if s in ("-0", "0") else s


def fmt_fixed(x, decimals: int = 4) -> str:
    if is_na(x):
        return NA
    s = format(float(x), f".{decimals}f")
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def parse_float(s: str) -> float:
    s = s.strip()
    if s == NA or s == "":
        return math.nan
    return float(s)


def write_table(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    stream.write("\t".join(header) + "\n")
    for row in rows:
        stream.write("\t".join(row) + "\n")


def read_table(stream: TextIO, required: Sequence[str], source: str = "table"):
    """Yield ``(line_number, dict)`` for each row; header must contain ``required``."""
    reader = csv.reader(stream, delimiter="\t", quoting=csv.QUOTE_NONE)
    header = next(reader, None)
    if header is None:
        raise ParseError("empty file, header row required", line=1, source=source)
    header = [h.strip() for h in header]
    missing = [c for c in required if c not in header]
    if missing:
        raise ParseError(f"missing column(s) {missing}", line=1, source=source)
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} columns, got {len(row)}", line=reader.line_num, source=source
            )
        yield reader.line_num, dict(zip(header, row))
