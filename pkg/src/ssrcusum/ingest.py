"""Reading observation files and reading/writing monitor path files.

Observation files are delimited text (comma, tab, semicolon or whitespace).
Lines starting with ``#`` and blank lines are skipped; a first non-numeric
row is taken as a header.  Each row holds one difference ``x`` or a pair
``v1, v2`` that is reduced to ``x = v1 - v2``.
"""
from __future__ import annotations

import csv
import io
import math
import re
import sys
from contextlib import contextmanager
from dataclasses import astuple, dataclass, fields
from typing import Iterable, Iterator, Optional

_SPLIT = re.compile(r"[,;\t]|\s+")


class InputFormatError(ValueError):
    """A malformed row; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Observation:
    line: int
    x: float
    pair: Optional[tuple] = None


@contextmanager
def _opened(source, mode="r"):
    if hasattr(source, "read") or hasattr(source, "write"):
        yield source
    elif source in (None, "-"):
        yield sys.stdin if "r" in mode else sys.stdout
    else:
        with open(source, mode, newline="") as fh:
            yield fh


def _tokens(line: str) -> list:
    return [t for t in _SPLIT.split(line.strip()) if t != ""]


def parse_lines(lines: Iterable[str]) -> Iterator[Observation]:
    width = None
    seen_data = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = _tokens(line)
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            if not seen_data and width is None:
                width = -1  # header consumed
                continue
            raise InputFormatError(lineno, f"non-numeric field in {line!r}") from None
        seen_data = True
        if len(vals) not in (1, 2):
            raise InputFormatError(lineno, f"expected 1 or 2 fields, got {len(vals)}")
        if width not in (None, -1) and len(vals) != width:
            raise InputFormatError(lineno, f"expected {width} fields like the rows above, "
                                           f"got {len(vals)}")
        width = len(vals)
        if not all(math.isfinite(v) for v in vals):
            raise InputFormatError(lineno, "fields must be finite")
        if len(vals) == 2:
            yield Observation(lineno, vals[0] - vals[1], (vals[0], vals[1]))
        else:
            yield Observation(lineno, vals[0])


def read_observations(source) -> list:
    """All observations from a path, ``-`` for stdin, or an open text file."""
    with _opened(source) as fh:
        return list(parse_lines(fh))


def write_observations(dest, xs: Iterable[float], header: str = "x") -> None:
    with _opened(dest, "w") as fh:
        fh.write(f"{header}\n")
        for x in xs:
            fh.write(f"{float(x)!r}\n")


# -- path files ----------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records(dest, records: Iterable, record_type, meta: Optional[dict] = None) -> None:
    """CSV with one row per record; floats use ``repr`` so parsing is lossless."""
    names = [f.name for f in fields(record_type)]
    with _opened(dest, "w") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for rec in records:
            w.writerow([_fmt(v) for v in astuple(rec)])


def read_records(source, record_type) -> list:
    """Inverse of :func:`write_records`."""
    types = {f.name: f.type for f in fields(record_type)}
    with _opened(source) as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows)
        if set(header) != set(types):
            raise ValueError(f"unexpected columns {header}")
        out = []
        for row in rows:
            kw = {name: _convert(types[name], cell) for name, cell in zip(header, row)}
            out.append(record_type(**kw))
    return out


def _convert(tp, cell: str):
    tp = tp if isinstance(tp, str) else getattr(tp, "__name__", str(tp))
    if tp == "str":
        return cell
    if cell == "":
        return None
    if tp.startswith("int"):
        return int(cell)
    if tp.startswith("float") or tp.startswith("Optional[float"):
        return float(cell)
    if tp.startswith("Optional[int"):
        return int(cell)
    return cell


def records_to_string(records: Iterable, record_type) -> str:
    buf = io.StringIO()
    write_records(buf, records, record_type)
    return buf.getvalue()
