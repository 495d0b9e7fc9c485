"""Plain CSV series input and fixed-header CSV output."""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from darglade.errors import DataError
from darglade.model import SignedLogSeries


def parse_series(text: str) -> SignedLogSeries:
    """Parse one observation per line; a single leading non-numeric line is a header.

    Blank lines are ignored. The first column is used when a line has commas.
    A ``sign,logmag`` header switches to the signed-log layout written by
    ``darglade simulate --signed-log``.
    """
    values = []
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    first = next((ln.strip().lstrip("\ufeff") for ln in lines if ln.strip()), "")
    if first.replace(" ", "").lower() == "sign,logmag":
        return _parse_signed_log(lines)
    seen_first = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip().lstrip("\ufeff")
        if not line:
            continue
        field = line.split(",")[0].strip()
        try:
            v = float(field)
        except ValueError:
            if not seen_first:
                seen_first = True
                continue
            raise DataError(f"line {lineno}: cannot parse {field!r} as a number") from None
        seen_first = True
        if not np.isfinite(v):
            raise DataError(f"line {lineno}: non-finite value {field!r}")
        values.append(v)
    if not values:
        raise DataError("no numeric observations found")
    return SignedLogSeries.from_values(values)


def _parse_signed_log(lines) -> SignedLogSeries:
    signs, logmags = [], []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip().lstrip("\ufeff")
        if not line:
            continue
        if not header_seen:
            header_seen = True
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            sign, logmag = int(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            raise DataError(f"line {lineno}: expected 'sign,logmag', got {line!r}") from None
        if sign not in (-1, 0, 1) or (sign == 0) != (logmag == float("-inf")):
            raise DataError(f"line {lineno}: invalid signed-log pair {line!r}")
        signs.append(sign)
        logmags.append(logmag)
    if not signs:
        raise DataError("no numeric observations found")
    return SignedLogSeries(np.array(signs), np.array(logmags))


def read_series(path: str | Path) -> SignedLogSeries:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        raise DataError(f"cannot read {path}: {err}") from err
    return parse_series(text)


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.6g}"


def write_csv(header: Sequence[str], rows: Iterable[Sequence], out=None) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
