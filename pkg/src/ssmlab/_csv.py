"""CSV emission: UTF-8, LF line endings, 17-significant-digit floats."""

from __future__ import annotations

import numbers

import numpy as np

__all__ = ["format_cell", "write_csv"]


def format_cell(value) -> str:
    """Render one CSV cell; floats get 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans have no CSV rendering here")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    if isinstance(value, numbers.Real):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path, header: list[str], rows) -> None:
    """Write a header plus rows of cells with LF endings regardless of OS."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(format_cell(cell) for cell in row) + "\n")
