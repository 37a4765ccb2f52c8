"""Bit-stable CSV emission: shortest round-trip decimals, fixed newlines."""

import numpy as np


def fmt_value(value) -> str:
    """Shortest exact decimal for floats; plain str for everything else."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write one CSV with a header row; values formatted via fmt_value."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(fmt_value(v) for v in row) + "\n")
