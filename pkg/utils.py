"""
Utility functions
"""
import io
import sys
from pathlib import Path
from typing import Dict, Optional, Tuple

import pandas as pd


def ceil_log2(value: int) -> int:
    """Exact ceil(log2(value)) for value >= 1"""
    if value < 1:
        raise ValueError(f"ceil_log2 needs a positive integer: {value}")
    return (value - 1).bit_length()


def floor_log2(value: int) -> int:
    """Exact floor(log2(value)) for value >= 1"""
    if value < 1:
        raise ValueError(f"floor_log2 needs a positive integer: {value}")
    return value.bit_length() - 1


def to_bits(value: int, width: int) -> str:
    """Big-endian, zero-padded binary string"""
    return format(value, f"0{width}b") if width else ""


def frame_to_csv(frame: pd.DataFrame, header: Optional[Dict[str, str]] = None) -> str:
    """Render a frame as CSV, prefixed with '# key=value' metadata lines"""
    lines = [f"# {key}={value}\n" for key, value in (header or {}).items()]
    return "".join(lines) + frame.to_csv(index=False, lineterminator="\n")


def csv_to_frame(text: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Parse CSV produced by frame_to_csv; every cell comes back as str"""
    header = {}
    for line in text.splitlines():
        if not line.startswith("#"):
            continue
        key, _, value = line.lstrip("#").strip().partition("=")
        header[key] = value
    frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str, keep_default_na=False)
    return frame, header


def write_text(text: str, path: Optional[Path] = None) -> None:
    """Write to path, or to stdout when no path is given"""
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def read_text(path: Path) -> str:
    with open(path, "r") as f:
        return f.read()


def split_ids(cell: str) -> Tuple[int, ...]:
    """'R1;R5;R8' -> (1, 5, 8)"""
    if not cell:
        return ()
    return tuple(int(token.lstrip("R")) for token in cell.split(";"))


def join_ids(rule_ids) -> str:
    return ";".join(f"R{rule_id}" for rule_id in rule_ids)
