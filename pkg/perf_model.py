"""
Performance Model - classical versus quantum iteration accounting
"""
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from errors import ParseError
from models import RatioModel
import utils

SURFACE_COLUMNS = ["s_i", "m", "C", "Q", "ratio"]
SURFACE_MAX = 1 << 13


def classical_iterations(s_i: int, d: int) -> int:
    """Sequential search: every initial state run d steps"""
    return s_i * d


def quantum_iterations(m: int, d: int) -> float:
    return math.sqrt(2.0 ** m) * d


def ratio(s_i: int, m: int) -> float:
    """C/Q with the depth cancelled"""
    return s_i / math.sqrt(2.0 ** m)


def depth_ratio(s_i: int, d: int, m: int, k: Optional[int] = None) -> float:
    """C/Q keeping the classical depth d and the per-iterate oracle depth k apart"""
    k = d if k is None else k
    return classical_iterations(s_i, d) / quantum_iterations(m, k)


def bounds_for_m(s_i: int) -> Tuple[int, int]:
    """Register widths for which the quantum search still wins, inclusive"""
    return utils.ceil_log2(s_i), utils.floor_log2(s_i * s_i)


def trace_register_bits(r_count: int, d: int) -> int:
    """Bits to index every rule path of length d"""
    return utils.ceil_log2(r_count ** d)


def path_encoding_bits(r_count: int, d: int) -> Tuple[int, int]:
    """(one field per step, packed path index); equal when r_count is a power of two"""
    return d * utils.ceil_log2(r_count), trace_register_bits(r_count, d)


def g_output_fits(r_count: int, d: int, s_i: int) -> bool:
    return trace_register_bits(r_count, d) <= utils.ceil_log2(s_i)


def total_bits(n: int, p: int, include_answer_bit: bool = True) -> int:
    return n + p + (1 if include_answer_bit else 0)


def hierarchical_comparison(n: int, p: int = 0) -> float:
    """sqrt(2^p) / sqrt(2^(n+p+1)); p cancels"""
    return math.sqrt(2.0 ** p / 2.0 ** (n + p + 1))


def performance_penalty(p: int, s_i: int) -> float:
    """Ratio lost by carrying p extra trace bits"""
    return p / math.sqrt(2) * math.sqrt(s_i)


def ratio_surface(s_i_min: int = 1, s_i_max: int = SURFACE_MAX, d: int = 1) -> pd.DataFrame:
    """Long-format rows (s_i, m, C, Q, ratio) for every m within bounds_for_m(s_i)"""
    if not 1 <= s_i_min <= s_i_max <= SURFACE_MAX:
        raise ValueError(f"s_i range must lie in [1, {SURFACE_MAX}]: {s_i_min}..{s_i_max}")

    s_values = np.arange(s_i_min, s_i_max + 1, dtype=np.int64)
    bounds = np.array([bounds_for_m(int(s)) for s in s_values], dtype=np.int64)
    widths = bounds[:, 1] - bounds[:, 0] + 1

    s_i = np.repeat(s_values, widths)
    offsets = np.arange(len(s_i)) - np.repeat(np.cumsum(widths) - widths, widths)
    m = np.repeat(bounds[:, 0], widths) + offsets
    root = np.sqrt(np.power(2.0, m))
    return pd.DataFrame({
        "s_i": s_i,
        "m": m,
        "C": s_i * d,
        "Q": root * d,
        "ratio": s_i / root,
    }, columns=SURFACE_COLUMNS)


def surface_to_csv(frame: pd.DataFrame, d: int = 1) -> str:
    return utils.frame_to_csv(frame, {"depth": str(d)})


def read_surface_csv(text: str) -> Tuple[pd.DataFrame, int]:
    frame, header = utils.csv_to_frame(text)
    if list(frame.columns) != SURFACE_COLUMNS:
        raise ParseError(f"not a ratio surface export: columns {list(frame.columns)}")
    try:
        depth = int(header.get("depth", "1"))
        frame = frame.astype({"s_i": np.int64, "m": np.int64, "C": np.int64, "Q": np.float64, "ratio": np.float64})
    except ValueError as e:
        raise ParseError(f"malformed ratio surface: {e}")
    return frame, depth


def plateaus(frame: pd.DataFrame) -> Dict[int, List[int]]:
    """Lower-bound m -> the s_i values sharing it"""
    lows = frame.groupby("s_i")["m"].min()
    return {int(m): [int(s) for s in group.index] for m, group in lows.groupby(lows)}


def model_row(model: RatioModel) -> Dict[str, float]:
    """C, Q and their ratio for one configuration; m defaults to n + p"""
    m = model.m or model.n + model.p
    return {
        "s_i": model.s_i,
        "m": m,
        "C": classical_iterations(model.s_i, model.d),
        "Q": quantum_iterations(m, model.d),
        "ratio": ratio(model.s_i, m),
    }


def validate_model(model: RatioModel) -> List[str]:
    """Problems with a configuration, empty when consistent"""
    errors = []
    if model.n and model.n < utils.ceil_log2(model.s_i):
        errors.append(f"n={model.n} cannot encode {model.s_i} initial states")
    low, high = bounds_for_m(model.s_i)
    m = model.m or model.n + model.p
    if not low <= m <= high:
        errors.append(f"m={m} outside the bounds [{low}, {high}] for s_i={model.s_i}")
    return errors
