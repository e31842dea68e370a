"""Helpers shared by every module: settings, unit conversion, seed derivation."""
from __future__ import annotations

import math
from os import path
from typing import Any

import numpy as np
import ujson

from modules.errors import ModelError

SETTINGS_PATH = path.join(
    path.dirname(path.dirname(path.abspath(__file__))), "settings", "settings.json"
)


def loadSettings(section: str, settings_path: str = SETTINGS_PATH) -> dict[str, Any]:
    """Load a section of the settings file.

    Args:
        section (str): name of the section (e.g. "Simulator")
        settings_path (str, optional): path of the settings file

    Returns:
        dict[str, Any]
    """
    with open(settings_path) as json_file:
        return ujson.load(json_file)[section]


def dbToLinear(value_db: float) -> float:
    """Convert a value expressed in dB to linear scale.

    Args:
        value_db (float)

    Returns:
        float
    """
    if not math.isfinite(value_db):
        raise ModelError(f"Value in dB must be finite, got {value_db}.")
    try:
        return 10.0 ** (value_db / 10.0)
    except OverflowError as e:
        raise ModelError(f"Value of {value_db} dB is out of range.") from e


def linearToDb(value: float) -> float:
    """Convert a strictly positive linear value to dB.

    Args:
        value (float)

    Returns:
        float
    """
    if not value > 0 or not math.isfinite(value):
        raise ModelError(f"Linear value must be positive and finite, got {value}.")
    return 10.0 * math.log10(value)


def deriveSeed(master_seed: int, *keys: int) -> int:
    """Derive a child seed from a master seed and a list of integer keys.

    The same (master_seed, keys) always yields the same seed, whatever the
    order in which seeds are derived.

    Args:
        master_seed (int): 64-bit unsigned seed
        keys (int): non negative integers identifying the child

    Returns:
        int: 64-bit unsigned seed
    """
    sequence = np.random.SeedSequence([master_seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
