"""General-purpose utilities"""

import json
import os
from pathlib import Path
import numpy as np


def safe_write(filepath, blob):
    """
    A two-step write: the data lands in a temporary sibling first, then replaces the target.

    :param filepath: full path
    :param blob: binary data
    """
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    temp_file = filepath.with_suffix(filepath.suffix + ".saving")
    temp_file.write_bytes(blob)
    os.replace(temp_file, filepath)


def safe_write_text(filepath, text):
    safe_write(filepath, text.encode("utf-8"))


def safe_write_json(filepath, obj):
    """
    Write obj as indented JSON with sorted keys so that equal content yields equal bytes.
    """
    safe_write_text(
        filepath, json.dumps(to_builtin(obj), indent=2, sort_keys=True) + "\n"
    )


def to_builtin(obj):
    """
    Convert numpy scalars and arrays nested in dicts and lists into plain python values.
    """
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def parse_float_list(text):
    """
    Parse a comma-separated list of numbers, e.g. "90,100" -> [90.0, 100.0]
    """
    if text is None:
        return None
    return [float(item) for item in str(text).split(",") if item.strip()]
