"""JSON output with 9 significant digits and atomic file writes."""
import json
import math
import os


def round_sig(obj, digits=9):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    if hasattr(obj, "tolist"):
        return round_sig(obj.tolist(), digits)
    return obj


def dumps_json(obj):
    return json.dumps(round_sig(obj), indent=2, allow_nan=False) + "\n"


def atomic_write_text(text, path):
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    try:
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def dump_json(obj, path):
    atomic_write_text(dumps_json(obj), path)
