"""Output files of the inpainting demo: 8-bit PGM images, objective traces as
CSV and a key=value run summary."""

import logging
import math
from pathlib import Path
from typing import Dict, Mapping, Sequence, Union

import numpy as np
import pandas as pd
from PIL import Image

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_uint8(img) -> np.ndarray:
    """Clamp to [0, 1] and quantize to 8 bits."""
    return np.round(np.clip(np.asarray(img, dtype=float), 0.0, 1.0) * 255.0).astype(np.uint8)


def write_pgm(path: PathLike, img) -> None:
    # Pillow writes mode "L" images as binary P5 through its PPM plugin
    Image.fromarray(to_uint8(img)).save(path, format="PPM")
    logger.debug("wrote %s", path)


def read_pgm(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=float) / 255.0


def write_trace(path: PathLike, trace: Sequence[float]) -> None:
    frame = pd.DataFrame({"iteration": np.arange(1, len(trace) + 1), "objective": list(trace)})
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug("wrote %s (%d rows)", path, len(frame))


def read_trace(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def _format_value(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if hasattr(value, "value"):  # enums
        return str(value.value)
    return str(value)


def write_summary(path: PathLike, values: Mapping[str, object]) -> None:
    lines = [f"{key}={_format_value(values[key])}" for key in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_summary(path: PathLike) -> Dict[str, str]:
    summary = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            summary[key] = value
    return summary
