"""Fiducial marker detection and image enhancement for degraded underwater imagery."""

import csv
import io
import json

from ._core import (
    Error,
    MarkerDictionary,
    generate_dictionary,
    load_dictionary,
    load_image,
    luma_u8,
    rotate_code,
    save_image,
)
from . import _core

__all__ = [
    "Error",
    "MarkerDictionary",
    "detect",
    "enhance",
    "generate_dictionary",
    "load_dictionary",
    "load_image",
    "luma_u8",
    "rotate_code",
    "run_grid",
    "save_image",
    "simulate",
]


def detect(gray, dictionary, underwater=False, detector=None, mask=None):
    """Detects markers in an (H, W) uint8 image; returns a list of dicts."""
    params = {"detector": detector or {}, "mask": mask or {}}
    return _core.detect(gray, dictionary, underwater, json.dumps(params))


def enhance(image, filter="none", params=None):
    """Applies a named filter to a float image in [0,1]."""
    return _core.enhance(image, json.dumps({"filter": filter, "params": params or {}}))


def simulate(config, out_dir, seed=0):
    """Renders a synthetic dataset; returns the ground-truth document."""
    return json.loads(_core.simulate(json.dumps(config), str(out_dir), seed))


def run_grid(config, base_dir=""):
    """Runs a filter x detector grid; returns (records, summary)."""
    records_csv, summary = _core.run_grid(json.dumps(config), str(base_dir))
    return list(csv.DictReader(io.StringIO(records_csv))), json.loads(summary)
