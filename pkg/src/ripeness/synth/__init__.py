"""
Procedural synthetic banana scenes.
"""

from .generate import generate_dataset, iter_scenes, read_manifest, synthesize
from .render import render_banana
from .sublevels import SUBLEVELS, RipenessSublevel, sublevel

__all__ = [
    "SUBLEVELS",
    "RipenessSublevel",
    "generate_dataset",
    "iter_scenes",
    "read_manifest",
    "render_banana",
    "sublevel",
    "synthesize",
]
