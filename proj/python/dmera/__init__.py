"""Noisy DMERA layer channels, fixed points and mitigation."""

import os
from importlib import resources

from ._core import *  # noqa: F401,F403
from ._core import AngleProfile, __version__

os.environ.setdefault("DMERA_DATA_DIR", str(resources.files(__name__) / "data"))


def bundled_angles(depth, variant="C1"):
    """Angle profile shipped with the package for depth 2, 3 or 4."""
    path = resources.files(__name__) / "data" / "angles" / f"D{depth}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled angles for depth {depth}")
    p = AngleProfile.from_json(path.read_text())
    return AngleProfile(list(p.thetas), variant)
