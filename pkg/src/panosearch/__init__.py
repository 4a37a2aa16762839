"""Interactive panorama-as-simulator environment and benchmark stack."""

from panosearch.actions import Action, Invalid, Rotate, Submit
from panosearch.geometry import AngularBox, Direction, ToleranceSpec

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AngularBox",
    "Direction",
    "Invalid",
    "Rotate",
    "Submit",
    "ToleranceSpec",
    "__version__",
]
