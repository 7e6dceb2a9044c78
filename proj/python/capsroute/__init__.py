"""Dynamic routing between capsules viewed as nonlinear gradient descent."""

from ._core import *  # noqa: F401,F403
from ._core import CapsrouteError, PredictionSet  # noqa: F401
