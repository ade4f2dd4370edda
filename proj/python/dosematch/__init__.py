"""Dose-response matching on ordered-logit propensity scores."""

from ._dosematch import *  # noqa: F401,F403
from ._dosematch import __version__, geo  # noqa: F401
