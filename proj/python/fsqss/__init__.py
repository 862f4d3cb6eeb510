"""Free-space CV quantum secret sharing simulator."""

from ._core import *  # noqa: F401,F403
from ._core import ConfigError, NumericalError  # noqa: F401
