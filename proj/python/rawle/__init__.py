"""Python bindings for the rawle simulation core."""

from ._rawle import *  # noqa: F401,F403
from ._rawle import __doc__  # noqa: F401
