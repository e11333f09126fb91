"""Decentralized sequential hypothesis testing: simulator and calibration."""

try:
    from ._dsprt import *  # noqa: F401,F403
    from ._dsprt import __doc__ as _core_doc  # noqa: F401
except ImportError:  # running against a bare build tree
    from _dsprt import *  # noqa: F401,F403
