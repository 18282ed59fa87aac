"""Three-level atom-diode simulator.

Stationary coupled-channel scattering, diode operating-window search, and
Monte Carlo open-system wavepacket dynamics with spontaneous-emission recoil.
"""

from ._atomdiode import *  # noqa: F401,F403
from ._atomdiode import __doc__ as _core_doc  # noqa: F401

__version__ = "1.0.0"
