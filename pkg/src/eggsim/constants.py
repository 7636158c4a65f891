"""Physical constants (CODATA 2018, exact where the SI fixes them) and unit helpers.

=====================  ===========================  =====================
name                   value                        unit
=====================  ===========================  =====================
HBAR                   1.054571817e-34              J s
KB                     1.380649e-23                 J / K
E_CHARGE               1.602176634e-19              C
C_LIGHT                299792458                    m / s
AMU                    1.66053906660e-27            kg
BOHR_RADIUS            5.29177210903e-11            m
DEBYE                  1e-21 / C_LIGHT              C m
=====================  ===========================  =====================
"""

import math
import re

HBAR = 1.054571817e-34
KB = 1.380649e-23
E_CHARGE = 1.602176634e-19
C_LIGHT = 299792458.0
AMU = 1.66053906660e-27
BOHR_RADIUS = 5.29177210903e-11
DEBYE = 1e-21 / C_LIGHT

TWO_PI = 2.0 * math.pi

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_FREQ_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Z]+)\s*$")


def to_angular(value):
    """Convert a frequency given as a number (rad/s) or a string like
    ``"1 MHz"`` (ordinary frequency) into rad/s."""
    if isinstance(value, (int, float)):
        return float(value)
    match = _FREQ_RE.match(str(value))
    if match is None or match.group(2).lower() not in _FREQ_UNITS:
        raise ValueError(f"cannot parse frequency {value!r}; use rad/s or e.g. '1 MHz'")
    return TWO_PI * float(match.group(1)) * _FREQ_UNITS[match.group(2).lower()]
