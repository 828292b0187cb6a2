"""Unit conventions shared across the package.

Frequencies in configs and public APIs are ordinary frequencies nu in MHz
(omega = 2*pi*nu), lengths in micrometres, times in microseconds.  Energies
are quoted as E/h in MHz.  The quantum engines convert to angular frequencies
(rad/us) internally; k_B = 1 so temperatures share the MHz energy unit.
"""

import math

TWO_PI = 2.0 * math.pi

#: Van der Waals coefficient C6/h for Rb 75S, in MHz * um^6 (1947 GHz um^6).
DEFAULT_C6_MHZ_UM6 = 1.947e6

#: Default interaction cutoff, in units of the lattice spacing.
DEFAULT_CUTOFF_A = 5.2


def angular(freq_mhz: float) -> float:
    """Ordinary frequency in MHz -> angular frequency in rad/us."""
    return TWO_PI * freq_mhz


def ordinary(omega_rad_per_us: float) -> float:
    """Angular frequency in rad/us -> ordinary frequency in MHz."""
    return omega_rad_per_us / TWO_PI
