"""Physical constants (SI, 2019 redefinition) and unit helpers.

Internal energy unit is GHz (h = 1); conversions to joules happen only at
thermal/noise boundaries.
"""

import math

E_CHARGE = 1.602176634e-19        # elementary charge (C), exact
H_PLANCK = 6.62607015e-34         # Planck constant (J s), exact
HBAR = H_PLANCK / (2.0 * math.pi)
K_BOLTZMANN = 1.380649e-23        # Boltzmann constant (J/K), exact
EPS0 = 8.8541878128e-12           # vacuum permittivity (F/m)

PHI0 = H_PLANCK / (2.0 * E_CHARGE)         # magnetic flux quantum h/2e (Wb)
PHI0_REDUCED = HBAR / (2.0 * E_CHARGE)     # reduced flux quantum hbar/2e (Wb)

GHZ = 1.0e9


def ghz_to_joule(e_ghz: float) -> float:
    return e_ghz * GHZ * H_PLANCK


def joule_to_ghz(e_j: float) -> float:
    return e_j / (GHZ * H_PLANCK)


def ghz_to_angular(f_ghz: float) -> float:
    """GHz (ordinary frequency) -> rad/s."""
    return 2.0 * math.pi * f_ghz * GHZ
