"""Physical constants, CGS-Gaussian unless noted."""

BOLTZMANN = 1.380649e-16  # erg/K
BOHR_MAGNETON = 9.2740100783e-21  # erg/G
ELEMENTARY_CHARGE = 1.602176634e-19  # C, currents are carried in A
GYROMAGNETIC_RATIO = 1.76e7  # rad/(s*Oe)
FOUR_PI = 12.566370614359172
