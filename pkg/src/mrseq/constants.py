"""Physical constants shared across the package."""

import math

# Reduced gyromagnetic ratio of 1H, gamma/2pi [Hz/T].  Bound to the built-in
# variable `gamma` in the expression scope.
GAMMA_BAR = 42.5774688e6

# Gyromagnetic ratio of 1H [rad/s/T].
GAMMA_RAD = 2.0 * math.pi * GAMMA_BAR
