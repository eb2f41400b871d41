"""Physical constants (SI) and unit conversions used across the package."""
from scipy import constants as _c

E_CHARGE = _c.e
EPS0 = _c.epsilon_0
HBAR = _c.hbar
AMU = _c.atomic_mass

YB171_MASS_AMU = 170.9363258

UM = 1e-6
MHZ = 1e6
KHZ = 1e3

# stand-in for an electrode extent that runs off to infinity
BIG = 1e6
