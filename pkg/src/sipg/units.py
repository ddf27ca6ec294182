"""Unit conversion constants.

Scenario documents and templates keep the units their parameters are
conventionally quoted in (kWh/m3, TJ/km2, million $, km3, billion toe).
Everything that crosses a model boundary is converted here, once, to the
ledger units: currency $, food GJ, water MCM, oil Mtoe, electricity TWh.
"""

# Fixed SI-derived factors.
M3_PER_MCM = 1.0e6
LITERS_PER_MCM = 1.0e9
MCM_PER_KM3 = 1.0e3

KWH_PER_TWH = 1.0e9
MWH_PER_TWH = 1.0e6

TOE_PER_MTOE = 1.0e6
MTOE_PER_BTOE = 1.0e3

GJ_PER_TJ = 1.0e3
GJ_PER_EJ = 1.0e9

DOLLARS_PER_MILLION = 1.0e6

# Defaults for the two declared-by-scenario factors.  A scenario document
# may override them in its "conversions" block; they are never hard-coded
# at use sites.
DEFAULT_KCAL_PER_GJ = 238846.0
DEFAULT_DAYS_PER_YEAR = 365.0
