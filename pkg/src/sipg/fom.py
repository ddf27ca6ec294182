"""Published attribute registry.

Single source of truth for the object classes and attributes that cross
role boundaries, their units, which role may publish each one, and the
Out->In pairings used by the demand-closure checks.  Both the federation
layer and the flow ledger key off this table.
"""

from __future__ import annotations

# Roles
ROLE_AGRICULTURE = "agriculture"
ROLE_WATER = "water"
ROLE_ENERGY = "energy"
ROLE_OBSERVER = "observer"
SECTOR_ROLES = (ROLE_AGRICULTURE, ROLE_WATER, ROLE_ENERGY)

# Object classes
CLASS_AGRICULTURE = "AgricultureSystem"
CLASS_WATER = "WaterSystem"
CLASS_PETROLEUM = "PetroleumSystem"
CLASS_ELECTRICAL = "ElectricalSystem"
CLASS_SOCIETAL = "SocietalSystem"

# Units
U_CURRENCY = "$"
U_FOOD = "GJ"
U_WATER = "MCM"
U_OIL = "Mtoe"
U_ELECTRICITY = "TWh"

_COMMON = (("Currency Flow", U_CURRENCY), ("Capital Expenses", U_CURRENCY))

# (class, attribute) -> units
ATTRIBUTES: dict[tuple[str, str], str] = {}
for _cls, _attrs in {
    CLASS_AGRICULTURE: (("Water In", U_WATER),
                        ("Food Out (Societal)", U_FOOD)) + _COMMON,
    CLASS_WATER: (("Electricity In", U_ELECTRICITY),
                  ("Water Out (Agriculture)", U_WATER),
                  ("Water Out (Societal)", U_WATER)) + _COMMON,
    CLASS_PETROLEUM: (("Electricity In", U_ELECTRICITY),
                      ("Oil Out (Societal)", U_OIL),
                      ("Oil Out (Electrical)", U_OIL)) + _COMMON,
    CLASS_ELECTRICAL: (("Oil In", U_OIL),
                       ("Electricity Out (Water)", U_ELECTRICITY),
                       ("Electricity Out (Societal)", U_ELECTRICITY)) + _COMMON,
    CLASS_SOCIETAL: (("Water In", U_WATER),
                     ("Food In", U_FOOD),
                     ("Oil In", U_OIL),
                     ("Electricity In", U_ELECTRICITY)),
}.items():
    for _name, _units in _attrs:
        ATTRIBUTES[(_cls, _name)] = _units

ROLE_CLASSES = {
    ROLE_AGRICULTURE: (CLASS_AGRICULTURE,),
    ROLE_WATER: (CLASS_WATER,),
    ROLE_ENERGY: (CLASS_PETROLEUM, CLASS_ELECTRICAL),
    ROLE_OBSERVER: (),
}

# Role that owns (may publish) each class; societal attributes are owned
# by the coordinator and visible to everyone.
CLASS_ROLE = {
    CLASS_AGRICULTURE: ROLE_AGRICULTURE,
    CLASS_WATER: ROLE_WATER,
    CLASS_PETROLEUM: ROLE_ENERGY,
    CLASS_ELECTRICAL: ROLE_ENERGY,
    CLASS_SOCIETAL: None,
}


def role_publications(role: str) -> tuple[tuple[str, str], ...]:
    """Every (class, attribute) pair a role is entitled to publish."""
    out = []
    for cls in ROLE_CLASSES.get(role, ()):
        for (c, attr) in ATTRIBUTES:
            if c == cls:
                out.append((c, attr))
    return tuple(sorted(out))


SOCIETAL_PUBLICATIONS = tuple(sorted(
    (c, a) for (c, a) in ATTRIBUTES if c == CLASS_SOCIETAL))

# Supply attribute -> the demand attribute it must close against.
# PetroleumSystem "Electricity In" deliberately has no matching Out.
OUT_IN_PAIRS: tuple[tuple[tuple[str, str], tuple[str, str]], ...] = (
    ((CLASS_AGRICULTURE, "Food Out (Societal)"), (CLASS_SOCIETAL, "Food In")),
    ((CLASS_WATER, "Water Out (Agriculture)"), (CLASS_AGRICULTURE, "Water In")),
    ((CLASS_WATER, "Water Out (Societal)"), (CLASS_SOCIETAL, "Water In")),
    ((CLASS_PETROLEUM, "Oil Out (Societal)"), (CLASS_SOCIETAL, "Oil In")),
    ((CLASS_PETROLEUM, "Oil Out (Electrical)"), (CLASS_ELECTRICAL, "Oil In")),
    ((CLASS_ELECTRICAL, "Electricity Out (Water)"), (CLASS_WATER, "Electricity In")),
    ((CLASS_ELECTRICAL, "Electricity Out (Societal)"), (CLASS_SOCIETAL, "Electricity In")),
)

_CLASS_PREFIX = {
    CLASS_AGRICULTURE: "agriculture",
    CLASS_WATER: "water",
    CLASS_PETROLEUM: "petroleum",
    CLASS_ELECTRICAL: "electrical",
    CLASS_SOCIETAL: "societal",
}
_PREFIX_CLASS = {v: k for k, v in _CLASS_PREFIX.items()}


def flow_key(class_name: str, attribute: str) -> str:
    """Ledger key for a published attribute, e.g. 'agriculture.food_out_societal'."""
    if (class_name, attribute) not in ATTRIBUTES:
        raise KeyError(f"unknown attribute {attribute!r} on {class_name!r}")
    slug = (attribute.lower().replace("(", "").replace(")", "").replace(" ", "_"))
    return f"{_CLASS_PREFIX[class_name]}.{slug}"


def published_attribute(key: str) -> tuple[str, str, str] | None:
    """Inverse of flow_key: (class, attribute, units), or None for internal keys."""
    prefix, _, slug = key.partition(".")
    cls = _PREFIX_CLASS.get(prefix)
    if cls is None:
        return None
    for (c, attr), units in ATTRIBUTES.items():
        if c == cls and flow_key(c, attr) == key:
            return (c, attr, units)
    return None


# Sector-internal ledger series (never cross the wire; merged out-of-band).
INTERNAL_KEYS: dict[str, str] = {
    "societal.population": "million",
    "agriculture.food_production": U_FOOD,
    "agriculture.food_transport": U_FOOD,
    "agriculture.food_import": U_FOOD,
    "agriculture.food_export": U_FOOD,
    "agriculture.land_use": "km2",
    "water.water_production": U_WATER,
    "water.water_lift": U_WATER,
    "water.water_import": U_WATER,
    "water.aquifer_stock": "km3",
    "petroleum.oil_production": U_OIL,
    "petroleum.oil_transport": U_OIL,
    "petroleum.oil_import": U_OIL,
    "petroleum.oil_export": U_OIL,
    "petroleum.reservoir_withdrawal": U_OIL,
    "petroleum.reservoir_stock": "billion toe",
    "electrical.electricity_production": U_ELECTRICITY,
    "electrical.private_generation": U_ELECTRICITY,
}

ALL_KEYS: tuple[str, ...] = tuple(sorted(
    [flow_key(c, a) for (c, a) in ATTRIBUTES] + list(INTERNAL_KEYS)))


def key_units(key: str) -> str:
    pub = published_attribute(key)
    if pub is not None:
        return pub[2]
    if key in INTERNAL_KEYS:
        return INTERNAL_KEYS[key]
    raise KeyError(f"unknown ledger key {key!r}")


def role_of_key(key: str) -> str | None:
    """Owning role for visibility filtering; None means common to all."""
    prefix = key.partition(".")[0]
    cls = _PREFIX_CLASS.get(prefix)
    if cls is None:
        raise KeyError(f"unknown ledger key {key!r}")
    return CLASS_ROLE[cls]
