from . import aircraft, pmsm, uav
from .base import FlatPlant

PLANTS = {
    "aircraft": aircraft.make_plant,
    "uav": uav.make_plant,
    "pmsm": pmsm.make_plant,
}


def make_plant(name: str) -> FlatPlant:
    try:
        return PLANTS[name]()
    except KeyError:
        raise ValueError(f"unknown plant '{name}' (choose from {sorted(PLANTS)})")
