"""Pinned-seed reference devices shipped with the package.

Two Ge-diffusion landscapes are committed as data files so studies and
regression tests run against identical devices everywhere:

* ``lvsp_device``: contains a low valley splitting point with a minimum of
  about 7.3 ueV; loaded recentered so the dip sits at x = 0.
* ``dephasing_device``: a deep-dip device whose splitting sweeps through
  the three reference values 54.53, 23.52 and 2.61 ueV used by the
  dephasing study; operating positions for those values are pinned below.
"""

from __future__ import annotations

from importlib import resources

from .landscape import LandscapeProfile, load_landscape

#: Operating position of the low-splitting dip in lvsp_device coordinates, nm.
LVSP_DIP_POSITION = 93.50879783059993

#: Valley splitting at the dip, meV.
LVSP_MIN_SPLITTING = 7.3202268672914075e-3

#: (target splitting meV, position nm) pairs on the dephasing device.
DEPHASING_POINTS = (
    (54.53e-3, 71.8592202360287),
    (23.52e-3, 78.1632754643851),
    (2.61e-3, 82.75446016203907),
)


def _load(name: str) -> LandscapeProfile:
    with resources.as_file(resources.files("spinbus").joinpath("data", name)) as p:
        return load_landscape(p)


def lvsp_device(recenter: bool = True) -> LandscapeProfile:
    """The committed ~7.3 ueV low-valley-splitting device."""
    land = _load("lvsp_device.json")
    return land.recentered(LVSP_DIP_POSITION) if recenter else land


def dephasing_device() -> LandscapeProfile:
    """The committed deep-dip device for the dephasing study."""
    return _load("dephasing_device.json")


def dephasing_point_profiles():
    """The dephasing device recentered at each pinned reference splitting.

    Returns a list of (splitting_meV, recentered profile).
    """
    land = dephasing_device()
    return [(ev, land.recentered(x)) for ev, x in DEPHASING_POINTS]
