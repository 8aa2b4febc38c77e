"""Named constant sets.

The ``truncated`` set uses the truncated values ħ = 1.05e-34 J s and
k_B = 1.38e-23 J/K that the published temperatures were computed with;
``codata`` uses CODATA 2018 via :mod:`scipy.constants`.
"""
import os
from dataclasses import dataclass

from scipy import constants as _sc

ENV_VAR = "QCOOL_CONSTANTS"


@dataclass(frozen=True)
class ConstantSet:
    name: str
    hbar: float
    k_B: float


TRUNCATED = ConstantSet("truncated", 1.05e-34, 1.38e-23)
CODATA = ConstantSet("codata", _sc.hbar, _sc.k)

CONSTANT_SETS = {c.name: c for c in (TRUNCATED, CODATA)}


def get_constant_set(name=None):
    """Look up a constant set by name; ``None`` consults ``$QCOOL_CONSTANTS``, then ``truncated``."""
    if name is None:
        name = os.environ.get(ENV_VAR, "truncated")
    try:
        return CONSTANT_SETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown constant set {name!r}; choose from {sorted(CONSTANT_SETS)}") from None
