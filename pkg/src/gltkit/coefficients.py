"""Named diffusion-coefficient presets, dimension-aware.

Presets rather than an expression parser; these cover every coefficient
used by the experiment suite.  The 2D ``jump`` coefficient takes the value
from the y >= x side on its discontinuity line (documented tie-break);
``jump5000`` jumps between 1 and 5000 across the quarter square.
"""

from __future__ import annotations

import math

_PRESETS_1D = {
    "one": lambda x: 1.0,
    "exp_xy": lambda x: math.exp(x),
    "sqrt_mix": lambda x: 1.0 + 2.0 * math.sqrt(x),
    "jump": lambda x: 1.0 if x < 0.5 else 2.0,
    "x10": lambda x: 10.0 * x + 1.0,
    "abs_centered": lambda x: abs(x - 0.5) + 1.0,
    "jump5000": lambda x: 1.0 if x <= 0.5 else 5000.0,
}

_PRESETS_2D = {
    "one": lambda x, y: 1.0,
    "exp_xy": lambda x, y: math.exp(x + y),
    "sqrt_mix": lambda x, y: 1.0 + 2.0 * math.sqrt(x) + y,
    "jump": lambda x, y: 1.0 if y >= x else 2.0,
    "x10": lambda x, y: 10.0 * (x + y) + 1.0,
    "abs_centered": lambda x, y: abs(x - 0.5) + abs(y - 0.5) + 1.0,
    "jump5000": lambda x, y: 1.0 if (x <= 0.5 and y <= 0.5) else 5000.0,
}

PRESET_NAMES = tuple(_PRESETS_2D)


def coefficient(name: str, d: int):
    """Resolve a preset; ``one`` resolves to None (the constant-1 fast path)."""
    table = {1: _PRESETS_1D, 2: _PRESETS_2D}.get(d)
    if table is None:
        raise ValueError("d must be 1 or 2")
    if name not in table:
        raise ValueError(f"unknown coefficient preset {name!r}; choose from {PRESET_NAMES}")
    if name == "one":
        return None
    return table[name]
