"""Numerical thresholds used by the strict inequalities of the solver."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """Thresholds for rank decisions and strict inequalities.

    Attributes
    ----------
    rank : float
        A reduced pivot counts as zero when ``|pivot| <= rank * max(1, row_norm)``.
    f : float
        Squared-metre margin for ``f(x) < 0`` (object strictly below the holding height).
    z : float
        Metres; the object must satisfy ``z_o > z``.
    slack : float
        Squared-metre margin every slack cable must exceed.
    hull : float
        Metres; ``r_o`` must be at least this far inside the taut-robot hull.
    """

    rank: float = 1e-9
    f: float = 1e-12
    z: float = 1e-9
    slack: float = 1e-9
    hull: float = 1e-9

    @classmethod
    def parse(cls, text: str | None, base: "Tolerances | None" = None) -> "Tolerances":
        """Parse ``"slack=1e-8,hull=0"`` style overrides on top of ``base``."""
        tol = base or cls()
        if not text:
            return tol
        known = {f.name for f in fields(cls)}
        updates = {}
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in known:
                raise ValueError(f"unknown tolerance override {item!r}; expected one of {sorted(known)}")
            updates[key] = float(value)
            if updates[key] < 0:
                raise ValueError(f"tolerance {key} must be non-negative")
        return replace(tol, **updates)


DEFAULT_TOLERANCES = Tolerances()
