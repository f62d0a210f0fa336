"""Bit-exact ADT deterministic channel arithmetic.

A signal is a stack of GF(2) levels, index 0 being the most significant.
A link with ``k`` levels out of ``q`` delivers the signal shifted down by
``q - k``; the two incoming links of a receiver superpose by XOR.

The low-level helpers (:func:`shift_levels`, :func:`superpose`,
:func:`ic_outputs`) only rely on ``^`` so they work unchanged on plain bits,
on bit-sliced numpy words and on integer bitmasks used for symbolic
propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

INF = math.inf


def parse_fraction(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, ``"0.25"`` or an int into an exact fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational: {text!r}") from exc


def ratio(num: int, den: int) -> Fraction | float | None:
    """``num/den`` with ``+inf`` for ``x/0`` and ``None`` for ``0/0``."""
    if den > 0:
        return Fraction(num, den)
    return INF if num > 0 else None


@dataclass(frozen=True)
class LevelVector:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"level vector entries must be 0 or 1, got {self.bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, length: int) -> "LevelVector":
        return cls((0,) * length)

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __iter__(self):
        return iter(self.bits)

    def __xor__(self, other: "LevelVector") -> "LevelVector":
        if len(self) != len(other):
            raise ValueError(f"length mismatch: {len(self)} vs {len(other)}")
        return LevelVector(superpose(self.bits, other.bits))

    def __repr__(self) -> str:
        return f"LevelVector({list(self.bits)})"


@dataclass(frozen=True)
class ChannelConfig:
    """Forward IC ``(n, m)``, backward IC ``(nb, mb)`` and feedback fraction."""

    n: int
    m: int
    nb: int = 0
    mb: int = 0
    lam: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("n", "m", "nb", "mb"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a nonnegative int, got {v!r}")
        lam = parse_fraction(self.lam)
        if not 0 <= lam <= 1:
            raise ValueError(f"lambda must lie in [0, 1], got {lam}")
        object.__setattr__(self, "lam", lam)

    @property
    def q(self) -> int:
        return max(self.n, self.m)

    @property
    def qb(self) -> int:
        return max(self.nb, self.mb)

    @property
    def alpha(self):
        return ratio(self.m, self.n)

    @property
    def alpha_b(self):
        return ratio(self.mb, self.nb)

    def with_lambda(self, lam) -> "ChannelConfig":
        return ChannelConfig(self.n, self.m, self.nb, self.mb, parse_fraction(lam))

    def reversed(self, lam=None) -> "ChannelConfig":
        """Swap the roles of the two directions (backward IC becomes forward)."""
        return ChannelConfig(self.nb, self.mb, self.n, self.m,
                             self.lam if lam is None else parse_fraction(lam))

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "m": self.m, "nb": self.nb, "mb": self.mb,
                "lambda": f"{self.lam.numerator}/{self.lam.denominator}"}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ChannelConfig":
        return cls(d["n"], d["m"], d["nb"], d["mb"], parse_fraction(d["lambda"]))


# -- generic level arithmetic ---------------------------------------------


def shift_levels(levels: Sequence, s: int, zero=0) -> tuple:
    q = len(levels)
    s = min(s, q)
    return (zero,) * s + tuple(levels[: q - s])


def superpose(a: Sequence, b: Sequence) -> tuple:
    return tuple(x ^ y for x, y in zip(a, b, strict=True))


def ic_outputs(x1: Sequence, x2: Sequence, direct: int, cross: int, zero=0):
    """Outputs of a symmetric deterministic IC with ``direct``/``cross`` levels.

    Returns ``(y1, y2)`` where ``y_k`` is heard by the receiver paired with
    transmitter ``k``.
    """
    q = max(direct, cross)
    if len(x1) != q or len(x2) != q:
        raise ValueError(f"inputs must have {q} levels, got {len(x1)} and {len(x2)}")
    y1 = superpose(shift_levels(x1, q - direct, zero), shift_levels(x2, q - cross, zero))
    y2 = superpose(shift_levels(x2, q - direct, zero), shift_levels(x1, q - cross, zero))
    return y1, y2


# -- LevelVector API ---------------------------------------------------------


def shift_down(v: LevelVector, s: int) -> LevelVector:
    if s < 0:
        raise ValueError("shift must be nonnegative")
    return LevelVector(shift_levels(v.bits, s))


def visible_part(x: LevelVector, m: int) -> LevelVector:
    """Top ``m`` levels of ``x``: the part heard across the cross link."""
    if not 0 <= m <= len(x):
        raise ValueError(f"cannot take {m} visible levels of a {len(x)}-level signal")
    return LevelVector(x.bits[:m])


def transmit_forward(x1: LevelVector, x2: LevelVector, cfg: ChannelConfig):
    """Signals received by users 1~ and 2~."""
    y1, y2 = ic_outputs(x1.bits, x2.bits, cfg.n, cfg.m)
    return LevelVector(y1), LevelVector(y2)


def transmit_backward(xb1: LevelVector, xb2: LevelVector, cfg: ChannelConfig):
    """Signals received by users 1 and 2 from users 1~ and 2~."""
    y1, y2 = ic_outputs(xb1.bits, xb2.bits, cfg.nb, cfg.mb)
    return LevelVector(y1), LevelVector(y2)
