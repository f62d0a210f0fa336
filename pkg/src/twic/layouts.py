"""Single-slot nonfeedback level layouts.

A layout gives, for each of the ``q`` transmit levels of each user, a GF(2)
combination (int mask) of that user's own bits.  Both receivers must be able
to decode all bits of their own user treating the other user as noise.
Used in pairs ``(a, b)`` then ``(b, a)`` across two slots, a layout pair
achieves ``a + b`` bits per slot.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .capacity import ForwardRegime, c_no, forward_regime
from .channel import ic_outputs
from .gf2 import rank_int

SEARCH_SEED = 20240601
SEARCH_TRIES = 40000


class UnsupportedConfig(ValueError):
    pass


@dataclass(frozen=True)
class SlotLayout:
    """Per-level masks; user 1 owns bits ``0..a-1``, user 2 owns ``0..b-1``."""

    a: int
    b: int
    user1: tuple[int, ...]
    user2: tuple[int, ...]


def _decodes(n: int, m: int, lay1, lay2, a: int, b: int) -> bool:
    # put user 2's bits above user 1's so a single int carries both
    hi = [v << a for v in lay2]
    y1, y2 = ic_outputs(list(lay1), hi, n, m)
    own1, own2 = (1 << a) - 1, ((1 << b) - 1) << a

    def ok(y, own, count):
        return rank_int(y) - rank_int([v & ~own for v in y]) == count

    return ok(y1, own1, a) and ok(y2, own2, b)


def _structured(n: int, m: int) -> SlotLayout | None:
    q = max(n, m)
    regime = forward_regime(n, m)
    if regime is ForwardRegime.VERY_STRONG:
        lay = tuple(1 << i if i < n else 0 for i in range(q))
        return SlotLayout(n, n, lay, lay)
    if regime is ForwardRegime.WEAK:
        return common_private_layout(n, m)
    return None


def common_private_layout(n: int, m: int) -> SlotLayout:
    """Weak interference: common bits on top, private bits below level ``m``."""
    p = max(0, 2 * m - n)
    levels = list(range(p)) + list(range(m, n))
    lay = [0] * n
    for k, lvl in enumerate(levels):
        lay[lvl] = 1 << k
    return SlotLayout(len(levels), len(levels), tuple(lay), tuple(lay))


def _random_search(n: int, m: int, a: int, b: int, rng: random.Random, tries: int):
    q = max(n, m)

    def draw(k):
        if k == 0:
            return 0
        if rng.random() < 0.9:
            return rng.choice([0] + [1 << i for i in range(k)])
        return rng.getrandbits(k)

    for _ in range(tries):
        lay1 = tuple(draw(a) for _ in range(q))
        lay2 = tuple(draw(b) for _ in range(q))
        if _decodes(n, m, lay1, lay2, a, b):
            return SlotLayout(a, b, lay1, lay2)
    return None


@lru_cache(maxsize=None)
def nonfeedback_layout(n: int, m: int) -> SlotLayout:
    """Layout pair achieving ``c_no(n, m)`` bits per slot over two slots.

    Very strong and weak interference use the textbook layouts.  The moderate
    regime uses a seeded random search over linear layouts, trying the most
    balanced split first.
    """
    found = _structured(n, m)
    if found is not None:
        return found
    total = int(c_no(n, m))
    if total == 0:
        return SlotLayout(0, 0, (0,) * max(n, m), (0,) * max(n, m))
    rng = random.Random(SEARCH_SEED * 1000 + n * 37 + m)
    hi = (total + 1) // 2
    for a in range(hi, total + 1):
        lay = _random_search(n, m, a, total - a, rng, SEARCH_TRIES)
        if lay is not None:
            return lay
    raise UnsupportedConfig(f"no nonfeedback layout found for (n, m) = ({n}, {m})")
