"""Compiled transmission plans for the forward/backward deterministic IC.

A plan is an ordered list of channel uses (events).  Each event is either a
forward use, where users 1 and 2 transmit and 1~ and 2~ listen, or a backward
use, where 1~ and 2~ transmit (or stay silent) and users 1 and 2 listen.

Every transmitted level is a *recipe*: a frozenset of terms whose XOR gives
the level.  A term is ``("w", j)`` for message bit ``j`` owned by the sender
or ``("rx", e, l)`` for level ``l`` the sender received in earlier event
``e``.  Decoders are recipes of the same shape.  Schemes are written
symbolically (int masks over message bits) and :func:`wire` turns the masks
into recipes, raising :class:`CausalityError` if a sender cannot compute
what it is asked to send.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .capacity import (ForwardRegime, c_no, c_pf, feedback_levels, forward_regime,
                       inner_sum)
from .channel import ChannelConfig, LevelVector, ic_outputs
from .gf2 import XorBasis, mask_bits
from .layouts import UnsupportedConfig, common_private_layout, nonfeedback_layout

M_CAP = 10_000

TERMINALS = ("1", "2", "1~", "2~")
FORWARD, BACKWARD = "F", "B"
# (senders, receivers) per direction; receiver k hears sender k directly
ROLES = {FORWARD: (("1", "2"), ("1~", "2~")), BACKWARD: (("1~", "2~"), ("1", "2"))}


class SchemeKind(str, enum.Enum):
    NON_FEEDBACK = "NonFeedback"
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    TYPE_III = "TypeIII"
    FOUR_MESSAGE = "FourMessage"
    WITNESS = "Witness"


class RegimeMismatch(ValueError):
    pass


class CausalityError(RuntimeError):
    pass


Term = tuple
Recipe = frozenset


@dataclass(frozen=True)
class Event:
    direction: str
    slot: int
    tx: tuple  # per sender: tuple[Recipe, ...] or None when silent
    contents: tuple  # per sender: tuple[int, ...] masks or None


@dataclass(frozen=True)
class RatePoint:
    r1: Fraction
    r2: Fraction
    rt1: Fraction = Fraction(0)
    rt2: Fraction = Fraction(0)

    @property
    def forward_sum(self) -> Fraction:
        return self.r1 + self.r2

    @property
    def backward_sum(self) -> Fraction:
        return self.rt1 + self.rt2


@dataclass(frozen=True)
class SchemeSpec:
    kind: SchemeKind
    cfg: ChannelConfig
    M: int
    fresh_bits_per_user_per_stage: int
    extra_bits_per_user: int
    backward_message_bits: int
    bit_names: tuple[str, ...]
    bit_owner: tuple[str, ...]
    events: tuple[Event, ...]
    targets: dict = field(hash=False)  # terminal -> tuple of bit indices
    decoders: dict = field(hash=False)  # terminal -> {bit: Recipe or None}

    @property
    def nbits(self) -> int:
        return len(self.bit_names)

    @property
    def forward_uses(self) -> int:
        return sum(e.direction == FORWARD for e in self.events)

    def own_bits(self, terminal: str) -> tuple[int, ...]:
        return tuple(j for j, o in enumerate(self.bit_owner) if o == terminal)

    def backward_active(self) -> list[int]:
        return [i for i, e in enumerate(self.events)
                if e.direction == BACKWARD and any(t is not None for t in e.tx)]

    def to_dict(self) -> dict:
        names = self.bit_names

        def term_str(t):
            return names[t[1]] if t[0] == "w" else f"rx{t[1]}.{t[2]}"

        def recipe_str(r):
            return sorted(term_str(t) for t in r)

        def mask_str(x):
            return "+".join(names[j] for j in mask_bits(x)) or "0"

        events = []
        for e in self.events:
            senders = ROLES[e.direction][0]
            events.append({
                "direction": e.direction,
                "slot": e.slot,
                "levels": {s: None if c is None else [mask_str(v) for v in c]
                           for s, c in zip(senders, e.contents)},
                "recipes": {s: None if r is None else [recipe_str(x) for x in r]
                            for s, r in zip(senders, e.tx)},
            })
        return {
            "kind": self.kind.value,
            "cfg": self.cfg.to_dict(),
            "M": self.M,
            "fresh_bits_per_user_per_stage": self.fresh_bits_per_user_per_stage,
            "extra_bits_per_user": self.extra_bits_per_user,
            "backward_message_bits": self.backward_message_bits,
            "bits": [{"name": n, "owner": o} for n, o in zip(names, self.bit_owner)],
            "events": events,
            "decoders": {t: {names[j]: None if r is None else recipe_str(r)
                             for j, r in d.items()}
                         for t, d in self.decoders.items()},
        }


# -- generic wiring -------------------------------------------------------------


def _dims(cfg: ChannelConfig, direction: str) -> tuple[int, int]:
    return (cfg.n, cfg.m) if direction == FORWARD else (cfg.nb, cfg.mb)


def _channel(cfg, direction, x1, x2):
    direct, cross = _dims(cfg, direction)
    return ic_outputs(x1, x2, direct, cross)


def _knowledge(owner: Sequence[str]) -> dict[str, XorBasis]:
    bases = {t: XorBasis() for t in TERMINALS}
    for j, o in enumerate(owner):
        bases[o].add(1 << j, {("w", j)})
    return bases


def _receive(bases, cfg, idx, direction, contents):
    """Feed one event's outputs into the receivers' bases; returns the outputs."""
    if all(c is None for c in contents):
        return (None, None)
    q = max(_dims(cfg, direction))
    x = [c if c is not None else (0,) * q for c in contents]
    ys = _channel(cfg, direction, x[0], x[1])
    for r, y in zip(ROLES[direction][1], ys):
        for lvl, v in enumerate(y):
            bases[r].add(v, {("rx", idx, lvl)})
    return ys


def wire(cfg: ChannelConfig, owner: Sequence[str],
         plan: Sequence[tuple[str, int, tuple]]) -> tuple[tuple[Event, ...], dict]:
    """Turn symbolic per-level contents into recipes.

    ``plan`` holds ``(direction, slot, (contents_1, contents_2))`` where a
    contents entry is a tuple of masks (one per level) or None for silence.
    Returns the events and each terminal's final knowledge basis.
    """
    bases = _knowledge(owner)
    events = []
    for idx, (direction, slot, contents) in enumerate(plan):
        q = max(_dims(cfg, direction))
        tx = []
        for sender, levels in zip(ROLES[direction][0], contents):
            if levels is None:
                tx.append(None)
                continue
            if len(levels) != q:
                raise ValueError(f"event {idx}: {sender} sends {len(levels)} levels, channel has {q}")
            recipes = []
            for lvl, v in enumerate(levels):
                r = bases[sender].express(v)
                if r is None:
                    raise CausalityError(
                        f"event {idx}: terminal {sender} cannot form level {lvl}")
                recipes.append(r)
            tx.append(tuple(recipes))
        contents = tuple(None if c is None else tuple(c) for c in contents)
        _receive(bases, cfg, idx, direction, contents)
        events.append(Event(direction, slot, tuple(tx), contents))
    return tuple(events), bases


def derive_decoders(bases: dict, targets: dict, *, strict: bool = True) -> dict:
    out = {}
    for t, bits in targets.items():
        d = {}
        for j in bits:
            r = bases[t].express(1 << j)
            if r is None and strict:
                raise CausalityError(f"terminal {t} cannot decode bit {j}")
            d[j] = r
        out[t] = d
    return out


def contents_from_recipes(cfg: ChannelConfig, owner: Sequence[str],
                          plan: Sequence[tuple[str, int, tuple]]) -> list[tuple]:
    """Inverse of :func:`wire`: evaluate recipes symbolically into masks."""
    out = []
    rx: dict[tuple[int, int, str], int] = {}
    for idx, (direction, slot, recipes) in enumerate(plan):
        contents = []
        for sender, levels in zip(ROLES[direction][0], recipes):
            if levels is None:
                contents.append(None)
                continue
            row = []
            for r in levels:
                v = 0
                for term in r:
                    if term[0] == "w":
                        if owner[term[1]] != sender:
                            raise CausalityError(f"{sender} uses a bit it does not own")
                        v ^= 1 << term[1]
                    else:
                        key = (term[1], term[2], sender)
                        if key not in rx:
                            raise CausalityError(f"{sender} uses a reception it never had")
                        v ^= rx[key]
                row.append(v)
            contents.append(tuple(row))
        out.append((direction, slot, tuple(contents)))
        if all(c is None for c in contents):
            continue
        q = max(_dims(cfg, direction))
        x = [c if c is not None else (0,) * q for c in contents]
        ys = _channel(cfg, direction, x[0], x[1])
        for r, y in zip(ROLES[direction][1], ys):
            for lvl, v in enumerate(y):
                rx[(idx, lvl, r)] = v
    return out


# -- bit bookkeeping ------------------------------------------------------------

_PREFIX = {"1": "a", "2": "b", "1~": "a~", "2~": "b~"}
_ORDER = {"1": 0, "2": 1, "1~": 2, "2~": 3}


class _Bits:
    """Allocates bits in order of appearance, renumbered per owner at the end."""

    def __init__(self):
        self.owner: list[str] = []

    def new(self, terminal: str) -> int:
        self.owner.append(terminal)
        return 1 << (len(self.owner) - 1)

    def finish(self, plan):
        order = sorted(range(len(self.owner)), key=lambda j: (_ORDER[self.owner[j]], j))
        perm = {old: new for new, old in enumerate(order)}
        counters = {t: 0 for t in TERMINALS}
        names, owner = [], []
        for old in order:
            t = self.owner[old]
            counters[t] += 1
            names.append(f"{_PREFIX[t]}{counters[t]}")
            owner.append(t)

        def remap(v):
            out = 0
            for j in mask_bits(v):
                out |= 1 << perm[j]
            return out

        new_plan = [(d, s, tuple(None if c is None else tuple(remap(v) for v in c)
                                 for c in contents))
                    for d, s, contents in plan]
        return tuple(names), tuple(owner), new_plan


def _default_targets(owner: Sequence[str]) -> dict:
    # forward bits go to the paired receiver, backward bits back to their user
    partner = {"1": "1~", "2": "2~", "1~": "1", "2~": "2"}
    targets = {t: [] for t in TERMINALS}
    for j, o in enumerate(owner):
        targets[partner[o]].append(j)
    return {t: tuple(v) for t, v in targets.items() if v}


def assemble(kind: SchemeKind, cfg: ChannelConfig, M: int, fresh: int, extra: int,
             backward_bits: int, names, owner, plan, *, strict: bool = True) -> SchemeSpec:
    events, bases = wire(cfg, owner, plan)
    targets = _default_targets(owner)
    decoders = derive_decoders(bases, targets, strict=strict)
    return SchemeSpec(kind, cfg, M, fresh, extra, backward_bits, tuple(names), tuple(owner),
                      events, targets, decoders)


# -- block parameters -------------------------------------------------------------


def _gain_levels(kind: SchemeKind, cfg: ChannelConfig) -> int:
    if kind is SchemeKind.TYPE_I:
        return cfg.nb
    if kind is SchemeKind.TYPE_II:
        return cfg.mb
    return max(cfg.nb - cfg.mb, 0)


def block_parameters(kind: SchemeKind, cfg: ChannelConfig) -> tuple[int, int, int]:
    """``(M, B, K)``: slots per stage, extra bits per user, feedback uses."""
    eff = _gain_levels(kind, cfg)
    room = c_pf(cfg.n, cfg.m) - c_no(cfg.n, cfg.m)
    g = min(2 * cfg.lam * eff, room)
    M = math.lcm(g.denominator, (2 * cfg.lam).denominator)
    if M > M_CAP:
        raise UnsupportedConfig(f"lambda = {cfg.lam} needs {M} slots per stage (cap {M_CAP})")
    B = int(M * g)
    K = -(-B // eff) if B else 0
    return M, B, K


def select_kind(cfg: ChannelConfig) -> SchemeKind:
    """Scheme reaching the achievable sum rate for this configuration."""
    regime = forward_regime(cfg.n, cfg.m)
    if regime is ForwardRegime.VERY_STRONG:
        return SchemeKind.TYPE_I
    if regime is ForwardRegime.WEAK:
        if cfg.mb >= cfg.nb - cfg.mb:
            return SchemeKind.TYPE_II
        return SchemeKind.TYPE_III
    return SchemeKind.NON_FEEDBACK


# -- scheme constructions --------------------------------------------------------


def _nonfeedback(cfg: ChannelConfig) -> SchemeSpec:
    lay = nonfeedback_layout(cfg.n, cfg.m)
    bits = _Bits()
    q = cfg.q
    plan = []
    for slot in range(2):
        pats = (lay.user1, lay.user2) if slot == 0 else (lay.user2, lay.user1)
        contents = []
        for user, pat in zip(("1", "2"), pats):
            fresh: dict[int, int] = {}
            row = []
            for lvl in range(q):
                v = 0
                for j in mask_bits(pat[lvl]):
                    if j not in fresh:
                        fresh[j] = bits.new(user)
                    v ^= fresh[j]
                row.append(v)
            contents.append(tuple(row))
        plan.append((FORWARD, slot, tuple(contents)))
    names, owner, plan = bits.finish(plan)
    return assemble(SchemeKind.NON_FEEDBACK, cfg, 1, lay.a, 0, 0, names, owner, plan)


def _two_stage(kind: SchemeKind, cfg: ChannelConfig) -> SchemeSpec:
    n, m, nb, mb = cfg.n, cfg.m, cfg.nb, cfg.mb
    q, qb = cfg.q, cfg.qb
    M, B, K = block_parameters(kind, cfg)
    c = int(c_pf(n, m) - c_no(n, m))
    if kind is SchemeKind.TYPE_I:
        fresh_levels = list(range(n))
        extra_levels = list(range(n, m - n))
    else:
        p = max(0, 2 * m - n)
        fresh_levels = list(range(p)) + list(range(m, n))
        extra_levels = list(range(p, p + c))
    assert len(extra_levels) == c

    # extras per stage-1 slot, at most c per slot, highest level first
    counts = [min(c, B - t * c) if B > t * c else 0 for t in range(M)]
    bits = _Bits()
    plan = []
    extras: dict[str, list[list[tuple[int, int]]]] = {"1": [], "2": []}  # (level, mask)
    for t in range(M):
        used = set(extra_levels[len(extra_levels) - counts[t]:]) if counts[t] else set()
        contents = []
        for user in ("1", "2"):
            row = [0] * q
            slot_extras = []
            for lvl in range(q):
                if lvl in fresh_levels or lvl in used:
                    row[lvl] = bits.new(user)
                    if lvl in used:
                        slot_extras.append((lvl, row[lvl]))
            extras[user].append(slot_extras)
            contents.append(tuple(row))
        plan.append((FORWARD, t, tuple(contents)))

    # feedback values each backward transmitter must deliver, in order
    if kind is SchemeKind.TYPE_I:
        send_levels = list(range(nb))
    elif kind is SchemeKind.TYPE_II:
        send_levels = list(range(mb))
    else:
        send_levels = list(range(mb, nb))
    send_levels = send_levels[::-1]
    s = q - m
    fb_values: dict[str, list[int]] = {}
    for fb_user, user, other in (("1~", "1", "2"), ("2~", "2", "1")):
        vals = []
        for t in range(M):
            if kind is SchemeKind.TYPE_I:
                vals += [v for _, v in extras[other][t]]
            elif kind is SchemeKind.TYPE_II:
                vals += [v for _, v in extras[user][t]]
            else:
                # the level where the other user's extra collides with our private bit
                x_own, x_oth = plan[t][2][int(user) - 1], plan[t][2][int(other) - 1]
                y = ic_outputs(x_own, x_oth, n, m)[0]
                vals += [y[lvl + s] for lvl, _ in extras[other][t]]
        fb_values[fb_user] = vals
    eff = len(send_levels)
    for k in range(K):
        contents = []
        for fb_user in ("1~", "2~"):
            row = [0] * qb
            for lvl, v in zip(send_levels, fb_values[fb_user][k * eff:(k + 1) * eff]):
                row[lvl] = v
            contents.append(tuple(row))
        plan.append((BACKWARD, 2 * M - K + k, tuple(contents)))

    # stage 2: fresh bits plus the other user's extras relayed on the same levels
    for t in range(M):
        contents = []
        for user, other in (("1", "2"), ("2", "1")):
            row = [0] * q
            for lvl in fresh_levels:
                row[lvl] = bits.new(user)
            for lvl, v in extras[other][t]:
                row[lvl] = v
            contents.append(tuple(row))
        plan.append((FORWARD, M + t, tuple(contents)))
    names, owner, plan = bits.finish(plan)
    return assemble(kind, cfg, M, len(fresh_levels), B, 0, names, owner, plan)


class Wiring(str, enum.Enum):
    CROSS = "cross"          # backward IC (0, 1): only cross delivery
    SYMMETRIC = "symmetric"  # backward IC (1, 1)


FOUR_MESSAGE_BACKWARD = {Wiring.CROSS: (0, 1), Wiring.SYMMETRIC: (1, 1)}


def compile_four_message(cfg_f: tuple[int, int] = (2, 1),
                         wiring: Wiring | str = Wiring.CROSS) -> SchemeSpec:
    """Two forward and two backward messages over forward IC (2, 1), two slots each way."""
    wiring = Wiring(wiring)
    if tuple(cfg_f) != (2, 1):
        raise RegimeMismatch("the four-message scheme is defined for forward IC (2, 1)")
    nb, mb = FOUR_MESSAGE_BACKWARD[wiring]
    cfg = ChannelConfig(2, 1, nb, mb, Fraction(1))
    bits = _Bits()
    a1, b1 = bits.new("1"), bits.new("2")
    at, bt = bits.new("1~"), bits.new("2~")
    a2, b2 = bits.new("1"), bits.new("2")
    plan = [(FORWARD, 0, ((0, a1), (0, b1))),
            (BACKWARD, 0, ((at,), (bt,)))]
    if wiring is Wiring.CROSS:
        plan += [(FORWARD, 1, ((bt, a2), (at, b2))),
                 (BACKWARD, 1, ((bt,), (at,)))]
    else:
        plan += [(FORWARD, 1, ((at ^ bt, a2), (at ^ bt, b2))),
                 (BACKWARD, 1, (None, (at,)))]
    names, owner, plan = bits.finish(plan)
    return assemble(SchemeKind.FOUR_MESSAGE, cfg, 1, 1, 0, 1, names, owner, plan)


def check_preconditions(kind: SchemeKind, cfg: ChannelConfig) -> None:
    regime = forward_regime(cfg.n, cfg.m)
    if kind is SchemeKind.TYPE_I and (regime is not ForwardRegime.VERY_STRONG or cfg.m == 0):
        raise RegimeMismatch(f"TypeI needs alpha >= 2, got (n, m) = ({cfg.n}, {cfg.m})")
    if kind in (SchemeKind.TYPE_II, SchemeKind.TYPE_III) and regime is not ForwardRegime.WEAK:
        raise RegimeMismatch(f"{kind.value} needs alpha < 2/3, got (n, m) = ({cfg.n}, {cfg.m})")
    if kind in (SchemeKind.FOUR_MESSAGE, SchemeKind.WITNESS):
        raise RegimeMismatch(f"{kind.value} is not compiled from a configuration")


def compile(kind: SchemeKind | str, cfg: ChannelConfig) -> SchemeSpec:  # noqa: A001
    kind = SchemeKind(kind)
    check_preconditions(kind, cfg)
    if kind is SchemeKind.NON_FEEDBACK:
        return _nonfeedback(cfg)
    return _two_stage(kind, cfg)


def compile_best(cfg: ChannelConfig) -> SchemeSpec:
    return compile(select_kind(cfg), cfg)


def scheme_rate(spec: SchemeSpec) -> RatePoint:
    uses = spec.forward_uses
    count = {t: 0 for t in TERMINALS}
    for t, bits in spec.targets.items():
        for j in bits:
            count[spec.bit_owner[j]] += 1
    return RatePoint(*(Fraction(count[t], uses) for t in TERMINALS))


def expected_rate(spec: SchemeSpec) -> Fraction:
    """Sum rate the construction is designed for (the achievable bound)."""
    if spec.kind is SchemeKind.FOUR_MESSAGE:
        return Fraction(2)
    return inner_sum(spec.cfg)


# -- per-terminal encoding on concrete bits -----------------------------------------


def _eval(recipe: Recipe, msg_bits: Sequence[int], rx: dict) -> int:
    v = 0
    for term in recipe:
        v ^= msg_bits[term[1]] if term[0] == "w" else rx[(term[1], term[2])]
    return v


def _history(history: dict | None) -> dict:
    """Flatten ``{event: LevelVector | None}`` into ``{(event, level): bit}``."""
    out = {}
    for e, vec in (history or {}).items():
        if vec is not None:
            for lvl, b in enumerate(vec):
                out[(e, lvl)] = b
    return out


def message_vector(spec: SchemeSpec, msgs: dict) -> list[int]:
    """Flat bit list from ``{terminal: [bits...]}`` in the spec's bit order."""
    flat = [0] * spec.nbits
    for t in TERMINALS:
        own = spec.own_bits(t)
        vals = list(msgs.get(t, [0] * len(own)))
        if len(vals) != len(own):
            raise ValueError(f"terminal {t} needs {len(own)} message bits, got {len(vals)}")
        for j, b in zip(own, vals):
            flat[j] = int(b) & 1
    return flat


def _encode(spec: SchemeSpec, direction: str, user: int, event: int, msgs, history):
    e = spec.events[event]
    if e.direction != direction:
        raise ValueError(f"event {event} is not a {direction} use")
    recipes = e.tx[user - 1]
    if recipes is None:
        return None
    known = _history(history)
    needed = {(t[1], t[2]) for r in recipes for t in r if t[0] == "rx"}
    missing = [k for k in needed if k not in known or k[0] >= event]
    if missing:
        raise CausalityError(f"event {event} needs receptions {sorted(missing)}")
    bits = message_vector(spec, msgs)
    return LevelVector(tuple(_eval(r, bits, known) for r in recipes))


def encode_forward(spec: SchemeSpec, user: int, event: int, msgs: dict,
                   fb_history: dict | None = None) -> LevelVector:
    """Levels sent by user ``user`` in forward event ``event``.

    ``fb_history`` maps earlier backward event indices to the vector this
    user received (or None).
    """
    return _encode(spec, FORWARD, user, event, msgs, fb_history)


def encode_backward(spec: SchemeSpec, user: int, event: int, rx_history: dict | None,
                    backward_msgs: dict | None = None) -> LevelVector | None:
    """Levels sent by user ``user``~ in backward event ``event``; None when silent."""
    return _encode(spec, BACKWARD, user, event, backward_msgs or {}, rx_history)


def decode(spec: SchemeSpec, terminal: str, received: dict, own_bits: dict | None = None):
    """Recover the bits destined to ``terminal`` from its receptions.

    ``received`` maps event index to the vector the terminal heard.  Returns
    ``{bit name: value}``.
    """
    rx = _history(received)
    bits = message_vector(spec, own_bits or {})
    out = {}
    for j, r in spec.decoders.get(terminal, {}).items():
        if r is None:
            raise CausalityError(f"terminal {terminal} has no decoder for {spec.bit_names[j]}")
        out[spec.bit_names[j]] = _eval(r, bits, rx)
    return out
