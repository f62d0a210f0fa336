"""Independent decodability certificates for linear plans.

:func:`transfer_matrices` composes a plan's transmit recipes with dense
shift matrices into one observation matrix per terminal, and
:func:`rank_decodable` decides decodability by a rank test.  Neither uses
the symbolic wiring or the decoder recipes the simulator relies on.

:func:`search_linear` enumerates small linear strategies directly, to show
rate points are reachable without trusting the scheme constructions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig, ic_outputs
from .gf2 import rank_dense, rank_int, rcef_key, shift_matrix
from .schemes import (BACKWARD, FORWARD, ROLES, TERMINALS, RatePoint, SchemeKind, SchemeSpec,
                      assemble)

MAX_BLOCK = 2
MAX_LEVELS = 3


@dataclass(frozen=True)
class LinearSystem:
    nbits: int
    bit_names: tuple[str, ...]
    observations: dict  # terminal -> (rows, nbits) uint8
    row_labels: dict  # terminal -> list of (event, level)
    own: dict  # terminal -> tuple of bit indices

    def shape(self, terminal: str) -> tuple[int, int]:
        return self.observations[terminal].shape


def transfer_matrices(spec: SchemeSpec, cfg: ChannelConfig | None = None) -> LinearSystem:
    cfg = cfg or spec.cfg
    k = spec.nbits
    rows: dict[tuple[int, int, str], np.ndarray] = {}
    obs = {t: [] for t in TERMINALS}
    labels = {t: [] for t in TERMINALS}
    for idx, e in enumerate(spec.events):
        senders, receivers = ROLES[e.direction]
        direct, cross = (cfg.n, cfg.m) if e.direction == FORWARD else (cfg.nb, cfg.mb)
        q = max(direct, cross)
        if all(t is None for t in e.tx):
            continue
        xs = []
        for s, recipes in zip(senders, e.tx):
            x = np.zeros((q, k), dtype=np.uint8)
            for lvl, recipe in enumerate(recipes or ()):
                for term in recipe:
                    if term[0] == "w":
                        x[lvl, term[1]] ^= 1
                    elif term[0] == "rx":
                        x[lvl] ^= rows[(term[1], term[2], s)]
                    else:
                        raise ValueError(f"nonlinear plan entry {term!r}")
            xs.append(x)
        D, C = shift_matrix(q, q - direct), shift_matrix(q, q - cross)
        for r, own_x, other_x in ((receivers[0], xs[0], xs[1]), (receivers[1], xs[1], xs[0])):
            y = (D.astype(np.int64) @ own_x + C.astype(np.int64) @ other_x) & 1
            y = y.astype(np.uint8)
            for lvl in range(q):
                rows[(idx, lvl, r)] = y[lvl]
                obs[r].append(y[lvl])
                labels[r].append((idx, lvl))
    observations = {t: np.array(v, dtype=np.uint8).reshape(len(v), k) for t, v in obs.items()}
    own = {t: spec.own_bits(t) for t in TERMINALS}
    return LinearSystem(k, spec.bit_names, observations, labels, own)


def _unit_rows(bits: Iterable[int], k: int) -> np.ndarray:
    bits = list(bits)
    out = np.zeros((len(bits), k), dtype=np.uint8)
    for r, j in enumerate(bits):
        out[r, j] = 1
    return out


def rank_decodable(sys: LinearSystem, terminal: str, target_bits: Sequence) -> bool:
    """Whether ``target_bits`` are fixed by the terminal's observations and own bits."""
    idx = [sys.bit_names.index(b) if isinstance(b, str) else int(b) for b in target_bits]
    if not idx:
        return True
    known = np.vstack([sys.observations[terminal], _unit_rows(sys.own[terminal], sys.nbits)])
    with_targets = np.vstack([known, _unit_rows(idx, sys.nbits)])
    return rank_dense(with_targets) == rank_dense(known)


def observe(sys: LinearSystem, terminal: str, msg_bits: Sequence[int]) -> np.ndarray:
    """Received bits predicted by the transfer matrix for one flat message vector."""
    v = np.asarray(msg_bits, dtype=np.int64)
    return (sys.observations[terminal].astype(np.int64) @ v) & 1


def certify(spec: SchemeSpec) -> dict:
    """Rank verdict for every decoding terminal of a plan."""
    sys = transfer_matrices(spec)
    return {t: rank_decodable(sys, t, bits) for t, bits in spec.targets.items()}


# -- bounded search ----------------------------------------------------------------


class NotFound:
    """Search exhausted its bounded space; says nothing about impossibility."""

    inconclusive = True

    def __repr__(self) -> str:
        return "NOT_FOUND"


NOT_FOUND = NotFound()


def _span(basis_rows: list[int]) -> list[int]:
    out = [0]
    for r in basis_rows:
        out += [v ^ r for v in out]
    return out


def _basis_rows(rows: Iterable[int]) -> list[int]:
    b: dict[int, int] = {}
    for v in rows:
        while v:
            top = v.bit_length() - 1
            if top not in b:
                b[top] = v
                break
            v ^= b[top]
    return list(b.values())


@dataclass
class _Search:
    cfg: ChannelConfig
    kf: int
    kb: int
    order: list  # event directions
    nodes: int = 0

    def __post_init__(self):
        kf, kb = self.kf, self.kb
        self.owner = ["1"] * kf + ["2"] * kf + ["1~"] * kb + ["2~"] * kb
        perm = list(range(kf, 2 * kf)) + list(range(kf)) + \
            list(range(2 * kf + kb, 2 * kf + 2 * kb)) + list(range(2 * kf, 2 * kf + kb))
        self.perm = perm
        self.own = {t: sum(1 << j for j, o in enumerate(self.owner) if o == t) for t in TERMINALS}
        self.last_forward = max(i for i, d in enumerate(self.order) if d == FORWARD)

    def mirror(self, v: int) -> int:
        out = 0
        j = 0
        while v:
            if v & 1:
                out |= 1 << self.perm[j]
            v >>= 1
            j += 1
        return out

    def decodes(self, knowledge: list[int], targets: int) -> bool:
        base = rank_int(knowledge)
        return rank_int(knowledge + [1 << j for j in range(targets.bit_length()) if targets >> j & 1]) == base

    def choices(self, idx: int, knowledge: list[int], q: int):
        span = _span(_basis_rows(knowledge))
        if idx == 0:
            # first use: only the column space of the level matrix matters up to a
            # change of message basis, so keep one representative per subspace
            seen = set()
            for combo in itertools.product(span, repeat=q):
                cols = [sum(((combo[l] >> j) & 1) << l for l in range(q))
                        for j in range(self.kf)]
                key = rcef_key(cols)
                if key not in seen:
                    seen.add(key)
                    yield combo
            return
        yield from itertools.product(span, repeat=q)

    def run(self):
        know = {t: [1 << j for j, o in enumerate(self.owner) if o == t] for t in TERMINALS}
        return self._dfs(0, know, [])

    def _dfs(self, idx, know, plan):
        if idx == len(self.order):
            ok = all(self.decodes(know[t], self.own[s])
                     for t, s in (("1", "1~"), ("1~", "1")))
            return plan if ok else None
        if idx == self.last_forward + 1 and not self.decodes(know["1~"], self.own["1"]):
            return None
        direction = self.order[idx]
        senders, receivers = ROLES[direction]
        direct, cross = (self.cfg.n, self.cfg.m) if direction == FORWARD else (self.cfg.nb, self.cfg.mb)
        q = max(direct, cross)
        for combo in self.choices(idx, know[senders[0]], q):
            self.nodes += 1
            other = tuple(self.mirror(v) for v in combo)
            y1, y2 = ic_outputs(combo, other, direct, cross)
            nxt = dict(know)
            nxt[receivers[0]] = know[receivers[0]] + [v for v in y1 if v]
            nxt[receivers[1]] = know[receivers[1]] + [v for v in y2 if v]
            found = self._dfs(idx + 1, nxt, plan + [(direction, combo, other)])
            if found is not None:
                return found
        return None


def _per_user(total: Fraction, block_len: int, what: str) -> int:
    bits = total * block_len
    if bits.denominator != 1 or bits.numerator % 2:
        raise ValueError(f"{what} sum rate {total} does not split evenly over {block_len} uses")
    return bits.numerator // 2


def search_linear(cfg: ChannelConfig, target: RatePoint, block_len: int = 2,
                  budget_cap: int | None = None):
    """Symmetric linear strategy reaching ``target``, or ``NOT_FOUND``.

    Forward and backward uses alternate (F, B, F, B, ...).  ``budget_cap``
    limits the number of backward uses that may carry anything; it defaults
    to ``floor(lambda * block_len)``.  User 2 always mirrors user 1, so only
    user-swap-symmetric strategies are explored.
    """
    if not 1 <= block_len <= MAX_BLOCK or cfg.q > MAX_LEVELS or cfg.qb > MAX_LEVELS:
        raise ValueError(f"search bounds exceeded: block <= {MAX_BLOCK}, levels <= {MAX_LEVELS}")
    if target.r1 != target.r2 or target.rt1 != target.rt2:
        raise ValueError("search_linear only handles symmetric rate targets")
    kf = _per_user(target.forward_sum, block_len, "forward")
    kb = _per_user(target.backward_sum, block_len, "backward")
    cap = int(cfg.lam * block_len) if budget_cap is None else budget_cap
    cap = min(cap, block_len)
    if kf == 0 and kb == 0:
        plan = [(FORWARD, t, ((0,) * cfg.q, (0,) * cfg.q)) for t in range(block_len)]
        return assemble(SchemeKind.WITNESS, cfg, 1, 0, 0, 0, (), (), plan)
    if kb and cap == 0:
        return NOT_FOUND
    for active in itertools.combinations(range(block_len), cap):
        order, slots = [], []
        for t in range(block_len):
            order.append(FORWARD)
            slots.append(t)
            if t in active:
                order.append(BACKWARD)
                slots.append(t)
        found = _Search(cfg, kf, kb, order).run()
        if found is not None:
            return _witness(cfg, kf, kb, found, slots)
    return NOT_FOUND


def _witness(cfg, kf, kb, found, slots) -> SchemeSpec:
    owner = ["1"] * kf + ["2"] * kf + ["1~"] * kb + ["2~"] * kb
    prefix = {"1": "a", "2": "b", "1~": "a~", "2~": "b~"}
    counters = {t: 0 for t in TERMINALS}
    names = []
    for o in owner:
        counters[o] += 1
        names.append(f"{prefix[o]}{counters[o]}")
    plan = [(d, s, (tuple(x1), tuple(x2))) for (d, x1, x2), s in zip(found, slots)]
    return assemble(SchemeKind.WITNESS, cfg, 1, kf, 0, kb, names, owner, plan)
