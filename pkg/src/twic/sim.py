"""Slot-by-slot execution of compiled plans and exhaustive decode checks.

Two execution paths exist.  :func:`run_block` drives a single message set
through the per-terminal encoders and the :class:`LevelVector` channel law,
producing a full transcript.  :func:`verify_exhaustive` evaluates the same
plan bit-sliced: every message bit becomes a numpy ``uint64`` plane holding
one message tuple per bit position, so up to 64 tuples move per word op.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .channel import ChannelConfig, LevelVector, ic_outputs, transmit_backward, transmit_forward
from .schemes import (BACKWARD, FORWARD, ROLES, TERMINALS, RatePoint, SchemeSpec, decode,
                      encode_backward, encode_forward, message_vector, scheme_rate)

DEFAULT_SEED = 1729
DEFAULT_LIMIT = 1 << 20
DEFAULT_SAMPLES = 10_000


@dataclass(frozen=True)
class SlotRecord:
    event: int
    direction: str
    slot: int
    x: dict  # sender -> LevelVector or None (silent)
    y: dict  # receiver -> LevelVector or None
    active: dict  # sender -> number of plan-active levels (0 when silent)

    def to_json(self) -> str:
        def vec(v):
            return None if v is None else list(v.bits)

        return json.dumps({
            "event": self.event, "direction": self.direction, "slot": self.slot,
            "x": {k: vec(v) for k, v in self.x.items()},
            "y": {k: vec(v) for k, v in self.y.items()},
        }, sort_keys=True)


@dataclass(frozen=True)
class Transcript:
    cfg: ChannelConfig
    records: tuple[SlotRecord, ...]
    forward_uses: int

    def to_jsonl(self) -> str:
        return "\n".join(r.to_json() for r in self.records)

    def received(self, terminal: str) -> dict:
        return {r.event: r.y[terminal] for r in self.records if terminal in r.y}


@dataclass
class VerificationReport:
    scheme: str
    cfg: ChannelConfig
    messages_tested: int
    exhaustive: bool
    failures: int
    failures_by_terminal: dict
    rate: RatePoint
    budget_used: tuple
    budget_allowed: Fraction
    budget_ok: bool
    first_counterexample: dict | None = None
    transcript_dump: str | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.budget_ok


# -- single block -------------------------------------------------------------------


def run_block(spec: SchemeSpec, msgs: dict, cfg: ChannelConfig | None = None):
    """Run one block; returns ``(transcript, decoded)``.

    ``msgs`` maps each terminal to its message bits (missing terminals send
    nothing of their own).  ``decoded`` maps each decoding terminal to
    ``{bit name: value}``.
    """
    cfg = cfg or spec.cfg
    message_vector(spec, msgs)  # validates lengths
    history = {t: {} for t in TERMINALS}
    records = []
    for idx, e in enumerate(spec.events):
        senders, receivers = ROLES[e.direction]
        xs = {}
        for k, s in enumerate(senders, start=1):
            if e.direction == FORWARD:
                xs[s] = encode_forward(spec, k, idx, msgs, history[s])
            else:
                xs[s] = encode_backward(spec, k, idx, history[s], msgs)
        if all(v is None for v in xs.values()):
            ys = {r: None for r in receivers}
        else:
            q = cfg.q if e.direction == FORWARD else cfg.qb
            x1, x2 = (xs[s] if xs[s] is not None else LevelVector.zeros(q) for s in senders)
            law = transmit_forward if e.direction == FORWARD else transmit_backward
            ys = dict(zip(receivers, law(x1, x2, cfg)))
        for r in receivers:
            history[r][idx] = ys[r]
        active = {s: 0 if t is None else sum(1 for r in t if r) for s, t in zip(senders, e.tx)}
        records.append(SlotRecord(idx, e.direction, e.slot, xs, ys, active))
    transcript = Transcript(cfg, tuple(records), spec.forward_uses)
    decoded = {t: decode(spec, t, transcript.received(t), {t: msgs[t]} if t in msgs else {})
               for t in spec.decoders}
    return transcript, decoded


def expected_messages(spec: SchemeSpec, msgs: dict) -> dict:
    flat = message_vector(spec, msgs)
    return {t: {spec.bit_names[j]: flat[j] for j in bits} for t, bits in spec.targets.items()}


def check_transcript(transcript: Transcript) -> bool:
    """Recheck the channel law and null-marker rules on every record."""
    cfg = transcript.cfg
    for r in transcript.records:
        senders, receivers = ROLES[r.direction]
        if all(r.x[s] is None for s in senders):
            if any(r.y[x] is not None for x in receivers):
                return False
            continue
        q = cfg.q if r.direction == FORWARD else cfg.qb
        x1, x2 = (r.x[s] if r.x[s] is not None else LevelVector.zeros(q) for s in senders)
        law = transmit_forward if r.direction == FORWARD else transmit_backward
        if tuple(law(x1, x2, cfg)) != tuple(r.y[x] for x in receivers):
            return False
    return True


def budget_allowed(spec: SchemeSpec, cfg: ChannelConfig | None = None) -> Fraction:
    cfg = cfg or spec.cfg
    return spec.forward_uses * cfg.lam * cfg.qb


def plan_budget(spec: SchemeSpec) -> tuple[int, int]:
    used = [0, 0]
    for e in spec.events:
        if e.direction == BACKWARD:
            for k, t in enumerate(e.tx):
                if t is not None:
                    used[k] += sum(1 for r in t if r)
    return tuple(used)


def budget_check(transcript: Transcript, cfg: ChannelConfig | None = None):
    """``(used per backward user, allowed, ok)`` with one bit per active level."""
    cfg = cfg or transcript.cfg
    used = [0, 0]
    for r in transcript.records:
        if r.direction == BACKWARD:
            for k, s in enumerate(ROLES[BACKWARD][0]):
                if r.x[s] is not None:
                    used[k] += r.active[s]
    allowed = transcript.forward_uses * cfg.lam * cfg.qb
    return tuple(used), allowed, all(u <= allowed for u in used)


# -- bit-sliced evaluation -------------------------------------------------------------


def pack_planes(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(k, N)`` 0/1 array into ``(k, ceil(N/64))`` uint64 planes."""
    bits = np.asarray(bits, dtype=np.uint8)
    k, count = bits.shape
    words = max(1, -(-count // 64))
    padded = np.zeros((k, words * 64), dtype=np.uint8)
    padded[:, :count] = bits
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).reshape(k, words)


def unpack_column(planes: np.ndarray, pos: int) -> list[int]:
    return [int(planes[j, pos // 64] >> np.uint64(pos % 64) & np.uint64(1))
            for j in range(planes.shape[0])]


def exhaustive_bits(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.uint64)
    return ((idx[None, :] >> np.arange(k, dtype=np.uint64)[:, None]) & np.uint64(1)).astype(np.uint8)


def random_bits(k: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(k, count), dtype=np.uint8)


def propagate(spec: SchemeSpec, planes: np.ndarray, cfg: ChannelConfig | None = None):
    """Bit-sliced run; returns ``{(event, level, terminal): plane}`` of receptions."""
    cfg = cfg or spec.cfg
    zero = np.zeros(planes.shape[1], dtype=np.uint64)
    rx: dict = {}

    def value(recipe, terminal):
        vals = [planes[t[1]] if t[0] == "w" else rx[(t[1], t[2], terminal)] for t in recipe]
        return reduce(np.bitwise_xor, vals, zero)

    for idx, e in enumerate(spec.events):
        senders, receivers = ROLES[e.direction]
        if all(t is None for t in e.tx):
            continue
        direct, cross = (cfg.n, cfg.m) if e.direction == FORWARD else (cfg.nb, cfg.mb)
        q = max(direct, cross)
        xs = [tuple(value(r, s) for r in t) if t is not None else (zero,) * q
              for s, t in zip(senders, e.tx)]
        ys = ic_outputs(xs[0], xs[1], direct, cross, zero)
        for r, y in zip(receivers, ys):
            for lvl, v in enumerate(y):
                rx[(idx, lvl, r)] = v
    return rx


def decode_failures(spec: SchemeSpec, planes: np.ndarray, rx: dict) -> dict:
    """Per decoding terminal, a plane with a 1 wherever some target bit is wrong."""
    zero = np.zeros(planes.shape[1], dtype=np.uint64)
    out = {}
    for t, dec in spec.decoders.items():
        bad = zero.copy()
        for j, recipe in dec.items():
            if recipe is None:
                got = zero
            else:
                vals = [planes[x[1]] if x[0] == "w" else rx[(x[1], x[2], t)] for x in recipe]
                got = reduce(np.bitwise_xor, vals, zero)
            bad |= got ^ planes[j]
        out[t] = bad
    return out


def _valid_mask(count: int, words: int) -> np.ndarray:
    mask = np.full(words, np.uint64(-1 & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    rem = count % 64
    if rem:
        mask[-1] = np.uint64((1 << rem) - 1)
    return mask


def verify_exhaustive(spec: SchemeSpec, cfg: ChannelConfig | None = None,
                      limit: int = DEFAULT_LIMIT, *, seed: int = DEFAULT_SEED,
                      samples: int = DEFAULT_SAMPLES, dump: bool = False) -> VerificationReport:
    """Decode every message tuple when ``2**bits <= limit``, else ``samples`` random ones."""
    if limit < 1:
        raise ValueError("limit must be at least 1")
    cfg = cfg or spec.cfg
    k = spec.nbits
    exhaustive = (1 << k) <= limit
    bits = exhaustive_bits(k) if exhaustive else random_bits(k, samples, seed)
    count = bits.shape[1]
    planes = pack_planes(bits)
    rx = propagate(spec, planes, cfg)
    fails = decode_failures(spec, planes, rx)
    valid = _valid_mask(count, planes.shape[1])
    total_bad = np.zeros_like(valid)
    by_terminal = {}
    for t, bad in fails.items():
        bad &= valid
        by_terminal[t] = int(np.bitwise_count(bad).sum())
        total_bad |= bad
    failures = int(np.bitwise_count(total_bad).sum())
    counterexample = None
    dump_text = None
    if failures:
        word = int(np.nonzero(total_bad)[0][0])
        pos = word * 64 + (int(total_bad[word]) & -int(total_bad[word])).bit_length() - 1
        flat = [int(b) for b in bits[:, pos]]
        msgs = {t: [flat[j] for j in spec.own_bits(t)] for t in TERMINALS if spec.own_bits(t)}
        transcript, decoded = run_block(spec, msgs, cfg)
        counterexample = {"messages": msgs, "expected": expected_messages(spec, msgs),
                          "decoded": decoded}
        dump_text = transcript.to_jsonl()
    used = plan_budget(spec)
    allowed = budget_allowed(spec, cfg)
    report = VerificationReport(
        scheme=spec.kind.value, cfg=cfg, messages_tested=count, exhaustive=exhaustive,
        failures=failures, failures_by_terminal=by_terminal, rate=scheme_rate(spec),
        budget_used=used, budget_allowed=allowed, budget_ok=all(u <= allowed for u in used),
        first_counterexample=counterexample, transcript_dump=dump_text)
    if dump and dump_text is None:
        flat = [int(b) for b in bits[:, 0]]
        msgs = {t: [flat[j] for j in spec.own_bits(t)] for t in TERMINALS if spec.own_bits(t)}
        report.transcript_dump = run_block(spec, msgs, cfg)[0].to_jsonl()
    return report
