from fractions import Fraction as F

import numpy as np
import pytest

from twic.channel import ChannelConfig
from twic.oracle import (NOT_FOUND, certify, observe, rank_decodable, search_linear,
                         transfer_matrices)
from twic.gf2 import XorBasis, rank_dense, rank_int, rcef_key
from twic.schemes import RatePoint, SchemeKind, compile, compile_four_message
from twic.sim import budget_check, run_block, verify_exhaustive

TYPE1 = ChannelConfig(1, 3, 1, 1, F(1, 2))


def test_nonfeedback_transfer_is_identity_blocks():
    spec = compile(SchemeKind.NON_FEEDBACK, ChannelConfig(2, 0))
    sys = transfer_matrices(spec)
    obs = sys.observations["1~"]
    cols = [spec.bit_names.index(b) for b in ("a1", "a2", "a3", "a4")]
    assert np.array_equal(obs[:, cols], np.eye(4, dtype=np.uint8))
    assert not obs[:, [j for j in range(spec.nbits) if j not in cols]].any()


def test_type1_rank_and_decodability():
    spec = compile(SchemeKind.TYPE_I, TYPE1)
    sys = transfer_matrices(spec)
    a_cols = [spec.bit_names.index(b) for b in ("a1", "a2", "a3")]
    assert rank_dense(sys.observations["1~"][:, a_cols]) >= 3
    assert rank_decodable(sys, "1~", ["a1", "a2", "a3"])
    # the cross link is stronger than the direct one here, so 1~ also hears user 2
    assert rank_decodable(sys, "1~", ["b1"])
    assert not rank_decodable(sys, "1", ["b1", "b2", "b3"])
    assert (observe(sys, "1~", [0] * spec.nbits) == 0).all()


def test_no_observations_means_nothing_decodable():
    spec = compile(SchemeKind.TYPE_I, TYPE1)
    sys = transfer_matrices(spec)
    assert sys.observations["1"].shape[0] == 1
    empty = type(sys)(sys.nbits, sys.bit_names, {**sys.observations,
                                                  "1~": np.zeros((0, sys.nbits), np.uint8)},
                      sys.row_labels, sys.own)
    assert not rank_decodable(empty, "1~", ["a1"])


def test_four_message_rank():
    spec = compile_four_message()
    sys = transfer_matrices(spec)
    assert rank_decodable(sys, "1", ["a~1"])
    assert certify(spec) == {"1": True, "2": True, "1~": True, "2~": True}


def test_transfer_matches_run_block():
    rng = np.random.default_rng(5)
    for spec in (compile(SchemeKind.TYPE_I, TYPE1), compile_four_message(),
                 compile(SchemeKind.TYPE_III, ChannelConfig(5, 1, 4, 1, F(3, 4)))):
        sys = transfer_matrices(spec)
        for _ in range(100):
            flat = [int(b) for b in rng.integers(0, 2, spec.nbits)]
            msgs = {t: [flat[j] for j in js] for t, js in sys.own.items() if js}
            transcript, _ = run_block(spec, msgs)
            for t, labels in sys.row_labels.items():
                heard = transcript.received(t)
                assert [heard[e][l] for e, l in labels] == list(observe(sys, t, flat))


def test_nonlinear_entry_rejected():
    spec = compile(SchemeKind.TYPE_I, TYPE1)
    e = spec.events[0]
    bad = type(e)(e.direction, e.slot, ((frozenset({("and", 0, 1)}),) + e.tx[0][1:], e.tx[1]),
                  e.contents)
    import dataclasses
    with pytest.raises(ValueError):
        transfer_matrices(dataclasses.replace(spec, events=(bad,) + spec.events[1:]))


def test_search_type1_point():
    w = search_linear(TYPE1, RatePoint(F(3, 2), F(3, 2)), block_len=2)
    assert w is not NOT_FOUND
    assert all(certify(w).values())
    rep = verify_exhaustive(w)
    assert rep.passed and rep.rate.forward_sum == 3


def test_search_exhausts_above_capacity():
    assert search_linear(ChannelConfig(2, 1), RatePoint(F(3, 2), F(3, 2))) is NOT_FOUND
    assert repr(NOT_FOUND) == "NOT_FOUND"


def test_search_silent_witness():
    w = search_linear(ChannelConfig(2, 1), RatePoint(F(0), F(0)))
    assert w.nbits == 0 and verify_exhaustive(w).passed
    transcript, _ = run_block(w, {})
    assert budget_check(transcript)[0] == (0, 0)


def test_search_witness_respects_budget():
    w = search_linear(ChannelConfig(2, 1, 1, 1, F(1, 2)), RatePoint(F(3, 2), F(3, 2)))
    assert w is not NOT_FOUND
    assert len(w.backward_active()) <= 1
    assert verify_exhaustive(w).budget_ok


def test_search_bounds():
    with pytest.raises(ValueError):
        search_linear(ChannelConfig(4, 1), RatePoint(F(1), F(1)))
    with pytest.raises(ValueError):
        search_linear(TYPE1, RatePoint(F(1), F(1)), block_len=3)
    with pytest.raises(ValueError):
        search_linear(TYPE1, RatePoint(F(1), F(1, 2)))
    with pytest.raises(ValueError):
        search_linear(TYPE1, RatePoint(F(1, 4), F(1, 4)))


def test_xor_basis_tags():
    b = XorBasis()
    assert b.add(0b011, {"x"}) and b.add(0b110, {"y"})
    assert not b.add(0b101, {"z"})
    assert b.express(0b101) == frozenset({"x", "y"})
    assert b.express(0b1000) is None
    assert len(b) == 2 and b.copy().contains(0b110)


def test_rank_helpers_agree():
    rng = np.random.default_rng(0)
    for _ in range(200):
        mat = rng.integers(0, 2, (5, 6), dtype=np.uint8)
        rows = [int("".join(map(str, r[::-1])), 2) for r in mat]
        assert rank_dense(mat) == rank_int(rows)
    assert rcef_key([0b01, 0b11]) == rcef_key([0b10, 0b01])
    assert rcef_key([0b11]) != rcef_key([0b01])
