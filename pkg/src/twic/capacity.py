"""Closed-form sum-rate expressions for the two-way deterministic IC.

All quantities are exact :class:`~fractions.Fraction` values in bits per
forward channel use.  Interference ratios follow the conventions
``m/0 = inf`` for ``m > 0``; a ``(0, 0)`` direction carries nothing.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import INF, ChannelConfig, parse_fraction, ratio

TWO = Fraction(2)
TWO_THIRDS = Fraction(2, 3)
HALF = Fraction(1, 2)


class ForwardRegime(str, enum.Enum):
    VERY_STRONG = "VeryStrong"  # alpha >= 2
    MODERATE = "Moderate"       # 2/3 <= alpha < 2
    WEAK = "Weak"               # alpha < 2/3


class BackwardRegime(str, enum.Enum):
    CROSS_HEAVY = "CrossHeavy"      # alpha~ >= 1/2
    PRIVATE_HEAVY = "PrivateHeavy"  # alpha~ < 1/2


class NetGain(str, enum.Enum):
    GAIN = "Gain"
    NO_GAIN = "NoGain"
    OPEN = "Open"


@dataclass(frozen=True)
class RegimeLabel:
    forward: ForwardRegime
    backward: BackwardRegime
    netgain: NetGain


@dataclass(frozen=True)
class CapacityReport:
    c_no: Fraction
    c_pf: Fraction
    inner: Fraction
    outer: Fraction
    matched: bool
    regime: RegimeLabel


@dataclass(frozen=True)
class NetGainCurve:
    lambdas: tuple[Fraction, ...]
    fb_gain: tuple[Fraction, ...]
    indep_gain: tuple[Fraction, ...]
    netgain: NetGain


def forward_regime(n: int, m: int) -> ForwardRegime:
    a = ratio(m, n)
    if a is None:
        # (0, 0): no signal at all; the no-gain branch keeps every bound at 0
        return ForwardRegime.MODERATE
    if a >= 2:
        return ForwardRegime.VERY_STRONG
    if a < TWO_THIRDS:
        return ForwardRegime.WEAK
    return ForwardRegime.MODERATE


def backward_regime(nb: int, mb: int) -> BackwardRegime:
    a = ratio(mb, nb)
    if a is not None and a >= HALF:
        return BackwardRegime.CROSS_HEAVY
    return BackwardRegime.PRIVATE_HEAVY


def c_no(n: int, m: int) -> Fraction:
    """Nonfeedback sum capacity of the symmetric deterministic IC."""
    regime = forward_regime(n, m)
    if regime is ForwardRegime.VERY_STRONG:
        return Fraction(2 * n)
    if regime is ForwardRegime.WEAK:
        return Fraction(2 * max(n - m, m))
    return Fraction(max(2 * n - m, m))


def c_pf(n: int, m: int) -> Fraction:
    """Perfect-feedback sum capacity."""
    return Fraction(max(2 * n - m, m))


def feedback_levels(cfg: ChannelConfig, *, outer: bool = False) -> int:
    """Per-user backward levels usable for feedback in one backward slot.

    The achievable value uses side-information cancellation (direct levels
    for very strong forward interference, the better of cross or private
    levels for weak); ``outer=True`` gives the value appearing in the
    converse.
    """
    regime = forward_regime(cfg.n, cfg.m)
    if regime is ForwardRegime.VERY_STRONG:
        return cfg.nb
    if regime is ForwardRegime.WEAK:
        if outer:
            return max(cfg.nb, cfg.mb)
        return max(cfg.nb - cfg.mb, cfg.mb)
    return 0


def _capped(cfg: ChannelConfig, levels: int) -> Fraction:
    base = c_no(cfg.n, cfg.m)
    if forward_regime(cfg.n, cfg.m) is ForwardRegime.MODERATE:
        return base
    return min(base + 2 * cfg.lam * levels, c_pf(cfg.n, cfg.m))


def inner_sum(cfg: ChannelConfig) -> Fraction:
    """Achievable sum rate of the Type I/II/III feedback schemes."""
    return _capped(cfg, feedback_levels(cfg))


def outer_sum(cfg: ChannelConfig) -> Fraction:
    """Upper bound on the sum capacity with a lambda-limited backward IC."""
    return _capped(cfg, feedback_levels(cfg, outer=True))


def outer_raw_terms(cfg: ChannelConfig) -> tuple[Fraction, Fraction, Fraction]:
    n, m, nb, mb, lam = cfg.n, cfg.m, cfg.nb, cfg.mb, cfg.lam
    cutset = 2 * n + 2 * lam * nb
    perfect_fb = Fraction(max(n - m, 0) + max(n, m))
    balance = 2 * max(n - m, m) + 2 * lam * max(nb, mb)
    return cutset, perfect_fb, balance


def outer_raw(cfg: ChannelConfig) -> Fraction:
    """Minimum of the cutset, perfect-feedback and balance bounds."""
    return min(outer_raw_terms(cfg))


def in_open_regime(cfg: ChannelConfig) -> bool:
    """True where the two bounds are not guaranteed to meet (alpha < 2/3, alpha~ < 1)."""
    a, ab = cfg.alpha, cfg.alpha_b
    if a is None or a >= TWO_THIRDS:
        return False
    if cfg.nb == 0 and cfg.mb == 0:
        return False
    return ab < 1


def is_matched(cfg: ChannelConfig) -> bool:
    return not in_open_regime(cfg) or inner_sum(cfg) == outer_sum(cfg)


def _netgain_label(cfg: ChannelConfig) -> NetGain:
    # Both gains are 0 at lambda = 0 and piecewise linear in lambda, so a strict
    # gain exists for some lambda iff it exists for small lambda: the feedback
    # slope 2*levels must beat the backward IC's own capacity while the forward
    # IC still has room (c_pf > c_no).
    room = c_pf(cfg.n, cfg.m) - c_no(cfg.n, cfg.m)
    if forward_regime(cfg.n, cfg.m) is ForwardRegime.MODERATE or room <= 0:
        return NetGain.NO_GAIN
    own = c_no(cfg.nb, cfg.mb)
    if 2 * feedback_levels(cfg) > own:
        return NetGain.GAIN
    if 2 * feedback_levels(cfg, outer=True) > own:
        return NetGain.OPEN
    return NetGain.NO_GAIN


def classify_regime(cfg: ChannelConfig) -> RegimeLabel:
    return RegimeLabel(forward_regime(cfg.n, cfg.m),
                       backward_regime(cfg.nb, cfg.mb),
                       _netgain_label(cfg))


def capacity_report(cfg: ChannelConfig) -> CapacityReport:
    return CapacityReport(
        c_no=c_no(cfg.n, cfg.m),
        c_pf=c_pf(cfg.n, cfg.m),
        inner=inner_sum(cfg),
        outer=outer_sum(cfg),
        matched=is_matched(cfg),
        regime=classify_regime(cfg),
    )


def fb_gain(cfg: ChannelConfig, *, outer: bool = False) -> Fraction:
    bound = outer_sum(cfg) if outer else inner_sum(cfg)
    return bound - c_no(cfg.n, cfg.m)


def indep_gain(cfg: ChannelConfig) -> Fraction:
    """Gain from spending the same backward time on independent backward messages."""
    return cfg.lam * c_no(cfg.nb, cfg.mb)


def net_gain(cfg: ChannelConfig, lambda_grid: Iterable) -> NetGainCurve:
    lams = tuple(parse_fraction(x) for x in lambda_grid)
    if any(not 0 <= x <= 1 for x in lams):
        raise ValueError("lambda grid points must lie in [0, 1]")
    fb = tuple(fb_gain(cfg.with_lambda(x)) for x in lams)
    ind = tuple(indep_gain(cfg.with_lambda(x)) for x in lams)
    if any(f > i for f, i in zip(fb, ind)):
        label = NetGain.GAIN
    else:
        exact = _netgain_label(cfg)
        label = NetGain.NO_GAIN if exact is NetGain.NO_GAIN else NetGain.OPEN
    return NetGainCurve(lams, fb, ind, label)


# -- weak interaction (no mixing of forward and backward messages) -----------

# A linear form c0 + c1*lam + c2*lam_t, stored as a coefficient triple.
Form = tuple[Fraction, Fraction, Fraction]


def _direction_forms(n: int, m: int, nb: int, mb: int, own_slot: int) -> list[Form]:
    """Outer-bound pieces for one direction split in time.

    The direction gets ``1 - t_own`` of its channel for its own messages and is
    helped by ``t_fb`` of the opposite channel used as feedback.  ``own_slot``
    says which of (lam, lam_t) is ``t_own``; the other one is ``t_fb``.
    """
    cfg = ChannelConfig(n, m, nb, mb)
    no, pf = c_no(n, m), c_pf(n, m)
    levels = feedback_levels(cfg, outer=True)

    def form(const, own_coef, fb_coef) -> Form:
        coefs = [Fraction(const), Fraction(0), Fraction(0)]
        coefs[own_slot] += own_coef
        coefs[3 - own_slot] += fb_coef
        return tuple(coefs)

    if forward_regime(n, m) is ForwardRegime.MODERATE:
        return [form(no, -no, 0)]
    return [form(no, -no, 2 * levels), form(pf, -pf, 0)]


def weak_forms(fwd: tuple[int, int], bwd: tuple[int, int]):
    (n, m), (nb, mb) = fwd, bwd
    # forward messages lose lam_t of the forward IC and gain feedback over lam;
    # backward messages lose lam of the backward IC and gain over lam_t
    fwd_forms = _direction_forms(n, m, nb, mb, own_slot=2)
    bwd_forms = _direction_forms(nb, mb, n, m, own_slot=1)
    return fwd_forms, bwd_forms


def _eval(form: Form, lam: Fraction, lam_t: Fraction) -> Fraction:
    return form[0] + form[1] * lam + form[2] * lam_t


def weak_interaction_bound(fwd: tuple[int, int], bwd: tuple[int, int], lam, lam_t):
    """Sum-rate bounds ``(R_sum, R~_sum)`` when messages may not be mixed.

    ``lam`` is the backward-IC time spent on feedback for forward messages,
    ``lam_t`` the forward-IC time spent on feedback for backward messages.
    """
    lam, lam_t = parse_fraction(lam), parse_fraction(lam_t)
    if not (0 <= lam <= 1 and 0 <= lam_t <= 1):
        raise ValueError("time fractions must lie in [0, 1]")
    f_forms, b_forms = weak_forms(fwd, bwd)
    r = min(_eval(f, lam, lam_t) for f in f_forms)
    rt = min(_eval(f, lam, lam_t) for f in b_forms)
    return r, rt


@dataclass(frozen=True)
class WeakOptimum:
    lam: Fraction
    lam_t: Fraction
    r_sum: Fraction
    rt_sum: Fraction


def _solve2(a: Form, b: Form):
    """Intersection of the lines a(x, y) = 0 and b(x, y) = 0 (forms in x, y)."""
    det = a[1] * b[2] - a[2] * b[1]
    if det == 0:
        return None
    x = (-a[0] * b[2] + a[2] * b[0]) / det
    y = (-a[1] * b[0] + a[0] * b[1]) / det
    return x, y


def best_weak_point(fwd: tuple[int, int], bwd: tuple[int, int], rt_target) -> WeakOptimum:
    """Largest forward bound subject to a backward sum-rate target.

    The objective is concave piecewise linear over a polygon, so the optimum
    sits on a vertex of the arrangement of the polygon edges and the
    breakpoints of the objective; all candidates are enumerated exactly.
    Ties resolve to the smallest ``(lam_t, lam)``.
    """
    target = parse_fraction(rt_target)
    f_forms, b_forms = weak_forms(fwd, bwd)
    one, zero = Fraction(1), Fraction(0)
    lines: list[Form] = [(zero, one, zero), (-one, one, zero),
                         (zero, zero, one), (-one, zero, one)]
    lines += [(f[0] - target, f[1], f[2]) for f in b_forms]
    lines += [tuple(p - q for p, q in zip(f, g)) for f, g in itertools.combinations(f_forms, 2)]
    best = None
    for a, b in itertools.combinations(lines, 2):
        pt = _solve2(a, b)
        if pt is None:
            continue
        lam, lam_t = pt
        if not (0 <= lam <= 1 and 0 <= lam_t <= 1):
            continue
        rt = min(_eval(f, lam, lam_t) for f in b_forms)
        if rt < target:
            continue
        r = min(_eval(f, lam, lam_t) for f in f_forms)
        key = (-r, lam_t, lam)
        if best is None or key < best[0]:
            best = (key, WeakOptimum(lam, lam_t, r, rt))
    if best is None:
        raise ValueError(f"backward sum-rate target {target} is infeasible")
    return best[1]


# -- forward/backward subchannel pairing -------------------------------------


@dataclass(frozen=True)
class Pairing:
    pairs: tuple[tuple[int, int], ...]
    gains: tuple[Fraction, ...]
    total: Fraction


def pair_weight(fwd: tuple[int, int], bwd: tuple[int, int], lam) -> Fraction:
    cfg = ChannelConfig(fwd[0], fwd[1], bwd[0], bwd[1], parse_fraction(lam))
    return max(Fraction(0), fb_gain(cfg) - indep_gain(cfg))


def _assignment_value(w: np.ndarray) -> int:
    if w.size == 0:
        return 0
    rows, cols = linear_sum_assignment(w, maximize=True)
    return int(w[rows, cols].sum())


def pair_subchannels(forwards: Sequence[tuple[int, int]],
                     backwards: Sequence[tuple[int, int]], lam) -> Pairing:
    """Perfect forward/backward pairing maximizing total net feedback gain.

    Among optimal pairings the lexicographically smallest assignment (by
    forward index) is returned.
    """
    if not forwards or len(forwards) != len(backwards):
        raise ValueError("need two nonempty lists of equal length")
    lam = parse_fraction(lam)
    weights = [[pair_weight(f, b, lam) for b in backwards] for f in forwards]
    scale = np.lcm.reduce([w.denominator for row in weights for w in row])
    # exact integer weights; float64 is exact for these magnitudes
    w = np.array([[int(x * scale) for x in row] for row in weights], dtype=np.int64)
    best = _assignment_value(w)
    k = len(forwards)
    rows_left, cols_left = list(range(k)), list(range(k))
    chosen: list[tuple[int, int]] = []
    acc = 0
    for i in range(k):
        rows_left.remove(i)
        for j in sorted(cols_left):
            rest_cols = [c for c in cols_left if c != j]
            rest = _assignment_value(w[np.ix_(rows_left, rest_cols)])
            if acc + int(w[i, j]) + rest == best:
                chosen.append((i, j))
                acc += int(w[i, j])
                cols_left.remove(j)
                break
    gains = tuple(weights[i][j] for i, j in chosen)
    return Pairing(tuple(chosen), gains, sum(gains, Fraction(0)))
