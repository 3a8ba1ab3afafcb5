"""Binary-power encoding tests against a brute-force subset oracle."""

import itertools
import random

import pytest

from simatlas.metering import (
    Ambiguous,
    NegativeBilled,
    TrafficClassPlan,
    decode_billed,
    encode_classes,
    round_up,
)

MIB = 1024 * 1024


def oracle_decode(billed, plan, rounding):
    """Enumerate all 2^K subsets; return (minimizers, best_residual)."""
    classes = sorted(plan.classes)
    best = None
    winners = []
    for r in range(len(classes) + 1):
        for subset in itertools.combinations(classes, r):
            total = sum((1 << c) * plan.unit_bytes for c in subset)
            residual = abs(billed - round_up(total, rounding)) if total else abs(billed)
            if best is None or residual < best:
                best, winners = residual, [frozenset(subset)]
            elif residual == best:
                winners.append(frozenset(subset))
    return winners, best


def test_schedule_is_binary_powers():
    plan = TrafficClassPlan(classes={0, 2, 5}, unit_bytes=MIB)
    steps = encode_classes(plan)
    assert [(s.class_nr, s.volume_bytes) for s in steps] == [
        (0, MIB),
        (2, 4 * MIB),
        (5, 32 * MIB),
    ]


def test_exact_binary_decomposition():
    plan = TrafficClassPlan(classes={0, 2}, unit_bytes=MIB)
    assert decode_billed(5 * MIB, plan, 1) == frozenset({0, 2})


def test_rounded_billed_amount():
    plan = TrafficClassPlan(classes={0, 2}, unit_bytes=MIB)
    billed = 5 * MIB + 37 * 1024
    assert decode_billed(billed, plan, 100 * 1024) == frozenset({0, 2})


def test_constructed_ambiguity():
    plan = TrafficClassPlan(classes={0, 1}, unit_bytes=MIB)
    with pytest.raises(Ambiguous):
        decode_billed(MIB + MIB // 2, plan, MIB)


def test_negative_billed():
    plan = TrafficClassPlan(classes={0}, unit_bytes=MIB)
    with pytest.raises(NegativeBilled):
        decode_billed(-1, plan, 1)


def test_zero_billed_is_empty_set():
    plan = TrafficClassPlan(classes={0, 1, 2}, unit_bytes=MIB)
    assert decode_billed(0, plan, 1024) == frozenset()


def test_far_off_amount_flagged():
    plan = TrafficClassPlan(classes={3}, unit_bytes=MIB)
    with pytest.raises(Ambiguous):
        decode_billed(2 * MIB, plan, 1024)


def test_exhaustive_identity_classes_0_to_7():
    """encode -> bill (round up once) -> decode over all 256 subsets."""
    unit = 4096
    full = TrafficClassPlan(classes=set(range(8)), unit_bytes=unit)
    rounding = unit // 2
    for mask in range(256):
        subset = frozenset(c for c in range(8) if mask & (1 << c))
        billed = round_up(full.total(subset), rounding) if subset else 0
        assert decode_billed(billed, full, rounding) == subset


def test_randomized_probes_agree_with_oracle():
    rng = random.Random(424242)
    unit = 1024
    for _ in range(1000):
        k = rng.randrange(1, 8)
        classes = frozenset(rng.sample(range(8), k))
        plan = TrafficClassPlan(classes=classes, unit_bytes=unit)
        cmin = min(classes)
        rounding = rng.randrange(1, max(2, (1 << cmin) * unit // 2 + 1))
        subset = frozenset(c for c in classes if rng.random() < 0.5)
        jitter = rng.randrange(0, rounding)
        billed = (round_up(plan.total(subset), rounding) if subset else 0) + jitter

        winners, best = oracle_decode(billed, plan, rounding)
        try:
            got = decode_billed(billed, plan, rounding)
        except Ambiguous:
            assert len(winners) > 1 or best >= rounding, (
                f"implementation ambiguous but oracle unique: {billed} {sorted(classes)} {rounding}"
            )
        else:
            assert len(winners) == 1 and best < rounding
            assert got == winners[0]


def test_adversarial_rounding_matches_oracle():
    """Rounding beyond the precondition: decode must never disagree
    with the oracle, only refuse via Ambiguous."""
    rng = random.Random(11)
    unit = 512
    for _ in range(300):
        classes = frozenset(rng.sample(range(6), rng.randrange(1, 5)))
        plan = TrafficClassPlan(classes=classes, unit_bytes=unit)
        rounding = rng.randrange(1, 4 * unit)
        billed = rng.randrange(0, plan.total(classes) + 2 * rounding)
        winners, best = oracle_decode(billed, plan, rounding)
        try:
            got = decode_billed(billed, plan, rounding)
        except Ambiguous:
            continue
        assert [got] == winners
        assert best < rounding
