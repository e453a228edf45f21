"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
Every tolerance and time bound is pinned here; the drivers live in
campaigns.py and the independent oracles in oracles.py.
"""

import itertools
import json
import random
import time
from contextlib import contextmanager


from advlab import (
    Adversary,
    AgreementFunction,
    ProcessSet,
    agreement_function,
    csize,
    is_fair,
    is_superset_closed,
    is_symmetric,
    restrict,
    restrict_intersecting,
    setcon,
    symmetric_setcon,
    t_resilient_adversary,
)
from advlab.bgg import (
    GATE_ADAPTIVE,
    check_liveset_coverage,
    check_participation_stability,
    check_selection_feasibility,
    check_window_stability,
    run_bgg_selection,
)
from advlab.cli import main as cli_main

from campaigns import (
    adaptive_exhaustive,
    adaptive_seeded,
    round_robin_exhaustive,
    round_robin_seeded,
    safe_agreement_exhaustive,
)
from oracles import all_families, brute_setcon, superset_closed_families, symmetric_families

UNFAIR_TRIPLE = Adversary.of(3, [[1], [2, 3], [1, 2, 3]])
FAIR_NONSTRUCTURED = Adversary.of(3, [[1], [2], [3], [1, 3], [2, 3], [1, 2, 3]])
ONE_RESILIENT_3 = t_resilient_adversary(3, 1)


@contextmanager
def criterion(number: int, name: str, limit_seconds: float):
    start = time.time()
    outcome = {"pass": False}
    try:
        yield outcome
        outcome["pass"] = True
    finally:
        elapsed = time.time() - start
        tag = "PASS" if outcome["pass"] else "FAIL"
        print(f"ACCEPTANCE {number:02d} {name}: {tag} ({elapsed:.2f}s)")
    assert elapsed < limit_seconds, f"criterion {number} exceeded {limit_seconds}s ({elapsed:.2f}s)"


def run_cli_json(tmp_path, *argv) -> dict:
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main([*argv, "--format", "json"])
    assert code == 0, buf.getvalue()
    return json.loads(buf.getvalue())


def test_criterion_01_counterexample_reproduction(tmp_path):
    with criterion(1, "counterexample-reproduction", 1.0):
        path = tmp_path / "unfair.json"
        path.write_text(json.dumps({"n": 3, "live_sets": [[1], [1, 2, 3], [2, 3]]}))
        report = run_cli_json(tmp_path, "setcon", "--adversary", str(path))
        assert report["setcon"] == 2
        classify = run_cli_json(tmp_path, "classify", "--adversary", str(path))
        assert classify["fair"] is False
        assert classify["counterexample"]["P"] == [1, 2, 3]
        assert classify["counterexample"]["Q"] == [2, 3]
        assert classify["counterexample"]["setcon_PQ"] == 1
        table = run_cli_json(tmp_path, "alpha", "--adversary", str(path))
        # masks: {}, {1}, {2}, {1,2}, {3}, {1,3}, {2,3}, {1,2,3}
        assert table["table"] == [0, 1, 0, 1, 0, 1, 1, 2]


def test_criterion_02_structured_families_are_fair():
    with criterion(2, "structured-families-are-fair", 300.0):
        for masks in all_families(3):
            adv = Adversary(3, tuple(ProcessSet(3, m) for m in masks))
            if is_superset_closed(adv) or is_symmetric(adv):
                assert is_fair(adv), masks
        for masks in superset_closed_families(4):
            adv = Adversary(4, tuple(ProcessSet(4, m) for m in masks))
            assert is_superset_closed(adv)
            assert is_fair(adv), masks
        for masks in symmetric_families(4):
            adv = Adversary(4, tuple(ProcessSet(4, m) for m in masks))
            assert is_symmetric(adv)
            assert is_fair(adv), masks


def test_criterion_03_setcon_oracle_equivalence():
    with criterion(3, "setcon-oracle-equivalence", 300.0):
        for masks in all_families(3):
            adv = Adversary(3, tuple(ProcessSet(3, m) for m in masks))
            assert setcon(adv) == brute_setcon(masks), masks
        for n in (3, 4):
            for masks in superset_closed_families(n):
                if not masks:
                    continue
                adv = Adversary(n, tuple(ProcessSet(n, m) for m in masks))
                assert setcon(adv) == csize(adv), (n, masks)
            for masks in symmetric_families(n):
                if not masks:
                    continue
                adv = Adversary(n, tuple(ProcessSet(n, m) for m in masks))
                assert setcon(adv) == symmetric_setcon(adv), (n, masks)


def test_criterion_04_power_bound_sweep():
    with criterion(4, "power-bound-sweep", 300.0):
        for masks in all_families(3):
            adv = Adversary(3, tuple(ProcessSet(3, m) for m in masks))
            for p_bits in range(1, 8):
                region = ProcessSet(3, p_bits)
                base = setcon(restrict(adv, region))
                q_bits = p_bits
                while q_bits:
                    targets = ProcessSet(3, q_bits)
                    got = setcon(restrict_intersecting(adv, region, targets))
                    assert got <= min(len(targets), base), (masks, p_bits, q_bits)
                    q_bits = (q_bits - 1) & p_bits
        rng = random.Random(20240801)
        for _ in range(10_000):
            fam = frozenset(m for m in range(1, 16) if rng.random() < 0.35)
            adv = Adversary(4, tuple(ProcessSet(4, m) for m in fam))
            p_bits = rng.randrange(1, 16)
            q_bits = rng.choice([q for q in range(1, p_bits + 1) if q & ~p_bits == 0])
            region, targets = ProcessSet(4, p_bits), ProcessSet(4, q_bits)
            got = setcon(restrict_intersecting(adv, region, targets))
            assert got <= min(len(targets), setcon(restrict(adv, region)))


def test_criterion_05_fair_nonstructured_example():
    with criterion(5, "fair-nonstructured-example", 60.0):
        assert is_fair(FAIR_NONSTRUCTURED)
        assert not is_symmetric(FAIR_NONSTRUCTURED)
        assert not is_superset_closed(FAIR_NONSTRUCTURED)
        assert setcon(FAIR_NONSTRUCTURED) == 2


def test_criterion_06_safe_agreement_exhaustive():
    with criterion(6, "safe-agreement-exhaustive", 120.0):
        failures = safe_agreement_exhaustive(steps_per_process=(1, 2, 3, 4, 5, 6), halts=1)
        assert failures == [], failures[:3]


def test_criterion_07_adaptive_campaign():
    with criterion(7, "adaptive-campaign", 600.0):
        configs = [
            agreement_function(UNFAIR_TRIPLE),
            agreement_function(FAIR_NONSTRUCTURED),
            agreement_function(ONE_RESILIENT_3),
            AgreementFunction.wait_free(3),
            AgreementFunction.t_resilient(3, 1),
        ]
        for fn in configs:
            failures = adaptive_seeded(fn, seeds=range(10_000), budget=72)
            assert failures == [], (fn.table, failures[:3])
        for fn in (AgreementFunction.wait_free(2), AgreementFunction.t_resilient(2, 0)):
            failures = adaptive_exhaustive(fn, steps_per_process=(4, 6), halts=1)
            assert failures == [], (fn.table, failures[:3])


def test_criterion_08_round_robin_construction():
    with criterion(8, "round-robin-construction", 600.0):
        fn = AgreementFunction.k_concurrent(3, 2)
        assert fn.value_of(ProcessSet.full(3)) == 2
        failures = round_robin_exhaustive(fn, steps_per_process=(2, 3, 4), halts=1)
        assert failures == [], failures[:3]
        failures = round_robin_seeded(fn, seeds=range(2000), budget=60)
        assert failures == [], failures[:3]


def test_criterion_09_selection_property_suite():
    with criterion(9, "selection-property-suite", 600.0):
        budget = 400 * 3
        for masks in all_families(3):
            adv = Adversary(3, tuple(ProcessSet(3, m) for m in masks))
            if not is_fair(adv):
                continue
            fn = agreement_function(adv)
            sims = fn.of_bits(7)
            if sims == 0:
                continue
            for rsize in range(sims + 1):
                for halted in itertools.combinations(range(1, sims + 1), rsize):
                    pattern = {s: budget // 6 + 3 * s for s in halted}
                    history = run_bgg_selection(
                        adv, fn, pattern=pattern, budget=budget, gate_mode=GATE_ADAPTIVE
                    )
                    for verdict in (
                        check_participation_stability(history),
                        check_window_stability(history),
                        check_selection_feasibility(history),
                        check_liveset_coverage(history),
                    ):
                        assert verdict.passed, (masks, pattern, verdict)


def test_criterion_10_derived_functions_monotonic():
    with criterion(10, "derived-functions-monotonic", 60.0):
        for masks in all_families(3):
            adv = Adversary(3, tuple(ProcessSet(3, m) for m in masks))
            assert agreement_function(adv).is_monotonic(), masks
