from __future__ import annotations

import pytest

from futsim.calculus import (
    Add,
    Closure,
    Configuration,
    FutureCreate,
    FutureRef,
    IntLit,
    eval_sequential,
    initial_configuration,
    is_terminal,
    node_count,
    validate_configuration,
)
from futsim.engine import (
    AddEvent,
    ClaimEvent,
    CreateEvent,
    DivergenceError,
    ExplorationLimitError,
    NotEnabledError,
    NewestFirst,
    RoundRobin,
    SeededRandom,
    _explore,
    canonical_key,
    enabled_threads,
    explore_all,
    explore_with_stats,
    gen_random_program,
    run,
    step,
)
from futsim.parser import parse, unparse
from futsim.scaling import FrequencyLadder, make_strategy, strategy_both, strategy_parent_only

LADDER = FrequencyLadder((1.0, 2.0, 3.0, 4.0))
BOTH = strategy_both(LADDER)

GOLDEN_PROGRAM = parse("2 + future (future (3+4))")


def _cl(level_index, expr, fid):
    return Closure(LADDER.level(level_index), expr, fid)


def _mid_run_three_threads():
    # After both creates: grandchild adds, middle waits on it, root waits on middle.
    return Configuration(
        closures=(
            _cl(4, Add(IntLit(3), IntLit(4)), 2),
            _cl(2, FutureRef(2), 1),
            _cl(1, Add(IntLit(2), FutureRef(1)), 0),
        ),
        next_fresh=3,
        root=0,
    )


def test_enabled_only_grandchild_before_it_realizes():
    assert enabled_threads(_mid_run_three_threads()) == {2}


def test_enabled_middle_after_grandchild_realizes():
    config = Configuration(
        closures=(
            _cl(4, IntLit(7), 2),
            _cl(2, FutureRef(2), 1),
            _cl(1, Add(IntLit(2), FutureRef(1)), 0),
        ),
        next_fresh=3,
        root=0,
    )
    # The middle thread holds a future value: it may claim forward, but the
    # root stays blocked until the middle realizes an integer.
    assert enabled_threads(config) == {1}


def test_enabled_empty_on_terminal():
    config = initial_configuration(IntLit(9), LADDER.level(2))
    assert enabled_threads(config) == frozenset()
    assert is_terminal(config)


def test_step_create_scales_both_sides():
    config = initial_configuration(GOLDEN_PROGRAM, LADDER.level(2))
    new_config, event = step(config, 0, BOTH)
    assert isinstance(event, CreateEvent)
    assert event.child == 1
    assert event.child_level == LADDER.level(3)
    assert event.parent_level == LADDER.level(1)
    child, parent = new_config.closures
    assert child == _cl(3, FutureCreate(Add(IntLit(3), IntLit(4))), 1)
    assert parent == _cl(1, Add(IntLit(2), FutureRef(1)), 0)
    assert new_config.next_fresh == 2


def test_step_claim_merges_producer():
    config = Configuration(
        closures=(_cl(4, IntLit(7), 2), _cl(2, FutureRef(2), 1)),
        next_fresh=3,
        root=1,
    )
    new_config, event = step(config, 1, BOTH)
    assert isinstance(event, ClaimEvent)
    assert event.claimed == 2
    assert event.value == IntLit(7)
    assert event.claimant_level == LADDER.level(3)
    assert new_config.closures == (_cl(3, IntLit(7), 1),)


def test_step_add_keeps_frequency():
    config = initial_configuration(Add(IntLit(3), IntLit(4)), LADDER.level(2))
    new_config, event = step(config, 0, BOTH)
    assert isinstance(event, AddEvent)
    assert (event.left, event.right, event.total) == (3, 4, 7)
    assert new_config.closures == (_cl(2, IntLit(7), 0),)


def test_step_rejects_blocked_thread():
    with pytest.raises(NotEnabledError):
        step(_mid_run_three_threads(), 0, BOTH)


def test_run_reproduces_golden_trace():
    result = run(GOLDEN_PROGRAM, LADDER, 2, BOTH, NewestFirst())
    assert result.final_value == 9
    assert [e.rule for e in result.events] == ["Create", "Create", "Add", "Claim", "Claim", "Add"]
    assert result.final_level == LADDER.level(2)
    assert result.clamp_count == 0


def test_run_without_futures():
    result = run(parse("3 + 4"), LADDER, 2, BOTH)
    assert result.final_value == 7
    assert all(e.rule == "Add" for e in result.events)


def test_run_parent_only_example():
    result = run(parse("1 + future (2+3)"), LADDER, 2, strategy_parent_only(LADDER), NewestFirst())
    assert result.final_value == 6
    assert [e.rule for e in result.events] == ["Create", "Add", "Claim", "Add"]
    create = result.events[0]
    assert create.child_level == LADDER.level(2)  # up_create is the identity
    assert create.parent_level == LADDER.level(1)
    assert result.final_level == LADDER.level(2)  # back up after the claim


def test_run_rejects_future_refs():
    with pytest.raises(ValueError):
        run(FutureRef(1), LADDER, 2, BOTH)


def test_run_step_limit_guard():
    with pytest.raises(DivergenceError):
        run(GOLDEN_PROGRAM, LADDER, 2, BOTH, step_limit=2)


def test_explore_golden_program_single_outcome():
    assert explore_all(GOLDEN_PROGRAM, LADDER, 2, BOTH) == {(9, LADDER.level(2))}


def test_explore_nested_future_program():
    expr = parse("future 1 + future 2")
    outcomes = explore_all(expr, LADDER, 2, BOTH)
    assert len(outcomes) == 1
    assert next(iter(outcomes))[0] == 3


def test_explore_literal_is_one_state():
    outcomes, states = explore_with_stats(IntLit(5), LADDER, 2, BOTH)
    assert outcomes == {(5, LADDER.level(2))}
    assert states == 1


def test_explore_state_limit():
    with pytest.raises(ExplorationLimitError):
        explore_all(GOLDEN_PROGRAM, LADDER, 2, BOTH, state_limit=2)


def test_explore_is_insensitive_to_closure_order():
    config = _mid_run_three_threads()
    permuted = Configuration(
        closures=(config.closures[2], config.closures[0], config.closures[1]),
        next_fresh=config.next_fresh,
        root=config.root,
    )
    assert canonical_key(config) == canonical_key(permuted)
    assert _explore(config, BOTH, 10_000) == _explore(permuted, BOTH, 10_000)


def test_canonical_key_renames_fresh_ids():
    config = Configuration(
        closures=(_cl(3, IntLit(5), 7), _cl(1, Add(IntLit(2), FutureRef(7)), 0)),
        next_fresh=8,
        root=0,
    )
    renamed = Configuration(
        closures=(_cl(3, IntLit(5), 4), _cl(1, Add(IntLit(2), FutureRef(4)), 0)),
        next_fresh=5,
        root=0,
    )
    assert canonical_key(config) == canonical_key(renamed)


def test_gen_random_program_deterministic_and_pinned():
    expr = gen_random_program(1, 3, 2)
    assert expr == gen_random_program(1, 3, 2)
    assert expr == Add(FutureCreate(IntLit(-7)), Add(IntLit(-6), IntLit(6)))


@pytest.mark.parametrize("seed", range(20))
def test_gen_random_program_round_trips(seed):
    expr = gen_random_program(seed, 5, 2)
    assert parse(unparse(expr)) == expr


def test_gen_random_program_bounds():
    with pytest.raises(ValueError):
        gen_random_program(0, 0, 1)
    with pytest.raises(ValueError):
        gen_random_program(0, 3, 0)


POLICIES = [NewestFirst(), RoundRobin(), SeededRandom(42)]
STRATEGIES = ["both", "parent-only", "none"]


@pytest.mark.parametrize("seed", range(40))
def test_determinacy_sample(seed):
    expr = gen_random_program(seed, 6, 3)
    expected = eval_sequential(expr)
    for name in STRATEGIES:
        strategy = make_strategy(name, LADDER)
        for policy in POLICIES:
            assert run(expr, LADDER, 2, strategy, policy).final_value == expected


def run_validated(expr, ladder, init_index, strategy, policy):
    """run() with structural validation after every step; returns the result."""
    config = initial_configuration(expr, ladder.level(init_index))
    validate_configuration(config, ladder)
    pick = policy.session()
    steps = 0
    clamps = 0
    while True:
        enabled = enabled_threads(config)
        if not enabled:
            assert is_terminal(config)
            break
        config, event = step(config, pick(config, enabled), strategy)
        validate_configuration(config, ladder)
        steps += 1
        clamps += getattr(event, "clamps", 0)
    root = config.closures[0]
    return root.expr.value, steps, root.freq, clamps


@pytest.mark.parametrize("seed", range(20))
def test_invariants_preserved_each_step(seed):
    expr = gen_random_program(seed, 6, 3)
    value, steps, _, _ = run_validated(expr, LADDER, 2, BOTH, RoundRobin())
    assert value == eval_sequential(expr)
    assert steps <= 3 * node_count(expr)


def test_seeded_random_policy_reproducible():
    expr = gen_random_program(3, 6, 3)
    first = run(expr, LADDER, 2, BOTH, SeededRandom(7))
    second = run(expr, LADDER, 2, BOTH, SeededRandom(7))
    assert first.events == second.events


def test_round_robin_cycles():
    expr = parse("(future (1+1+1)) + (future (2+2+2))")
    result = run(expr, LADDER, 2, BOTH, RoundRobin())
    assert result.final_value == eval_sequential(expr)


def test_return_to_original_when_clamp_free():
    wide = FrequencyLadder(tuple(float(i) for i in range(1, 17)))
    strategy = strategy_both(wide)
    checked = 0
    for seed in range(30):
        expr = gen_random_program(seed, 6, 3)
        result = run(expr, wide, 8, strategy)
        if result.clamp_count == 0:
            assert result.final_level == wide.level(8)
            checked += 1
    assert checked > 0


def test_event_levels_stay_in_ladder():
    for seed in range(10):
        expr = gen_random_program(seed, 6, 3)
        result = run(expr, LADDER, 2, BOTH)
        for event in result.events:
            assert LADDER.contains(event.level)
            if isinstance(event, CreateEvent):
                assert LADDER.contains(event.parent_level)
                assert LADDER.contains(event.child_level)
            if isinstance(event, ClaimEvent):
                assert LADDER.contains(event.claimant_level)
