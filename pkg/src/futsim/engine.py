"""Reduction rules over configurations, schedulers, and interleaving exploration."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Union

from .calculus import (
    Add,
    ArithRedex,
    ClaimSite,
    Closure,
    Configuration,
    CreateRedex,
    Expression,
    FutureCreate,
    FutureId,
    FutureRef,
    IntLit,
    NoRedex,
    contains_future_ref,
    decompose,
    future_ref_ids,
    initial_configuration,
    is_terminal,
    node_count,
    plug,
    wrap_int,
)
from .scaling import FrequencyLadder, FrequencyLevel, ScaleOp, ScalingStrategy

RULE_CREATE = "Create"
RULE_ADD = "Add"
RULE_CLAIM = "Claim"


class EngineError(Exception):
    """Internal invariant broken while reducing."""


class NotEnabledError(EngineError):
    """A step was requested on a thread that cannot currently reduce."""


class DivergenceError(EngineError):
    """The step limit was exceeded (guards engine bugs; the calculus terminates)."""


class ExplorationLimitError(EngineError):
    """Interleaving exploration hit its state budget."""


@dataclass(frozen=True)
class CreateEvent:
    thread: FutureId
    level: FrequencyLevel  # level the create executed at, before scaling
    child: FutureId
    parent_level: FrequencyLevel
    child_level: FrequencyLevel
    clamps: int

    rule = RULE_CREATE


@dataclass(frozen=True)
class ClaimEvent:
    thread: FutureId
    level: FrequencyLevel  # level the claim executed at, before scaling
    claimed: FutureId
    value: Expression
    claimant_level: FrequencyLevel
    clamps: int

    rule = RULE_CLAIM


@dataclass(frozen=True)
class AddEvent:
    thread: FutureId
    level: FrequencyLevel
    left: int
    right: int
    total: int

    rule = RULE_ADD


ReductionEvent = Union[CreateEvent, ClaimEvent, AddEvent]


def enabled_threads(config: Configuration) -> frozenset[FutureId]:
    """Threads that can take a step right now.

    A claim is enabled only once its producer has realized an integer; a
    producer holding a bare future reference is itself a pending claimant
    (it forwards the claim) and is not yet claimable. Realized non-root
    closures sit idle until claimed.
    """
    producers = {c.realizes: c for c in config.closures}
    enabled: set[FutureId] = set()
    for c in config.closures:
        site = decompose(c.expr)
        if isinstance(site, (ArithRedex, CreateRedex)):
            enabled.add(c.realizes)
        elif isinstance(site, ClaimSite):
            producer = producers.get(site.target)
            if producer is None:
                raise EngineError(f"fv{site.target} claimed but never produced")
            if isinstance(producer.expr, IntLit):
                enabled.add(c.realizes)
    return frozenset(enabled)


def step(config: Configuration, thread: FutureId, strategy: ScalingStrategy) -> tuple[Configuration, ReductionEvent]:
    """Fire the one rule the named thread can take; pure, returns a new configuration."""
    if thread not in enabled_threads(config):
        raise NotEnabledError(f"fv{thread} has no enabled reduction")
    index = next(i for i, c in enumerate(config.closures) if c.realizes == thread)
    closure = config.closures[index]
    site = decompose(closure.expr)

    if isinstance(site, CreateRedex):
        child_id = config.next_fresh
        child_level, clamp_up = strategy.scale(ScaleOp.UP_CREATE, closure.freq)
        parent_level, clamp_down = strategy.scale(ScaleOp.DOWN, closure.freq)
        parent = Closure(parent_level, plug(site.context, FutureRef(child_id)), closure.realizes)
        child = Closure(child_level, site.body, child_id)
        closures = (child,) + config.closures[:index] + (parent,) + config.closures[index + 1 :]
        event = CreateEvent(thread, closure.freq, child_id, parent_level, child_level, int(clamp_up) + int(clamp_down))
        return Configuration(closures, config.next_fresh + 1, config.root), event

    if isinstance(site, ArithRedex):
        total = wrap_int(site.left + site.right)
        updated = Closure(closure.freq, plug(site.context, IntLit(total)), thread)
        closures = config.closures[:index] + (updated,) + config.closures[index + 1 :]
        event = AddEvent(thread, closure.freq, site.left, site.right, total)
        return Configuration(closures, config.next_fresh, config.root), event

    if isinstance(site, ClaimSite):
        producer = config.closure_for(site.target)
        new_level, clamped = strategy.scale(ScaleOp.UP_CLAIM, closure.freq)
        updated = Closure(new_level, plug(site.context, producer.expr), thread)
        closures = tuple(
            updated if c.realizes == thread else c for c in config.closures if c.realizes != site.target
        )
        event = ClaimEvent(thread, closure.freq, site.target, producer.expr, new_level, int(clamped))
        return Configuration(closures, config.next_fresh, config.root), event

    raise NotEnabledError(f"fv{thread} holds a value")


# ---------------------------------------------------------------------------
# Schedulers
# ---------------------------------------------------------------------------

Picker = Callable[[Configuration, frozenset[FutureId]], FutureId]


class NewestFirst:
    """Most recently created runnable thread first: fresh children run eagerly."""

    name = "newest-first"

    def session(self) -> Picker:
        def pick(config: Configuration, enabled: frozenset[FutureId]) -> FutureId:
            for c in config.closures:
                if c.realizes in enabled:
                    return c.realizes
            raise EngineError("no enabled thread to pick")

        return pick


class RoundRobin:
    """Cycle through thread ids ascending, resuming after the last one stepped."""

    name = "round-robin"

    def session(self) -> Picker:
        last = -1

        def pick(config: Configuration, enabled: frozenset[FutureId]) -> FutureId:
            nonlocal last
            ids = sorted(enabled)
            choice = next((i for i in ids if i > last), ids[0])
            last = choice
            return choice

        return pick


class SeededRandom:
    """Uniform choice among enabled threads; equal seeds give identical runs."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def session(self) -> Picker:
        rng = random.Random(self.seed)

        def pick(config: Configuration, enabled: frozenset[FutureId]) -> FutureId:
            return rng.choice(sorted(enabled))

        return pick


SchedulerPolicy = Union[NewestFirst, RoundRobin, SeededRandom]


@dataclass(frozen=True)
class RunResult:
    final_value: int
    events: tuple[ReductionEvent, ...]
    final_level: FrequencyLevel
    step_count: int
    clamp_count: int


def run(
    expr: Expression,
    ladder: FrequencyLadder,
    init_index: int,
    strategy: ScalingStrategy,
    policy: SchedulerPolicy | None = None,
    step_limit: int | None = None,
) -> RunResult:
    """Reduce a program to a single integer-holding root closure."""
    if contains_future_ref(expr):
        raise ValueError("programs must not contain future references")
    if strategy.ladder != ladder:
        raise ValueError("strategy was built over a different ladder")
    if step_limit is None:
        step_limit = 10 * 3 * node_count(expr)
    pick = (policy or NewestFirst()).session()

    config = initial_configuration(expr, ladder.level(init_index))
    events: list[ReductionEvent] = []
    clamps = 0
    while True:
        enabled = enabled_threads(config)
        if not enabled:
            if is_terminal(config):
                break
            raise EngineError("no enabled thread in a non-terminal configuration")
        if len(events) >= step_limit:
            raise DivergenceError(f"exceeded {step_limit} steps")
        config, event = step(config, pick(config, enabled), strategy)
        events.append(event)
        clamps += getattr(event, "clamps", 0)

    root = config.closures[0]
    assert isinstance(root.expr, IntLit)
    return RunResult(
        final_value=root.expr.value,
        events=tuple(events),
        final_level=root.freq,
        step_count=len(events),
        clamp_count=clamps,
    )


# ---------------------------------------------------------------------------
# Exhaustive interleaving exploration
# ---------------------------------------------------------------------------

def _canonical_expr(expr: Expression, rename: dict[FutureId, int]) -> Expression:
    if isinstance(expr, FutureRef):
        return FutureRef(rename[expr.fid])
    if isinstance(expr, Add):
        return Add(_canonical_expr(expr.left, rename), _canonical_expr(expr.right, rename))
    if isinstance(expr, FutureCreate):
        return FutureCreate(_canonical_expr(expr.body, rename))
    return expr


def canonical_key(config: Configuration) -> tuple:
    """A configuration key invariant under closure order and fresh-id choice.

    Ids are renumbered in discovery order walking expressions from the root,
    so interleavings that created the same futures in different orders map to
    the same state.
    """
    producers = {c.realizes: c for c in config.closures}
    rename: dict[FutureId, int] = {config.root: 0}
    order: list[FutureId] = [config.root]
    cursor = 0
    while cursor < len(order):
        closure = producers[order[cursor]]
        cursor += 1
        for fid in future_ref_ids(closure.expr):
            if fid not in rename:
                rename[fid] = len(rename)
                order.append(fid)
    if len(order) != len(config.closures):
        raise EngineError("configuration has closures unreachable from the root")
    return tuple(
        (rename[fid], producers[fid].freq.index, _canonical_expr(producers[fid].expr, rename)) for fid in order
    )


def _explore(config: Configuration, strategy: ScalingStrategy, state_limit: int) -> tuple[set[tuple[int, FrequencyLevel]], int]:
    seen = {canonical_key(config)}
    frontier = [config]
    outcomes: set[tuple[int, FrequencyLevel]] = set()
    while frontier:
        next_frontier: list[Configuration] = []
        for cfg in frontier:
            enabled = enabled_threads(cfg)
            if not enabled:
                if not is_terminal(cfg):
                    raise EngineError("stuck non-terminal state during exploration")
                root = cfg.closures[0]
                assert isinstance(root.expr, IntLit)
                outcomes.add((root.expr.value, root.freq))
                continue
            for thread in sorted(enabled):
                stepped, _ = step(cfg, thread, strategy)
                key = canonical_key(stepped)
                if key not in seen:
                    if len(seen) >= state_limit:
                        raise ExplorationLimitError(f"more than {state_limit} states")
                    seen.add(key)
                    next_frontier.append(stepped)
        frontier = next_frontier
    return outcomes, len(seen)


def explore_all(
    expr: Expression,
    ladder: FrequencyLadder,
    init_index: int,
    strategy: ScalingStrategy,
    state_limit: int = 100_000,
) -> set[tuple[int, FrequencyLevel]]:
    """All distinct terminal (value, root level) pairs over every interleaving."""
    outcomes, _ = explore_with_stats(expr, ladder, init_index, strategy, state_limit)
    return outcomes


def explore_with_stats(
    expr: Expression,
    ladder: FrequencyLadder,
    init_index: int,
    strategy: ScalingStrategy,
    state_limit: int = 100_000,
) -> tuple[set[tuple[int, FrequencyLevel]], int]:
    if contains_future_ref(expr):
        raise ValueError("programs must not contain future references")
    config = initial_configuration(expr, ladder.level(init_index))
    return _explore(config, strategy, state_limit)


# ---------------------------------------------------------------------------
# Random program generation (property-test fuel)
# ---------------------------------------------------------------------------

def gen_random_program(seed: int, max_depth: int, max_future_nesting: int) -> Expression:
    """Deterministic random expression, reference-free, within the given bounds."""
    if max_depth < 1 or max_future_nesting < 1:
        raise ValueError("bounds must be at least 1")
    rng = random.Random(seed)

    def gen(depth: int, nesting: int) -> Expression:
        if depth >= max_depth:
            return IntLit(rng.randint(-9, 9))
        kinds = ["int", "add", "add", "add"]
        if nesting < max_future_nesting:
            kinds += ["future", "future"]
        kind = rng.choice(kinds)
        if kind == "int":
            return IntLit(rng.randint(-9, 9))
        if kind == "add":
            return Add(gen(depth + 1, nesting), gen(depth + 1, nesting))
        return FutureCreate(gen(depth + 1, nesting + 1))

    return gen(1, 0)
