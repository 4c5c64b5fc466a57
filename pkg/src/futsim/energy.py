"""Virtual-time execution of a reduction run with a parametric energy model.

Each thread owns a core. A step's duration is cycles/frequency and its energy
follows the dynamic-power law P = kappa * f**alpha. Claims on unfinished
producers wait by spinning (powered) or blocking (flat penalty); realized
producers terminate and accrue nothing afterward. Event order is fully
determined by virtual time, ties broken by thread id.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Union

from .calculus import (
    ArithRedex,
    ClaimSite,
    CreateRedex,
    Expression,
    FutureId,
    FutureRef,
    IntLit,
    NoRedex,
    contains_future_ref,
    decompose,
    plug,
    wrap_int,
)
from .engine import RULE_ADD, RULE_CLAIM, RULE_CREATE, EngineError
from .scaling import FrequencyLadder, FrequencyLevel, ScaleOp, ScalingStrategy

WAIT_SPIN = "spin"
WAIT_BLOCK = "block"
SPIN_AT_CURRENT = "current"
SPIN_FIXED_IDLE = "idle"
CASE_I = "CaseI"
CASE_II = "CaseII"


@dataclass
class CostModel:
    """Knobs of the timing/power model; defaults give the unit-cost cubic model."""

    create_cycles: float = 1.0
    add_cycles: float = 1.0
    claim_cycles: float = 1.0
    kappa: float = 1.0
    alpha: float = 3.0
    tau: float = 0.0  # per level-changing frequency switch; switches are free by default
    wait_policy: str = WAIT_SPIN
    spin_power_mode: str = SPIN_AT_CURRENT
    idle_power: float = 0.0
    block_time: float = 0.1
    block_energy: float = 1.0
    transition_energy: bool = False  # charge switches at kappa * f_new**alpha * tau

    def __post_init__(self) -> None:
        for name in ("create_cycles", "add_cycles", "claim_cycles"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        for name in ("tau", "idle_power", "block_time", "block_energy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.wait_policy not in (WAIT_SPIN, WAIT_BLOCK):
            raise ValueError(f"unknown wait policy {self.wait_policy!r}")
        if self.spin_power_mode not in (SPIN_AT_CURRENT, SPIN_FIXED_IDLE):
            raise ValueError(f"unknown spin power mode {self.spin_power_mode!r}")

    def cycles_for(self, rule: str) -> float:
        return {RULE_CREATE: self.create_cycles, RULE_ADD: self.add_cycles, RULE_CLAIM: self.claim_cycles}[rule]


def step_duration(rule: str, level: FrequencyLevel, model: CostModel) -> float:
    return model.cycles_for(rule) / level.value


def step_energy(rule: str, level: FrequencyLevel, model: CostModel) -> float:
    return model.kappa * level.value**model.alpha * step_duration(rule, level, model)


def spin_power(level: FrequencyLevel, model: CostModel) -> float:
    if model.spin_power_mode == SPIN_AT_CURRENT:
        return model.kappa * level.value**model.alpha
    return model.idle_power


SEG_COMPUTE = "compute"
SEG_WAIT = "wait"
SEG_TRANSITION = "transition"


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    kind: str  # compute | wait | transition
    level: FrequencyLevel
    energy: float
    rule: str | None = None  # compute only
    target: FutureId | None = None  # wait only
    mode: str | None = None  # wait only: spin | block
    expr: Expression | None = None  # compute only: thread expression after the step

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class ThreadTimeline:
    thread: FutureId
    segments: tuple[Segment, ...]

    def span(self) -> float:
        return self.segments[-1].end - self.segments[0].start if self.segments else 0.0

    def energy(self) -> float:
        return sum(s.energy for s in self.segments)


@dataclass(frozen=True)
class ClaimRecord:
    claimant: FutureId
    target: FutureId
    t_arrive: float
    t_realize: float
    wait: float
    case_tag: str


@dataclass
class SimulationReport:
    final_value: int
    makespan: float
    total_energy: float
    per_thread_energy: dict[FutureId, float]
    edp: float
    ed2p: float
    claim_records: tuple[ClaimRecord, ...]
    clamp_count: int
    transition_count: int
    timelines: dict[FutureId, ThreadTimeline]


def compute_metrics(report: SimulationReport) -> tuple[float, float, float, float]:
    """(energy, makespan, energy-delay product, energy-delay-squared product)."""
    energy, makespan = report.total_energy, report.makespan
    return energy, makespan, energy * makespan, energy * makespan * makespan


@dataclass
class _Thread:
    fid: FutureId
    expr: Expression
    level: FrequencyLevel
    segments: list[Segment] = field(default_factory=list)
    done: bool = False
    t_realize: float = 0.0
    consumed: bool = False


class _Simulation:
    def __init__(self, ladder: FrequencyLadder, strategy: ScalingStrategy, model: CostModel):
        self.ladder = ladder
        self.strategy = strategy
        self.model = model
        self.threads: dict[FutureId, _Thread] = {}
        self.heap: list[tuple[float, FutureId]] = []
        self.next_fresh = 1
        self.parked: dict[FutureId, tuple[FutureId, float]] = {}  # producer -> (claimant, t_arrive)
        self.claim_records: list[ClaimRecord] = []
        self.clamp_count = 0
        self.transition_count = 0

    def schedule(self, time: float, fid: FutureId) -> None:
        heapq.heappush(self.heap, (time, fid))

    def apply_scale(self, owner: _Thread, op: ScaleOp, base: FrequencyLevel, now: float) -> tuple[FrequencyLevel, float]:
        """Apply one operator; a level change costs tau on the acting thread's timeline."""
        new_level, clamped = self.strategy.scale(op, base)
        if clamped:
            self.clamp_count += 1
        if new_level.index == base.index:
            return new_level, now
        self.transition_count += 1
        if self.model.tau > 0:
            energy = self.model.kappa * new_level.value**self.model.alpha * self.model.tau if self.model.transition_energy else 0.0
            owner.segments.append(Segment(now, now + self.model.tau, SEG_TRANSITION, new_level, energy))
            now += self.model.tau
        return new_level, now

    def compute_segment(self, thr: _Thread, rule: str, start: float) -> float:
        duration = step_duration(rule, thr.level, self.model)
        energy = step_energy(rule, thr.level, self.model)
        thr.segments.append(Segment(start, start + duration, SEG_COMPUTE, thr.level, energy, rule=rule, expr=thr.expr))
        return start + duration

    def fire_claim(self, claimant: _Thread, producer: _Thread, t_arrive: float) -> None:
        site = decompose(claimant.expr)
        assert isinstance(site, ClaimSite) and site.target == producer.fid
        wait = max(0.0, producer.t_realize - t_arrive)
        case_tag = CASE_I if wait > 0 else CASE_II
        self.claim_records.append(
            ClaimRecord(claimant.fid, producer.fid, t_arrive, producer.t_realize, wait, case_tag)
        )
        start = t_arrive
        if wait > 0:
            if self.model.wait_policy == WAIT_SPIN:
                energy = spin_power(claimant.level, self.model) * wait
                claimant.segments.append(
                    Segment(t_arrive, producer.t_realize, SEG_WAIT, claimant.level, energy, target=producer.fid, mode=WAIT_SPIN)
                )
                start = producer.t_realize
            else:
                # One flat context-switch penalty per block/unblock pair.
                end = producer.t_realize + self.model.block_time
                claimant.segments.append(
                    Segment(t_arrive, end, SEG_WAIT, claimant.level, self.model.block_energy, target=producer.fid, mode=WAIT_BLOCK)
                )
                start = end
        producer.consumed = True
        claimant.expr = plug(site.context, producer.expr)
        end = self.compute_segment(claimant, RULE_CLAIM, start)
        claimant.level, end = self.apply_scale(claimant, ScaleOp.UP_CLAIM, claimant.level, end)
        self.schedule(end, claimant.fid)

    def run(self, expr: Expression, init_level: FrequencyLevel, root_id: FutureId = 0) -> SimulationReport:
        root = _Thread(root_id, expr, init_level)
        self.threads[root_id] = root
        self.schedule(0.0, root_id)
        makespan = None

        while self.heap:
            now, fid = heapq.heappop(self.heap)
            thr = self.threads[fid]
            site = decompose(thr.expr)

            if isinstance(site, NoRedex):
                if not site.is_value:
                    raise EngineError(f"fv{fid} is stuck on a non-value")
                thr.done = True
                thr.t_realize = now
                if fid == root_id:
                    makespan = now
                elif fid in self.parked:
                    claimant_id, t_arrive = self.parked.pop(fid)
                    self.fire_claim(self.threads[claimant_id], thr, t_arrive)
                continue

            if isinstance(site, ClaimSite):
                producer = self.threads[site.target]
                if producer.done:
                    self.fire_claim(thr, producer, now)
                else:
                    if site.target in self.parked:
                        raise EngineError(f"fv{site.target} claimed twice")
                    self.parked[site.target] = (fid, now)
                continue

            if isinstance(site, CreateRedex):
                child_id = self.next_fresh
                self.next_fresh += 1
                thr.expr = plug(site.context, FutureRef(child_id))
                end = self.compute_segment(thr, RULE_CREATE, now)
                child_level, end = self.apply_scale(thr, ScaleOp.UP_CREATE, thr.level, end)
                thr.level, end = self.apply_scale(thr, ScaleOp.DOWN, thr.level, end)
                child = _Thread(child_id, site.body, child_level)
                self.threads[child_id] = child
                self.schedule(end, child_id)
                self.schedule(end, fid)
                continue

            assert isinstance(site, ArithRedex)
            thr.expr = plug(site.context, IntLit(wrap_int(site.left + site.right)))
            end = self.compute_segment(thr, RULE_ADD, now)
            self.schedule(end, fid)

        if makespan is None:
            raise EngineError("simulation stalled before the root realized a value")
        if self.parked:
            raise EngineError("simulation ended with parked claimants")
        assert isinstance(root.expr, IntLit)

        timelines = {fid: ThreadTimeline(fid, tuple(t.segments)) for fid, t in sorted(self.threads.items())}
        per_thread = {fid: tl.energy() for fid, tl in timelines.items()}
        total = sum(per_thread.values())
        return SimulationReport(
            final_value=root.expr.value,
            makespan=makespan,
            total_energy=total,
            per_thread_energy=per_thread,
            edp=total * makespan,
            ed2p=total * makespan * makespan,
            claim_records=tuple(self.claim_records),
            clamp_count=self.clamp_count,
            transition_count=self.transition_count,
            timelines=timelines,
        )


def simulate(
    expr: Expression,
    ladder: FrequencyLadder,
    init_index: int,
    strategy: ScalingStrategy,
    model: CostModel | None = None,
) -> SimulationReport:
    """Run a program on virtual time, one core per thread, under the cost model."""
    if contains_future_ref(expr):
        raise ValueError("programs must not contain future references")
    if strategy.ladder != ladder:
        raise ValueError("strategy was built over a different ladder")
    sim = _Simulation(ladder, strategy, model or CostModel())
    return sim.run(expr, ladder.level(init_index))
