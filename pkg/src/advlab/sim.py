"""Deterministic atomic-snapshot run simulator.

A run is a sequence of process ids; a process's k-th executed operation is
an update when k is odd and a snapshot when k is even, which the executor
enforces against the protocol's requests.  Faulty processes are modeled as
halting after a chosen step index; "takes infinitely many steps" has no
other finite encoding.  Schedules come from a seeded generator constrained
by an adversary, from a direct admissibility-driven generator, or from
exhaustive enumeration at small sizes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, TYPE_CHECKING

from . import alpha as alpha_mod
from .processes import ProcessSet

if TYPE_CHECKING:  # pragma: no cover
    from .protocols import Protocol


class ProtocolFault(Exception):
    """A protocol broke the run model (wrong operation parity, bad request)."""


@dataclass(frozen=True)
class Update:
    """Request to overwrite the calling process's own memory cell."""

    value: object


# Request sentinel for an atomic read of all cells.
SNAPSHOT = object()


class SnapshotMemory:
    """Vector of n cells; update writes one process's cell, snapshot copies all.

    Cells hold opaque values that must be treated as immutable once written.
    """

    def __init__(self, n: int):
        self.n = n
        self.cells: list[object] = [None] * n

    def update(self, pid: int, value: object) -> None:
        self.cells[pid - 1] = value

    def snapshot(self) -> tuple:
        return tuple(self.cells)


@dataclass
class Schedule:
    """A finite activation order plus the halt/correctness bookkeeping.

    halted_at maps a faulty process to the global step index of its last
    activation (-1 when it never steps); processes in correct set are never
    halted.  The schedule is only an activation order: what each activation
    does is decided by the protocol under the parity rule.
    """

    n: int
    steps: tuple[int, ...]
    halted_at: dict[int, int] = field(default_factory=dict)
    correct: ProcessSet = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.correct is None:
            faulty = set(self.halted_at)
            self.correct = ProcessSet.of(self.n, [p for p in range(1, self.n + 1) if p not in faulty])
        self.steps = tuple(self.steps)

    def validate(self) -> None:
        last: dict[int, int] = {}
        for idx, pid in enumerate(self.steps):
            if not 1 <= pid <= self.n:
                raise ValueError(f"step {idx} names process {pid} outside 1..{self.n}")
            last[pid] = idx
        for pid, at in self.halted_at.items():
            if pid in self.correct:
                raise ValueError(f"process {pid} is both correct and halted")
            if at == -1:
                if pid in last:
                    raise ValueError(f"process {pid} halts before stepping but appears in the schedule")
            elif last.get(pid, -1) > at:
                raise ValueError(f"process {pid} appears after its halt index {at}")
        if self.correct.n != self.n:
            raise ValueError("correct-set universe does not match the schedule")

    def participants(self) -> ProcessSet:
        return ProcessSet.of(self.n, set(self.steps))


class Event(NamedTuple):
    step: int
    pid: int
    kind: str  # "update" | "snapshot"
    payload: object  # value written, or the view read


class Decision(NamedTuple):
    step: int
    pid: int
    value: object


@dataclass
class RunTrace:
    """Everything one simulated execution produced, in schedule order."""

    schedule: Schedule
    inputs: dict[int, object]
    events: list[Event]
    decisions: list[Decision]
    participating: ProcessSet
    statuses: dict[int, str]  # participant -> "decided" | "blocked" | "running"

    @property
    def n(self) -> int:
        return self.schedule.n

    def decided_value(self, pid: int):
        for d in self.decisions:
            if d.pid == pid:
                return d.value
        return None

    def has_decided(self, pid: int) -> bool:
        return any(d.pid == pid for d in self.decisions)

    def is_halted(self, pid: int) -> bool:
        return pid in self.schedule.halted_at

    def halted_undecided(self) -> list[int]:
        return [p for p in self.participating if self.is_halted(p) and not self.has_decided(p)]

    def first_steps(self) -> dict[int, int]:
        seen: dict[int, int] = {}
        for ev in self.events:
            seen.setdefault(ev.pid, ev.step)
        return seen


class _Executor:
    """Drives protocol generators one operation per activation.

    The operation result is fed back immediately, so a decision lands on the
    same step as the process's final operation.  Activations after a
    decision are no-ops and record nothing.
    """

    def __init__(self, protocol: "Protocol", n: int):
        self.protocol = protocol
        self.memory = SnapshotMemory(n)
        self.gens: dict[int, object] = {}
        self.pending: dict[int, object] = {}
        self.opcount: dict[int, int] = {}
        self.decided: dict[int, object] = {}
        self.events: list[Event] = []
        self.decisions: list[Decision] = []

    def activate(self, idx: int, pid: int) -> None:
        if pid in self.decided:
            return
        gen = self.gens.get(pid)
        if gen is None:
            gen = self.protocol.program(pid)
            self.gens[pid] = gen
            try:
                self.pending[pid] = next(gen)
            except StopIteration:
                raise ProtocolFault(f"process {pid} decided without taking a step")
        request = self.pending[pid]
        count = self.opcount.get(pid, 0)
        if count % 2 == 0:
            if not isinstance(request, Update):
                raise ProtocolFault(f"process {pid} must update on odd appearances, requested snapshot")
            self.memory.update(pid, request.value)
            self.events.append(Event(idx, pid, "update", request.value))
            result = None
        else:
            if request is not SNAPSHOT:
                raise ProtocolFault(f"process {pid} must snapshot on even appearances, requested update")
            view = self.memory.snapshot()
            self.events.append(Event(idx, pid, "snapshot", view))
            result = view
        self.opcount[pid] = count + 1
        try:
            self.pending[pid] = gen.send(result)
        except StopIteration as stop:
            self.decided[pid] = stop.value
            self.decisions.append(Decision(idx, pid, stop.value))

    def trace(self, schedule: Schedule) -> RunTrace:
        participating = ProcessSet.of(schedule.n, self.opcount)
        statuses: dict[int, str] = {}
        for pid in participating:
            if pid in self.decided:
                statuses[pid] = "decided"
            else:
                statuses[pid] = self.protocol.statuses.get(pid, "running")
        return RunTrace(
            schedule=schedule,
            inputs=dict(self.protocol.inputs),
            events=self.events,
            decisions=self.decisions,
            participating=participating,
            statuses=statuses,
        )


def execute(protocol: "Protocol", schedule: Schedule) -> RunTrace:
    """Run the protocol under exactly the given schedule; pure in its inputs."""
    if protocol.n != schedule.n:
        raise ValueError(f"protocol arity {protocol.n} does not match schedule n {schedule.n}")
    schedule.validate()
    ex = _Executor(protocol, schedule.n)
    for idx, pid in enumerate(schedule.steps):
        ex.activate(idx, pid)
    return ex.trace(schedule)


def run_to_quiescence(
    protocol: "Protocol",
    schedule: Schedule,
    max_tail: int = 512,
    required: Optional[set[int]] = None,
) -> RunTrace:
    """Execute the schedule, then keep cycling correct processes fairly.

    The tail is the finite stand-in for correct processes taking infinitely
    many steps; it stops once every required process decided (default: every
    correct process) or after max_tail extra activations.  The trace's
    schedule reflects the steps actually taken.
    """
    if protocol.n != schedule.n:
        raise ValueError(f"protocol arity {protocol.n} does not match schedule n {schedule.n}")
    schedule.validate()
    ex = _Executor(protocol, schedule.n)
    for idx, pid in enumerate(schedule.steps):
        ex.activate(idx, pid)
    tail_order = sorted(schedule.correct.members())
    need = set(required) if required is not None else set(tail_order)
    steps = list(schedule.steps)
    idx = len(steps)
    taken = 0
    while tail_order and taken < max_tail and not need <= set(ex.decided):
        pid = tail_order[taken % len(tail_order)]
        ex.activate(idx, pid)
        steps.append(pid)
        idx += 1
        taken += 1
    extended = Schedule(schedule.n, tuple(steps), dict(schedule.halted_at), schedule.correct)
    return ex.trace(extended)


def generate_schedule(adversary, seed: int, budget: int) -> Schedule:
    """Seeded adversary-compliant schedule: the correct set is a live set.

    Participation is the chosen live set plus a random batch of extra,
    faulty processes; every correct process gets at least
    budget // (2 * |live set|) activations, faulty ones a short random
    prefix, and the whole multiset is shuffled uniformly.
    """
    if not adversary.live_sets:
        raise ValueError("cannot schedule against the empty adversary")
    if budget < 2 * adversary.n:
        raise ValueError(f"budget must be at least 2n = {2 * adversary.n}")
    rng = random.Random(seed)
    live = rng.choice(adversary.live_sets)
    extras = [p for p in range(1, adversary.n + 1) if p not in live and rng.random() < 0.5]
    quota = budget // (2 * len(live))
    slots: list[int] = []
    for p in live:
        slots.extend([p] * quota)
    for p in extras:
        slots.extend([p] * rng.randint(1, max(1, budget // (4 * adversary.n))))
    correct_ids = list(live.members())
    while len(slots) < budget:
        slots.append(rng.choice(correct_ids))
    rng.shuffle(slots)
    halted_at = {p: _last_index(slots, p) for p in extras}
    return Schedule(adversary.n, tuple(slots), halted_at, live)


def generate_admissible_schedule(alpha: alpha_mod.AgreementFunction, seed: int, budget: int) -> Schedule:
    """Seeded schedule admitted by the agreement function.

    Picks a participating set P with alpha(P) >= 1, at most alpha(P) - 1
    faulty participants, and fair quotas for the correct ones.  Processes
    outside P never step and are not marked correct, so completion tails
    keep the participation at P.
    """
    if budget < 2 * alpha.n:
        raise ValueError(f"budget must be at least 2n = {2 * alpha.n}")
    candidates = [bits for bits in range(1, 1 << alpha.n) if alpha.of_bits(bits) >= 1]
    if not candidates:
        raise ValueError("the agreement function admits no runs at all")
    rng = random.Random(seed)
    part = ProcessSet(alpha.n, rng.choice(candidates))
    level = alpha.value_of(part)
    faulty_count = rng.randint(0, min(level - 1, len(part) - 1))
    ids = list(part.members())
    faulty = rng.sample(ids, faulty_count)
    correct_ids = [p for p in ids if p not in faulty]
    quota = budget // (2 * len(correct_ids))
    slots: list[int] = []
    for p in correct_ids:
        slots.extend([p] * quota)
    for p in faulty:
        slots.extend([p] * rng.randint(1, max(1, budget // (4 * alpha.n))))
    while len(slots) < budget:
        slots.append(rng.choice(correct_ids))
    rng.shuffle(slots)
    halted_at = {p: _last_index(slots, p) for p in faulty}
    correct = ProcessSet.of(alpha.n, correct_ids)
    return Schedule(alpha.n, tuple(slots), halted_at, correct)


def _last_index(slots: list[int], pid: int) -> int:
    for i in range(len(slots) - 1, -1, -1):
        if slots[i] == pid:
            return i
    return -1


MAX_ENUMERATION_STEPS = 14


def enumerate_schedules(n: int, steps_per_process: int, halts_allowed: int) -> Iterator[Schedule]:
    """Every interleaving of the given per-process step counts and halt choices.

    Non-halted processes take exactly steps_per_process steps; each halted
    process takes some 0 <= k < steps_per_process steps anywhere in the
    order.  Bounded to 14 total steps; the stream is duplicate-free and
    deterministic.
    """
    if n * steps_per_process > MAX_ENUMERATION_STEPS:
        raise ValueError(f"total step count {n * steps_per_process} exceeds the bound {MAX_ENUMERATION_STEPS}")
    if steps_per_process < 1:
        raise ValueError("steps_per_process must be at least 1")
    if halts_allowed < 0:
        raise ValueError("halts_allowed must be non-negative")
    import itertools as it

    pids = list(range(1, n + 1))
    for fsize in range(min(halts_allowed, n) + 1):
        for faulty in it.combinations(pids, fsize):
            for cuts in it.product(range(steps_per_process), repeat=fsize):
                counts = {p: steps_per_process for p in pids if p not in faulty}
                counts.update(dict(zip(faulty, cuts)))
                correct = ProcessSet.of(n, [p for p in pids if p not in faulty])
                for steps in _interleavings(counts):
                    halted_at = {p: _last_index(steps, p) for p in faulty}
                    yield Schedule(n, tuple(steps), halted_at, correct)


def _interleavings(counts: dict[int, int]) -> Iterator[list[int]]:
    """All orderings of a step-count multiset, lexicographically by process id."""
    remaining = {p: c for p, c in counts.items() if c > 0}
    order: list[int] = []

    def rec() -> Iterator[list[int]]:
        if not remaining:
            yield list(order)
            return
        for p in sorted(remaining):
            remaining[p] -= 1
            if remaining[p] == 0:
                del remaining[p]
                restore = True
            else:
                restore = False
            order.append(p)
            yield from rec()
            order.pop()
            if restore:
                remaining[p] = 1
            else:
                remaining[p] += 1

    yield from rec()


def check_alpha_compliance(trace: RunTrace, alpha: alpha_mod.AgreementFunction) -> bool:
    """Filter hook for simulation pipelines; same contract as admits_trace."""
    return alpha_mod.admits_trace(alpha, trace)


def truncate_trace(trace: RunTrace, step: int) -> RunTrace:
    """The prefix of a trace up to and including the given step index."""
    events = [e for e in trace.events if e.step <= step]
    decisions = [d for d in trace.decisions if d.step <= step]
    participating = ProcessSet.of(trace.n, {e.pid for e in events})
    statuses = {
        pid: "decided" if any(d.pid == pid for d in decisions) else "running" for pid in participating
    }
    prefix = Schedule(
        trace.n,
        trace.schedule.steps[: step + 1],
        {p: at for p, at in trace.schedule.halted_at.items() if at <= step},
        trace.schedule.correct,
    )
    return RunTrace(prefix, dict(trace.inputs), events, decisions, participating, statuses)


def canonical_json(obj: object) -> str:
    """Stable text form used for golden traces and reports."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _jsonify(value: object) -> object:
    if isinstance(value, tuple):
        return [_jsonify(v) for v in value]
    if isinstance(value, list):
        return [_jsonify(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonify(v) for k, v in value.items()}
    return value


def trace_to_json_obj(trace: RunTrace) -> dict:
    return {
        "n": trace.n,
        "schedule": {
            "steps": list(trace.schedule.steps),
            "halted_at": {str(p): at for p, at in sorted(trace.schedule.halted_at.items())},
            "correct_set": list(trace.schedule.correct.members()),
        },
        "inputs": {str(p): _jsonify(v) for p, v in sorted(trace.inputs.items())},
        "events": [
            {"step": e.step, "process": e.pid, "kind": e.kind, "payload": _jsonify(e.payload)}
            for e in trace.events
        ],
        "decisions": [{"step": d.step, "process": d.pid, "value": _jsonify(d.value)} for d in trace.decisions],
        "statuses": {str(p): s for p, s in sorted(trace.statuses.items())},
    }


def trace_from_json_obj(obj: dict) -> RunTrace:
    n = obj["n"]
    sched = obj["schedule"]
    schedule = Schedule(
        n,
        tuple(sched["steps"]),
        {int(p): at for p, at in sched["halted_at"].items()},
        ProcessSet.of(n, sched["correct_set"]),
    )
    events = [Event(e["step"], e["process"], e["kind"], e["payload"]) for e in obj["events"]]
    decisions = [Decision(d["step"], d["process"], d["value"]) for d in obj["decisions"]]
    participating = ProcessSet.of(n, {e.pid for e in events})
    return RunTrace(
        schedule,
        {int(p): v for p, v in obj["inputs"].items()},
        events,
        decisions,
        participating,
        {int(p): s for p, s in obj["statuses"].items()},
    )
