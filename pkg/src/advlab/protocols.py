"""Executable protocol state machines for the snapshot-memory simulator.

Each process runs a generator that yields one memory operation per
activation (an Update carrying the process's whole cell record, then a
SNAPSHOT, strictly alternating) and finishes by returning its decision.
All protocols here follow the full-information discipline: the first write
carries the process's input, every later write carries the process's whole
current record, and a decided process takes no further actions.

Safe agreement uses the three-level register scheme: a process enters an
instance at level 1, then commits to level 2 unless it saw an earlier
commit (level 0), and decides once no entered process is still at level 1.
A participant that stops between entering and resolving its level blocks
the instance; blocked processes report a "blocked" status while they keep
re-checking.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Callable, Iterable, Optional

from .alpha import AgreementFunction
from .processes import MAX_UNIVERSE, ProcessSet
from .sim import RunTrace, Schedule, SNAPSHOT, Update


class Protocol:
    """A protocol instance: arity, per-process inputs, and per-process programs."""

    name = "protocol"

    def __init__(self, n: int, inputs: dict[int, object]):
        if not 1 <= n <= MAX_UNIVERSE:
            raise ValueError(f"arity must be in 1..{MAX_UNIVERSE}, got {n}")
        for pid in inputs:
            if not 1 <= pid <= n:
                raise ValueError(f"input names process {pid} outside 1..{n}")
        self.n = n
        self.inputs = dict(inputs)
        self.statuses: dict[int, str] = {}

    def _input(self, pid: int):
        if pid not in self.inputs:
            raise ValueError(f"process {pid} has no input")
        return self.inputs[pid]

    def program(self, pid: int):
        raise NotImplementedError


class EchoProtocol(Protocol):
    """Write the input, look once, decide the own input.  Baseline and test stub."""

    name = "echo"

    def program(self, pid: int):
        v = self._input(pid)
        yield Update({"val": v})
        yield SNAPSHOT
        return v


class SafeAgreement(Protocol):
    """Single consensus-safe instance over the whole universe.

    Validity and agreement hold in every run.  Termination holds for each
    correct participant provided no participant halts inside its unsafe
    window (between its level-1 write and its level write).
    """

    name = "safe-agreement"

    def program(self, pid: int):
        v = self._input(pid)
        yield Update({"val": v, "lvl": 1})
        view = yield SNAPSHOT
        lvl = 0 if any(c is not None and c["lvl"] == 2 for c in view) else 2
        yield Update({"val": v, "lvl": lvl})
        while True:
            view = yield SNAPSHOT
            cells = [c for c in view if c is not None]
            if not any(c["lvl"] == 1 for c in cells):
                self.statuses[pid] = "running"
                committed = [c for c in cells if c["lvl"] == 2]
                return committed[0]["val"]  # cells come in id order: smallest committed id wins
            self.statuses[pid] = "blocked"
            yield Update({"val": v, "lvl": lvl})


def safe_agreement_unsafe_halt(schedule: Schedule) -> bool:
    """True iff some halted process stops inside its unsafe window.

    Under the alternate-op discipline a participant's window spans its first
    and second executed operations; it closes with the third (the level
    write), so halting after one or two own steps is unsafe.
    """
    for pid in schedule.halted_at:
        own = sum(1 for p in schedule.steps if p == pid)
        if 1 <= own <= 2:
            return True
    return False


def _participants(view: tuple, n: int) -> ProcessSet:
    return ProcessSet.of(n, [q for q in range(1, n + 1) if view[q - 1] is not None])


def _round_robin_agreement(
    proto: Protocol,
    pid: int,
    instances: int,
    proposal,
    get: Callable[[tuple, int, int], Optional[list]],
    put: Callable[[int, object, int], None],
    payload: Callable[[], object],
    escape: Optional[Callable[[tuple], bool]] = None,
):
    """Cycle safe-agreement instances 1..instances until one resolves.

    The caller proposes the same value to every instance it enters; an
    instance whose gate still shows an entered-but-unresolved process is
    skipped until the next pass.  Decides the first resolved instance's
    committed value (smallest committed id).  With an escape predicate, a
    true observation ends the cycle and hands the proposal back unchanged.
    """
    stage: dict[int, int] = {}
    j = 1
    closed_gates = 0
    while True:
        if stage.get(j, 0) == 0:
            put(j, proposal, 1)
            yield Update(payload())
            view = yield SNAPSHOT
            committed_seen = any(
                (e := get(view, q, j)) is not None and e[1] == 2 for q in range(1, proto.n + 1)
            )
            put(j, proposal, 0 if committed_seen else 2)
            stage[j] = 1
            closed_gates = 0
            proto.statuses[pid] = "running"
            yield Update(payload())
            view = yield SNAPSHOT
        else:
            yield Update(payload())
            view = yield SNAPSHOT
        entries = [e for q in range(1, proto.n + 1) if (e := get(view, q, j)) is not None]
        if not any(e[1] == 1 for e in entries):
            proto.statuses[pid] = "running"
            committed = [e for e in entries if e[1] == 2]
            return committed[0][0]
        if escape is not None and escape(view):
            proto.statuses[pid] = "running"
            return proposal
        closed_gates += 1
        if closed_gates >= instances:
            proto.statuses[pid] = "blocked"
        j = j % instances + 1


class RoundRobinSetConsensus(Protocol):
    """Set consensus from safe agreement: as many instances as the agreement

    level of the designated participant set (the input holders).  Every
    process cycles the instances with its own input and decides the first
    instance that resolves, so at most that many distinct values come out,
    and every correct participant decides whenever at most level-1
    participants halt.
    """

    name = "alpha-setcons"

    def __init__(self, n: int, inputs: dict[int, object], fn: AgreementFunction):
        super().__init__(n, inputs)
        if fn.n != n:
            raise ValueError(f"agreement function universe {fn.n} does not match arity {n}")
        designated = ProcessSet.of(n, inputs)
        self.instances = fn.value_of(designated)
        if self.instances < 1:
            raise ValueError("the designated participant set admits no runs (level 0)")

    def program(self, pid: int):
        v = self._input(pid)
        slots: dict[str, list] = {}

        def get(view, q, j):
            cell = view[q - 1]
            return None if cell is None else cell["sa"].get(str(j))

        def put(j, val, lvl):
            slots[str(j)] = [val, lvl]

        decision = yield from _round_robin_agreement(
            self, pid, self.instances, v, get, put, lambda: {"sa": dict(slots)}
        )
        return decision


def _wait_for_growth(proto: Protocol, pid: int, parts: ProcessSet, proposal, payload):
    """Hold position at a level-0 participation estimate.

    A level-0 estimate admits no run in which it persists, so the process
    keeps observing; once participation visibly outgrows the estimate the
    proposal is handed back for the next, larger round.
    """
    while True:
        proto.statuses[pid] = "blocked"
        yield Update(payload())
        view = yield SNAPSHOT
        if _participants(view, proto.n) != parts:
            proto.statuses[pid] = "running"
            return proposal


class EmbeddedAgreement:
    """Adaptive-agreement subroutine backed by in-memory safe agreement.

    One instance space per distinct participation estimate, living in the
    same cells as the calling protocol; the instance count is the agreement
    level of the estimate.  Do not share one subroutine across executions.
    """

    def __init__(self, fn: AgreementFunction):
        self.fn = fn

    def run(self, proto: Protocol, pid: int, parts: ProcessSet, proposal, rec: dict, payload):
        level = self.fn.value_of(parts)
        if level < 1:
            value = yield from _wait_for_growth(proto, pid, parts, proposal, payload)
            return value
        key = str(parts.bits)
        space = rec["agr"].setdefault(key, {})

        def get(view, q, j):
            cell = view[q - 1]
            if cell is None:
                return None
            return cell["agr"].get(key, {}).get(str(j))

        def put(j, val, lvl):
            space[str(j)] = [val, lvl]

        value = yield from _round_robin_agreement(
            proto,
            pid,
            level,
            proposal,
            get,
            put,
            payload,
            escape=lambda view: _participants(view, proto.n) != parts,
        )
        return value


class IdealSetConsensus:
    """Simulation-level set-consensus object: at most `limit` distinct outputs.

    The first `limit` proposers keep their own values, later proposers adopt
    the first pooled one.  This is the adversarial extreme allowed by the
    contract, which is what the calling protocol's bounds must absorb.
    """

    def __init__(self, limit: int):
        self.limit = limit
        self.pool: list = []

    def propose(self, value):
        if len(self.pool) < self.limit:
            self.pool.append(value)
            return value
        return self.pool[0]


class OracleAgreement:
    """Adaptive-agreement subroutine backed by ideal objects, for fast tests."""

    def __init__(self, fn: AgreementFunction):
        self.fn = fn
        self._objects: dict[int, IdealSetConsensus] = {}

    def run(self, proto: Protocol, pid: int, parts: ProcessSet, proposal, rec: dict, payload):
        level = self.fn.value_of(parts)
        if level < 1:
            value = yield from _wait_for_growth(proto, pid, parts, proposal, payload)
            return value
        obj = self._objects.setdefault(parts.bits, IdealSetConsensus(level))
        return obj.propose(proposal)


class AdaptiveSetConsensus(Protocol):
    """Set consensus that adapts to the observed participation.

    Each process writes its input at lock level 0, reads the participation,
    and loops: adopt a value holding the greatest visible lock (smallest
    holder id on ties), run it through the subroutine sized for the current
    participation estimate, re-write it locked at the estimate's size, and
    re-read; once the estimate survives a full iteration unchanged, decide.

    The subroutine must be a fresh EmbeddedAgreement or OracleAgreement per
    execution.
    """

    name = "adaptive"

    def __init__(self, n: int, inputs: dict[int, object], subroutine):
        super().__init__(n, inputs)
        self.subroutine = subroutine

    def program(self, pid: int):
        v = self._input(pid)
        rec: dict = {"reg": [v, 0], "agr": {}}

        def payload():
            return {"reg": list(rec["reg"]), "agr": {k: dict(s) for k, s in rec["agr"].items()}}

        yield Update(payload())
        r = yield SNAPSHOT
        part = _participants(r, self.n)
        while True:
            parts = part
            regs = [(q, r[q - 1]["reg"]) for q in range(1, self.n + 1) if r[q - 1] is not None]
            top = max(reg[1] for _, reg in regs)
            v = next(reg[0] for _, reg in regs if reg[1] == top)
            v = yield from self.subroutine.run(self, pid, parts, v, rec, payload)
            rec["reg"] = [v, len(parts)]
            yield Update(payload())
            r = yield SNAPSHOT
            part = _participants(r, self.n)
            if parts == part:
                return v


class Cons23(Protocol):
    """Consensus among processes 2 and 3 over a 3-process universe.

    Both wait for process 2's value and decide it; process 1 runs the plain
    full-information loop and never decides.  Useful against adversaries
    where process 3 can only be correct together with process 2.
    """

    name = "cons23"

    def __init__(self, n: int, inputs: dict[int, object]):
        if n != 3:
            raise ValueError("the pairwise protocol is defined over a 3-process universe")
        if not {2, 3} <= set(inputs):
            raise ValueError("processes 2 and 3 both need inputs")
        super().__init__(n, inputs)

    def program(self, pid: int):
        if pid == 1:
            while True:
                yield Update({"val": None})
                yield SNAPSHOT
        v = self._input(pid)
        yield Update({"val": v})
        while True:
            view = yield SNAPSHOT
            cell = view[1]
            if cell is not None and cell["val"] is not None:
                return cell["val"]
            self.statuses[pid] = "blocked"
            yield Update({"val": v})


def adaptive_lock_analysis(trace: RunTrace) -> tuple[int, set, set]:
    """Pull the lock-level flow out of an adaptive-set-consensus trace.

    Returns (smallest deciding lock level, values ever locked at that level,
    decided values).  Every decided value must appear in the middle set: the
    level at which the first process settles pins what later processes can
    adopt.
    """
    last_lock: dict[int, int] = {}
    locked: dict[int, set] = defaultdict(set)
    for ev in trace.events:
        if ev.kind == "update":
            reg = ev.payload.get("reg") if isinstance(ev.payload, dict) else None
            if reg is not None:
                last_lock[ev.pid] = reg[1]
                locked[reg[1]].add(reg[0])
    if not trace.decisions:
        raise ValueError("trace has no decisions to analyze")
    floor = min(last_lock[d.pid] for d in trace.decisions)
    return floor, locked[floor], {d.value for d in trace.decisions}


def default_inputs(n: int, pids: Optional[Iterable[int]] = None) -> dict[int, int]:
    """Distinct per-process inputs, the worst case for agreement bounds."""
    return {p: 100 + p for p in (pids if pids is not None else range(1, n + 1))}
