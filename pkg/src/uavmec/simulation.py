"""Event-driven simulation kernel: one episode of task offloading.

Continuous time, four event kinds, deterministic ordering.  At equal
timestamps completions free servers before service starts, starts precede
fresh arrivals, and the horizon marker runs last; remaining ties break on
task id, then insertion order.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .arrivals import build_task_table
from .config import AppConfig
from .energy import (
    MEC_BATTERY_SENTINEL,
    EnergyLedger,
    remaining_battery,
    remaining_battery_fraction,
)
from .mdp import (
    NetworkSnapshot,
    Transition,
    assemble_reward,
    compute_reward_parts,
    encode_state,
    type_code,
)
from .queues import PlacementRecord, UnitQueue, check_violation, predicted_unit_delay

TASK_COMPLETE = "complete"
TASK_START = "start"
TASK_ARRIVAL = "arrival"
EPISODE_END = "end"

_PRIORITY = {TASK_COMPLETE: 0, TASK_START: 1, TASK_ARRIVAL: 2, EPISODE_END: 3}


class SimulationError(RuntimeError):
    """A policy or kernel invariant was broken during an episode."""


class _Pending:
    """One decision awaiting its reward and/or successor state."""

    __slots__ = ("task_id", "state", "action", "tier", "penalty", "reward", "next_state", "terminal")

    def __init__(self, task_id, state, action, tier, penalty):
        self.task_id = task_id
        self.state = state
        self.action = action
        self.tier = tier
        self.penalty = penalty
        self.reward = None
        self.next_state = None
        self.terminal = False


class _AgentPipeline:
    """Turns one UAV's decision stream into ordered learner transitions.

    A decision's successor state is the state of the same agent's next
    decision; in deferred mode its reward additionally waits for the task to
    resolve.  Transitions are released strictly in decision order.
    """

    def __init__(self, policy, mdp_cfg, terminal_on_end: bool, keep: bool):
        self.policy = policy
        self.cfg = mdp_cfg
        self.terminal_on_end = terminal_on_end
        self.keep = keep
        self.learner = bool(getattr(policy, "wants_transitions", False))
        self.layout = getattr(policy, "state_layout", mdp_cfg.state_layout)
        self.pending: deque = deque()
        self.by_task: dict[int, _Pending] = {}
        self.cumulative_reward = 0.0
        self.kept: list[Transition] = []

    def on_decision(self, snap: NetworkSnapshot, action: int, task_id: int) -> None:
        tier, v_hat, penalty = compute_reward_parts(action, snap, self.cfg)
        state = encode_state(snap, self.layout) if self.learner else None
        entry = _Pending(task_id, state, action, tier, penalty)
        if self.learner and self.pending:
            tail = self.pending[-1]
            if tail.next_state is None:
                tail.next_state = state
        if self.cfg.deferred_reward:
            self.by_task[task_id] = entry
        else:
            entry.reward = assemble_reward(tier, v_hat, penalty)
            self.cumulative_reward += entry.reward
        self.pending.append(entry)
        self._flush()

    def on_task_resolved(self, task_id: int, violated: bool) -> None:
        entry = self.by_task.pop(task_id, None)
        if entry is None:
            return
        entry.reward = assemble_reward(entry.tier, violated, entry.penalty)
        self.cumulative_reward += entry.reward
        self._flush()

    def finish(self) -> None:
        if self.by_task:
            raise SimulationError("unresolved deferred rewards at episode end")
        if self.pending and self.learner:
            tail = self.pending[-1]
            if tail.next_state is None:
                if self.terminal_on_end:
                    tail.next_state = tail.state
                    tail.terminal = True
                else:
                    # No successor to bootstrap from; the reward already
                    # counted, the experience is dropped.
                    self.pending.pop()
        self._flush()
        self.pending.clear()

    def _flush(self) -> None:
        while self.pending:
            head = self.pending[0]
            if head.reward is None:
                break
            if self.learner and head.next_state is None:
                break
            self.pending.popleft()
            if self.learner:
                t = Transition(head.state, head.action, head.reward, head.next_state, head.terminal)
                self.policy.ingest(t)
                if self.keep:
                    self.kept.append(t)


@dataclass
class EpisodeResult:
    """End-of-episode accounting.

    ``tasks_in_queue`` includes tasks still propagating to their chosen unit
    at the horizon (committed but not yet enqueued), so generated ==
    completed + in_queue + in_service always holds.
    """

    duration: float
    tasks_generated: int
    tasks_completed: int
    tasks_in_queue: int
    tasks_in_service: int
    battery_wh: list
    battery_fraction: list
    violations_by_unit: list
    violations_total: int
    cumulative_reward: list
    placements: list
    events: list | None = None
    transitions: list | None = None


def run_episode(
    cfg: AppConfig,
    policies: list,
    arrival_seed: int,
    episode_index: int = 0,
    collect_events: bool = True,
    keep_transitions: bool = False,
) -> EpisodeResult:
    """Simulate one episode and return its accounting.

    ``policies`` holds one decision object per UAV (``select(snapshot)`` plus
    optional learner hooks).  Arrival streams depend only on
    (arrival_seed, episode_index), so different policies can be compared on
    identical workloads.
    """
    sim, energy_params = cfg.sim, cfg.energy
    num_uavs, num_units = sim.num_uavs, sim.num_units
    if len(policies) != num_uavs:
        raise SimulationError(f"need one policy per UAV ({num_uavs}), got {len(policies)}")

    tasks = build_task_table(sim, cfg.tasks, arrival_seed, episode_index)
    queues = [UnitQueue(u, sim.unit_is_mec(u)) for u in range(num_units)]
    ledgers = [EnergyLedger(energy_params) for _ in range(num_uavs)]
    pipelines = [
        _AgentPipeline(p, cfg.mdp, cfg.rl.terminal_on_episode_end, keep_transitions)
        for p in policies
    ]
    records: dict[int, PlacementRecord] = {}
    events: list | None = [] if collect_events else None
    num_types = len(cfg.tasks)

    heap: list = []
    seq = 0

    def push(time, kind, task, unit):
        nonlocal seq
        tid = task.task_id if task is not None else -1
        heapq.heappush(heap, (time, _PRIORITY[kind], tid, seq, kind, task, unit))
        seq += 1

    def log(time, kind, task, unit):
        if events is not None:
            events.append((time, kind, task.task_id if task is not None else -1, unit))

    def kick(unit, now):
        q = queues[unit]
        if q.in_service is None and q.pending and not q.start_scheduled:
            q.start_scheduled = True
            push(now, TASK_START, q.pending[0][0], unit)

    def enqueue(task, unit, now):
        rec = records[task.task_id]
        rec.enqueue_time = now
        svc = cfg.tasks[task.type_id].proc_time(sim.unit_is_mec(unit))
        queues[unit].enqueue(task, now, svc)
        kick(unit, now)

    def decide(task, now):
        uav = task.origin_uav
        spec = cfg.tasks[task.type_id]
        for ledger in ledgers:
            ledger.advance(now)
        proc_times = tuple(spec.proc_time(sim.unit_is_mec(u)) for u in range(num_units))
        delays = tuple(
            predicted_unit_delay(queues[u], proc_times[u], now) for u in range(num_units)
        )
        batteries = tuple(
            remaining_battery_fraction(ledgers[u]) if u < num_uavs else MEC_BATTERY_SENTINEL
            for u in range(num_units)
        )
        transfers = tuple(sim.transfer_delay(uav, u) for u in range(num_units))
        snap = NetworkSnapshot(
            deciding_uav=uav,
            task_type=task.type_id,
            type_code=type_code(task.type_id, num_types),
            unit_delays=delays,
            unit_batteries=batteries,
            transfer_delays=transfers,
            proc_times=proc_times,
            iot_delay=sim.iot_to_uav_delay,
            deadline=spec.deadline,
            busy_frac_per_sec=energy_params.busy_frac_per_sec,
            num_uavs=num_uavs,
        )
        action = policies[uav].select(snap)
        if not isinstance(action, (int, np.integer)) or not 0 <= action < num_units:
            raise SimulationError(f"policy for uav{uav} chose nonexistent unit {action!r}")
        action = int(action)
        records[task.task_id] = PlacementRecord(
            task_id=task.task_id,
            type_id=task.type_id,
            origin_uav=uav,
            chosen_unit=action,
            emission_time=task.emission_time,
            arrival_time=task.arrival_time,
            deadline_abs=task.deadline_abs,
            iot_delay=sim.iot_to_uav_delay,
            transfer_delay=transfers[action],
            predicted_delay=delays[action],
            enqueue_time=None,
        )
        pipelines[uav].on_decision(snap, action, task.task_id)
        if action == uav:
            enqueue(task, uav, now)
        else:
            push(now + transfers[action], TASK_ARRIVAL, task, action)

    for task in tasks:
        push(task.arrival_time, TASK_ARRIVAL, task, task.origin_uav)
    push(sim.episode_duration, EPISODE_END, None, -1)

    while heap:
        now, _, _, _, kind, task, unit = heapq.heappop(heap)
        if kind == EPISODE_END:
            log(now, kind, None, -1)
            break
        if kind == TASK_ARRIVAL:
            log(now, kind, task, unit)
            if task.task_id not in records:
                decide(task, now)
            else:
                enqueue(task, unit, now)
        elif kind == TASK_START:
            q = queues[unit]
            q.start_scheduled = False
            if q.in_service is not None or not q.pending:
                continue
            tsk, enq_t, svc = q.pending.popleft()
            q.in_service = (tsk, now, now + svc)
            rec = records[tsk.task_id]
            rec.start_time = now
            rec.queue_wait = now - enq_t
            rec.service_time = svc
            if not q.is_mec:
                ledgers[unit].advance(now)
                ledgers[unit].open_busy(now)
            log(now, kind, tsk, unit)
            push(now + svc, TASK_COMPLETE, tsk, unit)
        elif kind == TASK_COMPLETE:
            q = queues[unit]
            if q.in_service is None or q.in_service[0].task_id != task.task_id:
                raise SimulationError(f"completion for task {task.task_id} without matching service")
            q.in_service = None
            if not q.is_mec:
                ledgers[unit].advance(now)
                ledgers[unit].close_busy(now)
            rec = records[task.task_id]
            rec.finish_time = now
            rec.completed = True
            rec.violated = check_violation(rec, cfg.tasks[task.type_id].deadline)
            log(now, kind, task, unit)
            if cfg.mdp.deferred_reward:
                pipelines[rec.origin_uav].on_task_resolved(task.task_id, rec.violated)
            kick(unit, now)

    end_time = sim.episode_duration
    for ledger in ledgers:
        ledger.advance(end_time)

    in_service = 0
    in_queue = 0
    for tid in sorted(records):
        rec = records[tid]
        if rec.completed:
            continue
        if rec.start_time is not None:
            in_service += 1
            # Finish is already committed; compare it against the deadline.
            rec.violated = rec.start_time + rec.service_time > rec.deadline_abs
        else:
            in_queue += 1
            # Still queued or in transit: violated iff the deadline has passed.
            rec.violated = rec.deadline_abs <= end_time
        if cfg.mdp.deferred_reward:
            pipelines[rec.origin_uav].on_task_resolved(tid, rec.violated)
    for pipe in pipelines:
        pipe.finish()

    placements = [records[tid] for tid in sorted(records)]
    violations_by_unit = [0] * num_units
    for rec in placements:
        if rec.violated:
            violations_by_unit[rec.chosen_unit] += 1

    return EpisodeResult(
        duration=end_time,
        tasks_generated=len(tasks),
        tasks_completed=sum(1 for r in placements if r.completed),
        tasks_in_queue=in_queue,
        tasks_in_service=in_service,
        battery_wh=[remaining_battery(ledger) for ledger in ledgers],
        battery_fraction=[remaining_battery_fraction(ledger) for ledger in ledgers],
        violations_by_unit=violations_by_unit,
        violations_total=sum(violations_by_unit),
        cumulative_reward=[pipe.cumulative_reward for pipe in pipelines],
        placements=placements,
        events=events,
        transitions=[pipe.kept for pipe in pipelines] if keep_transitions else None,
    )
