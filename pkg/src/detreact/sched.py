"""Tag-ordered multi-worker execution.

The runtime processes events strictly in tag order. For each tag it stages
every triggered reaction into a per-level reaction queue, then drains the
levels in ascending order: all triggered reactions of one level go into the
ready queue at once and may execute on any worker in parallel; no reaction
of level k starts before every triggered reaction below k has completed, and
no reaction of a later tag starts before the whole tag is done.

There is no dedicated scheduler thread. The last worker to finish a level
becomes the coordinator: it publishes the next level, or ends the tag and
advances logical time. That moment is single-threaded by construction
(every other worker is parked), which is what makes the bookkeeping below
safe without locks on the hot path.

In normal mode, a tag with time value t is not processed before the physical
clock passes t (logical time chases physical time); fast mode skips the
waiting and is what benchmarks use.
"""

from __future__ import annotations

import heapq
import itertools
import random
import threading
import time
from typing import NamedTuple

from .core import (STARTUP, Action, Environment, Port, PortChannel, Tag, Timer,
                   checked_time_add)
from .errors import ContractViolationError, ExecutionError, ShutdownError
from .graph import max_level_width
from .trace import TraceRecord, TraceSink, value_digest


class TerminationReport(NamedTuple):
    """Outcome of one run. Counts are exact: ``events`` is the number of
    event-queue entries processed (timers, actions, startup), ``reactions``
    the number of reaction bodies invoked."""

    last_tag: Tag
    events: int
    reactions: int
    duration_ns: int


class ReadyQueue:
    """Fixed-size buffer drained through a decrementing counter.

    ``pop`` consumes one counter value; a negative value means empty,
    otherwise it is the buffer index to read. The counter is an
    ``itertools.count``, whose ``next`` is a single C call and therefore
    atomic under the GIL, so pops are wait-free and each slot is handed out
    exactly once per refill. Refilling is only legal while no worker can pop
    (the coordinator moment between levels).
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._buf: list = []
        self._counter = itertools.count(-1, -1)

    def refill(self, items: list) -> int:
        if len(items) > self.capacity:
            raise ValueError(f"ready queue capacity {self.capacity} exceeded: {len(items)}")
        self._buf = items
        self._counter = itertools.count(len(items) - 1, -1)
        return len(items)

    def pop(self):
        i = next(self._counter)
        if i < 0:
            return None
        return self._buf[i]


class ReactionContext:
    """Per-worker view handed to reaction bodies. Valid only for the
    duration of one invocation."""

    __slots__ = ("_rt", "_worker", "_reaction", "tag", "state", "_fx_log", "_sched_log")

    def __init__(self, rt, worker):
        self._rt = rt
        self._worker = worker
        self._reaction = None
        self.tag = None
        self.state = None
        self._fx_log = None
        self._sched_log = None

    def _begin(self, reaction, tag):
        self._reaction = reaction
        self.tag = tag
        self.state = reaction.owner.state
        if self._rt._sink is not None:
            self._fx_log = []
            self._sched_log = []

    def _resolve(self, target, index):
        if isinstance(target, PortChannel):
            return target.port, target.index
        if isinstance(target, Port):
            if index is None:
                if target.width != 1:
                    raise ContractViolationError(
                        f"{self._reaction.label()}: {target.label()} is a multiport, "
                        "pass an index or a channel")
                return target, 0
            if not 0 <= index < target.width:
                raise ContractViolationError(
                    f"{self._reaction.label()}: index {index} out of range for {target.label()}")
            return target, index
        raise ContractViolationError(f"{self._reaction.label()}: {target!r} is not a port")

    def set(self, target, value, index: int | None = None) -> None:
        """Make a declared output port present with ``value`` for the rest of
        the current tag. Within one body, the last write to a channel wins."""
        port, idx = self._resolve(target, index)
        if port not in self._reaction.effects:
            raise ContractViolationError(
                f"{self._reaction.label()} sets undeclared effect {port.label()}")
        self._rt._set_output_channel(port.base + idx, value)
        if self._fx_log is not None:
            self._fx_log.append((PortChannel(port, idx).label(), value_digest(value)))

    def get(self, target, index: int | None = None):
        """Value of a declared trigger at the current tag, or None if absent."""
        if isinstance(target, Action):
            self._check_trigger(target)
            return self._rt._action_value[target.aid] if self._rt._action_present[target.aid] else None
        if isinstance(target, Timer):
            self._check_trigger(target)
            return None
        port, idx = self._resolve(target, index)
        self._check_trigger(port)
        gid = port.base + idx
        return self._rt._chan_value[gid] if self._rt._chan_present[gid] else None

    def is_present(self, target, index: int | None = None) -> bool:
        if isinstance(target, Action):
            self._check_trigger(target)
            return bool(self._rt._action_present[target.aid])
        if isinstance(target, Timer):
            self._check_trigger(target)
            return bool(self._rt._timer_present[target.tid])
        port, idx = self._resolve(target, index)
        self._check_trigger(port)
        return bool(self._rt._chan_present[port.base + idx])

    def present(self, port: Port):
        """Iterate (index, value) over the channels of a declared multiport
        trigger that are present at this tag, in ascending index order. Cost
        is proportional to the number of present channels, not the width."""
        if not isinstance(port, Port):
            raise ContractViolationError(f"{self._reaction.label()}: {port!r} is not a port")
        self._check_trigger(port)
        rt = self._rt
        base = port.base
        for local in sorted(rt._port_set_channels[port.pid]):
            yield local, rt._chan_value[base + local]

    def _check_trigger(self, t):
        if t not in self._reaction.triggers:
            raise ContractViolationError(
                f"{self._reaction.label()} reads undeclared trigger "
                f"{t.label() if hasattr(t, 'label') else t!r}")

    def schedule(self, action: Action, value=None, delay: int = 0) -> Tag:
        """Enqueue an event on a declared logical action at a strictly later
        tag: (now + delay, 0) for a positive total delay, otherwise the next
        microstep. Returns the assigned tag."""
        if not isinstance(action, Action) or action not in self._reaction.effects:
            label = action.label() if isinstance(action, Action) else repr(action)
            raise ContractViolationError(
                f"{self._reaction.label()} schedules undeclared action {label}")
        if delay < 0:
            raise ContractViolationError(f"{self._reaction.label()}: negative delay")
        total = checked_time_add(delay, action.min_delay)
        cur = self.tag
        if total > 0:
            g = Tag(checked_time_add(cur.time, total), 0)
        else:
            g = Tag(cur.time, cur.microstep + 1)
        self._rt._enqueue_locked(g, action, value)
        if self._sched_log is not None:
            self._sched_log.append((action.label(), (g.time, g.microstep)))
        return g

    def request_stop(self) -> None:
        self._rt.request_stop()

    def elapsed_physical_ns(self) -> int:
        """Physical nanoseconds since this run's logical epoch."""
        return self._rt._now()


class _Runtime:
    def __init__(self, env: Environment):
        topo = env.topology
        self.env = env
        self.topo = topo
        self.fast = env.fast
        self.workers_n = env.workers

        self._chan_value: list = [None] * topo.channel_count
        self._chan_present = bytearray(topo.channel_count)
        self._port_set_channels: list[list[int]] = [[] for _ in topo.ports]
        self._port_touched = bytearray(len(topo.ports))
        self._touched_ports: list[int] = []
        self._action_value: list = [None] * len(topo.actions)
        self._action_present = bytearray(len(topo.actions))
        self._timer_present = bytearray(len(topo.timers))
        self._active_triggers: list = []

        self._evlock = threading.Lock()
        self._evcv = threading.Condition(self._evlock)
        self._event_heap: list[Tag] = []
        self._event_map: dict[Tag, dict] = {}

        self._stage_lock = threading.Lock()
        self._staged = bytearray(len(topo.reactions))
        self._staged_list: list[int] = []
        self._buckets: dict[int, list[int]] = {}
        self._level_heap: list[int] = []
        self._level_of = env.apg.level
        self._current_level = -1

        self._ready = ReadyQueue(max_level_width(env.apg))
        self._pending = itertools.count(-1, -1)
        self._sem = threading.Semaphore(0)
        self._poison = False

        self._current_tag: Tag | None = None
        self._last_time = -1
        self._stop_requested = env._stop_before_run
        self._stop_tag: Tag | None = (
            Tag(env.stop_time, 0) if env.stop_time is not None else None)
        self._shutdown_fired = False
        self._terminated = False
        self._failure: tuple | None = None

        self._events_processed = 0
        self._reactions_run = [0] * env.workers
        self._epoch = 0

        self._sink = TraceSink(env.workers) if env.trace_enabled else None
        self.trace_result = None
        self._ctx = [ReactionContext(self, w) for w in range(env.workers)]
        if env.jitter_ms > 0:
            self._jitter_s = env.jitter_ms / 1000.0
            self._jitter_rand = [random.Random(env.jitter_seed * 1000003 + w)
                                 for w in range(env.workers)]
        else:
            self._jitter_s = 0.0

    def _now(self) -> int:
        return time.monotonic_ns() - self._epoch

    # -- event queue ------------------------------------------------------

    def _enqueue(self, tag: Tag, trigger, value) -> None:
        m = self._event_map.get(tag)
        if m is None:
            self._event_map[tag] = m = {}
            heapq.heappush(self._event_heap, tag)
        m[trigger] = value  # same (trigger, tag): the later call wins

    def _enqueue_locked(self, tag, trigger, value) -> None:
        with self._evlock:
            self._enqueue(tag, trigger, value)

    def schedule_physical(self, action: Action, value) -> Tag:
        with self._evcv:
            if self._terminated:
                raise ShutdownError(f"cannot schedule {action.label()}: environment terminated")
            g = Tag(max(self._now(), self._last_time + 1), 0)
            self._enqueue(g, action, value)
            self._evcv.notify_all()
        return g

    def request_stop(self) -> None:
        with self._evcv:
            if self._terminated or self._stop_requested:
                return
            self._stop_requested = True
            self._evcv.notify_all()

    # -- within-tag state -------------------------------------------------

    def _set_output_channel(self, gid: int, value) -> None:
        self._chan_value[gid] = value
        if not self._chan_present[gid]:
            self._chan_present[gid] = 1
            self._note_set(gid)
        for dst in self.topo.conn_targets[gid]:
            self._chan_value[dst] = value
            if not self._chan_present[dst]:
                self._chan_present[dst] = 1
                self._note_set(dst)
                rids = self.topo.port_reactions[self.topo.chan_owner[dst][0]]
                if rids:
                    with self._stage_lock:
                        for rid in rids:
                            self._stage(rid)

    def _note_set(self, gid: int) -> None:
        pid, local = self.topo.chan_owner[gid]
        self._port_set_channels[pid].append(local)
        if not self._port_touched[pid]:
            self._port_touched[pid] = 1
            self._touched_ports.append(pid)

    def _stage(self, rid: int) -> None:
        # caller holds _stage_lock
        if self._staged[rid]:
            return
        lvl = self._level_of[rid]
        assert lvl > self._current_level, "staged reaction at or below the running level"
        self._staged[rid] = 1
        self._staged_list.append(rid)
        bucket = self._buckets.get(lvl)
        if bucket is None:
            self._buckets[lvl] = bucket = []
            heapq.heappush(self._level_heap, lvl)
        bucket.append(rid)

    # -- tag lifecycle ------------------------------------------------------

    def _next_stop_tag(self) -> Tag:
        ct = self._current_tag
        return Tag(ct.time, ct.microstep + 1) if ct is not None else Tag(0, 0)

    def _advance_and_stage(self) -> bool:
        """Select the next tag (waiting for physical time unless in fast
        mode) and stage its triggered reactions. False when execution is
        over."""
        topo = self.topo
        with self._evcv:
            if self._shutdown_fired or self._failure is not None:
                return False
            while True:
                if self._stop_requested and self._stop_tag is None:
                    self._stop_tag = self._next_stop_tag()
                g = self._event_heap[0] if self._event_heap else None
                if g is not None and self._stop_tag is not None and g > self._stop_tag:
                    g = None  # beyond the stop tag: dropped
                if g is None:
                    if self._stop_tag is None:
                        self._stop_tag = self._next_stop_tag()
                    self._current_tag = self._stop_tag
                    self._last_time = self._stop_tag.time
                    self._shutdown_fired = True
                    trigmap = None
                    break
                if not self.fast:
                    now = self._now()
                    if now <= g.time:
                        self._evcv.wait((g.time - now + 1) / 1e9)
                        continue  # re-check: an earlier event may have arrived
                heapq.heappop(self._event_heap)
                trigmap = self._event_map.pop(g)
                self._current_tag = g
                self._last_time = g.time
                if g == self._stop_tag:
                    self._shutdown_fired = True
                for trigger, _ in trigmap.items():
                    if isinstance(trigger, Timer) and trigger.period is not None:
                        self._enqueue(Tag(checked_time_add(g.time, trigger.period), 0),
                                      trigger, None)
                break
            shutdown_now = self._shutdown_fired

        self._current_level = -1
        if trigmap:
            self._events_processed += len(trigmap)
            with self._stage_lock:
                for trigger, value in trigmap.items():
                    if trigger is STARTUP:
                        rids = topo.startup_rids
                    elif isinstance(trigger, Timer):
                        self._timer_present[trigger.tid] = 1
                        self._active_triggers.append(trigger)
                        rids = topo.timer_reactions[trigger]
                    else:
                        self._action_value[trigger.aid] = value
                        self._action_present[trigger.aid] = 1
                        self._active_triggers.append(trigger)
                        rids = topo.action_reactions[trigger]
                    for rid in rids:
                        self._stage(rid)
        if shutdown_now:
            with self._stage_lock:
                for rid in topo.shutdown_rids:
                    self._stage(rid)
        return True

    def _finish_tag(self) -> None:
        for rid in self._staged_list:
            self._staged[rid] = 0
        self._staged_list.clear()
        ports = self.topo.ports
        for pid in self._touched_ports:
            base = ports[pid].base
            chans = self._port_set_channels[pid]
            for local in chans:
                self._chan_present[base + local] = 0
                self._chan_value[base + local] = None
            chans.clear()
            self._port_touched[pid] = 0
        self._touched_ports.clear()
        for trigger in self._active_triggers:
            if isinstance(trigger, Timer):
                self._timer_present[trigger.tid] = 0
            else:
                self._action_value[trigger.aid] = None
                self._action_present[trigger.aid] = 0
        self._active_triggers.clear()
        if self._sink is not None:
            self._sink.merge_tag()

    # -- worker protocol ----------------------------------------------------

    def _coordinate(self, as_worker: bool) -> bool:
        """Publish the next non-empty level, or close the tag and advance.
        Runs on the last worker to finish a level (or the main thread at
        startup). Returns False once the run has terminated."""
        while True:
            with self._stage_lock:
                if self._level_heap:
                    lvl = heapq.heappop(self._level_heap)
                    bucket = self._buckets.pop(lvl)
                    self._current_level = lvl
                else:
                    bucket = None
            if bucket is not None:
                count = len(bucket)
                self._pending = itertools.count(count - 1, -1)
                self._ready.refill(bucket)
                wake = min(count, self.workers_n) - (1 if as_worker else 0)
                if wake > 0:
                    self._sem.release(wake)
                return True
            self._finish_tag()
            if not self._advance_and_stage():
                self._terminate()
                return False

    def _terminate(self) -> None:
        with self._evcv:
            self._terminated = True
            self._evcv.notify_all()
        self._poison = True
        self._sem.release(self.workers_n)

    def _fail_hard(self, exc: BaseException) -> None:
        # Protocol-level failure: make sure nothing stays parked.
        with self._evcv:
            if self._failure is None:
                self._failure = (None, exc)
            self._terminated = True
            self._evcv.notify_all()
        self._poison = True
        self._sem.release(self.workers_n)

    def _execute(self, rid: int, wid: int) -> None:
        reaction = self.topo.reactions[rid]
        ctx = self._ctx[wid]
        ctx._begin(reaction, self._current_tag)
        if self._jitter_s > 0.0:
            time.sleep(self._jitter_rand[wid].uniform(0.0, self._jitter_s))
        try:
            reaction.body(ctx)
        except BaseException as exc:
            with self._evcv:
                if self._failure is None:
                    self._failure = (reaction, exc)
        else:
            if self._sink is not None:
                tag = self._current_tag
                self._sink.record(wid, TraceRecord(
                    tag=(tag.time, tag.microstep),
                    level=reaction.level,
                    reactor_path=reaction.owner.name,
                    reaction_index=reaction.index,
                    effects=tuple(ctx._fx_log),
                    scheduled=tuple(ctx._sched_log)))
        self._reactions_run[wid] += 1

    def _drain(self, wid: int) -> bool:
        while True:
            rid = self._ready.pop()
            if rid is None:
                return True  # level exhausted from this worker's view: park
            self._execute(rid, wid)
            if next(self._pending) == 0:
                if not self._coordinate(as_worker=True):
                    return False

    def _worker_loop(self, wid: int) -> None:
        try:
            while True:
                self._sem.acquire()
                if self._poison:
                    return
                if not self._drain(wid):
                    return
        except BaseException as exc:  # scheduler invariant broken: do not hang
            self._fail_hard(exc)

    def run(self) -> TerminationReport:
        topo = self.topo
        self._epoch = time.monotonic_ns()
        if topo.startup_rids:
            self._enqueue(Tag(0, 0), STARTUP, None)
        for timer in topo.timers:
            if topo.timer_reactions[timer]:
                self._enqueue(Tag(timer.offset, 0), timer, None)

        threads = [threading.Thread(target=self._worker_loop, args=(w,),
                                    name=f"detreact-worker-{w}", daemon=True)
                   for w in range(self.workers_n)]
        for t in threads:
            t.start()
        self.env.started.set()

        t0 = time.perf_counter_ns()
        try:
            self._coordinate(as_worker=False)
        except BaseException as exc:  # unblock parked workers before raising
            self._fail_hard(exc)
            for t in threads:
                t.join()
            raise
        for t in threads:
            t.join()
        duration = time.perf_counter_ns() - t0

        if self._sink is not None:
            self.env.trace = self._sink.finalize({
                "program": topo.name,
                "workers": self.workers_n,
            })
        if self._failure is not None:
            reaction, exc = self._failure
            where = reaction.label() if reaction is not None else "scheduler"
            raise ExecutionError(f"reaction {where} failed: {exc!r}") from exc
        return TerminationReport(
            last_tag=self._current_tag,
            events=self._events_processed,
            reactions=sum(self._reactions_run),
            duration_ns=duration)


def run(env: Environment) -> TerminationReport:
    """Execute an Environment to completion.

    Processes startup, then all events in tag order until the queue empties
    or a stop is requested, fires shutdown reactions at the stop tag, and
    returns exact execution counts. Reaction failures abort the run and are
    re-raised as ExecutionError naming the offending reaction.
    """
    with env._lock:
        if env._consumed:
            raise RuntimeError("an Environment runs exactly once; build a fresh one")
        env._consumed = True
    rt = _Runtime(env)
    env._runtime = rt
    if env._stop_before_run:  # stop requested between construction and run
        rt.request_stop()
    return rt.run()
