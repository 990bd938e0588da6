"""Trace canonicalization, digests, and the text format."""

import re

from detreact import (SEC, Builder, Environment, trace_digest,
                      value_digest)
from programs import two_user_bank


def traced_run(topology, workers=1, **kwargs):
    env = Environment(topology, workers=workers, fast=True, trace=True, **kwargs)
    report = env.run()
    return env.trace, report


def test_two_user_bank_trace_order():
    topo, _ = two_user_bank()
    trace, _ = traced_run(topo)
    rx = [(rec.reactor_path, rec.reaction_index, rec.tag) for rec in trace.records]
    assert rx == [
        ("userA", 1, (1 * SEC, 0)),
        ("account", 1, (1 * SEC, 0)),
        ("userB", 1, (2 * SEC, 0)),
        ("account", 2, (2 * SEC, 0)),
    ]


def test_empty_run_has_fixed_digest():
    topo = Builder().build()
    trace, _ = traced_run(topo)
    assert trace.records == ()
    assert trace.canonical_bytes() == b""
    # blake2b-8 of the empty byte string, frozen
    # (int.from_bytes(hashlib.blake2b(b"", digest_size=8).digest(), "big")).
    assert trace_digest(trace) == 0xE4A6A0577479B2B4


def test_digest_is_function_of_content():
    topo1, _ = two_user_bank()
    topo2, _ = two_user_bank()
    t1, _ = traced_run(topo1)
    t2, _ = traced_run(topo2)
    assert t1.to_text() == t2.to_text()
    assert trace_digest(t1) == trace_digest(t2)


def test_digest_differs_when_one_value_differs():
    def build(amount):
        b = Builder()
        src = b.reactor("src")
        t = src.timer("t")
        out = src.output("out")
        src.reaction(t, effects=[out], body=lambda ctx: ctx.set(out, amount))
        sink = b.reactor("sink")
        inp = sink.input("in")
        sink.reaction(inp, body=lambda ctx: ctx.get(inp))
        b.connect(out, inp)
        return b.build()

    t1, _ = traced_run(build(1.0))
    t2, _ = traced_run(build(2.0))
    assert trace_digest(t1) != trace_digest(t2)


def test_workers_do_not_affect_digest():
    digests = set()
    for workers in (1, 2, 4, 8):
        topo, _ = two_user_bank()
        trace, _ = traced_run(topo, workers=workers)
        assert trace.header["workers"] == workers
        digests.add(trace_digest(trace))
    assert len(digests) == 1


def test_swapped_completion_order_same_digest():
    # Two independent same-level reactions plus jitter: wall-clock completion
    # order varies, the canonical trace must not.
    def build():
        b = Builder()
        src = b.reactor("src")
        t = src.timer("t", offset=0, period=SEC)
        out = src.output("out", width=2)
        src.state.rounds = 0

        def fan(ctx):
            ctx.state.rounds += 1
            ctx.set(out, ctx.state.rounds, index=0)
            ctx.set(out, -ctx.state.rounds, index=1)
            if ctx.state.rounds == 5:
                ctx.request_stop()

        src.reaction(t, effects=[out], body=fan)
        for i in range(2):
            w = b.reactor(f"w{i}")
            w_in = w.input("in")
            w_out = w.output("out")
            w.reaction(w_in, effects=[w_out],
                       body=lambda ctx, w_in=w_in, w_out=w_out:
                           ctx.set(w_out, ctx.get(w_in) * 3))
            b.connect(out[i], w_in)
        return b.build()

    digests = set()
    for seed in range(4):
        trace, _ = traced_run(build(), workers=2, jitter_ms=1.5, jitter_seed=seed)
        digests.add(trace_digest(trace))
    assert len(digests) == 1


def test_text_format():
    topo, _ = two_user_bank()
    trace, _ = traced_run(topo)
    lines = trace.to_text().splitlines()
    pattern = re.compile(
        r"^TAG=\d+\.\d+ RX=[\w\[\]]+\.\d+ FX=(\w[\w.\[\]]*:[0-9a-f]{16}(,\w[\w.\[\]]*:[0-9a-f]{16})*)? "
        r"SCHED=([\w.\[\]]+@\d+\.\d+(,[\w.\[\]]+@\d+\.\d+)*)?$")
    for line in lines:
        assert pattern.match(line), line
    assert lines[0] == ("TAG=1000000000.0 RX=userA.1 "
                        f"FX=userA.out:{value_digest(20.0)} SCHED=")
    assert lines[1] == "TAG=1000000000.0 RX=account.1 FX= SCHED="


def test_scheduled_events_recorded():
    b = Builder()
    r = b.reactor("r")
    t = r.timer("t")
    act = r.action("a")
    r.reaction(t, effects=[act],
               body=lambda ctx: ctx.schedule(act, 5, delay=2 * SEC))
    r.reaction(act, body=lambda ctx: None)
    trace, _ = traced_run(b.build())
    assert trace.records[0].scheduled == (("r.a", (2 * SEC, 0)),)
    line = trace.records[0].to_line()
    assert line.endswith(f"SCHED=r.a@{2 * SEC}.0")


def test_tracing_does_not_change_counts():
    topo1, _ = two_user_bank()
    plain = Environment(topo1, fast=True).run()
    topo2, _ = two_user_bank()
    traced = Environment(topo2, fast=True, trace=True).run()
    assert (plain.events, plain.reactions) == (traced.events, traced.reactions)
    assert plain.last_tag == traced.last_tag


def test_value_digest_stability_and_types():
    # Frozen digests: these values must never change across releases or
    # platforms, or stored golden traces would rot.
    assert value_digest(20.0) == value_digest(20.0)
    assert value_digest(20.0) != value_digest(20)
    assert value_digest((1, "x")) != value_digest((1, "y"))
    assert value_digest(None) == value_digest(None)
    import numpy as np
    assert value_digest(np.float64(2.5)) == value_digest(2.5)
    assert value_digest(np.int64(3)) == value_digest(3)
    a = np.array([1, 2, 3], dtype=np.int64)
    b = np.array([1, 2, 3], dtype=np.int64)
    assert value_digest(a) == value_digest(b)
    assert value_digest(a) != value_digest(np.array([1, 2, 4], dtype=np.int64))
