"""Connection patterns: unfolding orders, widths, broadcast, sparse access."""

from pathlib import Path

import pytest

from detreact import (Builder, CompositionError, Environment, Interleaved,
                      STARTUP, bank, connect, unfold)
from programs import (bank_multiport_direct, bank_multiport_interleaved,
                      broadcast_pattern, cascade_pattern, edges_text,
                      fork_join_pattern, sparse_multiport)

GOLDEN = Path(__file__).parent / "golden"


def _bank_with_multiport(n=3, width=2):
    b = Builder()

    def node(r, bank_index):
        r.input("p", width=width)
        r.output("q", width=width)
        t = r.timer("t")
        r.reaction(t, body=lambda ctx: None)

    nodes = bank(b, "b", n, node)
    return b, nodes


def test_unfold_default_is_bank_major():
    _, nodes = _bank_with_multiport(n=3, width=2)
    labels = [ch.label() for ch in unfold(nodes.port("p"))]
    assert labels == ["b[0].p[0]", "b[0].p[1]",
                      "b[1].p[0]", "b[1].p[1]",
                      "b[2].p[0]", "b[2].p[1]"]


def test_unfold_interleaved_is_port_major():
    _, nodes = _bank_with_multiport(n=3, width=2)
    labels = [ch.label() for ch in unfold(Interleaved(nodes.port("p")))]
    assert labels == ["b[0].p[0]", "b[1].p[0]", "b[2].p[0]",
                      "b[0].p[1]", "b[1].p[1]", "b[2].p[1]"]


def test_unfold_orders_are_permutations():
    _, nodes = _bank_with_multiport(n=4, width=3)
    default = unfold(nodes.port("p"))
    interleaved = unfold(Interleaved(nodes.port("p")))
    assert sorted(c.label() for c in default) == sorted(c.label() for c in interleaved)
    assert default != interleaved


def test_unfold_scalar_port():
    b = Builder()
    r = b.reactor("r")
    p = r.output("out")
    channels = unfold(p)
    assert len(channels) == 1
    assert channels[0].label() == "r.out"


def test_unfold_concatenates_refs_in_order():
    b = Builder()
    r = b.reactor("r")
    a = r.output("a")
    c = r.output("c", width=2)
    labels = [ch.label() for ch in unfold([c, a])]
    assert labels == ["r.c[0]", "r.c[1]", "r.a"]


def test_connect_width_mismatch_is_an_error():
    b = Builder()
    src = b.reactor("src")
    out = src.output("out", width=3)
    dst = b.reactor("dst")
    inp = dst.input("in", width=2)
    with pytest.raises(CompositionError, match="3.*2|width mismatch"):
        connect(out, inp)


def test_connect_excess_sources_rejected():
    # More sources than targets is rejected outright, not truncated.
    b = Builder()
    src = b.reactor("src")
    out = src.output("out", width=4)
    dst = b.reactor("dst")
    inp = dst.input("in", width=2)
    with pytest.raises(CompositionError, match="width mismatch"):
        connect(out, inp)
    assert not b._connections


def test_broadcast_requires_multiple():
    b = Builder()
    src = b.reactor("src")
    out = src.output("out", width=2)
    dst = b.reactor("dst")
    inp = dst.input("in", width=5)
    with pytest.raises(CompositionError, match="multiple"):
        connect(out, inp, broadcast=True)


def test_broadcast_cycles_the_left_side():
    b = Builder()
    src = b.reactor("src")
    out = src.output("out", width=2)
    dst = b.reactor("dst")
    inp = dst.input("in", width=4)
    pairs = connect(out, inp, broadcast=True)
    rendered = [(s.label(), d.label()) for s, d in pairs]
    assert rendered == [("src.out[0]", "dst.in[0]"),
                        ("src.out[1]", "dst.in[1]"),
                        ("src.out[0]", "dst.in[2]"),
                        ("src.out[1]", "dst.in[3]")]


# -- golden edge sets ---------------------------------------------------------


@pytest.mark.parametrize("builder,golden,expected_count", [
    (fork_join_pattern, "fork_join.edges", 6),
    (broadcast_pattern, "broadcast.edges", 6),
    (cascade_pattern, "cascade.edges", 3),
    (bank_multiport_direct, "bank_direct.edges", 9),
    (bank_multiport_interleaved, "bank_interleaved.edges", 9),
])
def test_golden_edge_sets(builder, golden, expected_count):
    topo, _ = builder()
    text = edges_text(topo)
    assert text == (GOLDEN / golden).read_text()
    assert len(topo.connections) == expected_count


def test_fork_join_edges_per_statement():
    topo, _ = fork_join_pattern(w=3)
    by_stmt = {}
    for s, d in topo.connections:
        by_stmt.setdefault(s.port.owner.name.split("[")[0], []).append((s, d))
    assert len(by_stmt["src"]) == 3  # w connections for the fan-out statement
    assert len(by_stmt["wrk"]) == 3  # and w for the fan-in statement


def test_broadcast_single_output_feeds_three():
    topo, _ = broadcast_pattern(w=3)
    from_src = [d for s, d in topo.connections if s.port.owner.name == "src"]
    assert len(from_src) == 3


def test_cascade_is_a_chain():
    topo, dst = cascade_pattern(n=2)
    Environment(topo, fast=True).run()
    # 1 flows src -> wrk0 (*10+0) -> wrk1 (*10+1) -> dst
    assert dst.state.got == [101]


def test_interleaved_pattern_runs_fully_connected():
    topo, nodes = bank_multiport_interleaved(w=3)
    Environment(topo, workers=2, fast=True).run()
    for j, node in enumerate(nodes.members):
        got = node.state.got
        # node j's channel i carries member i's value for port index j.
        assert got == [(i, i * 100 + j) for i in range(3)]


def test_direct_pattern_loops_back():
    topo, nodes = bank_multiport_direct(w=3)
    Environment(topo, workers=2, fast=True).run()
    for i, node in enumerate(nodes.members):
        assert node.state.got == [(j, i * 100 + j) for j in range(3)]


# -- sparse multiport access ---------------------------------------------------


@pytest.mark.parametrize("receiver", ["sparse", "scan"])
def test_sparse_receivers_agree(receiver):
    topo, rx, (count, total) = sparse_multiport(
        width=200, set_per_tag=5, tags=20, receiver=receiver)
    Environment(topo, fast=True).run()
    assert rx.state.count == count
    assert rx.state.sum == total


def test_present_iter_ascending_and_exact():
    b = Builder()
    src = b.reactor("src")
    out = src.output("out", width=100)

    @src.reaction(STARTUP, effects=[out])
    def _(ctx):
        for i in (42, 7, 93):  # deliberately unsorted writes
            ctx.set(out, i * 2, index=i)

    rx = b.reactor("rx")
    inp = rx.input("in", width=100)
    rx.state.seen = None
    rx.state.scan = None

    @rx.reaction(inp)
    def _(ctx):
        ctx.state.seen = list(ctx.present(inp))
        ctx.state.scan = [(i, ctx.get(inp, index=i)) for i in range(100)
                          if ctx.is_present(inp, index=i)]

    connect(out, inp)
    Environment(b.build(), fast=True).run()
    assert rx.state.seen == [(7, 14), (42, 84), (93, 186)]
    assert rx.state.seen == rx.state.scan  # agrees with the brute-force scan


def test_present_iter_empty_and_full():
    for set_count, width in ((0, 10), (10, 10)):
        b = Builder()
        src = b.reactor("src")
        out = src.output("out", width=width)

        def write(ctx, n=set_count):
            for i in range(n):
                ctx.set(out, i, index=i)

        src.reaction(STARTUP, effects=[out], body=write)
        rx = b.reactor("rx")
        inp = rx.input("in", width=width)
        rx.state.seen = None

        def read(ctx):
            ctx.state.seen = list(ctx.present(inp))

        rx.reaction(STARTUP, inp, body=read)
        connect(out, inp)
        Environment(b.build(), fast=True).run()
        assert rx.state.seen == [(i, i) for i in range(set_count)]


def test_bank_members_know_their_index():
    b = Builder()
    seen = []

    def member(r, bank_index):
        t = r.timer("t")
        r.reaction(t, body=lambda ctx, i=bank_index: seen.append(i))

    nodes = bank(b, "n", 4, member)
    assert [m.bank_index for m in nodes.members] == [0, 1, 2, 3]
    assert nodes[2].name == "n[2]"
    Environment(b.build(), fast=True).run()
    assert sorted(seen) == [0, 1, 2, 3]
