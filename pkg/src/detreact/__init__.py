"""detreact: a deterministic reactor runtime.

Programs are compositions of reactors connected through ports. All events
carry a superdense logical tag and are processed strictly in tag order;
within a tag, a precedence graph over the reactions decides what may run in
parallel, so a program's observable behavior is identical whether it runs
on one worker thread or eight.
"""

from .core import (MSEC, NSEC, SEC, SHUTDOWN, STARTUP, USEC, Action, Builder,
                   Environment, Port, PortChannel, ReactorTopology, Tag, Timer,
                   build_topology)
from .errors import (CausalityCycleError, CompositionError,
                     ContractViolationError, ExecutionError, ShutdownError)
from .graph import PrecedenceGraph, build_precedence_graph, max_level_width, to_dot
from .patterns import Bank, Interleaved, bank, connect, present_iter, unfold
from .sched import ReadyQueue, TerminationReport, run
from .trace import Trace, TraceRecord, trace_digest, value_digest

__all__ = [
    "Action", "Bank", "Builder", "CausalityCycleError", "CompositionError",
    "ContractViolationError", "Environment", "ExecutionError", "Interleaved",
    "MSEC", "NSEC", "Port", "PortChannel", "PrecedenceGraph", "ReactorTopology",
    "ReadyQueue", "SEC", "SHUTDOWN", "STARTUP", "ShutdownError", "Tag",
    "TerminationReport", "Timer", "Trace", "TraceRecord", "USEC", "bank",
    "build_precedence_graph", "build_topology", "connect", "max_level_width",
    "present_iter", "run", "to_dot", "trace_digest", "unfold", "value_digest",
]

__version__ = "0.1.0"
