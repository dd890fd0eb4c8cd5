"""moteopt: deterministic island-model optimization simulator for sensor networks.

The package simulates networks of resource-constrained nodes that each run a
memory-saving optimizer in Q16.16 fixed point and gossip their best solutions
to neighbors, plus the experiment tooling (benchmark suite, energy model,
statistics, sweep runner, HTTP service and CLI) used to study them.
"""

__version__ = "0.1.0"

from . import algos, bench, config, energy, fxp, island, netsim, runner, stats

__all__ = [
    "algos",
    "bench",
    "config",
    "energy",
    "fxp",
    "island",
    "netsim",
    "runner",
    "stats",
    "__version__",
]
