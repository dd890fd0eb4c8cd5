"""Per-node state machine: an optimization process and a network process
sharing the node-local best under probabilistic acceptance of incoming
solutions.

Each node steps its optimizer until one of the stop criteria fires (evaluation
budget or time budget), keeping the best solution it has seen. The network
process periodically broadcasts that best and, when a better solution arrives,
adopts it with probability ``q`` (the imitation rate); the optimizer continues
from the adopted point. Event atomicity in the simulator stands in for the
thread synchronization of a real node: an optimization step and a network tick
never interleave.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import algos
from .algos import AlgorithmId
from .bench import Problem, Solution
from .energy import EnergyLedger
from .fxp import Rng


@dataclass
class NodeConfig:
    algorithm: AlgorithmId = AlgorithmId.TSOME
    q: float = 0.9
    comm_period: float = 0.25
    eval_budget: int = 1000
    time_budget: float = 60.0
    communicating: bool = True

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("imitation rate must be within [0, 1]")
        if self.comm_period <= 0.0:
            raise ValueError("communication period must be positive")
        if self.eval_budget < 1 or self.time_budget <= 0.0:
            raise ValueError("budgets must be positive")


class Node:
    __slots__ = (
        "id",
        "cfg",
        "opt",
        "local_best",
        "evals",
        "flag",
        "inbox",
        "ledger",
        "boot_time",
        "opt_rng",
        "net_rng",
        "radio_debt",
    )

    def __init__(self, node_id: int, cfg: NodeConfig, opt, local_best: Solution,
                 opt_rng: Rng, net_rng: Rng, boot_time: float):
        self.id = node_id
        self.cfg = cfg
        self.opt = opt
        self.local_best = local_best
        self.evals = 0
        self.flag = False
        self.inbox: list[tuple[int, bytes]] = []  # (sender, encoded payload)
        self.ledger = EnergyLedger()
        self.boot_time = boot_time
        self.opt_rng = opt_rng
        self.net_rng = net_rng
        # radio time accrued since the last optimization step; the network
        # process preempts the CPU, so it defers the next step by this much
        self.radio_debt = 0.0


def boot(node_id: int, cfg: NodeConfig, problem: Problem, node_rng: Rng,
         clock: float, cost_per_eval: float) -> tuple[Node, bool]:
    """Create a node, sample and evaluate its first solution (one evaluation).

    Returns the node and True (the first evaluation is always an improvement
    record: it establishes the node-local best).
    """
    opt_rng = node_rng.split("opt")
    net_rng = node_rng.split("net")
    state, used = algos.init_state(cfg.algorithm, problem, opt_rng, cfg.eval_budget)
    node = Node(node_id, cfg, state, state.best.copy(), opt_rng, net_rng, clock)
    node.evals = used
    node.ledger.record("cpu", used * cost_per_eval)
    check_stop(node, clock)
    return node, True


def check_stop(node: Node, clock: float) -> bool:
    """Set the completion flag once either stop criterion is met."""
    if not node.flag and (
        node.evals >= node.cfg.eval_budget or clock >= node.cfg.time_budget
    ):
        node.flag = True
    return node.flag


def opt_event(node: Node, problem: Problem, clock: float, cost_per_eval: float):
    """One optimizer iteration: returns (evals_used, improved) or None if the
    node had already stopped. Improvements update the node-local best."""
    if check_stop(node, clock):
        return None
    remaining = node.cfg.eval_budget - node.evals
    res = node.opt.step(problem, node.opt_rng, remaining)
    node.evals += res.evals
    node.ledger.record("cpu", res.evals * cost_per_eval)
    improved = False
    if res.best is not None and res.best.fitness < node.local_best.fitness:
        node.local_best = res.best.copy()
        improved = True
    check_stop(node, clock)
    return res.evals, improved


def consider_incoming(node: Node, incoming: Solution, rng: Rng) -> bool:
    """Adopt an incoming solution iff it strictly improves the local best and
    the imitation draw succeeds; the optimizer continues from the adopted point.

    The random draw happens only after the fitness guard passes, mirroring the
    nesting of the network-process loop.
    """
    if incoming.fitness >= node.local_best.fitness:
        return False
    if rng.random() >= node.cfg.q:
        return False
    node.local_best = incoming.copy()
    node.opt.adopt(incoming)
    return True
