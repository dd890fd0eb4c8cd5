"""Deterministic discrete-event simulation of the sensor network.

A simulation owns a simulated clock, a topology, a best-effort broadcast
channel (optional loss, latency and a collision window) and one island node
per network member. Optimization steps consume simulated CPU time through a
configurable per-evaluation cost model; network ticks fire every communication
period until a node's completion flag is set. Everything is a pure function of
the configuration and the seed: identical inputs give byte-identical traces.

Wire format: a packet payload is the big-endian sequence of 32-bit two's
complement raw Q16.16 values x_1..x_n followed by the fitness, at most 128
bytes, hence at most 31 decision variables.
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass, field

from . import algos, bench, island
from .algos import AlgorithmId
from .bench import Problem, Solution
from .energy import EnergyLedger
from .fxp import Rng, to_str

PAYLOAD_LIMIT = 128

# event kind priorities: deliveries first, then network ticks, then optimizer
# steps; joins precede everything at the same instant
_PRIO_JOIN = -1
_PRIO_DELIVER = 0
_PRIO_NET = 1
_PRIO_OPT = 2


class PayloadTooLarge(ValueError):
    """Solution does not fit the 128-byte broadcast payload."""


def encode(sol: Solution) -> bytes:
    n = len(sol.x)
    if 4 * (n + 1) > PAYLOAD_LIMIT:
        raise PayloadTooLarge(f"{n} variables need {4 * (n + 1)} bytes > {PAYLOAD_LIMIT}")
    return struct.pack(f">{n + 1}i", *sol.x, sol.fitness)


def decode(payload: bytes, n: int) -> Solution:
    if len(payload) != 4 * (n + 1):
        raise ValueError(f"expected {4 * (n + 1)} payload bytes, got {len(payload)}")
    values = struct.unpack(f">{n + 1}i", payload)
    return Solution(list(values[:n]), values[n])


class Topology:
    """Symmetric neighbor relation without self-loops."""

    def __init__(self, node_ids, edges):
        self._adj: dict[int, set[int]] = {nid: set() for nid in node_ids}
        for a, b in edges:
            self.add_edge(a, b)

    def add_node(self, nid: int) -> None:
        self._adj.setdefault(nid, set())

    def add_edge(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        if a not in self._adj or b not in self._adj:
            raise ValueError("edge endpoints must be existing nodes")
        self._adj[a].add(b)
        self._adj[b].add(a)

    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def neighbors(self, nid: int) -> list[int]:
        return sorted(self._adj[nid])

    def connected(self) -> bool:
        ids = self.nodes()
        if not ids:
            return True
        seen = {ids[0]}
        stack = [ids[0]]
        while stack:
            for nb in self._adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(ids)


def gen_topology(kind: str, n_nodes: int, rng: Rng, radio_range: float = 0.5) -> Topology:
    """Build a topology: 'complete', 'ring', or 'random_geometric' (uniform
    placements in the unit square, links within radio range, resampled until
    connected)."""
    if n_nodes < 1:
        raise ValueError("need at least one node")
    ids = list(range(n_nodes))
    if kind == "complete":
        return Topology(ids, [(a, b) for a in ids for b in ids if a < b])
    if kind == "ring":
        if n_nodes == 1:
            return Topology(ids, [])
        if n_nodes == 2:
            return Topology(ids, [(0, 1)])
        return Topology(ids, [(i, (i + 1) % n_nodes) for i in ids])
    if kind == "random_geometric":
        r2 = radio_range * radio_range
        for _ in range(10_000):
            pts = [(rng.random(), rng.random()) for _ in ids]
            edges = [
                (a, b)
                for a in ids
                for b in ids
                if a < b
                and (pts[a][0] - pts[b][0]) ** 2 + (pts[a][1] - pts[b][1]) ** 2 <= r2
            ]
            topo = Topology(ids, edges)
            if topo.connected():
                return topo
        raise RuntimeError("could not sample a connected topology; increase radio_range")
    raise ValueError(f"unknown topology kind {kind!r}")


@dataclass(frozen=True)
class ChannelModel:
    loss_prob: float = 0.0
    collision_window: float = 0.0
    latency: float = 0.001

    def __post_init__(self):
        if not 0.0 <= self.loss_prob <= 1.0 or self.latency < 0.0 or self.collision_window < 0.0:
            raise ValueError("invalid channel parameters")


@dataclass(frozen=True)
class CostModel:
    """Simulated CPU seconds per fitness evaluation: c0 + c1 * n."""

    c0: float = 0.030
    c1: float = 0.001

    def per_eval(self, n: int) -> float:
        return self.c0 + self.c1 * n


@dataclass(frozen=True)
class RadioModel:
    bitrate: float = 250_000.0
    listen_window: float = 0.005

    def tx_time(self, payload_bytes: int) -> float:
        return payload_bytes * 8.0 / self.bitrate


@dataclass(frozen=True)
class JoinSpec:
    time: float
    node_id: int
    neighbors: tuple[int, ...]
    algorithm: str | None = None  # defaults to the network mode's selection
    communicating: bool | None = None


@dataclass
class SimConfig:
    problem_id: str
    dim: int
    n_nodes: int = 5
    mode: str = "sa"  # "sa" (homogeneous) or "ma" (heterogeneous)
    communicating: bool = True
    q: float = 0.9
    comm_period: float = 0.25
    eval_budget: int = 1000
    time_budget: float = 60.0
    topology_kind: str = "random_geometric"
    radio_range: float = 0.5
    topology: Topology | None = None  # explicit topology wins over the generator
    channel: ChannelModel = field(default_factory=ChannelModel)
    cost: CostModel = field(default_factory=CostModel)
    radio: RadioModel = field(default_factory=RadioModel)
    seed: int = 0
    joins: tuple[JoinSpec, ...] = ()

    def __post_init__(self):
        if self.mode not in ("sa", "ma"):
            raise ValueError("mode must be 'sa' or 'ma'")
        seen = {js.node_id for js in self.joins}
        if len(seen) != len(self.joins) or any(js.node_id < self.n_nodes for js in self.joins):
            raise ValueError("joining node ids must be new and unique")


@dataclass(frozen=True)
class ImpRecord:
    time: float
    node: int
    evals: int
    fitness: int
    x: tuple[int, ...]


@dataclass(frozen=True)
class NetRecord:
    time: float
    src: int
    dst: int
    kind: str  # SEND | RECV | ACCEPT
    fitness: int


@dataclass
class NodeFinal:
    evals: int
    fitness: int
    x: tuple[int, ...]
    ledger: EnergyLedger
    algorithm: str


class Trace:
    """Everything a run produced: improvement log, network log, per-node finals."""

    def __init__(self, seed: int):
        self.seed = seed
        self.improvements: list[ImpRecord] = []
        self.net: list[NetRecord] = []
        self.finals: dict[int, NodeFinal] = {}
        self.end_time = 0.0
        self.max_payload = 0

    def network_avg(self) -> float:
        vals = [f.fitness / 65536 for f in self.finals.values()]
        return sum(vals) / len(vals)

    def network_min(self) -> float:
        return min(f.fitness / 65536 for f in self.finals.values())

    def render_lines(self):
        for imp in self.improvements:
            xs = ",".join(to_str(v) for v in imp.x)
            yield f"IMP,{imp.time:.6f},{imp.node},{imp.evals},{to_str(imp.fitness)},{xs}"
        for rec in self.net:
            yield f"NET,{rec.time:.6f},{rec.src},{rec.dst},{rec.kind}"
        for nid in sorted(self.finals):
            fin = self.finals[nid]
            xs = ",".join(to_str(v) for v in fin.x)
            yield f"FIN,{nid},{fin.evals},{to_str(fin.fitness)},{xs}"
        yield f"END,{self.end_time:.6f}"

    def render(self) -> str:
        return "\n".join(self.render_lines()) + "\n"


class _Transmission:
    __slots__ = ("time", "sender", "payload", "voided")

    def __init__(self, time: float, sender: int, payload: bytes):
        self.time = time
        self.sender = sender
        self.payload = payload
        self.voided = False


class Simulation:
    """One seeded run. ``run()`` executes to completion and returns the Trace."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.problem: Problem = bench.make_problem(cfg.problem_id, cfg.dim)
        self.root_rng = Rng(cfg.seed)
        self.channel_rng = self.root_rng.split("channel")
        if cfg.topology is not None:
            self.topology = cfg.topology
        else:
            self.topology = gen_topology(
                cfg.topology_kind, cfg.n_nodes, self.root_rng.split("topology"), cfg.radio_range
            )
        self.nodes: dict[int, island.Node] = {}
        self.trace = Trace(cfg.seed)
        self.cost_per_eval = cfg.cost.per_eval(cfg.dim)
        self._heap: list = []
        self._seq = 0
        self._recent_tx: list[_Transmission] = []
        self._busy_end = 0.0  # latest instant any node is still cpu/tx/rx busy
        self._ran = False

    # -- event plumbing

    def _push(self, time: float, prio: int, node_id: int, data=None) -> None:
        heapq.heappush(self._heap, (time, prio, node_id, self._seq, data))
        self._seq += 1

    def _select_algorithm(self, node_rng: Rng, override: str | None) -> AlgorithmId:
        if override is not None:
            return AlgorithmId(override)
        mode = "homogeneous" if self.cfg.mode == "sa" else "heterogeneous"
        return algos.adb_select(mode, node_rng.split("select"))

    def _boot_node(self, node_id: int, clock: float, algorithm: str | None = None,
                   communicating: bool | None = None) -> None:
        cfg = self.cfg
        node_rng = self.root_rng.split(f"node:{node_id}")
        ncfg = island.NodeConfig(
            algorithm=self._select_algorithm(node_rng, algorithm),
            q=cfg.q,
            comm_period=cfg.comm_period,
            eval_budget=cfg.eval_budget,
            time_budget=cfg.time_budget,
            communicating=cfg.communicating if communicating is None else communicating,
        )
        node, _ = island.boot(node_id, ncfg, self.problem, node_rng, clock, self.cost_per_eval)
        self.nodes[node_id] = node
        self._record_improvement(node, clock)
        self._busy_end = max(self._busy_end, clock + self.cost_per_eval)
        if not node.flag:
            self._push(clock + self.cost_per_eval, _PRIO_OPT, node_id)
        if ncfg.communicating:
            self._push(clock + ncfg.comm_period, _PRIO_NET, node_id)

    def _record_improvement(self, node: island.Node, clock: float) -> None:
        best = node.local_best
        self.trace.improvements.append(
            ImpRecord(clock, node.id, node.evals, best.fitness, tuple(best.x))
        )

    # -- event handlers

    def _handle_opt(self, node: island.Node, clock: float) -> None:
        res = island.opt_event(node, self.problem, clock, self.cost_per_eval)
        if res is None:
            return
        evals_used, improved = res
        if improved:
            self._record_improvement(node, clock)
        next_time = clock + evals_used * self.cost_per_eval + node.radio_debt
        node.radio_debt = 0.0
        self._busy_end = max(self._busy_end, next_time)
        if not node.flag:
            self._push(next_time, _PRIO_OPT, node.id)

    def _handle_net(self, node: island.Node, clock: float) -> None:
        if island.check_stop(node, clock):
            return
        for sender, payload in node.inbox:
            sol = decode(payload, self.problem.n)
            self.trace.net.append(NetRecord(clock, sender, node.id, "RECV", sol.fitness))
            if island.consider_incoming(node, sol, node.net_rng):
                self.trace.net.append(NetRecord(clock, sender, node.id, "ACCEPT", sol.fitness))
                self._record_improvement(node, clock)
        node.inbox.clear()
        payload = encode(node.local_best)
        self.trace.max_payload = max(self.trace.max_payload, len(payload))
        radio_time = self.cfg.radio.tx_time(len(payload)) + self.cfg.radio.listen_window
        node.ledger.record("tx", self.cfg.radio.tx_time(len(payload)))
        node.ledger.record("rx", self.cfg.radio.listen_window)
        node.radio_debt += radio_time
        self._busy_end = max(self._busy_end, clock + radio_time)
        self.trace.net.append(NetRecord(clock, node.id, -1, "SEND", node.local_best.fitness))
        self._broadcast(node, clock, payload)
        self._push(clock + node.cfg.comm_period, _PRIO_NET, node.id)

    def _broadcast(self, node: island.Node, clock: float, payload: bytes) -> None:
        tx = _Transmission(clock, node.id, payload)
        window = self.cfg.channel.collision_window
        if window > 0.0:
            self._recent_tx = [t for t in self._recent_tx if clock - t.time <= window]
            neighborhood = set(self.topology.neighbors(node.id))
            for other in self._recent_tx:
                if other.sender in neighborhood:
                    other.voided = True
                    tx.voided = True
            self._recent_tx.append(tx)
        loss = self.cfg.channel.loss_prob
        for nb in self.topology.neighbors(node.id):
            if loss > 0.0 and self.channel_rng.random() < loss:
                continue
            peer = self.nodes.get(nb)
            if peer is None or not peer.cfg.communicating:
                continue
            self._push(clock + self.cfg.channel.latency, _PRIO_DELIVER, nb, tx)

    def _handle_deliver(self, node: island.Node, clock: float, tx: _Transmission) -> None:
        if tx.voided:
            return
        if island.check_stop(node, clock):
            return  # packets arriving after completion are discarded
        node.inbox.append((tx.sender, tx.payload))

    def _handle_join(self, spec: JoinSpec, clock: float) -> None:
        if spec.node_id in self.nodes:
            raise ValueError(f"duplicate node id {spec.node_id}")
        self.topology.add_node(spec.node_id)
        for nb in spec.neighbors:
            self.topology.add_edge(spec.node_id, nb)
        self._boot_node(spec.node_id, clock, spec.algorithm, spec.communicating)

    # -- main loop

    def run(self) -> Trace:
        if self._ran:
            raise RuntimeError("a Simulation instance runs once")
        self._ran = True
        for spec in self.cfg.joins:
            self._push(spec.time, _PRIO_JOIN, spec.node_id, spec)
        for nid in range(self.cfg.n_nodes):
            self._boot_node(nid, 0.0)
        end = 0.0
        while self._heap:
            time, prio, node_id, _, data = heapq.heappop(self._heap)
            end = max(end, time)
            if prio == _PRIO_JOIN:
                self._handle_join(data, time)
            elif prio == _PRIO_DELIVER:
                self._handle_deliver(self.nodes[node_id], time, data)
            elif prio == _PRIO_NET:
                self._handle_net(self.nodes[node_id], time)
            else:
                self._handle_opt(self.nodes[node_id], time)
        end = max(end, self._busy_end)
        self.trace.end_time = end
        for nid, node in sorted(self.nodes.items()):
            lifetime = end - node.boot_time
            busy = node.ledger.t_cpu + node.ledger.t_tx + node.ledger.t_rx
            node.ledger.record("lpm", max(0.0, lifetime - busy))
            self.trace.finals[nid] = NodeFinal(
                node.evals,
                node.local_best.fitness,
                tuple(node.local_best.x),
                node.ledger,
                node.cfg.algorithm.value,
            )
        return self.trace


def run(cfg: SimConfig) -> Trace:
    return Simulation(cfg).run()
