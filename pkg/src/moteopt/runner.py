"""Experiment orchestration: seeded repetition sweeps, artifacts, summaries.

A sweep runs every (problem, dimension, variant, repetition) combination of the
config, where a variant is one point of the cross product of the mode list and
the swept network axes (imitation rate, communication period, network size).
The first value of each axis defines the reference variant for the rank-sum
marks, mirroring the layout of the result tables.

Seeds derive from the master seed as sha256(master|problem|dim|rep), so a
repetition shares its seed across variants (common random numbers) and any
reported number can be re-derived. Runs never read the wall clock: rerunning
a config yields byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import yaml

from . import energy, netsim, stats
from .config import ExperimentConfig
from .netsim import ChannelModel, CostModel, RadioModel, SimConfig

INCOMPLETE_SENTINEL = "INCOMPLETE"


@dataclass(frozen=True)
class Variant:
    mode: str
    q: float
    period: float
    size: int
    label: str

    @property
    def communicating(self) -> bool:
        return not self.mode.endswith("standalone")

    @property
    def sim_mode(self) -> str:
        return "ma" if self.mode.startswith("ma") else "sa"


def derive_seed(master: int, problem: str, dim: int, rep: int) -> int:
    digest = hashlib.sha256(f"{master}|{problem}|{dim}|{rep}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def variants(cfg: ExperimentConfig) -> list[Variant]:
    out = []
    qs = cfg.network.qs()
    periods = cfg.network.periods()
    sizes = cfg.network.sizes()
    for mode in cfg.modes:
        for q in qs:
            for period in periods:
                for size in sizes:
                    label = mode
                    if len(qs) > 1:
                        label += f"_q{q:g}"
                    if len(periods) > 1:
                        label += f"_p{period:g}"
                    if len(sizes) > 1:
                        label += f"_n{size}"
                    out.append(Variant(mode, q, period, size, label))
    return out


def build_sim_config(cfg: ExperimentConfig, problem: str, dim: int, var: Variant,
                     seed: int) -> SimConfig:
    return SimConfig(
        problem_id=problem,
        dim=dim,
        n_nodes=var.size,
        mode=var.sim_mode,
        communicating=var.communicating,
        q=var.q,
        comm_period=var.period,
        eval_budget=cfg.eval_budget,
        time_budget=cfg.time_budget,
        topology_kind=cfg.network.topology,
        radio_range=cfg.network.radio_range,
        channel=ChannelModel(
            loss_prob=cfg.channel.loss_prob,
            collision_window=cfg.channel.collision_window,
            latency=cfg.channel.latency,
        ),
        cost=CostModel(c0=cfg.cost.c0, c1=cfg.cost.c1),
        radio=RadioModel(bitrate=cfg.radio.bitrate, listen_window=cfg.radio.listen_window),
        seed=seed,
    )


def _execute(sim_cfg: SimConfig, config_hash: str):
    trace = netsim.run(sim_cfg)
    lines = [f"# config_hash={config_hash}"]
    lines.extend(trace.render_lines())
    energy_lines = [f"# config_hash={config_hash}", energy.CSV_HEADER]
    ledgers = []
    for nid in sorted(trace.finals):
        fin = trace.finals[nid]
        energy_lines.append(energy.csv_row(nid, fin.ledger))
        ledgers.append(fin.ledger)
    return (
        "\n".join(lines) + "\n",
        "\n".join(energy_lines) + "\n",
        trace.network_avg(),
        trace.network_min(),
        [(led.t_cpu, led.t_lpm, led.t_tx, led.t_rx) for led in ledgers],
    )


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path) -> dict:
    """Execute the whole sweep and write the artifact directory."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.config_hash()
    sentinel = out / INCOMPLETE_SENTINEL
    sentinel.write_text("run in progress or aborted\n")
    (out / "config.yaml").write_text(
        f"# config_hash={config_hash}\n" + yaml.safe_dump(cfg.model_dump(), sort_keys=True)
    )

    jobs = []
    for problem in cfg.problems:
        for dim in cfg.dimensions:
            for var in variants(cfg):
                for rep in range(cfg.repetitions):
                    seed = derive_seed(cfg.master_seed, problem, dim, rep)
                    jobs.append((problem, dim, var, rep, seed))

    results = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [
                pool.submit(_execute, build_sim_config(cfg, p, d, v, s), config_hash)
                for (p, d, v, r, s) in jobs
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _execute(build_sim_config(cfg, p, d, v, s), config_hash)
            for (p, d, v, r, s) in jobs
        ]

    manifest_runs = []
    for (problem, dim, var, rep, seed), (trace_text, energy_text, avg, mn, ledgers) in zip(
        jobs, results
    ):
        run_dir = out / "runs" / var.label / f"{problem}_d{dim}"
        run_dir.mkdir(parents=True, exist_ok=True)
        trace_path = run_dir / f"rep{rep:03d}.trace"
        energy_path = run_dir / f"rep{rep:03d}_energy.csv"
        trace_path.write_text(trace_text)
        energy_path.write_text(energy_text)
        manifest_runs.append(
            {
                "problem": problem,
                "dim": dim,
                "label": var.label,
                "mode": var.mode,
                "q": var.q,
                "period": var.period,
                "size": var.size,
                "rep": rep,
                "seed": seed,
                "trace": str(trace_path.relative_to(out)),
                "energy": str(energy_path.relative_to(out)),
                "network_avg": avg,
                "network_min": mn,
                "ledgers": ledgers,
            }
        )

    manifest = {
        "config_hash": config_hash,
        "config": cfg.model_dump(),
        "runs": manifest_runs,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    summaries = write_tables(out)
    sentinel.unlink()
    return {
        "artifact_dir": str(out),
        "config_hash": config_hash,
        "runs": len(manifest_runs),
        "summaries": [str(p) for p in summaries],
    }


def _load_manifest(artifact_dir: str | Path) -> dict:
    path = Path(artifact_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json under {artifact_dir}")
    return json.loads(path.read_text())


def write_tables(artifact_dir: str | Path) -> list[Path]:
    """Per-dimension summary tables: mean, std, mean-of-minima and the rank-sum
    mark of every variant against the reference variant."""
    out = Path(artifact_dir)
    manifest = _load_manifest(out)
    config_hash = manifest["config_hash"]
    cfg = ExperimentConfig.model_validate(manifest["config"])
    labels = [v.label for v in variants(cfg)]
    ref_label = labels[0]

    by_key: dict[tuple, dict[str, list]] = {}
    for run in manifest["runs"]:
        key = (run["problem"], run["dim"])
        by_key.setdefault(key, {}).setdefault(run["label"], []).append(
            (run["rep"], run["network_avg"], run["network_min"])
        )

    summary_dir = out / "summary"
    summary_dir.mkdir(exist_ok=True)
    paths = []
    for dim in cfg.dimensions:
        lines = [f"# config_hash={config_hash}"]
        header = ["problem"]
        for label in labels:
            header += [f"{label}_mean", f"{label}_std", f"{label}_minmean", f"{label}_w"]
        lines.append(",".join(header))
        for problem in cfg.problems:
            cells = [problem]
            group = by_key.get((problem, dim), {})
            ref_vals = [avg for _, avg, _ in sorted(group.get(ref_label, []))]
            for label in labels:
                rows = sorted(group.get(label, []))
                vals = [avg for _, avg, _ in rows]
                mins = [mn for _, _, mn in rows]
                if not vals:
                    cells += ["", "", "", ""]
                    continue
                agg = stats.aggregate({label: vals})[0]
                if label == ref_label:
                    mark = "ref"
                else:
                    mark = stats.wilcoxon(
                        stats.RunSample(ref_label, ref_vals), stats.RunSample(label, vals)
                    )
                cells += [f"{agg.mean:.6e}", f"{agg.std:.6e}",
                          f"{sum(mins) / len(mins):.6e}", mark]
            lines.append(",".join(cells))
        path = summary_dir / f"results_d{dim}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)

    # energy summary: per-dimension per-variant state times, duty cycle, power
    for dim in cfg.dimensions:
        lines = [f"# config_hash={config_hash}"]
        lines.append("label,t_cpu,t_lpm,t_tx,t_rx,duty_cycle,power_mw,energy_mj")
        for label in labels:
            ledgers = []
            for run in manifest["runs"]:
                if run["dim"] == dim and run["label"] == label:
                    ledgers.extend(run["ledgers"])
            if not ledgers:
                continue
            n = len(ledgers)
            led = energy.EnergyLedger(
                t_cpu=sum(t[0] for t in ledgers) / n,
                t_lpm=sum(t[1] for t in ledgers) / n,
                t_tx=sum(t[2] for t in ledgers) / n,
                t_rx=sum(t[3] for t in ledgers) / n,
            )
            power, joules = energy.energy(led)
            lines.append(
                f"{label},{led.t_cpu:.6f},{led.t_lpm:.6f},{led.t_tx:.6f},{led.t_rx:.6f},"
                f"{energy.duty_cycle(led):.6f},{power:.6f},{joules:.6f}"
            )
        path = summary_dir / f"energy_d{dim}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def _parse_trace_improvements(path: Path):
    """Per-node improvement step functions (eval count -> fitness) plus finals."""
    per_node: dict[int, list[tuple[int, float]]] = {}
    finals: dict[int, int] = {}
    for line in path.read_text().splitlines():
        if line.startswith("IMP,"):
            parts = line.split(",")
            node, evals, fitness = int(parts[2]), int(parts[3]), float(parts[4])
            per_node.setdefault(node, []).append((evals, fitness))
        elif line.startswith("FIN,"):
            parts = line.split(",")
            finals[int(parts[1])] = int(parts[2])
    return per_node, finals


def _network_fitness_at(per_node, c: int) -> float:
    vals = []
    for steps in per_node.values():
        best = steps[0][1]
        for evals, fitness in steps:
            if evals <= c:
                best = fitness
            else:
                break
        vals.append(best)
    return sum(vals) / len(vals)


def emit_trend(artifact_dir: str | Path, stride: int = 1) -> list[Path]:
    """Average network-fitness trend against the per-node evaluation count,
    one CSV per (problem, dimension) with a column per variant."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    out = Path(artifact_dir)
    manifest = _load_manifest(out)
    cfg = ExperimentConfig.model_validate(manifest["config"])
    budget = cfg.eval_budget
    labels = [v.label for v in variants(cfg)]

    trend_dir = out / "trend"
    trend_dir.mkdir(exist_ok=True)
    paths = []
    grid = list(range(stride, budget + 1, stride))
    for problem in cfg.problems:
        for dim in cfg.dimensions:
            series: dict[str, list[float]] = {}
            for label in labels:
                runs = [
                    r
                    for r in manifest["runs"]
                    if r["problem"] == problem and r["dim"] == dim and r["label"] == label
                ]
                if not runs:
                    continue
                acc = [0.0] * len(grid)
                for run in runs:
                    per_node, _ = _parse_trace_improvements(out / run["trace"])
                    for i, c in enumerate(grid):
                        acc[i] += _network_fitness_at(per_node, c)
                series[label] = [v / len(runs) for v in acc]
            if not series:
                continue
            lines = [f"# config_hash={manifest['config_hash']}"]
            lines.append("evals," + ",".join(series))
            for i, c in enumerate(grid):
                lines.append(
                    f"{c}," + ",".join(f"{series[label][i]:.6e}" for label in series)
                )
            path = trend_dir / f"trend_{problem}_d{dim}.csv"
            path.write_text("\n".join(lines) + "\n")
            paths.append(path)
    return paths
