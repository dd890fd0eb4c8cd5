"""Per-node energy accounting over the four operating states of a mote.

A node is always in exactly one of *cpu* (MCU active, radio off), *tx*, *rx*
or *lpm* (low-power idle), so the four accumulated times partition its
lifetime. Power follows from multiplying each time by the state's operational
current at the supply voltage.
"""

from __future__ import annotations

from dataclasses import dataclass

STATES = ("cpu", "lpm", "tx", "rx")


@dataclass
class EnergyLedger:
    t_cpu: float = 0.0
    t_lpm: float = 0.0
    t_tx: float = 0.0
    t_rx: float = 0.0

    def record(self, state: str, dt: float) -> None:
        if dt < 0:
            raise ValueError("negative duration")
        if state == "cpu":
            self.t_cpu += dt
        elif state == "lpm":
            self.t_lpm += dt
        elif state == "tx":
            self.t_tx += dt
        elif state == "rx":
            self.t_rx += dt
        else:
            raise ValueError(f"unknown state {state!r}")

    @property
    def total(self) -> float:
        return self.t_cpu + self.t_lpm + self.t_tx + self.t_rx


@dataclass(frozen=True)
class CurrentModel:
    """Operational currents (amperes) and supply voltage of a TelosB-class mote."""

    i_cpu: float = 1.8e-3
    i_tx: float = 19.5e-3
    i_rx: float = 21.8e-3
    i_lpm: float = 54.5e-6
    voltage: float = 3.0


def duty_cycle(ledger: EnergyLedger) -> float:
    """Radio-active share of the node's total time.

    The denominator is the sum of all four states (total lifetime); the share
    is in [0, 1].
    """
    total = ledger.total
    if total <= 0.0:
        raise ZeroDivisionError("empty ledger")
    return (ledger.t_tx + ledger.t_rx) / total


def energy(ledger: EnergyLedger, cm: CurrentModel = CurrentModel()) -> tuple[float, float]:
    """Average power (mW) and total energy (mJ) drawn over the ledger."""
    total = ledger.total
    if total <= 0.0:
        raise ZeroDivisionError("empty ledger")
    joules = cm.voltage * (
        cm.i_cpu * ledger.t_cpu
        + cm.i_lpm * ledger.t_lpm
        + cm.i_tx * ledger.t_tx
        + cm.i_rx * ledger.t_rx
    )
    millijoules = joules * 1e3
    milliwatts = millijoules / total
    return milliwatts, millijoules


CSV_HEADER = "node,t_cpu,t_lpm,t_tx,t_rx,duty_cycle,power_mw,energy_mj"


def csv_row(node_id, ledger: EnergyLedger, cm: CurrentModel = CurrentModel()) -> str:
    power, joules = energy(ledger, cm)
    return (
        f"{node_id},{ledger.t_cpu:.6f},{ledger.t_lpm:.6f},{ledger.t_tx:.6f},"
        f"{ledger.t_rx:.6f},{duty_cycle(ledger):.6f},{power:.6f},{joules:.6f}"
    )
