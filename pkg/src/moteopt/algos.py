"""The collection of memory-saving optimizers a node can run.

Four single-solution algorithms, each exposing the same stepping interface:

* ``rs``    - random search; one uniform sample per step.
* ``ispo``  - single-particle optimizer; one step perturbs one variable H times
              with the velocity rule ``v = A/t^P * rand(-0.5, 0.5) + B*L``.
* ``nusa``  - simulated annealing whose neighborhood shrinks non-uniformly with
              the iteration count via ``delta(k, y) = y*(1 - rho^((1-k/N)^b))``.
* ``3some`` - three-stage memetic search: long (uniform sample + exponential
              crossover with the elite), middle (hypercube around the elite),
              short (coordinate descent with halving radius).

States hold at most two solution-sized memory slots (three for ``3some``),
mirroring the footprint the algorithms need on a real node. All candidate
coordinates pass through the toroidal wrap before evaluation, and evaluation
overflow yields the maximum representable fitness so the point is discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

from . import bench, fxp
from .bench import Problem, Solution
from .fxp import F48, HALF, ONE, Rng, rdiv


class AlgorithmId(str, Enum):
    RS = "rs"
    ISPO = "ispo"
    NUSA = "nusa"
    TSOME = "3some"


@dataclass
class IspoParams:
    accel: int = ONE                      # A
    accel_power: int = 10                 # P
    learn_coeff: int = 2 * ONE            # B
    shrink: int = 4 * ONE                 # S_f
    epsilon: int = 1                      # precision threshold, >= 1 ulp
    perturbations: int = 30               # H

    def __post_init__(self):
        if self.perturbations < 1 or self.shrink <= ONE or self.epsilon < 1:
            raise ValueError("invalid ISPO parameters")


@dataclass
class NusaParams:
    shape: int = 5                        # b
    samples: int = 3                      # N_s
    max_generations: int = 333            # N, horizon derived from the budget
    t0: float = 1.0
    alpha: float = 0.99

    def __post_init__(self):
        if self.max_generations < 1 or self.samples < 1 or not 0.0 < self.alpha < 1.0:
            raise ValueError("invalid nuSA parameters")


@dataclass
class TsomeParams:
    inherit_fraction: float = 0.05        # expected share of elite coordinates copied
    cube_fraction: float = 0.2            # hypercube side as a share of the range
    batch: int = 4                        # samples per middle-distance batch
    radius_fraction: float = 0.4          # initial short-distance radius share
    short_budget: int = 150               # evaluations per short-distance activation

    def __post_init__(self):
        if not 0.0 < self.inherit_fraction < 1.0 or not 0.0 < self.cube_fraction <= 1.0:
            raise ValueError("invalid 3SOME parameters")
        if self.batch < 1 or self.short_budget < 1:
            raise ValueError("invalid 3SOME parameters")


class StepResult(NamedTuple):
    evals: int
    best: Optional[Solution]  # best candidate evaluated during the step


def _mul_unbounded(a: int, b: int) -> int:
    # Q16.16 product rounding without the range check; used where the toroidal
    # wrap makes out-of-range intermediates harmless (ISPO velocities).
    p = a * b
    if p >= 0:
        return (p + HALF) >> 16
    return -((-p + HALF) >> 16)


def ispo_velocity(params: IspoParams, t: int, learn: int, rng: Rng) -> int:
    """Velocity for the t-th perturbation given the current learning factor."""
    base = rdiv(params.accel, t ** params.accel_power)
    draw = rng.uniform_fx(-HALF, HALF)
    return _mul_unbounded(base, draw) + _mul_unbounded(params.learn_coeff, learn)


def nusa_delta_core(k: int, y: int, rho: int, n_max: int, shape: int) -> int:
    """delta(k, y) for a fixed rho draw; exact zero at k == n_max, result in [0, y]."""
    if y <= 0 or k >= n_max:
        return 0
    u = rdiv((n_max - k) * F48, n_max)
    w = u
    for _ in range(shape - 1):
        w = (w * u) >> 48
    t = rdiv(w * fxp.ln_q48(rho), F48)
    p = fxp.exp_q48(t)
    if p > F48:
        p = F48
    return rdiv(y * (F48 - p), F48)


def nusa_delta(rng: Rng, k: int, y: int, n_max: int, shape: int) -> int:
    rho = rng.uniform_fx(1, ONE - 1)  # open interval (0, 1)
    return nusa_delta_core(k, y, rho, n_max, shape)


def nusa_perturb(x: list[int], k: int, params: NusaParams, p: Problem, rng: Rng) -> list[int]:
    """Per-coordinate non-uniform move; stays inside the bounds by construction."""
    kk = min(k, params.max_generations)
    out = []
    for xi in x:
        if rng.randint(0, 1):  # direction +1
            out.append(xi + nusa_delta(rng, kk, p.upper - xi, params.max_generations, params.shape))
        else:
            out.append(xi - nusa_delta(rng, kk, xi - p.lower, params.max_generations, params.shape))
    return out


class RandomSearch:
    SLOTS = 2

    def __init__(self, sol: Solution):
        self.current = sol

    @property
    def best(self) -> Solution:
        return self.current

    def step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        if max_evals < 1:
            return StepResult(0, None)
        cand = bench.toroidal_wrap(bench.random_solution(rng, p).x, p)
        f = bench.evaluate(p, cand, clamp_overflow=True)
        if f < self.current.fitness:
            self.current = Solution(cand, f)
        return StepResult(1, self.current)

    def adopt(self, sol: Solution) -> None:
        self.current = sol.copy()


class Ispo:
    SLOTS = 2

    def __init__(self, sol: Solution, params: IspoParams):
        self.particle = sol
        self.params = params
        self.var_index = 0
        self.t = 0
        self.learn = 0

    @property
    def best(self) -> Solution:
        return self.particle

    def step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        pr = self.params
        count = min(pr.perturbations, max_evals)
        if count < 1:
            return StepResult(0, None)
        i = self.var_index
        x = self.particle.x
        fbest = self.particle.fitness
        lo, w = p.lower, p.upper - p.lower
        learn = 0  # reset per variable
        for t in range(1, count + 1):
            v = ispo_velocity(pr, t, learn, rng)
            old = x[i]
            x[i] = lo + (old + v - lo) % w
            f = bench.evaluate(p, x, clamp_overflow=True)
            if f <= fbest:  # a tie counts as success
                fbest = f
                learn = v
            else:
                x[i] = old
                learn = _div_unbounded(learn, pr.shrink)
                if -pr.epsilon < learn < pr.epsilon:
                    learn = 0
        self.particle.fitness = fbest
        self.t = count
        self.learn = learn
        self.var_index = (i + 1) % p.n
        return StepResult(count, self.particle)

    def adopt(self, sol: Solution) -> None:
        self.particle = sol.copy()
        self.learn = 0


def _div_unbounded(a: int, b: int) -> int:
    n = a << 16
    if b < 0:
        n, b = -n, -b
    return rdiv(n, b)


class Nusa:
    SLOTS = 2

    def __init__(self, sol: Solution, params: NusaParams):
        self.current = sol
        self.params = params
        self.k = 0

    @property
    def best(self) -> Solution:
        return self.current

    def step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        pr = self.params
        count = min(pr.samples, max_evals)
        if count < 1:
            return StepResult(0, None)
        best: Optional[Solution] = None
        for _ in range(count):
            xt = nusa_perturb(self.current.x, self.k, pr, p, rng)
            ft = bench.evaluate(p, xt, clamp_overflow=True)
            if best is None or ft < best.fitness:
                best = Solution(xt, ft)
            df = ft - self.current.fitness
            if df <= 0:
                self.current = Solution(xt, ft)
            else:
                temp = pr.t0 * pr.alpha**self.k
                accept_p = math.exp(-fxp.to_real(df) / temp) if temp > 0.0 else 0.0
                if rng.random() < accept_p:
                    self.current = Solution(xt, ft)
        self.k += 1
        return StepResult(count, best)

    def adopt(self, sol: Solution) -> None:
        self.current = sol.copy()
        # k keeps running: the annealing horizon is wall-clock-like


class Tsome:
    SLOTS = 3

    LONG = "long"
    MIDDLE = "middle"
    SHORT = "short"

    def __init__(self, sol: Solution, params: TsomeParams, p: Problem):
        self.elite = sol
        self.params = params
        self.stage = self.LONG
        self.probe: Optional[Solution] = None
        self.short_radius = 0
        self.short_evals = 0
        # geometric run-length continuation probability giving an expected
        # inherited share of inherit_fraction (runs of length zero allowed)
        a = params.inherit_fraction * p.n
        self.cr = a / (1.0 + a)
        self.cube_half = rdiv(fxp.from_real(params.cube_fraction) * (p.upper - p.lower), 2 * ONE)

    @property
    def best(self) -> Solution:
        return self.elite

    def step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        if self.stage == self.LONG:
            return self._long_step(p, rng, max_evals)
        if self.stage == self.MIDDLE:
            return self._middle_step(p, rng, max_evals)
        return self._short_step(p, rng, max_evals)

    def _long_step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        if max_evals < 1:
            return StepResult(0, None)
        trial = bench.random_solution(rng, p).x
        run = 0
        while run < p.n and rng.random() < self.cr:
            run += 1
        if run:
            start = rng.randint(0, p.n - 1)
            for j in range(run):
                idx = (start + j) % p.n
                trial[idx] = self.elite.x[idx]
        trial = bench.toroidal_wrap(trial, p)
        f = bench.evaluate(p, trial, clamp_overflow=True)
        if f < self.elite.fitness:
            self.elite = Solution(trial, f)
            self.stage = self.MIDDLE
        return StepResult(1, self.elite)

    def _middle_step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        count = min(self.params.batch, max_evals)
        if count < 1:
            return StepResult(0, None)
        lo, w = p.lower, p.upper - p.lower
        h = self.cube_half
        improved = False
        for _ in range(count):
            cand = [lo + (xi + rng.uniform_fx(-h, h) - lo) % w for xi in self.elite.x]
            f = bench.evaluate(p, cand, clamp_overflow=True)
            if f < self.elite.fitness:
                self.elite = Solution(cand, f)
                improved = True
        if not improved:
            self.stage = self.SHORT
            self.probe = self.elite.copy()
            self.short_radius = rdiv(fxp.from_real(self.params.radius_fraction) * w, ONE)
            self.short_evals = 0
        return StepResult(count, self.elite)

    def _short_step(self, p: Problem, rng: Rng, max_evals: int) -> StepResult:
        pr = self.params
        probe = self.probe
        lo, w = p.lower, p.upper - p.lower
        s = self.short_radius
        evals = 0
        improved = False
        for i in range(p.n):
            if evals >= max_evals or self.short_evals >= pr.short_budget:
                break
            old = probe.x[i]
            probe.x[i] = lo + (old - s - lo) % w
            f = bench.evaluate(p, probe.x, clamp_overflow=True)
            evals += 1
            self.short_evals += 1
            if f < probe.fitness:
                probe.fitness = f
                improved = True
                continue
            probe.x[i] = old
            if evals >= max_evals or self.short_evals >= pr.short_budget:
                break
            probe.x[i] = lo + (old + s - lo) % w
            f = bench.evaluate(p, probe.x, clamp_overflow=True)
            evals += 1
            self.short_evals += 1
            if f < probe.fitness:
                probe.fitness = f
                improved = True
            else:
                probe.x[i] = old
        if probe.fitness < self.elite.fitness:
            self.elite = probe.copy()
        if not improved:
            self.short_radius = max(s >> 1, 1)
        if self.short_evals >= pr.short_budget:
            self.stage = self.LONG
            self.probe = None
        return StepResult(evals, self.elite)

    def adopt(self, sol: Solution) -> None:
        # the adopted point is promising: focus the hypercube search on it
        self.elite = sol.copy()
        self.stage = self.MIDDLE
        self.probe = None


def adb_select(mode: str, rng: Rng) -> AlgorithmId:
    """Pick the node's algorithm: homogeneous networks run the memetic three-stage
    search; heterogeneous ones draw uniformly from the whole collection."""
    if mode == "homogeneous":
        return AlgorithmId.TSOME
    if mode == "heterogeneous":
        return rng.choice([AlgorithmId.RS, AlgorithmId.ISPO, AlgorithmId.NUSA, AlgorithmId.TSOME])
    raise ValueError(f"unknown selection mode {mode!r}")


def init_state(
    alg: AlgorithmId,
    p: Problem,
    rng: Rng,
    eval_budget: int,
    ispo: IspoParams | None = None,
    nusa: NusaParams | None = None,
    tsome: TsomeParams | None = None,
):
    """Build a freshly sampled optimizer state; consumes one evaluation."""
    sol = bench.random_solution(rng, p)
    sol.x = bench.toroidal_wrap(sol.x, p)
    sol.fitness = bench.evaluate(p, sol.x, clamp_overflow=True)
    if alg == AlgorithmId.RS:
        state = RandomSearch(sol)
    elif alg == AlgorithmId.ISPO:
        state = Ispo(sol, ispo or IspoParams())
    elif alg == AlgorithmId.NUSA:
        if nusa is None:
            nusa = NusaParams(max_generations=max(1, eval_budget // 3))
        state = Nusa(sol, nusa)
    elif alg == AlgorithmId.TSOME:
        state = Tsome(sol, tsome or TsomeParams(), p)
    else:
        raise ValueError(f"unknown algorithm {alg!r}")
    return state, 1
