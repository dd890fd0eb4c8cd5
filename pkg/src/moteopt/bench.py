"""Benchmark suite: 15 continuous minimization problems on [-2, 2]^n.

All evaluators run entirely in Q16.16 raw arithmetic (see :mod:`moteopt.fxp`)
and raise :class:`~moteopt.fxp.FxOverflowError` when an intermediate value
leaves the representable range. Callers running a search loop normally pass
``clamp_overflow=True`` to :func:`evaluate`, which turns an overflow into the
largest representable fitness so the optimizer simply discards the point.

Bounds are handled toroidally: a coordinate exceeding the upper bound by z
re-enters at lower + z (and symmetrically), so trial points always land in
[lower, upper).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import fxp
from .fxp import (
    ONE,
    RAW_MAX,
    RAW_MIN,
    FxOverflowError,
    Rng,
    cos,
    div,
    fabs,
    from_int,
    from_real,
    mul,
    pow_int,
    sin,
    sqrt,
)

#: Hard cap on problem dimension; one solution plus its fitness must fit the
#: 128-byte radio payload (32 values of 4 bytes).
MAX_DIMENSION = 31

DEFAULT_LOWER = from_real(-2.0)
DEFAULT_UPPER = from_real(2.0)

_TWO_PI = from_real(math.tau)
_PI = from_real(math.pi)
_E = from_real(math.e)
_N20 = from_int(-20)
_P20 = from_int(20)
_TEN = from_int(10)
_TENTH = from_real(0.1)
_NEG_FIFTH = from_real(-0.2)
_F4000 = from_int(4000)


def _checked_add(acc: int, term: int) -> int:
    acc += term
    if acc > RAW_MAX or acc < RAW_MIN:
        raise FxOverflowError("sum overflow")
    return acc


def _sphere(n):
    def f(x):
        acc = 0
        for xi in x:
            acc = _checked_add(acc, mul(xi, xi))
        return acc

    return f


def _rosenbrock(n):
    hundred = from_int(100)

    def f(x):
        acc = 0
        for i in range(n - 1):
            t = fxp.sub(x[i + 1], mul(x[i], x[i]))
            u = fxp.sub(ONE, x[i])
            acc = _checked_add(acc, mul(hundred, mul(t, t)))
            acc = _checked_add(acc, mul(u, u))
        return acc

    return f


def _ackley(n):
    n_fx = from_int(n)

    def f(x):
        ssum = 0
        csum = 0
        for xi in x:
            ssum = _checked_add(ssum, mul(xi, xi))
            csum = _checked_add(csum, cos(mul(_TWO_PI, xi)))
        term1 = mul(_N20, fxp.exp(mul(_NEG_FIFTH, sqrt(div(ssum, n_fx)))))
        term2 = fxp.exp(div(csum, n_fx))
        acc = _checked_add(term1, -term2)
        acc = _checked_add(acc, _P20)
        return _checked_add(acc, _E)

    return f


def _griewank(n):
    inv_sqrt = [fxp.sqrt(from_int(i + 1)) for i in range(n)]

    def f(x):
        acc = 0
        prod = ONE
        for i, xi in enumerate(x):
            acc = _checked_add(acc, div(mul(xi, xi), _F4000))
            prod = mul(prod, cos(div(xi, inv_sqrt[i])))
        acc = _checked_add(acc, -prod)
        return _checked_add(acc, ONE)

    return f


def _rastrigin(n):
    base = from_int(10 * n)

    def f(x):
        acc = base
        for xi in x:
            acc = _checked_add(acc, mul(xi, xi))
            acc = _checked_add(acc, -mul(_TEN, cos(mul(_TWO_PI, xi))))
        return acc

    return f


def _michalewicz(n):
    idx = [from_int(i + 1) for i in range(n)]

    def f(x):
        acc = 0
        for i, xi in enumerate(x):
            inner = sin(div(mul(idx[i], mul(xi, xi)), _PI))
            acc = _checked_add(acc, -mul(sin(xi), pow_int(inner, 20)))
        return acc

    return f


def _schwefel(n):
    base = from_real(418.9829 * n)

    def f(x):
        acc = base
        for xi in x:
            acc = _checked_add(acc, -mul(xi, sin(sqrt(fabs(xi)))))
        return acc

    return f


def _schwefel_1_2(n):
    def f(x):
        prefix = 0
        acc = 0
        for xi in x:
            prefix = _checked_add(prefix, xi)
            acc = _checked_add(acc, mul(prefix, prefix))
        return acc

    return f


def _schwefel_2_21(n):
    # implemented exactly as printed: max of the coordinates themselves
    def f(x):
        return max(x)

    return f


def _schwefel_2_22(n):
    def f(x):
        s = 0
        prod = ONE
        for xi in x:
            a = fabs(xi)
            s = _checked_add(s, a)
            prod = mul(prod, a)
        return _checked_add(s, prod)

    return f


def _alpine(n):
    def f(x):
        acc = 0
        for xi in x:
            acc = _checked_add(acc, fabs(mul(xi, sin(xi)) + mul(_TENTH, xi)))
        return acc

    return f


def _axis_parallel(n):
    idx = [from_int(i + 1) for i in range(n)]

    def f(x):
        acc = 0
        for i, xi in enumerate(x):
            acc = _checked_add(acc, mul(idx[i], mul(xi, xi)))
        return acc

    return f


def _moved_axis_parallel(n):
    idx = [from_int(5 * (i + 1)) for i in range(n)]

    def f(x):
        acc = 0
        for i, xi in enumerate(x):
            acc = _checked_add(acc, mul(idx[i], mul(xi, xi)))
        return acc

    return f


def _power_sum(n):
    def f(x):
        acc = 0
        for i, xi in enumerate(x):
            acc = _checked_add(acc, pow_int(fabs(xi), i + 2))
        return acc

    return f


def _zakharov(n):
    half_idx = [from_real(0.5 * (i + 1)) for i in range(n)]

    def f(x):
        acc = 0
        s = 0
        for i, xi in enumerate(x):
            acc = _checked_add(acc, mul(xi, xi))
            s = _checked_add(s, mul(half_idx[i], xi))
        s2 = mul(s, s)
        acc = _checked_add(acc, s2)
        return _checked_add(acc, mul(s2, s2))

    return f


@dataclass(frozen=True)
class FunctionSpec:
    name: str
    factory: object
    unimodal: bool
    separable: bool


#: Registry of the benchmark, keyed by the ids used in configs and the CLI.
FUNCTIONS: dict[str, FunctionSpec] = {
    "f1": FunctionSpec("sphere", _sphere, True, True),
    "f2": FunctionSpec("rosenbrock", _rosenbrock, False, False),
    "f3": FunctionSpec("ackley", _ackley, False, False),
    "f4": FunctionSpec("griewank", _griewank, False, False),
    "f5": FunctionSpec("rastrigin", _rastrigin, False, True),
    "f6": FunctionSpec("michalewicz", _michalewicz, False, True),
    "f7": FunctionSpec("schwefel", _schwefel, False, True),
    "f8": FunctionSpec("schwefel_1_2", _schwefel_1_2, True, False),
    "f9": FunctionSpec("schwefel_2_21", _schwefel_2_21, True, False),
    "f10": FunctionSpec("schwefel_2_22", _schwefel_2_22, True, True),
    "f11": FunctionSpec("alpine", _alpine, False, True),
    "f12": FunctionSpec("axis_parallel", _axis_parallel, True, False),
    "f13": FunctionSpec("moved_axis_parallel", _moved_axis_parallel, True, False),
    "f14": FunctionSpec("power_sum", _power_sum, True, False),
    "f15": FunctionSpec("zakharov", _zakharov, True, False),
}


def problem_ids() -> list[str]:
    return list(FUNCTIONS)


@dataclass(frozen=True)
class Problem:
    """An immutable benchmark instance: function id, dimension and box bounds."""

    id: str
    n: int
    lower: int = DEFAULT_LOWER
    upper: int = DEFAULT_UPPER
    unimodal: bool = False
    separable: bool = False
    evaluator: object = None

    @property
    def width(self) -> int:
        return self.upper - self.lower


def make_problem(fid: str, n: int, lower: float = -2.0, upper: float = 2.0) -> Problem:
    if fid not in FUNCTIONS:
        raise ValueError(f"unknown problem id {fid!r}; expected one of f1..f15")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if n > MAX_DIMENSION:
        raise ValueError(
            f"dimension {n} exceeds {MAX_DIMENSION}: a solution plus fitness "
            "must fit the 128-byte radio payload"
        )
    lo, up = from_real(lower), from_real(upper)
    if lo >= up:
        raise ValueError("lower bound must be below upper bound")
    spec = FUNCTIONS[fid]
    return Problem(
        id=fid,
        n=n,
        lower=lo,
        upper=up,
        unimodal=spec.unimodal,
        separable=spec.separable,
        evaluator=spec.factory(n),
    )


@dataclass
class Solution:
    """A candidate point and (optionally) its objective value, both Q16.16 raw."""

    x: list[int]
    fitness: int | None = None

    def copy(self) -> "Solution":
        return Solution(list(self.x), self.fitness)


def evaluate(p: Problem, x: list[int], clamp_overflow: bool = False) -> int:
    """Objective value of ``x`` (raw). Does not touch any evaluation counter.

    With ``clamp_overflow`` a range overflow anywhere in the formula yields the
    maximum representable fitness instead of raising, so search loops can
    discard the point and continue.
    """
    if len(x) != p.n:
        raise ValueError(f"expected {p.n} coordinates, got {len(x)}")
    try:
        return p.evaluator(x)
    except FxOverflowError:
        if clamp_overflow:
            return RAW_MAX
        raise


def wrap_coord(raw: int, lower: int, width: int) -> int:
    return lower + (raw - lower) % width


def toroidal_wrap(x: list[int], p: Problem) -> list[int]:
    """Map every coordinate into [lower, upper), wrapping around the range."""
    lo = p.lower
    w = p.upper - lo
    return [lo + (xi - lo) % w for xi in x]


def random_solution(rng: Rng, p: Problem) -> Solution:
    """Uniform sample of the decision space; fitness left unset."""
    lo, up = p.lower, p.upper
    return Solution([rng.uniform_fx(lo, up) for _ in range(p.n)], None)
