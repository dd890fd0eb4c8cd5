"""Independent oracles used by the test-suite.

Two families:

* ``REAL[...]`` — the benchmark formulas computed straightforwardly in double
  precision on real inputs. Used for known optima, plateau values and
  well-conditioned comparisons.

* ``FIXED[...]`` — an independent re-implementation of the Q16.16 evaluation
  semantics built on :mod:`fractions` (exact rationals for +,-,*,/ with
  round-to-nearest ties-away) and :mod:`mpmath` at 80-bit precision for the
  transcendental steps. This checks the integer arithmetic in the package
  without sharing any code with it.
"""

import math
from fractions import Fraction

import mpmath

mpmath.mp.prec = 80

ONE = 65536


def rnd(fr) -> int:
    """Round a Fraction or mpf to the nearest int, ties away from zero."""
    if isinstance(fr, Fraction):
        n, d = fr.numerator, fr.denominator
        if n >= 0:
            return (2 * n + d) // (2 * d)
        return -((-2 * n + d) // (2 * d))
    return int(mpmath.floor(fr + mpmath.mpf("0.5"))) if fr >= 0 else -int(
        mpmath.floor(-fr + mpmath.mpf("0.5"))
    )


def fmul(a: int, b: int) -> int:
    return rnd(Fraction(a * b, ONE))


def fdiv(a: int, b: int) -> int:
    return rnd(Fraction(a * ONE, b))


def _trans(fn):
    def wrapped(a: int) -> int:
        return rnd(fn(mpmath.mpf(a) / ONE) * ONE)

    return wrapped


fsin = _trans(mpmath.sin)
fcos = _trans(mpmath.cos)
fexp = _trans(mpmath.exp)
fsqrt = _trans(mpmath.sqrt)


def fpow_int(a: int, e: int) -> int:
    # mirrors exponentiation by squaring so rounding sequences agree
    result, base = ONE, a
    if e == 0:
        return ONE
    while True:
        if e & 1:
            result = fmul(result, base)
        e >>= 1
        if not e:
            return result
        base = fmul(base, base)


def c(v: float) -> int:
    if v >= 0:
        return math.floor(v * ONE + 0.5)
    return -math.floor(-v * ONE + 0.5)


TWO_PI = c(math.tau)
PI = c(math.pi)
E = c(math.e)


def fx_sphere(x, n):
    return sum(fmul(v, v) for v in x)


def fx_rosenbrock(x, n):
    acc = 0
    for i in range(n - 1):
        t = x[i + 1] - fmul(x[i], x[i])
        u = ONE - x[i]
        acc += fmul(100 * ONE, fmul(t, t)) + fmul(u, u)
    return acc


def fx_ackley(x, n):
    ssum = sum(fmul(v, v) for v in x)
    csum = sum(fcos(fmul(TWO_PI, v)) for v in x)
    t1 = fmul(-20 * ONE, fexp(fmul(c(-0.2), fsqrt(fdiv(ssum, n * ONE)))))
    t2 = fexp(fdiv(csum, n * ONE))
    return t1 - t2 + 20 * ONE + E


def fx_griewank(x, n):
    acc = 0
    prod = ONE
    for i, v in enumerate(x):
        acc += fdiv(fmul(v, v), 4000 * ONE)
        prod = fmul(prod, fcos(fdiv(v, fsqrt((i + 1) * ONE))))
    return acc - prod + ONE


def fx_rastrigin(x, n):
    acc = 10 * n * ONE
    for v in x:
        acc += fmul(v, v) - fmul(10 * ONE, fcos(fmul(TWO_PI, v)))
    return acc


def fx_michalewicz(x, n):
    acc = 0
    for i, v in enumerate(x):
        inner = fsin(fdiv(fmul((i + 1) * ONE, fmul(v, v)), PI))
        acc -= fmul(fsin(v), fpow_int(inner, 20))
    return acc


def fx_schwefel(x, n):
    acc = c(418.9829 * n)
    for v in x:
        acc -= fmul(v, fsin(fsqrt(abs(v))))
    return acc


def fx_schwefel_1_2(x, n):
    prefix = 0
    acc = 0
    for v in x:
        prefix += v
        acc += fmul(prefix, prefix)
    return acc


def fx_schwefel_2_21(x, n):
    return max(x)


def fx_schwefel_2_22(x, n):
    s = sum(abs(v) for v in x)
    prod = ONE
    for v in x:
        prod = fmul(prod, abs(v))
    return s + prod


def fx_alpine(x, n):
    return sum(abs(fmul(v, fsin(v)) + fmul(c(0.1), v)) for v in x)


def fx_axis_parallel(x, n):
    return sum(fmul((i + 1) * ONE, fmul(v, v)) for i, v in enumerate(x))


def fx_moved_axis_parallel(x, n):
    return sum(fmul(5 * (i + 1) * ONE, fmul(v, v)) for i, v in enumerate(x))


def fx_power_sum(x, n):
    return sum(fpow_int(abs(v), i + 2) for i, v in enumerate(x))


def fx_zakharov(x, n):
    acc = sum(fmul(v, v) for v in x)
    s = 0
    for i, v in enumerate(x):
        s += fmul(c(0.5 * (i + 1)), v)
    s2 = fmul(s, s)
    return acc + s2 + fmul(s2, s2)


FIXED = {
    "f1": fx_sphere,
    "f2": fx_rosenbrock,
    "f3": fx_ackley,
    "f4": fx_griewank,
    "f5": fx_rastrigin,
    "f6": fx_michalewicz,
    "f7": fx_schwefel,
    "f8": fx_schwefel_1_2,
    "f9": fx_schwefel_2_21,
    "f10": fx_schwefel_2_22,
    "f11": fx_alpine,
    "f12": fx_axis_parallel,
    "f13": fx_moved_axis_parallel,
    "f14": fx_power_sum,
    "f15": fx_zakharov,
}


# --- plain double-precision formulas on real inputs


def re_sphere(x, n):
    return sum(v * v for v in x)


def re_rosenbrock(x, n):
    return sum(
        100.0 * (x[i + 1] - x[i] ** 2) ** 2 + (1.0 - x[i]) ** 2 for i in range(n - 1)
    )


def re_ackley(x, n):
    ssum = sum(v * v for v in x) / n
    csum = sum(math.cos(math.tau * v) for v in x) / n
    return -20.0 * math.exp(-0.2 * math.sqrt(ssum)) - math.exp(csum) + 20.0 + math.e


def re_griewank(x, n):
    prod = 1.0
    for i, v in enumerate(x):
        prod *= math.cos(v / math.sqrt(i + 1))
    return sum(v * v for v in x) / 4000.0 - prod + 1.0


def re_rastrigin(x, n):
    return 10.0 * n + sum(v * v - 10.0 * math.cos(math.tau * v) for v in x)


def re_michalewicz(x, n):
    return -sum(
        math.sin(v) * math.sin((i + 1) * v * v / math.pi) ** 20 for i, v in enumerate(x)
    )


def re_schwefel(x, n):
    return 418.9829 * n + sum(-v * math.sin(math.sqrt(abs(v))) for v in x)


def re_schwefel_1_2(x, n):
    acc = 0.0
    prefix = 0.0
    for v in x:
        prefix += v
        acc += prefix * prefix
    return acc


def re_schwefel_2_21(x, n):
    return max(x)


def re_schwefel_2_22(x, n):
    prod = 1.0
    for v in x:
        prod *= abs(v)
    return sum(abs(v) for v in x) + prod


def re_alpine(x, n):
    return sum(abs(v * math.sin(v) + 0.1 * v) for v in x)


def re_axis_parallel(x, n):
    return sum((i + 1) * v * v for i, v in enumerate(x))


def re_moved_axis_parallel(x, n):
    return sum(5 * (i + 1) * v * v for i, v in enumerate(x))


def re_power_sum(x, n):
    return sum(abs(v) ** (i + 2) for i, v in enumerate(x))


def re_zakharov(x, n):
    s = sum(0.5 * (i + 1) * v for i, v in enumerate(x))
    return sum(v * v for v in x) + s**2 + s**4


REAL = {
    "f1": re_sphere,
    "f2": re_rosenbrock,
    "f3": re_ackley,
    "f4": re_griewank,
    "f5": re_rastrigin,
    "f6": re_michalewicz,
    "f7": re_schwefel,
    "f8": re_schwefel_1_2,
    "f9": re_schwefel_2_21,
    "f10": re_schwefel_2_22,
    "f11": re_alpine,
    "f12": re_axis_parallel,
    "f13": re_moved_axis_parallel,
    "f14": re_power_sum,
    "f15": re_zakharov,
}
