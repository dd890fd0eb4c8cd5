"""Q16.16 fixed-point arithmetic for the mote side of the simulator.

Values are plain Python ints holding the raw signed 32-bit representation:
``value = raw / 65536``. The representable range is [-32768.0, 32767.999985]
with a resolution of 1/65536. Every operation checks its (rounded) result
against that range and raises :class:`FxOverflowError` instead of wrapping.

Rounding is to nearest, ties away from zero. Transcendental functions are
computed over integers with 48 fractional bits internally and rounded once,
which keeps them well inside the repo-wide accuracy contract of 4/65536
against the real-valued functions.
"""

from __future__ import annotations

import hashlib
import math
import random

ONE = 1 << 16
HALF = 1 << 15
RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1

#: Largest/smallest representable values, as floats (for reporting only).
MAX_VALUE = RAW_MAX / ONE
MIN_VALUE = RAW_MIN / ONE

F48 = 1 << 48
_Q48_TO_RAW = 1 << 32

_LN2_Q48 = round(math.log(2.0) * F48)
_PI_Q48 = round(math.pi * F48)
_TWO_PI_Q48 = round(math.tau * F48)
_HALF_PI_Q48 = round((math.pi / 2.0) * F48)
# exp() overflows for arguments past ln(32768); guard a little above it so the
# intermediate shift stays small before the final range check fires.
_EXP_ARG_LIMIT_Q48 = round(10.5 * F48)


class FxOverflowError(ArithmeticError):
    """Exact result of an operation left the representable Q16.16 range."""


class FxDomainError(ValueError):
    """Argument outside the mathematical domain of the function."""


def check(raw: int) -> int:
    """Validate that ``raw`` is a representable Q16.16 value."""
    if raw > RAW_MAX or raw < RAW_MIN:
        raise FxOverflowError(f"raw value {raw} outside Q16.16 range")
    return raw


def rdiv(n: int, d: int) -> int:
    """Divide integers rounding to nearest, ties away from zero. d must be > 0."""
    q, r = divmod(n, d)
    r2 = r << 1
    if r2 > d or (r2 == d and n >= 0):
        q += 1
    return q


def from_real(v: float) -> int:
    """Round a real number to the nearest representable value (ties away)."""
    if v >= 0.0:
        raw = math.floor(v * ONE + 0.5)
    else:
        raw = -math.floor(-v * ONE + 0.5)
    return check(raw)


def from_int(i: int) -> int:
    return check(i * ONE)


def to_real(raw: int) -> float:
    return raw / ONE


def to_str(raw: int) -> str:
    """Decimal rendering with 6 fractional digits; round-trips every raw value."""
    return f"{raw / ONE:.6f}"


def add(a: int, b: int) -> int:
    return check(a + b)


def sub(a: int, b: int) -> int:
    return check(a - b)


def neg(a: int) -> int:
    return check(-a)


def mul(a: int, b: int) -> int:
    p = a * b
    if p >= 0:
        r = (p + HALF) >> 16
    else:
        r = -((-p + HALF) >> 16)
    if r > RAW_MAX or r < RAW_MIN:
        raise FxOverflowError(f"multiplication overflow: {a} * {b}")
    return r


def div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("fixed-point division by zero")
    n = a << 16
    if b < 0:
        n, b = -n, -b
    return check(rdiv(n, b))


def fabs(a: int) -> int:
    return check(-a) if a < 0 else a


def fmin(a: int, b: int) -> int:
    return a if a <= b else b


def fmax(a: int, b: int) -> int:
    return a if a >= b else b


def sqrt(a: int) -> int:
    if a < 0:
        raise FxDomainError("sqrt of negative value")
    n = a << 16
    r = math.isqrt(n)
    # round to nearest: the tie point (r + 0.5)^2 is never an integer
    if n - r * r > r:
        r += 1
    return r


def _int_nth_root(m: int, k: int) -> int:
    """Floor of the integer k-th root of m >= 0."""
    if m < 2:
        return m
    if k == 2:
        return math.isqrt(m)
    r = 1 << -(-m.bit_length() // k)  # upper seed
    while True:
        nxt = ((k - 1) * r + m // r ** (k - 1)) // k
        if nxt >= r:
            break
        r = nxt
    while r ** k > m:
        r -= 1
    return r


def nth_root(a: int, k: int) -> int:
    if k < 1:
        raise FxDomainError("root order must be >= 1")
    if k == 1:
        return a
    if a < 0:
        if k % 2 == 0:
            raise FxDomainError("even root of negative value")
        return -nth_root(-a, k)
    if a == 0:
        return 0
    m = a * ONE ** (k - 1)
    r = _int_nth_root(m, k)
    if (2 * r + 1) ** k <= (m << k):
        r += 1
    return check(r)


def pow_int(a: int, e: int) -> int:
    """Integer exponentiation by squaring (no log/exp path)."""
    if e == 0:
        return ONE
    if e < 0:
        return div(ONE, pow_int(a, -e))
    result = ONE
    base = a
    while True:
        if e & 1:
            result = mul(result, base)
        e >>= 1
        if not e:
            return result
        base = mul(base, base)


def exp_q48(x_q48: int) -> int:
    """e**x for a Q.48 argument, returned in Q.48 (0 when it underflows)."""
    if x_q48 > _EXP_ARG_LIMIT_Q48:
        raise FxOverflowError("exp argument too large")
    if x_q48 < -34 * F48:  # far below representable resolution
        return 0
    k = rdiv(x_q48, _LN2_Q48)
    r = x_q48 - k * _LN2_Q48
    acc = F48
    term = F48
    for i in range(1, 9):
        term = term * r // (F48 * i)
        if term == 0:
            break
        acc += term
    if k >= 0:
        return acc << k
    return rdiv(acc, 1 << -k)


def ln_q48(raw: int) -> int:
    """Natural log of a positive Q16.16 raw value, returned in Q.48."""
    if raw <= 0:
        raise FxDomainError("log of non-positive value")
    e = raw.bit_length() - 17
    m = raw << (32 - e)  # mantissa in [1, 2) as Q.48
    s = rdiv((m - F48) << 48, m + F48)
    s2 = (s * s) >> 48
    term = s
    acc = 0
    i = 1
    while term and i <= 19:
        acc += term // i
        term = (term * s2) >> 48
        i += 2
    return 2 * acc + e * _LN2_Q48


def exp(a: int) -> int:
    return check(rdiv(exp_q48(a << 32), _Q48_TO_RAW))


def log(a: int) -> int:
    return check(rdiv(ln_q48(a), _Q48_TO_RAW))


def _sin_core_q48(r: int) -> int:
    # degree-13 series on |r| <= pi/2, nested divisors 2*3, 4*5, ... 12*13
    r2 = (r * r) >> 48
    acc = F48
    for d in (156, 110, 72, 42, 20, 6):
        acc = F48 - (r2 * acc // d >> 48)
    return r * acc >> 48


def _reduce_to_pi_q48(x_q48: int) -> int:
    k = rdiv(x_q48, _TWO_PI_Q48)
    return x_q48 - k * _TWO_PI_Q48


def _sin_q48(x_q48: int) -> int:
    r = _reduce_to_pi_q48(x_q48)
    if r > _HALF_PI_Q48:
        r = _PI_Q48 - r
    elif r < -_HALF_PI_Q48:
        r = -_PI_Q48 - r
    return _sin_core_q48(r)


def sin(a: int) -> int:
    return check(rdiv(_sin_q48(a << 32), _Q48_TO_RAW))


def cos(a: int) -> int:
    return check(rdiv(_sin_q48(_HALF_PI_Q48 - (a << 32)), _Q48_TO_RAW))


def powf(a: int, b: int) -> int:
    """General power a**b.

    Integer-valued exponents take the exact squaring path (valid for any a);
    fractional exponents require a > 0 and go through exp/log in Q.48.
    """
    if b % ONE == 0:
        return pow_int(a, b // ONE)
    if a <= 0:
        raise FxDomainError("fractional power of non-positive base")
    t = rdiv((b << 32) * ln_q48(a), F48)
    return check(rdiv(exp_q48(t), _Q48_TO_RAW))


class Rng:
    """Deterministic, seedable, splittable random stream.

    ``split(label)`` derives an independent child stream from the parent's
    seed material and the label only (not from the parent's draw position),
    so per-node / per-purpose streams are stable regardless of consumption
    order. Backed by :class:`random.Random` (Mersenne Twister), whose core
    generator is stable across CPython releases.
    """

    __slots__ = ("_key", "_r")

    def __init__(self, seed: int | str | bytes):
        if isinstance(seed, int):
            key = str(seed).encode()
        elif isinstance(seed, str):
            key = seed.encode()
        else:
            key = bytes(seed)
        self._key = key
        self._r = random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))

    def split(self, label: str) -> "Rng":
        return Rng(self._key + b"/" + label.encode())

    def random(self) -> float:
        return self._r.random()

    def randint(self, a: int, b: int) -> int:
        return self._r.randint(a, b)

    def choice(self, seq):
        return seq[self._r.randrange(len(seq))]

    def uniform_fx(self, a: int, b: int) -> int:
        """Uniform draw over the representable values in [a, b] (raw bounds)."""
        if a > b:
            raise ValueError("lower bound above upper bound")
        return self._r.randint(a, b)


def rand_uniform(rng: Rng, a: int, b: int) -> int:
    return rng.uniform_fx(a, b)
