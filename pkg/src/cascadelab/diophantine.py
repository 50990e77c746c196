"""Continued fractions and certified approximability of the aspect frequency.

The frequency omega >= 1 is always represented by its continued-fraction
digit list, never by a bare float.  A digit prefix pins omega into the
exact rational interval spanned by its last two convergents, so every
certification below reduces to comparisons between exact rationals and
directed-rounding interval evaluations at 128-bit precision.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .errors import CapacityExceeded, InvalidInput, NoConvergentInRange

# Exact integers may grow well past 128 bits before we call a halt.
INT_CAPACITY = 1 << 256

_IV_PREC = 128


@contextmanager
def _ivprec(prec=_IV_PREC):
    old = mpmath.iv.prec
    mpmath.iv.prec = prec
    try:
        yield mpmath.iv
    finally:
        mpmath.iv.prec = old


def _mpf_to_fraction(x) -> Fraction:
    # int() strips the gmpy2 mpz types mpmath uses internally; Fraction
    # arithmetic chokes on them.
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    fr = Fraction(int(man)) * Fraction(2) ** int(exp)
    return -fr if sign else fr


def _iv_fraction(fr: Fraction):
    # Correctly rounded interval enclosure of an exact rational.
    return mpmath.iv.mpf(fr.numerator) / mpmath.iv.mpf(fr.denominator)


@dataclass(frozen=True)
class Convergent:
    """Exact convergent p/q at a given digit index."""

    index: int
    p: int
    q: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


@dataclass(frozen=True)
class ContinuedFraction:
    """A frequency given by continued-fraction digits [a0; a1, a2, ...].

    ``exact`` marks a finite expansion of a rational number.  For a
    truncated expansion of an irrational, the true value lies strictly
    between the last two convergents, which is the enclosure used by all
    rigorous comparisons.
    """

    digits: tuple[int, ...]
    exact: bool = False

    def __post_init__(self):
        if not self.digits:
            raise InvalidInput("empty digit list")
        if any(int(a) != a or a < 1 for a in self.digits):
            raise InvalidInput("continued-fraction digits must be integers >= 1")
        if not self.exact and len(self.digits) < 2:
            raise InvalidInput("a truncated expansion needs at least two digits")

    def convergents(self, count: int | None = None) -> list[Convergent]:
        """Convergents by the standard recurrence, with capacity checks."""
        limit = len(self.digits) if count is None else min(count, len(self.digits))
        out = []
        p_prev, q_prev = 1, 0
        p, q = self.digits[0], 1
        out.append(Convergent(0, p, q))
        for i in range(1, limit):
            a = self.digits[i]
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
            if q > INT_CAPACITY or p > INT_CAPACITY:
                raise CapacityExceeded(f"convergent {i} exceeds integer capacity")
            out.append(Convergent(i, p, q))
        return out

    def enclosure(self) -> tuple[Fraction, Fraction]:
        """Exact rational interval guaranteed to contain the frequency."""
        convs = self.convergents()
        if self.exact:
            v = convs[-1].value
            return (v, v)
        lo, hi = convs[-2].value, convs[-1].value
        return (lo, hi) if lo <= hi else (hi, lo)

    def to_float(self) -> float:
        lo, hi = self.enclosure()
        return float((lo + hi) / 2)


def expand(x, depth: int, dps: int | None = None) -> ContinuedFraction:
    """Continued-fraction digits of ``x >= 1`` up to ``depth + 1`` digits.

    ``x`` may be an int, float, Fraction, decimal string, or one of the
    named constants "golden" and "sqrt2".  Exact inputs (including floats,
    which are exact binary rationals) terminate early when the expansion
    ends.  Named constants are expanded from a precision interval wide
    enough that every returned digit is certified.
    """
    if depth < 0:
        raise InvalidInput("depth must be >= 0")
    working_dps = dps or max(60, 40 + 2 * depth)
    if isinstance(x, str):
        name = x.strip().lower()
        with mpmath.workdps(working_dps):
            if name == "golden":
                v = (1 + mpmath.sqrt(5)) / 2
            elif name == "sqrt2":
                v = mpmath.sqrt(2)
            else:
                try:
                    return expand(Fraction(x), depth, dps)
                except ValueError:
                    raise InvalidInput(f"unknown frequency constant {x!r}") from None
            fr = _mpf_to_fraction(v)
            pad = Fraction(1, 10 ** (working_dps - 5))
        return _expand_interval(fr - pad, fr + pad, depth)
    if isinstance(x, float):
        x = Fraction(x)
    if isinstance(x, int):
        x = Fraction(x)
    if isinstance(x, Fraction):
        return _expand_interval(x, x, depth)
    if isinstance(x, mpmath.mpf):
        return _expand_interval(_mpf_to_fraction(x), _mpf_to_fraction(x), depth)
    raise InvalidInput(f"cannot expand object of type {type(x).__name__}")


def _expand_interval(lo: Fraction, hi: Fraction, depth: int) -> ContinuedFraction:
    """Digits certified for every value in [lo, hi] (Euclid on both ends)."""
    if lo < 1:
        raise InvalidInput("frequency must be >= 1")
    digits = []
    exact = False
    a_lo, a_hi = lo, hi
    for _ in range(depth + 1):
        f_lo, f_hi = math.floor(a_lo), math.floor(a_hi)
        if f_lo != f_hi:
            break
        digits.append(int(f_lo))
        r_lo, r_hi = a_lo - f_lo, a_hi - f_hi
        if r_lo == 0 and r_hi == 0:
            exact = True
            break
        if r_lo == 0 or r_hi == 0:
            break
        # reciprocation swaps the interval ends
        a_lo, a_hi = 1 / r_hi, 1 / r_lo
    if len(digits) < depth + 1 and not exact:
        raise InvalidInput(
            f"only {len(digits)} digits certifiable at this precision; "
            f"raise dps to reach depth {depth}"
        )
    # Canonical form: a finite expansion never ends in 1 (unless trivial).
    if exact and len(digits) > 1 and digits[-1] == 1:
        digits[-2] += 1
        digits.pop()
    return ContinuedFraction(tuple(digits), exact=exact)


@dataclass(frozen=True)
class ApproxFunction:
    """Approximation rate psi against which convergents are certified.

    kind = "log"    psi(q) = 1 / (q * log q)      (q >= 2)
    kind = "power"  psi(q) = c / q**(1 + tau)

    Both have q * psi(q) decreasing, as the selection arguments require.
    """

    kind: str
    c: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.kind not in ("log", "power"):
            raise InvalidInput(f"unknown approximation kind {self.kind!r}")
        if self.c <= 0 or self.tau <= 0:
            raise InvalidInput("approximation parameters must be positive")

    def psi(self, q: int) -> float:
        if q < 1:
            raise InvalidInput("psi is defined for q >= 1")
        if self.kind == "log":
            if q == 1:
                return math.inf
            return 1.0 / (q * math.log(q))
        return self.c / float(q) ** (1.0 + self.tau)

    def psi_over_q_iv(self, q: int):
        """Directed-rounding enclosure of psi(q)/q at 128-bit precision."""
        iv = mpmath.iv
        qi = iv.mpf(q)
        if self.kind == "log":
            if q == 1:
                return iv.mpf("inf")
            return 1 / (qi * qi * iv.log(qi))
        expo = iv.mpf(2.0) + iv.mpf(self.tau)
        return iv.mpf(self.c) * iv.exp(-expo * iv.log(qi))


def certify(cf: ContinuedFraction, conv, psi: ApproxFunction) -> bool:
    """Rigorously decide |omega - p/q| <= psi(q)/q.

    Returns True only when the inequality is certain for every frequency
    in the digit-list enclosure; an indeterminate comparison (possible
    only within a sliver of width ~2**-128) reports False.
    """
    p, q = (conv.p, conv.q) if isinstance(conv, Convergent) else (int(conv[0]), int(conv[1]))
    if q < 1:
        raise InvalidInput("q must be >= 1")
    lo, hi = cf.enclosure()
    target = Fraction(p, q)
    if target < lo:
        err_hi = hi - target
    elif target > hi:
        err_hi = target - lo
    else:
        err_hi = max(hi - target, target - lo)
    with _ivprec():
        if psi.kind == "log" and q == 1:
            return True
        bound = psi.psi_over_q_iv(q)
        err_iv = _iv_fraction(err_hi)
        return bool(err_iv.b <= bound.a)


def approximation_error(cf: ContinuedFraction, conv) -> tuple[Fraction, Fraction]:
    """Exact rational bounds [lo, hi] for |omega - p/q| from the enclosure."""
    p, q = (conv.p, conv.q) if isinstance(conv, Convergent) else (int(conv[0]), int(conv[1]))
    e_lo, e_hi = cf.enclosure()
    target = Fraction(p, q)
    if target < e_lo:
        return (e_lo - target, e_hi - target)
    if target > e_hi:
        return (target - e_hi, target - e_lo)
    return (Fraction(0), max(e_hi - target, target - e_lo))


def lower_bound_ok(cf: ContinuedFraction, conv) -> bool | None:
    """Check |omega - p/q| >= q**-(1 + log q) on one emitted convergent.

    Returns True/False when the enclosure decides it, None when the
    enclosure is too tight to tell (the convergent sits at its edge).
    This is a recorded diagnostic: small q can fail it legitimately.
    """
    q = conv.q if isinstance(conv, Convergent) else int(conv[1])
    err_lo, err_hi = approximation_error(cf, conv)
    with _ivprec() as iv:
        qi = iv.mpf(q)
        thr = iv.exp(-(1 + iv.log(qi)) * iv.log(qi)) if q > 1 else iv.mpf(1.0)
        lo_iv = _iv_fraction(err_lo)
        hi_iv = _iv_fraction(err_hi)
        if lo_iv.a >= thr.b:
            return True
        if hi_iv.b < thr.a:
            return False
    return None


def monza_bracket_ok(conv, cf: ContinuedFraction) -> bool:
    """Check the certified-convergent bracket omega*q/2 <= p <= 2*omega*q."""
    p, q = (conv.p, conv.q) if isinstance(conv, Convergent) else (int(conv[0]), int(conv[1]))
    lo, hi = cf.enclosure()
    return lo * q <= 2 * p and p <= 2 * hi * q


def synthesize(psi: ApproxFunction, seed: int | None, depth: int) -> ContinuedFraction:
    """Build digits so that every level is a certified psi-convergent.

    For the power kind the digit floor a_{n+1} >= q_n**tau / c guarantees
    q_{n+1} >= 1/psi(q_n), hence |omega - p_n/q_n| < 1/(q_n q_{n+1})
    <= psi(q_n)/q_n at every level that has a successor digit.  Whenever
    the window up to the growth cap q_{n+1} <= q_n**(log q_n) is nonempty
    the digit stays inside it; below that scale the cap is unenforceable
    and is skipped.  Digit freedom above the floor is drawn from a
    deterministic generator keyed by ``seed`` (``None`` always takes the
    lowest admissible digit).
    """
    if psi.kind != "power":
        raise InvalidInput("synthesis is defined for the power kind only")
    if depth < 1:
        raise InvalidInput("depth must be >= 1")
    rng = None
    if seed is not None:
        import numpy as np

        rng = np.random.Generator(np.random.PCG64(seed))

    def draw(lo: int, hi: int) -> int:
        if rng is None or hi <= lo:
            return lo
        # any admissible digit works; cap the window to the generator range
        span = min(hi - lo, 2**62)
        return lo + int(rng.integers(0, span + 1))

    digits = [draw(1, 2)]
    p_prev, q_prev = 1, 0
    p, q = digits[0], 1
    with _ivprec() as iv:
        for _ in range(depth):
            # rigorous ceiling of q**tau / c (round the enclosure up)
            qi = iv.mpf(q)
            need = iv.exp(iv.mpf(psi.tau) * iv.log(qi)) / iv.mpf(psi.c) if q > 1 else iv.mpf(1.0) / iv.mpf(psi.c)
            a_min = max(1, math.ceil(_mpf_to_fraction(need.b)))
            a_max = None
            if q > 1:
                cap = iv.exp(iv.log(qi) * iv.log(qi))  # q**(log q)
                cap_floor = math.floor(_mpf_to_fraction(cap.a))
                a_cap = (cap_floor - q_prev) // q
                if a_cap >= a_min:
                    a_max = a_cap
            spread = a_min  # keeps q_{n+1} within a factor ~2 of its floor
            hi = a_min + spread if a_max is None else min(a_min + spread, a_max)
            a = draw(a_min, hi)
            digits.append(a)
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
            if q > INT_CAPACITY or p > INT_CAPACITY:
                raise CapacityExceeded(
                    f"synthesized q exceeds integer capacity at level {len(digits) - 1}"
                )
    return ContinuedFraction(tuple(digits), exact=False)


@dataclass(frozen=True)
class ScalingSelection:
    """Outcome of scanning certified convergents for a usable scaling."""

    convergent: Convergent
    omega: float
    L: float
    L_min: float
    assumption_lhs: float
    c_assumption: float
    level: int
    lower_bound_diag: bool | None

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "p": self.convergent.p,
            "q": self.convergent.q,
            "omega": self.omega,
            "L": self.L,
            "L_min": self.L_min,
            "assumption_lhs": self.assumption_lhs,
            "c_assumption": self.c_assumption,
            "lower_bound_diag": self.lower_bound_diag,
        }


def select_scaling(
    cf: ContinuedFraction,
    psi: ApproxFunction,
    *,
    L_min: float,
    N: int,
    R: float,
    sup_V: float = 0.0,
    c_assumption: float = 0.125,
    q_min: int = 2,
) -> ScalingSelection:
    """Smallest-q certified convergent meeting the spectral-gap targets.

    Conditions, checked in increasing q:
      1. certify(omega, p/q, psi) holds rigorously;
      2. L = omega^2 q^2 / 8 - 4 sup|V| >= L_min (enclosure lower bound);
      3. 3**(2N) R^2 psi(q)/q <= c_assumption (enclosure upper bound).
    Raises NoConvergentInRange when the digit list is exhausted, naming
    the condition that blocked the largest certified level.
    """
    if L_min < 0 or N < 2 or R <= 0:
        raise InvalidInput("need L_min >= 0, N >= 2, R > 0")
    omega_lo, omega_hi = cf.enclosure()
    omega_mid = float((omega_lo + omega_hi) / 2)
    blocked = "no certified convergent with q >= q_min"
    for conv in cf.convergents():
        if conv.q < q_min:
            continue
        if not certify(cf, conv, psi):
            blocked = f"certification failed at level {conv.index} (q={conv.q})"
            continue
        L_lo = float(omega_lo) ** 2 * conv.q**2 / 8.0 - 4.0 * sup_V
        if L_lo < L_min:
            blocked = f"L={L_lo:.6g} < L_min at level {conv.index} (q={conv.q})"
            continue
        with _ivprec() as iv:
            lhs = iv.mpf(3) ** (2 * N) * iv.mpf(R) ** 2 * psi.psi_over_q_iv(conv.q)
            lhs_hi = float(lhs.b)
        if lhs_hi > c_assumption:
            blocked = (
                f"assumption lhs {lhs_hi:.6g} > c at level {conv.index} (q={conv.q})"
            )
            continue
        return ScalingSelection(
            convergent=conv,
            omega=omega_mid,
            L=L_lo,
            L_min=L_min,
            assumption_lhs=lhs_hi,
            c_assumption=c_assumption,
            level=conv.index,
            lower_bound_diag=lower_bound_ok(cf, conv),
        )
    raise NoConvergentInRange(blocked)
