"""Jack polynomial specializations in signed log space.

Only the principal (``a^N``) and Plancherel (``r_s``) specializations are
supported, together with the one-variable skew polynomials ``J_{lam/mu}(a^1)``.
Every function returns a :class:`LogValue`; exact zeros (interlacing or length
indicators) are carried as ``sign == 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy.special import gammasgn

from .partitions import InvalidBox, Partition, box_stats, conjugate, interlaces

_POLE_TOL = 1e-9


class SingularEvaluation(ArithmeticError):
    """A gamma ratio has an uncancelled pole in its numerator."""


@dataclass(frozen=True)
class LogValue:
    log_abs: float
    sign: int

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, 0)

    @classmethod
    def one(cls) -> "LogValue":
        return cls(0.0, 1)

    @classmethod
    def from_float(cls, x: float) -> "LogValue":
        if x == 0:
            return cls.zero()
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __float__(self) -> float:
        return 0.0 if self.sign == 0 else self.sign * math.exp(self.log_abs)

    value = property(__float__)

    def __mul__(self, other: "LogValue") -> "LogValue":
        if self.sign == 0 or other.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_abs + other.log_abs, self.sign * other.sign)

    def __truediv__(self, other: "LogValue") -> "LogValue":
        if other.sign == 0:
            raise ZeroDivisionError("division by an exact zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.log_abs - other.log_abs, self.sign * other.sign)

    def __pow__(self, k: int) -> "LogValue":
        if self.sign == 0:
            return LogValue.one() if k == 0 else LogValue.zero()
        return LogValue(self.log_abs * k, self.sign ** (k % 2) if self.sign < 0 else 1)


def log_product(values: Iterable[LogValue]) -> LogValue:
    out = LogValue.one()
    for v in values:
        out = out * v
    return out


def _pole_order(x: float) -> int | None:
    r = round(x)
    if r <= 0 and abs(x - r) < _POLE_TOL:
        return -r
    return None


def log_gamma_ratio(num: Sequence[float], den: Sequence[float]) -> LogValue:
    """``prod Gamma(num) / prod Gamma(den)`` with simple poles cancelled pairwise.

    A pole of ``Gamma`` at ``-m`` is replaced by its residue ``(-1)^m / m!``;
    the ratio is finite when numerator and denominator carry the same number
    of poles, zero when the denominator carries more.
    """
    log_abs = 0.0
    sign = 1
    poles = 0
    for args, direction in ((num, 1), (den, -1)):
        for x in args:
            m = _pole_order(x)
            if m is None:
                log_abs += direction * math.lgamma(x)
                sign *= int(gammasgn(x))
            else:
                poles += direction
                log_abs -= direction * math.lgamma(m + 1)
                sign *= -1 if m % 2 else 1
    if poles > 0:
        raise SingularEvaluation(f"Gamma ratio {num}/{den} has a pole")
    if poles < 0:
        return LogValue.zero()
    return LogValue(log_abs, sign)


def gamma_ratio_f(z: float, theta: float) -> LogValue:
    """``f(z) = Gamma(z+1) / Gamma(z+theta)``."""
    return log_gamma_ratio([z + 1.0], [z + theta])


def _log_pochhammer(b: float, n: int) -> float:
    # b > 0 on every call site
    return sum(math.log(b + m) for m in range(n))


def log_J_principal(lam: Partition, N: int, a: float, theta: float) -> LogValue:
    """``J_lam(a^N)``, zero when ``lam`` has more than ``N`` parts."""
    if len(lam) > N:
        return LogValue.zero()
    conj = conjugate(lam)
    total = lam.weight * math.log(a)
    for i, j in lam.boxes():
        b = box_stats(lam, i, j, conj)
        total += math.log(N * theta + b.coarm - theta * b.coleg)
        total -= math.log(b.arm + theta * b.leg + theta)
    return LogValue(total, 1)


def log_J_plancherel(lam: Partition, s: float, theta: float) -> LogValue:
    """``J_lam(r_s) = (s theta)^|lam| prod 1/(a + theta l + theta)``."""
    if lam.weight == 0:
        return LogValue.one()
    if s == 0:
        return LogValue.zero()
    conj = conjugate(lam)
    total = lam.weight * math.log(s * theta)
    for i, j in lam.boxes():
        b = box_stats(lam, i, j, conj)
        total -= math.log(b.arm + theta * b.leg + theta)
    return LogValue(total, 1)


def log_dual_factor(lam: Partition, theta: float) -> LogValue:
    """Constant with ``J~_lam = J_lam * dual_factor(lam)``."""
    conj = conjugate(lam)
    total = 0.0
    for i, j in lam.boxes():
        b = box_stats(lam, i, j, conj)
        total += math.log(b.arm + theta * b.leg + theta) - math.log(b.arm + theta * b.leg + 1)
    return LogValue(total, 1)


def log_skew_J_one(lam: Partition, mu: Partition, a: float, theta: float) -> LogValue:
    """One-variable skew Jack polynomial ``J_{lam/mu}(a^1)`` (Pochhammer form)."""
    if not interlaces(mu, lam):
        return LogValue.zero()
    # k = len(lam) would drop the factor carrying mu_k when len(mu) == len(lam)
    k = len(lam) + 1
    total = (lam.weight - mu.weight) * math.log(a)
    for j in range(1, k):
        n = mu.row(j) - lam.row(j + 1)
        if n == 0:
            continue
        for i in range(1, j + 1):
            d_mu = mu.row(i) - mu.row(j) + theta * (j - i)
            d_lam = lam.row(i) - mu.row(j) + theta * (j - i)
            total += _log_pochhammer(d_mu + theta, n) - _log_pochhammer(d_mu + 1, n)
            total += _log_pochhammer(d_lam + 1, n) - _log_pochhammer(d_lam + theta, n)
    return LogValue(total, 1)


def log_skew_J_single_box_dual(mu: Partition, i: int, theta: float, a: float = 1.0) -> LogValue:
    """``J~_{lam/mu}(a^1)`` for ``lam = mu`` plus the box ``(i, mu_i + 1)``."""
    if i < 1 or (i > 1 and mu.row(i - 1) == mu.row(i)):
        raise InvalidBox(f"cannot add a box to row {i} of {mu}")
    j = mu.row(i) + 1
    total = math.log(a * theta)
    for r in range(1, i):
        arm = mu.row(r) - j
        total += math.log(arm + theta * (i - r + 1)) - math.log(arm + theta * (i - r))
        total += math.log(arm + 1 + theta * (i - r - 1)) - math.log(arm + 1 + theta * (i - r))
    return LogValue(total, 1)


@dataclass(frozen=True)
class Principal:
    """Specialization ``a^N``: ``N`` variables equal to ``a``."""

    N: int
    a: float = 1.0


@dataclass(frozen=True)
class Plancherel:
    """Plancherel specialization ``r_s``."""

    s: float


def log_H(rho1: Principal | Plancherel, rho2: Principal | Plancherel, theta: float) -> float:
    """``log H_theta(rho1; rho2)`` for a principal/Plancherel pair (either order)."""
    kinds = {type(rho1), type(rho2)}
    if kinds != {Principal, Plancherel}:
        raise ValueError(f"unsupported specialization pair {rho1!r}, {rho2!r}")
    p = rho1 if isinstance(rho1, Principal) else rho2
    r = rho2 if isinstance(rho2, Plancherel) else rho1
    # p_1(a^N) = N a, p_1(r_s) = s, p_k(r_s) = 0 for k >= 2
    return theta * r.s * p.N * p.a
