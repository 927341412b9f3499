# extended_real.py
"""Reais de faixa estendida: mantissa em [1, 2) com sinal e expoente binário inteiro.

Necessário porque e^{-delta^{-alpha}} sai da faixa do float64 bem antes dos
deltas que interessam. Só o necessário para acumular produtos, somas e logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

# ln 2 em duas partes (Cody-Waite): k * LN2_HI é exato para |k| < 2**20
LN2_HI = 6.93147180369123816490e-01
LN2_LO = 1.90821492927058770002e-10
LN2 = math.log(2.0)
LOG10_2 = math.log10(2.0)


def _normalize(mantissa: float, scale: int) -> tuple[float, int]:
    if mantissa == 0.0:
        return 0.0, 0
    if not math.isfinite(mantissa):
        raise ValueError(f"mantissa não finita: {mantissa}")
    fm, fe = math.frexp(mantissa)
    return 2.0 * fm, scale + fe - 1


@total_ordering
@dataclass(frozen=True)
class ExtendedReal:
    mantissa: float = 0.0
    scale: int = 0

    # --------- Construtores ----------
    @classmethod
    def of(cls, mantissa: float, scale: int = 0) -> ExtendedReal:
        m, s = _normalize(float(mantissa), int(scale))
        return cls(m, s)

    @classmethod
    def from_float(cls, x: float) -> ExtendedReal:
        return cls.of(x, 0)

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> ExtendedReal:
        """Constrói sign * exp(log_mag) sem passar por exp() fora da faixa"""
        if sign == 0 or log_mag == -math.inf:
            return ZERO
        if not math.isfinite(log_mag):
            raise ValueError(f"log-magnitude inválida: {log_mag}")
        k = math.floor(log_mag / LN2)
        r = (log_mag - k * LN2_HI) - k * LN2_LO
        return cls.of(math.copysign(math.exp(r), sign), k)

    # --------- Consultas ----------
    @property
    def sign(self) -> int:
        if self.mantissa > 0:
            return 1
        if self.mantissa < 0:
            return -1
        return 0

    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def log(self) -> float:
        """ln |x| (-inf para zero)"""
        if self.is_zero():
            return -math.inf
        return math.log(abs(self.mantissa)) + self.scale * LN2

    def log10(self) -> float:
        if self.is_zero():
            return -math.inf
        return math.log10(abs(self.mantissa)) + self.scale * LOG10_2

    def to_float(self) -> float:
        """Valor em float64: pode virar 0.0 (underflow) ou inf (overflow)"""
        try:
            return math.ldexp(self.mantissa, self.scale)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    def __float__(self) -> float:
        return self.to_float()

    def to_json(self) -> dict:
        return {'mantissa': self.mantissa, 'scale2': self.scale, 'log10': self.log10()}

    # --------- Aritmética ----------
    @staticmethod
    def _coerce(other) -> ExtendedReal:
        if isinstance(other, ExtendedReal):
            return other
        if isinstance(other, (int, float)):
            return ExtendedReal.from_float(float(other))
        return NotImplemented

    def __neg__(self) -> ExtendedReal:
        return ExtendedReal(-self.mantissa, self.scale)

    def __abs__(self) -> ExtendedReal:
        return ExtendedReal(abs(self.mantissa), self.scale)

    def __mul__(self, other) -> ExtendedReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ExtendedReal.of(self.mantissa * other.mantissa, self.scale + other.scale)

    __rmul__ = __mul__

    def __truediv__(self, other) -> ExtendedReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError('divisão de ExtendedReal por zero')
        return ExtendedReal.of(self.mantissa / other.mantissa, self.scale - other.scale)

    def __rtruediv__(self, other) -> ExtendedReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __add__(self, other) -> ExtendedReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        big, small = (self, other) if self.scale >= other.scale else (other, self)
        shift = small.scale - big.scale
        return ExtendedReal.of(big.mantissa + math.ldexp(small.mantissa, shift), big.scale)

    __radd__ = __add__

    def __sub__(self, other) -> ExtendedReal:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> ExtendedReal:
        return (-self) + other

    def power(self, p: float) -> ExtendedReal:
        """|x|**p para x != 0 (ou 0 para p > 0)"""
        if self.is_zero():
            if p > 0:
                return ZERO
            raise ZeroDivisionError('potência não positiva de zero')
        return ExtendedReal.from_log(p * self.log())

    # --------- Ordem ----------
    def _compare(self, other: ExtendedReal) -> int:
        if self.sign != other.sign:
            return -1 if self.sign < other.sign else 1
        if self.sign == 0:
            return 0
        mine = (self.scale, abs(self.mantissa))
        theirs = (other.scale, abs(other.mantissa))
        if mine == theirs:
            return 0
        bigger = 1 if mine > theirs else -1
        return bigger * self.sign

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self._compare(other) == 0

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._compare(other) < 0

    def __hash__(self) -> int:
        return hash((self.mantissa, self.scale))

    def __repr__(self) -> str:
        if self.is_zero():
            return 'ExtendedReal(0)'
        return f"ExtendedReal({self.mantissa!r} * 2**{self.scale})"


ZERO = ExtendedReal(0.0, 0)
ONE = ExtendedReal(1.0, 0)
