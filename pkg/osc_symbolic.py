# osc_symbolic.py
"""Família oscilante e^{-t^-alpha} (P sin(t^-beta) + Q cos(t^-beta)), fechada por derivação.

P e Q são "polinômios" em potências fracionárias t^{-(a*alpha + b*beta + c)}
com os expoentes guardados como triplas inteiras (a, b, c).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

import settings
from errors import DegeneratePhaseError, DomainError, NodeResolutionError, PreconditionError
from extended_real import ZERO, ExtendedReal

logger = logging.getLogger(__name__)

# Coeficientes abaixo disto (relativo ao maior) são descartados
TRUNCATION = 1e-300
# Passo da malha de busca de nós na variável u = t^-beta
NODE_STEP = math.pi / 16
# Casas usadas para decidir que dois expoentes numéricos coincidem
EXPONENT_DIGITS = 12


@dataclass(frozen=True)
class ExponentTriple:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 0:
            raise ValueError(f"expoente com componente negativa: {self}")

    def value(self, alpha: float, beta: float) -> float:
        return self.a * alpha + self.b * beta + self.c

    def shift(self, da: int = 0, db: int = 0, dc: int = 0) -> ExponentTriple:
        return ExponentTriple(self.a + da, self.b + db, self.c + dc)

    def key(self, alpha: float, beta: float) -> float:
        return round(self.value(alpha, beta), EXPONENT_DIGITS)


@dataclass(frozen=True)
class FracPoly:
    """Soma de c * t^{-e}; use FracPoly.canonical para montar"""

    terms: tuple[tuple[float, ExponentTriple], ...] = ()

    @classmethod
    def canonical(cls, terms, alpha: float, beta: float) -> FracPoly:
        """Junta expoentes numericamente iguais, trunca e ordena por expoente decrescente"""
        merged: dict[float, list] = {}
        for coeff, exp in terms:
            k = exp.key(alpha, beta)
            if k in merged:
                slot = merged[k]
                slot[0] += coeff
                # representante: maior b, depois menor a
                if (exp.b, -exp.a) > (slot[1].b, -slot[1].a):
                    slot[1] = exp
            else:
                merged[k] = [float(coeff), exp]
        if not merged:
            return cls(())
        biggest = max(abs(c) for c, _ in merged.values())
        kept = [
            (c, e) for c, e in merged.values()
            if c != 0.0 and abs(c) >= TRUNCATION * biggest
        ]
        kept.sort(key=lambda ce: ce[1].value(alpha, beta), reverse=True)
        return cls(tuple(kept))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self, alpha: float, beta: float) -> float:
        if not self.terms:
            return -math.inf
        return self.terms[0][1].value(alpha, beta)

    def leading(self) -> tuple[float, ExponentTriple] | None:
        return self.terms[0] if self.terms else None

    def coefficient_at(self, exp_value: float, alpha: float, beta: float) -> float:
        k = round(exp_value, EXPONENT_DIGITS)
        for c, e in self.terms:
            if e.key(alpha, beta) == k:
                return c
        return 0.0


@dataclass(frozen=True)
class OscFunction:
    alpha: float
    beta: float
    P: FracPoly = field(default_factory=FracPoly)
    Q: FracPoly = field(default_factory=FracPoly)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise PreconditionError(f"alpha e beta devem ser positivos (alpha={self.alpha}, beta={self.beta})")

    def is_zero(self) -> bool:
        return self.P.is_zero() and self.Q.is_zero()

    def tagged_terms(self):
        """(coef, expoente numérico, 'sin'|'cos') de todos os termos"""
        for c, e in self.P.terms:
            yield c, e.value(self.alpha, self.beta), 'sin'
        for c, e in self.Q.terms:
            yield c, e.value(self.alpha, self.beta), 'cos'


# ---------- Construtores e estrutura linear ----------
def make(alpha: float, beta: float, p_terms=(), q_terms=()) -> OscFunction:
    """p_terms/q_terms: iteráveis de (coef, (a, b, c))"""
    def build(terms):
        return FracPoly.canonical(
            [(c, e if isinstance(e, ExponentTriple) else ExponentTriple(*e)) for c, e in terms],
            alpha, beta,
        )
    return OscFunction(alpha, beta, build(p_terms), build(q_terms))


def seed(alpha: float, beta: float) -> OscFunction:
    """phi(t) = e^{-t^-alpha} sin(t^-beta)"""
    return make(alpha, beta, p_terms=[(1.0, (0, 0, 0))])


def _same_family(f: OscFunction, g: OscFunction) -> None:
    if (f.alpha, f.beta) != (g.alpha, g.beta):
        raise PreconditionError(
            f"famílias diferentes: ({f.alpha}, {f.beta}) e ({g.alpha}, {g.beta})"
        )


def add(f: OscFunction, g: OscFunction) -> OscFunction:
    _same_family(f, g)
    return OscFunction(
        f.alpha, f.beta,
        FracPoly.canonical(f.P.terms + g.P.terms, f.alpha, f.beta),
        FracPoly.canonical(f.Q.terms + g.Q.terms, f.alpha, f.beta),
    )


def scale(f: OscFunction, k: float) -> OscFunction:
    return OscFunction(
        f.alpha, f.beta,
        FracPoly.canonical([(k * c, e) for c, e in f.P.terms], f.alpha, f.beta),
        FracPoly.canonical([(k * c, e) for c, e in f.Q.terms], f.alpha, f.beta),
    )


# ---------- Derivação ----------
def differentiate(f: OscFunction) -> OscFunction:
    """Derivada termo a termo.

    d/dt [c t^-e e^{-t^-alpha} sin(t^-beta)] gera, no seno, -e*c em e+1 e
    alpha*c em e+alpha+1; no cosseno, -beta*c em e+beta+1. O cosseno é
    simétrico com +beta*c indo para o seno.
    """
    alpha, beta = f.alpha, f.beta
    new_p, new_q = [], []
    for src, same, other, cross_sign in ((f.P, new_p, new_q, -1.0), (f.Q, new_q, new_p, 1.0)):
        for c, exp in src.terms:
            e = exp.value(alpha, beta)
            same.append((-e * c, exp.shift(dc=1)))
            same.append((alpha * c, exp.shift(da=1, dc=1)))
            other.append((cross_sign * beta * c, exp.shift(db=1, dc=1)))
    return OscFunction(
        alpha, beta,
        FracPoly.canonical(new_p, alpha, beta),
        FracPoly.canonical(new_q, alpha, beta),
    )


@lru_cache(maxsize=256)
def nth_derivative(f: OscFunction, n: int) -> OscFunction:
    if n < 0:
        raise PreconditionError(f"ordem de derivação negativa: {n}")
    if n == 0:
        return f
    return differentiate(nth_derivative(f, n - 1))


def degree(f: OscFunction) -> float:
    """max{deg P, deg Q} (-inf para a função nula)"""
    return max(f.P.degree(f.alpha, f.beta), f.Q.degree(f.alpha, f.beta))


def leading_exponent(f: OscFunction) -> ExponentTriple | None:
    """Tripla do termo de maior expoente (empate: maior b, depois menor a)"""
    candidates = [p.leading() for p in (f.P, f.Q) if not p.is_zero()]
    if not candidates:
        return None
    return max(
        (e for _, e in candidates),
        key=lambda e: (e.key(f.alpha, f.beta), e.b, -e.a),
    )


# ---------- Avaliação ----------
def _log_parts(f: OscFunction, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(Lmax, s) com valor = s * exp(Lmax - t^-alpha)"""
    terms = list(f.tagged_terms())
    log_t = np.log(t)
    u = t ** (-f.beta)
    sin_u, cos_u = np.sin(u), np.cos(u)
    logs = np.array([math.log(abs(c)) - e * log_t for c, e, _ in terms])
    lmax = logs.max(axis=0)
    s = np.zeros_like(lmax)
    for (c, _, kind), lg in zip(terms, logs):
        trig = sin_u if kind == 'sin' else cos_u
        s = s + math.copysign(1.0, c) * np.exp(lg - lmax) * trig
    return lmax, s


def evaluate(f: OscFunction, t: float) -> ExtendedReal:
    if not t > 0:
        raise DomainError(f"evaluate exige t > 0 (t={t})")
    if f.is_zero():
        return ZERO
    lmax, s = _log_parts(f, np.asarray(float(t)))
    s = float(s)
    if s == 0.0:
        return ZERO
    return ExtendedReal.from_log(float(lmax) - t ** (-f.alpha) + math.log(abs(s)), 1 if s > 0 else -1)


def evaluate_array(f: OscFunction, t) -> np.ndarray:
    """Versão vetorizada em float64 (underflow para 0 é aceito aqui)"""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError('evaluate_array exige t > 0')
    if f.is_zero():
        return np.zeros_like(t)
    lmax, s = _log_parts(f, t)
    with np.errstate(under='ignore', over='ignore'):
        return s * np.exp(lmax - t ** (-f.alpha))


def oscillatory_part(f: OscFunction, t) -> np.ndarray:
    """P~(t) sin(t^-beta) + Q~(t) cos(t^-beta), sem o fator e^{-t^-alpha}"""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError('oscillatory_part exige t > 0')
    if f.is_zero():
        return np.zeros_like(t)
    lmax, s = _log_parts(f, t)
    return s * np.exp(lmax)


# ---------- Forma amplitude-fase ----------
def normalized_parts(f: OscFunction, u):
    """(P0(u), Q0(u)): P e Q em u = t^-beta divididos por u^{D/beta}, D = grau"""
    u = np.asarray(u, dtype=float)
    D = degree(f)
    if D == -math.inf:
        return np.zeros_like(u), np.zeros_like(u)

    def part(poly: FracPoly):
        total = np.zeros_like(u)
        for c, exp in poly.terms:
            total = total + c * u ** ((exp.value(f.alpha, f.beta) - D) / f.beta)
        return total

    return part(f.P), part(f.Q)


def _phase(p0: float, q0: float) -> float:
    theta = math.atan2(-p0, q0)
    return math.pi if theta == -math.pi else theta


def amplitude_phase(f: OscFunction, u: float) -> tuple[float, float]:
    """psi(u) = P0 sin u + Q0 cos u = A cos(u + theta), theta em (-pi, pi]"""
    p0, q0 = (float(v) for v in normalized_parts(f, u))
    amplitude = math.hypot(p0, q0)
    if amplitude == 0.0:
        raise DegeneratePhaseError(f"amplitude nula em u={u}")
    return amplitude, _phase(p0, q0)


def _leading_pair(f: OscFunction) -> tuple[float, float]:
    D = degree(f)
    return f.P.coefficient_at(D, f.alpha, f.beta), f.Q.coefficient_at(D, f.alpha, f.beta)


def limiting_amplitude(f: OscFunction) -> float:
    """lim_{u->inf} sqrt(P0^2 + Q0^2)"""
    if f.is_zero():
        return 0.0
    return math.hypot(*_leading_pair(f))


def limiting_phase(f: OscFunction) -> float:
    if f.is_zero():
        raise DegeneratePhaseError('função nula não tem fase')
    p, q = _leading_pair(f)
    return _phase(p, q)


# ---------- Nós de oscilação ----------
def _psi(f: OscFunction, u):
    p0, q0 = normalized_parts(f, u)
    return p0 * np.sin(u) + q0 * np.cos(u), np.abs(p0) + np.abs(q0)


def _bisect_roots(f: OscFunction, left: np.ndarray, right: np.ndarray, rel_width: float) -> np.ndarray:
    """Bisseção vetorizada de psi em colchetes [left, right] com troca de sinal"""
    left, right = left.copy(), right.copy()
    left_sign = np.sign(_psi(f, left)[0])
    for _ in range(200):
        active = (right - left) > rel_width * left
        if not np.any(active):
            break
        mid = (left + right) / 2
        same = np.sign(_psi(f, mid)[0]) == left_sign
        move_left = active & same
        move_right = active & ~same
        left = np.where(move_left, mid, left)
        right = np.where(move_right, mid, right)
    return (left + right) / 2


def oscillation_nodes(f: OscFunction, interval: tuple[float, float], cap: int | None = None) -> list[float]:
    """Zeros em [a, b] de P sin(t^-beta) + Q cos(t^-beta), em ordem crescente de t.

    Varre u = t^-beta com passo pi/16 (densidade proporcional à frequência
    local) e refina cada troca de sinal por bisseção até largura 1e-12 t.
    """
    a, b = (float(x) for x in interval)
    if not (0 < a < b):
        raise DomainError(f"intervalo inválido para oscillation_nodes: [{a}, {b}]")
    if f.is_zero():
        raise DegeneratePhaseError('função identicamente nula: nós indefinidos')
    cap = settings.NODE_CAP if cap is None else cap

    u_lo, u_hi = b ** (-f.beta), a ** (-f.beta)
    expected = int((u_hi - u_lo) / math.pi)
    if expected > cap:
        raise NodeResolutionError(
            f"cerca de {expected} nós em [{a}, {b}] excedem o limite {cap}", expected, (a, b)
        )

    steps = max(1, math.ceil((u_hi - u_lo) / NODE_STEP))
    u = np.linspace(u_lo, u_hi, steps + 1)
    u[0], u[-1] = u_lo, u_hi
    values, size = _psi(f, u)
    signs = np.sign(values)
    signs[np.abs(values) <= 1e-12 * size] = 0.0

    on_grid = u[signs == 0.0]
    brackets = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    # largura relativa em u = beta * largura relativa em t
    refined = _bisect_roots(f, u[brackets], u[brackets + 1], 1e-13 * f.beta)
    roots_u = np.concatenate([on_grid, refined])

    t = np.clip(roots_u ** (-1.0 / f.beta), a, b)
    t[roots_u == u_lo] = b
    t[roots_u == u_hi] = a
    nodes = sorted(float(x) for x in t)
    if len(nodes) > cap:
        raise NodeResolutionError(
            f"{len(nodes)} nós em [{a}, {b}] excedem o limite {cap}", len(nodes), (a, b)
        )
    logger.debug(f"{len(nodes)} nós em [{a}, {b}]")
    return nodes


# ---------- Serialização ----------
def to_terms_text(f: OscFunction) -> str:
    """Uma linha por termo: sinal coeficiente a b c sin|cos"""
    lines = [f"# alpha = {f.alpha!r}", f"# beta = {f.beta!r}"]
    for poly, kind in ((f.P, 'sin'), (f.Q, 'cos')):
        for c, e in poly.terms:
            sign = '-' if c < 0 else '+'
            lines.append(f"{sign} {abs(c)!r} {e.a} {e.b} {e.c} {kind}")
    return '\n'.join(lines) + '\n'


def from_terms_text(text: str) -> OscFunction:
    header: dict[str, float] = {}
    p_terms, q_terms = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            key, _, value = line.lstrip('#').partition('=')
            header[key.strip()] = float(value)
            continue
        parts = line.split()
        if len(parts) != 6 or parts[0] not in '+-' or parts[5] not in ('sin', 'cos'):
            raise ValueError(f"linha {lineno} malformada: {raw!r}")
        coeff = float(parts[1]) * (-1.0 if parts[0] == '-' else 1.0)
        exp = ExponentTriple(int(parts[2]), int(parts[3]), int(parts[4]))
        (p_terms if parts[5] == 'sin' else q_terms).append((coeff, exp))
    if 'alpha' not in header or 'beta' not in header:
        raise ValueError('cabeçalho sem alpha/beta')
    return make(header['alpha'], header['beta'], p_terms, q_terms)


__all__ = [
    'ExponentTriple', 'FracPoly', 'OscFunction', 'ExtendedReal',
    'make', 'seed', 'add', 'scale', 'differentiate', 'nth_derivative',
    'degree', 'leading_exponent', 'evaluate', 'evaluate_array', 'oscillatory_part',
    'normalized_parts', 'amplitude_phase', 'limiting_amplitude', 'limiting_phase',
    'oscillation_nodes', 'to_terms_text', 'from_terms_text',
]
