# curve_geometry.py
"""Curvas simples gamma(t) = (t, t^2, ..., t^{n-1}, phi(t)): torção, peso afim,
curvas descendentes, jacobiano J(t, h), identidade de Rolle e o operador de extensão.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq
from scipy.special import logsumexp

import settings
from errors import (
    DegenerateConfigurationError,
    DomainError,
    EmptyDomainError,
    ExtensionBudgetError,
    InvalidSimplexPointError,
    NodeResolutionError,
    PreconditionError,
    SingularWeightError,
)
from osc_symbolic import NODE_STEP, OscFunction, evaluate, evaluate_array, nth_derivative

logger = logging.getLogger(__name__)


def uniform_grid(a: float, b: float, resolution: float) -> np.ndarray:
    """Malha uniforme em [a, b] com espaçamento <= resolution e extremos exatos"""
    if resolution <= 0:
        raise PreconditionError(f"resolução deve ser positiva (recebido {resolution})")
    steps = max(1, math.ceil((b - a) / resolution))
    grid = np.linspace(a, b, steps + 1)
    grid[0], grid[-1] = a, b
    return grid


# ============ Funções suaves ============
class SmoothFn(ABC):
    """phi genérica: só exige as derivadas deriv(k, t)"""

    @abstractmethod
    def deriv(self, k: int, t: float) -> float:
        ...

    def deriv_array(self, k: int, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.array([self.deriv(k, float(x)) for x in t.ravel()]).reshape(t.shape)

    def __call__(self, t):
        return self.deriv_array(0, t)

    def derivative(self, k: int = 1) -> SmoothFn:
        return DerivativeFn(self, k)

    def sample_grid(self, domain: tuple[float, float], resolution: float, floor: float = 0.0) -> np.ndarray:
        return uniform_grid(domain[0], domain[1], resolution)


class DerivativeFn(SmoothFn):
    def __init__(self, base: SmoothFn, order: int):
        self.base = base
        self.order = order

    def deriv(self, k, t):
        return self.base.deriv(k + self.order, t)

    def deriv_array(self, k, t):
        return self.base.deriv_array(k + self.order, t)


class OscSmoothFn(SmoothFn):
    """Adaptador de OscFunction; em t <= 0 vale o limite 0 (todas as derivadas se anulam)"""

    def __init__(self, f: OscFunction):
        self.f = f

    def deriv(self, k, t):
        if t <= 0:
            return 0.0
        return evaluate(nth_derivative(self.f, k), t).to_float()

    def deriv_array(self, k, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        positive = t > 0
        if np.any(positive):
            out[positive] = evaluate_array(nth_derivative(self.f, k), t[positive])
        return out

    def derivative(self, k: int = 1) -> SmoothFn:
        return OscSmoothFn(nth_derivative(self.f, k))

    def log_envelope(self, t) -> np.ndarray:
        """log de sum |c| t^-e e^{-t^-alpha}, cota superior de |phi(t)|"""
        t = np.asarray(t, dtype=float)
        terms = list(self.f.tagged_terms())
        logs = np.array([math.log(abs(c)) - e * np.log(t) for c, e, _ in terms])
        return logsumexp(logs, axis=0) - t ** (-self.f.alpha)

    def quiet_below(self, floor: float, t_max: float) -> float:
        """Maior t <= t_max com |phi| <= floor em todo (0, t] pela envoltória monótona"""
        if self.f.is_zero():
            return t_max
        exps = [e for _, e, _ in self.f.tagged_terms() if e > 0]
        alpha = self.f.alpha
        t_mono = min([(alpha / e) ** (1 / alpha) for e in exps], default=math.inf)
        top = min(t_mono, t_max)
        target = math.log(floor)
        g = lambda x: float(self.log_envelope(x)) - target  # noqa: E731
        if g(top) <= 0:
            return top
        low = top / 2
        while g(low) > 0:
            low /= 2
        return brentq(g, low, top, xtol=1e-14)

    def sample_grid(self, domain, resolution, floor=0.0):
        a, b = domain
        grid = uniform_grid(a, b, resolution)
        if floor > 0:
            start = max(a, self.quiet_below(floor, b))
        elif a > 0:
            start = a
        else:
            raise PreconditionError('malha adaptativa em t = 0 exige floor > 0')
        if start >= b or self.f.is_zero():
            return grid
        beta = self.f.beta
        u_lo, u_hi = b ** (-beta), start ** (-beta)
        steps = max(1, math.ceil((u_hi - u_lo) / NODE_STEP))
        if steps > 16 * settings.NODE_CAP:
            raise NodeResolutionError(
                f"malha adaptativa com {steps} pontos em [{start}, {b}]", steps // 16, (start, b)
            )
        u = np.linspace(u_lo, u_hi, steps + 1)[1:-1]
        adaptive = u ** (-1.0 / beta)
        return np.unique(np.concatenate([grid, adaptive, [start]]))


class PolynomialFn(SmoothFn):
    """phi polinomial; coeficientes em ordem crescente de grau"""

    def __init__(self, coefficients: Sequence[float]):
        self.poly = Polynomial(np.asarray(coefficients, dtype=float))

    def deriv(self, k, t):
        return float(self.poly.deriv(k)(t)) if k else float(self.poly(t))

    def deriv_array(self, k, t):
        p = self.poly.deriv(k) if k else self.poly
        return np.asarray(p(np.asarray(t, dtype=float)), dtype=float)

    def derivative(self, k: int = 1) -> SmoothFn:
        return PolynomialFn(self.poly.deriv(k).coef)


class CallableFn(SmoothFn):
    """Derivadas fornecidas pelo usuário: derivs(k, t) ou lista [phi, phi', ...]"""

    def __init__(self, derivs: Callable[[int, np.ndarray], np.ndarray] | Sequence[Callable], max_order: int | None = None):
        if callable(derivs):
            self._derivs = derivs
            self.max_order = max_order
        else:
            table = list(derivs)
            self._derivs = lambda k, t: table[k](t)
            self.max_order = len(table) - 1 if max_order is None else max_order

    def deriv_array(self, k, t):
        if self.max_order is not None and k > self.max_order:
            raise PreconditionError(f"derivada de ordem {k} não fornecida (máximo {self.max_order})")
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self._derivs(k, t), dtype=float), t.shape).copy()

    def deriv(self, k, t):
        return float(self.deriv_array(k, np.asarray(float(t))))


def perturbed_monomial(n: int, level: float = 0.75, amplitude: float = 0.2) -> CallableFn:
    """phi(t) = level t^n/n! + amplitude sin(t - n pi/2), com phi^{(n)} = level + amplitude sin t"""

    def derivs(k, t):
        if k <= n:
            mono = level * t ** (n - k) / math.factorial(n - k)
        else:
            mono = np.zeros_like(t)
        return mono + amplitude * np.sin(t + (k - n) * math.pi / 2)

    return CallableFn(derivs)


class AveragedFn(SmoothFn):
    """Phi_alpha(t) = (1/N) sum phi(t + alpha_k)"""

    def __init__(self, base: SmoothFn, shifts: Sequence[float]):
        self.base = base
        self.shifts = tuple(float(s) for s in shifts)

    def deriv(self, k, t):
        return float(np.mean([self.base.deriv(k, t + s) for s in self.shifts]))

    def deriv_array(self, k, t):
        t = np.asarray(t, dtype=float)
        return np.mean([self.base.deriv_array(k, t + s) for s in self.shifts], axis=0)


class RescaledFn(SmoothFn):
    """s -> phi(a + (b - a) s) em [0, 1]"""

    def __init__(self, base: SmoothFn, domain: tuple[float, float]):
        self.base = base
        self.a, self.b = domain
        self.width = self.b - self.a

    def deriv(self, k, s):
        return self.width ** k * self.base.deriv(k, self.a + self.width * s)

    def deriv_array(self, k, s):
        s = np.asarray(s, dtype=float)
        return self.width ** k * self.base.deriv_array(k, self.a + self.width * s)

    def derivative(self, k: int = 1) -> SmoothFn:
        return RescaledFn(self.base.derivative(k), (self.a, self.b)).scaled(self.width ** k)

    def scaled(self, factor: float) -> SmoothFn:
        return ScaledFn(self, factor)

    def sample_grid(self, domain, resolution, floor=0.0):
        lo, hi = (self.a + self.width * x for x in domain)
        grid = self.base.sample_grid((lo, hi), resolution * self.width, floor)
        out = (grid - self.a) / self.width
        out[0], out[-1] = domain
        return out


class ScaledFn(SmoothFn):
    def __init__(self, base: SmoothFn, factor: float):
        self.base = base
        self.factor = factor

    def deriv(self, k, t):
        return self.factor * self.base.deriv(k, t)

    def deriv_array(self, k, t):
        return self.factor * self.base.deriv_array(k, t)

    def sample_grid(self, domain, resolution, floor=0.0):
        return self.base.sample_grid(domain, resolution, floor / abs(self.factor) if self.factor else floor)


# ============ Curva simples ============
@dataclass(frozen=True)
class SimpleCurve:
    n: int
    phi: SmoothFn
    domain: tuple[float, float]

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError(f"dimensão n deve ser >= 2 (recebido {self.n})")
        a, b = self.domain
        if not a < b:
            raise PreconditionError(f"domínio vazio: {self.domain}")

    def check(self, t: float) -> None:
        a, b = self.domain
        if not (a <= t <= b):
            raise DomainError(f"t={t} fora do domínio [{a}, {b}]")


def torsion_constant(n: int) -> int:
    """K_n = prod_{k=1}^{n-1} k!"""
    return math.prod(math.factorial(k) for k in range(1, n))


def jacobian_constant(n: int) -> float:
    """C_n = 1/(2 n^n n!)"""
    return 1.0 / (2 * n ** n * math.factorial(n))


def gamma(c: SimpleCurve, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    coords = [t ** j for j in range(1, c.n)] + [c.phi.deriv_array(0, t)]
    return np.stack(coords, axis=-1)


def gamma_derivative(c: SimpleCurve, k: int, t) -> np.ndarray:
    """gamma^{(k)}(t), vetorizado em t"""
    t = np.asarray(t, dtype=float)
    coords = []
    for j in range(1, c.n):
        if k > j:
            coords.append(np.zeros_like(t))
        else:
            coords.append(math.perm(j, k) * t ** (j - k))
    coords.append(c.phi.deriv_array(k, t))
    return np.stack(coords, axis=-1)


def derivative_matrix(c: SimpleCurve, t: float) -> np.ndarray:
    """Linhas gamma'(t), ..., gamma^{(n)}(t)"""
    c.check(t)
    return np.vstack([gamma_derivative(c, k, t) for k in range(1, c.n + 1)])


def torsion(c: SimpleCurve, t: float) -> float:
    return float(np.linalg.det(derivative_matrix(c, t)))


def affine_weight(c: SimpleCurve, t: float, eps: float) -> float:
    """|tau(t)|^{2/(n(n+1)) + eps}"""
    exponent = 2.0 / (c.n * (c.n + 1)) + eps
    tau = torsion(c, t)
    if tau == 0.0:
        if exponent <= 0:
            raise SingularWeightError(f"torção nula com expoente {exponent} <= 0 em t={t}")
        return 0.0
    return abs(tau) ** exponent


# ============ Curvas descendentes ============
@dataclass(frozen=True)
class OffspringSpec:
    shifts: tuple[float, ...]
    base: SimpleCurve

    def __post_init__(self):
        s = self.shifts
        if not s:
            raise PreconditionError('offspring exige ao menos um deslocamento')
        if any(x < 0 for x in s) or any(x > y for x, y in zip(s, s[1:])):
            raise PreconditionError(f"deslocamentos devem ser >= 0 e não decrescentes: {s}")


@dataclass(frozen=True)
class OffspringCurve:
    spec: OffspringSpec
    domain: tuple[float, float]
    last_coord: AveragedFn
    phi_n_min: float
    phi_n_max: float
    inherits_bounds: bool | None

    @property
    def n(self) -> int:
        return self.spec.base.n

    def gamma(self, t) -> np.ndarray:
        return np.mean([gamma(self.spec.base, np.asarray(t) + s) for s in self.spec.shifts], axis=0)

    def derivative_matrix(self, t: float) -> np.ndarray:
        base = self.spec.base
        return np.mean(
            [np.vstack([gamma_derivative(base, k, t + s) for k in range(1, base.n + 1)]) for s in self.spec.shifts],
            axis=0,
        )


def offspring(spec: OffspringSpec, samples: int = 2001) -> OffspringCurve:
    """gamma_alpha(t) = (1/N) sum gamma(t + alpha_k) em I_alpha = [a - alpha_1, b - alpha_N].

    Amostra |phi^{(n)}| e |Phi_alpha^{(n)}| e informa se as cotas 1/2 <= . <= 1 são herdadas.
    """
    a, b = spec.base.domain
    lo, hi = a - spec.shifts[0], b - spec.shifts[-1]
    if lo > hi:
        raise EmptyDomainError(f"I_alpha vazio: [{lo}, {hi}]")
    n = spec.base.n
    averaged = AveragedFn(spec.base.phi, spec.shifts)
    grid = np.linspace(lo, hi, samples)
    values = np.abs(averaged.deriv_array(n, grid))
    base_values = np.abs(spec.base.phi.deriv_array(n, np.linspace(a, b, samples)))
    inherits = None
    if base_values.min() >= 0.5 and base_values.max() <= 1.0:
        inherits = bool(values.min() >= 0.5 and values.max() <= 1.0)
        if not inherits:
            logger.warning(f"Phi_alpha^({n}) saiu de [1/2, 1] com deslocamentos {spec.shifts}")
    return OffspringCurve(spec, (lo, hi), averaged, float(values.min()), float(values.max()), inherits)


# ============ Jacobiano e Rolle ============
def vandermonde_factor(h: Sequence[float]) -> float:
    """v(h) = h_2 ... h_n prod_{i<j} (h_j - h_i)"""
    h = [float(x) for x in h]
    return math.prod(h) * math.prod(hj - hi for hi, hj in combinations(h, 2))


@dataclass(frozen=True)
class OrderedSimplexPoint:
    t: float
    h: tuple[float, ...]

    def __post_init__(self):
        h = self.h
        if not h:
            raise InvalidSimplexPointError('h vazio')
        if h[0] < 0 or any(x > y for x, y in zip(h, h[1:])):
            raise InvalidSimplexPointError(f"h deve ser não decrescente e >= 0: {h}")

    @property
    def degenerate(self) -> bool:
        """Entradas repetidas (ou h_2 = 0): v(h) = 0"""
        return self.h[0] == 0 or any(x == y for x, y in zip(self.h, self.h[1:]))

    def nodes(self) -> np.ndarray:
        return self.t + np.concatenate([[0.0], self.h])


def _validate_point(c: SimpleCurve, p: OrderedSimplexPoint) -> None:
    if len(p.h) != c.n - 1:
        raise InvalidSimplexPointError(f"h tem {len(p.h)} entradas, esperado {c.n - 1}")
    a, b = c.domain
    if p.t < a or p.t + p.h[-1] > b:
        raise InvalidSimplexPointError(f"[{p.t}, {p.t + p.h[-1]}] fora do domínio [{a}, {b}]")


def rolle_determinant(c: SimpleCurve, p: OrderedSimplexPoint) -> float:
    """det[gamma'(t), gamma'(t + h_2), ..., gamma'(t + h_n)]"""
    _validate_point(c, p)
    if p.degenerate:
        return 0.0
    return float(np.linalg.det(gamma_derivative(c, 1, p.nodes())))


def offspring_jacobian(c: SimpleCurve, p: OrderedSimplexPoint) -> float:
    """J(t, h) = |det[gamma'(t), ..., gamma'(t + h_n)]| / n^n"""
    return abs(rolle_determinant(c, p)) / c.n ** c.n


def rolle_ratio(c: SimpleCurve, p: OrderedSimplexPoint) -> float:
    """|det| / v(h) = |phi^{(n)}(xi)| para algum xi em [t, t + h_n]"""
    _validate_point(c, p)
    v = vandermonde_factor(p.h)
    if p.degenerate or v == 0.0:
        raise DegenerateConfigurationError(f"v(h) = 0 para h={p.h}")
    return abs(rolle_determinant(c, p)) / abs(v)


def sample_simplex_points(c: SimpleCurve, count: int, rng: np.random.Generator) -> list[OrderedSimplexPoint]:
    """Uniforme nas n-uplas ordenadas do domínio (ordena sorteios uniformes)"""
    a, b = c.domain
    draws = np.sort(rng.uniform(a, b, size=(count, c.n)), axis=1)
    points = []
    for row in draws:
        points.append(OrderedSimplexPoint(float(row[0]), tuple(float(x) for x in row[1:] - row[0])))
    return points


# ============ Operador de extensão ============
def _as_callable(g) -> Callable[[np.ndarray], np.ndarray]:
    if callable(g):
        return g
    grid, values = (np.asarray(x) for x in g)
    if np.iscomplexobj(values):
        return lambda t: np.interp(t, grid, values.real) + 1j * np.interp(t, grid, values.imag)
    return lambda t: np.interp(t, grid, values)


def _panel_edges(c: SimpleCurve, x: np.ndarray, max_width: float, probes: int = 1024) -> np.ndarray:
    """Painéis com largura <= min(max_width, pi/|gamma'(t).x|)"""
    a, b = c.domain
    probe = np.linspace(a, b, probes + 1)
    freq = np.abs(gamma_derivative(c, 1, probe) @ x)
    cell_freq = np.maximum(freq[:-1], freq[1:])
    cell = (b - a) / probes
    widths = np.minimum(max_width, np.where(cell_freq > 0, math.pi / np.maximum(cell_freq, 1e-300), np.inf))
    pieces = np.maximum(1, np.ceil(cell / widths)).astype(int)
    edges = [np.linspace(lo, hi, m + 1)[:-1] for lo, hi, m in zip(probe[:-1], probe[1:], pieces)]
    return np.concatenate(edges + [[b]])


def _gauss_panels(edges: np.ndarray, order: int, integrand) -> complex:
    nodes, weights = leggauss(order)
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2
    t = (lo + hi)[:, None] / 2 + half[:, None] * nodes[None, :]
    return complex(np.sum(integrand(t) * weights[None, :] * half[:, None]))


def extension_op(
    c: SimpleCurve,
    g,
    x: Sequence[float],
    tol: float = 1e-10,
    order: int | None = None,
    budget: int | None = None,
    max_width: float | None = None,
) -> complex:
    """E(g)(x) = int_I e^{i gamma(t).x} g(t) dt por painéis de Gauss-Legendre.

    g é um callable vetorizado ou um par (malha, valores) interpolado linearmente.
    O erro é estimado comparando as ordens `order` e `2*order`; sem convergência,
    os painéis são divididos ao meio até esgotar o orçamento de avaliações.
    """
    order = order or settings.EXTENSION_ORDER
    budget = budget or settings.EXTENSION_BUDGET
    x = np.asarray(x, dtype=float)
    if x.shape != (c.n,):
        raise PreconditionError(f"x deve ter {c.n} coordenadas")
    a, b = c.domain
    g = _as_callable(g)
    integrand = lambda t: np.exp(1j * (gamma(c, t) @ x)) * g(t)  # noqa: E731

    edges = _panel_edges(c, x, max_width or (b - a) / 8)
    used = 0
    estimate, error = 0j, math.inf
    while True:
        panels = len(edges) - 1
        used += panels * 3 * order
        coarse = _gauss_panels(edges, order, integrand)
        estimate = _gauss_panels(edges, 2 * order, integrand)
        error = abs(estimate - coarse)
        if error <= tol:
            logger.debug(f"extension_op: {panels} painéis, erro estimado {error:.2e}")
            return estimate
        if used + 2 * panels * 3 * order > budget:
            raise ExtensionBudgetError(
                f"tolerância {tol} não atingida com {used} avaliações (erro estimado {error:.2e})",
                estimate, error,
            )
        mids = (edges[:-1] + edges[1:]) / 2
        edges = np.sort(np.concatenate([edges, mids]))
