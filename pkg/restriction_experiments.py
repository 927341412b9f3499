# restriction_experiments.py
"""Experimentos de restrição: pares de expoentes, decomposição diádica pela torção,
o exemplo de Knapp e a assintótica da integral de |phi^{(n)}|^rho perto de 0.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn
from scipy.special import roots_jacobi

import settings
from curve_geometry import OscSmoothFn, SimpleCurve, SmoothFn
from errors import DomainError, PreconditionError
from extended_real import ExtendedReal
from level_set_cover import DyadicLevel, dyadic_counts, k0
from osc_symbolic import (
    OscFunction,
    degree,
    evaluate,
    limiting_amplitude,
    normalized_parts,
    nth_derivative,
    oscillation_nodes,
    oscillatory_part,
    seed,
)

logger = logging.getLogger(__name__)

DEFAULT_DELTA_GRID = tuple(np.geomspace(0.03, 0.3, 12))
# Grade mais funda: rho * delta^-alpha >= 8 para n=3, alpha=1
DEEP_DELTA_GRID = tuple(np.geomspace(0.002, 0.02, 12))
SLOPE_DEAD_BAND = 0.1
CONVERGES_BELOW = 0.95


def rho_n(n: int) -> float:
    """2/(n^2 + n)"""
    return 2.0 / (n * (n + 1))


# ============ Pares de expoentes ============
@dataclass(frozen=True)
class ExponentPair:
    p: float
    q: float
    n: int
    eps: float = 0.0

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise PreconditionError(f"p e q devem ser >= 1 (p={self.p}, q={self.q})")
        if self.n < 2:
            raise PreconditionError(f"n deve ser >= 2 (recebido {self.n})")

    @property
    def p_conj(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    @property
    def q_over_p_conj(self) -> float:
        return 0.0 if self.p == 1 else self.q / self.p_conj

    @property
    def endline_q(self) -> float:
        return rho_n(self.n) * self.p_conj

    @property
    def on_endline(self) -> bool:
        return math.isclose(self.q, self.endline_q, rel_tol=1e-12)

    def _p_admissible(self) -> bool:
        n2 = self.n * self.n + self.n
        return 1 <= self.p < (n2 + 2) / n2

    @property
    def in_closed_range(self) -> bool:
        """1 <= p < (n^2+n+2)/(n^2+n) e 1 <= q <= (2/(n^2+n)) p'"""
        return self._p_admissible() and (self.q <= self.endline_q or self.on_endline)

    @property
    def in_open_range(self) -> bool:
        """Mesma faixa com desigualdade estrita em q"""
        return self._p_admissible() and self.q < self.endline_q and not self.on_endline


def rescaled_piece_bound(r: float, pair: ExponentPair) -> float:
    """r^{-1/p'} (1 para p = 1)"""
    if not r > 0:
        raise PreconditionError(f"r deve ser positivo (recebido {r})")
    if pair.p == 1:
        return 1.0
    return r ** (-1.0 / pair.p_conj)


@dataclass(frozen=True)
class ConditionReport:
    lhs: float
    rhs_finite: float | None
    rhs_limit: float
    holds_finite: bool | None
    holds_limit: bool


def convergence_condition(pair: ExponentPair, smoothness: float | None = None) -> ConditionReport:
    """rho_n + eps > q/p' + 1/(alpha_s - n) e o limite alpha_s -> infinito"""
    lhs = rho_n(pair.n) + pair.eps
    limit = pair.q_over_p_conj
    finite = None
    holds_finite = None
    if smoothness is not None:
        if smoothness <= pair.n:
            raise PreconditionError(f"suavidade {smoothness} deve exceder n={pair.n}")
        finite = limit + 1.0 / (smoothness - pair.n)
        holds_finite = lhs > finite
    return ConditionReport(lhs, finite, limit, holds_finite, lhs > limit)


# ============ Knapp ============
@dataclass(frozen=True)
class KnappProfile:
    n: int
    alpha: float
    delta: float
    poly_scales: tuple[float, ...]
    last_scale: ExtendedReal

    @property
    def scales(self) -> list:
        return [*self.poly_scales, self.last_scale]


def knapp_profile(n: int, alpha: float, delta: float) -> KnappProfile:
    """Caixa (delta, delta^2, ..., delta^{n-1}, e^{-delta^-alpha})"""
    if not 0 < delta < 1:
        raise PreconditionError(f"delta deve estar em (0, 1) (recebido {delta})")
    if n < 2 or alpha <= 0:
        raise PreconditionError(f"n >= 2 e alpha > 0 (n={n}, alpha={alpha})")
    poly = tuple(delta ** (j + 1) for j in range(n - 1))
    return KnappProfile(n, alpha, delta, poly, ExtendedReal.from_log(-delta ** (-alpha)))


def _last_coordinate(phi: SmoothFn, t: float) -> ExtendedReal:
    if isinstance(phi, OscSmoothFn):
        return evaluate(phi.f, t)
    return ExtendedReal.from_float(phi.deriv(0, t))


def knapp_membership(c: SimpleCurve, prof: KnappProfile, t: float) -> bool:
    """gamma(t) na caixa de Knapp (chi = 1 em [-1, 1])"""
    if not t > 0:
        raise DomainError(f"knapp_membership exige t > 0 (t={t})")
    if c.n != prof.n:
        raise PreconditionError(f"curva com n={c.n} e perfil com n={prof.n}")
    for j, s in enumerate(prof.poly_scales, start=1):
        if abs(t) ** j > s:
            return False
    return abs(_last_coordinate(c.phi, t)) <= prof.last_scale


@dataclass(frozen=True)
class KnappExponents:
    poly_exp: float
    exp_coeff: float
    degenerate: bool = False


def knapp_rhs_exponent(prof: KnappProfile, pair: ExponentPair) -> KnappExponents:
    """||f_delta||_p ~ C_chi delta^{n(n-1)/(2p')} e^{-delta^-alpha/p'}; p = 1 dá (0, 0)"""
    if pair.p == 1:
        return KnappExponents(0.0, 0.0, True)
    pc = pair.p_conj
    return KnappExponents(prof.n * (prof.n - 1) / (2 * pc), 1.0 / pc)


def knapp_norm_scale(prof: KnappProfile, pair: ExponentPair) -> ExtendedReal:
    ex = knapp_rhs_exponent(prof, pair)
    return ExtendedReal.from_log(ex.poly_exp * math.log(prof.delta) - ex.exp_coeff * prof.delta ** (-prof.alpha))


def knapp_box_bound(prof: KnappProfile) -> ExtendedReal:
    """Volume 2^n prod scales da caixa onde f^_delta = 1"""
    log_volume = prof.n * math.log(2.0) + sum(math.log(s) for s in prof.poly_scales) + prof.last_scale.log()
    return ExtendedReal.from_log(log_volume)


def knapp_draws(prof: KnappProfile, count: int, rng: np.random.Generator) -> np.ndarray:
    """t uniformes em (0, delta]"""
    return prof.delta * (1.0 - rng.random(count))


# ============ Integral perto de 0 ============
def mean_abs_cos(rho: float) -> float:
    """Média de |cos|^rho num período"""
    return float(gamma_fn((rho + 1) / 2) / (math.sqrt(math.pi) * gamma_fn(rho / 2 + 1)))


def integral_exponent(n: int, alpha: float, beta: float, rho: float) -> float:
    """E = -rho n (beta + 1) + 1 + alpha"""
    return -rho * n * (beta + 1) + 1 + alpha


def integral_rhs(n: int, alpha: float, beta: float, rho: float, delta: float) -> ExtendedReal:
    """delta^E e^{-rho delta^-alpha}"""
    return ExtendedReal.from_log(integral_exponent(n, alpha, beta, rho) * math.log(delta) - rho * delta ** (-alpha))


def predicted_slope(n: int, alpha: float, beta: float) -> float:
    """E - (n-1)/(n+1) com rho = rho_n; negativo exatamente quando beta > (n+1) alpha / 2"""
    return integral_exponent(n, alpha, beta, rho_n(n)) - (n - 1) / (n + 1)


def _log_upper_gamma(s: float, x: float) -> float:
    """log Gamma(s, x) = -x + log int_0^inf e^{-y} (x + y)^{s-1} dy (qualquer s, x > 0)"""
    scaled, _ = quad(lambda y: math.exp(-y) * (x + y) ** (s - 1), 0, math.inf, epsrel=1e-12)
    return -x + math.log(scaled)


def appendix_asymptotic(n: int, alpha: float, beta: float, delta: float, rho: float) -> ExtendedReal:
    """Ordem principal m_rho A^rho Gamma(s, rho delta^-alpha)/(alpha rho^s), s = (rho D - 1)/alpha"""
    f = nth_derivative(seed(alpha, beta), n)
    D = degree(f)
    s = (rho * D - 1) / alpha
    x = rho * delta ** (-alpha)
    log_value = (
        math.log(mean_abs_cos(rho))
        + rho * math.log(limiting_amplitude(f))
        + _log_upper_gamma(s, x)
        - math.log(alpha)
        - s * math.log(rho)
    )
    return ExtendedReal.from_log(log_value)


@dataclass(frozen=True)
class AppendixResult:
    value: ExtendedReal
    t_min: float
    cells: int
    averaged: bool
    # partes escaladas por e^{rho delta^-alpha}
    exact_part: float
    averaged_part: float


def _check_appendix(n, alpha, beta, delta, rho):
    if not beta > alpha:
        raise PreconditionError(f"exige beta > alpha (alpha={alpha}, beta={beta})")
    if not rho > 0:
        raise PreconditionError(f"rho deve ser positivo (recebido {rho})")
    if not 0 < delta <= 0.5:
        raise PreconditionError(f"delta deve estar em (0, 0.5] (recebido {delta})")
    if n < 1:
        raise PreconditionError(f"ordem n deve ser >= 1 (recebido {n})")


def _exact_cells(f: OscFunction, edges: np.ndarray, right_is_node: np.ndarray, rho: float, T0: float, order: int, calibrate: bool) -> float:
    """Soma de Gauss-Jacobi nas células entre nós, com peso |1 -+ x|^rho nos extremos que são nós"""
    lo, hi = edges[:-1], edges[1:]
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    total = 0.0
    for right_node in (True, False):
        sel = right_is_node == right_node
        if not np.any(sel):
            continue
        if calibrate:
            x, w = roots_jacobi(order, 0.0, 0.0)
            total += float(np.sum(w[None, :] * half[sel, None]))
            continue
        ea = 1.0 if right_node else 0.0
        x, w = roots_jacobi(order, rho * ea, rho)
        t = mid[sel, None] + half[sel, None] * x[None, :]
        smooth = np.abs(oscillatory_part(f, t)) / ((1 - x) ** ea * (1 + x))[None, :]
        envelope = np.exp(-rho * (t ** (-f.alpha) - T0))
        total += float(np.sum(w[None, :] * smooth ** rho * envelope * half[sel, None]))
    return total


def appendix_integral_detail(
    n: int,
    alpha: float,
    beta: float,
    delta: float,
    rho: float,
    exact_cells: int | None = None,
    jacobi_order: int | None = None,
    tail_tol: float | None = None,
    calibrate: bool = False,
) -> AppendixResult:
    """int_{t_min}^{delta} |phi^{(n)}(t)|^rho dt para phi = e^{-t^-alpha} sin(t^-beta).

    Os primeiros `exact_cells` meios-períodos abaixo de delta são integrados
    célula a célula entre os nós de oscilação. Daí para baixo |cos|^rho é
    trocado pela sua média m_rho e o resto vira uma integral lisa em
    w = t^-alpha, começando exatamente num nó. t_min vem da envoltória
    monótona C^rho t^{1 - rho D} e^{-rho t^-alpha}. Com calibrate=True o
    integrando é 1 e o resultado é delta - t_min.
    """
    _check_appendix(n, alpha, beta, delta, rho)
    exact_cells = exact_cells or settings.EXACT_CELLS
    order = jacobi_order or settings.JACOBI_ORDER
    tail_tol = settings.TAIL_TOL if tail_tol is None else tail_tol

    f = nth_derivative(seed(alpha, beta), n)
    D = degree(f)
    C = sum(abs(c) for c, _, _ in f.tagged_terms())
    T0 = delta ** (-alpha)

    u0 = delta ** (-beta)
    t_lo = (u0 + exact_cells * math.pi) ** (-1.0 / beta)
    nodes = np.array(oscillation_nodes(f, (t_lo, delta)))
    if nodes.size == 0:
        raise PreconditionError(f"nenhum nó em [{t_lo}, {delta}]")
    if nodes[-1] < delta:
        edges = np.append(nodes, delta)
        right_is_node = np.append(np.ones(nodes.size - 1, dtype=bool), False)
    else:
        edges = nodes
        right_is_node = np.ones(nodes.size - 1, dtype=bool)
    exact = _exact_cells(f, edges, right_is_node, rho, T0, order, calibrate)
    if not exact > 0:
        raise PreconditionError(f"parte exata nula em [{nodes[0]}, {delta}]; aumente exact_cells")
    t_start = float(nodes[0])

    # cauda: log B(t) <= log(tail_tol * parte exata)
    t_mono = (alpha / D) ** (1 / alpha)
    exact_for_tail = exact if not calibrate else 1.0
    target = math.log(tail_tol * exact_for_tail) - rho * T0

    def log_bound(t):
        return (1 - rho * D) * math.log(t) + rho * math.log(C) - rho * t ** (-alpha)

    top = min(t_start, t_mono)
    if log_bound(top) <= target:
        t_min = top
    else:
        low = top / 2
        while log_bound(low) > target:
            low /= 2
        t_min = brentq(lambda t: log_bound(t) - target, low, top, xtol=1e-15)

    averaged = 0.0
    if t_min < t_start:
        if calibrate:
            averaged = t_start - t_min
        else:
            m = mean_abs_cos(rho)
            s = (rho * D - 1) / alpha

            def integrand(w):
                p0, q0 = normalized_parts(f, w ** (beta / alpha))
                amp = math.hypot(float(p0), float(q0))
                return m * amp ** rho * math.exp(-rho * (w - T0)) * w ** (s - 1) / alpha

            averaged, _ = quad(integrand, t_start ** (-alpha), t_min ** (-alpha), limit=400, epsabs=0.0, epsrel=1e-11)

    total = exact + averaged
    if calibrate:
        value = ExtendedReal.from_float(total)
    else:
        value = ExtendedReal.from_log(math.log(total) - rho * T0)
    cells = edges.size - 1
    logger.debug(
        f"integral n={n} alpha={alpha} beta={beta} delta={delta:.4g} rho={rho:.4g}: "
        f"{cells} células, t_min={t_min:.4g}, log10={value.log10():.6f}"
    )
    return AppendixResult(value, t_min, cells, t_min < t_start, exact, averaged)


def appendix_integral(n: int, alpha: float, beta: float, delta: float, rho: float, **options) -> ExtendedReal:
    return appendix_integral_detail(n, alpha, beta, delta, rho, **options).value


def integral_constant(n: int, alpha: float, beta: float, rho: float, delta: float, **options) -> float:
    """c(delta) = J e^{rho delta^-alpha} delta^{rho n (beta+1) - 1 - alpha}"""
    J = appendix_integral(n, alpha, beta, delta, rho, **options)
    return math.exp(J.log() - integral_rhs(n, alpha, beta, rho, delta).log())


# ============ Nitidez ============
@dataclass(frozen=True)
class SharpnessReport:
    n: int
    alpha: float
    beta: float
    rho: float
    delta_grid: list[float]
    J_values: list[ExtendedReal]
    bound_values: list[ExtendedReal]
    log_ratios: list[float]
    ratio_slope: float
    verdict: str
    predicted_slope: float
    asymptotic_values: list[ExtendedReal] = field(default_factory=list)

    @property
    def prediction(self) -> str:
        return slope_verdict(self.predicted_slope)

    def rows(self) -> list[dict]:
        return [
            {
                'delta': d,
                'J_log10': J.log10(),
                'bound_log10': B.log10(),
                'ratio_log10': lr / math.log(10),
                'asymptotic_log10': A.log10(),
            }
            for d, J, B, lr, A in zip(self.delta_grid, self.J_values, self.bound_values, self.log_ratios, self.asymptotic_values)
        ]


def slope_verdict(slope: float) -> str:
    if slope <= -SLOPE_DEAD_BAND:
        return 'diverges'
    if slope >= SLOPE_DEAD_BAND:
        return 'bounded'
    return 'inconclusive'


def knapp_bound(n: int, alpha: float, delta: float) -> ExtendedReal:
    """delta^{(n-1)/(n+1)} e^{-rho_n delta^-alpha}"""
    return ExtendedReal.from_log((n - 1) / (n + 1) * math.log(delta) - rho_n(n) * delta ** (-alpha))


def sharpness_test(n: int, alpha: float, beta: float, delta_grid=None, **options) -> SharpnessReport:
    """Ajusta log(J/cota) contra log delta; inclinação negativa contradiz a desigualdade"""
    grid = [float(d) for d in (DEFAULT_DELTA_GRID if delta_grid is None else delta_grid)]
    if len(grid) < 2:
        raise PreconditionError('a grade de delta precisa de ao menos 2 pontos')
    if any(not 0 < d <= 0.3 for d in grid):
        raise PreconditionError(f"grade de delta fora de (0, 0.3]: {grid}")
    rho = rho_n(n)
    J_values, bounds, log_ratios, asymptotics = [], [], [], []
    for d in grid:
        J = appendix_integral(n, alpha, beta, d, rho, **options)
        B = knapp_bound(n, alpha, d)
        J_values.append(J)
        bounds.append(B)
        log_ratios.append(J.log() - B.log())
        asymptotics.append(appendix_asymptotic(n, alpha, beta, d, rho))
    slope = float(np.polyfit(np.log(grid), log_ratios, 1)[0])
    verdict = slope_verdict(slope)
    expected = predicted_slope(n, alpha, beta)
    report = SharpnessReport(n, alpha, beta, rho, grid, J_values, bounds, log_ratios, slope, verdict, expected, asymptotics)
    message = f"nitidez n={n} alpha={alpha} beta={beta}: inclinação {slope:.4f} (prevista {expected:.4f}) -> {verdict}"
    if verdict == 'inconclusive':
        logger.warning(message)
    else:
        logger.info(message)
    return report


# ============ Soma diádica ============
@dataclass(frozen=True)
class DyadicSumReport:
    pair: ExponentPair
    ks: list[int]
    counts: list[int | None]
    terms: np.ndarray
    partial_sums: np.ndarray
    tail_ratio: float
    verdict: str
    condition: ConditionReport
    k0: int | None = None

    @property
    def gaps(self) -> list[int]:
        return [k for k, c in zip(self.ks, self.counts) if c is None]

    def rows(self) -> list[dict]:
        return [
            {'k': k, 'N_k': c, 'term': t, 'partial_sum': s}
            for k, c, t, s in zip(self.ks, self.counts, self.terms, self.partial_sums)
        ]


def tail_ratio(ks, terms) -> float:
    """2^b, b a inclinação de log2(termo) contra k no último terço da faixa"""
    ks = np.asarray(ks)
    terms = np.asarray(terms, dtype=float)
    start = len(ks) - max(2, len(ks) // 3)
    tail_k, tail_t = ks[start:], terms[start:]
    positive = tail_t > 0
    if positive.sum() < 2:
        return 0.0
    slope = np.polyfit(tail_k[positive], np.log2(tail_t[positive]), 1)[0]
    return float(2.0 ** slope)


def numeric_verdict(ratio: float) -> str:
    if ratio < CONVERGES_BELOW:
        return 'converges'
    if ratio >= 1.0:
        return 'diverges'
    return 'inconclusive'


def dyadic_restriction_sum(
    phi: SmoothFn,
    n: int,
    pair: ExponentPair,
    k_range: tuple[int, int] | None = None,
    resolution: float = 1e-3,
    domain: tuple[float, float] = (0.0, 1.0),
    smoothness: float | None = None,
    levels: list[DyadicLevel] | None = None,
) -> DyadicSumReport:
    """S_K = sum_{k0 <= k <= K} N_k 2^{-k(rho_n + eps)} 2^{k q/p'} sobre os níveis de phi = phi^{(n)}.

    Sem k_range usa [k0, k0 + 40]. `levels` permite reaproveitar contagens já feitas.
    """
    if pair.n != n:
        raise PreconditionError(f"par com n={pair.n} para curva com n={n}")
    start = None
    if levels is None:
        if k_range is None:
            start = k0(phi, domain, resolution)
            k_range = (start, start + 40)
        levels = dyadic_counts(phi, domain, k_range, resolution)
    ks = [lv.k for lv in levels]
    counts = [lv.count for lv in levels]
    exponent = -(rho_n(n) + pair.eps) + pair.q_over_p_conj
    terms = np.array([(c or 0) * 2.0 ** (k * exponent) for k, c in zip(ks, counts)])
    partial = np.cumsum(terms)
    ratio = tail_ratio(ks, terms)
    verdict = numeric_verdict(ratio)
    condition = convergence_condition(pair, smoothness)
    report = DyadicSumReport(pair, ks, counts, terms, partial, ratio, verdict, condition, start)
    logger.info(
        f"soma diádica p={pair.p} q={pair.q} eps={pair.eps}: razão de cauda {ratio:.4f} -> {verdict}"
        f" (condição no limite: {condition.holds_limit})"
    )
    if report.gaps:
        logger.warning(f"níveis sem contagem: {report.gaps}")
    return report
