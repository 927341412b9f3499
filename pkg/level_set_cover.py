# level_set_cover.py
"""Cobertura por conjuntos de nível: os intervalos I_t delimitados por a_t e b_t,
a contagem N(r; phi), as coberturas diádicas r = 2^-k e as verificações derivadas.

Classes de uma amostra no nível r:
    parada   |phi| <= r/4 ou |phi| >= 2r (empate conta como atingido)
    E_r      r/2 <= |phi| <= r
    livre    o resto
Cada intervalo é uma sequência maximal de amostras sem parada que contém
ao menos uma amostra de E_r.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from curve_geometry import OscSmoothFn, RescaledFn, SmoothFn
from errors import CoverResolutionError, LabError, PreconditionError
from osc_symbolic import OscFunction, evaluate_array, oscillation_nodes

logger = logging.getLogger(__name__)

# Largura mínima de bisseção, relativa ao comprimento do domínio
BISECTION_WIDTH = 1e-13
MAX_REFINE_ROUNDS = 200
MAX_SAMPLES = 20_000_000
# Níveis (em unidades de r) usados para preencher pares abaixo da resolução
_FILL_LEVELS = np.array([-3.0, -1.5, -0.75, -0.375, -0.125, 0.0, 0.125, 0.375, 0.75, 1.5, 3.0])


@dataclass(frozen=True)
class LevelInterval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool
    sign: int
    witness: float
    # extremos vindos do modelo linear (intervalo mais estreito que a resolução de ponto flutuante)
    subresolution: bool = False


@dataclass(frozen=True)
class LevelCover:
    r: float
    domain: tuple[float, float]
    intervals: tuple[LevelInterval, ...] = ()
    # pares de amostras com max|phi'| * dt >= 1.75 r (a malha pode saltar de faixa)
    coarse_pairs: int = 0

    @property
    def count(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class LevelSamples:
    """Amostras compartilhadas entre vários níveis r >= 8 * floor.

    Quando phi' está disponível, os extremos locais de phi entre amostras
    vizinhas entram na malha e slopes guarda phi' em cada ponto.
    """

    t: np.ndarray
    values: np.ndarray
    domain: tuple[float, float]
    floor: float
    resolution: float
    slopes: np.ndarray | None = None


def _check_domain(domain) -> tuple[float, float]:
    a, b = (float(x) for x in domain)
    if not a < b:
        raise PreconditionError(f"domínio vazio: [{a}, {b}]")
    return a, b


def _slopes(phi: SmoothFn, t: np.ndarray) -> np.ndarray | None:
    try:
        slopes = phi.deriv_array(1, t)
    except PreconditionError:
        return None
    if not np.all(np.isfinite(slopes)):
        logger.warning("phi' não finita na malha: extremos entre amostras não serão buscados")
        return None
    return slopes


def _local_extrema(phi: SmoothFn, t: np.ndarray, slopes: np.ndarray, tol: float):
    """Extremos de phi entre amostras vizinhas onde phi' troca de sinal"""
    bracket = np.nonzero(slopes[:-1] * slopes[1:] < 0)[0]
    lo, hi = t[bracket].copy(), t[bracket + 1].copy()
    sign_lo = np.sign(slopes[bracket])
    for _ in range(MAX_REFINE_ROUNDS):
        active = hi - lo > tol
        if not np.any(active):
            break
        mids = (lo[active] + hi[active]) / 2
        same = np.sign(phi.deriv_array(1, mids)) == sign_lo[active]
        lo[active] = np.where(same, mids, lo[active])
        hi[active] = np.where(same, hi[active], mids)
    ext = (lo + hi) / 2
    inside = (ext > t[bracket]) & (ext < t[bracket + 1])
    return bracket[inside], ext[inside]


def sample(phi: SmoothFn, domain, resolution: float, floor: float = 0.0) -> LevelSamples:
    a, b = _check_domain(domain)
    t = phi.sample_grid((a, b), resolution, floor)
    slopes = _slopes(phi, t)
    if slopes is not None:
        bracket, ext = _local_extrema(phi, t, slopes, BISECTION_WIDTH * (b - a))
        if ext.size:
            t = np.insert(t, bracket + 1, ext)
            slopes = _slopes(phi, t)
            logger.debug(f"{ext.size} extremos de phi inseridos entre amostras")
    values = phi.deriv_array(0, t)
    if not np.all(np.isfinite(values)):
        raise CoverResolutionError('phi não finita na malha', (a, b))
    logger.debug(f"{t.size} amostras em [{a}, {b}] (floor={floor:.3g})")
    return LevelSamples(t, values, (a, b), floor, resolution, slopes)


def _coarse_pairs(samples: LevelSamples, r: float) -> np.ndarray:
    """Pares onde o phi' amostrado permite atravessar de r/4 a 2r entre vizinhos.

    Pares com as duas pontas em |phi| >= 2r ficam de fora: um vale entre
    elas já entra na malha como extremo.
    """
    if samples.slopes is None:
        return np.zeros(0, dtype=int)
    steep = np.maximum(np.abs(samples.slopes[:-1]), np.abs(samples.slopes[1:]))
    mag = np.abs(samples.values)
    reachable = np.minimum(mag[:-1], mag[1:]) < 2 * r
    return np.nonzero(reachable & (steep * np.diff(samples.t) >= 1.75 * r))[0]


def _classify(values: np.ndarray, r: float):
    mag = np.abs(values)
    low = mag <= r / 4
    high = mag >= 2 * r
    in_e = (mag >= r / 2) & (mag <= r)
    return low, high, in_e


def _unresolved(values: np.ndarray, r: float) -> np.ndarray:
    """Pares vizinhos que atravessam E_r sem amostrá-lo ou trocam de sinal sem passar por |phi| <= r/4"""
    low, _, _ = _classify(values, r)
    mag = np.abs(values)
    lower = np.minimum(mag[:-1], mag[1:])
    upper = np.maximum(mag[:-1], mag[1:])
    # inclui os saltos parada baixa -> parada alta
    skip = (lower < r / 2) & (upper > r)
    flip = ~low[:-1] & ~low[1:] & (np.sign(values[:-1]) != np.sign(values[1:]))
    return skip | flip


def _linear_fill(t, v, virtual, pairs, r):
    """Insere amostras do modelo linear nos pares que já estão na largura mínima"""
    levels = _FILL_LEVELS * r
    idx, new_t, new_v = [], [], []
    for i in pairs:
        v0, v1 = v[i], v[i + 1]
        lo, hi = min(v0, v1), max(v0, v1)
        chosen = levels[(levels > lo) & (levels < hi)]
        if v1 < v0:
            chosen = chosen[::-1]
        frac = (chosen - v0) / (v1 - v0)
        idx.extend([i + 1] * chosen.size)
        new_t.extend(t[i] + frac * (t[i + 1] - t[i]))
        new_v.extend(chosen)
    return (
        np.insert(t, idx, new_t),
        np.insert(v, idx, new_v),
        np.insert(virtual, idx, True),
    )


def _refine(phi, t, v, r, min_width, strict):
    virtual = np.zeros(t.size, dtype=bool)
    for _ in range(MAX_REFINE_ROUNDS):
        bad = np.nonzero(_unresolved(v, r))[0]
        if bad.size == 0:
            return t, v, virtual
        width = t[bad + 1] - t[bad]
        tiny = width <= min_width
        if np.any(tiny):
            first = bad[tiny][0]
            if strict:
                raise CoverResolutionError(
                    f"salto de faixa entre amostras em [{t[first]!r}, {t[first + 1]!r}] no nível r={r:.3g}",
                    (float(t[first]), float(t[first + 1])),
                )
            t, v, virtual = _linear_fill(t, v, virtual, bad[tiny], r)
            continue
        mids = (t[bad] + t[bad + 1]) / 2
        mid_values = phi.deriv_array(0, mids)
        if not np.all(np.isfinite(mid_values)):
            raise CoverResolutionError('phi não finita durante o refinamento', (float(mids[0]), float(mids[-1])))
        t = np.insert(t, bad + 1, mids)
        v = np.insert(v, bad + 1, mid_values)
        virtual = np.insert(virtual, bad + 1, False)
        if t.size > MAX_SAMPLES:
            raise CoverResolutionError(f"refinamento excedeu {MAX_SAMPLES} amostras", (float(t[0]), float(t[-1])))
    raise CoverResolutionError(f"refinamento não convergiu no nível r={r:.3g}", (float(t[0]), float(t[-1])))


def _bisect_boundary(phi, r, sign, inside, outside, tol):
    """Bisseção vetorizada da fronteira parada/não parada; devolve o extremo interno"""
    inside, outside = inside.copy(), outside.copy()
    for _ in range(MAX_REFINE_ROUNDS):
        active = np.abs(inside - outside) > tol
        mids = (inside + outside) / 2
        active &= (mids != inside) & (mids != outside)
        if not np.any(active):
            break
        m = mids[active]
        values = phi.deriv_array(0, m)
        low, high, _ = _classify(values, r)
        ok = ~(low | high) & (np.sign(values) == sign[active])
        inside[active] = np.where(ok, m, inside[active])
        outside[active] = np.where(ok, outside[active], m)
    return inside


def build_cover(
    phi: SmoothFn,
    domain,
    r: float,
    resolution: float,
    samples: LevelSamples | None = None,
    strict: bool = False,
) -> LevelCover:
    """Constrói {I_t} no nível r e devolve a cobertura com N(r; phi) = count.

    Pares de amostras que saltam de faixa são refinados por bisseção. Com
    strict=True, um salto que persiste até a largura mínima gera
    CoverResolutionError; sem strict, o par é resolvido pelo modelo linear.
    """
    if not r > 0:
        raise PreconditionError(f"r deve ser positivo (recebido {r})")
    a, b = _check_domain(domain)
    if samples is None:
        samples = sample(phi, (a, b), resolution, floor=r / 8)
    elif samples.domain != (a, b) or samples.floor > r / 8:
        raise PreconditionError(f"amostras de [{samples.domain}] com floor {samples.floor} não servem para r={r}")

    coarse = _coarse_pairs(samples, r)
    if coarse.size:
        first = coarse[0]
        logger.warning(
            f"{coarse.size} pares com |phi'| dt >= 1.75 r no nível r={r:.3g}, "
            f"o primeiro em [{samples.t[first]:.6g}, {samples.t[first + 1]:.6g}]"
        )

    tol = BISECTION_WIDTH * (b - a)
    t, v, virtual = _refine(phi, samples.t, samples.values, r, tol, strict)
    low, high, in_e = _classify(v, r)
    nonstop = ~(low | high)

    edges = np.diff(np.concatenate([[0], nonstop.astype(np.int8), [0]]))
    starts = np.nonzero(edges == 1)[0]
    ends = np.nonzero(edges == -1)[0] - 1
    e_cum = np.concatenate([[0], np.cumsum(in_e)])
    keep = e_cum[ends + 1] - e_cum[starts] > 0
    starts, ends = starts[keep], ends[keep]
    if starts.size == 0:
        return LevelCover(r, (a, b), coarse_pairs=int(coarse.size))

    signs = np.sign(v[starts])
    lo = t[starts].copy()
    hi = t[ends].copy()
    inner_lo = starts > 0
    if np.any(inner_lo):
        lo[inner_lo] = _bisect_boundary(phi, r, signs[inner_lo], t[starts[inner_lo]], t[starts[inner_lo] - 1], tol)
    inner_hi = ends < t.size - 1
    if np.any(inner_hi):
        hi[inner_hi] = _bisect_boundary(phi, r, signs[inner_hi], t[ends[inner_hi]], t[ends[inner_hi] + 1], tol)

    e_index = np.nonzero(in_e)[0]
    witnesses = t[e_index[np.searchsorted(e_index, starts)]]
    v_cum = np.concatenate([[0], np.cumsum(virtual)])
    virt = v_cum[np.minimum(ends + 2, t.size)] - v_cum[np.maximum(starts - 1, 0)] > 0

    intervals = tuple(
        LevelInterval(
            lo=float(lo[j]),
            hi=float(hi[j]),
            lo_closed=bool(starts[j] == 0),
            hi_closed=bool(ends[j] == t.size - 1),
            sign=int(signs[j]),
            witness=float(witnesses[j]),
            subresolution=bool(virt[j]),
        )
        for j in range(starts.size)
    )
    logger.debug(f"N(r={r:.4g}) = {len(intervals)} em [{a}, {b}]")
    return LevelCover(r, (a, b), intervals, int(coarse.size))


def dyadic_cover(phi: SmoothFn, domain, k: int, resolution: float, samples: LevelSamples | None = None, strict: bool = False) -> LevelCover:
    """Cobertura no nível r = 2^-k (faixa relaxada 2^{-k-2} <= |phi| <= 2^{-k+1})"""
    return build_cover(phi, domain, 2.0 ** (-k), resolution, samples=samples, strict=strict)


@dataclass(frozen=True)
class DyadicLevel:
    k: int
    count: int | None
    gap: str | None = None

    @property
    def r(self) -> float:
        return 2.0 ** (-self.k)


def dyadic_counts(phi: SmoothFn, domain, k_range: tuple[int, int], resolution: float, strict: bool = False) -> list[DyadicLevel]:
    """N_k para k_lo <= k <= k_hi com uma única amostragem; falhas viram lacunas"""
    k_lo, k_hi = k_range
    if k_lo > k_hi:
        raise PreconditionError(f"faixa de k vazia: {k_range}")
    shared = sample(phi, domain, resolution, floor=2.0 ** (-k_hi) / 8)
    levels = []
    for k in range(k_lo, k_hi + 1):
        try:
            levels.append(DyadicLevel(k, dyadic_cover(phi, domain, k, resolution, shared, strict).count))
        except LabError as exc:
            logger.warning(f"nível k={k} sem contagem: {exc}")
            levels.append(DyadicLevel(k, None, str(exc)))
    logger.info(f"contagens diádicas em k=[{k_lo}, {k_hi}]: {sum(1 for lv in levels if lv.gap)} lacunas")
    return levels


def k0(phi_n: SmoothFn, domain, resolution: float) -> int:
    """ceil(-log2 sup|phi^{(n)}|) - 1 com o sup tomado nas amostras"""
    a, b = _check_domain(domain)
    coarse = np.abs(phi_n.deriv_array(0, SmoothFn.sample_grid(phi_n, (a, b), resolution)))
    sup = float(coarse.max())
    if sup == 0.0:
        raise PreconditionError('phi^{(n)} nula nas amostras: k0 indefinido')
    fine = np.abs(phi_n.deriv_array(0, phi_n.sample_grid((a, b), resolution, floor=sup / 2)))
    sup = max(sup, float(fine.max()))
    return math.ceil(-math.log2(sup)) - 1


# ============ Primeira variação ============
@dataclass(frozen=True)
class FirstVariationReport:
    r: float
    N: int
    N_prime: int | None
    level_prime: float | None
    applicable: bool
    holds: bool | None
    raw_N: int
    raw_N_prime: int | None


def verify_first_variation(phi: SmoothFn, domain, r: float, resolution: float) -> FirstVariationReport:
    """N((N/8) r; phi') >= N/16 com o domínio levado a [0, 1] por mudança afim"""
    a, b = _check_domain(domain)
    raw_N = build_cover(phi, (a, b), r, resolution).count
    rescaled = RescaledFn(phi, (a, b))
    unit_resolution = resolution / (b - a)
    N = build_cover(rescaled, (0.0, 1.0), r, unit_resolution).count
    if N < 20:
        logger.warning(f"primeira variação inaplicável: N(r={r}) = {N} < 20")
        return FirstVariationReport(r, N, None, None, False, None, raw_N, None)

    level = N * r / 8
    N_prime = build_cover(rescaled.derivative(1), (0.0, 1.0), level, unit_resolution).count
    raw_N_prime = build_cover(phi.derivative(1), (a, b), raw_N * r / 8, resolution).count
    holds = N_prime >= N / 16
    logger.info(f"primeira variação: N={N}, N'={N_prime} (bruto {raw_N}, {raw_N_prime}), vale={holds}")
    return FirstVariationReport(r, N, N_prime, level, True, holds, raw_N, raw_N_prime)


# ============ Expoente de crescimento ============
@dataclass(frozen=True)
class GrowthReport:
    slope: float
    levels: list[DyadicLevel] = field(default_factory=list)

    @property
    def gaps(self) -> list[int]:
        return [lv.k for lv in self.levels if lv.gap is not None]


def fit_growth(levels: list[DyadicLevel]) -> float:
    """Inclinação de mínimos quadrados de log2 N_k contra k (só contagens positivas)"""
    pts = [(lv.k, math.log2(lv.count)) for lv in levels if lv.count]
    if len(pts) < 2:
        return 0.0
    ks, logs = zip(*pts)
    return float(np.polyfit(ks, logs, 1)[0])


def growth_exponent(phi: SmoothFn, domain, k_range: tuple[int, int], resolution: float) -> GrowthReport:
    levels = dyadic_counts(phi, domain, k_range, resolution)
    report = GrowthReport(fit_growth(levels), levels)
    logger.info(f"crescimento de log2 N_k em k={k_range}: inclinação {report.slope:.4f}")
    return report


# ============ Soma sobre componentes ============
@dataclass(frozen=True)
class ComponentSumReport:
    delta: float
    t_start: float
    sups: np.ndarray
    partial_sums: np.ndarray

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1]) if self.partial_sums.size else 0.0


def component_sup_sum(f: OscFunction, domain, delta: float, floor: float, points: int = 65) -> ComponentSumReport:
    """sum_k (sup_{I_k} |phi|)^delta sobre as componentes de domain menos os zeros de phi.

    Componentes abaixo de t_start (onde a envoltória fica <= floor) são omitidas.
    As parciais seguem as componentes em ordem decrescente de t.
    """
    if not delta > 0:
        raise PreconditionError(f"delta deve ser positivo (recebido {delta})")
    a, b = _check_domain(domain)
    start = max(a, OscSmoothFn(f).quiet_below(floor, b))
    if start <= 0:
        raise PreconditionError('componentes exigem domínio em t > 0 ou floor > 0')
    if start >= b:
        empty = np.array([])
        return ComponentSumReport(delta, start, empty, empty)
    nodes = oscillation_nodes(f, (start, b))
    edges = np.unique(np.concatenate([[start], nodes, [b]]))
    lo, hi = edges[:-1], edges[1:]
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, points)[None, :]
    sups = np.abs(evaluate_array(f, grid)).max(axis=1)[::-1]
    partial = np.cumsum(sups ** delta)
    logger.info(f"soma sobre {sups.size} componentes (delta={delta}): {partial[-1] if partial.size else 0.0:.6g}")
    return ComponentSumReport(delta, start, sups, partial)


# ============ Linhas CSV ============
def cover_rows(cover: LevelCover, k: int | None = None) -> list[dict]:
    return [
        {
            'k': k,
            'j': j,
            'lo': iv.lo,
            'hi': iv.hi,
            'lo_closed': iv.lo_closed,
            'hi_closed': iv.hi_closed,
            'sign': iv.sign,
            'witness': iv.witness,
            'subresolution': iv.subresolution,
        }
        for j, iv in enumerate(cover.intervals)
    ]


def level_rows(levels: list[DyadicLevel]) -> list[dict]:
    return [{'k': lv.k, 'N_k': lv.count, 'gap': lv.gap or ''} for lv in levels]
