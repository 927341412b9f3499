import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from curve_geometry import OscSmoothFn, SimpleCurve
from errors import DomainError, PreconditionError
from level_set_cover import DyadicLevel
from osc_symbolic import evaluate_array, nth_derivative, oscillation_nodes, seed
from restriction_experiments import (
    DEEP_DELTA_GRID,
    DEFAULT_DELTA_GRID,
    ExponentPair,
    _log_upper_gamma,
    appendix_asymptotic,
    appendix_integral,
    appendix_integral_detail,
    convergence_condition,
    dyadic_restriction_sum,
    integral_constant,
    knapp_box_bound,
    knapp_draws,
    knapp_membership,
    knapp_norm_scale,
    knapp_profile,
    knapp_rhs_exponent,
    mean_abs_cos,
    numeric_verdict,
    predicted_slope,
    rescaled_piece_bound,
    rho_n,
    sharpness_test,
    slope_verdict,
    tail_ratio,
)


def test_rho_n():
    assert [rho_n(n) for n in (2, 3, 4)] == pytest.approx([1 / 3, 1 / 6, 1 / 10])


def test_faixas_do_par():
    # n = 3: p < 7/6 e reta final q = p'/6
    endline = ExponentPair(1.05, 3.5, 3)
    assert endline.p_conj == pytest.approx(21.0)
    assert endline.on_endline
    assert endline.in_closed_range and not endline.in_open_range

    inside = ExponentPair(1.05, 2.0, 3)
    assert inside.in_closed_range and inside.in_open_range

    above = ExponentPair(1.05, 4.0, 3)
    assert not above.in_closed_range and not above.in_open_range

    assert not ExponentPair(1.2, 1.0, 3).in_closed_range

    unit = ExponentPair(1.0, 5.0, 3)
    assert unit.p_conj == math.inf
    assert unit.q_over_p_conj == 0.0
    assert unit.in_closed_range and unit.in_open_range


def test_par_invalido():
    with pytest.raises(PreconditionError):
        ExponentPair(0.5, 1.0, 3)
    with pytest.raises(PreconditionError):
        ExponentPair(1.5, 0.9, 3)
    with pytest.raises(PreconditionError):
        ExponentPair(1.5, 1.0, 1)


def test_cota_da_peca_reescalada():
    assert rescaled_piece_bound(0.25, ExponentPair(1.2, 1.0, 3)) == pytest.approx(0.25 ** (-1 / 6))
    assert rescaled_piece_bound(0.25, ExponentPair(1.0, 1.0, 3)) == 1.0
    with pytest.raises(PreconditionError):
        rescaled_piece_bound(0.0, ExponentPair(1.2, 1.0, 3))


def test_condicao_de_convergencia():
    pair = ExponentPair(1.05, 1.0, 3, eps=0.1)
    report = convergence_condition(pair)
    assert report.lhs == pytest.approx(1 / 6 + 0.1)
    assert report.rhs_limit == pytest.approx(1 / 21)
    assert report.holds_limit
    assert report.holds_finite is None

    finite = convergence_condition(pair, smoothness=4.0)
    assert finite.rhs_finite == pytest.approx(1 / 21 + 1.0)
    assert finite.holds_finite is False
    assert convergence_condition(pair, smoothness=100.0).holds_finite is True
    with pytest.raises(PreconditionError):
        convergence_condition(pair, smoothness=3.0)

    assert convergence_condition(ExponentPair(1.05, 2.0, 3)).holds_limit is True
    assert convergence_condition(ExponentPair(1.05, 4.0, 3)).holds_limit is False


def test_expoentes_de_knapp():
    prof = knapp_profile(3, 1.0, 0.1)
    ex = knapp_rhs_exponent(prof, ExponentPair(1.2, 1.0, 3))
    assert (ex.poly_exp, ex.exp_coeff) == pytest.approx((0.5, 1 / 6))
    assert not ex.degenerate

    ex = knapp_rhs_exponent(knapp_profile(2, 1.0, 0.1), ExponentPair(1.5, 1.0, 2))
    assert (ex.poly_exp, ex.exp_coeff) == pytest.approx((1 / 3, 1 / 3))

    ex = knapp_rhs_exponent(prof, ExponentPair(1.0, 1.0, 3))
    assert (ex.poly_exp, ex.exp_coeff, ex.degenerate) == (0.0, 0.0, True)


def test_escalas_de_knapp():
    prof = knapp_profile(3, 1.0, 0.1)
    assert prof.poly_scales == pytest.approx((0.1, 0.01))
    assert prof.last_scale.log() == pytest.approx(-10.0)
    assert len(prof.scales) == 3

    norm = knapp_norm_scale(prof, ExponentPair(1.2, 1.0, 3))
    assert norm.log() == pytest.approx(0.5 * math.log(0.1) - 10 / 6)

    box = knapp_box_bound(prof)
    assert box.log() == pytest.approx(3 * math.log(2.0) + math.log(0.1) + math.log(0.01) - 10.0)

    with pytest.raises(PreconditionError):
        knapp_profile(3, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        knapp_profile(1, 1.0, 0.1)


@pytest.mark.parametrize('n', [2, 3, 4])
@pytest.mark.parametrize('delta', [0.05, 0.1, 0.2])
def test_pertinencia_de_knapp(n, delta, rng, seed_family):
    curve = SimpleCurve(n, OscSmoothFn(seed_family), (0.0, 1.0))
    prof = knapp_profile(n, 1.0, delta)
    draws = knapp_draws(prof, 1000, rng)
    assert np.all((draws > 0) & (draws <= delta))
    assert all(knapp_membership(curve, prof, float(t)) for t in draws)
    assert not knapp_membership(curve, prof, 2 * delta)


def test_pertinencia_invalida(seed_family):
    curve = SimpleCurve(3, OscSmoothFn(seed_family), (0.0, 1.0))
    with pytest.raises(DomainError):
        knapp_membership(curve, knapp_profile(3, 1.0, 0.1), 0.0)
    with pytest.raises(PreconditionError):
        knapp_membership(curve, knapp_profile(2, 1.0, 0.1), 0.05)


def test_media_de_cos():
    assert mean_abs_cos(1.0) == pytest.approx(2 / math.pi)
    assert mean_abs_cos(2.0) == pytest.approx(0.5)
    assert mean_abs_cos(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize('s,x', [(1.0, 5.0), (2.5, 3.0), (0.5, 10.0), (4.0, 40.0)])
def test_gama_incompleta(s, x):
    expected = math.log(gammaincc(s, x) * gamma_fn(s))
    assert _log_upper_gamma(s, x) == pytest.approx(expected, rel=1e-9)


def test_inclinacao_prevista():
    assert predicted_slope(3, 1.0, 3.0) == pytest.approx(-0.5)
    assert predicted_slope(3, 1.0, 1.5) == pytest.approx(0.25)
    assert predicted_slope(3, 1.0, 2.0) == pytest.approx(0.0, abs=1e-12)
    assert slope_verdict(-0.5) == 'diverges'
    assert slope_verdict(0.05) == 'inconclusive'
    assert slope_verdict(0.25) == 'bounded'


def test_calibracao_da_integral():
    result = appendix_integral_detail(3, 1.0, 2.0, 0.2, 1 / 6, calibrate=True)
    assert result.value.to_float() == pytest.approx(0.2 - result.t_min, rel=1e-10)
    assert result.averaged
    assert 0 < result.t_min < 0.2


def test_integral_parametros_invalidos():
    with pytest.raises(PreconditionError):
        appendix_integral(3, 2.0, 2.0, 0.1, 1 / 6)
    with pytest.raises(PreconditionError):
        appendix_integral(3, 1.0, 2.0, 0.6, 1 / 6)
    with pytest.raises(PreconditionError):
        appendix_integral(3, 1.0, 2.0, 0.1, 0.0)


@pytest.mark.slow
def test_integral_contra_quadratura_por_celula():
    # n=2, alpha=1, beta=2, rho=1/3: abaixo de t=0.018 o resto é < 1e-7 relativo
    n, alpha, beta, rho, delta = 2, 1.0, 2.0, 1 / 3, 0.2
    f = nth_derivative(seed(alpha, beta), n)
    edges = [0.018, *oscillation_nodes(f, (0.018, delta)), delta]

    def integrand(t):
        return abs(float(evaluate_array(f, t))) ** rho

    reference = sum(
        quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)[0]
        for lo, hi in zip(edges, edges[1:])
        if hi > lo
    )
    value = appendix_integral(n, alpha, beta, delta, rho).to_float()
    assert value == pytest.approx(reference, rel=1e-4)


@pytest.mark.slow
def test_integral_rho_um_telescopica():
    # com rho = 1 cada célula vale |phi''(t_{j+1}) - phi''(t_j)|
    n, alpha, beta, delta = 3, 1.0, 3.0, 0.2
    lower = nth_derivative(seed(alpha, beta), n - 1)
    f = nth_derivative(seed(alpha, beta), n)
    t_small = 60_000 ** (-1 / beta)
    nodes = oscillation_nodes(f, (t_small, delta))
    points = np.array([*nodes, delta])
    reference = float(np.sum(np.abs(np.diff(evaluate_array(lower, points)))))
    value = appendix_integral(n, alpha, beta, delta, 1.0).to_float()
    assert value == pytest.approx(reference, rel=1e-4)


def _tanh_sinh(h=1 / 16, reach=3.0):
    """Nós e pesos tanh-sinh em [-1, 1]"""
    k = h * np.arange(-int(reach / h), int(reach / h) + 1)
    s = math.pi / 2 * np.sinh(k)
    return np.tanh(s), math.pi / 2 * h * np.cosh(k) / np.cosh(s) ** 2


@pytest.mark.slow
def test_integral_contra_quadratura_em_u():
    # em u = t^-3 cada meio-período vira uma célula de largura ~pi;
    # abaixo de t = 1/80 o resto relativo é ~ e^{-(80 - 5)/6} < 1e-5
    n, alpha, beta, rho, delta = 3, 1.0, 3.0, 1 / 6, 0.2
    f = nth_derivative(seed(alpha, beta), n)
    t_small = 1 / 80
    nodes = oscillation_nodes(f, (t_small, delta), cap=400_000)
    u_edges = np.unique(np.array([t_small, *nodes, delta]) ** -beta)
    x, w = _tanh_sinh()

    reference = 0.0
    for start in range(0, u_edges.size - 1, 4000):
        lo, hi = u_edges[start:start + 4001][:-1], u_edges[start + 1:start + 4001]
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        u = mid[:, None] + half[:, None] * x[None, :]
        g = np.abs(evaluate_array(f, u ** (-1 / beta))) ** rho * u ** (-(beta + 1) / beta) / beta
        reference += float(np.sum((g @ w) * half))

    value = appendix_integral(n, alpha, beta, delta, rho).to_float()
    assert value == pytest.approx(reference, rel=1e-4)


def test_assintotica_perto_de_zero():
    # s = (rho D - 1)/alpha = 1 para n=3, beta=3
    J = appendix_integral(3, 1.0, 3.0, 0.01, 1 / 6)
    A = appendix_asymptotic(3, 1.0, 3.0, 0.01, 1 / 6)
    assert J.log() - A.log() == pytest.approx(0.0, abs=2e-2)


@pytest.mark.slow
@pytest.mark.parametrize('n,alpha,beta,rho', [(2, 1.0, 2.0, 1 / 3), (3, 1.0, 3.0, 1 / 6), (3, 0.5, 2.0, 1 / 6)])
def test_constante_da_integral_estavel(n, alpha, beta, rho):
    values = [integral_constant(n, alpha, beta, rho, d) for d in DEFAULT_DELTA_GRID]
    assert all(v > 0 for v in values)
    assert max(values) / min(values) <= 3.0


@pytest.mark.slow
def test_nitidez_beta_tres():
    report = sharpness_test(3, 1.0, 3.0)
    assert report.ratio_slope == pytest.approx(-0.5, abs=0.2)
    assert report.verdict == 'diverges'
    assert report.prediction == 'diverges'
    rows = report.rows()
    assert len(rows) == len(DEFAULT_DELTA_GRID)
    assert set(rows[0]) == {'delta', 'J_log10', 'bound_log10', 'ratio_log10', 'asymptotic_log10'}


@pytest.mark.slow
def test_nitidez_beta_um_e_meio():
    report = sharpness_test(3, 1.0, 1.5, DEEP_DELTA_GRID)
    assert report.ratio_slope == pytest.approx(0.25, abs=0.2)
    assert report.verdict == 'bounded'


@pytest.mark.slow
def test_nitidez_no_limiar():
    report = sharpness_test(3, 1.0, 2.0, DEEP_DELTA_GRID)
    assert abs(report.ratio_slope) <= 0.15


def test_nitidez_grade_invalida():
    with pytest.raises(PreconditionError):
        sharpness_test(3, 1.0, 3.0, [0.1])
    with pytest.raises(PreconditionError):
        sharpness_test(3, 1.0, 3.0, [0.1, 0.5])


def test_razao_de_cauda():
    ks = list(range(12))
    assert tail_ratio(ks, [2.0 ** (-k) for k in ks]) == pytest.approx(0.5)
    assert tail_ratio(ks, [3.0] * 12) == pytest.approx(1.0)
    assert tail_ratio(ks, [0.0] * 12) == 0.0
    assert numeric_verdict(0.5) == 'converges'
    assert numeric_verdict(0.97) == 'inconclusive'
    assert numeric_verdict(1.0) == 'diverges'


@pytest.fixture(scope='module')
def seed_third_derivative():
    return OscSmoothFn(nth_derivative(seed(1.0, 2.0), 3))


@pytest.fixture(scope='module')
def endline_report(seed_third_derivative):
    return dyadic_restriction_sum(seed_third_derivative, 3, ExponentPair(1.05, 3.5, 3))


def _levels(report):
    return [DyadicLevel(k, c) for k, c in zip(report.ks, report.counts)]


@pytest.mark.slow
def test_soma_na_reta_final_diverge(endline_report):
    assert -20 <= endline_report.k0 <= -18
    assert endline_report.ks == list(range(endline_report.k0, endline_report.k0 + 41))
    assert not endline_report.gaps
    assert endline_report.tail_ratio >= 1.0
    assert endline_report.verdict == 'diverges'
    assert np.all(np.diff(endline_report.partial_sums) >= 0)
    assert set(endline_report.rows()[0]) == {'k', 'N_k', 'term', 'partial_sum'}


@pytest.mark.slow
def test_soma_abaixo_da_reta_converge(seed_third_derivative, endline_report):
    pair = ExponentPair(1.05, 1.0, 3, eps=0.1)
    report = dyadic_restriction_sum(seed_third_derivative, 3, pair, levels=_levels(endline_report))
    assert report.tail_ratio < 0.95
    assert report.verdict == 'converges'
    assert report.condition.holds_limit
    assert report.k0 is None


@pytest.mark.slow
def test_razao_cresce_com_q(seed_third_derivative, endline_report):
    levels = _levels(endline_report)
    ratios = [
        dyadic_restriction_sum(seed_third_derivative, 3, ExponentPair(1.05, q, 3), levels=levels).tail_ratio
        for q in (1.0, 2.0, 3.0, 3.5)
    ]
    assert ratios == sorted(ratios)
    assert ratios[0] < ratios[-1]


def test_soma_com_n_incompativel(seed_third_derivative):
    with pytest.raises(PreconditionError):
        dyadic_restriction_sum(seed_third_derivative, 2, ExponentPair(1.05, 1.0, 3))
