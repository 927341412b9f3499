import itertools
import math

import mpmath as mp
import numpy as np
import pytest

from errors import DegeneratePhaseError, DomainError, NodeResolutionError, PreconditionError
from osc_symbolic import (
    ExponentTriple,
    add,
    amplitude_phase,
    degree,
    differentiate,
    evaluate,
    evaluate_array,
    from_terms_text,
    leading_exponent,
    limiting_amplitude,
    limiting_phase,
    make,
    normalized_parts,
    nth_derivative,
    oscillation_nodes,
    oscillatory_part,
    scale,
    seed,
    to_terms_text,
)

GRID_PARAMS = [0.5, 1.0, 2.0, 3.0]


def _envelope(f, t):
    """sum |c| t^-e e^{-t^-alpha}: escala para erros relativos perto de zeros"""
    return sum(abs(c) * t ** (-e) for c, e, _ in f.tagged_terms()) * math.exp(-t ** (-f.alpha))


def test_primeira_derivada_da_semente():
    f = differentiate(seed(1.0, 1.0))
    assert f.P.terms == ((1.0, ExponentTriple(1, 0, 1)),)
    assert f.Q.terms == ((-1.0, ExponentTriple(0, 1, 1)),)


def test_valor_da_semente():
    value = evaluate(seed(1.0, 1.0), 2 / math.pi)
    assert value.to_float() == pytest.approx(math.exp(-math.pi / 2), rel=1e-14)


def test_evaluate_fora_do_dominio():
    with pytest.raises(DomainError):
        evaluate(seed(1.0, 2.0), 0.0)
    with pytest.raises(DomainError):
        evaluate_array(seed(1.0, 2.0), [0.5, -1.0])


def test_evaluate_abaixo_do_underflow():
    # e^{-1e4} não cabe em float64
    value = evaluate(seed(1.0, 1.0), 1e-4)
    assert value.to_float() == 0.0
    assert value.log() == pytest.approx(-1e4 + math.log(abs(math.sin(1e4))), rel=1e-12)


@pytest.mark.parametrize('n', range(1, 9))
@pytest.mark.parametrize('alpha,beta', [(a, b) for a, b in itertools.product(GRID_PARAMS, GRID_PARAMS) if b >= a])
def test_lei_do_grau(n, alpha, beta):
    f = nth_derivative(seed(alpha, beta), n)
    assert degree(f) == pytest.approx(n * (beta + 1), abs=1e-12)
    if beta > alpha:
        assert leading_exponent(f) == ExponentTriple(0, n, n)


def test_expoentes_sem_duplicatas():
    f = nth_derivative(seed(1.0, 2.0), 6)
    for poly in (f.P, f.Q):
        values = [e.key(f.alpha, f.beta) for _, e in poly.terms]
        assert values == sorted(set(values), reverse=True)
        assert all(c != 0.0 for c, _ in poly.terms)


def test_derivada_e_linear():
    f = nth_derivative(seed(1.0, 2.0), 2)
    g = make(1.0, 2.0, p_terms=[(3.0, (0, 0, 1))], q_terms=[(-0.5, (1, 1, 0))])
    lhs = differentiate(add(scale(f, 2.0), g))
    rhs = add(scale(differentiate(f), 2.0), differentiate(g))
    # coeficientes diádicos pequenos: as duas ordens de soma são exatas
    assert lhs.P.terms and lhs.Q.terms
    assert lhs.P == rhs.P
    assert lhs.Q == rhs.Q


def test_familias_diferentes():
    with pytest.raises(PreconditionError):
        add(seed(1.0, 2.0), seed(1.0, 3.0))
    with pytest.raises(PreconditionError):
        seed(0.0, 1.0)


def test_oraculo_mpmath_terceira_derivada():
    with mp.workdps(50):
        expected = mp.diff(lambda t: mp.exp(-1 / t) * mp.sin(t ** -3), mp.mpf('0.2'), 3)
    value = evaluate(nth_derivative(seed(1.0, 3.0), 3), 0.2)
    assert value.to_float() == pytest.approx(float(expected), rel=1e-9)


@pytest.mark.parametrize('n', range(1, 6))
@pytest.mark.parametrize('alpha,beta', list(itertools.product(GRID_PARAMS, GRID_PARAMS)))
def test_oraculo_diferencas_finitas(n, alpha, beta):
    f = seed(alpha, beta)
    lower = nth_derivative(f, n - 1)
    exact = nth_derivative(f, n)
    for t in np.linspace(0.2, 1.0, 20):
        # passo bem menor que o período local
        h = 1e-3 / (beta * t ** (-beta - 1) + alpha * t ** (-alpha - 1) + 10 / t)

        def central(step):
            values = evaluate_array(lower, [t + step, t - step])
            return (values[0] - values[1]) / (2 * step)

        richardson = (4 * central(h / 2) - central(h)) / 3
        value = evaluate(exact, t).to_float()
        assert abs(richardson - value) <= 1e-6 * max(abs(value), _envelope(exact, t))


def test_amplitude_fase():
    assert amplitude_phase(seed(1.0, 2.0), 10.0) == pytest.approx((1.0, -math.pi / 2))
    cosine = make(1.0, 2.0, q_terms=[(1.0, (0, 0, 0))])
    assert amplitude_phase(cosine, 10.0) == pytest.approx((1.0, 0.0))
    both = make(1.0, 2.0, p_terms=[(1.0, (0, 0, 0))], q_terms=[(1.0, (0, 0, 0))])
    assert amplitude_phase(both, 3.0) == pytest.approx((math.sqrt(2.0), -math.pi / 4))
    with pytest.raises(DegeneratePhaseError):
        amplitude_phase(make(1.0, 2.0), 1.0)


def test_psi_reconstroi_a_parte_oscilante():
    f = nth_derivative(seed(1.0, 2.0), 3)
    t = 0.37
    u = t ** -2.0
    A, theta = amplitude_phase(f, u)
    D = degree(f)
    reconstructed = u ** (D / f.beta) * A * math.cos(u + theta)
    assert abs(float(oscillatory_part(f, t)) - reconstructed) <= 1e-10 * u ** (D / f.beta) * A


def test_limites_da_amplitude():
    f = differentiate(seed(1.0, 2.0))
    # líder -beta t^{-(beta+1)} cos(t^-beta)
    assert limiting_amplitude(f) == pytest.approx(2.0)
    assert limiting_phase(f) == pytest.approx(math.pi)
    p0, q0 = normalized_parts(f, 1e8)
    assert float(q0) == pytest.approx(-2.0, rel=1e-6)
    assert limiting_phase(seed(1.0, 2.0)) == pytest.approx(-math.pi / 2)


def test_nos_da_semente():
    nodes = oscillation_nodes(seed(1.0, 1.0), (1 / (4 * math.pi), 1 / math.pi))
    expected = [1 / (4 * math.pi), 1 / (3 * math.pi), 1 / (2 * math.pi), 1 / math.pi]
    assert nodes == pytest.approx(expected, rel=1e-10)


def test_nos_contra_varredura_densa():
    f = nth_derivative(seed(1.0, 2.0), 3)
    nodes = oscillation_nodes(f, (0.2, 0.3))
    t = np.linspace(0.2, 0.3, 200_001)
    values = oscillatory_part(f, t)
    changes = np.count_nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    assert len(nodes) == changes
    assert nodes == sorted(nodes)
    scale_ = np.abs(values).max()
    assert all(abs(float(oscillatory_part(f, x))) <= 1e-8 * scale_ for x in nodes)


def test_limite_de_nos():
    with pytest.raises(NodeResolutionError) as info:
        oscillation_nodes(seed(1.0, 1.0), (1e-4, 1.0), cap=100)
    assert info.value.count > 100
    with pytest.raises(DomainError):
        oscillation_nodes(seed(1.0, 1.0), (0.0, 1.0))


def test_lista_de_termos():
    f = nth_derivative(seed(0.5, 3.0), 4)
    text = to_terms_text(f)
    assert text.startswith('# alpha = 0.5\n# beta = 3.0\n')
    assert from_terms_text(text) == f
    with pytest.raises(ValueError):
        from_terms_text('# alpha = 1\n# beta = 2\n+ 1.0 0 0 sin\n')
