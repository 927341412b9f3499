import math

import pytest

from extended_real import ONE, ZERO, ExtendedReal


def test_normalizacao_mantissa():
    x = ExtendedReal.of(3.0)
    assert x.mantissa == 1.5
    assert x.scale == 1
    y = ExtendedReal.of(-0.375, 4)
    assert (y.mantissa, y.scale) == (-1.5, 2)
    assert ExtendedReal.of(0.0, 17) == ZERO


@pytest.mark.parametrize('x', [1e-300, 0.1, 1.0, 7.25, 3.0e250])
def test_from_log_volta_ao_float(x):
    # ln x já carrega meio ulp(ln x) de erro, que vira erro relativo na mantissa
    original = ExtendedReal.from_float(x)
    bound = 2 * math.ulp(original.mantissa) + abs(original.mantissa) * math.ulp(math.log(x))
    for sign in (1, -1):
        back = ExtendedReal.from_log(math.log(x), sign)
        assert back.scale == original.scale
        assert abs(back.mantissa - sign * original.mantissa) <= bound


@pytest.mark.parametrize('mantissa', [1.0, 1.25, 1.5, 1.75])
def test_from_log_dentro_de_um_ulp(mantissa):
    # com |ln x| < 1 o desvio fica no ulp da mantissa
    x = ExtendedReal.of(mantissa)
    back = ExtendedReal.from_log(x.log())
    assert back.scale == 0
    assert abs(back.mantissa - mantissa) <= math.ulp(mantissa)


def test_abaixo_do_underflow():
    tiny = ExtendedReal.from_log(-1.0e5)
    assert tiny.to_float() == 0.0
    assert not tiny.is_zero()
    assert tiny.log() == pytest.approx(-1.0e5, rel=1e-14)
    assert tiny.log10() == pytest.approx(-1.0e5 / math.log(10), rel=1e-14)
    assert ZERO < tiny < ExtendedReal.from_float(1e-300)


def test_overflow_vira_inf():
    big = ExtendedReal.from_log(1.0e4)
    assert big.to_float() == math.inf
    assert (-big).to_float() == -math.inf


def test_ordem_com_sinais():
    a = ExtendedReal.from_log(-2000.0)
    b = ExtendedReal.from_log(-1000.0)
    assert a < b
    assert -b < -a
    assert -a < ZERO < a
    assert max([a, b, ONE]) == ONE
    assert ExtendedReal.from_float(0.5) == 0.5


def test_aritmetica_em_log():
    a = ExtendedReal.from_log(-800.0)
    b = ExtendedReal.from_log(-900.0, -1)
    assert (a * b).log() == pytest.approx(-1700.0, rel=1e-14)
    assert (a * b).sign == -1
    assert (a / b).log() == pytest.approx(100.0, rel=1e-13)
    # b some diante de a
    assert a + b == a
    assert (a - a).is_zero()
    assert (2 * a).log() == pytest.approx(-800.0 + math.log(2.0), rel=1e-14)
    assert (1.0 - ExtendedReal.from_float(0.25)).to_float() == 0.75


def test_potencia_e_divisao_por_zero():
    assert ExtendedReal.from_float(4.0).power(0.5).to_float() == pytest.approx(2.0, rel=1e-15)
    assert ZERO.power(2.0) == ZERO
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO
    with pytest.raises(ZeroDivisionError):
        ZERO.power(-1.0)


def test_to_json():
    x = ExtendedReal.of(1.5, -3000)
    data = x.to_json()
    assert data['mantissa'] == 1.5
    assert data['scale2'] == -3000
    assert data['log10'] == pytest.approx(math.log10(1.5) - 3000 * math.log10(2.0))
