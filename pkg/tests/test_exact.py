from fractions import Fraction

import pytest

from cstarpres.exact import XS, Coeff, sqrt_bounds, xs_add_outward, xs_mul_outward


def test_sqrt_of_perfect_square_factor():
    assert XS.sqrt_of(Fraction(3, 4)) == XS(0, Fraction(1, 2), 3)
    assert XS.sqrt_of(Fraction(4)) == XS(2)
    assert XS.sqrt_of(Fraction(0)) == XS(0)
    assert XS.sqrt_of(Fraction(18)) == XS(0, 3, 2)


def test_sqrt_of_rejects_negative():
    with pytest.raises(ValueError):
        XS.sqrt_of(Fraction(-1))


def test_exact_sign_and_cmp():
    # 1 - sqrt(3)/2 > 1/8 because (7/8)^2 = 49/64 > 3/4 = 48/64
    a = XS(1, Fraction(-1, 2), 3)
    assert a.sign() > 0
    assert a.cmp(XS(Fraction(1, 8))) > 0
    assert a.cmp(XS(Fraction(1, 7))) < 0
    assert XS(0).sign() == 0
    # sqrt(2) + sqrt(2) = 2 sqrt(2) > 2
    s2 = XS.sqrt_of(Fraction(2))
    assert (s2 + s2).cmp(XS(2)) > 0


def test_field_ops_same_radicand():
    s3 = XS.sqrt_of(Fraction(3))
    v = (XS(1) + s3) * (XS(1) - s3)
    assert v == XS(-2)
    assert (s3 * s3) == XS(3)
    assert (XS(1) / (XS(2) - s3)) == XS(2) + s3


def test_outward_rounding_mixed_radicands():
    s2 = XS.sqrt_of(Fraction(2))
    s3 = XS.sqrt_of(Fraction(3))
    up = xs_add_outward(s2, s3, up=True)
    lo = xs_add_outward(s2, s3, up=False)
    true = 2 ** 0.5 + 3 ** 0.5
    assert float(lo) <= true <= float(up)
    up = xs_mul_outward(s2, s3, up=True)
    lo = xs_mul_outward(s2, s3, up=False)
    assert float(lo) <= 6 ** 0.5 <= float(up)
    # same radicand stays exact
    assert xs_mul_outward(s2, s2, up=True) == XS(2)


def test_sqrt_outward_exact_when_possible():
    v = XS(Fraction(3, 4)).sqrt_outward(up=True)
    assert v == XS(0, Fraction(1, 2), 3)
    # surd input falls back to rational bounds around it
    w = (XS(1) + XS.sqrt_of(Fraction(2))).sqrt_outward(up=True)
    assert w.is_rational
    assert float(w) >= (1 + 2 ** 0.5) ** 0.5


def test_sqrt_bounds_sandwich():
    for q in (Fraction(2), Fraction(5, 7), Fraction(101, 3)):
        lo, hi = sqrt_bounds(q)
        assert lo * lo <= q <= hi * hi
        assert hi - lo < Fraction(1, 10 ** 9)


def test_norm_value_predicate():
    assert XS(Fraction(5, 2)).is_norm_value()
    assert XS.sqrt_of(Fraction(3, 4)).is_norm_value()
    assert not (XS(1) + XS.sqrt_of(Fraction(2))).is_norm_value()


def test_coeff_gaussian_rational():
    i = Coeff(Fraction(0), Fraction(1))
    assert i * i == Coeff(Fraction(-1))
    assert i.conj() == Coeff(Fraction(0), Fraction(-1))
    z = Coeff(Fraction(3, 2), Fraction(-1, 3))
    assert z * z.conj() == Coeff(z.re * z.re + z.im * z.im)
    assert (z / z) == Coeff.ONE
    assert Coeff.ONE + Coeff(-1) == Coeff.ZERO
    assert Coeff.ZERO.is_zero


def test_xs_str_forms():
    assert str(XS(Fraction(1, 2)) + XS(0, Fraction(1, 2), 3)) == "1/2+1/2*sqrt(3)"
    assert str(XS(2)) == "2"
    assert str(XS(0, 1, 2)) == "sqrt(2)"
