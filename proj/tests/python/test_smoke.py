import math

import pytest

import homstokes as hs


def test_coefficient_laminate_values():
    a = hs.coefficient("laminate", [2.0, 1.0], 0.25, 0.7)
    # 2 + sin(pi/2) on the diagonal, nothing off it
    assert a[0][0][0][0] == pytest.approx(3.0)
    assert a[1][1][1][1] == pytest.approx(3.0)
    assert a[0][1][0][1] == 0.0


def test_constant_ellipticity():
    rep = hs.ellipticity("constant", [1.5])
    assert rep["pass"]
    assert rep["lower"] == pytest.approx(1.5)


def test_fit_rate_recovers_power_law():
    pts = [(e, 3.0 * e**1.5) for e in (0.5, 0.25, 0.125)]
    slope, intercept, r2 = hs.fit_rate(pts)
    assert slope == pytest.approx(1.5)
    assert intercept == pytest.approx(math.log(3.0))
    assert r2 == pytest.approx(1.0)


def test_effective_tensor_laminate_means():
    a = hs.effective_tensor("laminate", [2.0, 1.0], N=32)
    assert a[0][0][1][1] == pytest.approx(math.sqrt(3.0), abs=1e-3)
    assert a[1][1][0][0] == pytest.approx(2.0, abs=1e-3)


def test_invalid_config_raises_value_error():
    with pytest.raises(ValueError, match="study.epsilons"):
        hs.validate_config('[coefficient]\nfamily = "constant"\n[study]\nepsilons = [0.25, 0.25]\n')
    with pytest.raises(hs.ValidationError):
        hs.coefficient("laminate", [1.0, 2.0])


def test_mms_second_order():
    slope, errors = hs.mms("identity", grids=[32, 64])
    assert len(errors) == 2 and errors[1] < errors[0]
    assert 1.7 <= slope <= 2.3
