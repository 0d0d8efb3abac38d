import math

import numpy as np
import pytest
from scipy import special

from crossing_histories import DomainError, NumericError
from crossing_histories.numerics import (
    Grid1D,
    Grid2D,
    RandomStream,
    fft_friendly_odd,
    gauss_legendre_panels,
    gauss_tail_integral,
    gaussian_draws,
    integrate_grid,
    log_binomial,
    logsumexp_complex,
    trapezoid_weights,
)


def test_grid_basics():
    g = Grid1D.symmetric(2.0, 5)
    assert g.spacing == 1.0
    assert g.is_symmetric and g.zero_index == 2
    assert np.allclose(g.points, [-2, -1, 0, 1, 2])
    with pytest.raises(DomainError):
        Grid1D(1.0, 0.0, 5)
    with pytest.raises(DomainError):
        Grid1D(0.0, 1.0, 1)
    with pytest.raises(DomainError):
        Grid1D(0.0, 1.0, 4).zero_index


def test_fft_friendly_odd():
    assert fft_friendly_odd(801) == 875
    assert fft_friendly_odd(401) == 405
    assert fft_friendly_odd(27) == 27
    assert fft_friendly_odd(2) == 3


def test_gauss_tail_limits():
    assert gauss_tail_integral(0.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-15)
    assert gauss_tail_integral(40.0) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    # keeps relative accuracy deep in the tail, where 1 + erf would underflow
    a = -20.0
    assert gauss_tail_integral(a) == pytest.approx(0.5 * math.sqrt(math.pi) * special.erfc(20.0), rel=1e-14)
    assert gauss_tail_integral(a) > 0


def test_log_binomial():
    assert log_binomial(10, 3) == pytest.approx(math.log(120), rel=1e-14)
    assert log_binomial(5, 0) == 0.0
    big = log_binomial(10**6, 5 * 10**5)
    assert math.isfinite(big) and big > 6e5
    with pytest.raises(DomainError):
        log_binomial(3, 4)


def test_integrate_grid_second_order():
    errs = []
    for n in (41, 81):
        g = Grid1D(0.0, 1.0, n)
        errs.append(abs(integrate_grid(np.exp(g.points), g) - (math.e - 1)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    g2 = Grid2D(Grid1D(0, 1, 11), Grid1D(0, 2, 21))
    assert integrate_grid(np.ones(g2.shape), g2) == pytest.approx(2.0)
    with pytest.raises(NumericError):
        integrate_grid(np.array([1.0, np.nan, 1.0]), Grid1D(0, 1, 3))
    assert trapezoid_weights(Grid1D(0, 1, 3)).tolist() == [0.25, 0.5, 0.25]


def test_random_streams_reproducible_and_independent():
    a = gaussian_draws(RandomStream(42, 0), 1000)
    b = gaussian_draws(RandomStream(42, 0), 1000)
    c = gaussian_draws(RandomStream(42, 1), 1000)
    assert np.array_equal(a, b)
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.1
    s = RandomStream(42, 0)
    assert not np.array_equal(s.generator(sub=0).random(5), s.generator(sub=1).random(5))
    with pytest.raises(DomainError):
        RandomStream(-1)


def test_gauss_legendre_panels_exact_for_polynomials():
    x, w = gauss_legendre_panels(-1.0, 2.0, 3, order=4)
    assert np.dot(w, x**7) == pytest.approx((2.0**8 - 1.0) / 8, rel=1e-13)


def test_logsumexp_complex():
    lm = np.array([1000.0, 1000.0])
    mag, ph = logsumexp_complex(lm, np.array([0.0, math.pi / 2]))
    assert mag == pytest.approx(1000 + 0.5 * math.log(2), rel=1e-15)
    assert ph == pytest.approx(math.pi / 4)
    assert logsumexp_complex(np.array([0.0, 0.0]), np.array([0.0, math.pi]))[0] < -30
