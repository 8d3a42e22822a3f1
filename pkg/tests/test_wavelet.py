import numpy as np
import pytest

from mpirecon.wavelet import (
    FilterPair,
    GridTooSmallError,
    PyramidShapeError,
    UdwtOperator,
    WaveletPyramid,
    dwt_single_level,
    udwt_adjoint,
    udwt_forward,
    udwt_inverse,
    udwt_inverse_decimated,
)

HAAR = FilterPair.haar()


def test_haar_filter_pair_invariants():
    s = 1.0 / np.sqrt(2.0)
    assert np.allclose(HAAR.lo, [s, s])
    assert np.allclose(HAAR.hi, [s, -s])
    assert abs(np.sum(HAAR.lo**2) - 1.0) < 1e-12
    assert abs(np.sum(HAAR.hi**2) - 1.0) < 1e-12
    assert abs(np.dot(HAAR.lo, HAAR.hi)) < 1e-12
    assert np.array_equal(HAAR.lo_r, HAAR.lo[::-1])
    assert np.array_equal(HAAR.hi_r, HAAR.hi[::-1])


def test_bad_filters_rejected():
    with pytest.raises(ValueError):
        FilterPair(lo=np.array([1.0, 1.0]), hi=np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        FilterPair.from_name("sym99")


def test_constant_image_has_zero_details():
    x = np.full((12, 12), 3.7)
    p = udwt_forward(x, HAAR, 1)
    for band in p.bands[0]:
        assert np.max(np.abs(band)) < 1e-12
    # Parseval scaling maps a constant to the same constant
    assert np.allclose(p.approx, 3.7)


def test_unscaled_haar_energy_factor_two():
    x = np.array([1.0, 0.0, 0.0, 0.0])
    p = udwt_forward(x, HAAR, 1, rescale=False)
    assert p.frame_constant == 2.0
    assert abs(p.energy() - 2.0 * np.sum(x**2)) < 1e-12


def test_unscaled_multilevel_rejected():
    with pytest.raises(ValueError):
        udwt_forward(np.zeros(16), HAAR, 2, rescale=False)


def test_tight_frame_random_2d():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((16, 16))
    p = udwt_forward(x, HAAR, 2)
    assert abs(p.energy() - np.sum(x**2)) <= 1e-10 * np.sum(x**2)


@pytest.mark.parametrize("shape,levels", [((64,), 2), ((32, 32), 2), ((16, 16, 8), 2),
                                          ((24, 40), 3)])
def test_roundtrip_and_path_agreement(shape, levels):
    rng = np.random.default_rng(42)
    x = rng.standard_normal(shape)
    p = udwt_forward(x, HAAR, levels)
    xa = udwt_inverse(p, HAAR)
    assert np.linalg.norm(xa - x) <= 1e-10 * np.linalg.norm(x)
    xe = udwt_inverse_decimated(p, HAAR)
    assert np.linalg.norm(xe - x) <= 1e-10 * np.linalg.norm(x)
    assert np.linalg.norm(xe - xa) <= 1e-10 * np.linalg.norm(x)


def test_roundtrip_db2():
    rng = np.random.default_rng(5)
    db2 = FilterPair.from_name("db2")
    x = rng.standard_normal((32, 32))
    p = udwt_forward(x, db2, 2)
    assert abs(p.energy() - np.sum(x**2)) <= 1e-10 * np.sum(x**2)
    assert np.linalg.norm(udwt_inverse(p, db2) - x) <= 1e-10 * np.linalg.norm(x)


def test_odd_grid_roundtrip_via_adjoint():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((15, 21))
    p = udwt_forward(x, HAAR, 2)
    assert np.linalg.norm(udwt_inverse(p, HAAR) - x) <= 1e-10 * np.linalg.norm(x)


def test_zero_pyramid_gives_zero_image():
    p = udwt_forward(np.zeros((8, 8)), HAAR, 2)
    assert np.max(np.abs(udwt_inverse(p, HAAR))) == 0.0


def test_constant_survives_detail_zeroing():
    x = np.full((16, 16), 2.5)
    p = udwt_forward(x, HAAR, 2)
    pz = p.map(np.zeros_like)
    assert np.allclose(udwt_inverse(pz, HAAR), 2.5, atol=1e-12)


def test_dwt_single_level_examples():
    a, d = dwt_single_level(np.array([1.0, 1.0, 1.0, 1.0]), HAAR)
    assert np.allclose(a, np.sqrt(2.0))
    assert np.allclose(d, 0.0)
    a, d = dwt_single_level(np.array([1.0, -1.0, 1.0, -1.0]), HAAR)
    assert np.allclose(a, 0.0)
    assert np.allclose(np.abs(d), np.sqrt(2.0))


def test_dwt_single_level_energy():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(32)
    a, d = dwt_single_level(x, HAAR)
    assert abs(np.sum(a**2) + np.sum(d**2) - np.sum(x**2)) < 1e-12


def test_dwt_single_level_rejects_odd_length():
    with pytest.raises(ValueError):
        dwt_single_level(np.zeros(5), HAAR)


def test_grid_too_small():
    with pytest.raises(GridTooSmallError):
        udwt_forward(np.zeros((3, 16)), HAAR, 2)


def test_pyramid_coefficient_count():
    p = udwt_forward(np.zeros((16, 16)), HAAR, 2)
    assert p.coeff_count() == (2 * 3 + 1) * 256


def test_shift_covariance():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((16, 16))
    p = udwt_forward(x, HAAR, 2)
    ps = udwt_forward(np.roll(x, (3, -5), axis=(0, 1)), HAAR, 2)
    for lvl, lvls in zip(p.bands, ps.bands):
        for band, bands in zip(lvl, lvls):
            assert np.array_equal(np.roll(band, (3, -5), axis=(0, 1)), bands)
    assert np.array_equal(np.roll(p.approx, (3, -5), axis=(0, 1)), ps.approx)


def test_linearity():
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal((2, 12, 12))
    p = udwt_forward(2.0 * x - 3.0 * y, HAAR, 2)
    px = udwt_forward(x, HAAR, 2)
    py = udwt_forward(y, HAAR, 2)
    for b, bx, by in zip(p.iter_bands(), px.iter_bands(), py.iter_bands()):
        assert np.allclose(b, 2.0 * bx - 3.0 * by, atol=1e-12)


def test_adjoint_consistency():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((16, 16))
    px = udwt_forward(x, HAAR, 2)
    y = px.map(lambda b: rng.standard_normal(b.shape),
               lambda a: rng.standard_normal(a.shape))
    lhs = sum(np.sum(bx * by) for bx, by in zip(px.iter_bands(), y.iter_bands()))
    rhs = np.sum(x * udwt_adjoint(y, HAAR))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_inconsistent_pyramid_rejected():
    p = udwt_forward(np.zeros((8, 8)), HAAR, 1)
    broken = WaveletPyramid(
        levels=1, dims=(8, 8), bands=[[np.zeros((8, 8)), np.zeros((4, 4)),
                                       np.zeros((8, 8))]],
        approx=np.zeros((8, 8)), band_codes=p.band_codes,
    )
    with pytest.raises(PyramidShapeError):
        udwt_inverse(broken, HAAR)


def test_operator_wrapper():
    rng = np.random.default_rng(7)
    phi = UdwtOperator((16, 16), levels=2)
    x = rng.standard_normal(256)
    p = phi.forward(x)
    assert np.linalg.norm(phi.inverse(p) - x.reshape(16, 16)) < 1e-12
    with pytest.raises(GridTooSmallError):
        UdwtOperator((2, 16), levels=2)
