import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sgfio.grid import (GridError, GridFunction, from_callable, fourier, inner_product,
                        load_binary, make_grid, save_binary, save_csv)
from sgfio.grid import test_function as sample

from oracles import dft_matrix, gaussian_l2_peak


def test_grid_axes_1d():
    g = make_grid(1, 8, 4.0)
    assert g.spacing == 1.0
    assert np.allclose(g.freq_axis, np.pi * np.arange(-4, 4) / 4)
    assert g.axis[0] == -4.0 and g.axis[-1] == 3.0


def test_grid_2d_size():
    g = make_grid(2, 16, 5.0)
    assert g.size == 256 and g.spacing == 0.625
    assert g.coords().shape == (2, 256)


@pytest.mark.parametrize("args", [(1, 7, 4.0), (4, 8, 1.0), (1, 8, -1.0), (1, 4, 1.0)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(GridError):
        make_grid(*args)


def test_index_coordinate_roundtrip():
    g = make_grid(1, 64, 5.0)
    idx = np.arange(64)
    assert np.array_equal(g.coord_to_index(g.index_to_coord(idx)), idx)
    k = np.arange(-32, 32)
    assert np.array_equal(g.freq_coord_to_index(g.freq_index_to_coord(k)), k)


def test_gaussian_fixed_point():
    g = make_grid(1, 256, 10.0)
    f = from_callable(g, lambda x: np.exp(-x[0] ** 2 / 2))
    F = fourier(f)
    assert np.max(np.abs(F.values - np.exp(-g.freqs()[0] ** 2 / 2))) < 1e-12


def test_fft_against_direct_sum():
    g = make_grid(1, 128, 10.0)
    u = sample(g, "modulated_gaussian", frequency=2.0, center=0.5)
    want = dft_matrix(g.axis, g.freq_axis, g.spacing) @ u.values
    assert np.allclose(fourier(u).values, want, atol=1e-13)


@pytest.mark.parametrize("dim,N,L", [(1, 256, 10.0), (2, 64, 9.0)])
def test_inversion_and_parseval(dim, N, L):
    g = make_grid(dim, N, L)
    u = sample(g, "hermite", index=2, width=0.9)
    F = fourier(u)
    back = fourier(F, "inverse")
    assert (back - u).norm() / u.norm() < 1e-13
    assert abs(F.norm() - u.norm()) / u.norm() < 1e-13


def test_domain_mismatch_rejected():
    g = make_grid(1, 32, 4.0)
    u = sample(g, "gaussian", width=0.4)
    with pytest.raises(GridError):
        fourier(u, "inverse")
    with pytest.raises(GridError):
        fourier(fourier(u))


def test_inner_product_closed_form():
    g = make_grid(1, 256, 10.0)
    f = from_callable(g, lambda x: np.exp(-x[0] ** 2 / 2))
    assert abs(inner_product(f, f) - math.sqrt(math.pi)) < 1e-10


def test_inner_product_disjoint_supports():
    g = make_grid(1, 256, 20.0)
    f = from_callable(g, lambda x: np.exp(-(x[0] + 12) ** 2))
    h = from_callable(g, lambda x: np.exp(-(x[0] - 12) ** 2))
    assert abs(inner_product(f, h)) < 1e-13


def test_inner_product_grid_mismatch():
    a = sample(make_grid(1, 64, 10.0), "gaussian")
    b = sample(make_grid(1, 128, 10.0), "gaussian")
    with pytest.raises(GridError):
        inner_product(a, b)


def test_gaussian_peak_normalization():
    g = make_grid(1, 256, 10.0)
    u = sample(g, "gaussian")
    assert abs(u.values[g.coord_to_index(0.0)] - gaussian_l2_peak()) < 1e-12
    assert abs(u.norm() - 1) < 1e-14


def test_hermite_parity():
    g = make_grid(1, 256, 10.0)
    u = sample(g, "hermite", index=1)
    assert abs(u.values[g.coord_to_index(0.0)]) < 1e-15
    x = g.axis
    inner = slice(1, None)  # drop -L, whose mirror is not on the grid
    assert np.allclose(u.values[inner], -u.values[inner][::-1], atol=1e-14)


def test_test_function_margins():
    g = make_grid(1, 64, 10.0)
    with pytest.raises(GridError, match="aliasing"):
        sample(g, "modulated_gaussian", frequency=0.85 * g.nyquist)
    with pytest.raises(GridError, match="truncation"):
        sample(g, "gaussian", width=3.0)
    with pytest.raises(GridError):
        sample(g, "square")


def test_binary_roundtrip(tmp_path):
    g = make_grid(2, 16, 9.0)
    u = sample(g, "modulated_gaussian", frequency=1.0)
    p = tmp_path / "u.bin"
    save_binary(u, p)
    raw = p.read_bytes()
    assert len(raw) == 16 + 16 * g.size
    v = load_binary(p)
    assert v.grid == g and np.array_equal(v.values, u.values)


def test_csv_layout(tmp_path):
    g = make_grid(1, 8, 4.0)
    u = sample(g, "gaussian", width=0.4)
    p = tmp_path / "u.csv"
    save_csv(u, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 9
    assert lines[0].split(",")[-2:] == ["re", "im"]


def test_nonfinite_rejected():
    g = make_grid(1, 8, 4.0)
    with pytest.raises(GridError):
        GridFunction(g, np.full(8, np.nan))


@given(st.integers(0, 2 ** 32 - 1))
def test_unitarity_property(seed):
    g = make_grid(1, 32, 5.0)
    rng = np.random.default_rng(seed)
    u = GridFunction(g, rng.normal(size=32) + 1j * rng.normal(size=32))
    v = GridFunction(g, rng.normal(size=32) + 1j * rng.normal(size=32))
    lhs = inner_product(fourier(u), fourier(v))
    assert abs(lhs - inner_product(u, v)) <= 1e-12 * u.norm() * v.norm()
    assert (fourier(fourier(u), "inverse") - u).norm() <= 1e-13 * u.norm()
