import numpy as np
import pytest

from dampedeuler.fields import GridSpec, ScalarField, VectorField, dealias, tables


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(n=64)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(n=16)


def fd_gradient(values, length, axis):
    """Fourth-order centered finite differences on the periodic grid."""
    n = values.shape[axis]
    h = length / n

    def shift(k):
        return np.roll(values, -k, axis=axis)

    return (-shift(2) + 8 * shift(1) - 8 * shift(-1) + shift(-2)) / (12 * h)


def fd_gradient6(values, length, axis):
    """Sixth-order centered finite differences (tight oracle for smooth data)."""
    n = values.shape[axis]
    h = length / n

    def shift(k):
        return np.roll(values, -k, axis=axis)

    return (
        shift(3) - 9 * shift(2) + 45 * shift(1) - 45 * shift(-1) + 9 * shift(-2) - shift(-3)
    ) / (60 * h)


def low_band_field(grid, rng, k_cut=5):
    """Random real field with spectrum confined to |k_i| <= k_cut."""
    t = tables(grid)
    white = np.fft.fftn(rng.standard_normal(grid.shape))
    modes = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    mx, my = np.meshgrid(np.abs(modes), np.abs(modes), indexing="ij")
    mask = (mx <= k_cut) & (my <= k_cut)
    f = ScalarField.from_spectrum(grid, white * mask)
    peak = np.abs(f.values).max()
    return ScalarField.from_values(grid, f.values / peak)


def random_band_limited(grid, rng, decay=4.0):
    """Smooth random scalar with spectrally decaying, dealiased content."""
    t = tables(grid)
    white = np.fft.fftn(rng.standard_normal(grid.shape))
    return dealias(ScalarField.from_spectrum(grid, white * np.exp(-t.k_mag / decay)))


def random_band_limited_vector(grid, rng, decay=4.0):
    return VectorField((random_band_limited(grid, rng, decay),
                        random_band_limited(grid, rng, decay)))
