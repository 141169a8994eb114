import numpy as np
import pytest

from raptorde.density import Grid, QuantizedDensity


@pytest.fixture
def odd_grid():
    return Grid(801, 0.05)


@pytest.fixture
def even_grid():
    return Grid(800, 0.05)


def random_density(grid: Grid, rng: np.random.Generator, sat: bool = True) -> QuantizedDensity:
    m = rng.random(grid.n)
    sp = rng.random() * 0.2 if sat else 0.0
    sn = rng.random() * 0.2 if sat else 0.0
    body = m / m.sum() * (1.0 - sp - sn)
    return QuantizedDensity(grid, body, sp, sn)


def make_symmetric(grid: Grid, rng: np.random.Generator) -> QuantizedDensity:
    """A random density satisfying ``f(-l) = f(l) exp(-l)`` on the grid body."""
    vals = grid.values
    m = np.zeros(grid.n)
    pos_idx = np.flatnonzero(vals > 0)
    m[pos_idx] = rng.random(pos_idx.size)
    m[grid.n - 1 - pos_idx] = m[pos_idx] * np.exp(-vals[pos_idx])
    if grid.has_zero_bin:
        m[(grid.n - 1) // 2] = rng.random() * 0.1
    return QuantizedDensity(grid, m / m.sum())


def symmetry_residual(d: QuantizedDensity) -> float:
    """Largest relative violation of ``f(-l) = f(l) exp(-l)`` where mass lives."""
    vals = d.grid.values
    m = d.masses
    pos = vals > 0
    m_pos = m[pos]
    m_neg = m[::-1][pos]
    expect = m_pos * np.exp(-vals[pos])
    mask = (m_pos > 1e-9) & (expect > 1e-12)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(m_neg[mask] / expect[mask] - 1.0)))
