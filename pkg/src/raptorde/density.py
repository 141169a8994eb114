"""Quantized LLR densities and the two message convolutions behind density evolution.

A density lives on a uniform LLR grid symmetric about zero, plus two explicit
saturation masses for probability clamped beyond the grid ends.  Two update
rules operate on these densities:

* the variable-node convolution adds independent LLRs (FFT convolution of the
  grid bodies, re-binned onto the grid, tails folded into the saturations);
* the check-node convolution applies ``2*atanh(prod tanh(l/2))``, evaluated in
  a (sign, magnitude) transform domain with a precomputed pairwise magnitude
  table, so that high check degrees cost ``O(log d)`` pairwise steps.

Saturated mass behaves as an LLR of infinite magnitude: it dominates a sum,
and it is transparent to the check rule.  Opposing saturations meeting in a
sum resolve to mass at zero (maximum uncertainty).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from numba import njit
from scipy.signal import fftconvolve

from .errors import BadQuantization, GridMismatch

_TINY = 1e-300


@dataclass(frozen=True)
class Grid:
    """Uniform LLR grid: ``n`` points spaced ``spacing`` apart, symmetric about 0.

    The lowest point sits at ``-(n-1)/2 * spacing``.  Even ``n`` gives
    half-offset bins (no exact zero bin); odd ``n`` includes zero.
    """

    n: int = 3000
    spacing: float = 0.01

    def __post_init__(self):
        if self.spacing <= 0:
            raise BadQuantization(f"spacing must be positive, got {self.spacing}")
        if self.n < 2:
            raise BadQuantization(f"need at least 2 grid points, got {self.n}")

    @cached_property
    def values(self) -> np.ndarray:
        v = (np.arange(self.n) - (self.n - 1) / 2.0) * self.spacing
        v.flags.writeable = False
        return v

    @property
    def lo(self) -> float:
        return -(self.n - 1) / 2.0 * self.spacing

    @property
    def hi(self) -> float:
        return (self.n - 1) / 2.0 * self.spacing

    @property
    def has_zero_bin(self) -> bool:
        return self.n % 2 == 1

    @cached_property
    def magnitudes(self) -> np.ndarray:
        """Strictly positive grid magnitudes, ascending (zero bin excluded)."""
        half = self.n // 2
        offset = 1.0 if self.has_zero_bin else 0.5
        m = (np.arange(half) + offset) * self.spacing
        m.flags.writeable = False
        return m


DEFAULT_GRID = Grid()


@dataclass(frozen=True)
class QuantizedDensity:
    """A sub-probability vector over a :class:`Grid` plus saturation masses."""

    grid: Grid
    masses: np.ndarray
    sat_pos: float = 0.0
    sat_neg: float = 0.0

    def __post_init__(self):
        if self.masses.shape != (self.grid.n,):
            raise BadQuantization(
                f"mass vector length {self.masses.shape} does not match grid n={self.grid.n}"
            )

    @property
    def total(self) -> float:
        return float(self.masses.sum() + self.sat_pos + self.sat_neg)

    def mean(self) -> float:
        """Mean LLR, saturated mass counted at the grid edges."""
        return float(
            self.masses @ self.grid.values
            + self.sat_pos * self.grid.hi
            + self.sat_neg * self.grid.lo
        )

    def normalized(self) -> "QuantizedDensity":
        t = self.total
        if t <= 0:
            raise BadQuantization("cannot normalize an empty density")
        return QuantizedDensity(self.grid, self.masses / t, self.sat_pos / t, self.sat_neg / t)

    def flipped(self) -> "QuantizedDensity":
        """Density of ``-L``."""
        return QuantizedDensity(
            self.grid, self.masses[::-1].copy(), sat_pos=self.sat_neg, sat_neg=self.sat_pos
        )


def point_mass(grid: Grid, value: float) -> QuantizedDensity:
    """Unit mass at ``value``, split linearly between the two nearest bins.

    Values past the grid ends go to the matching saturation mass; ``inf``
    arguments are accepted.
    """
    m = np.zeros(grid.n)
    if value > grid.hi:
        return QuantizedDensity(grid, m, sat_pos=1.0)
    if value < grid.lo:
        return QuantizedDensity(grid, m, sat_neg=1.0)
    f = (value - grid.lo) / grid.spacing
    k = int(np.floor(f))
    frac = f - k
    if k >= grid.n - 1:
        k, frac = grid.n - 1, 0.0
    m[k] += 1.0 - frac
    if frac > 0:
        m[k + 1] += frac
    return QuantizedDensity(grid, m)


def zero_llr(grid: Grid) -> QuantizedDensity:
    """The no-information message: unit mass at LLR zero."""
    return point_mass(grid, 0.0)


def _require_same_grid(a: QuantizedDensity, b: QuantizedDensity) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


def _add_at_zero(body: np.ndarray, grid: Grid, mass: float) -> None:
    if mass <= 0:
        return
    if grid.has_zero_bin:
        body[(grid.n - 1) // 2] += mass
    else:
        body[grid.n // 2 - 1] += mass / 2.0
        body[grid.n // 2] += mass / 2.0


# ---------------------------------------------------------------------------
# Variable-node convolution (LLR addition)
# ---------------------------------------------------------------------------


def _var_pair(f: QuantizedDensity, g: QuantizedDensity) -> QuantizedDensity:
    """Density of the sum of two independent LLRs on the shared grid."""
    _require_same_grid(f, g)
    grid = f.grid
    n = grid.n
    fb, gb = f.masses, g.masses
    fB, gB = float(fb.sum()), float(gb.sum())

    sp = f.sat_pos * gB + g.sat_pos * fB + f.sat_pos * g.sat_pos
    sn = f.sat_neg * gB + g.sat_neg * fB + f.sat_neg * g.sat_neg
    clash = f.sat_pos * g.sat_neg + f.sat_neg * g.sat_pos

    body = np.zeros(n)
    if fB > _TINY and gB > _TINY:
        shifted = False
        if grid.has_zero_bin:
            # exact shift path keeps on-grid point masses exact
            nz = np.flatnonzero(fb)
            src = None
            if nz.size == 1:
                src, w, other = gb, fb[nz[0]], nz[0]
            else:
                nzg = np.flatnonzero(gb)
                if nzg.size == 1:
                    src, w, other = fb, gb[nzg[0]], nzg[0]
            if src is not None:
                shift = int(other) - (n - 1) // 2
                if shift == 0:
                    body += w * src
                elif shift > 0:
                    body[shift:] += w * src[:-shift]
                    sp += w * float(src[-shift:].sum())
                else:
                    body[:shift] += w * src[-shift:]
                    sn += w * float(src[:shift].sum())
                shifted = True
        if not shifted:
            c = fftconvolve(fb, gb)
            np.clip(c, 0.0, None, out=c)
            tot = c.sum()
            if tot > 0:
                c *= (fB * gB) / tot
            if grid.has_zero_bin:
                # conv index m holds value (m - (n-1)) * spacing, on-grid
                off = (n - 1) // 2
                sn += float(c[:off].sum())
                sp += float(c[off + n :].sum())
                body += c[off : off + n]
            else:
                # values fall halfway between bins: split each half/half
                half = 0.5 * c
                lo_first = n // 2  # conv index whose lower split bin is 0
                # lower-split halves land on bins (m - n//2)
                sn += float(half[:lo_first].sum())
                body += half[lo_first : lo_first + n]
                sp += float(half[lo_first + n :].sum())
                # upper-split halves land on bins (m - n//2 + 1)
                hi_first = lo_first - 1
                sn += float(half[:hi_first].sum())
                body += half[hi_first : hi_first + n]
                sp += float(half[hi_first + n :].sum())

    _add_at_zero(body, grid, clash)
    return QuantizedDensity(grid, body, sp, sn)


def _var_power(f: QuantizedDensity, k: int) -> QuantizedDensity:
    """k-fold variable convolution of ``f`` with itself (k >= 1)."""
    if k < 1:
        raise ValueError("variable power needs k >= 1")
    result = None
    base = f
    while k:
        if k & 1:
            result = base if result is None else _var_pair(result, base)
        k >>= 1
        if k:
            base = _var_pair(base, base)
    return result


def variable_convolve(
    channel: QuantizedDensity | None,
    incoming: list[tuple[QuantizedDensity, int]],
) -> QuantizedDensity:
    """Density of ``m0 + sum of incoming messages`` at a variable node.

    ``channel`` may be None (punctured node); ``incoming`` pairs densities with
    their multiplicities.  At least one effective operand is required.
    """
    acc = channel
    for dens, mult in incoming:
        if mult < 0:
            raise ValueError("multiplicities must be non-negative")
        if mult == 0:
            continue
        if acc is not None:
            _require_same_grid(acc, dens)
        p = _var_power(dens, mult)
        acc = p if acc is None else _var_pair(acc, p)
    if acc is None:
        raise ValueError("variable_convolve needs at least one operand")
    return acc


# ---------------------------------------------------------------------------
# Check-node convolution (tanh-product rule) in the sign/magnitude domain
# ---------------------------------------------------------------------------


@njit(cache=True, fastmath=True)
def _mag_pair_kernel(uf, vf, ug, vg, lo, frac, ilo, ihi, jlo, jhi, out_u, out_v, zero_acc):  # pragma: no cover
    for i in range(ilo, ihi):
        ui = uf[i]
        vi = vf[i]
        aui = ui if ui >= 0.0 else -ui
        avi = vi if vi >= 0.0 else -vi
        if aui < 1e-300 and avi < 1e-300:
            continue
        for j in range(jlo, jhi):
            uu = ui * ug[j]
            vv = vi * vg[j]
            k = lo[i, j]
            w = frac[i, j]
            if k < 0:
                # output magnitude below the smallest bin: (1-w) of it is
                # indistinguishable from zero LLR, w goes to the first bin
                zero_acc[0] += uu * (1.0 - w)
                out_u[0] += uu * w
                out_v[0] += vv * w
            else:
                out_u[k] += uu * (1.0 - w)
                out_u[k + 1] += uu * w
                out_v[k] += vv * (1.0 - w)
                out_v[k + 1] += vv * w


def _occupied_range(u: np.ndarray, v: np.ndarray) -> tuple[int, int]:
    """Contiguous index envelope holding all but a negligible sliver of mass."""
    act = u + np.abs(v)
    nz = np.flatnonzero(act > 1e-30)
    if nz.size == 0:
        return 0, 0
    return int(nz[0]), int(nz[-1]) + 1


class _MagTables:
    """Pairwise check-rule map on a grid's own magnitude set.

    ``lo[i, j]``/``frac[i, j]`` place ``2*atanh(tanh(m_i/2) tanh(m_j/2))`` on
    the magnitude axis by linear interpolation; ``lo = -1`` interpolates
    between zero and the smallest magnitude.
    """

    def __init__(self, grid: Grid):
        m = grid.magnitudes
        M = m.shape[0]
        t = np.tanh(m / 2.0)
        prod = np.outer(t, t)
        r = 2.0 * np.arctanh(prod)
        offset = 1.0 if grid.has_zero_bin else 0.5
        fidx = r / grid.spacing - offset
        lo = np.floor(fidx).astype(np.int64)
        frac = fidx - lo
        below = lo < 0
        frac[below] = r[below] / m[0]
        lo[below] = -1
        top = lo >= M - 1
        lo[top] = M - 2
        frac[top] = 1.0
        self.lo = lo.astype(np.int16) if M < 32000 else lo.astype(np.int32)
        self.frac = frac.astype(np.float32)
        self.M = M


_TABLE_CACHE: dict[Grid, _MagTables] = {}


def _tables_for(grid: Grid) -> _MagTables:
    tab = _TABLE_CACHE.get(grid)
    if tab is None:
        tab = _MagTables(grid)
        if len(_TABLE_CACHE) > 8:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[grid] = tab
    return tab


@dataclass
class _MagRep:
    """Sign/magnitude transform of a density.

    ``u[k]``/``v[k]`` are the sum and difference of the positive- and
    negative-sign mass at magnitude ``k``; ``z`` is mass at zero LLR,
    ``ip``/``im`` the saturations (infinite magnitude, +/- sign).
    """

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    z: float
    ip: float
    im: float

    @property
    def total(self) -> float:
        return float(self.u.sum() + self.z + self.ip + self.im)


def _to_mag(d: QuantizedDensity) -> _MagRep:
    grid = d.grid
    n = grid.n
    if grid.has_zero_bin:
        mid = (n - 1) // 2
        pos = d.masses[mid + 1 :]
        neg = d.masses[:mid][::-1]
        z = float(d.masses[mid])
    else:
        pos = d.masses[n // 2 :]
        neg = d.masses[: n // 2][::-1]
        z = 0.0
    return _MagRep(grid, pos + neg, pos - neg, z, d.sat_pos, d.sat_neg)


def _from_mag(rep: _MagRep) -> QuantizedDensity:
    grid = rep.grid
    n = grid.n
    u = np.clip(rep.u, 0.0, None)
    v = np.clip(rep.v, -u, u)
    pos = 0.5 * (u + v)
    neg = 0.5 * (u - v)
    body = np.zeros(n)
    if grid.has_zero_bin:
        mid = (n - 1) // 2
        body[mid + 1 :] = pos
        body[:mid] = neg[::-1]
        body[mid] = rep.z
    else:
        body[n // 2 :] = pos
        body[: n // 2] = neg[::-1]
        _add_at_zero(body, grid, rep.z)
    return QuantizedDensity(grid, body, rep.ip, rep.im)


def _mag_identity(grid: Grid) -> _MagRep:
    M = grid.magnitudes.shape[0]
    return _MagRep(grid, np.zeros(M), np.zeros(M), 0.0, 1.0, 0.0)


def _mag_pair(a: _MagRep, b: _MagRep) -> _MagRep:
    """Check-rule combination of two transformed densities."""
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    grid = a.grid
    tab = _tables_for(grid)
    M = tab.M
    out_u = np.zeros(M)
    out_v = np.zeros(M)
    zero = np.zeros(1)
    aB = float(a.u.sum())
    bB = float(b.u.sum())
    if aB > _TINY and bB > _TINY:
        ilo, ihi = _occupied_range(a.u, a.v)
        jlo, jhi = _occupied_range(b.u, b.v)
        _mag_pair_kernel(
            a.u, a.v, b.u, b.v, tab.lo, tab.frac, ilo, ihi, jlo, jhi, out_u, out_v, zero
        )
    # infinite magnitudes are transparent: R(+-inf, x) = +-x
    uia, via = a.ip + a.im, a.ip - a.im
    uib, vib = b.ip + b.im, b.ip - b.im
    if uia > 0:
        out_u += uia * b.u
        out_v += via * b.v
    if uib > 0:
        out_u += uib * a.u
        out_v += vib * a.v
    # zero LLR annihilates any partner, including saturations
    z = a.z * b.total + b.z * a.total - a.z * b.z + float(zero[0])
    ip = a.ip * b.ip + a.im * b.im
    im = a.ip * b.im + a.im * b.ip
    return _MagRep(grid, out_u, out_v, z, ip, im)


def _mag_power(a: _MagRep, k: int) -> _MagRep:
    """k-fold check-rule power; k = 0 yields the identity (certain +inf)."""
    if k < 0:
        raise ValueError("check power needs k >= 0")
    if k == 0:
        return _mag_identity(a.grid)
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else _mag_pair(result, base)
        k >>= 1
        if k:
            base = _mag_pair(base, base)
    return result


def _mag_mix(parts: list[tuple[float, _MagRep]]) -> _MagRep:
    if not parts:
        raise ValueError("empty mixture")
    grid = parts[0][1].grid
    M = grid.magnitudes.shape[0]
    u = np.zeros(M)
    v = np.zeros(M)
    z = ip = im = 0.0
    for w, rep in parts:
        if rep.grid != grid:
            raise GridMismatch("mixture components on different grids")
        u += w * rep.u
        v += w * rep.v
        z += w * rep.z
        ip += w * rep.ip
        im += w * rep.im
    return _MagRep(grid, u, v, z, ip, im)


def check_convolve(incoming: list[tuple[QuantizedDensity, int]]) -> QuantizedDensity:
    """Density of ``2*atanh(prod tanh(l_i/2))`` over independent inputs.

    ``incoming`` pairs densities with multiplicities; at least one effective
    operand is required.
    """
    acc = None
    grid = None
    total = 1.0
    for dens, mult in incoming:
        if mult < 0:
            raise ValueError("multiplicities must be non-negative")
        if mult == 0:
            continue
        if grid is None:
            grid = dens.grid
        rep = _mag_power(_to_mag(dens), mult)
        total *= dens.total**mult
        acc = rep if acc is None else _mag_pair(acc, rep)
    if acc is None:
        raise ValueError("check_convolve needs at least one operand")
    out = _from_mag(acc)
    # undo accumulated floating-point drift in the total mass
    t = out.total
    if t > 0 and abs(t - total) < 1e-6:
        scale = total / t
        out = QuantizedDensity(grid, out.masses * scale, out.sat_pos * scale, out.sat_neg * scale)
    return out
