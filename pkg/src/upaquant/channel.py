"""Multi-path channels for uniform planar arrays.

Directions are handled directly as ``psi`` values in [-1, 1] (the sine-space
coordinate of each domain); physical angles are never materialized.  Antenna
spacings are stored in carrier wavelengths, so ``d_v = 0.5`` is the usual
half-wavelength array.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, InvalidInputError

DEFAULT_MAX_DELAY = 1e-6


@dataclass(frozen=True)
class UpaGeometry:
    """Uniform planar array with ``m_v`` rows and ``m_h`` columns."""

    m_v: int
    m_h: int
    d_v: float = 0.5
    d_h: float = 0.5

    def __post_init__(self):
        if int(self.m_v) < 1 or int(self.m_h) < 1:
            raise DimensionError(
                f"array needs at least one antenna per domain, got {self.m_v}x{self.m_h}",
                field="m_v" if int(self.m_v) < 1 else "m_h")
        if not (self.d_v > 0 and self.d_h > 0):
            raise DimensionError("antenna spacings must be positive",
                                 field="d_v" if not self.d_v > 0 else "d_h")

    @property
    def m(self):
        return self.m_v * self.m_h

    @property
    def half_wavelength(self):
        return self.d_v == 0.5 and self.d_h == 0.5

    def label(self):
        return f"{self.m_v}x{self.m_h}"


@dataclass(frozen=True)
class PathSet:
    """The radio paths of one channel realization.

    Each field is a length-P array: vertical and horizontal directions, the
    complex path gains and the excess tap delays in seconds.
    """

    psi_v: np.ndarray
    psi_h: np.ndarray
    gains: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        n = len(self.gains)
        if not (len(self.psi_v) == len(self.psi_h) == len(self.delays) == n):
            raise InvalidInputError("path fields must have equal length")

    def __len__(self):
        return len(self.gains)

    def sorted_by_power(self):
        """Return a copy with paths ordered by descending ``|gain|``."""
        order = np.argsort(-np.abs(self.gains), kind="stable")
        return PathSet(self.psi_v[order], self.psi_h[order],
                       self.gains[order], self.delays[order])

    @classmethod
    def single(cls, psi_v, psi_h, gain=1.0, delay=0.0):
        return cls(np.array([psi_v], dtype=float), np.array([psi_h], dtype=float),
                   np.array([gain], dtype=complex), np.array([delay], dtype=float))


@dataclass(frozen=True)
class WidebandGrid:
    """OFDM tone grid split into ``l_blocks`` wideband RBs of ``r_blocks``
    narrowband RBs each."""

    w_total: int
    spacing: float = 15e3
    f_c: float = 2e9
    l_blocks: int = 1
    r_blocks: int = 1

    def __post_init__(self):
        if self.w_total < 1:
            raise ConfigurationError("tone count must be positive", field="w_total")
        if self.spacing <= 0:
            raise ConfigurationError("subcarrier spacing must be positive", field="spacing")
        if self.f_c <= 0:
            raise ConfigurationError("carrier frequency must be positive", field="f_c")
        if self.l_blocks < 1 or self.w_total % self.l_blocks:
            raise ConfigurationError(
                f"L={self.l_blocks} does not divide W={self.w_total}", field="l_blocks")
        per_block = self.w_total // self.l_blocks
        if self.r_blocks < 1 or per_block % self.r_blocks:
            raise ConfigurationError(
                f"R={self.r_blocks} does not divide W/L={per_block}", field="r_blocks")
        if np.any(self.wavelength_scale() <= 0):
            raise ConfigurationError("per-tone wavelength must stay positive", field="spacing")

    @property
    def tones_per_block(self):
        return self.w_total // self.l_blocks

    @property
    def tones_per_subblock(self):
        return self.w_total // (self.l_blocks * self.r_blocks)

    def tone_offsets(self):
        """``w - (W+1)/2`` for tones ``w = 1..W``."""
        return np.arange(1, self.w_total + 1) - (self.w_total + 1) / 2

    def wavelength_scale(self):
        """``lambda_c / lambda[w]`` per tone."""
        return 1.0 + self.spacing / self.f_c * self.tone_offsets()


def array_response(m_a, d_over_lambda, psi):
    """Unit-norm response of an ``m_a``-element uniform linear array.

    Parameters
    ----------
    m_a : int
        Number of antennas.
    d_over_lambda : float
        Element spacing in wavelengths.
    psi : float
        Direction in sine space; values outside [-1, 1] are accepted with a
        warning.

    Returns
    -------
    numpy.ndarray
        Complex vector of length ``m_a``.
    """
    if int(m_a) < 1:
        raise DimensionError(f"antenna count must be >= 1, got {m_a}", field="m_a")
    if abs(psi) > 1:
        warnings.warn(f"direction {psi} outside [-1, 1]", RuntimeWarning, stacklevel=2)
    m = np.arange(int(m_a))
    return np.exp(2j * np.pi * d_over_lambda * m * psi) / np.sqrt(m_a)


def path_2d(geom, psi_v, psi_h):
    """Planar-array path vector, vertical response kron horizontal response."""
    return np.kron(array_response(geom.m_v, geom.d_v, psi_v),
                   array_response(geom.m_h, geom.d_h, psi_h))


def _responses(m_a, d_over_lambda, psi, scale=1.0):
    # (..., m_a) batch of array responses; ``scale`` broadcasts per-tone lambda_c/lambda[w]
    m = np.arange(m_a)
    phase = 2 * np.pi * d_over_lambda * np.multiply.outer(np.asarray(psi) * scale, m)
    return np.exp(1j * phase) / np.sqrt(m_a)


def sample_paths(p_count, rng_seed=None, max_delay=DEFAULT_MAX_DELAY, rng=None):
    """Draw ``p_count`` paths: directions U(-1,1), gains CN(0,1), delays
    U(0, ``max_delay``).

    Either an integer seed or a ``numpy.random.Generator`` may be supplied.
    """
    if p_count < 1:
        raise InvalidInputError("need at least one path", field="p_count")
    if rng is None:
        rng = np.random.default_rng(rng_seed)
    psi_v = rng.uniform(-1.0, 1.0, p_count)
    psi_h = rng.uniform(-1.0, 1.0, p_count)
    gains = (rng.standard_normal(p_count) + 1j * rng.standard_normal(p_count)) / np.sqrt(2)
    delays = rng.uniform(0.0, max_delay, p_count)
    return PathSet(psi_v, psi_h, gains, delays)


def narrowband_channel(geom, paths):
    """Center-tone channel ``h = sum_p gain_p * path_2d(psi_p)``."""
    if len(paths) == 0:
        raise InvalidInputError("empty path set")
    av = _responses(geom.m_v, geom.d_v, paths.psi_v)
    ah = _responses(geom.m_h, geom.d_h, paths.psi_h)
    # sum_p g_p kron(av_p, ah_p)
    return np.einsum("p,pi,pj->ij", paths.gains, av, ah).reshape(geom.m)


def wideband_channel(geom, paths, grid):
    """M x W channel matrix; column ``w`` is the channel on tone ``w``.

    The delay phase and the per-tone wavelength are both referenced to the
    center tone ``(W+1)/2``, so ``W = 1`` gives the narrowband channel.
    """
    if len(paths) == 0:
        raise InvalidInputError("empty path set")
    offsets = grid.tone_offsets()
    scale = grid.wavelength_scale()[:, None]                     # (W, 1)
    av = _responses(geom.m_v, geom.d_v, paths.psi_v[None, :], scale)  # (W, P, Mv)
    ah = _responses(geom.m_h, geom.d_h, paths.psi_h[None, :], scale)
    tap = np.exp(-2j * np.pi * grid.spacing * np.outer(offsets, paths.delays))  # (W, P)
    coef = tap * paths.gains[None, :]
    h = np.einsum("wp,wpi,wpj->ijw", coef, av, ah)
    return h.reshape(geom.m, grid.w_total)


def reshape_planar(h, geom):
    """Row-major ``m_v x m_h`` view of a stacked channel vector."""
    return np.asarray(h).reshape(geom.m_v, geom.m_h)
