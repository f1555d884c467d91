"""Closed-form gain analysis, feedback-bit allocation and budget accounting.

The correlation formulas assume half-wavelength spacing; they are still
evaluated for other geometries but :func:`analytic_report` flags it.
"""

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleBudgetError, InvalidInputError

SCHEMES = ("proposed", "enhanced_kp", "kp")


def gamma_sq(m_a, b):
    """Mean gain between a uniformly random array response and its nearest
    ``b``-bit DFT codeword (half-wavelength spacing)."""
    if m_a < 1 or b < 0:
        raise InvalidInputError("gamma_sq needs m_a >= 1 and b >= 0")
    q = np.arange(1, m_a)
    x = np.pi * q / 2.0 ** b
    return float((m_a + np.sum(2 * (m_a - q) * np.sin(x) / x)) / m_a ** 2)


def order_stat_gain(p_count, n):
    """``E|alpha_n|^2`` for the ``n``-th strongest of ``p_count`` CN(0,1) gains."""
    if not 1 <= n <= p_count:
        raise InvalidInputError(f"order index {n} outside 1..{p_count}", field="n")
    return math.fsum(1.0 / q for q in range(n, p_count + 1))


@dataclass(frozen=True)
class FeedbackAllocation:
    """Bit split ``[B_1, ..., B_N, B_c]`` of a narrowband feedback budget.

    ``b_refine`` is only meaningful for the two-family scheme, where the
    refinement bits satisfy ``2*b_refine == 2*B_2 + B_c``.
    """

    bits_per_beam: tuple
    b_c: int = 0
    b_refine: int = None

    def __post_init__(self):
        object.__setattr__(self, "bits_per_beam", tuple(int(b) for b in self.bits_per_beam))
        if not self.bits_per_beam:
            raise InvalidInputError("allocation needs at least one beam")
        if min(self.bits_per_beam) < 0 or self.b_c < 0:
            raise InvalidInputError("bit counts must be non-negative")
        if self.b_refine is not None:
            if self.n_beams != 2:
                raise InvalidInputError("refinement bits only apply to the two-beam split")
            if 2 * self.b_refine != 2 * self.bits_per_beam[1] + self.b_c:
                raise InvalidInputError(
                    "refinement bits must satisfy 2*b_refine == 2*B2 + Bc", field="b_refine")

    @property
    def n_beams(self):
        return len(self.bits_per_beam)

    @property
    def total(self):
        return self.b_c + 2 * sum(self.bits_per_beam)

    @property
    def vector(self):
        return self.bits_per_beam + (self.b_c,)


def gbq_lower(geom, p_count, bits_per_beam):
    """Approximate lower bound on the beam-quantization gain with unquantized
    combining weights (unnormalized: ``E||h||^2 = P``)."""
    m = geom.m
    n_beams = len(bits_per_beam)
    acc = 0.0
    for n in range(1, n_beams + 1):
        b = bits_per_beam[n - 1]
        g = gamma_sq(geom.m_v, b) * gamma_sq(geom.m_h, b)
        acc += sum((m * g - 1) / (q * p_count) for q in range(n, p_count + 1))
    return p_count / (m + n_beams - 1) * (n_beams + acc)


def gbc_closed(u_count):
    """Normalized two-beam combining gain with ``u_count`` combiners."""
    if u_count < 1:
        raise InvalidInputError("combiner count must be >= 1")
    return 0.5 * (1 + u_count / math.pi * math.sin(math.pi / u_count))


NUMERIC_BC_MAX = 4


def gbc_lattice(n_beams, u_count):
    """Combining gain when each of the ``n_beams - 1`` relative phases has an
    independent error uniform over a cell of side ``2*pi / u_count**(1/(N-1))``.
    """
    half = math.pi / u_count ** (1.0 / (n_beams - 1))
    c = math.sin(half) / half
    n = n_beams
    return (n + 2 * (n - 1) * c + (n - 1) * (n - 2) * c * c) / n ** 2


@functools.lru_cache(maxsize=None)
def combining_gain(n_beams, b_c, phase_levels=None, points=None):
    """Expected normalized combining gain for an ``n_beams``-beam combiner set.

    One beam needs no combiner (gain 1) and two beams use the closed form.
    For three or more beams the same random equal-gain model is integrated
    numerically: ``E_w max_u |e_u^H w|^2`` with ``w`` uniform on the phase
    torus, evaluated by the midpoint rule on a regular phase grid.  Above
    ``NUMERIC_BC_MAX`` combiner bits the packing is too large to build and
    :func:`gbc_lattice` is used instead.
    """
    if n_beams == 1:
        return 1.0
    u_count = 2 ** b_c
    if n_beams == 2:
        return gbc_closed(u_count)
    if b_c > NUMERIC_BC_MAX:
        return gbc_lattice(n_beams, u_count)
    from .codebooks import default_phase_levels, equal_gain_candidates, pack_seeds

    if phase_levels is None:
        phase_levels = default_phase_levels(u_count)
    sel = pack_seeds(n_beams, u_count, phase_levels)
    seeds = equal_gain_candidates(n_beams, phase_levels)[1][sel]
    if points is None:
        points = max(16, int(round(2 ** (18 / (n_beams - 1)))))
    t = (np.arange(points) + 0.5) / points * 2 * np.pi
    grids = np.meshgrid(*([t] * (n_beams - 1)), indexing="ij")
    w = np.stack([np.ones_like(grids[0])] + [np.exp(1j * g) for g in grids], axis=-1)
    w = w.reshape(-1, n_beams) / np.sqrt(n_beams)
    return float((np.abs(w.conj() @ seeds.T) ** 2).max(axis=1).mean())


def expected_gain(geom, p_count, alloc, phase_levels=None):
    """Beam-quantization bound times combining gain for one path count."""
    return (gbq_lower(geom, p_count, alloc.bits_per_beam)
            * combining_gain(alloc.n_beams, alloc.b_c, phase_levels))


def allocation_scenarios(b_total, max_beams=3):
    """Every split with ``B_c + 2*sum(B_n) == b_total``, ordered by N then
    lexicographically by ``[B_1, ..., B_N, B_c]``."""
    for n_beams in range(1, max_beams + 1):
        for bits in itertools.product(range(b_total // 2 + 1), repeat=n_beams):
            b_c = b_total - 2 * sum(bits)
            if b_c >= 0:
                yield FeedbackAllocation(bits, b_c)


def mean_expected_gain(geom, p_set, alloc):
    return float(np.mean([expected_gain(geom, p, alloc) for p in p_set]))


def allocate_feedback(geom, b_total, p_set=(3, 4, 5), max_beams=3):
    """Pick the allocation maximizing the path-count-averaged expected gain.

    Returns
    -------
    (FeedbackAllocation, float)
        The winning split and its objective value.  Ties go to fewer beams,
        then to the lexicographically smaller split.
    """
    if b_total < 2:
        raise InfeasibleBudgetError(f"budget of {b_total} bits cannot host one beam",
                                    field="b_total")
    best, best_val = None, -np.inf
    for alloc in allocation_scenarios(b_total, max_beams):
        val = mean_expected_gain(geom, p_set, alloc)
        if val > best_val + 1e-12:
            best, best_val = alloc, val
    return best, best_val


def allocation_table(geom, b_total, p_set=(3, 4, 5), max_beams=3):
    """Rows ``(N, r_N, objective)`` for every feasible split."""
    return [{"n_beams": a.n_beams, "allocation": list(a.vector),
             "objective": mean_expected_gain(geom, p_set, a)}
            for a in allocation_scenarios(b_total, max_beams)]


def complexity_budget(scheme, b1, b2=None, b_c=None):
    """Feedback bits and vector evaluations per tone.

    ``proposed`` takes the coarse bits ``b1``, second-beam bits ``b2`` and
    combiner bits ``b_c``; ``enhanced_kp`` the two per-beam widths; ``kp`` the
    per-domain width ``b1``.
    """
    if scheme == "proposed":
        return 2 * (b1 + b2) + b_c + 1, 2 ** (2 * b1) + 2 ** (2 * b2 + b_c + 1)
    if scheme == "enhanced_kp":
        return 2 * (b1 + b2 + 1), 2 * (2 ** (b1 + b2) + 2 ** b1 + 2 ** b2)
    if scheme == "kp":
        return 2 * b1, 2 ** (b1 + 1)
    raise InvalidInputError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}",
                            field="scheme")


def _best_beam_per_tone(channel, geom, b):
    from .codebooks import dft_codebook

    av = dft_codebook(geom.m_v, b).matrix
    ah = dft_codebook(geom.m_h, b).matrix
    w_total = channel.shape[1]
    cube = channel.reshape(geom.m_v, geom.m_h, w_total)
    proj = np.einsum("iv,ijw,jh->wvh", av.conj(), cube, ah.conj())
    flat = (np.abs(proj) ** 2).reshape(w_total, -1).argmax(axis=1)
    iv, ih = np.divmod(flat, ah.shape[1])
    return av[:, iv], ah[:, ih]


def cross_tone_correlation(channel, geom, b, max_lag=None):
    """Average tone-pair correlations as a function of tone lag.

    Returns
    -------
    lags, gamma_h, gamma_c1 : numpy.ndarray
        ``gamma_h[k]`` is the mean normalized ``|h[w]^H h[w+k]|^2``;
        ``gamma_c1[k]`` the mean ``|c1[w]^H c1[w+k]|^2`` of the per-tone best
        ``b``-bit 2D DFT beams.
    """
    channel = np.asarray(channel)
    w_total = channel.shape[1]
    if w_total < 2:
        raise InvalidInputError("need at least two tones", field="channel")
    if max_lag is None:
        max_lag = w_total - 1
    hn = channel / np.linalg.norm(channel, axis=0, keepdims=True)
    cv, ch = _best_beam_per_tone(channel, geom, b)
    gram_h = np.abs(hn.conj().T @ hn) ** 2
    gram_c = (np.abs(cv.conj().T @ cv) * np.abs(ch.conj().T @ ch)) ** 2
    lags = np.arange(max_lag + 1)
    gamma_h = np.array([np.diagonal(gram_h, k).mean() for k in lags])
    gamma_c1 = np.array([np.diagonal(gram_c, k).mean() for k in lags])
    return lags, gamma_h, gamma_c1


@dataclass
class AnalyticReport:
    gamma_v: list
    gamma_h: list
    g_bq: float
    g_bc: float
    g_total: float
    notes: list = field(default_factory=list)


def analytic_report(geom, p_count, alloc):
    notes = []
    if not geom.half_wavelength:
        notes.append("correlation formulas assume half-wavelength spacing")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    if alloc.n_beams >= 3:
        notes.append("combining gain integrated numerically (no closed form beyond two beams)")
    g_bq = gbq_lower(geom, p_count, alloc.bits_per_beam)
    g_bc = combining_gain(alloc.n_beams, alloc.b_c)
    return AnalyticReport(
        gamma_v=[gamma_sq(geom.m_v, b) for b in alloc.bits_per_beam],
        gamma_h=[gamma_sq(geom.m_h, b) for b in alloc.bits_per_beam],
        g_bq=g_bq, g_bc=g_bc, g_total=g_bq * g_bc, notes=notes)
