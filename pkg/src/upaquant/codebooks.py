"""Quantization alphabets: DFT beams, refinement offsets and beam combiners."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .analysis import gamma_sq, order_stat_gain
from .errors import InfeasiblePackingError, InvalidInputError, NumericalDomainError

PSD_FLOOR = 1e-12
EXHAUSTIVE_LIMIT = 50_000


def dft_vector(m_a, arg):
    """DFT codeword ``a(arg)`` with entries ``exp(j*pi*m*(2*arg - 1)) / sqrt(m_a)``.

    ``arg = q/Q`` gives the ``q``-th codeword of a ``Q``-point codebook; a
    fractional shift of ``arg`` steers the beam between grid points.
    """
    m = np.arange(m_a)
    return np.exp(1j * np.pi * np.multiply.outer(2 * np.asarray(arg) - 1, m)) / np.sqrt(m_a)


def shift_vector(m_a, theta):
    """Unnormalized phase ramp with ``a(x) * shift_vector(m_a, t) == a(x + t)``."""
    m = np.arange(m_a)
    return np.exp(2j * np.pi * np.multiply.outer(np.asarray(theta), m))


@dataclass(frozen=True)
class DftCodebook:
    m_a: int
    bits: int
    matrix: np.ndarray  # (m_a, Q), column q-1 is a(q/Q)

    @property
    def size(self):
        return self.matrix.shape[1]

    @property
    def arguments(self):
        return np.arange(1, self.size + 1) / self.size

    @property
    def directions(self):
        return 2 * self.arguments - 1

    def __getitem__(self, index):
        return self.matrix[:, index]

    def __len__(self):
        return self.size


def dft_codebook(m_a, b):
    """``2**b`` DFT codewords for an ``m_a``-element domain, ordered q = 1..Q."""
    if b < 0:
        raise InvalidInputError("codebook bits must be >= 0", field="bits")
    q_count = 2 ** int(b)
    args = np.arange(1, q_count + 1) / q_count
    return DftCodebook(int(m_a), int(b), dft_vector(m_a, args).T.copy())


@dataclass(frozen=True)
class RefinementGrid:
    b_base: int
    b_refine: int
    offsets: np.ndarray

    def __len__(self):
        return len(self.offsets)


def refinement_grid(b_base, b_refine):
    """Symmetric ``2**b_refine``-point offset grid that splits one cell of a
    ``b_base``-bit DFT codebook.

    Offsets are in units of the codebook argument ``q/Q``.  ``b_refine = 0``
    degenerates to the single offset 0.
    """
    if b_base < 0 or b_refine < 0:
        raise InvalidInputError("grid bits must be >= 0")
    count = 2 ** int(b_refine)
    step = 2.0 ** -(b_base + b_refine)
    edge = (1 - 2.0 ** -b_refine) / 2 ** (b_base + 1)
    offsets = -edge + step * np.arange(count)
    return RefinementGrid(int(b_base), int(b_refine), offsets)


def analytic_covariance(geom, bits_per_beam, p_count):
    """Closed-form ``E[C^H h h^H C]`` for beams matched to the strongest paths.

    Beam ``n`` is assumed to quantize the ``n``-th strongest path; each entry is
    a sum over paths of the ordered path power times one factor per domain.
    """
    n_beams = len(bits_per_beam)
    if n_beams < 1:
        raise InvalidInputError("need at least one beam", field="bits_per_beam")
    power = np.array([order_stat_gain(p_count, p + 1) for p in range(p_count)])
    domains = [(geom.m_v, [math.sqrt(gamma_sq(geom.m_v, b)) for b in bits_per_beam]),
               (geom.m_h, [math.sqrt(gamma_sq(geom.m_h, b)) for b in bits_per_beam])]

    def factor(m_a, gam, p, c, d):
        if c == d:
            return gam[c] ** 2 if p == c else 1.0 / m_a
        if p == c:
            return gam[c] / m_a
        if p == d:
            return gam[d] / m_a
        return 1.0 / m_a ** 2

    r = np.zeros((n_beams, n_beams), dtype=complex)
    for c in range(n_beams):
        for d in range(n_beams):
            r[c, d] = sum(power[p] * factor(geom.m_v, domains[0][1], p, c, d)
                          * factor(geom.m_h, domains[1][1], p, c, d)
                          for p in range(p_count))
    return r


def psd_sqrt(r, floor=PSD_FLOOR):
    """Hermitian square root with an eigenvalue floor."""
    r = np.atleast_2d(np.asarray(r, dtype=complex))
    if r.shape[0] != r.shape[1]:
        raise NumericalDomainError("covariance must be square")
    scale = max(1.0, float(np.abs(r).max()))
    if not np.allclose(r, r.conj().T, atol=1e-10 * scale):
        raise NumericalDomainError("covariance is not Hermitian")
    w, v = np.linalg.eigh((r + r.conj().T) / 2)
    if w.min() < -1e-9 * max(1.0, float(np.abs(w).max())):
        raise NumericalDomainError(f"covariance not PSD (min eigenvalue {w.min():.3g})")
    w = np.maximum(w, floor)
    return (v * np.sqrt(w)) @ v.conj().T


def equal_gain_candidates(n_beams, phase_levels):
    """All equal-gain vectors with first phase pinned to 0, lexicographic order.

    Returns the phase-index tuples ``(K, N)`` and unit vectors ``(K, N)``.
    """
    tails = np.array(list(itertools.product(range(phase_levels), repeat=n_beams - 1)),
                     dtype=int).reshape(-1, n_beams - 1)
    idx = np.hstack([np.zeros((len(tails), 1), dtype=int), tails])
    vecs = np.exp(2j * np.pi * idx / phase_levels) / np.sqrt(n_beams)
    return idx, vecs


def _worst_overlap(gram, sel):
    sub = gram[np.ix_(sel, sel)].copy()
    np.fill_diagonal(sub, 0.0)
    return sub.max() if len(sel) > 1 else 0.0


def pack_seeds(n_beams, u_count, phase_levels, method="auto", limit=EXHAUSTIVE_LIMIT):
    """Choose ``u_count`` equal-gain seeds maximizing the minimum chordal distance.

    The all-zero-phase vector is always the first seed.  ``method`` is
    ``"exhaustive"``, ``"greedy"`` (multi-start farthest point) or ``"auto"``,
    which enumerates whenever at most ``limit`` subsets exist.  Ties go to
    the lexicographically smallest index set.

    Returns
    -------
    list of int
        Sorted candidate indices into :func:`equal_gain_candidates`.
    """
    k = phase_levels ** (n_beams - 1)
    if u_count > k:
        raise InfeasiblePackingError(
            f"{u_count} seeds requested but only {k} distinct equal-gain lines exist "
            f"for N={n_beams}, I={phase_levels}")
    if u_count == 1:
        return [0]
    _, vecs = equal_gain_candidates(n_beams, phase_levels)
    gram = np.abs(vecs.conj() @ vecs.T) ** 2
    tol = 1e-12

    if method == "exhaustive" or (method == "auto" and math.comb(k - 1, u_count - 1) <= limit):
        combos = np.array(list(itertools.combinations(range(1, k), u_count - 1)), dtype=int)
        full = np.hstack([np.zeros((len(combos), 1), dtype=int), combos])
        sub = gram[full[:, :, None], full[:, None, :]]
        sub[:, np.arange(u_count), np.arange(u_count)] = 0.0
        worst = sub.max(axis=(1, 2))
        best = int(np.flatnonzero(worst <= worst.min() + tol)[0])
        return full[best].tolist()

    best_sel, best_score = None, np.inf
    for start in range(1, k):
        sel = [0, start]
        while len(sel) < u_count:
            overlap = gram[:, sel].max(axis=1)
            overlap[sel] = np.inf
            sel.append(int(np.flatnonzero(overlap <= overlap.min() + tol)[0]))
        sel = sorted(sel)
        score = _worst_overlap(gram, sel)
        if score < best_score - tol or (abs(score - best_score) <= tol and sel < best_sel):
            best_sel, best_score = sel, score
    return best_sel


def default_phase_levels(u_count):
    return max(8, 2 * u_count)


@dataclass(frozen=True)
class CombinerCodebook:
    n_beams: int
    b_c: int
    phase_levels: int
    codewords: np.ndarray      # (U, N) unit rows z_u
    seed_phases: np.ndarray    # (U, N) phase indices of e_u
    seeds: np.ndarray          # (U, N) equal-gain e_u

    @property
    def size(self):
        return len(self.codewords)

    def __len__(self):
        return self.size

    def __getitem__(self, index):
        return self.codewords[index]

    def min_chordal_distance(self):
        if self.size < 2:
            return 1.0
        ip = np.abs(self.seeds.conj() @ self.seeds.T) ** 2
        np.fill_diagonal(ip, 0.0)
        return float(np.sqrt(max(0.0, 1.0 - ip.max())))


def combiner_codebook(r, n_beams, b_c, phase_levels=None, method="auto"):
    """Correlated equal-gain combiner codebook ``z_u = R^{1/2} e_u / ||R^{1/2} e_u||``.

    A single beam needs no combining, so ``n_beams == 1`` always yields the
    one codeword ``[1]``.
    """
    r = np.atleast_2d(np.asarray(r, dtype=complex))
    if r.shape != (n_beams, n_beams):
        raise InvalidInputError(f"covariance must be {n_beams}x{n_beams}", field="r")
    root = psd_sqrt(r)
    u_count = 2 ** int(b_c)
    if phase_levels is None:
        phase_levels = default_phase_levels(u_count)
    if n_beams == 1:
        one = np.ones((1, 1), dtype=complex)
        return CombinerCodebook(1, 0, phase_levels, one, np.zeros((1, 1), dtype=int), one)
    sel = pack_seeds(n_beams, u_count, phase_levels, method=method)
    idx, vecs = equal_gain_candidates(n_beams, phase_levels)
    seeds = vecs[sel]
    z = seeds @ root.T
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return CombinerCodebook(n_beams, int(b_c), phase_levels, z, idx[sel], seeds)


def write_codebook(path, vectors, comment=None):
    """Write one codeword per line as space-separated ``re,im`` pairs."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        for row in vectors:
            fh.write(" ".join(f"{float(v.real)!r},{float(v.imag)!r}" for v in row) + "\n")


def read_codebook(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([complex(float(re_), float(im_))
                         for re_, im_ in (tok.split(",") for tok in line.split())])
    return np.array(rows, dtype=complex)
