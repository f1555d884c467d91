"""Narrowband beam quantization.

Beams are 2D DFT codewords ``c = c_v kron c_h``.  Projections of a channel on
a whole product codebook are computed without forming the Kronecker vectors:
with ``H`` the row-major ``m_v x m_h`` view of ``h``,
``(c_v kron c_h)^H h = c_v^H H conj(c_h)``.

Channels may be a single vector (length M) or a block of columns (M x V);
block gains are squared Frobenius norms ``||H^H f||^2``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .analysis import complexity_budget
from .codebooks import (analytic_covariance, combiner_codebook, dft_codebook,
                        dft_vector, refinement_grid)
from .errors import (DegenerateBeamsetError, ExhaustedCodebookError,
                     InsufficientBeamsError, InvalidInputError)

TIE_TOL = 1e-10
COND_LIMIT = 1e12
RESIDUAL_FLOOR = 1e-9


def first_argmax(values, tol=TIE_TOL):
    """Flat index of the first entry within a relative ``tol`` of the maximum."""
    flat = np.ravel(values)
    top = flat.max()
    return int(np.flatnonzero(flat >= top - tol * abs(top))[0])


def as_block(h):
    h = np.asarray(h, dtype=complex)
    return h[:, None] if h.ndim == 1 else h


def block_gain(h, f):
    """``||H^H f||^2`` (``|h^H f|^2`` for a vector channel)."""
    return float(np.sum(np.abs(as_block(h).conj().T @ f) ** 2))


def normalized_gain(h, f):
    h = as_block(h)
    return block_gain(h, f) / float(np.sum(np.abs(h) ** 2))


def project(h, geom, av, ah):
    """``(Qv, Qh, V)`` array of ``(av[:, i] kron ah[:, j])^H h_v``."""
    cube = as_block(h).reshape(geom.m_v, geom.m_h, -1)
    return np.einsum("iv,ijw,jh->vhw", av.conj(), cube, ah.conj())


def to_bits(value, width):
    return [(int(value) >> k) & 1 for k in range(width - 1, -1, -1)]


def from_bits(bits):
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


@dataclass(frozen=True)
class Beam:
    """Index pair into a pair of ``bits``-bit DFT codebooks (0-based)."""

    iv: int
    ih: int
    bits: int

    def arguments(self):
        q = 2 ** self.bits
        return (self.iv + 1) / q, (self.ih + 1) / q

    def vector(self, geom, offset=(0.0, 0.0)):
        xv, xh = self.arguments()
        return np.kron(dft_vector(geom.m_v, xv + offset[0]),
                       dft_vector(geom.m_h, xh + offset[1]))

    def same_direction(self, other):
        # arguments equal as rationals (iv+1)/2^bits
        return all((a + 1) * 2 ** other.bits == (b + 1) * 2 ** self.bits
                   for a, b in ((self.iv, other.iv), (self.ih, other.ih)))


@dataclass
class Codeword:
    """Quantized unit beamformer with its feedback payload (MSB first)."""

    vector: np.ndarray
    payload: list
    family: str
    evaluations: int = 0
    indices: dict = field(default_factory=dict)

    @property
    def n_bits(self):
        return len(self.payload)

    def gain(self, h):
        return normalized_gain(h, self.vector)


@dataclass
class QuantizedBeamSet:
    beams: np.ndarray          # (M, N) unit columns
    beam_indices: list         # list of Beam
    weight: np.ndarray         # unit N-vector
    gain: float                # block gain of the combined beamformer

    @property
    def n_beams(self):
        return self.beams.shape[1]

    def beamformer(self):
        f = self.beams @ self.weight
        return f / np.linalg.norm(f)


def _phase_fix(z):
    k = int(np.flatnonzero(np.abs(z) > 1e-12)[0])
    return z * np.exp(-1j * np.angle(z[k]))


def generalized_eigvecs(beams, h, count=1):
    """Top ``count`` generalized eigenvectors of ``(C^H H H^H C, C^H C)``."""
    beams = np.asarray(beams, dtype=complex)
    gram = beams.conj().T @ beams
    if np.linalg.cond(gram) > COND_LIMIT:
        raise DegenerateBeamsetError("selected beams are linearly dependent")
    y = beams.conj().T @ as_block(h)
    w, v = scipy.linalg.eigh(y @ y.conj().T, gram)
    order = np.argsort(-w, kind="stable")[:count]
    vecs = v[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    return w[order], np.column_stack([_phase_fix(vecs[:, t]) for t in range(vecs.shape[1])])


def rayleigh_weight(beams, h):
    """Unit weight maximizing ``||H^H C z||^2 / ||C z||^2``."""
    beams = np.atleast_2d(np.asarray(beams, dtype=complex))
    if beams.shape[1] == 1:
        return np.ones(1, dtype=complex)
    return generalized_eigvecs(beams, h, 1)[1][:, 0]


def beam_quantize(h, geom, n_beams, bits_per_beam, rank=1):
    """Greedy selection of ``n_beams`` 2D DFT beams.

    Each step adds the product-codebook beam that maximizes the sum of the
    top ``rank`` eigenvalues of the channel projected on the span of the
    selected beams.  Candidates already in the span (repeated directions)
    are skipped; ties go to the lowest (v, h) index.
    """
    if n_beams < 1 or len(bits_per_beam) != n_beams:
        raise InvalidInputError("need one bit width per beam", field="bits_per_beam")
    h = as_block(h)
    basis = np.zeros((geom.m, 0), dtype=complex)
    x = np.zeros((0, h.shape[1]), dtype=complex)  # basis^H H
    chosen, columns = [], []
    for n, b in enumerate(bits_per_beam):
        av = dft_codebook(geom.m_v, b).matrix
        ah = dft_codebook(geom.m_h, b).matrix
        qv, qh = av.shape[1], ah.shape[1]
        ch = project(h, geom, av, ah).reshape(qv * qh, -1)           # c^H H
        cb = project(basis, geom, av, ah).reshape(qv * qh, -1) if n else \
            np.zeros((qv * qh, 0), dtype=complex)                   # c^H basis
        resid = 1.0 - np.sum(np.abs(cb) ** 2, axis=1)
        valid = resid > RESIDUAL_FLOOR
        if not valid.any():
            raise ExhaustedCodebookError(f"no new direction left for beam {n + 1}")
        safe = np.where(valid, resid, 1.0)
        y = (ch - cb @ x) / np.sqrt(safe)[:, None]                   # r_hat^H H
        if rank == 1 and h.shape[1] == 1:
            score = np.sum(np.abs(x) ** 2) + np.abs(y[:, 0]) ** 2
        else:
            k = qv * qh
            g = np.zeros((k, n + 1, n + 1), dtype=complex)
            g[:, :n, :n] = x @ x.conj().T
            g[:, :n, n] = (x @ y.conj().T).T
            g[:, n, :n] = g[:, :n, n].conj()
            g[:, n, n] = np.sum(np.abs(y) ** 2, axis=1)
            ev = np.linalg.eigvalsh(g)[:, ::-1]
            score = ev[:, :rank].sum(axis=1)
        score = np.where(valid, score, -np.inf)
        best = first_argmax(score)
        iv, ih = divmod(best, qh)
        beam = Beam(iv, ih, b)
        col = np.kron(av[:, iv], ah[:, ih])
        r = col - basis @ (basis.conj().T @ col)
        basis = np.column_stack([basis, r / np.linalg.norm(r)])
        x = basis.conj().T @ h
        chosen.append(beam)
        columns.append(col)
    beams = np.column_stack(columns)
    z = rayleigh_weight(beams, h) if rank == 1 else generalized_eigvecs(beams, h, 1)[1][:, 0]
    f = beams @ z
    return QuantizedBeamSet(beams, chosen, z, block_gain(h, f / np.linalg.norm(f)))


def coarse_gains(h, geom, b1):
    """``(Qv, Qh)`` block gains of every ``b1``-bit product-codebook beam."""
    av = dft_codebook(geom.m_v, b1).matrix
    ah = dft_codebook(geom.m_h, b1).matrix
    return np.sum(np.abs(project(h, geom, av, ah)) ** 2, axis=2)


def coarse_search(h, geom, b1):
    gains = coarse_gains(h, geom, b1)
    iv, ih = divmod(first_argmax(gains), gains.shape[1])
    return Beam(iv, ih, b1)


def _refined_books(geom, beam, grid):
    xv, xh = beam.arguments()
    av = dft_vector(geom.m_v, xv + grid.offsets).T
    ah = dft_vector(geom.m_h, xh + grid.offsets).T
    return av, ah


def refine_single(h, geom, beam, grid):
    """Best refined version of ``beam`` over the joint offset grid (family 1)."""
    av, ah = _refined_books(geom, beam, grid)
    gains = np.sum(np.abs(project(h, geom, av, ah)) ** 2, axis=2)
    tv, th = divmod(first_argmax(gains), gains.shape[1])
    f = np.kron(av[:, tv], ah[:, th])
    rb = grid.b_refine
    payload = ([0] + to_bits(beam.iv, beam.bits) + to_bits(beam.ih, beam.bits)
               + to_bits(tv, rb) + to_bits(th, rb))
    return Codeword(f, payload, "F1", evaluations=gains.size,
                    indices={"c1": beam, "theta": (tv, th)})


def two_beam_gains(a, b, rho, z):
    """Block gains of ``(c1 z1 + c2 z2) / ||c1 z1 + c2 z2||``.

    ``a`` and ``b`` are ``c1^H H`` and ``c2^H H`` with the tone axis last,
    ``rho = c1^H c2`` and ``z`` is a ``(U, 2)`` weight set.  Leading axes of
    ``a``, ``b`` and ``rho`` broadcast; the result gains a trailing U axis.
    """
    z1, z2 = z[:, 0], z[:, 1]
    num = np.sum(np.abs(np.conj(a)[..., None, :] * z1[:, None]
                        + np.conj(b)[..., None, :] * z2[:, None]) ** 2, axis=-1)
    den = (np.abs(z1) ** 2 + np.abs(z2) ** 2
           + 2 * np.real(np.conj(z1) * z2 * np.asarray(rho)[..., None]))
    return num / den


def second_beam(h, geom, beam, b2, combiners, coarse_bits=None):
    """Pair ``beam`` with the best unrefined ``b2``-bit beam and combiner
    (family 2).  Candidates pointing along ``beam`` are skipped."""
    h = as_block(h)
    c1 = beam.vector(geom)
    av = dft_codebook(geom.m_v, b2).matrix
    ah = dft_codebook(geom.m_h, b2).matrix
    qv, qh = av.shape[1], ah.shape[1]
    a = c1.conj() @ h                                        # (V,)
    b = project(h, geom, av, ah).reshape(qv * qh, -1)        # (K, V)
    rho = np.conj(project(c1, geom, av, ah).reshape(-1))     # c1^H c2
    gains = two_beam_gains(a[None, :], b, rho, combiners.codewords)  # (K, U)
    skip = np.array([beam.same_direction(Beam(k // qh, k % qh, b2))
                     for k in range(qv * qh)])
    gains[skip] = -np.inf
    k, u = divmod(first_argmax(gains), gains.shape[1])
    iv2, ih2 = divmod(k, qh)
    c2 = np.kron(av[:, iv2], ah[:, ih2])
    z = combiners.codewords[u]
    f = c1 * z[0] + c2 * z[1]
    f /= np.linalg.norm(f)
    payload = ([1] + to_bits(beam.iv, beam.bits) + to_bits(beam.ih, beam.bits)
               + to_bits(iv2, b2) + to_bits(ih2, b2) + to_bits(u, combiners.b_c))
    return Codeword(f, payload, "F2", evaluations=gains.size,
                    indices={"c1": beam, "c2": Beam(iv2, ih2, b2), "z": u})


def select_final(h, f1, f2):
    """Larger-gain candidate; ties keep family 1.  The selector bit is the
    first payload bit of each candidate."""
    return f2 if block_gain(h, f2.vector) > block_gain(h, f1.vector) * (1 + TIE_TOL) else f1


def default_combiners(geom, bits, b_c, p_set=(3, 4, 5), phase_levels=None):
    """Two-beam combiner codebook designed for the path-count-averaged
    analytic covariance."""
    r = np.mean([analytic_covariance(geom, bits, p) for p in p_set], axis=0)
    return combiner_codebook(r, 2, b_c, phase_levels)


class NarrowbandQuantizer:
    """Three-round quantizer: coarse beam, two refinement families, selector bit.

    Parameters
    ----------
    geom : UpaGeometry
    b1, b2, b_c : int
        Coarse-beam, second-beam and combiner bits.  The refinement width is
        ``(2*b2 + b_c) / 2`` so both families use the same payload length.
    combiners : CombinerCodebook, optional
        Defaults to :func:`default_combiners`.
    """

    def __init__(self, geom, b1, b2, b_c, combiners=None, p_set=(3, 4, 5), phase_levels=None):
        if (2 * b2 + b_c) % 2:
            raise InvalidInputError("2*b2 + b_c must be even to match the refinement bits",
                                    field="b_c")
        if min(b1, b2, b_c) < 0:
            raise InvalidInputError("bit counts must be non-negative")
        self.geom = geom
        self.b1, self.b2, self.b_c = int(b1), int(b2), int(b_c)
        self.b_refine = (2 * b2 + b_c) // 2
        self.grid = refinement_grid(b1, self.b_refine)
        self.combiners = combiners if combiners is not None else default_combiners(
            geom, [b1, b2], b_c, p_set, phase_levels)
        if self.combiners.n_beams != 2 or self.combiners.b_c != b_c:
            raise InvalidInputError("combiner codebook must hold 2**b_c two-beam weights",
                                    field="combiners")

    @property
    def payload_bits(self):
        return complexity_budget("proposed", self.b1, self.b2, self.b_c)[0]

    def quantize(self, h):
        c1 = coarse_search(h, self.geom, self.b1)
        f1 = refine_single(h, self.geom, c1, self.grid)
        f2 = second_beam(h, self.geom, c1, self.b2, self.combiners)
        out = select_final(h, f1, f2)
        out.evaluations = 2 ** (2 * self.b1) + f1.evaluations + f2.evaluations
        return out

    def decode(self, payload):
        """Rebuild the beamformer from its feedback bits."""
        payload = list(payload)
        if len(payload) != self.payload_bits:
            raise InvalidInputError(
                f"payload has {len(payload)} bits, expected {self.payload_bits}", field="payload")
        b1 = self.b1
        beam = Beam(from_bits(payload[1:1 + b1]), from_bits(payload[1 + b1:1 + 2 * b1]), b1)
        rest = payload[1 + 2 * b1:]
        if payload[0] == 0:
            rb = self.b_refine
            tv, th = from_bits(rest[:rb]), from_bits(rest[rb:])
            return beam.vector(self.geom, (self.grid.offsets[tv], self.grid.offsets[th]))
        b2 = self.b2
        c2 = Beam(from_bits(rest[:b2]), from_bits(rest[b2:2 * b2]), b2)
        z = self.combiners.codewords[from_bits(rest[2 * b2:])]
        f = beam.vector(self.geom) * z[0] + c2.vector(self.geom) * z[1]
        return f / np.linalg.norm(f)


def _dominant_pairs(h, geom, count):
    u, _, vh = np.linalg.svd(np.asarray(h).reshape(geom.m_v, geom.m_h))
    # H = sum_k s_k u_k v_k^H, so the k-th layer is u_k kron conj(v_k)
    return [(u[:, k], vh[k].conj()) for k in range(count)]


def _quantize_domain(vec, m_a, b):
    book = dft_codebook(m_a, b).matrix
    i = first_argmax(np.abs(book.conj().T @ vec) ** 2)
    return i, book[:, i]


def kp_baseline(h, geom, b_total):
    """Kronecker-product codebook driven by the dominant singular pair."""
    if b_total % 2:
        raise InvalidInputError("KP budget must be even", field="b_total")
    b = b_total // 2
    (u1, v1), = _dominant_pairs(h, geom, 1)
    iv, cv = _quantize_domain(u1, geom.m_v, b)
    ih, ch = _quantize_domain(v1, geom.m_h, b)
    f = np.kron(cv, ch.conj())
    return Codeword(f, to_bits(iv, b) + to_bits(ih, b), "KP",
                    evaluations=2 ** (b + 1), indices={"v": iv, "h": ih})


def enhanced_kp_baseline(h, geom, b1, b2):
    """Two-layer KP codebook; the two reconstructions are added without
    weighting and normalized."""
    layers = _dominant_pairs(h, geom, 2) if min(geom.m_v, geom.m_h) > 1 else \
        _dominant_pairs(h, geom, 1) * 2
    f = np.zeros(geom.m, dtype=complex)
    payload, idx = [], {}
    for n, ((u, v), b) in enumerate(zip(layers, (b1, b2))):
        iv, cv = _quantize_domain(u, geom.m_v, b)
        ih, ch = _quantize_domain(v, geom.m_h, b)
        f += np.kron(cv, ch.conj())
        payload += to_bits(iv, b) + to_bits(ih, b)
        idx[f"layer{n + 1}"] = (iv, ih)
    norm = np.linalg.norm(f)
    if norm < 1e-12:
        # the two layers cancelled; keep the first one
        iv, ih = idx["layer1"]
        f = np.kron(dft_codebook(geom.m_v, b1)[iv], dft_codebook(geom.m_h, b1)[ih].conj())
        norm = 1.0
    return Codeword(f / norm, payload, "EKP",
                    evaluations=2 * (2 ** b1 + 2 ** b2), indices=idx)


def mimo_quantize(h_mimo, geom, n_beams, bits_per_beam, rank):
    """Rank-``rank`` beamformers sharing one set of quantized beams.

    Beams are chosen to maximize the sum of the top ``rank`` projected
    channel eigenvalues; beamformer ``t`` uses the ``t``-th generalized
    eigenvector as its (unquantized) weight.
    """
    h_mimo = as_block(h_mimo)
    if rank < 1 or rank > min(h_mimo.shape[1], n_beams):
        raise InsufficientBeamsError(
            f"rank {rank} needs 1 <= rank <= min(V={h_mimo.shape[1]}, N={n_beams})",
            field="rank")
    beamset = beam_quantize(h_mimo, geom, n_beams, bits_per_beam, rank=rank)
    _, z = generalized_eigvecs(beamset.beams, h_mimo, rank)
    payload = []
    for beam in beamset.beam_indices:
        payload += to_bits(beam.iv, beam.bits) + to_bits(beam.ih, beam.bits)
    out = []
    for t in range(rank):
        f = beamset.beams @ z[:, t]
        out.append(Codeword(f / np.linalg.norm(f), list(payload), "MIMO",
                            indices={"beams": beamset.beam_indices, "layer": t}))
    return out
