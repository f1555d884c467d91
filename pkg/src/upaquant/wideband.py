"""Two-level wideband quantizer.

Level 1 picks two 2D DFT beams per wideband RB from the whole block.  Level 2
quantizes every narrowband RB around those beams: family 1 refines the first
beam alone, family 2 refines the first beam and combines it with the
unrefined second beam.  One selector bit picks the family.
"""

from dataclasses import dataclass, field

import numpy as np

from .codebooks import refinement_grid
from .errors import ConfigurationError, InvalidInputError
from .narrowband import (Beam, Codeword, _refined_books, coarse_search, default_combiners,
                         first_argmax, from_bits, project, refine_single, second_beam,
                         select_final, to_bits, two_beam_gains)


def partition_rbs(grid):
    """Tone ranges of every RB (0-based, half-open).

    Returns
    -------
    list of (range, list of range)
        One entry per wideband RB with its ``R`` narrowband sub-ranges.
    """
    out = []
    per_block, per_sub = grid.tones_per_block, grid.tones_per_subblock
    for l in range(grid.l_blocks):
        start = l * per_block
        subs = [range(start + r * per_sub, start + (r + 1) * per_sub)
                for r in range(grid.r_blocks)]
        out.append((range(start, start + per_block), subs))
    return out


def wideband_overhead(grid, b_w1, b_w2, b_n1):
    """Total feedback bits ``2(B_W1+B_W2)L + (2B_N1+1)RL``."""
    if min(b_w1, b_w2, b_n1) < 0:
        raise InvalidInputError("budgets must be non-negative")
    l, r = grid.l_blocks, grid.r_blocks
    return 2 * (b_w1 + b_w2) * l + (2 * b_n1 + 1) * r * l


def level1_beams(h_block, geom, b_w1, b_w2, combiners):
    """Shared beams of one wideband RB.

    ``c1`` maximizes the block gain over the ``b_w1``-bit product codebook;
    ``c2`` is chosen jointly with a combiner from the ``b_w2``-bit codebook.
    """
    c1 = coarse_search(h_block, geom, b_w1)
    c2 = second_beam(h_block, geom, c1, b_w2, combiners).indices["c2"]
    return c1, c2


def refine_pair(h_nb, geom, c1, c2, grid, combiners):
    """Refine ``c1`` over ``grid`` jointly with the combiner for ``[c1', c2]``.

    Returns the refined offsets ``(tv, th)``, the combiner index and the
    unit beamformer.
    """
    av, ah = _refined_books(geom, c1, grid)
    n = av.shape[1]
    a = project(h_nb, geom, av, ah).reshape(n * n, -1)           # c1'^H H
    c2v = c2.vector(geom)
    b = (c2v.conj() @ np.asarray(h_nb).reshape(geom.m, -1))[None, :]
    rho = project(c2v, geom, av, ah).reshape(-1)                  # c1'^H c2
    gains = two_beam_gains(a, b, rho, combiners.codewords)
    k, u = divmod(first_argmax(gains), gains.shape[1])
    tv, th = divmod(k, n)
    z = combiners.codewords[u]
    f = np.kron(av[:, tv], ah[:, th]) * z[0] + c2v * z[1]
    return (tv, th), u, f / np.linalg.norm(f), gains.size


def level2_quantize(h_nb, geom, c1, c2, grid1, grid2, combiners):
    """Per-RB codeword; payload ``[sel][family bits]`` of ``2*B_N1 + 1`` bits."""
    f1 = refine_single(h_nb, geom, c1, grid1)
    tv, th = f1.indices["theta"]
    n1 = grid1.b_refine
    f1 = Codeword(f1.vector, [0] + to_bits(tv, n1) + to_bits(th, n1), "F1",
                  f1.evaluations, {"theta": (tv, th)})
    (sv, sh), u, vec, evals = refine_pair(h_nb, geom, c1, c2, grid2, combiners)
    n2 = grid2.b_refine
    f2 = Codeword(vec, [1] + to_bits(sv, n2) + to_bits(sh, n2) + to_bits(u, combiners.b_c),
                  "F2", evals, {"theta": (sv, sh), "z": u})
    return select_final(h_nb, f1, f2)


@dataclass
class WidebandState:
    """Quantizer output for one wideband channel."""

    beams: list                 # per wideband RB: (c1, c2)
    codewords: list             # per wideband RB: list of R Codewords
    partition: list
    overhead: int
    level1_payloads: list = field(default_factory=list)

    def tone_beamformers(self, w_total):
        """``M x W`` matrix holding the beamformer applied on every tone."""
        m = self.codewords[0][0].vector.shape[0]
        f = np.zeros((m, w_total), dtype=complex)
        for (_, subs), cws in zip(self.partition, self.codewords):
            for rng, cw in zip(subs, cws):
                f[:, rng.start:rng.stop] = cw.vector[:, None]
        return f

    def per_tone_gain(self, channel):
        """Normalized gain ``|h[w]^H f[w]|^2 / ||h[w]||^2`` for every tone."""
        channel = np.asarray(channel)
        f = self.tone_beamformers(channel.shape[1])
        num = np.abs(np.sum(channel.conj() * f, axis=0)) ** 2
        return num / np.sum(np.abs(channel) ** 2, axis=0)

    def payload_bits(self):
        return sum(len(p) for p in self.level1_payloads) + sum(
            len(cw.payload) for cws in self.codewords for cw in cws)


class WidebandQuantizer:
    """Wideband quantizer with budgets ``B_W1, B_W2, B_N1, B_N2, B_c``.

    ``2*b_n1 == 2*b_n2 + b_c`` keeps both level-2 families the same length.
    """

    def __init__(self, geom, grid, b_w1, b_w2, b_n1, b_n2, b_c, combiners=None,
                 p_set=(3, 4, 5), phase_levels=None):
        if 2 * b_n1 != 2 * b_n2 + b_c:
            raise ConfigurationError("level-2 budgets need 2*B_N1 == 2*B_N2 + B_c",
                                     field="b_n1")
        if min(b_w1, b_w2, b_n1, b_n2, b_c) < 0:
            raise ConfigurationError("budgets must be non-negative")
        self.geom, self.grid = geom, grid
        self.b_w1, self.b_w2, self.b_n1, self.b_n2, self.b_c = b_w1, b_w2, b_n1, b_n2, b_c
        self.grid1 = refinement_grid(b_w1, b_n1)
        self.grid2 = refinement_grid(b_w1, b_n2)
        self.combiners = combiners if combiners is not None else default_combiners(
            geom, [b_w1, b_w2], b_c, p_set, phase_levels)
        self.partition = partition_rbs(grid)

    @property
    def overhead(self):
        return wideband_overhead(self.grid, self.b_w1, self.b_w2, self.b_n1)

    def quantize(self, channel):
        channel = np.asarray(channel)
        if channel.shape != (self.geom.m, self.grid.w_total):
            raise InvalidInputError(
                f"channel must be {self.geom.m}x{self.grid.w_total}", field="channel")
        beams, codewords, l1 = [], [], []
        for block, subs in self.partition:
            c1, c2 = level1_beams(channel[:, block.start:block.stop], self.geom,
                                  self.b_w1, self.b_w2, self.combiners)
            beams.append((c1, c2))
            l1.append(to_bits(c1.iv, self.b_w1) + to_bits(c1.ih, self.b_w1)
                      + to_bits(c2.iv, self.b_w2) + to_bits(c2.ih, self.b_w2))
            codewords.append([
                level2_quantize(channel[:, r.start:r.stop], self.geom, c1, c2,
                                self.grid1, self.grid2, self.combiners)
                for r in subs])
        return WidebandState(beams, codewords, self.partition, self.overhead, l1)

    def decode(self, level1_payload, rb_payload):
        """Beamformer of one narrowband RB from its wideband and RB payloads."""
        w1, w2 = self.b_w1, self.b_w2
        c1 = Beam(from_bits(level1_payload[:w1]), from_bits(level1_payload[w1:2 * w1]), w1)
        c2 = Beam(from_bits(level1_payload[2 * w1:2 * w1 + w2]),
                  from_bits(level1_payload[2 * w1 + w2:]), w2)
        bits = list(rb_payload)
        if bits[0] == 0:
            n = self.b_n1
            off = self.grid1.offsets
            return c1.vector(self.geom, (off[from_bits(bits[1:1 + n])],
                                         off[from_bits(bits[1 + n:1 + 2 * n])]))
        n = self.b_n2
        off = self.grid2.offsets
        f = c1.vector(self.geom, (off[from_bits(bits[1:1 + n])],
                                  off[from_bits(bits[1 + n:1 + 2 * n])]))
        z = self.combiners.codewords[from_bits(bits[1 + 2 * n:])]
        f = f * z[0] + c2.vector(self.geom) * z[1]
        return f / np.linalg.norm(f)
