"""Monte Carlo estimators that check the closed forms independently.

Each estimator simulates the underlying random experiment directly and
shares no code path with the formula it checks.
"""

import numpy as np

from .channel import array_response, sample_paths
from .codebooks import dft_codebook


def _best_codeword_gains(m_a, b, psi):
    # |a_q^H d(psi)|^2 maximized over the b-bit codebook, for each psi
    book = dft_codebook(m_a, b).matrix
    m = np.arange(m_a)
    d = np.exp(1j * np.pi * np.outer(psi, m)) / np.sqrt(m_a)
    g = np.abs(d @ book.conj()) ** 2
    return g.max(axis=1), g.argmax(axis=1)


def mc_gamma_sq(m_a, b, draws=100_000, rng=None, chunk=20_000):
    """Mean best-codeword gain for directions uniform on [-1, 1]."""
    rng = np.random.default_rng(rng)
    total = 0.0
    done = 0
    while done < draws:
        n = min(chunk, draws - done)
        total += _best_codeword_gains(m_a, b, rng.uniform(-1, 1, n))[0].sum()
        done += n
    return total / draws


def mc_order_stat(p_count, draws=100_000, rng=None):
    """Means of the sorted (descending) powers of ``p_count`` CN(0,1) gains."""
    rng = np.random.default_rng(rng)
    g = (rng.standard_normal((draws, p_count))
         + 1j * rng.standard_normal((draws, p_count))) / np.sqrt(2)
    return np.sort(np.abs(g) ** 2, axis=1)[:, ::-1].mean(axis=0)


def mc_gbc(u_count, draws=10_000, rng=None):
    """Two-beam combining gain under the random equal-gain model.

    ``w = [1, e^{j v}] / sqrt(2)`` with ``v`` uniform; the combiner with the
    nearest phase out of ``u_count`` uniformly spaced ones is used.
    """
    rng = np.random.default_rng(rng)
    v = rng.uniform(0, 2 * np.pi, draws)
    step = 2 * np.pi / u_count
    phase = np.round(v / step) * step
    w = np.stack([np.ones(draws), np.exp(1j * v)], axis=1) / np.sqrt(2)
    z = np.stack([np.ones(draws), np.exp(1j * phase)], axis=1) / np.sqrt(2)
    return float(np.mean(np.abs(np.sum(z.conj() * w, axis=1)) ** 2))


def mc_gbc_argmax(combiners, draws=10_000, rng=None):
    """Same model with the operational best-codeword selection."""
    rng = np.random.default_rng(rng)
    n = combiners.n_beams
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, (draws, n)))
    w[:, 0] = 1.0
    w /= np.sqrt(n)
    return float(np.mean((np.abs(w @ combiners.codewords.conj().T) ** 2).max(axis=1)))


def mc_covariance(geom, bits_per_beam, p_count, draws=100_000, rng=None, chunk=20_000):
    """Sample mean of ``C^H h h^H C`` with beam ``n`` the nearest DFT beam
    to the ``n``-th strongest path (half-wavelength spacing)."""
    rng = np.random.default_rng(rng)
    n_beams = len(bits_per_beam)
    acc = np.zeros((n_beams, n_beams), dtype=complex)
    done = 0
    while done < draws:
        k = min(chunk, draws - done)
        psi_v = rng.uniform(-1, 1, (k, p_count))
        psi_h = rng.uniform(-1, 1, (k, p_count))
        g = (rng.standard_normal((k, p_count)) + 1j * rng.standard_normal((k, p_count))) / np.sqrt(2)
        order = np.argsort(-np.abs(g), axis=1)
        psi_v, psi_h, g = (np.take_along_axis(a, order, 1) for a in (psi_v, psi_h, g))
        y = np.zeros((k, n_beams), dtype=complex)
        for n, b in enumerate(bits_per_beam):
            # per-domain factors c_n^H d_p for every path p
            parts = []
            for m_a, psi in ((geom.m_v, psi_v), (geom.m_h, psi_h)):
                book = dft_codebook(m_a, b).matrix
                m = np.arange(m_a)
                d = np.exp(1j * np.pi * psi[..., None] * m) / np.sqrt(m_a)   # (k, P, m_a)
                ip = d[:, n, :] @ book.conj()                                 # a_q^H d_n, all q
                best = np.abs(ip).argmax(axis=1)
                parts.append(np.einsum("kpm,mk->kp", d, book[:, best].conj()))
            y[:, n] = np.sum(g * parts[0] * parts[1], axis=1)
        acc += y.T @ y.conj()
        done += k
    return acc / draws
