"""Monte Carlo campaigns, sweeps, comparison tables and report export.

Trial ``i`` draws its channel from ``SeedSequence([seed, i])`` and uses path
count ``p_set[i % len(p_set)]``, so results do not depend on how trials are
spread over worker processes.
"""

import csv
import functools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .channel import narrowband_channel, sample_paths, wideband_channel
from .errors import ConfigurationError, InvalidInputError
from .narrowband import NarrowbandQuantizer, enhanced_kp_baseline, kp_baseline
from .wideband import WidebandQuantizer


@dataclass
class GainReport:
    scenario: str
    m_v: int
    m_h: int
    scheme: str
    b_total: int
    trials: int
    mean_gain: float
    stderr: float
    seconds: float


COLUMNS = [f.name for f in fields(GainReport)]


def trial_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@functools.lru_cache(maxsize=32)
def build_quantizer(config):
    """Callable mapping one channel realization to its normalized gain."""
    geom = config.geometry()
    if config.scheme == "proposed":
        q = NarrowbandQuantizer(geom, config.b1, config.b2, config.b_c,
                                p_set=config.p_set, phase_levels=config.phase_levels)
        return lambda h: q.quantize(h).gain(h)
    if config.scheme == "kp":
        return lambda h: kp_baseline(h, geom, config.b_total).gain(h)
    if config.scheme == "enhanced_kp":
        return lambda h: enhanced_kp_baseline(h, geom, config.b1, config.b2).gain(h)
    grid = config.grid()
    if config.scheme == "wideband":
        q = WidebandQuantizer(geom, grid, config.b_w1, config.b_w2, config.b_n1, config.b_n2,
                              config.b_c, p_set=config.p_set, phase_levels=config.phase_levels)
        return lambda hw: float(q.quantize(hw).per_tone_gain(hw).mean())
    q = NarrowbandQuantizer(geom, config.b1, config.b2, config.b_c,
                            p_set=config.p_set, phase_levels=config.phase_levels)
    return functools.partial(_narrowband_per_rb, q, grid)


def _narrowband_per_rb(q, grid, hw):
    # one codeword per narrowband RB, quantized from the RB's center tone
    size = grid.tones_per_subblock
    gains = []
    for start in range(0, grid.w_total, size):
        block = hw[:, start:start + size]
        f = q.quantize(block[:, size // 2]).vector
        gains.append(np.abs(block.conj().T @ f) ** 2 / np.sum(np.abs(block) ** 2, axis=0))
    return float(np.concatenate(gains).mean())


def synthesize(config, index):
    rng = trial_rng(config.seed, index)
    paths = sample_paths(config.p_set[index % len(config.p_set)], rng=rng,
                         max_delay=config.max_delay)
    geom = config.geometry()
    if config.wideband:
        return wideband_channel(geom, paths, config.grid())
    return narrowband_channel(geom, paths)


def trial_gain(config, index):
    return build_quantizer(config)(synthesize(config, index))


def _trial_chunk(config, indices):
    return [trial_gain(config, i) for i in indices]


def trial_gains(config, workers=None):
    """Per-trial gains in trial order."""
    workers = config.workers if workers is None else workers
    idx = list(range(config.trials))
    if workers <= 1 or config.trials == 1:
        return np.array(_trial_chunk(config, idx))
    size = math.ceil(len(idx) / (4 * workers))
    chunks = [idx[i:i + size] for i in range(0, len(idx), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_trial_chunk, [config] * len(chunks), chunks))
    return np.array([g for part in parts for g in part])


def run_trials(config, workers=None, timing=True):
    """Average normalized gain of ``config`` over its trials."""
    start = time.perf_counter()
    gains = trial_gains(config, workers)
    n = len(gains)
    stderr = float(gains.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return GainReport(config.scenario, config.m_v, config.m_h, config.scheme,
                      config.feedback_bits(), n, float(gains.mean()), stderr,
                      round(time.perf_counter() - start, 3) if timing else 0.0)


def parse_arrays(text):
    """``"4x4,8x8"`` -> ``[(4, 4), (8, 8)]``."""
    out = []
    for tok in str(text).split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        try:
            mv, mh = (int(v) for v in tok.split("x"))
        except ValueError as exc:
            raise ConfigurationError(f"bad array size {tok!r}; use MVxMH", field="arrays") from exc
        out.append((mv, mh))
    if not out:
        raise ConfigurationError("no array sizes given", field="arrays")
    return out


def run_sweep(config, arrays, workers=None, timing=True):
    return [run_trials(config.replace(m_v=mv, m_h=mh), workers, timing) for mv, mh in arrays]


def compare(sweeps, configs=None):
    """Align several sweeps on their array sizes.

    Parameters
    ----------
    sweeps : list of list of GainReport
        One sweep per scheme, all over the same array sizes in the same order.
    configs : list of ExperimentConfig, optional
        Matching configs; adds a ``<scheme>_evaluations`` search-cost column.

    Returns
    -------
    list of dict
        One row per array size with ``<scheme>_gain``, ``<scheme>_bits`` and
        ``<scheme>_delta`` (gain minus the first sweep's gain) columns.
    """
    if not sweeps:
        raise InvalidInputError("nothing to compare", field="sweeps")
    sizes = [(r.m_v, r.m_h) for r in sweeps[0]]
    for sweep in sweeps[1:]:
        if [(r.m_v, r.m_h) for r in sweep] != sizes:
            raise ConfigurationError("sweeps cover different array sizes", field="arrays")
    rows = []
    for k, (mv, mh) in enumerate(sizes):
        row = {"m_v": mv, "m_h": mh}
        ref = sweeps[0][k].mean_gain
        for j, sweep in enumerate(sweeps):
            r = sweep[k]
            name = r.scenario
            row[f"{name}_gain"] = r.mean_gain
            row[f"{name}_stderr"] = r.stderr
            row[f"{name}_bits"] = r.b_total
            if configs is not None:
                row[f"{name}_evaluations"] = configs[j].evaluations()
            row[f"{name}_delta"] = r.mean_gain - ref
        rows.append(row)
    return rows


def export_reports(reports, path, fmt="csv"):
    """Write reports with the fixed column order of :class:`GainReport`."""
    rows = [asdict(r) for r in reports]
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=COLUMNS)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v
                                 for k, v in row.items()})
    elif fmt in ("jsonl", "json-lines"):
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
    else:
        raise InvalidInputError(f"unknown format {fmt!r}", field="format")


def import_reports(path):
    types = {f.name: f.type for f in fields(GainReport)}
    casts = {"int": int, "float": float, "str": str, int: int, float: float, str: str}
    out = []
    with open(path, encoding="utf-8") as fh:
        head = fh.read(1)
        fh.seek(0)
        if head == "{":
            rows = [json.loads(line) for line in fh if line.strip()]
        else:
            rows = list(csv.DictReader(fh))
    for row in rows:
        out.append(GainReport(**{k: casts[types[k]](row[k]) for k in COLUMNS}))
    return out


def write_table(rows, path):
    """CSV dump of a list of flat dicts (header from the first row)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
