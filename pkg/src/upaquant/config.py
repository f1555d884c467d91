"""Experiment configuration and its flat ``section.key = value`` file format.

Example::

    # array
    array.m_v = 8
    array.m_h = 8
    channel.p_set = 3,4,5
    quantizer.scheme = proposed
    quantizer.b1 = 5
    run.trials = 1000
    run.seed = 7

Sections only group keys for readability; every key maps to one field of
:class:`ExperimentConfig`.
"""

import dataclasses
from dataclasses import dataclass

from .analysis import complexity_budget
from .channel import UpaGeometry, WidebandGrid
from .errors import ConfigurationError, UpaQuantError

NARROWBAND_SCHEMES = ("proposed", "kp", "enhanced_kp")
WIDEBAND_SCHEMES = ("wideband", "narrowband_rb")
SCHEMES = NARROWBAND_SCHEMES + WIDEBAND_SCHEMES
SECTIONS = ("array", "channel", "quantizer", "run")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "default"
    m_v: int = 4
    m_h: int = 4
    d_v: float = 0.5
    d_h: float = 0.5
    p_set: tuple = (3, 4, 5)
    max_delay: float = 1e-6
    w_total: int = 600
    spacing: float = 15e3
    f_c: float = 2e9
    l_blocks: int = 4
    r_blocks: int = 2
    scheme: str = "proposed"
    b1: int = 5
    b2: int = 4
    b_c: int = 2
    b_total: int = 22
    b_w1: int = 5
    b_w2: int = 5
    b_n1: int = 3
    b_n2: int = 2
    phase_levels: int = None
    trials: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p_set", tuple(int(p) for p in self.p_set))
        self.validate()

    @property
    def wideband(self):
        return self.scheme in WIDEBAND_SCHEMES

    def geometry(self):
        return UpaGeometry(self.m_v, self.m_h, self.d_v, self.d_h)

    def grid(self):
        return WidebandGrid(self.w_total, self.spacing, self.f_c, self.l_blocks, self.r_blocks)

    def validate(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}", field="scheme")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1", field="trials")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1", field="workers")
        if not self.p_set or min(self.p_set) < 1:
            raise ConfigurationError("path counts must be >= 1", field="p_set")
        if self.max_delay < 0:
            raise ConfigurationError("max_delay must be >= 0", field="max_delay")
        for name in ("b1", "b2", "b_c", "b_total", "b_w1", "b_w2", "b_n1", "b_n2"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0", field=name)
        try:
            self.geometry()
            if self.wideband:
                self.grid()
        except UpaQuantError as exc:
            raise ConfigurationError(str(exc), field=exc.field) from exc
        if self.scheme == "kp" and self.b_total % 2:
            raise ConfigurationError("KP budget must be even", field="b_total")
        if self.scheme in ("proposed", "narrowband_rb") and (2 * self.b2 + self.b_c) % 2:
            raise ConfigurationError("2*b2 + b_c must be even", field="b_c")
        if self.scheme == "wideband" and 2 * self.b_n1 != 2 * self.b_n2 + self.b_c:
            raise ConfigurationError("wideband budgets need 2*b_n1 == 2*b_n2 + b_c", field="b_n1")

    def feedback_bits(self):
        """Feedback bits per codeword (narrowband) or per channel (wideband)."""
        if self.scheme == "proposed":
            return complexity_budget("proposed", self.b1, self.b2, self.b_c)[0]
        if self.scheme == "kp":
            return self.b_total
        if self.scheme == "enhanced_kp":
            return complexity_budget("enhanced_kp", self.b1, self.b2)[0]
        if self.scheme == "wideband":
            from .wideband import wideband_overhead
            return wideband_overhead(self.grid(), self.b_w1, self.b_w2, self.b_n1)
        per_rb = complexity_budget("proposed", self.b1, self.b2, self.b_c)[0]
        return per_rb * self.l_blocks * self.r_blocks

    def evaluations(self):
        if self.scheme == "proposed":
            return complexity_budget("proposed", self.b1, self.b2, self.b_c)[1]
        if self.scheme == "kp":
            return complexity_budget("kp", self.b_total // 2)[1]
        if self.scheme == "enhanced_kp":
            return complexity_budget("enhanced_kp", self.b1, self.b2)[1]
        return None

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _coerce(name, raw):
    ftype = {f.name: f for f in dataclasses.fields(ExperimentConfig)}[name]
    default = ftype.default
    raw = raw.strip()
    try:
        if name == "p_set":
            return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
        if name == "phase_levels":
            return None if raw.lower() in ("", "none", "auto") else int(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse {name} = {raw!r}", field=name) from exc
    return raw


def parse_config_text(text, base=None):
    """Build a config from flat ``section.key = value`` lines."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    changes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        section, _, name = key.rpartition(".")
        if section and section not in SECTIONS:
            raise ConfigurationError(f"line {lineno}: unknown section {section!r}", field=key)
        if name not in known:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}", field=key)
        changes[name] = _coerce(name, value)
    base = base or ExperimentConfig()
    return base.replace(**changes)


def load_config(path, base=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def dump_config(config):
    """Inverse of :func:`parse_config_text`."""
    sections = {
        "array": ("m_v", "m_h", "d_v", "d_h"),
        "channel": ("p_set", "max_delay", "w_total", "spacing", "f_c", "l_blocks", "r_blocks"),
        "quantizer": ("scheme", "b1", "b2", "b_c", "b_total", "b_w1", "b_w2", "b_n1", "b_n2",
                      "phase_levels"),
        "run": ("scenario", "trials", "seed", "workers"),
    }
    lines = []
    for section, names in sections.items():
        for name in names:
            value = getattr(config, name)
            if name == "p_set":
                value = ",".join(str(p) for p in value)
            elif value is None:
                value = "auto"
            lines.append(f"{section}.{name} = {value!r}" if isinstance(value, float)
                         else f"{section}.{name} = {value}")
    return "\n".join(lines) + "\n"
