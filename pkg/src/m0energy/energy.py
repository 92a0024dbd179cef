"""Published Cortex-M0 energy models and their evaluation.

A model is six coefficients, one per event counter, in nJ per event:

    E = b1*c1 + b2*c2 + b3*c3 + b4*c4 + b5*c5 + b6*c6

There is no intercept; the regression error term is not part of the
prediction.  The ten built-in models cover every permitted combination of
core frequency (20/24/48 MHz), PreFetch (on/off), and WaitState (0/1); at
48 MHz the Flash requires one wait state, so 48 MHz WS=0 does not exist.
Coefficients are stored exactly as published (six decimal places), with
the reported hardware-validation MAPE/RESD kept as provenance metadata.
"""

from dataclasses import dataclass

from .errors import InvalidConfigError

VALID_FREQUENCIES = (20, 24, 48)

# (freq MHz, prefetch, wait states) -> (b1..b6), reported MAPE %, reported RESD %
_BUILTIN_TABLE = [
    ((20, False, 0), (0.964258, 1.652455, 2.091986, 1.109833, 0.650563, 0.633621), 2.80, 3.60),
    ((20, False, 1), (1.282474, 2.110668, 2.191545, 1.185609, 0.416602, 1.178991), 2.97, 3.60),
    ((20, True, 0), (1.003378, 1.885309, 1.802974, 1.122833, 0.849223, 0.475831), 2.86, 3.53),
    ((20, True, 1), (0.895879, 2.185851, 2.001178, 1.493364, 1.076354, 1.573758), 3.68, 4.61),
    ((24, False, 0), (0.959172, 1.888565, 1.357556, 1.089427, 0.993145, 0.562952), 3.22, 3.63),
    ((24, False, 1), (1.178558, 2.540429, 2.042475, 1.190892, 0.979651, 0.891088), 3.16, 3.90),
    ((24, True, 0), (0.985415, 1.933276, 1.448160, 1.075671, 1.011891, 0.617510), 3.36, 3.88),
    ((24, True, 1), (0.883755, 2.156046, 1.633465, 1.436556, 1.152560, 1.455166), 4.15, 5.02),
    ((48, False, 1), (1.096677, 2.364495, 1.627854, 1.173680, 0.681475, 0.652665), 3.65, 4.08),
    ((48, True, 1), (0.816331, 2.014612, 1.372157, 1.402116, 0.835035, 1.250446), 4.33, 4.99),
]


@dataclass(frozen=True)
class HardwareConfig:
    frequency_mhz: int
    prefetch: bool
    wait_states: int

    def __post_init__(self):
        if self.frequency_mhz not in VALID_FREQUENCIES:
            raise InvalidConfigError(
                "frequency must be one of %s MHz, got %r"
                % (list(VALID_FREQUENCIES), self.frequency_mhz))
        if self.wait_states not in (0, 1):
            raise InvalidConfigError("wait states must be 0 or 1")
        if self.frequency_mhz == 48 and self.wait_states == 0:
            raise InvalidConfigError("48 MHz requires 1 wait state")

    def label(self):
        return "[%d, %s, %d]" % (self.frequency_mhz,
                                 "ON" if self.prefetch else "OFF",
                                 self.wait_states)


@dataclass(frozen=True)
class EnergyModel:
    config: HardwareConfig
    beta: tuple                 # six nJ/event coefficients, c1..c6 order
    provenance: str = "builtin"  # builtin | fitted
    reported_mape: float = None
    reported_resd: float = None

    def __post_init__(self):
        if len(self.beta) != 6:
            raise InvalidConfigError("model needs exactly 6 coefficients")


def builtin_models():
    """The ten published models, in table order."""
    return [EnergyModel(HardwareConfig(*cfg), beta, "builtin", mape, resd)
            for cfg, beta, mape, resd in _BUILTIN_TABLE]


def builtin_configs():
    return [HardwareConfig(*cfg) for cfg, _, _, _ in _BUILTIN_TABLE]


def builtin_model(config):
    for model in builtin_models():
        if model.config == config:
            return model
    raise InvalidConfigError("no built-in model for %s" % (config,))


def _counter_vector(counters):
    if hasattr(counters, "as_vector"):
        return counters.as_vector()
    vec = tuple(counters)
    if len(vec) != 6:
        raise ValueError("expected 6 counter values, got %d" % len(vec))
    return vec


def estimate(counters, model):
    """Energy in nJ for a counter vector under a model (plain dot product)."""
    vec = _counter_vector(counters)
    total = 0.0
    for beta, count in zip(model.beta, vec):
        total += beta * count
    return total


def relative_weights(model):
    """Each coefficient's share of the summed coefficients (sums to 1)."""
    total = sum(model.beta)
    if total <= 0:
        raise ValueError("coefficient sum must be positive")
    return tuple(b / total for b in model.beta)


def compare_configs(results, models=None):
    """Rank configurations by predicted energy.

    `results` maps HardwareConfig -> (counters, cycles) from one simulation
    per configuration.  Returns rows (config, energy_nj, time_us) sorted by
    energy, ties broken by time and then by built-in table order.
    """
    by_config = {m.config: m for m in (models or builtin_models())}
    order = {HardwareConfig(*cfg): i for i, (cfg, _, _, _) in enumerate(_BUILTIN_TABLE)}
    rows = []
    for config, (counters, cycles) in results.items():
        model = by_config.get(config)
        if model is None:
            raise InvalidConfigError("no model for %s" % config.label())
        energy = estimate(counters, model)
        time_us = cycles / config.frequency_mhz
        rows.append((config, energy, time_us))
    rows.sort(key=lambda r: (r[1], r[2], order.get(r[0], len(order))))
    return rows


# -- model files -----------------------------------------------------------
# One record per config: freq_mhz,prefetch,wait_states,b1..b6 (6 decimals).

MODEL_FILE_HEADER = "freq_mhz,prefetch,wait_states,b1,b2,b3,b4,b5,b6"


def save_models(path, models):
    lines = [MODEL_FILE_HEADER]
    for m in models:
        cfg = m.config
        lines.append("%d,%s,%d,%s" % (
            cfg.frequency_mhz, "on" if cfg.prefetch else "off",
            cfg.wait_states, ",".join("%.6f" % b for b in m.beta)))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_models(path):
    models = []
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != MODEL_FILE_HEADER:
        raise InvalidConfigError("model file missing header %r" % MODEL_FILE_HEADER)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 9:
            raise InvalidConfigError("model file line %d: expected 9 fields" % lineno)
        freq = int(parts[0])
        prefetch = parts[1].lower() == "on"
        ws = int(parts[2])
        beta = tuple(float(p) for p in parts[3:])
        models.append(EnergyModel(HardwareConfig(freq, prefetch, ws), beta,
                                  provenance="fitted"))
    return models
