"""Python access to the rlvc pipeline.

Every pipeline function takes configuration keys as keyword arguments
(the same names as the CLI flags, with underscores)."""

from . import _rlvc
from ._rlvc import (
    ConfigError,
    EmaBaseline,
    IoError,
    NumericError,
    Schedule,
    UsageError,
    harmonic_mean,
    load_dataset,
    log_softmax_reward,
    pd_loss,
)

__all__ = [
    "ConfigError",
    "EmaBaseline",
    "IoError",
    "NumericError",
    "Schedule",
    "UsageError",
    "config",
    "evaluate",
    "gen_synthetic",
    "harmonic_mean",
    "load_dataset",
    "log_softmax_reward",
    "pd_loss",
    "pretrain_reward",
    "synthesize",
    "train",
]


def _overrides(kwargs):
    out = {}
    for key, value in kwargs.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        out[key] = str(value)
    return out


def config(config_file="", **kwargs):
    """Resolved configuration as a dict of strings."""
    text = _rlvc.resolve_config(_overrides(kwargs), str(config_file))
    return dict(line.split(" = ", 1) for line in text.splitlines())


def gen_synthetic(config_file="", **kwargs):
    return _rlvc.gen_synthetic(_overrides(kwargs), str(config_file))


def pretrain_reward(config_file="", **kwargs):
    return _rlvc.pretrain_reward(_overrides(kwargs), str(config_file))


def train(config_file="", **kwargs):
    return _rlvc.train(_overrides(kwargs), str(config_file))


def synthesize(config_file="", **kwargs):
    return _rlvc.synthesize(_overrides(kwargs), str(config_file))


def evaluate(config_file="", **kwargs):
    return _rlvc.evaluate(_overrides(kwargs), str(config_file))
