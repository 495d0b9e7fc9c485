"""Study configuration read from flat ``key = value`` files with ``[section]`` headers.

Recognised sections and keys::

    [design]     phi, alpha, omega, innovation, n, burn_in
    [study]      replications, B, level, seed, threads
    [optimizer]  xtol, ftol, max_evals, n_starts
    [power]      phis, ns, alpha_ratio, which
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from darglade.errors import ConfigError
from darglade.estimation import OptimizerSettings
from darglade.model import DarParams, InnovationSpec, get_innovation

DESK_REPLICATIONS = 300
DESK_B = 200


@dataclass(frozen=True)
class StudyConfig:
    params: DarParams
    spec: InnovationSpec
    n: int = 400
    replications: int = DESK_REPLICATIONS
    B: int = DESK_B
    level: float = 0.05
    seed: int = 20240601
    threads: int = 1
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    # None picks 500 for stationary designs and 0 for explosive ones
    burn_in: int | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")
        if self.n < 10:
            raise ConfigError("n must be at least 10")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")

    def with_(self, **changes) -> "StudyConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PowerGrid:
    phis: tuple[float, ...] = (0.6, 0.7, 0.8, 0.922, 1.0, 1.1, 1.3)
    ns: tuple[int, ...] = (200, 400, 800)
    alpha_ratio: float = 2.0
    which: str = "ST"


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def load_config(path: str | Path | None = None, text: str | None = None):
    """Parse a config file into ``(StudyConfig, PowerGrid)``.

    Missing keys fall back to the desk-scale defaults: the stationary Normal
    design ``(0.7, 0.4, 0.5)``, n = 400, 300 replications and B = 200.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        elif text is not None:
            parser.read_string(text)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config: {err}") from err

    def get(section, key, conv, default):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            try:
                return conv(raw)
            except ValueError as err:
                raise ConfigError(f"[{section}] {key} = {raw!r}: {err}") from err
        return default

    try:
        params = DarParams(
            get("design", "phi", float, 0.7),
            get("design", "alpha", float, 0.4),
            get("design", "omega", float, 0.5),
        )
        spec = get_innovation(get("design", "innovation", str, "normal"))
    except ValueError as err:
        raise ConfigError(str(err)) from err
    burn = get("design", "burn_in", int, None)
    opt = OptimizerSettings(
        xtol=get("optimizer", "xtol", float, 1e-8),
        ftol=get("optimizer", "ftol", float, 1e-10),
        max_evals=get("optimizer", "max_evals", int, 20_000),
        n_starts=get("optimizer", "n_starts", int, 5),
    )
    cfg = StudyConfig(
        params=params,
        spec=spec,
        n=get("design", "n", int, 400),
        replications=get("study", "replications", int, DESK_REPLICATIONS),
        B=get("study", "B", int, DESK_B),
        level=get("study", "level", float, 0.05),
        seed=get("study", "seed", int, 20240601),
        threads=get("study", "threads", int, 1),
        optimizer=opt,
        burn_in=burn,
    )
    which = get("power", "which", str, "ST").upper()
    if which not in ("ST", "NS"):
        raise ConfigError("[power] which must be ST or NS")
    grid = PowerGrid(
        phis=get("power", "phis", _floats, PowerGrid.phis),
        ns=tuple(int(x) for x in get("power", "ns", _floats, PowerGrid.ns)),
        alpha_ratio=get("power", "alpha_ratio", float, 2.0),
        which=which,
    )
    return cfg, grid
