"""Run configuration shared by the CLI and the HTTP service.

Every engine default lives here once and is echoed verbatim into each
result file, so a result is always reproducible from its own config block.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .dataset import Dataset, load_csv
from .errors import ModelscopeError


class ConfigError(ModelscopeError):
    """Invalid run configuration (CLI exit code 2, HTTP 422)."""


@dataclass
class RunConfig:
    command: str
    data: str | None = None
    response: str | None = None
    family: str = "gaussian"
    factors: list = field(default_factory=list)
    B: int = 150
    nbest: object = 5
    redundant: bool = True
    n_c: int = 50
    c_max: float | None = None
    initial_stepwise: bool = True
    best_only: bool = True
    min_prob: float = 0.3
    highlight: str | None = None
    lambda_max: float | None = None
    seed: int | None = None
    cores: int | None = None
    out: str | None = None

    def validate(self):
        if self.command not in ("fit", "step", "vis", "af", "serve", "export"):
            raise ConfigError(f"unknown command {self.command!r}")
        if self.command in ("fit", "step", "vis", "af"):
            if not self.data or not self.response:
                raise ConfigError("--data and --response are required")
        if self.command in ("vis", "af"):
            if self.seed is None:
                raise ConfigError("--seed is required: bootstrap runs must be reproducible")
            if self.B < 1:
                raise ConfigError("--B must be at least 1")
        if self.command == "af":
            if self.n_c < 2:
                raise ConfigError("--n-c must be at least 2")
            if self.c_max is not None and self.c_max <= 0:
                raise ConfigError("--c-max must be positive")
        if self.nbest != "all":
            try:
                self.nbest = int(self.nbest)
            except (TypeError, ValueError):
                raise ConfigError("--nbest must be an integer or 'all'") from None
            if self.nbest < 1:
                raise ConfigError("--nbest must be at least 1")
        if not (0.0 <= float(self.min_prob)):
            raise ConfigError("--min-prob must be non-negative")
        return self

    def load_dataset(self) -> Dataset:
        path = Path(self.data)
        if not path.exists():
            raise ConfigError(f"data file not found: {path}")
        return load_csv(path, response=self.response, family=self.family,
                        factor_columns=self.factors)

    def echo(self, d: Dataset | None = None) -> dict:
        """Config block embedded in result files, with resolved defaults.

        Runtime-only knobs (worker count, output directory) are omitted:
        they do not affect any computed number, and result files must be
        byte-identical across worker counts.
        """
        block = asdict(self)
        block.pop("cores", None)
        block.pop("out", None)
        if d is not None and block.get("lambda_max") is None:
            block["lambda_max"] = 2.0 * math.log(d.n)
        return block
