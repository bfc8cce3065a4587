"""Validated run configuration with a stable content hash.

One document holds every knob; the CLI loads it from TOML or JSON and
applies flag overrides on top. All stage RNGs fan out from the single
top-level seed via stable hashing of stage names.
"""

import hashlib
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .driver import OptimizerDriver, mock_driver
from .errors import ConfigError
from .passes import ACTION_SPACE_124

OPTIMIZER_ENV_VAR = "SPECTRUM_FORGE_OPT"


@dataclass
class RunConfig:
    seed: int = 0
    P: int = 100                    # probe count
    L: int = 50                     # passes per probe
    M: int = 8                      # PQ subspaces
    k_star: int = 256               # centroids per subspace
    method: str = "greedy"          # probe search: greedy | genetic
    budget: int = 1000              # search fitness evaluations
    kmeans_max_iters: int = 100
    timeout: float = 60.0           # optimizer seconds per invocation
    jobs: int = 1
    failure_policy: str = "zero-fill"
    pass_pool: list[str] = field(default_factory=lambda: list(ACTION_SPACE_124))
    pass_list: list[str] = field(default_factory=lambda: list(ACTION_SPACE_124))
    oz_passes: list[str] = field(default_factory=lambda: ["oz"])
    optimizer: list[str] = field(default_factory=list)  # argv prefix
    use_mock_optimizer: bool = False
    scratch_dir: str | None = None
    knn_k: int = 5
    key_feature_index: int = 51

    def validate(self) -> None:
        checks = [
            (self.P >= 1, "P must be >= 1"),
            (self.L >= 1, "L must be >= 1"),
            (self.M >= 1, "M must be >= 1"),
            (56 % self.M == 0, "M must divide the 56-dim feature space"),
            (self.k_star >= 1, "k_star must be >= 1"),
            (self.method in ("greedy", "genetic"), "method must be greedy|genetic"),
            (self.budget >= 1, "budget must be >= 1"),
            (self.timeout > 0, "timeout must be positive"),
            (self.jobs >= 1, "jobs must be >= 1"),
            (self.failure_policy in ("zero-fill", "strict"),
             "failure_policy must be zero-fill|strict"),
            (len(self.pass_pool) >= 1, "pass_pool must be nonempty"),
            (len(self.pass_list) >= 1, "pass_list must be nonempty"),
            (self.knn_k >= 1, "knn_k must be >= 1"),
            (0 <= self.key_feature_index < 56, "key_feature_index out of range"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    def config_hash(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def make_driver(self) -> OptimizerDriver:
        if self.use_mock_optimizer:
            return mock_driver(timeout=self.timeout, scratch_dir=self.scratch_dir)
        argv = tuple(self.optimizer)
        if not argv:
            env = os.environ.get(OPTIMIZER_ENV_VAR)
            if env:
                argv = (env,)
        if not argv:
            raise ConfigError(
                f"no optimizer configured: set 'optimizer' in the config, "
                f"the {OPTIMIZER_ENV_VAR} env var, or pass --mock-optimizer"
            )
        return OptimizerDriver(argv=argv, timeout=self.timeout,
                               scratch_dir=self.scratch_dir)


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Load TOML or JSON config; unknown keys are rejected. Overrides
    (from CLI flags) take precedence over file values."""
    doc: dict = {}
    if path is not None:
        p = Path(path)
        if p.suffix == ".toml":
            doc = tomllib.loads(p.read_text(encoding="utf-8"))
        else:
            doc = json.loads(p.read_text(encoding="utf-8"))
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**doc)
    cfg.validate()
    return cfg


def mock_available() -> bool:
    return bool(sys.executable)
