"""
Harness Configuration
Merges field defaults, MPC_* environment variables, a key = value config file
and explicit command-line flags into one validated settings record
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Union

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator

from matching.match_mpc import MatchMpcParams
from mis.arboricity_mis import ArbMisParams
from mpc.errors import InputError

logger = logging.getLogger(__name__)

ENV_PREFIX = 'MPC_'

# settings that may come from the environment
ENV_FIELDS = (
    'delta', 'seed', 'lambda', 'k', 'gamma', 'alpha',
    'trials', 'eps', 'primitive_round_cost',
)


class HarnessSettings(BaseModel):
    """Everything a harness command can be told, after precedence is applied"""
    model_config = ConfigDict(populate_by_name=True, frozen=True, extra='forbid')

    # model parameters
    delta: float = Field(default=0.5, gt=0, lt=1)
    seed: int = Field(default=0, ge=0)
    primitive_round_cost: int = Field(default=1, ge=1)
    simulation: Literal['compressed', 'direct'] = 'compressed'

    # MatchMPC
    k: Union[int, Literal['auto']] = 'auto'
    lam: float = Field(default=32, ge=2, alias='lambda')
    trials: Optional[int] = Field(default=None, ge=1)
    fail_prob: Optional[float] = Field(default=None, gt=0, lt=1)
    eps: Optional[float] = Field(default=None, gt=0, lt=1)

    # ArboricityMIS
    alpha: int = Field(default=2, ge=1)
    gamma: Union[int, Literal['auto']] = 'auto'

    # compress-demo
    rounds: int = Field(default=4, ge=0)
    local_algorithm: Literal['max-id', 'digest'] = 'max-id'

    # graph source: a file, or generator flags
    input: Optional[str] = None
    kind: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=0)
    p: Optional[float] = Field(default=None, ge=0, le=1)
    rows: Optional[int] = Field(default=None, ge=1)
    cols: Optional[int] = Field(default=None, ge=1)

    # experiments
    spec: Optional[str] = None
    record_timing: bool = False
    workers: int = Field(default=1, ge=1)

    # output
    out: Optional[str] = None
    format: Optional[Literal['csv', 'json']] = None
    log_level: str = 'INFO'

    @field_validator('k', 'gamma')
    @classmethod
    def check_at_least_two(cls, value, info):
        if value != 'auto' and value < 2:
            raise ValueError(f"{info.field_name} must be at least 2, got {value}")
        return value

    @field_validator('log_level')
    @classmethod
    def check_log_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level {value!r}")
        return level

    def match_params(self) -> MatchMpcParams:
        return MatchMpcParams(k=self.k, lam=self.lam, seed=self.seed, delta=self.delta,
                              primitive_round_cost=self.primitive_round_cost,
                              simulation=self.simulation)

    def mis_params(self) -> ArbMisParams:
        return ArbMisParams(alpha=self.alpha, gamma=self.gamma, seed=self.seed, delta=self.delta,
                            primitive_round_cost=self.primitive_round_cost,
                            simulation=self.simulation)


def normalize_key(key: str) -> str:
    """Flag or file key to field name: dashes become underscores, lambda becomes lam"""
    key = key.strip().lstrip('-').lower().replace('-', '_')
    return 'lam' if key == 'lambda' else key


def settings_from_env(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    if environ is None:
        load_dotenv()
        environ = os.environ
    values = {}
    for name in ENV_FIELDS:
        raw = environ.get(ENV_PREFIX + name.upper())
        if raw is not None and raw != '':
            values[normalize_key(name)] = raw
    return values


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Parse `key = value` lines; `#` starts a comment"""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise InputError(f"Config key {key!r} in {path} has no value")
        values[normalize_key(key)] = value
    logger.debug(f"Read {len(values)} settings from {path}")
    return values


def resolve_settings(cli: Optional[Mapping[str, Any]] = None,
                     config_file: Optional[Union[str, Path]] = None,
                     environ: Optional[Mapping[str, str]] = None) -> HarnessSettings:
    """defaults < environment < config file < explicit CLI flags (None means not given)"""
    values: Dict[str, Any] = {}
    values.update(settings_from_env(environ))
    if config_file is not None:
        values.update(read_config_file(config_file))
    for key, value in (cli or {}).items():
        if value is not None:
            values[normalize_key(key)] = value
    return HarnessSettings.model_validate(values)
