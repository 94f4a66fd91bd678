"""Configuration of chain constants and simulator defaults."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from jofet_amp.core.errors import ParseError, SchemaError

logger = logging.getLogger(__name__)


class ChainConfig(BaseModel):
    """Measurement-chain constants."""

    model_config = ConfigDict(extra="forbid")

    eta_s: Optional[float] = Field(default=None, gt=0.0, le=1.0, description="System transmission")
    eta_c_off: Optional[float] = Field(default=None, gt=0.0, le=1.0, description="Off-state cavity transmission")
    t_hemt_mc_k: Optional[float] = Field(default=None, ge=0.0, description="Chain noise at the plate in K")
    attenuation_db: Optional[float] = Field(default=None, description="Drive-line attenuation in dB")
    frequency_hz: Optional[float] = Field(default=None, gt=0.0, description="Operating frequency in Hz")
    rbw_hz: Optional[float] = Field(default=None, gt=0.0, description="Resolution bandwidth in Hz")
    calibration_drift_db: float = Field(default=0.2, ge=0.0, description="Calibration drift bound on eta_s in dB")


class SimulationConfig(BaseModel):
    """Simulator defaults."""

    model_config = ConfigDict(extra="forbid")

    seed: Optional[int] = None
    n_average: int = Field(default=100, ge=0, description="Averages per spectrum bin; 0 gives noiseless bins")
    points: int = Field(default=2001, ge=3)


class ToolConfig(BaseModel):
    """Top-level configuration file."""

    model_config = ConfigDict(extra="forbid")

    chain: ChainConfig = Field(default_factory=ChainConfig)
    simulation: SimulationConfig = Field(default_factory=SimulationConfig)

    def merged(self, **overrides: Any) -> "ToolConfig":
        """
        Copy with command-line values applied over the file values.

        Keys are `section.key` or bare chain keys; None values are ignored.
        """
        chain = self.chain.model_dump()
        simulation = self.simulation.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            section, _, name = key.rpartition(".")
            target = simulation if section == "simulation" else chain
            if name not in target:
                raise SchemaError(f"unknown configuration key '{key}'", name=key)
            target[name] = value
        try:
            return ToolConfig(chain=ChainConfig(**chain), simulation=SimulationConfig(**simulation))
        except ValidationError as e:
            first = e.errors()[0]
            name = ".".join(str(part) for part in first["loc"])
            raise SchemaError(f"option '{name}': {first['msg']}", name=name)


def load_config(path: Optional[Union[str, Path]] = None) -> ToolConfig:
    """
    Read a YAML configuration file.

    Args:
        path: File path; None gives the defaults

    Returns:
        Validated ToolConfig

    Raises:
        ParseError: If the file is not valid YAML
        SchemaError: If a key is unknown or a value is malformed
    """
    if path is None:
        return ToolConfig()
    try:
        data: Dict[str, Any] = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        line = getattr(getattr(e, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML in {path}", line=None if line is None else line + 1)
    if not isinstance(data, dict):
        raise SchemaError(f"configuration in {path} must be a mapping")
    try:
        config = ToolConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        name = ".".join(str(part) for part in first["loc"])
        raise SchemaError(f"configuration key '{name}': {first['msg']}", name=name)
    logger.debug(f"Loaded configuration from {path}")
    return config
