# polyvocab/config.py
"""
Machine models and run configuration.

Machine files are ``key = value`` lines with ``#`` comments::

    # 10-core Skylake-X
    name = skx
    cores = 10
    opv = 8
    n_vec_reg = 32

Presets ship in ``polyvocab/machines/``. The default machine comes from the
``POLYVOCAB_MACHINE`` environment variable, else ``skx``.
"""

import json
import logging
import os
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

MACHINE_ENV = "POLYVOCAB_MACHINE"
DEFAULT_MACHINE = "skx"
MACHINE_DIR = Path(__file__).parent / "machines"
MACHINE_SUFFIX = ".machine"


class MachineModel(BaseModel):
    """Target description; only core count, vector width and register file matter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    cores: int = Field(..., ge=1)
    opv: int = Field(..., ge=1)
    n_vec_reg: int = Field(32, ge=1)

    @property
    def multi_skew(self) -> bool:
        return self.cores < 2 * self.opv


def parse_machine(text: str, source: str = "<machine>") -> MachineModel:
    """Parse a machine file body."""
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{number}: expected 'key = value'", line=number)
        key, value = key.strip(), value.strip()
        if key in values:
            raise ConfigError(f"{source}:{number}: duplicate key {key!r}", line=number)
        values[key] = value
    try:
        return MachineModel(**values)
    except ValidationError as exc:
        raise ConfigError(f"{source}: {exc.errors()[0]['msg']}", errors=_errors(exc))
    except TypeError as exc:
        raise ConfigError(f"{source}: {exc}")


def _errors(exc: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors()]


def machine_presets() -> List[str]:
    return sorted(p.stem for p in MACHINE_DIR.glob(f"*{MACHINE_SUFFIX}"))


def load_machine(spec: Optional[Union[str, Path]] = None) -> MachineModel:
    """
    Machine from a preset name or a file path.

    ``None`` falls back to ``$POLYVOCAB_MACHINE``, then to ``skx``.
    """
    if spec is None:
        spec = os.environ.get(MACHINE_ENV) or DEFAULT_MACHINE
    path = Path(spec)
    if not path.is_file():
        preset = MACHINE_DIR / f"{spec}{MACHINE_SUFFIX}"
        if not preset.is_file():
            raise ConfigError(
                f"no machine file or preset {str(spec)!r} (presets: {', '.join(machine_presets())})",
                machine=str(spec),
            )
        path = preset
    logger.debug("loading machine %s", path)
    return parse_machine(path.read_text(encoding="utf-8"), str(path))


def parse_window(text: str) -> Tuple[int, int]:
    """``"-1:3"`` to ``(-1, 3)``."""
    lo, sep, hi = str(text).partition(":")
    try:
        if not sep:
            raise ValueError
        window = int(lo), int(hi)
    except ValueError:
        raise ConfigError(f"coefficient window must look like lo:hi, got {text!r}")
    if window[0] > window[1]:
        raise ConfigError(f"empty coefficient window {text!r}")
    return window


class RunConfig(BaseModel):
    """Everything a scheduling run depends on besides the SCoP itself."""

    model_config = ConfigDict(extra="forbid")

    machine: Optional[str] = None
    recipe: str = "auto"
    coeff_window: Tuple[int, int] = (-1, 3)
    k: int = Field(10, ge=1)
    verify_params: List[int] = Field(default_factory=lambda: [3, 6])
    time_budget: Optional[float] = Field(60.0, gt=0)
    output_format: str = "text"
    corpus_dir: Optional[str] = None
    param_min: Optional[int] = Field(None, ge=1)
    param_span: int = Field(8, ge=0)
    enum_cap: int = Field(10**6, ge=1)
    unroll_params: int = Field(8, ge=1)

    @field_validator("coeff_window", mode="before")
    @classmethod
    def _window(cls, value):
        if isinstance(value, str):
            try:
                return parse_window(value)
            except ConfigError as exc:
                raise ValueError(str(exc))
        return value

    @field_validator("coeff_window")
    @classmethod
    def _ordered(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if value[0] > value[1]:
            raise ValueError(f"empty coefficient window {value[0]}:{value[1]}")
        return value

    @field_validator("output_format")
    @classmethod
    def _format(cls, value: str) -> str:
        if value not in ("text", "json"):
            raise ValueError(f"output format must be text or json, got {value!r}")
        return value

    @field_validator("verify_params")
    @classmethod
    def _params(cls, value: List[int]) -> List[int]:
        if not value or any(v < 1 for v in value):
            raise ValueError("verification parameters must be positive")
        return value

    def resolve_machine(self) -> MachineModel:
        return load_machine(self.machine)

    def to_json(self) -> str:
        return json.dumps(json.loads(self.model_dump_json()), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            return cls.model_validate_json(text)
        except ValidationError as exc:
            raise ConfigError(f"invalid run configuration: {exc.errors()[0]['msg']}", errors=_errors(exc))


def load_config(path: Optional[Union[str, Path]] = None, **overrides) -> RunConfig:
    """Read a JSON run configuration, then apply non-``None`` overrides."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {str(p)!r} not found")
        data = json.loads(RunConfig.from_json(p.read_text(encoding="utf-8")).model_dump_json())
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc.errors()[0]['msg']}", errors=_errors(exc))
