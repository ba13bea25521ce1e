"""Experiment configuration: schema, text-file loader and hashing.

Config files are plain ``key.path = value`` lines with ``#`` comments;
nesting is expressed with dotted keys.  The loader keeps a key -> line map
so validation failures point at the exact line.  The same schema backs the
service request bodies, the CLI and the file loader.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .protocol import ImperfectionModel, ProtocolConfig, db_to_nepers

MODES = ("reproduce-paper", "sweep", "tomography", "trajectory", "compile")

SWEEPABLE = (
    "transmittance", "ancilla_squeezing_db", "gain",
    "homodyne_efficiency", "detector_efficiency", "propagation_efficiency",
    "electronic_noise_db", "phase_jitter_rad", "displacement_coupler_T",
    "gain_error",
)


class ConfigError(Exception):
    """Config file or override could not be parsed or validated."""


class ProtocolSection(BaseModel):
    transmittance: float = 0.25
    ancilla_squeezing_db: float = 5.1
    gain: Optional[float] = None
    squeeze_angle: float = 0.0

    @field_validator("transmittance")
    @classmethod
    def _t_range(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError("must be in (0, 1]")
        return v

    @field_validator("ancilla_squeezing_db")
    @classmethod
    def _ra_range(cls, v):
        if v < 0.0:
            raise ValueError("must be >= 0")
        return v

    def to_model(self) -> ProtocolConfig:
        return ProtocolConfig(self.transmittance,
                              db_to_nepers(self.ancilla_squeezing_db),
                              self.gain, self.squeeze_angle)


class ImperfectionSection(BaseModel):
    """Apparatus budget; a preset picks the base, explicit fields override."""

    preset: Optional[Literal["ideal", "default", "strong"]] = None
    homodyne_efficiency: Optional[float] = None
    detector_efficiency: Optional[float] = None
    propagation_efficiency: Optional[float] = None
    electronic_noise_db: Optional[float] = None
    phase_jitter_rad: Optional[float] = None
    displacement_coupler_T: Optional[float] = None
    gain_error: Optional[float] = None

    def to_model(self) -> ImperfectionModel:
        base = {
            None: ImperfectionModel.default,
            "default": ImperfectionModel.default,
            "ideal": ImperfectionModel.ideal,
            "strong": ImperfectionModel.strong_feedforward,
        }[self.preset]()
        overrides = {name: value for name, value in self.model_dump().items()
                     if name != "preset" and value is not None}
        if not overrides:
            return base
        fields = {name: getattr(base, name) for name in
                  ("homodyne_efficiency", "detector_efficiency",
                   "propagation_efficiency", "electronic_noise_db",
                   "phase_jitter_rad", "displacement_coupler_T", "gain_error")}
        fields.update(overrides)
        try:
            return ImperfectionModel(**fields)
        except ValueError as exc:
            raise ValueError(str(exc)) from exc


class InputSection(BaseModel):
    mean_x: float = 2.0
    mean_p: float = 1.0


class SamplingSection(BaseModel):
    n_shots: int = Field(default=100_000, ge=1)
    n_phases: int = Field(default=25, ge=8)
    samples_per_phase: int = Field(default=4000, ge=1)
    seed: int = 12345


class SweepSection(BaseModel):
    parameter: str = "transmittance"
    start: float = 0.1
    stop: float = 0.9
    steps: int = Field(default=17, ge=2)

    @field_validator("parameter")
    @classmethod
    def _known_parameter(cls, v):
        if v not in SWEEPABLE:
            raise ValueError(f"must be one of {', '.join(SWEEPABLE)}")
        return v


class TomographySection(BaseModel):
    n_x: int = Field(default=81, ge=2)
    n_p: int = Field(default=81, ge=2)
    window_sigmas: float = Field(default=6.0, gt=0.0)
    filter_cutoff: Optional[float] = Field(default=None, gt=0.0)


class CompileSection(BaseModel):
    matrix: list[float] = Field(default=[1.0, 0.0, 0.0, 1.0],
                                min_length=4, max_length=4)
    displacement: list[float] = Field(default=[0.0, 0.0],
                                      min_length=2, max_length=2)


class OutputSection(BaseModel):
    directory: str = "out"


class ExperimentConfig(BaseModel):
    """Complete description of one run; also the service request body."""

    mode: Optional[Literal["reproduce-paper", "sweep", "tomography",
                           "trajectory", "compile"]] = None
    protocol: ProtocolSection = Field(default_factory=ProtocolSection)
    imperfections: ImperfectionSection = Field(default_factory=ImperfectionSection)
    input: InputSection = Field(default_factory=InputSection)
    sampling: SamplingSection = Field(default_factory=SamplingSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    tomography: TomographySection = Field(default_factory=TomographySection)
    compile: CompileSection = Field(default_factory=CompileSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def _resolve_models(self):
        # surface nested invariant failures at validation time
        self.protocol.to_model()
        self.imperfections.to_model()
        return self

    def resolved_dict(self) -> dict:
        """Plain dict of the fully resolved configuration."""
        return self.model_dump()


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON form of the resolved configuration.

    The output section is excluded: the hash identifies the experiment, so
    the same run written to two directories yields identical artifacts.
    """
    resolved = config.resolved_dict()
    resolved.pop("output", None)
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def _parse_scalar(text: str):
    text = text.strip()
    lowered = text.lower()
    if lowered in ("none", "null"):
        return None
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_value(text: str):
    if "," in text:
        return [_parse_scalar(part) for part in text.split(",")]
    return _parse_scalar(text)


def _assign(tree: dict, dotted: str, value, where: str):
    parts = dotted.split(".")
    node = tree
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"{where}: key {dotted!r} conflicts with a scalar value")
    node[parts[-1]] = value


def parse_config_text(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parse ``key.path = value`` lines into a nested dict plus a line map."""
    tree: dict = {}
    lines: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key before '='")
        where = f"{source}:{lineno}"
        _assign(tree, key, _parse_value(value), where)
        lines[key] = where
    return tree, lines


def apply_overrides(tree: dict, pairs: list[str], lines: dict[str, str]):
    """Apply ``--set key=value`` overrides onto a parsed config tree."""
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set {pair!r}: expected key=value")
        key, _, value = pair.partition("=")
        key = key.strip()
        _assign(tree, key, _parse_value(value), f"--set {key}")
        lines[key] = f"--set {key}"


def validate_config(tree: dict, lines: dict[str, str]) -> ExperimentConfig:
    """Validate a config tree, pointing errors at their source lines."""
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as exc:
        messages = []
        for err in exc.errors():
            dotted = ".".join(str(part) for part in err["loc"])
            where = lines.get(dotted)
            prefix = f"{where} ({dotted})" if where else dotted
            messages.append(f"{prefix}: {err['msg']}")
        raise ConfigError("; ".join(messages)) from exc


def load_config_file(path: str, overrides: Optional[list[str]] = None,
                     seed: Optional[int] = None,
                     out_dir: Optional[str] = None) -> ExperimentConfig:
    """Load, override and validate a config file."""
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    tree, lines = parse_config_text(text, source=path)
    _finish_tree(tree, lines, overrides, seed, out_dir)
    return validate_config(tree, lines)


def default_config(overrides: Optional[list[str]] = None,
                   seed: Optional[int] = None,
                   out_dir: Optional[str] = None) -> ExperimentConfig:
    """Configuration built from defaults plus command-line settings."""
    tree: dict = {}
    lines: dict[str, str] = {}
    _finish_tree(tree, lines, overrides, seed, out_dir)
    return validate_config(tree, lines)


def _finish_tree(tree, lines, overrides, seed, out_dir):
    if overrides:
        apply_overrides(tree, overrides, lines)
    if seed is not None:
        _assign(tree, "sampling.seed", seed, "--seed")
        lines["sampling.seed"] = "--seed"
    if out_dir is not None:
        _assign(tree, "output.directory", out_dir, "--out")
        lines["output.directory"] = "--out"
