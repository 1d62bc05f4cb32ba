"""Configuration management for QuaterGCN."""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import InvalidConfigError

TaskName = Literal["NC", "3CEP", "4CEP", "5CEP"]
LaplacianKind = Literal["quaternionic", "classical", "sign-magnetic"]
HeadKind = Literal["linear", "conv1d-pair"]

EDGE_TASKS = ("3CEP", "4CEP", "5CEP")
SIGNED_TASKS = ("4CEP", "5CEP")


class DsbmConfig(BaseModel):
    """Parameters of the directed stochastic block model generator."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    nodes_per_cluster: int = Field(default=30, ge=1)
    clusters: int = Field(default=5, ge=1)
    intra_prob: float = Field(default=0.1, ge=0.0, le=1.0)
    inter_prob: float = Field(default=0.6, ge=0.0, le=1.0)
    direction_prob: float = Field(default=0.2, ge=0.0, le=1.0)
    digon_fraction: float = Field(default=0.2, ge=0.0, le=1.0)
    weight_low: int = Field(default=2, ge=1)
    weight_high: int = Field(default=4, ge=1)
    signed: bool = False
    meta_graph: Literal["ordered", "cyclic"] = "cyclic"
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_weights(self) -> "DsbmConfig":
        if self.weight_high < self.weight_low:
            raise ValueError(f"weight_high ({self.weight_high}) must be >= weight_low ({self.weight_low})")
        if self.nodes_per_cluster * self.clusters > 50_000:
            raise ValueError("node count exceeds the dense-storage limit of 50000")
        return self

    @property
    def n(self) -> int:
        return self.nodes_per_cluster * self.clusters

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> "DsbmConfig":
        """Named generator families; ``overrides`` replace individual fields."""
        presets: Dict[str, Dict[str, Any]] = {
            "di150": dict(nodes_per_cluster=150, clusters=5, intra_prob=0.1, inter_prob=0.6,
                          direction_prob=0.2, digon_fraction=0.2, weight_low=2, weight_high=4),
            "di500": dict(nodes_per_cluster=100, clusters=5, intra_prob=0.1, inter_prob=0.1,
                          direction_prob=0.2, digon_fraction=0.2, weight_low=2, weight_high=4),
            "dsbm": dict(nodes_per_cluster=100, clusters=5, intra_prob=0.1, inter_prob=0.1,
                         direction_prob=0.2, digon_fraction=0.0, weight_low=2, weight_high=1000),
        }
        if name not in presets:
            raise InvalidConfigError(f"unknown generator preset '{name}' (choose from {', '.join(presets)})")
        return cls(**{**presets[name], **overrides})


class ModelConfig(BaseModel):
    """QuaterGCN architecture and optimizer settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    widths: List[int] = Field(default_factory=lambda: [32, 32])
    head: HeadKind = "linear"
    dropout: float = Field(default=0.5, ge=0.0, lt=1.0)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    max_epochs: int = Field(default=3000, ge=0)
    patience: int = Field(default=500, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("widths")
    @classmethod
    def _check_widths(cls, widths: List[int]) -> List[int]:
        if not widths or any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be a non-empty list of positive integers, got {widths}")
        return widths

    @classmethod
    def for_task(cls, task: str, **overrides: Any) -> "ModelConfig":
        """Per-task defaults from the published training settings."""
        if task in ("NC", "3CEP"):
            defaults: Dict[str, Any] = dict(learning_rate=1e-3, max_epochs=3000, patience=500)
        elif task in SIGNED_TASKS:
            defaults = dict(learning_rate=1e-2, max_epochs=300, patience=500)
        else:
            raise InvalidConfigError(f"unknown task '{task}'")
        return cls(**{**defaults, **overrides})


class VerifierTolerances(BaseModel):
    """Tolerances used by the spectral verifier."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    exact: float = Field(default=0.0, ge=0.0)
    algebraic: float = Field(default=1e-12, ge=0.0)
    spectral: float = Field(default=1e-9, ge=0.0)
    hermitian: float = Field(default=0.0, ge=0.0)


class ExperimentSpec(BaseModel):
    """One task run: data source, Laplacian, model and fold protocol."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    task: TaskName = "NC"
    laplacian: LaplacianKind = "quaternionic"
    generator: Optional[DsbmConfig] = None
    input_path: Optional[Path] = None
    labels_path: Optional[Path] = None
    model: Optional[ModelConfig] = None
    folds: int = Field(default=10, ge=1)
    seed_base: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_source(self) -> "ExperimentSpec":
        if (self.generator is None) == (self.input_path is None):
            raise ValueError("exactly one of 'generator' or 'input_path' must be given")
        if self.task == "NC" and self.input_path is not None and self.labels_path is None:
            raise ValueError("node classification on an input file needs 'labels_path'")
        if self.task in SIGNED_TASKS and self.generator is not None and not self.generator.signed:
            raise ValueError(f"{self.task} needs a signed generator")
        if self.model is not None and self.task == "NC" and self.model.head != "linear":
            raise ValueError("node classification only supports the linear head")
        return self

    @property
    def resolved_model(self) -> ModelConfig:
        return self.model if self.model is not None else ModelConfig.for_task(self.task)

    def with_laplacian(self, laplacian: str) -> "ExperimentSpec":
        return self.model_copy(update={"laplacian": laplacian})


class Config(BaseSettings):
    """Process-wide settings read from the environment or ``.env``."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="allow",
        populate_by_name=True,
    )

    # Logging
    log_level: str = Field(default="warning", alias="LOG_LEVEL")
    log_format: str = Field(default="console", alias="LOG_FORMAT")
    log_outputs: str = Field(default="console", alias="LOG_OUTPUTS")
    log_file: Optional[str] = Field(default=None, alias="LOG_FILE")

    # Execution
    workers: int = Field(default=1, ge=1, alias="QGCN_WORKERS")

    # Verifier tolerances
    tol_exact: float = Field(default=0.0, alias="QGCN_TOL_EXACT")
    tol_algebraic: float = Field(default=1e-12, alias="QGCN_TOL_ALGEBRAIC")
    tol_spectral: float = Field(default=1e-9, alias="QGCN_TOL_SPECTRAL")

    @property
    def log_outputs_list(self) -> List[str]:
        """Get log outputs as a list."""
        return [output.strip() for output in self.log_outputs.split(",")]

    @property
    def tolerances(self) -> VerifierTolerances:
        """Get the verifier tolerances."""
        return VerifierTolerances(
            exact=self.tol_exact,
            algebraic=self.tol_algebraic,
            spectral=self.tol_spectral,
        )


# Global configuration instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = Config()
    return _config


def set_config(config: Config) -> None:
    """Set the global configuration instance."""
    global _config
    _config = config
