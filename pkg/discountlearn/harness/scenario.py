from pathlib import Path
from typing import Any

import numpy as np
import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from discountlearn.aggregation.engine import AlgorithmSettings
from discountlearn.exceptions import ConfigurationError
from discountlearn.games import GameSpec
from discountlearn.utils.enums import DiscountKind, ExpertKind, RealityKind

log = structlog.get_logger(__name__)


class DiscountSpec(BaseModel):
    """
    How the accountant picks α_t:
      constant  α every step
      list      alphas[t] at step t
      restart   1 everywhere except restart_steps, where restart_alpha
      random    uniform on [low, high], drawn from the scenario seed
    """

    model_config = ConfigDict(extra="forbid")

    kind: DiscountKind = DiscountKind.CONSTANT
    alpha: float = Field(default=1.0, gt=0, le=1)
    alphas: list[float] = []
    restart_steps: list[int] = []
    restart_alpha: float = Field(default=0.01, gt=0, le=1)
    low: float = Field(default=0.5, gt=0, le=1)
    high: float = Field(default=1.0, gt=0, le=1)

    @model_validator(mode="after")
    def check_schedule(self) -> "DiscountSpec":
        if any(not 0 < a <= 1 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1]")
        if self.kind == DiscountKind.LIST and not self.alphas:
            raise ValueError("list discounting needs alphas")
        if self.low > self.high:
            raise ValueError("low must not exceed high")
        return self

    def schedule(self, horizon: int, rng: np.random.Generator) -> list[float]:
        """α announced before each of the `horizon` steps; the first is ignored."""
        if self.kind == DiscountKind.CONSTANT:
            return [self.alpha] * horizon
        if self.kind == DiscountKind.LIST:
            if len(self.alphas) < horizon:
                raise ConfigurationError(
                    "discount list is shorter than the horizon",
                    violations=[f"{len(self.alphas)} alphas for {horizon} steps"],
                )
            return list(self.alphas[:horizon])
        if self.kind == DiscountKind.RESTART:
            restarts = set(self.restart_steps)
            return [self.restart_alpha if t in restarts else 1.0 for t in range(1, horizon + 1)]
        return [float(a) for a in rng.uniform(self.low, self.high, size=horizon)]


class ExpertSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ExpertKind = ExpertKind.CONSTANT
    value: float = 0.5
    noise: float = Field(default=0.1, ge=0)
    period: int = Field(default=50, ge=1)
    phase: int = Field(default=0, ge=0)
    offset: float = Field(default=0.25, ge=0)


class RealitySpec(BaseModel):
    """
    Where outcomes come from:
      random       a drifting latent signal, outcomes drawn around it
      csv          a file with a `y` column (and `x1..xn`, `alpha` when present)
      adversarial  the endpoint that hurts the learner most at each step
      linear       y = θ′x + noise for a fixed random θ, clipped to the interval
    """

    model_config = ConfigDict(extra="forbid")

    kind: RealityKind = RealityKind.RANDOM
    path: str | None = None
    drift: float = Field(default=0.05, ge=0)
    noise: float = Field(default=0.1, ge=0)

    @model_validator(mode="after")
    def check_path(self) -> "RealitySpec":
        if self.kind == RealityKind.CSV and not self.path:
            raise ValueError("csv reality needs a path")
        return self


class FeatureSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(default=3, ge=1)
    noise: float = Field(default=0.1, ge=0)
    scale: float = Field(default=1.0, gt=0)


class Tolerances(BaseModel):
    """How far below zero each slack may go before the audit flags it."""

    model_config = ConfigDict(extra="forbid")

    aad: float = 1e-9
    convex: float = 1e-9
    convex_pre: float = 1e-9
    quantile: float = 1e-6
    linear: float = 1e-7
    linear_norm: float = 1e-7
    kernel: float = 1e-6
    kernel_tuned: float = 1e-6
    mixed: float = 1e-7
    weights: float = 1e-12
    threshold: float = 1e-9

    def get(self, theorem: str) -> float:
        return float(getattr(self, theorem, 0.0))


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    game: GameSpec
    discount: DiscountSpec = DiscountSpec()
    experts: list[ExpertSpec] = []
    reality: RealitySpec = RealitySpec()
    features: FeatureSpec = FeatureSpec()
    algorithm: AlgorithmSettings = AlgorithmSettings()
    tolerances: Tolerances = Tolerances()
    horizon: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    def with_override(self, key: str, value: Any) -> "ScenarioSpec":
        """A copy with one dotted key replaced, e.g. `discount.alpha`."""
        data = self.model_dump(mode="json")
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigurationError(f"unknown scenario key {key}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigurationError(f"unknown scenario key {key}")
        node[parts[-1]] = value
        if parts[0] == "game" and parts[-1] not in ("c", "eta"):
            # mixability constants follow the interval unless set explicitly
            data["game"].pop("c", None)
            data["game"].pop("eta", None)
        return _validate(data)


def _validate(data: Any) -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as err:
        violations = [
            f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in err.errors()
        ]
        raise ConfigurationError("invalid scenario", violations=violations) from err


def parse_scenario(text: str) -> ScenarioSpec:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigurationError("scenario is not valid yaml", violations=[str(err)]) from err
    if not isinstance(data, dict):
        raise ConfigurationError("scenario must be a mapping")
    return _validate(data)


def load_scenario(path: str | Path) -> ScenarioSpec:
    p = Path(path)
    if not p.is_file():
        raise ConfigurationError(f"scenario file not found: {p}")
    spec = parse_scenario(p.read_text())
    if spec.reality.path and not Path(spec.reality.path).is_absolute():
        # data files are looked up next to the scenario
        reality = spec.reality.model_copy(update={"path": str(p.parent / spec.reality.path)})
        spec = spec.model_copy(update={"reality": reality})
    log.debug("scenario loaded", path=str(p), horizon=spec.horizon, seed=spec.seed)
    return spec
