from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np
import pandas as pd
import structlog

from discountlearn import games
from discountlearn.exceptions import ConfigurationError, DomainError
from discountlearn.games import GameSpec
from discountlearn.harness.scenario import FeatureSpec, RealitySpec
from discountlearn.utils.enums import RealityKind

log = structlog.get_logger(__name__)


class Reality(ABC):
    """
    The outcome side of the protocol. Each step it may reveal an input x_t
    (regression), exposes a latent signal in [y_lo, y_hi] for the simulated
    experts, and finally announces ω_t, possibly after seeing γ_t.
    """

    def __init__(self, spec: RealitySpec, game: GameSpec, horizon: int):
        self.spec = spec
        self.game = game
        self.horizon = horizon

    def inputs(self, t: int) -> np.ndarray | None:
        _ = t
        return None

    def alpha(self, t: int) -> float | None:
        """A discount factor carried by the data, overriding the schedule."""
        _ = t
        return None

    @abstractmethod
    def signal(self, t: int) -> float:
        ...

    @abstractmethod
    def outcome(self, t: int, prediction: float) -> float:
        ...


class RandomReality(Reality):
    def __init__(
        self, spec: RealitySpec, game: GameSpec, horizon: int, rng: np.random.Generator
    ):
        super().__init__(spec, game, horizon)
        steps = rng.normal(scale=spec.drift, size=horizon)
        level = np.empty(horizon)
        current = rng.uniform()
        for i, step in enumerate(steps):
            current = float(np.clip(current + step, 0.0, 1.0))
            level[i] = current
        self.levels = level
        if game.binary:
            hits = rng.uniform(size=horizon) < level
            self.outcomes = np.where(hits, game.y_hi, game.y_lo)
        else:
            noisy = np.clip(level + spec.noise * rng.normal(size=horizon), 0.0, 1.0)
            self.outcomes = game.y_lo + game.width * noisy

    def signal(self, t: int) -> float:
        return float(self.game.y_lo + self.game.width * self.levels[t - 1])

    def outcome(self, t: int, prediction: float) -> float:
        return float(self.outcomes[t - 1])


class AdversarialReality(RandomReality):
    """Plays whichever endpoint gives the learner the larger loss."""

    def outcome(self, t: int, prediction: float) -> float:
        # a convex loss peaks at an endpoint of the interval
        lo, hi = self.game.y_lo, self.game.y_hi
        gamma = np.array([prediction])
        loss_lo = float(games.losses(self.game, gamma, lo)[0])
        loss_hi = float(games.losses(self.game, gamma, hi)[0])
        return hi if loss_hi >= loss_lo else lo


class LinearReality(Reality):
    def __init__(
        self,
        spec: RealitySpec,
        game: GameSpec,
        horizon: int,
        features: FeatureSpec,
        rng: np.random.Generator,
    ):
        super().__init__(spec, game, horizon)
        theta = rng.normal(size=features.dim) / np.sqrt(features.dim)
        self.x = rng.uniform(-features.scale, features.scale, size=(horizon, features.dim))
        noise = features.noise * game.width * rng.normal(size=horizon)
        raw = self.x @ theta + game.midpoint + noise
        self.outcomes = np.clip(raw, game.y_lo, game.y_hi)
        self.theta = theta

    def inputs(self, t: int) -> np.ndarray | None:
        return self.x[t - 1]

    def signal(self, t: int) -> float:
        return float(self.outcomes[t - 1])

    def outcome(self, t: int, prediction: float) -> float:
        return float(self.outcomes[t - 1])


def _numeric(frame: pd.DataFrame, columns: list[str], path: Path) -> np.ndarray:
    try:
        return frame[columns].to_numpy(dtype=float)
    except ValueError as err:
        raise ConfigurationError(
            f"non-numeric value in data file: {path}", violations=[f"{columns}: {err}"]
        ) from err


class CsvReality(Reality):
    """
    Replays a file. Columns: `y` (required), `x1..xn` inputs, `alpha`
    discounts and `signal` for the experts, all optional.
    """

    def __init__(self, spec: RealitySpec, game: GameSpec, horizon: int):
        super().__init__(spec, game, horizon)
        path = Path(spec.path or "")
        if not path.is_file():
            raise ConfigurationError(f"data file not found: {path}")
        try:
            frame = pd.read_csv(path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
            raise ConfigurationError(
                f"unreadable data file: {path}", violations=[str(err)]
            ) from err
        if "y" not in frame.columns:
            raise ConfigurationError("data file has no y column", violations=list(frame.columns))
        if len(frame) < horizon:
            raise ConfigurationError(
                "data file is shorter than the horizon",
                violations=[f"{len(frame)} rows for {horizon} steps"],
            )
        frame = frame.iloc[:horizon]
        x_cols = sorted(
            (c for c in frame.columns if c.startswith("x") and c[1:].isdigit()),
            key=lambda c: int(c[1:]),
        )
        self.y = _numeric(frame, ["y"], path)[:, 0]
        for y in self.y:
            games.check_outcome(game, float(y))
        self.x = _numeric(frame, x_cols, path) if x_cols else None
        self.alphas = _numeric(frame, ["alpha"], path)[:, 0] if "alpha" in frame else None
        if self.alphas is not None and ((self.alphas <= 0) | (self.alphas > 1)).any():
            raise DomainError("alpha column must lie in (0, 1]")
        self.signals = (
            _numeric(frame, ["signal"], path)[:, 0] if "signal" in frame else np.roll(self.y, 1)
        )
        if "signal" not in frame:
            self.signals[0] = game.midpoint
        log.info("replaying data file", path=str(path), rows=horizon, inputs=len(x_cols))

    @property
    def dim(self) -> int:
        return 0 if self.x is None else int(self.x.shape[1])

    def inputs(self, t: int) -> np.ndarray | None:
        return None if self.x is None else self.x[t - 1]

    def alpha(self, t: int) -> float | None:
        return None if self.alphas is None else float(self.alphas[t - 1])

    def signal(self, t: int) -> float:
        return float(np.clip(self.signals[t - 1], self.game.y_lo, self.game.y_hi))

    def outcome(self, t: int, prediction: float) -> float:
        return float(self.y[t - 1])


def build_reality(
    spec: RealitySpec, game: GameSpec, horizon: int, features: FeatureSpec, seed: int
) -> Reality:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    if spec.kind == RealityKind.RANDOM:
        return RandomReality(spec, game, horizon, rng)
    if spec.kind == RealityKind.ADVERSARIAL:
        return AdversarialReality(spec, game, horizon, rng)
    if spec.kind == RealityKind.LINEAR:
        return LinearReality(spec, game, horizon, features, rng)
    return CsvReality(spec, game, horizon)
