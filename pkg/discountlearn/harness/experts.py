import numpy as np

from discountlearn.games import GameSpec
from discountlearn.harness.scenario import ExpertSpec
from discountlearn.utils.enums import ExpertKind


class Expert:
    """
    A simulated expert. Every expert sees the latent signal the reality
    draws its outcomes around and turns it into a prediction in
    [y_lo, y_hi]:
      constant              always `value`
      noisy_oracle          signal plus gaussian noise
      switching_oracle      the signal for `period` steps, then its mirror
                            image for `period` steps, and so on
      adversarial_midpoint  the midpoint pushed `offset` away from the signal
    """

    def __init__(self, spec: ExpertSpec, game: GameSpec, rng: np.random.Generator):
        self.spec = spec
        self.game = game
        self.rng = rng

    def __str__(self) -> str:
        return f"{self.spec.kind}"

    def _clip(self, value: float) -> float:
        return float(np.clip(value, self.game.y_lo, self.game.y_hi))

    def predict(self, t: int, signal: float) -> float:
        spec, game = self.spec, self.game
        if spec.kind == ExpertKind.CONSTANT:
            return self._clip(spec.value)
        if spec.kind == ExpertKind.NOISY_ORACLE:
            return self._clip(signal + spec.noise * game.width * self.rng.normal())
        if spec.kind == ExpertKind.SWITCHING_ORACLE:
            flipped = ((t - 1 + spec.phase) // spec.period) % 2 == 1
            return self._clip(game.y_lo + game.y_hi - signal if flipped else signal)
        away = -1.0 if signal >= game.midpoint else 1.0
        return self._clip(game.midpoint + away * spec.offset * game.width)


def build_experts(specs: list[ExpertSpec], game: GameSpec, seed: int) -> list[Expert]:
    # one independent stream per expert so adding an expert leaves the others unchanged
    streams = np.random.SeedSequence([seed, 1]).spawn(len(specs))
    return [Expert(s, game, np.random.default_rng(ss)) for s, ss in zip(specs, streams)]
