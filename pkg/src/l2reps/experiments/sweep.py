"""Width sweeps: minimum trained loss as a function of hidden width."""
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, InvalidInputError
from ..network import RELU, Activation, Cost, OptimizerConfig, init_params, loss, train
from .datasets import DatasetSpec, generate


@dataclass
class SweepConfig:
    widths: tuple
    trials: int = 3
    depth: int = 2
    lam: float = 1e-3
    cost: Cost = Cost.MSE
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    plateau_tol: float = 0.01
    beta: float = 1.0
    activation: Activation = RELU
    gain: float = 1.0
    workers: int = 1

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        if not self.widths or any(b <= a for a, b in zip(self.widths, self.widths[1:])):
            raise InvalidInputError("widths must be non-empty and strictly increasing")
        if self.trials < 1:
            raise InvalidInputError("need at least one trial")
        if self.depth < 2:
            raise InvalidInputError("a sweep needs at least one hidden layer (depth >= 2)")
        self.cost = Cost(self.cost)
        self.activation = Activation.parse(self.activation)


@dataclass
class SweepReport:
    widths: tuple
    losses: np.ndarray  # (len(widths), trials); NaN marks a diverged trial
    plateau_tol: float

    @property
    def min_losses(self):
        out = np.full(len(self.widths), np.nan)
        for i, row in enumerate(self.losses):
            if np.any(np.isfinite(row)):
                out[i] = np.nanmin(row)
        return out

    @property
    def plateau_level(self):
        """Min loss at the widest width that has one."""
        finite = self.min_losses[np.isfinite(self.min_losses)]
        return float(finite[-1]) if finite.size else np.nan

    @property
    def plateau_start(self):
        """Smallest width whose min loss is within ``plateau_tol`` of the widest width's."""
        level = self.plateau_level
        for w, m in zip(self.widths, self.min_losses):
            if np.isfinite(m) and m <= (1 + self.plateau_tol) * level:
                return w
        return None

    def failed_trials(self):
        """Per width, how many trials ended above the plateau level."""
        level = (1 + self.plateau_tol) * self.plateau_level
        return [int(np.sum(~(row <= level))) for row in self.losses]

    def is_monotone(self, tol=None):
        """Min loss never exceeds ``(1+tol)`` times the min loss at any narrower width."""
        tol = self.plateau_tol if tol is None else tol
        best = np.inf
        for m in self.min_losses:
            if not np.isfinite(m):
                continue
            if m > (1 + tol) * best:
                return False
            best = min(best, m)
        return True

    def to_csv(self):
        buf = io.StringIO()
        trials = self.losses.shape[1]
        buf.write(",".join(["width", "min_loss"] + [f"loss_trial{t}" for t in range(trials)] + ["failed", "in_plateau"]) + "\n")
        start = self.plateau_start
        for w, m, row, failed in zip(self.widths, self.min_losses, self.losses, self.failed_trials()):
            cells = [str(w), repr(float(m))] + [repr(float(v)) for v in row]
            cells += [str(failed), str(int(start is not None and w >= start))]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()


def trial_seed(seed, width, trial):
    return np.random.SeedSequence([int(seed), int(width), int(trial)])


def run_trial(config, X, Y, width, trial):
    widths = (X.shape[0],) + (width,) * (config.depth - 1) + (Y.shape[0],)
    rng = np.random.default_rng(trial_seed(config.seed, width, trial))
    params = init_params(widths, config.beta, config.activation, rng, config.gain)
    try:
        params = train(params, X, Y, config.cost, config.lam, config.optimizer)
    except DivergenceError:
        return np.nan
    value = loss(params, X, Y, config.cost, config.lam)
    return value if np.isfinite(value) else np.nan


def sweep(config, data):
    """Train ``config.trials`` nets per width; ``data`` is a DatasetSpec or an ``(X, Y)`` pair."""
    X, Y = generate(data) if isinstance(data, DatasetSpec) else data
    jobs = [(w, t) for w in config.widths for t in range(config.trials)]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            values = list(pool.map(lambda job: run_trial(config, X, Y, *job), jobs))
    else:
        values = [run_trial(config, X, Y, *job) for job in jobs]
    losses = np.array(values, dtype=float).reshape(len(config.widths), config.trials)
    return SweepReport(config.widths, losses, config.plateau_tol)
