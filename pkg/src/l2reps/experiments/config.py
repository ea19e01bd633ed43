"""Key-value run configuration shared by the CLI subcommands.

A config file holds one ``key = value`` per line; ``#`` starts a comment and
an optional ``[section]`` header is ignored. Recognized keys (defaults in
parentheses):

    dataset        teacher | bipartite | onehot | counterexample_n2 | synthetic_clusters (teacher)
    n              number of datapoints (3)
    data_seed      dataset seed (0)
    classes        onehot / cluster class count (2)
    dim            cluster dimension (2)
    input_dim      teacher input dimension (2)
    teacher_widths teacher layer widths after the input, comma separated (8,3)
    depth          trained network depth L (2)
    widths         hidden widths: the scan for ``sweep``, the layer widths for ``train`` (1,2,4,8)
    beta           bias amount (1.0)
    activation     relu | identity | leaky_relu:<slope> (relu)
    gain           init scale (0.5)
    cost           mse | sse | cross_entropy (mse)
    lambda         L2 regularization strength (1e-2)
    trials         trials per width (5)
    seed           training seed (0)
    plateau_tol    relative plateau tolerance (0.01)
    workers        sweep worker threads (1)
    adam_steps, adam_lr, gd_steps, gd_lr, gd_growth, grad_tol  optimizer (2000, 0.03, 3000, 0.01, 1.1, 1e-9)

Command-line flags override file values.
"""
import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..errors import InvalidInputError
from ..network import Activation, Cost, OptimizerConfig
from .datasets import DatasetSpec
from .sweep import SweepConfig


def _ints(text):
    return tuple(int(t) for t in str(text).replace(" ", "").split(",") if t)


@dataclass
class RunConfig:
    dataset: str = "teacher"
    n: int = 3
    data_seed: int = 0
    classes: int = 2
    dim: int = 2
    input_dim: int = 2
    teacher_widths: tuple = (8, 3)
    depth: int = 2
    widths: tuple = (1, 2, 4, 8)
    beta: float = 1.0
    activation: str = "relu"
    gain: float = 0.5
    cost: str = "mse"
    lam: float = 1e-2
    trials: int = 5
    seed: int = 0
    plateau_tol: float = 0.01
    workers: int = 1
    adam_steps: int = 2000
    adam_lr: float = 3e-2
    gd_steps: int = 3000
    gd_lr: float = 1e-2
    gd_growth: float = 1.1
    grad_tol: float = 1e-9
    extra: dict = field(default_factory=dict)

    def dataset_spec(self):
        return DatasetSpec(
            self.dataset, n=self.n, seed=self.data_seed, classes=self.classes,
            dim=self.dim, input_dim=self.input_dim, widths=tuple(self.teacher_widths),
        )

    def optimizer(self):
        return OptimizerConfig(
            adam_steps=self.adam_steps, adam_lr=self.adam_lr, gd_steps=self.gd_steps,
            gd_lr=self.gd_lr, gd_growth=self.gd_growth, grad_tol=self.grad_tol, seed=self.seed,
        )

    def sweep_config(self):
        return SweepConfig(
            widths=self.widths, trials=self.trials, depth=self.depth, lam=self.lam,
            cost=Cost(self.cost), optimizer=self.optimizer(), seed=self.seed,
            plateau_tol=self.plateau_tol, beta=self.beta, activation=Activation.parse(self.activation),
            gain=self.gain, workers=self.workers,
        )


_ALIASES = {"lambda": "lam"}


def parse_config(text):
    """Parse config text into a RunConfig; unknown keys land in ``extra``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), default_section="__none__")
    body = "\n".join(ln for ln in text.splitlines() if not ln.strip().startswith("["))
    try:
        parser.read_string("[run]\n" + body)
    except configparser.Error as exc:
        raise InvalidInputError(f"malformed config: {exc}") from None
    types = {f.name: f.type for f in fields(RunConfig)}
    values, extra = {}, {}
    for key, raw in parser["run"].items():
        name = _ALIASES.get(key, key)
        kind = types.get(name)
        try:
            if kind is None or name == "extra":
                extra[key] = raw
            elif kind is tuple:
                values[name] = _ints(raw)
            elif kind is int:
                values[name] = int(raw)
            elif kind is float:
                values[name] = float(raw)
            else:
                values[name] = raw.strip()
        except ValueError:
            raise InvalidInputError(f"config key {key!r}: cannot parse {raw!r}") from None
    return RunConfig(**values, extra=extra)


def load_config(path):
    if path is None:
        return RunConfig()
    try:
        return parse_config(Path(path).read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from None


def with_overrides(config, lam=None, seed=None, widths=None, trials=None):
    updates = {"lam": lam, "seed": seed, "widths": _ints(widths) if widths else None, "trials": trials}
    return replace(config, **{k: v for k, v in updates.items() if v is not None})
