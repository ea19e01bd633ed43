"""Two-point dataset where a weight-space local minimum is not one in covariance space.

With ``X = (1, -1)``, ``Y = (1, 1)``, no bias and a width-2 ReLU layer, every
``W_1 = (a_1, a_2)^T``, ``W_2 = (a_1, a_2)`` with ``a_1^2 + a_2^2 = 1 - lam``
and ``a_1, a_2 >= 0`` has the same loss and the same covariances. Interior
points of that arc are local minima, but at the endpoint ``a_2 = 0`` the
direction ``W^eps`` (second neuron's input weight ``-eps``, output weight
``+eps``) lowers the loss. The closed forms use the summed squared error,
hence ``Cost.SSE``.
"""
import io
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from ..network import RELU, Cost, NetworkParams, loss
from .datasets import counterexample_n2, generate

CLOSED_FORM_TOL = 1e-10


def base_loss(lam):
    return 1 + 2 * lam - lam**2


def perturbed_loss(lam, eps):
    return lam**2 + (eps**2 - 1) ** 2 + 2 * lam * (1 - lam + eps**2)


def arc_weights(a1, a2):
    """``W_1 = (a_1, a_2)^T`` and ``W_2 = (a_1, a_2)``, with zero bias columns."""
    w1 = np.array([[a1, 0.0], [a2, 0.0]])
    w2 = np.array([[a1, a2, 0.0]])
    return NetworkParams([w1, w2], 0.0, RELU)


def escape_weights(lam, eps):
    """``W^eps`` near the endpoint ``a_2 = 0``; ``eps = 0`` is the endpoint itself.

    The second neuron reads ``-eps x`` and fires only on ``x = -1``; its
    output weight must be ``+eps`` so that it pushes ``Z_2`` towards ``Y``.
    """
    r = np.sqrt(1 - lam)
    w1 = np.array([[r, 0.0], [-eps, 0.0]])
    w2 = np.array([[r, eps, 0.0]])
    return NetworkParams([w1, w2], 0.0, RELU)


def counterexample_loss(params, lam):
    X, Y = generate(counterexample_n2())
    return loss(params, X, Y, Cost.SSE, lam)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    expected: float
    detail: str = ""


@dataclass
class VerificationReport:
    lam: float
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def csv_rows(self):
        return [
            [repr(float(self.lam)), c.name, str(int(c.passed)), repr(float(c.value)), repr(float(c.expected)), c.detail]
            for c in self.checks
        ]


CSV_HEADER = ["lambda", "check", "passed", "value", "expected", "detail"]


def reports_to_csv(reports):
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in reports:
        for row in r.csv_rows():
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def verify_counterexample(lam, epsilons=(0.05, 0.1), samples=10_000, delta=1e-3, seed=0):
    """Run the three checks at regularization ``lam``.

    (i)   the loss on the arc equals ``1 + 2 lam - lam^2`` (three arc points);
    (ii)  ``samples`` random perturbations of norm ``delta`` at ``a_1 = a_2``
          never lower the loss below its value there (up to float roundoff);
    (iii) for each ``eps`` the loss of ``W^eps`` matches its closed form and,
          for ``eps > 0``, is strictly below the arc value.
    """
    if not 0 < lam < 1:
        raise InvalidInputError("lam must lie in (0, 1)")
    report = VerificationReport(lam)
    base = base_loss(lam)
    r = np.sqrt(1 - lam)

    arc = [(r, 0.0), (r / np.sqrt(2), r / np.sqrt(2)), (r * np.cos(0.3), r * np.sin(0.3))]
    errs = [abs(counterexample_loss(arc_weights(a1, a2), lam) - base) for a1, a2 in arc]
    report.checks.append(
        CheckResult("arc_loss", max(errs) < CLOSED_FORM_TOL, base + max(errs), base, f"max_err={max(errs):.3e}")
    )

    center = arc_weights(r / np.sqrt(2), r / np.sqrt(2))
    at_center = counterexample_loss(center, lam)
    # the true increase can be O(delta^4) ~ 1e-12, so allow only a few ulps of slack
    slack = 4 * np.finfo(float).eps * at_center
    rng = np.random.default_rng(seed)
    sizes = [w.size for w in center.weights]
    lowest = np.inf
    for _ in range(samples):
        v = rng.standard_normal(sum(sizes))
        v *= delta / np.linalg.norm(v)
        parts = np.split(v, np.cumsum(sizes)[:-1])
        moved = center.with_weights([w + p.reshape(w.shape) for w, p in zip(center.weights, parts)])
        lowest = min(lowest, counterexample_loss(moved, lam))
    report.checks.append(
        CheckResult("local_min", lowest >= at_center - slack, lowest, at_center, f"samples={samples},delta={delta}")
    )

    for eps in epsilons:
        value = counterexample_loss(escape_weights(lam, eps), lam)
        expected = perturbed_loss(lam, eps)
        ok = abs(value - expected) < CLOSED_FORM_TOL and (value < base if eps > 0 else abs(value - base) < CLOSED_FORM_TOL)
        report.checks.append(CheckResult(f"escape_eps={eps}", ok, value, expected, f"base={base!r}"))
    return report
