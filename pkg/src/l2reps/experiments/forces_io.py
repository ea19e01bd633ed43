"""Force-field export: one CSV row per (datapoint, neuron) of a hidden layer."""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..reform_z import forces, reps_from_weights

COLUMNS = ["datapoint", "neuron", "z", "attraction", "repulsion"]


@dataclass
class ForceExport:
    """Re-read export. Matrices are ``n_l x N``; transpose for the per-neuron view."""

    layer: int
    z: np.ndarray
    attraction: np.ndarray
    repulsion: np.ndarray
    epsilon_attraction: float
    epsilon_repulsion: float


def _metadata_line(field, n, N):
    # columns of Z are datapoints in R^{n_l}; rows are neurons in R^N
    return (
        f"# layer={field.layer};neurons={n};datapoints={N};"
        f"epsilon_attraction={float(field.epsilon_attraction)!r};epsilon_repulsion={float(field.epsilon_repulsion)!r};"
        "duality=columns:datapoints,rows:neurons"
    )


def export_forces(params, X, layer, epsilon, out_path):
    """Write ``Z_layer`` and both forces on it to ``out_path``; return the ForceField."""
    Z = reps_from_weights(params, X)
    field = forces(Z, layer, epsilon)
    z = Z.reps[layer - 1]
    n, N = z.shape
    path = Path(out_path)
    try:
        with path.open("w", newline="") as fh:
            fh.write(_metadata_line(field, n, N) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for i in range(N):
                for j in range(n):
                    writer.writerow([i, j] + [repr(float(m[j, i])) for m in (z, field.attraction, field.repulsion)])
    except OSError as exc:
        raise OSError(f"cannot write forces to {path}: {exc}") from exc
    return field


def read_forces(path):
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read forces from {path}: {exc}") from exc
    if not lines or not lines[0].startswith("# "):
        raise InvalidInputError(f"{path}: missing metadata line")
    meta = dict(item.split("=", 1) for item in lines[0][2:].split(";"))
    n, N = int(meta["neurons"]), int(meta["datapoints"])
    rows = list(csv.reader(lines[1:]))
    if rows[0] != COLUMNS or len(rows) - 1 != n * N:
        raise InvalidInputError(f"{path}: expected header {COLUMNS} and {n * N} rows")
    mats = np.zeros((3, n, N))
    for i, j, *vals in rows[1:]:
        mats[:, int(j), int(i)] = [float(v) for v in vals]
    return ForceExport(
        int(meta["layer"]), mats[0], mats[1], mats[2],
        float(meta["epsilon_attraction"]), float(meta["epsilon_repulsion"]),
    )

