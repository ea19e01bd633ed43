"""JSON round trips for weights and covariance chains.

Matrices are stored as ``{"shape": [rows, cols], "data": [...]}`` in row-major
order; Python's float repr makes the round trip exact.
"""
import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .network import Activation, NetworkParams
from .reform_k import CovarianceChain, CovariancePair


def matrix_to_obj(m):
    m = np.asarray(m, dtype=float)
    return {"shape": list(m.shape), "data": m.ravel().tolist()}


def matrix_from_obj(obj):
    try:
        return np.array(obj["data"], dtype=float).reshape(obj["shape"])
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInputError(f"malformed matrix object: {exc}") from None


def params_to_json(params):
    return json.dumps({
        "kind": "network",
        "beta": params.beta,
        "activation": str(params.activation),
        "weights": [matrix_to_obj(w) for w in params.weights],
    })


def params_from_json(text):
    obj = json.loads(text)
    if obj.get("kind") != "network":
        raise InvalidInputError("not a serialized network")
    weights = [matrix_from_obj(w) for w in obj["weights"]]
    return NetworkParams(weights, float(obj["beta"]), Activation.parse(obj["activation"]))


def chain_to_json(chain):
    return json.dumps({
        "kind": "chain",
        "pairs": [
            {"K": matrix_to_obj(p.K), "K_sigma": matrix_to_obj(p.K_sigma), "beta": p.beta} for p in chain.pairs
        ],
        "output": matrix_to_obj(chain.output),
        "K0_sigma": matrix_to_obj(chain.K0_sigma),
    })


def chain_from_json(text):
    obj = json.loads(text)
    if obj.get("kind") != "chain":
        raise InvalidInputError("not a serialized covariance chain")
    pairs = [
        CovariancePair(matrix_from_obj(p["K"]), matrix_from_obj(p["K_sigma"]), float(p["beta"])) for p in obj["pairs"]
    ]
    return CovarianceChain(pairs, matrix_from_obj(obj["output"]), matrix_from_obj(obj["K0_sigma"]))


def save(obj, path):
    text = params_to_json(obj) if isinstance(obj, NetworkParams) else chain_to_json(obj)
    Path(path).write_text(text + "\n")


def load(path):
    text = Path(path).read_text()
    kind = json.loads(text).get("kind")
    return params_from_json(text) if kind == "network" else chain_from_json(text)
