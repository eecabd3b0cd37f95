"""Python front-end for the lyapshape C++ library.

Reports come back from the extension as JSON text and are decoded into dicts
here; perturbation specs and family configs are accepted as dicts.
"""

import json

from . import _lyapshape as _core
from ._lyapshape import (
    LyapshapeError,
    MatrixFamily,
    ShapeGraph,
    ShapeSet,
    block_embedding_exponents,
    build_shape_graph,
    compound_matrix,
    enumerate_nonzero_monomials,
)

__all__ = [
    "LyapshapeError",
    "MatrixFamily",
    "ShapeGraph",
    "ShapeSet",
    "block_embedding_exponents",
    "bound_sandwich_check",
    "build_shape_graph",
    "compound_matrix",
    "enumerate_nonzero_monomials",
    "family_from_dict",
    "graph_report",
    "rank_m_duality",
    "rank_one_spectrum",
    "run_cli",
    "scaled_bounds",
    "spectrum",
    "top_exponent",
]


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def family_from_dict(spec, shape_set=None):
    return MatrixFamily.from_json(_text(spec), shape_set)


def graph_report(graph):
    report = json.loads(graph.report_json())
    report["entropy"] = json.loads(graph.entropy_json())
    return report


def top_exponent(family, n, replicas, renorm_every=16):
    return json.loads(_core.top_exponent(family, n, replicas, renorm_every))


def spectrum(family, n, replicas):
    return json.loads(_core.spectrum(family, n, replicas))


def bound_sandwich_check(family, shape_set, n=100_000, replicas=16, renorm_every=16, zero_tol=0.0):
    return json.loads(_core.bound_sandwich_check(family, shape_set, n, replicas, renorm_every, zero_tol))


def rank_one_spectrum(spec):
    return json.loads(_core.rank_one_spectrum(_text(spec)))


def rank_m_duality(spec, n, replicas):
    return json.loads(_core.rank_m_duality(_text(spec), n, replicas))


def scaled_bounds(spec, n=100_000, replicas=16):
    return json.loads(_core.scaled_bounds(_text(spec), n, replicas))


def run_cli(args):
    """Runs the command-line front-end in-process. Returns (exit_code, stdout, stderr)."""
    return _core.run_cli(list(args))
