import json
import math
import pathlib

import numpy as np
import pytest

import lyapshape as ls

CONFIGS = pathlib.Path(__file__).resolve().parents[2] / "configs"


def exm2_d1():
    i4 = np.eye(4)
    l2 = np.zeros((4, 4))
    l2[3, 0] = 1
    l3 = np.zeros((4, 4))
    l3[1, 2] = l3[1, 3] = 1
    return ls.ShapeSet([i4, l2, l3])


def two_exm(seed=1):
    a = np.array([[2, 0, 0, 0], [0, 1, -1, -1], [0, 0, -1, 0], [0, 0, 0, -2]], dtype=float)
    b = np.array([[1, 0, 0, 0], [0, 2, 0, 0], [0, 0, 3, 0], [5, 0, 0, 4]], dtype=float)
    return ls.MatrixFamily.finite_iid([a, b], [0.5, 0.5], seed)


def test_graph_vertices_and_report():
    g = ls.build_shape_graph(exm2_d1())
    assert g.vertex_count == 5
    assert g.contains_zero
    report = ls.graph_report(g)
    assert report["structure"]["k_star"] == 3
    assert report["entropy"]["log_k"] == pytest.approx(math.log(3))


def test_overlapping_labels_raise():
    with pytest.raises(ls.LyapshapeError) as info:
        ls.ShapeSet([np.eye(2), np.array([[1.0, 1.0], [0.0, 0.0]])])
    assert info.value.code == "OverlappingLabels"


def test_monomials():
    s = ls.ShapeSet([np.eye(3), np.triu(np.ones((3, 3)), 1)])
    assert len(ls.enumerate_nonzero_monomials(ls.build_shape_graph(s), 4)) == 11


def test_top_exponent_and_sandwich():
    f = two_exm()
    est = ls.top_exponent(f, 20000, 8)
    assert est["value"] == pytest.approx(0.5 * math.log(8), abs=0.01)
    rec = ls.bound_sandwich_check(f, exm2_d1(), n=20000, replicas=8)
    assert rec["verdict"] == "pass"


def test_spectrum_of_diagonal_family():
    f = ls.MatrixFamily.finite_iid([np.diag([2.0, 0.5])], [1.0], 0)
    spec = ls.spectrum(f, 1000, 1)
    assert [e["value"] for e in spec] == pytest.approx([math.log(2), math.log(0.5)])


def test_compound_and_embedding():
    rng = np.random.default_rng(0)
    a, b = rng.standard_normal((4, 4)), rng.standard_normal((4, 4))
    lhs = ls.compound_matrix(a @ b, 2)
    rhs = ls.compound_matrix(a, 2) @ ls.compound_matrix(b, 2)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)
    assert ls.block_embedding_exponents([0.5, -1.0], 0.1, 2, 1) == pytest.approx(0.5)


def test_rank_one_spectrum_constant():
    spec = {"dim": 3, "rank": 1, "base": "identity", "V": [[1], [0], [0]],
            "atoms": [{"eta": 3, "U": [[1], [0], [0]], "prob": 1}], "seed": 1}
    out = ls.rank_one_spectrum(spec)
    assert out["exponents"] == pytest.approx([math.log(4), math.log(3), math.log(3)])


def test_family_round_trip():
    f = two_exm(seed=9)
    g = ls.family_from_dict(json.loads(f.to_json()))
    assert g.seed == 9
    assert all(g.atom_index(0, t) == f.atom_index(0, t) for t in range(50))


def test_cli_in_process():
    code, out, _ = ls.run_cli(["graph", "--config", str(CONFIGS / "two_exm_d1.json")])
    assert code == 0
    assert len(json.loads(out)["vertices"]) == 5
    code, _, err = ls.run_cli(["validate", "--config", str(CONFIGS / "bad_probs.json")])
    assert code == 2
    assert "line" in err
