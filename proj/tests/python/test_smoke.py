import json
import math
import pathlib

import numpy as np
import pytest

import fovtopo

SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "scenarios"


def test_structural_matrices():
    single = fovtopo.DirectedGraph(2, [(0, 1)])
    cycle = fovtopo.DirectedGraph(2, [(0, 1), (1, 0)])
    np.testing.assert_array_equal(fovtopo.structural_lyapunov_matrix(single), [[1, -1], [-1, 1]])
    np.testing.assert_array_equal(fovtopo.structural_lyapunov_matrix(cycle), [[4, -4], [-4, 4]])
    np.testing.assert_array_equal(fovtopo.incidence_matrix(single), [[1], [-1]])
    cert = fovtopo.certify_stability(cycle)
    assert cert["psd"] is True
    assert cert["edge_laplacian_invertible"] is False


def test_invalid_graph():
    with pytest.raises(fovtopo.InvalidGraphError):
        fovtopo.DirectedGraph(2, [(0, 0)])


def test_extended():
    path = fovtopo.DirectedGraph(3, [(0, 1), (1, 2)])
    s = fovtopo.structural_lyapunov_matrix(path)
    sb = fovtopo.extended_structural_matrix(path, 4)
    np.testing.assert_array_equal(sb, np.kron(s, np.ones((8, 8))))
    assert fovtopo.lemma_identity_residual(path, [0.5, 2.0]) <= 1e-10
    with pytest.raises(fovtopo.LemmaPreconditionError):
        fovtopo.lemma_identity_residual(fovtopo.DirectedGraph(2, [(0, 1), (1, 0)]), [1.0, 1.0])
    assert fovtopo.psd_propagation(path)["extended_psd"]


def test_fit_fov():
    out = fovtopo.fit_fov(central_angle=math.pi / 2, range=10.0, budget=20)
    assert out["quality"]["iou"] >= out["default_quality"]["iou"]
    assert out["default_quality"]["iou"] == pytest.approx(0.6994370816896415, abs=1e-12)
    with pytest.raises(fovtopo.UnsupportedGeometryError):
        fovtopo.fit_fov(central_angle=math.pi, range=10.0)


def test_simulate():
    text = (SCENARIOS / "two_agents.json").read_text()
    out = fovtopo.simulate(text, seed=3)
    summary = json.loads(out["summary"])
    assert summary["completed"] and summary["topology_maintained"]
    assert out["trajectory_csv"].startswith("t,agent,x,y,heading,ux,uy,meas_x,meas_y,energy\n")
    assert fovtopo.simulate(text, seed=3)["trajectory_csv"] == out["trajectory_csv"]
    with pytest.raises(fovtopo.ConfigError):
        fovtopo.simulate("{}")
