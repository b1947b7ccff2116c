import json

import numpy as np
import pytest

from lanetopo.arrangement import build_arrangement
from lanetopo.bundles import PredictionBundle
from lanetopo.errors import SchemaError, StructureError
from lanetopo.io import (
    cycles_to_dict,
    dumps,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    load_prediction,
    prediction_from_dict,
    prediction_to_dict,
    read_json,
    save_graph,
)
from lanetopo.lanegraph import FovSpec
from lanetopo.synth import SceneParams, gen_grid, gen_random_scene


def test_graph_round_trip(tmp_path):
    g = gen_random_scene(SceneParams(seed=1))
    path = tmp_path / "g.json"
    save_graph(g, path, {"note": "x"})
    assert load_graph(path) == g
    assert read_json(path)["metadata"] == {"note": "x"}
    # boundary curves may be left out
    assert graph_from_dict(graph_to_dict(g, include_boundary=False)) == g


def test_custom_boundary_ids():
    doc = graph_to_dict(gen_grid(1, 1))
    for c in doc["curves"]:
        if c["role"] == "boundary":
            c["id"] = -10 + c["id"]
    g = graph_from_dict(doc)
    assert g.boundary_ids == (-11, -12, -13, -14)


def test_boundary_curves_must_cover_all_sides():
    doc = graph_to_dict(gen_grid(1, 1))
    doc["curves"] = [c for c in doc["curves"] if c["id"] != -2]
    with pytest.raises(SchemaError):
        graph_from_dict(doc)
    doc = graph_to_dict(gen_grid(1, 1))
    doc["curves"][-1]["control_points"] = [[0.0, 0.0], [0.3, 0.3], [1.0, 1.0]]
    with pytest.raises(SchemaError):
        graph_from_dict(doc)


def test_world_frame_is_normalized():
    fov = FovSpec()
    doc = {
        "version": "1.0",
        "frame": "world",
        "fov": {"x_min": -25.0, "x_max": 25.0, "z_min": 1.0, "z_max": 50.0},
        "curves": [{"id": 0, "control_points": [[0.0, 1.0], [0.0, 25.5], [0.0, 50.0]]}],
    }
    g = graph_from_dict(doc)
    assert g.fov == fov
    assert g.lane(0).bezier.points == ((0.5, 0.0), (0.5, 0.5), (0.5, 1.0))


@pytest.mark.parametrize("mutate, err", [
    (lambda d: d.update(version="2.0"), SchemaError),
    (lambda d: d.update(extra=1), SchemaError),
    (lambda d: d["curves"][0].update(control_points=[[0, 0], [1, 1]]), SchemaError),
    (lambda d: d["curves"][0].update(control_points=[[0.2, 0.2]] * 3), SchemaError),
    (lambda d: d.update(incidence=[[0, 99]]), StructureError),
    (lambda d: d["curves"].append(dict(d["curves"][0])), StructureError),
])
def test_malformed_graphs(mutate, err):
    doc = graph_to_dict(gen_grid(1, 0), include_boundary=False)
    mutate(doc)
    with pytest.raises(err):
        graph_from_dict(doc)


def test_invalid_json_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(SchemaError):
        load_graph(p)


def test_prediction_round_trip(tmp_path):
    pred = PredictionBundle.from_graph(gen_grid(2, 1), pad_curves=1, pad_cycles=2)
    doc = prediction_to_dict(pred)
    (tmp_path / "p.json").write_text(dumps(doc))
    back = load_prediction(tmp_path / "p.json")
    for name in ("Z_c_q", "Z_c_p", "A_hat", "Z_m_q", "Z_m_p", "Z_m_r"):
        np.testing.assert_array_equal(getattr(back, name), getattr(pred, name))


def test_prediction_shape_errors():
    doc = prediction_to_dict(PredictionBundle.from_graph(gen_grid(1, 1)))
    doc["connectivity"] = [[0.0]]
    with pytest.raises(SchemaError):
        prediction_from_dict(doc)
    doc = prediction_to_dict(PredictionBundle.from_graph(gen_grid(1, 1)))
    doc["cycles"][0]["member_probs"] = [0.5]
    with pytest.raises(SchemaError):
        prediction_from_dict(doc)
    doc["curves"][0]["prob"] = 1.5
    with pytest.raises(SchemaError):
        prediction_from_dict(doc)


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [0.1, 2]}) == '{\n  "a": [\n    0.1,\n    2\n  ],\n  "b": 1\n}\n'
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_cycles_report():
    arr = build_arrangement(gen_grid(1, 1))
    doc = cycles_to_dict(arr)
    assert doc["n_points"] == len(arr.points)
    assert [c["index"] for c in doc["cycles"]] == list(range(4))
    assert sum(c["area"] for c in doc["cycles"]) == pytest.approx(1.0)
    assert json.loads(dumps(doc)) == doc
