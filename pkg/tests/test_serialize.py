import json

import numpy as np
import pytest

from conftest import random_gaussian
from modelscope import run_af, run_vis
from modelscope.dataset import add_redundant_variable
from modelscope.serialize import af_to_dict, read_json, vis_to_dict, write_json


def test_vis_payload_shape(tmp_path):
    d = random_gaussian(n=70, p=5, seed=1)
    v = run_vis(d, B=10, nbest=3, seed=4, cores=1)
    payload = vis_to_dict(v, {"command": "vis", "seed": 4})
    assert payload["kind"] == "vis"
    assert payload["B"] == 10
    assert len(payload["lambda_grid"]) == 101
    assert len(payload["inclusion"]) == v.dataset.p
    assert payload["dataset"]["names"][-1] == "RV"
    sizes = [blk["size"] for blk in payload["stability"]]
    assert sizes == sorted(sizes)
    for blk in payload["stability"]:
        for m in blk["models"]:
            assert set(m) == {"mask", "formula", "variables", "prob", "loglik"}
    # every displayed number round-trips through JSON
    path = write_json(payload, tmp_path / "vis.json")
    assert read_json(path) == json.loads(json.dumps(payload))


def test_af_payload_shape(tmp_path):
    d = add_redundant_variable(random_gaussian(n=70, p=5, seed=2), 7)
    a = run_af(d, B=8, n_c=6, seed=3, cores=1)
    payload = af_to_dict(a, {"command": "af"})
    assert payload["kind"] == "af"
    curves = payload["curves"]
    assert set(curves) == {"best_only_true", "best_only_false"}
    for blk in curves.values():
        assert len(blk["p_star"]) == 6
        assert len(blk["argmax_formula"]) == 6
    path = write_json(payload, tmp_path / "af.json")
    assert read_json(path)["c_grid"] == payload["c_grid"]


def test_write_json_deterministic(tmp_path):
    d = random_gaussian(n=70, p=4, seed=3)
    v1 = run_vis(d, B=6, seed=9, cores=1)
    v2 = run_vis(d, B=6, seed=9, cores=2)
    p1 = write_json(vis_to_dict(v1, {"seed": 9}), tmp_path / "a.json")
    p2 = write_json(vis_to_dict(v2, {"seed": 9}), tmp_path / "b.json")
    assert p1.read_bytes() == p2.read_bytes()


def test_schema_version_guard(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"schema_version": "2.0"}))
    with pytest.raises(ValueError):
        read_json(path)
    path.write_text(json.dumps({"schema_version": "1.9", "kind": "vis"}))
    assert read_json(path)["kind"] == "vis"
