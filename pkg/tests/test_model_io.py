"""Model bundle round trips."""

import json

import numpy as np
import pytest

from safeflow import model_io
from safeflow.errors import ParseError


def test_round_trip_is_bitwise(tmp_path, corner_bundle):
    path = tmp_path / "model.json"
    model_io.save_model(path, corner_bundle.model, corner_bundle.cones,
                        corner_bundle.start, {"seed": 7})
    loaded = model_io.load_model(path)
    assert np.array_equal(loaded.model.goal, corner_bundle.model.goal)
    assert np.array_equal(loaded.model.A, corner_bundle.model.A)
    assert np.array_equal(loaded.model.gmm.priors, corner_bundle.model.gmm.priors)
    assert np.array_equal(loaded.model.gmm.means, corner_bundle.model.gmm.means)
    assert np.array_equal(loaded.model.gmm.covariances,
                          corner_bundle.model.gmm.covariances)
    assert np.array_equal(loaded.cones.angle_model.coef,
                          corner_bundle.cones.angle_model.coef)
    assert np.array_equal(loaded.cones.angle_model.train_y,
                          corner_bundle.cones.angle_model.train_y)
    assert loaded.cones.angle_model.d_max == corner_bundle.cones.angle_model.d_max
    assert loaded.cones.angle_floor == corner_bundle.cones.angle_floor
    assert np.array_equal(loaded.start, corner_bundle.start)
    assert loaded.meta == {"seed": 7}
    assert loaded.cones.reference is loaded.model


def test_missing_file_raises_parse_error(tmp_path):
    with pytest.raises(ParseError, match="nowhere.json"):
        model_io.load_model(tmp_path / "nowhere.json")


def test_wrong_format_tag(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"format": "something-else"}))
    with pytest.raises(ParseError, match="format"):
        model_io.load_model(path)


def test_malformed_payload(tmp_path, corner_bundle):
    path = tmp_path / "model.json"
    model_io.save_model(path, corner_bundle.model, corner_bundle.cones,
                        corner_bundle.start)
    data = json.loads(path.read_text())
    del data["gmm"]["priors"]
    path.write_text(json.dumps(data))
    with pytest.raises(ParseError, match="malformed"):
        model_io.load_model(path)


def test_not_json(tmp_path):
    path = tmp_path / "noise.json"
    path.write_text("{:::")
    with pytest.raises(ParseError, match="valid JSON"):
        model_io.load_model(path)
