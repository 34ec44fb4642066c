"""Serialization of trained models to a single JSON bundle.

A bundle holds the mixture, the system matrices, the cone angle model,
the goal frame, and the nominal start frame.  Rotations are stored as
full 3x3 matrices so that loading reproduces the training-time floats
bit for bit; quaternions are only a wire format for streaming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import cones as cone_mod
from . import ds as ds_mod
from .errors import ParseError

FORMAT = "safeflow-model/1"


@dataclass
class ModelBundle:
    model: ds_mod.RotationDS
    cones: cone_mod.TimeVaryingCones
    start: np.ndarray
    meta: dict


def save_model(path, model, cones, start, meta=None):
    gmm = model.gmm
    lwr = cones.angle_model
    payload = {
        "format": FORMAT,
        "goal": model.goal.tolist(),
        "start": np.asarray(start, dtype=float).tolist(),
        "gmm": {"priors": gmm.priors.tolist(),
                "means": gmm.means.tolist(),
                "covariances": gmm.covariances.tolist()},
        "A": model.A.tolist(),
        "cones": {"degree": lwr.coef.shape[1] - 1,
                  "centers": lwr.centers.tolist(),
                  "widths": lwr.sigmas.tolist(),
                  "coefficients": lwr.coef.tolist(),
                  "floor": cones.angle_floor,
                  "distance_max": lwr.d_max,
                  "train_distances": lwr.train_d.tolist(),
                  "train_angles": lwr.train_y.tolist()},
        "meta": dict(meta or {}),
    }
    with open(path, "w") as handle:
        json.dump(payload, handle)


def load_model(path):
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except FileNotFoundError:
        raise ParseError(f"no such model file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT:
        raise ParseError(f"model file {path} lacks format tag {FORMAT!r}")
    try:
        gmm = ds_mod.GMMModel(priors=payload["gmm"]["priors"],
                              means=payload["gmm"]["means"],
                              covariances=payload["gmm"]["covariances"])
        goal = np.asarray(payload["goal"], dtype=float)
        model = ds_mod.RotationDS(gmm=gmm, A=np.asarray(payload["A"], dtype=float),
                                  goal=goal)
        spec = payload["cones"]
        lwr = cone_mod.LWRModel(centers=np.asarray(spec["centers"], dtype=float),
                                sigmas=np.asarray(spec["widths"], dtype=float),
                                coef=np.asarray(spec["coefficients"], dtype=float),
                                d_max=float(spec["distance_max"]),
                                train_d=np.asarray(spec["train_distances"], dtype=float),
                                train_y=np.asarray(spec["train_angles"], dtype=float))
        cones = cone_mod.TimeVaryingCones(angle_model=lwr, reference=model,
                                          angle_floor=float(spec["floor"]))
        start = np.asarray(payload["start"], dtype=float)
        meta = dict(payload.get("meta", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"model file {path} is malformed: {exc}") from None
    return ModelBundle(model=model, cones=cones, start=start, meta=meta)
