"""Shared fixtures: synthetic demo sets and fitted models are
session-scoped since several test modules reuse them."""

import numpy as np
import pytest

from safeflow import cones, dataset, ds, model_io, so3, synthetic


@pytest.fixture(scope="session")
def corner_set():
    return synthetic.make_demo_set("corner", seed=7)


@pytest.fixture(scope="session")
def corner_model(corner_set):
    xi, _ = ds.prepare_tangent_data(corner_set)
    gmm = ds.fit_gmm(xi, n_components=8, seed=0)
    return ds.fit_system_matrices(corner_set, gmm)


@pytest.fixture(scope="session")
def corner_cones(corner_set, corner_model):
    res = dataset.resample_by_distance(corner_set, m=60)
    model = cones.learn_cone_angles(res, corner_set.goal)
    return cones.TimeVaryingCones(angle_model=model, reference=corner_model)


@pytest.fixture(scope="session")
def zigzag_set():
    return synthetic.make_demo_set("zigzag", seed=11)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corner_bundle(corner_model, corner_cones, corner_set):
    start = so3.tangent_mean([d.rotations[0] for d in corner_set.demos])
    return model_io.ModelBundle(model=corner_model, cones=corner_cones,
                                start=start, meta={})


@pytest.fixture(scope="session")
def corner_dataset_file(tmp_path_factory, corner_set):
    path = tmp_path_factory.mktemp("data") / "corner.json"
    dataset.save(corner_set, str(path))
    return path
