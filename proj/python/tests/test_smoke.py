import json

import numpy as np
import pytest

import rmpfusion as rf


def test_fixture_names():
    assert set(rf.fixture_names()) >= {"2d1level", "2d2level", "arm"}


def test_tree_round_trip():
    tree = rf.Tree.fixture("2d2level", "learner")
    again = rf.Tree.from_json(tree.to_json())
    assert again.hash() == tree.hash()
    assert tree.param_count == 388
    assert tree.root_dim == 2


def test_expert_action_and_lyapunov():
    tree = rf.Tree.fixture("2d1level")
    policy = rf.Policy.from_tree(tree)
    params = policy.initial_params(0)
    aux = np.zeros(tree.aux_dim)
    aux[2:4] = [5.0, 5.0]
    aux[4] = 0.5
    a = policy.act([1.0, 0.0], [0.0, 0.0], aux, params)
    assert a.shape == (2,)
    assert a[0] < 0.0
    assert policy.lyapunov([1.0, 0.0], [0.0, 0.0], aux, params) > 0.0


def test_rollout_reaches_goal():
    tree = rf.Tree.fixture("2d1level")
    policy = rf.Policy.from_tree(tree)
    env = {
        "schema": rf.SCHEMA_VERSION,
        "kind": "environment",
        "env_kind": "point2d",
        "goal": [0.0, 0.0],
        "obstacles": [{"center": [5.0, 5.0], "radius": 0.5}],
        "lower": [-6.0, -6.0],
        "upper": [6.0, 6.0],
    }
    traj = rf.rollout(policy, policy.initial_params(0), env, [2.0, -1.0], [0.0, 0.0])
    assert traj["goal_reached"]
    assert not traj["collision"]
    assert np.all(np.diff(traj["v"]) <= 1e-9)


def test_unstructured_policy():
    policy = rf.Policy.unstructured(2, 8, [16, 12])
    params = policy.initial_params(1)
    assert len(params) == policy.param_count == 438
    assert np.isnan(policy.lyapunov(np.zeros(2), np.zeros(2), np.zeros(8), params))


def test_verify_suite():
    r = rf.verify("decomposition", cases=5)
    assert r["passed"]
    assert r["worst"] <= r["tolerance"]


def test_errors_are_typed():
    with pytest.raises(rf.ConfigError):
        rf.Tree.fixture("nonsense")
    with pytest.raises(rf.Error):
        rf.Tree.from_json(json.dumps({"schema": 1}))
