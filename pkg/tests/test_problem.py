import numpy as np
import pytest

from spdfp.problem import Dataset, ProblemSpec, objective_value
from spdfp.sparse import SparseMatrix, build_difference_matrix, identity


def make_spec(A, b, loss="square", nu=0.0, mu=0.0, B=None):
    ds = Dataset(samples=SparseMatrix.from_dense(A), labels=np.asarray(b, dtype=float))
    B = identity(A.shape[1]) if B is None else B
    return ProblemSpec(loss=loss, dataset=ds, l2_weight=nu, composite_weight=mu, B=B)


def test_objective_square_hand_value():
    # mean of 0.5*(a_i'x - b_i)^2 with A = I2, b = 0, x = (3, 4)
    spec = make_spec(np.eye(2), [0.0, 0.0])
    assert objective_value(spec, np.array([3.0, 4.0])) == pytest.approx(6.25, abs=1e-15)


def test_objective_zero_input():
    spec = make_spec(np.eye(3), [0.0, 0.0, 0.0])
    assert objective_value(spec, np.zeros(3)) == 0.0


def test_objective_logistic_at_zero_is_log2():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((7, 3))
    b = rng.choice([-1.0, 1.0], 7)
    spec = make_spec(A, b, loss="logistic")
    assert objective_value(spec, np.zeros(3)) == pytest.approx(np.log(2.0), rel=1e-14)


def test_objective_includes_l2_and_composite():
    B = build_difference_matrix(2)
    spec = make_spec(np.eye(2), [0.0, 0.0], nu=2.0, mu=3.0, B=B)
    x = np.array([1.0, -1.0])
    # 0.5*mean(1, 1) + (2/2)*2 + 3*|(-2)| = 0.5 + 2 + 6
    assert objective_value(spec, x) == pytest.approx(8.5, abs=1e-14)


def test_objective_midpoint_convexity():
    rng = np.random.default_rng(1)
    for loss in ("square", "logistic", "hinge"):
        A = rng.standard_normal((12, 4))
        b = rng.choice([-1.0, 1.0], 12) if loss != "square" else rng.standard_normal(12)
        spec = make_spec(A, b, loss=loss, nu=0.3, mu=0.2, B=build_difference_matrix(4))
        for _ in range(25):
            x, y = rng.standard_normal(4), rng.standard_normal(4)
            fx, fy = objective_value(spec, x), objective_value(spec, y)
            fmid = objective_value(spec, 0.5 * (x + y))
            assert fmid <= 0.5 * (fx + fy) + 1e-10


def test_objective_dimension_mismatch():
    spec = make_spec(np.eye(2), [0.0, 0.0])
    with pytest.raises(ValueError):
        objective_value(spec, np.zeros(3))


def test_hinge_logistic_require_pm1_labels():
    A = np.eye(2)
    with pytest.raises(ValueError):
        make_spec(A, [0.5, 1.0], loss="hinge")
    with pytest.raises(ValueError):
        make_spec(A, [2.0, -1.0], loss="logistic")
    make_spec(A, [1.0, -1.0], loss="hinge")  # fine


def test_spec_validation():
    A = np.eye(2)
    with pytest.raises(ValueError):
        make_spec(A, [0.0, 0.0], loss="huber")
    with pytest.raises(ValueError):
        make_spec(A, [0.0, 0.0], nu=-1.0)
    with pytest.raises(ValueError):
        make_spec(A, [0.0, 0.0], B=build_difference_matrix(3))
    with pytest.raises(ValueError):
        Dataset(samples=SparseMatrix.from_dense(A), labels=np.zeros(3))
