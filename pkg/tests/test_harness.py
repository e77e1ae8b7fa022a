import os

import numpy as np
import pytest

from spdfp.harness import (
    ExperimentConfig,
    build_graph_matrix,
    compute_ground_truth,
    default_gamma,
    load_libsvm,
    load_matrix,
    load_problem,
    parse_experiment_config,
    parse_solver_list,
    prox_for,
    run_experiment,
    save_libsvm,
    save_matrix,
    save_problem,
    synth_fused_lasso,
)
from spdfp.problem import Dataset, ProblemSpec, objective_value
from spdfp.sparse import SparseMatrix, identity, stack_identity
from spdfp.solvers import ConstantSchedule, SolverConfig


def read_csv_rows(path, wall_col=3):
    """Rows of a run CSV, skipping the '#' preamble; wall-time column blanked.

    wall_col is 3 for the per-repetition CSV and 2 for the mean CSV.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            cells = line.rstrip("\r\n").split(",")
            if cells and cells[0] != "solver":
                cells[wall_col] = ""  # wall time is exempt from determinism
            rows.append(cells)
    return rows


# ---------------------------------------------------------------------------
# synthetic generator

def test_synth_dimensions_paper_scale():
    spec = synth_fused_lasso(10000, 200, 0.05, 0.01, seed=0)
    assert spec.dataset.samples.shape == (10000, 200)
    assert spec.B.shape == (199, 200)
    assert spec.loss == "square"


def test_synth_dimensions_desk_scale():
    spec = synth_fused_lasso(1000, 50, 0.05, 0.01, seed=0)
    assert spec.dataset.samples.shape == (1000, 50)
    assert spec.B.shape == (49, 50)


def test_synth_seed_determinism():
    s1 = synth_fused_lasso(60, 10, 0.1, 0.05, seed=42)
    s2 = synth_fused_lasso(60, 10, 0.1, 0.05, seed=42)
    np.testing.assert_array_equal(s1.dataset.samples.data, s2.dataset.samples.data)
    np.testing.assert_array_equal(s1.dataset.labels, s2.dataset.labels)
    s3 = synth_fused_lasso(60, 10, 0.1, 0.05, seed=43)
    assert not np.array_equal(s1.dataset.labels, s3.dataset.labels)


def test_synth_validation():
    with pytest.raises(ValueError):
        synth_fused_lasso(10, 5, -0.1, 0.01, seed=0)
    with pytest.raises(ValueError):
        synth_fused_lasso(1, 5, 0.1, 0.01, seed=0)


# ---------------------------------------------------------------------------
# LIBSVM parsing

def test_libsvm_basic_line(tmp_path):
    p = tmp_path / "d.libsvm"
    p.write_text("-1 3:0.5 7:1\n")
    ds = load_libsvm(p)
    assert ds.labels[0] == -1.0
    assert ds.dim == 7
    dense = ds.samples.to_dense()
    assert dense[0, 2] == 0.5 and dense[0, 6] == 1.0
    assert np.count_nonzero(dense) == 2


def test_libsvm_blank_lines_skipped(tmp_path):
    p = tmp_path / "d.libsvm"
    p.write_text("\n1 1:2.0\n\n-1 2:3.0\n\n")
    ds = load_libsvm(p)
    assert ds.n == 2


def test_libsvm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    M = SparseMatrix.from_coo(5, 8, rng.integers(0, 5, 12), rng.integers(0, 8, 12),
                              rng.standard_normal(12))
    ds = Dataset(samples=M, labels=rng.standard_normal(5))
    p = tmp_path / "rt.libsvm"
    save_libsvm(ds, p)
    back = load_libsvm(p, n_features=8)
    np.testing.assert_array_equal(back.labels, ds.labels)
    np.testing.assert_array_equal(back.samples.to_dense(), M.to_dense())


def test_libsvm_errors(tmp_path):
    p = tmp_path / "bad.libsvm"
    p.write_text("1 2:0.5\nx 1:1\n")
    with pytest.raises(ValueError, match=":2"):
        load_libsvm(p)
    p.write_text("1 0:0.5\n")
    with pytest.raises(ValueError, match="1-based"):
        load_libsvm(p)
    p.write_text("1 2:a\n")
    with pytest.raises(ValueError, match=":1"):
        load_libsvm(p)
    p.write_text("\n\n")
    with pytest.raises(ValueError, match="no samples"):
        load_libsvm(p)


# ---------------------------------------------------------------------------
# matrix files and graph construction

def test_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    M = SparseMatrix.from_coo(4, 6, [0, 2, 3], [1, 5, 0], [1.5, -2.25, 3.0])
    p = tmp_path / "m.txt"
    save_matrix(M, p)
    back = load_matrix(p)
    assert back.shape == (4, 6)  # shape survives despite empty row 1
    np.testing.assert_array_equal(back.to_dense(), M.to_dense())


def test_graph_matrix_perfect_pair():
    rng = np.random.default_rng(2)
    base = rng.standard_normal(40)
    X = np.column_stack([base, base * 2.0, rng.standard_normal(40)])
    ds = Dataset(samples=SparseMatrix.from_dense(X), labels=np.zeros(40))
    G = build_graph_matrix(ds, 0.999)
    assert G.n_rows == 1  # only the perfectly correlated pair
    np.testing.assert_array_equal(G.to_dense()[0], [1.0, -1.0, 0.0])


def test_graph_matrix_high_threshold_gives_identity_stack():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((50, 4))  # weakly correlated columns
    ds = Dataset(samples=SparseMatrix.from_dense(X), labels=np.zeros(50))
    corr = np.corrcoef(X, rowvar=False)
    assert np.abs(corr[~np.eye(4, dtype=bool)]).max() < 0.95
    G_empty = build_graph_matrix(ds, 0.95)
    # threshold above max |correlation|: B = [G; I] degenerates to the identity
    assert G_empty.n_rows == 0
    np.testing.assert_array_equal(stack_identity(G_empty).to_dense(), np.eye(4))


def test_graph_matrix_zero_variance_warning():
    X = np.column_stack([np.ones(10), np.arange(10.0), np.arange(10.0) * 3])
    ds = Dataset(samples=SparseMatrix.from_dense(X), labels=np.zeros(10))
    with pytest.warns(UserWarning, match="zero-variance"):
        G = build_graph_matrix(ds, 0.5)
    assert G.n_rows == 1


def test_graph_matrix_invalid_threshold():
    ds = Dataset(samples=identity(3), labels=np.zeros(3))
    with pytest.raises(ValueError):
        build_graph_matrix(ds, 1.0)


# ---------------------------------------------------------------------------
# problem files

def test_problem_round_trip(tmp_path):
    spec = synth_fused_lasso(30, 8, 0.1, 0.02, seed=5, mu=0.3, nu=0.1)
    base = tmp_path / "prob"
    path = save_problem(spec, base)
    back = load_problem(path)
    assert back.loss == "square"
    assert back.l2_weight == 0.1 and back.composite_weight == 0.3
    np.testing.assert_array_equal(back.dataset.samples.to_dense(),
                                  spec.dataset.samples.to_dense())
    np.testing.assert_array_equal(back.B.to_dense(), spec.B.to_dense())


# ---------------------------------------------------------------------------
# ground truth

def test_ground_truth_trivial_problem():
    # pure quadratic with b = 0: x* = 0 from the zero start after any steps
    ds = Dataset(samples=identity(4), labels=np.zeros(4))
    spec = ProblemSpec(loss="square", dataset=ds, l2_weight=0.0,
                       composite_weight=0.0, B=identity(4))
    gt = compute_ground_truth(spec, iters=3)
    np.testing.assert_array_equal(gt.x_star, np.zeros(4))
    assert gt.residual == 0.0


def test_ground_truth_certificate_and_minimality():
    spec = synth_fused_lasso(200, 20, 0.05, 0.01, seed=6)
    gt = compute_ground_truth(spec, iters=2000)
    assert gt.residual <= 1e-8
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = gt.x_star + rng.standard_normal(20) * rng.uniform(0.01, 2.0)
        assert objective_value(spec, x) >= gt.objective_star - 1e-12


# ---------------------------------------------------------------------------
# experiment runs

def write_config(tmp_path, problem_line, solvers, reps=2, epochs=2, seed=11):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(
        f"problem = {problem_line}\n"
        f"solvers = {solvers}\n"
        f"repetitions = {reps}\n"
        f"epochs = {epochs}\n"
        f"output = out/run\n"
        f"master_seed = {seed}\n")
    return cfg


def test_solver_defaults_follow_loss(tmp_path):
    from spdfp.harness import SolverEntry, build_solver_configs

    rng = np.random.default_rng(12)
    A = rng.standard_normal((30, 6))
    y = rng.choice([-1.0, 1.0], 30)
    ds = Dataset(samples=SparseMatrix.from_dense(A), labels=y)
    logistic = ProblemSpec(loss="logistic", dataset=ds, l2_weight=0.1,
                           composite_weight=0.1, B=identity(6))
    entry = SolverEntry(kind="spdfp2", label="s", params={})
    cfg, _ = build_solver_configs(entry, logistic, rho_max=1.0, seed=0, epochs=1)
    assert (cfg.schedule.c, cfg.schedule.alpha) == (2.0, 0.55)
    square = synth_fused_lasso(30, 6, 0.1, 0.01, seed=1)
    cfg, _ = build_solver_configs(entry, square, rho_max=1.0, seed=0, epochs=1)
    assert (cfg.schedule.c, cfg.schedule.alpha) == (1.0, 0.7)
    entry2 = SolverEntry(kind="spdfp2", label="s", params={"c": "3", "alpha": "0.9"})
    cfg, _ = build_solver_configs(entry2, logistic, rho_max=1.0, seed=0, epochs=1)
    assert (cfg.schedule.c, cfg.schedule.alpha) == (3.0, 0.9)


def test_parse_solver_list():
    entries = parse_solver_list(
        "spdfp2(alpha=0.7,c=1.0,p=10); stoc_admm(beta=30,zeta_c=0.5,p=10,label=admm)")
    assert entries[0].kind == "spdfp2" and entries[0].params["alpha"] == "0.7"
    assert entries[1].label == "admm"
    with pytest.raises(ValueError):
        parse_solver_list("   ")


def test_config_validation_names_offending_field(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("problem = synth:n=20,d=5\nsolvers = pdfp()\nrepetitions = 1\n"
                   "epochs = 1\noutput = o\nmaster_seed = 1\nbogus = 3\n")
    with pytest.raises(ValueError, match="bogus"):
        parse_experiment_config(cfg)
    cfg.write_text("problem = synth:n=20,d=5\nsolvers = pdfp()\n"
                   "epochs = 1\noutput = o\nmaster_seed = 1\n")
    with pytest.raises(ValueError, match="repetitions"):
        parse_experiment_config(cfg)


def test_experiment_zero_epochs_single_row(tmp_path):
    cfg = parse_experiment_config(write_config(
        tmp_path, "synth:n=40,d=8,seed=3", "spdfp2(c=1.0,alpha=0.7,p=8); pdfp()",
        reps=1, epochs=0))
    rows_path, mean_path = run_experiment(cfg)
    rows = read_csv_rows(rows_path)
    assert rows[0][0] == "solver"          # header
    assert len(rows) == 3                  # header + one initial row per solver
    assert {r[2] for r in rows[1:]} == {"0"}


def test_experiment_deterministic_rerun(tmp_path):
    line = "synth:n=60,d=10,seed=4"
    solvers = "spdfp2(c=1.0,alpha=0.7,p=10); stoc_admm(beta=10,zeta_c=0.5,p=10)"
    cfg1 = parse_experiment_config(write_config(tmp_path, line, solvers))
    r1, m1 = run_experiment(cfg1)
    first_rows = read_csv_rows(r1)
    first_means = read_csv_rows(m1, wall_col=2)
    r2, m2 = run_experiment(cfg1)
    assert read_csv_rows(r2) == first_rows
    assert read_csv_rows(m2, wall_col=2) == first_means


def test_experiment_aggregate_means_and_rel_error_floor(tmp_path):
    cfg = parse_experiment_config(write_config(
        tmp_path, "synth:n=60,d=10,seed=5", "spdfp2(c=1.0,alpha=0.7,p=10)",
        reps=3, epochs=4))
    rows_path, mean_path = run_experiment(cfg)
    rows = [r for r in read_csv_rows(rows_path)[1:]]
    means = [r for r in read_csv_rows(mean_path, wall_col=2)[1:]]
    # independent recomputation of the per-epoch mean across repetitions
    for epoch in range(5):
        vals = [float(r[4]) for r in rows if int(r[2]) == epoch]
        agg = [float(m[3]) for m in means if int(m[1]) == epoch]
        assert agg[0] == pytest.approx(np.mean(vals), rel=1e-12, abs=1e-15)
    # relative objective error never dips below the -1e-10 slack
    for r in rows:
        assert float(r[5]) >= -1e-10


def test_experiment_four_alpha_sweep_groups(tmp_path):
    solvers = "; ".join(
        f"spdfp2(c=1.0,alpha={a},p=10,label=a{a})" for a in (0.3, 0.5, 0.7, 1.0))
    cfg = parse_experiment_config(write_config(
        tmp_path, "synth:n=60,d=10,seed=9", solvers, reps=2, epochs=3))
    rows_path, mean_path = run_experiment(cfg)
    rows = read_csv_rows(rows_path)[1:]
    labels = {r[0] for r in rows}
    assert labels == {"a0.3", "a0.5", "a0.7", "a1.0"}
    for lab in labels:
        group = [r for r in rows if r[0] == lab]
        assert len(group) == 2 * 4  # 2 repetitions x (initial + 3 epochs)
    means = read_csv_rows(mean_path, wall_col=2)[1:]
    assert {m[0] for m in means} == labels


def test_experiment_problem_file_and_truth_cache(tmp_path):
    spec = synth_fused_lasso(50, 8, 0.1, 0.02, seed=8)
    prob = save_problem(spec, tmp_path / "p")
    cfg = parse_experiment_config(write_config(tmp_path, "p.problem",
                                               "pdfp(stop_tol=1e-9)",
                                               reps=1, epochs=500))
    rows_path, _ = run_experiment(cfg)
    rows = read_csv_rows(rows_path)
    # pdfp stops early once the residual tolerance is met
    assert len(rows) - 1 < 501
    assert float(rows[-1][5]) <= 1e-5
