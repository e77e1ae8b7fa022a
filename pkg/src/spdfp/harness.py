"""Experiment harness: synthetic problems, dataset I/O, ground truth, CSV runs.

File formats
------------
* LIBSVM text, one sample per line: ``label idx:val idx:val ...`` with
  1-based feature indices; blank lines are skipped.
* Coordinate-list text for operator matrices: ``row col value`` per line,
  0-based, optionally preceded by a ``# shape R C`` line (written by
  ``save_matrix``) so empty trailing rows survive a round trip.
* Problem descriptor: flat ``key = value`` text naming the loss, weights and
  the data/operator files.
* Run output: RFC-4180-style CSV, one row per (solver, repetition, epoch),
  plus a second CSV of per-epoch means across repetitions. Leading ``#``
  lines record the experiment and solver parameters.
"""

import csv
import os
import re
import warnings
from dataclasses import dataclass

import numpy as np

from spdfp.problem import Dataset, ProblemSpec, objective_value
from spdfp.prox import ProxSpec
from spdfp.solvers import (
    AdmmConfig,
    ConstantSchedule,
    Reference,
    SolverConfig,
    StepSchedule,
    check_lambda,
    fixed_point_residual,
    initial_state,
    pdfp_step,
    run_solver,
)
from spdfp.sparse import SparseMatrix, build_difference_matrix, estimate_spectrum

DEFAULT_TRUTH_ITERS = 3000
DEFAULT_LAMBDA_FRACTION = 0.9


# ---------------------------------------------------------------------------
# synthetic problems

def synth_fused_lasso(n, d, perturb_frac, noise_sd, seed, mu=0.1, nu=0.0):
    """Gaussian design least squares with an l1 penalty on successive
    differences.

    A is n x d standard normal; the generating coefficients are all ones
    with a floor(perturb_frac * d)-subset perturbed by unit Gaussian noise;
    b = A x0 + eps with eps ~ N(0, noise_sd^2).
    """
    if n < 2 or d < 2:
        raise ValueError("need n >= 2 and d >= 2")
    if not 0 <= perturb_frac <= 1:
        raise ValueError("perturb_frac must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    x0 = np.ones(d)
    n_perturb = int(perturb_frac * d)
    if n_perturb:
        idx = rng.choice(d, size=n_perturb, replace=False)
        x0[idx] += rng.standard_normal(n_perturb)
    b = A @ x0 + noise_sd * rng.standard_normal(n)
    dataset = Dataset(samples=SparseMatrix.from_dense(A), labels=b)
    return ProblemSpec(loss="square", dataset=dataset, l2_weight=nu,
                       composite_weight=mu, B=build_difference_matrix(d))


# ---------------------------------------------------------------------------
# LIBSVM text format

def load_libsvm(path, n_features=None):
    """Parse a LIBSVM text file into a Dataset (1-based feature indices)."""
    labels = []
    rows, cols, vals = [], [], []
    max_col = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad label {parts[0]!r}") from None
            i = len(labels)
            labels.append(label)
            for tok in parts[1:]:
                m = re.fullmatch(r"(\d+):([^\s:]+)", tok)
                if not m:
                    raise ValueError(f"{path}:{lineno}: bad feature token {tok!r}")
                j = int(m.group(1))
                if j < 1:
                    raise ValueError(f"{path}:{lineno}: indices are 1-based, got {j}")
                try:
                    v = float(m.group(2))
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad value in {tok!r}") from None
                rows.append(i)
                cols.append(j - 1)
                vals.append(v)
                max_col = max(max_col, j)
    if not labels:
        raise ValueError(f"{path}: no samples found")
    dim = n_features if n_features is not None else max_col
    if dim < max_col:
        raise ValueError(f"{path}: feature index {max_col} exceeds n_features={dim}")
    samples = SparseMatrix.from_coo(len(labels), dim, rows, cols, vals)
    return Dataset(samples=samples, labels=np.array(labels))


def save_libsvm(dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        A = dataset.samples
        for i in range(A.n_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            toks = [repr(float(dataset.labels[i]))]
            toks += [f"{j + 1}:{float(v)!r}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi])]
            fh.write(" ".join(toks) + "\n")


# ---------------------------------------------------------------------------
# operator matrices as coordinate-list text

def save_matrix(M, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shape {M.n_rows} {M.n_cols}\n")
        rows, cols, vals = M.entries()
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{r} {c} {float(v)!r}\n")


def load_matrix(path, n_rows=None, n_cols=None):
    rows, cols, vals = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#\s*shape\s+(\d+)\s+(\d+)", line)
                if m:
                    n_rows = n_rows if n_rows is not None else int(m.group(1))
                    n_cols = n_cols if n_cols is not None else int(m.group(2))
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'row col value'")
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            vals.append(float(parts[2]))
    if n_rows is None:
        n_rows = max(rows) + 1 if rows else 0
    if n_cols is None:
        n_cols = max(cols) + 1 if cols else 0
    return SparseMatrix.from_coo(n_rows, n_cols, rows, cols, vals)


def build_graph_matrix(dataset, threshold):
    """Feature graph from correlation thresholding: one row e_i - e_j per
    feature pair with |corr(i, j)| > threshold. Zero-variance features are
    excluded with a warning."""
    if not 0 <= threshold < 1:
        raise ValueError("threshold must lie in [0, 1)")
    X = dataset.samples.to_dense()
    std = X.std(axis=0)
    ok = std > 0
    if not np.all(ok):
        warnings.warn(f"excluding {int(np.sum(~ok))} zero-variance feature(s) "
                      "from the correlation graph")
    d = X.shape[1]
    rows, cols, vals = [], [], []
    r = 0
    live = np.flatnonzero(ok)
    if len(live) >= 2:
        Xc = (X[:, live] - X[:, live].mean(axis=0)) / std[live]
        corr = (Xc.T @ Xc) / X.shape[0]
        for a in range(len(live)):
            for b in range(a + 1, len(live)):
                if abs(corr[a, b]) > threshold:
                    rows += [r, r]
                    cols += [int(live[a]), int(live[b])]
                    vals += [1.0, -1.0]
                    r += 1
    return SparseMatrix.from_coo(r, d, rows, cols, vals)


# ---------------------------------------------------------------------------
# problem descriptors

def save_problem(spec, base_path):
    """Write <base>.problem, <base>.libsvm and <base>.B.txt."""
    base = str(base_path)
    save_libsvm(spec.dataset, base + ".libsvm")
    save_matrix(spec.B, base + ".B.txt")
    with open(base + ".problem", "w", encoding="utf-8") as fh:
        fh.write(f"loss = {spec.loss}\n")
        fh.write(f"l2_weight = {spec.l2_weight!r}\n")
        fh.write(f"composite_weight = {spec.composite_weight!r}\n")
        fh.write(f"data = {os.path.basename(base)}.libsvm\n")
        fh.write(f"b_matrix = {os.path.basename(base)}.B.txt\n")
    return base + ".problem"


def load_problem(path):
    kv = _read_kv(path)
    for key in ("loss", "data", "b_matrix"):
        if key not in kv:
            raise ValueError(f"{path}: missing problem key {key!r}")
    here = os.path.dirname(os.path.abspath(path))
    dataset = load_libsvm(os.path.join(here, kv["data"]))
    B = load_matrix(os.path.join(here, kv["b_matrix"]))
    return ProblemSpec(loss=kv["loss"], dataset=dataset,
                       l2_weight=float(kv.get("l2_weight", 0.0)),
                       composite_weight=float(kv.get("composite_weight", 0.0)),
                       B=B)


def _read_kv(path):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


# ---------------------------------------------------------------------------
# ground truth

@dataclass(frozen=True)
class GroundTruth:
    """Reference optimum from a long batch run.

    v_star is on the subgradient dual scale (divide the final PDFP dual by
    gamma/lambda); v_star_pdfp keeps the raw PDFP dual. The fixed-point
    residual of the final pair is the quality certificate.
    """

    x_star: np.ndarray
    v_star: np.ndarray
    v_star_pdfp: np.ndarray
    objective_star: float
    residual: float
    gamma: float
    lam: float
    iterations: int

    def reference(self):
        return Reference(x_star=self.x_star, v_star=self.v_star,
                         objective_star=self.objective_star)


def default_gamma(spec, rho_max_data=None):
    """1 / (rho_max(A A^T)/n + nu): a safe batch step for the smooth part."""
    if rho_max_data is None:
        rho_max_data = estimate_spectrum(spec.dataset.samples).rho_max
    return 1.0 / (rho_max_data / spec.n + spec.l2_weight)


def default_lambda(spec, fraction=DEFAULT_LAMBDA_FRACTION, rho_max=None):
    if rho_max is None:
        rho_max = estimate_spectrum(spec.B).rho_max
    return fraction / rho_max


def prox_for(spec):
    if spec.composite_weight > 0:
        return ProxSpec(kind="l1", weight=spec.composite_weight)
    return ProxSpec(kind="zero", weight=0.0)


def compute_ground_truth(spec, prox_spec=None, cfg=None, iters=DEFAULT_TRUTH_ITERS):
    """Run PDFP for a fixed iteration budget and certify the result."""
    if prox_spec is None:
        prox_spec = prox_for(spec)
    if cfg is None:
        cfg = SolverConfig(schedule=ConstantSchedule(default_gamma(spec)),
                           lam=default_lambda(spec), p=spec.n)
    check_lambda(cfg, spec.B)
    state = initial_state(spec, gamma1=cfg.schedule.c)
    for _ in range(iters):
        state = pdfp_step(spec, prox_spec, cfg, state)
    gamma, lam = cfg.schedule.c, cfg.lam
    res = fixed_point_residual(spec, prox_spec, gamma, lam, state.x, state.v)
    return GroundTruth(x_star=state.x, v_star=(lam / gamma) * state.v,
                       v_star_pdfp=state.v,
                       objective_star=objective_value(spec, state.x),
                       residual=res, gamma=gamma, lam=lam, iterations=iters)


def save_ground_truth(gt, path):
    np.savez(path, x_star=gt.x_star, v_star=gt.v_star, v_star_pdfp=gt.v_star_pdfp,
             objective_star=gt.objective_star, residual=gt.residual,
             gamma=gt.gamma, lam=gt.lam, iterations=gt.iterations)


def load_ground_truth(path):
    z = np.load(path)
    return GroundTruth(x_star=z["x_star"], v_star=z["v_star"],
                       v_star_pdfp=z["v_star_pdfp"],
                       objective_star=float(z["objective_star"]),
                       residual=float(z["residual"]), gamma=float(z["gamma"]),
                       lam=float(z["lam"]), iterations=int(z["iterations"]))


# ---------------------------------------------------------------------------
# experiments

@dataclass(frozen=True)
class SolverEntry:
    """One solver clause of an experiment: kind plus its parameters."""

    kind: str
    label: str
    params: dict


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    solvers: tuple
    repetitions: int
    epochs: int
    output: str
    master_seed: int

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")


_SOLVER_RE = re.compile(r"(\w+)\s*\(([^)]*)\)")


def parse_solver_list(text):
    entries = []
    for m in _SOLVER_RE.finditer(text):
        kind = m.group(1)
        params = {}
        body = m.group(2).strip()
        if body:
            for item in body.split(","):
                if "=" not in item:
                    raise ValueError(f"solvers: expected key=value, got {item!r}")
                k, _, v = item.partition("=")
                params[k.strip()] = v.strip()
        label = params.pop("label", kind)
        entries.append(SolverEntry(kind=kind, label=label, params=params))
    if not entries:
        raise ValueError("solvers: no solver clauses found")
    return tuple(entries)


def parse_experiment_config(path):
    kv = _read_kv(path)
    required = ("problem", "solvers", "repetitions", "epochs", "output", "master_seed")
    for key in required:
        if key not in kv:
            raise ValueError(f"{path}: missing config key {key!r}")
    for key in kv:
        if key not in required:
            raise ValueError(f"{path}: unknown config key {key!r}")
    base = os.path.dirname(os.path.abspath(path))
    problem = kv["problem"]
    if not problem.startswith("synth:"):
        problem = os.path.join(base, problem)
    output = kv["output"]
    if not os.path.isabs(output):
        output = os.path.join(base, output)
    return ExperimentConfig(problem=problem,
                            solvers=parse_solver_list(kv["solvers"]),
                            repetitions=int(kv["repetitions"]),
                            epochs=int(kv["epochs"]),
                            output=output,
                            master_seed=int(kv["master_seed"]))


def resolve_problem(source):
    """A problem source is 'synth:key=val,...' or a path to a .problem file."""
    if isinstance(source, ProblemSpec):
        return source
    if source.startswith("synth:"):
        params = {}
        for item in source[len("synth:"):].split(","):
            k, _, v = item.partition("=")
            params[k.strip()] = v.strip()
        return synth_fused_lasso(
            n=int(params.get("n", 1000)), d=int(params.get("d", 50)),
            perturb_frac=float(params.get("perturb_frac", 0.05)),
            noise_sd=float(params.get("noise_sd", 0.01)),
            seed=int(params.get("seed", 0)),
            mu=float(params.get("mu", 0.1)), nu=float(params.get("nu", 0.0)))
    return load_problem(source)


def _float_or_auto(value, auto):
    if value == "auto":
        return auto
    return float(value)


def build_solver_configs(entry, spec, rho_max, seed, epochs):
    """Translate a SolverEntry into (SolverConfig, AdmmConfig-or-None)."""
    params = dict(entry.params)
    lam = _float_or_auto(params.pop("lambda", "auto"), DEFAULT_LAMBDA_FRACTION / rho_max)
    p = int(params.pop("p", spec.n))
    stop_tol = float(params.pop("stop_tol", 0.0))
    admm_cfg = None
    if entry.kind == "pdfp":
        gamma = _float_or_auto(params.pop("gamma", "auto"), default_gamma(spec))
        schedule = ConstantSchedule(gamma)
    elif entry.kind in ("spdfp1", "spdfp2"):
        # logistic runs default to the 2/k^0.55 schedule; square-loss runs
        # to 1/k^0.7 (both pilot-tuned, both overridable per clause)
        c_default, a_default = (2.0, 0.55) if spec.loss == "logistic" else (1.0, 0.7)
        schedule = StepSchedule(c=float(params.pop("c", c_default)),
                                alpha=float(params.pop("alpha", a_default)))
    elif entry.kind == "stoc_admm":
        beta = float(params.pop("beta", 1.0))
        zc = float(params.pop("zeta_c", 1.0))
        za = float(params.pop("zeta_alpha", 0.5))
        zeta = ConstantSchedule(zc) if za == 0 else StepSchedule(c=zc, alpha=za)
        admm_cfg = AdmmConfig(beta_tilde=beta, zeta_schedule=zeta)
        schedule = StepSchedule(c=1.0, alpha=1.0)  # unused by the ADMM steps
    else:
        raise ValueError(f"unknown solver kind {entry.kind!r}")
    if params:
        raise ValueError(f"solver {entry.label}: unknown parameter(s) {sorted(params)}")
    cfg = SolverConfig(schedule=schedule, lam=lam, p=p, seed=seed,
                       max_epochs=epochs, stop_tolerance=stop_tol)
    return cfg, admm_cfg


CSV_COLUMNS = ("solver", "seed", "epoch", "wall_time_s", "objective",
               "rel_obj_error", "iterate_sq_error", "a_k")


def _fmt(value):
    return "" if value is None else repr(float(value)) if isinstance(value, float) else str(value)


def run_experiment(cfg, ground_truth=None):
    """Execute every (solver, repetition) run and write the two CSV files.

    Returns (rows_path, mean_path). Data columns are deterministic given
    the master seed; the wall-time column is not.
    """
    spec = resolve_problem(cfg.problem)
    prox_spec = prox_for(spec)
    rho_max = estimate_spectrum(spec.B).rho_max

    if ground_truth is None:
        truth_cache = (cfg.problem + ".truth.npz"
                       if not cfg.problem.startswith("synth:") else None)
        if truth_cache and os.path.exists(truth_cache):
            ground_truth = load_ground_truth(truth_cache)
        else:
            ground_truth = compute_ground_truth(spec)
    reference = ground_truth.reference()

    rep_seeds = [int(s) for s in np.random.SeedSequence(cfg.master_seed).generate_state(
        cfg.repetitions, dtype=np.uint64) >> 1]

    header_lines = [f"# problem={cfg.problem} repetitions={cfg.repetitions} "
                    f"epochs={cfg.epochs} master_seed={cfg.master_seed}",
                    f"# truth: iterations={ground_truth.iterations} "
                    f"residual={ground_truth.residual!r} "
                    f"objective={ground_truth.objective_star!r}"]
    all_records = []
    for entry in cfg.solvers:
        for rep, seed in enumerate(rep_seeds):
            run_cfg, admm_cfg = build_solver_configs(entry, spec, rho_max, seed, cfg.epochs)
            recs = run_solver(entry.kind, spec, prox_spec, run_cfg,
                              admm_cfg=admm_cfg, reference=reference,
                              rho_max=rho_max, name=entry.label)
            all_records.append((entry.label, rep, recs))
            if rep == 0:
                raw = " ".join(f"{k}={v}" for k, v in sorted(entry.params.items())
                               if k not in ("lambda", "p"))
                header_lines.append(
                    f"# solver {entry.label}: kind={entry.kind}"
                    + (f" {raw}" if raw else "")
                    + f" lambda={run_cfg.lam!r} p={run_cfg.p}")

    rows_path = cfg.output + ".csv"
    mean_path = cfg.output + "_mean.csv"
    os.makedirs(os.path.dirname(os.path.abspath(rows_path)), exist_ok=True)

    with open(rows_path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for label, rep, recs in all_records:
            for r in recs:
                writer.writerow([r.solver, r.seed, r.epoch, _fmt(r.wall_time),
                                 _fmt(r.objective), _fmt(r.rel_obj_error),
                                 _fmt(r.iterate_sq_error), _fmt(r.a_k)])

    with open(mean_path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(("solver", "epoch", "wall_time_s", "objective",
                         "rel_obj_error", "iterate_sq_error", "a_k"))
        for entry in cfg.solvers:
            label = entry.label
            groups = [recs for lab, _, recs in all_records if lab == label]
            for e in range(len(groups[0])):
                rows = [g[e] for g in groups]
                def mean(attr):
                    vals = [getattr(r, attr) for r in rows]
                    return None if any(v is None for v in vals) else float(np.mean(vals))
                writer.writerow([label, rows[0].epoch, _fmt(mean("wall_time")),
                                 _fmt(mean("objective")), _fmt(mean("rel_obj_error")),
                                 _fmt(mean("iterate_sq_error")), _fmt(mean("a_k"))])
    return rows_path, mean_path
