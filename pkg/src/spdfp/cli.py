"""Command-line harness.

Subcommands: ``synth`` (emit a synthetic problem to files), ``truth``
(compute and cache ground truth), ``run`` (execute an experiment config),
``bound-check`` (verify the recursion decay bound on a parameter grid).
"""

import argparse
import sys

from spdfp import harness
from spdfp.rates import RecursionParams, lemma_bound, simulate_recursion


def _cmd_synth(args):
    spec = harness.synth_fused_lasso(n=args.n, d=args.d,
                                     perturb_frac=args.perturb_frac,
                                     noise_sd=args.noise_sd, seed=args.seed,
                                     mu=args.mu, nu=args.nu)
    path = harness.save_problem(spec, args.out)
    print(f"wrote {path} (A: {spec.n}x{spec.dim}, B: {spec.B.n_rows}x{spec.B.n_cols})")
    return 0


def _cmd_truth(args):
    spec = harness.resolve_problem(args.problem)
    gt = harness.compute_ground_truth(spec, iters=args.iters)
    out = args.out or (args.problem + ".truth.npz")
    harness.save_ground_truth(gt, out)
    print(f"wrote {out}: objective={gt.objective_star!r} residual={gt.residual:.3e} "
          f"(gamma={gt.gamma:.4g}, lambda={gt.lam:.4g}, {gt.iterations} iterations)")
    return 0


def _cmd_run(args):
    cfg = harness.parse_experiment_config(args.config)
    rows, means = harness.run_experiment(cfg)
    print(f"wrote {rows}")
    print(f"wrote {means}")
    return 0


def _cmd_bound_check(args):
    alphas = [float(x) for x in args.alphas.split(",")]
    cs = [float(x) for x in args.cs.split(",")]
    taus = [float(x) for x in args.taus.split(",")]
    s_inits = [float(x) for x in args.s_inits.split(",")]
    failures = 0
    for alpha in alphas:
        for c in cs:
            for tau in taus:
                for s_init in s_inits:
                    params = RecursionParams(alpha=alpha, c=c, tau=tau, s_init=s_init)
                    s = simulate_recursion(params, args.k_max)
                    k_start = 2 * params.k0 if alpha == 1.0 else max(2 * params.k0, 3)
                    bad = 0
                    worst = 0.0
                    for k in range(k_start, args.k_max + 1):
                        gap = s[k - 1] - lemma_bound(params, k)
                        if gap > 0:
                            bad += 1
                            worst = max(worst, gap)
                    tag = "PASS" if bad == 0 else f"FAIL ({bad} k's, worst excess {worst:.3e})"
                    print(f"alpha={alpha} c={c} tau={tau} s_init={s_init} "
                          f"k0={params.k0}: {tag}")
                    failures += bad
    print(f"total violations: {failures}")
    return 0 if failures == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="spdfp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic fused-lasso problem")
    p.add_argument("--out", required=True, help="base path for the emitted files")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--perturb-frac", type=float, default=0.05)
    p.add_argument("--noise-sd", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=0.1, help="weight on ||Bx||_1")
    p.add_argument("--nu", type=float, default=0.0, help="weight on the l2 term")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("truth", help="compute and cache the reference optimum")
    p.add_argument("--problem", required=True, help="path to a .problem file")
    p.add_argument("--iters", type=int, default=harness.DEFAULT_TRUTH_ITERS)
    p.add_argument("--out", default=None, help="cache path (default <problem>.truth.npz)")
    p.set_defaults(func=_cmd_truth)

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bound-check", help="verify the recursion decay bound on a grid")
    p.add_argument("--alphas", default="0.3,0.6,0.9,1.0")
    p.add_argument("--cs", default="0.5,2")
    p.add_argument("--taus", default="0.1,1")
    p.add_argument("--s-inits", default="0,1")
    p.add_argument("--k-max", type=int, default=5000)
    p.set_defaults(func=_cmd_bound_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
