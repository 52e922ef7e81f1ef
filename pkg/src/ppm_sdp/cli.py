"""Command-line interface: `ppm-sdp <subcommand>`.

Exit codes for solve-like commands: 0 on rounded success, 2 on rounding
failure, 3 on non-convergence.  `certify` exits 0 iff the certificate
verifies.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import certificate, harness, oracle, sdp, thresholds
from .graph_model import (
    AdversarySpec,
    PlantedPartitionParams,
    apply_adversary,
    read_graph,
    read_labels,
    sample_ppm,
    write_graph,
    write_labels,
)

EXIT_OK = 0
EXIT_ROUNDING_FAILURE = 2
EXIT_NO_CONVERGENCE = 3


def _params_from_args(args) -> PlantedPartitionParams:
    pi = tuple(float(x) for x in args.pi.split(","))
    return PlantedPartitionParams(
        n=args.n, r=len(pi), pi=pi, p_tilde=args.p_tilde, q_tilde=args.q_tilde
    )


def _add_model_args(p):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pi", type=str, required=True, help="comma-separated proportions")
    p.add_argument("--p-tilde", type=float, required=True)
    p.add_argument("--q-tilde", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)


def cmd_sample(args) -> int:
    params = _params_from_args(args)
    g, truth = sample_ppm(params, args.seed)
    write_graph(g, args.out_graph)
    write_labels(truth, args.out_labels)
    print(f"sampled n={g.n} m={g.m} -> {args.out_graph}, {args.out_labels}")
    return EXIT_OK


def cmd_adversary(args) -> int:
    g = read_graph(args.graph)
    truth = read_labels(args.labels)
    with open(args.spec) as f:
        spec = AdversarySpec.from_json(f.read())
    out = apply_adversary(g, truth, spec, args.seed)
    write_graph(out, args.out_graph)
    print(f"adversary {spec.kind}: m {g.m} -> {out.m}")
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.model is not None:
        with open(args.model) as f:
            obj = json.load(f)
        if "q_tilde_matrix" in obj:
            report = thresholds.feasibility_report(
                q_tilde=np.asarray(obj["q_tilde_matrix"], dtype=float),
                pi=np.asarray(obj["pi"], dtype=float),
            )
        else:
            params = PlantedPartitionParams(
                n=obj["n"],
                r=obj["r"],
                pi=tuple(obj["pi"]),
                p_tilde=obj["p_tilde"],
                q_tilde=obj["q_tilde"],
            )
            report = thresholds.feasibility_report(params=params)
    else:
        params = _params_from_args(args)
        report = thresholds.feasibility_report(params=params)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def _solve_common(args, g, r):
    opts = sdp.SolverOptions(tol=args.tol, max_iters=args.max_iters)
    if args.mode == "known":
        sizes = [int(x) for x in args.sizes.split(",")]
        prob = sdp.build_known_sizes(g, sizes)
    else:
        prob = sdp.build_unknown_sizes(g, r, args.omega)
    sol = sdp.solve(prob, opts)
    return sol, opts


def cmd_solve(args) -> int:
    g = read_graph(args.graph)
    r = args.r if args.r else len(args.sizes.split(","))
    sol, opts = _solve_common(args, g, r)
    rounding = sdp.round_to_partition(sol, r, opts.round_tol)
    if args.out_matrix:
        np.savetxt(args.out_matrix, sol.X)
    info = {
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "rounded": rounding.success,
        "max_deviation": rounding.max_deviation,
    }
    print(json.dumps(info, indent=2))
    if not sol.converged:
        return EXIT_NO_CONVERGENCE
    if not rounding.success:
        return EXIT_ROUNDING_FAILURE
    if args.out_labels:
        write_labels(rounding.labels, args.out_labels)
    return EXIT_OK


def cmd_oracle(args) -> int:
    g = read_graph(args.graph)
    if args.mode == "known":
        sizes = [int(x) for x in args.sizes.split(",")]
        result = oracle.mle_known_sizes(g, sizes, max_n=args.max_n)
    else:
        result = oracle.mle_unknown_sizes(g, args.r, args.omega, max_n=args.max_n)
    info = {
        "objective": result.best_objective,
        "is_unique": result.is_unique,
        "labels": list(result.best_labels.labels),
        "ties": len(result.argmax),
    }
    print(json.dumps(info, indent=2))
    if args.out_labels:
        write_labels(result.best_labels, args.out_labels)
    return EXIT_OK


def cmd_certify(args) -> int:
    g = read_graph(args.graph)
    truth = read_labels(args.labels)
    pi = tuple((truth.sizes() / truth.n).tolist())
    params = PlantedPartitionParams(
        n=g.n, r=truth.r, pi=pi, p_tilde=args.p_tilde, q_tilde=args.q_tilde
    )
    cert = certificate.build_certificate(g, truth, params, omega=args.omega)
    report = certificate.verify_certificate(g, truth, cert)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.verified else 1


def _config_from_args(args) -> harness.ExperimentConfig:
    with open(args.config) as f:
        cfg = harness.ExperimentConfig.from_json(f.read())
    print(
        f"grid of {len(cfg.cells())} cells x {cfg.trials} trials "
        f"= {cfg.work_estimate()} runs",
        file=sys.stderr,
    )
    return cfg


def cmd_phase(args) -> int:
    cfg = _config_from_args(args)
    harness.run_phase_diagram(cfg, csv_path=args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    cfg = _config_from_args(args)
    result = harness.run_robustness_suite(cfg, csv_path=args.out)
    print(
        json.dumps(
            {
                "clean_rate": result.clean_rate,
                "adversarial_rate": result.adversarial_rate,
                "violations": result.violations,
            },
            indent=2,
        )
    )
    return EXIT_OK


def cmd_tails(args) -> int:
    params = _params_from_args(args)
    result = harness.tail_exponent_demo(
        params, args.i, args.j, args.trials, seed=args.seed
    )
    out = dict(result.__dict__)
    out["note"] = "demonstration; finite-size corrections are material at desk n"
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_omega_sweep(args) -> int:
    g = read_graph(args.graph)
    omegas = [float(x) for x in args.omegas.split(",")]
    opts = sdp.SolverOptions(tol=args.tol, max_iters=args.max_iters)
    entries = harness.omega_sweep(g, args.r, omegas, opts)
    out = [
        {
            "omega": e.omega,
            "converged": e.converged,
            "is_partition": e.is_partition,
            "labels": list(e.labels.labels) if e.labels else None,
        }
        for e in entries
    ]
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppm-sdp")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample a planted partition graph")
    _add_model_args(p)
    p.add_argument("--out-graph", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("adversary", help="apply a monotone adversary")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--spec", required=True, help="JSON adversary spec")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-graph", required=True)
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("threshold", help="divergence / feasibility report")
    p.add_argument("--model", help="JSON model file")
    p.add_argument("--n", type=int)
    p.add_argument("--pi", type=str)
    p.add_argument("--p-tilde", type=float)
    p.add_argument("--q-tilde", type=float)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("solve", help="solve an SDP and round to a partition")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("known", "unknown"), required=True)
    p.add_argument("--sizes", help="comma-separated community sizes (known mode)")
    p.add_argument("--omega", type=float, help="regularizer (unknown mode)")
    p.add_argument("--r", type=int)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--out-labels")
    p.add_argument("--out-matrix")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="brute-force MLE on tiny instances")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("known", "unknown"), required=True)
    p.add_argument("--sizes")
    p.add_argument("--omega", type=float)
    p.add_argument("--r", type=int)
    p.add_argument("--max-n", type=int, default=oracle.MAX_N)
    p.add_argument("--out-labels")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("certify", help="build and verify the dual certificate")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--p-tilde", type=float, required=True)
    p.add_argument("--q-tilde", type=float, required=True)
    p.add_argument("--omega", type=float)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("phase", help="phase-diagram sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("robustness", help="paired clean/adversarial sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("tails", help="tail-exponent Monte-Carlo demonstration")
    _add_model_args(p)
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--trials", type=int, default=100000)
    p.set_defaults(func=cmd_tails)

    p = sub.add_parser("omega-sweep", help="unknown-sizes sweep over omega")
    p.add_argument("--graph", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--omegas", required=True, help="comma-separated omega grid")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iters", type=int, default=5000)
    p.set_defaults(func=cmd_omega_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
