"""Command-line front end: learn, analyze, replicability, pselect, synthetic."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from . import io
from .analysis import (
    group_energy_analysis,
    positive_negative_protocol,
    replicability_split,
    replicability_test,
)
from .graph import GraphError, build_laplacian, eigensystem, mean_curve, reconstruction_error_curve, suggest_p
from .rotations import run_synthetic_experiment
from .solver import ConvergenceError, SolverConfig, arithmetic_mean_harmonics, learn_common_harmonics, pseudo_mean_harmonics

log = logging.getLogger("stiefel_harmonics")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_CONVERGENCE = 5
EXIT_ACCEPTANCE = 6

DEFAULT_P = 60


def _solver_config(args, n: int) -> SolverConfig:
    p = args.p if args.p is not None else min(DEFAULT_P, n)
    if p > n:
        raise ValueError(f"--p {p} exceeds the node count {n}")
    return SolverConfig(
        p=p, lam=args.lam, gamma=args.gamma, eps1=args.eps1, eps2=args.eps2,
        eps_outer=args.eps_outer, max_gpi_iter=args.max_gpi_iters,
        max_weiszfeld_iter=args.max_weiszfeld_iters, max_outer_iter=args.max_iters,
        strict_paper=args.strict_paper, threads=args.threads, inner=args.inner,
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_learn(args) -> int:
    manifest = io.read_manifest(args.manifest)
    mats = io.load_cohort(manifest)
    n = mats[0].shape[0]
    cfg = _solver_config(args, n)
    out = _out_dir(args)
    log.info("learning %d common harmonics from %d networks (n=%d)", cfg.p, len(mats), n)
    model = learn_common_harmonics(mats, cfg)
    native = [eigensystem(build_laplacian(W), cfg.p).vectors for W in mats]
    _, arith_dev = arithmetic_mean_harmonics(native)
    pseudo = pseudo_mean_harmonics(mats, cfg.p)

    files = {"common": "common.txt", "pseudo_mean": "pseudo_mean.txt",
             "cost_trace": "cost_trace.tsv", "individuals": {}}
    io.write_matrix(out / files["common"], model.common)
    io.write_matrix(out / files["pseudo_mean"], pseudo)
    for subject, Phi in zip(manifest.subjects, model.individuals):
        rel = f"individuals/{subject}.txt"
        io.write_matrix(out / rel, Phi)
        files["individuals"][subject] = rel
    io.write_table(out / files["cost_trace"],
                   [{"iteration": i, "cost": c} for i, c in enumerate(model.cost_trace)])
    io.write_json(out / io.MODEL_FILE, {
        "n": n, "p": cfg.p, "subjects": manifest.subjects, "groups": manifest.groups,
        "config": asdict(cfg), "converged": model.converged,
        "outer_iterations": model.outer_iterations,
        "gpi_iterations": model.gpi_iterations,
        "weiszfeld_iterations": model.weiszfeld_iterations,
        "final_cost": model.cost_trace[-1],
        "signals": {k: str(v.resolve()) for k, v in manifest.signals.items()},
        "arithmetic_mean_deviation": arith_dev,
        "files": files,
    })
    print(f"wrote model to {out} (converged={model.converged}, "
          f"outer iterations={model.outer_iterations}, cost={model.cost_trace[-1]:.10g})")
    return EXIT_OK if model.converged else EXIT_CONVERGENCE


def _signal_sources(args, model_meta) -> dict[str, Path]:
    sources = {}
    for spec in args.signals or []:
        if "=" in spec:
            name, path = spec.split("=", 1)
        else:
            name, path = Path(spec).stem, spec
        sources[name] = Path(path)
    if not sources:
        # fall back to the signal tables registered in the learning manifest
        sources = {k: Path(v) for k, v in model_meta.get("signals", {}).items()}
    if not sources:
        raise ValueError("no signal tables given (use --signals or a signal: manifest row)")
    return sources


def cmd_analyze(args) -> int:
    common, meta = io.load_model(args.model)
    basis = common if args.basis == "common" else io.read_matrix(Path(args.model) / meta["files"]["pseudo_mean"])
    out = _out_dir(args)
    summary = {"basis": args.basis, "alpha": args.alpha, "modalities": {}}
    for name, path in _signal_sources(args, meta).items():
        signals = io.read_signal_table(path, n=basis.shape[0])
        groups = tuple(args.groups) if args.groups else None
        result = group_energy_analysis(signals, basis, args.alpha, groups)
        spectra_rows = []
        for s in signals:
            alpha = basis.T @ s.values
            for h, a in enumerate(alpha, start=1):
                spectra_rows.append({"subject": s.subject, "group": s.group, "harmonic": h,
                                     "power": float(a), "energy": float(a * a)})
        io.write_table(out / f"{name}_spectra.tsv", spectra_rows)
        io.write_table(out / f"{name}_harmonics.tsv", [
            {"harmonic": h + 1, "t": float(result.t[h]), "p": float(result.pvalues[h]),
             "fisher": float(result.fisher[h]),
             f"mean_{result.groups[0]}": float(result.mean_a[h]), f"std_{result.groups[0]}": float(result.std_a[h]),
             f"mean_{result.groups[1]}": float(result.mean_b[h]), f"std_{result.groups[1]}": float(result.std_b[h]),
             "significant": int(result.significant[h])}
            for h in range(basis.shape[1])])
        totals = {}
        for s in signals:
            a = basis.T @ s.values
            totals[s.subject] = (s.group, float(a @ a))
        io.write_table(out / f"{name}_total_energy.tsv",
                       [{"subject": k, "group": g, "total_energy": e} for k, (g, e) in totals.items()])
        protocol = positive_negative_protocol(
            signals, basis, args.train_fraction, args.replicates, args.seed,
            alpha_power=args.alpha, alpha_pm=args.alpha_pm, groups=groups)
        io.write_table(out / f"{name}_protocol.tsv", [
            {"replicate": r, "power_significant": len(ps), "pm_significant": len(pm),
             "power_harmonics": " ".join(map(str, ps)), "pm_harmonics": " ".join(map(str, pm))}
            for r, (ps, pm) in enumerate(zip(protocol.power_significant, protocol.pm_significant))],
            fieldnames=["replicate", "power_significant", "pm_significant", "power_harmonics", "pm_harmonics"])
        summary["modalities"][name] = {**result.summary(), "protocol": protocol.summary()}
        print(f"{name}: {len(result.significant_harmonics)} significant harmonics "
              f"{result.significant_harmonics}; total energy p={result.total_p:.3g}")
    io.write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_replicability(args) -> int:
    manifest = io.read_manifest(args.manifest)
    mats = io.load_cohort(manifest)
    cfg = _solver_config(args, mats[0].shape[0])
    if args.base is not None and args.extra is not None:
        base, extra = args.base, args.extra
    else:
        base, extra = replicability_split(len(mats))
    out = _out_dir(args)
    report = replicability_test(mats, cfg, args.replicates, args.seed, base=base, extra=extra, alpha=args.alpha)
    io.write_matrix(out / "failures_manifold.txt", report.manifold_failures)
    io.write_matrix(out / "failures_pseudo.txt", report.pseudo_failures)
    io.write_table(out / "regions.tsv", [
        {"region": i + 1, "manifold": int(a), "pseudo": int(b)}
        for i, (a, b) in enumerate(zip(report.manifold_region_counts, report.pseudo_region_counts))])
    io.write_json(out / "summary.json", {**report.summary(), "base": base, "extra": extra})
    s = report.summary()
    print(f"failures: manifold={s['manifold_failures']} pseudo={s['pseudo_failures']} "
          f"over {report.replicates} replicates")
    return EXIT_OK


def cmd_pselect(args) -> int:
    if args.matrix:
        named = [(Path(args.matrix).stem, io.read_matrix(args.matrix))]
    else:
        manifest = io.read_manifest(args.manifest)
        named = list(zip(manifest.subjects, io.load_cohort(manifest)))
    n = named[0][1].shape[0]
    p_max = args.p_max if args.p_max is not None else n
    if p_max > n:
        raise ValueError(f"--p-max {p_max} exceeds the node count {n}")
    curves = {k: reconstruction_error_curve(build_laplacian(W), p_max) for k, W in named}
    avg = mean_curve(list(curves.values()))
    chosen = suggest_p(avg, args.fraction)
    out = _out_dir(args)
    rows = [{"subject": k, "p": p, "error": e} for k, c in curves.items() for p, e in c]
    rows += [{"subject": "mean", "p": p, "error": e} for p, e in avg]
    io.write_table(out / "reconstruction_error.tsv", rows)
    io.write_json(out / "summary.json", {"p_max": p_max, "fraction": args.fraction, "suggested_p": chosen})
    print(f"suggested p = {chosen}")
    return EXIT_OK


def synthetic_acceptance(reports) -> dict:
    stiefel_ok = all(r.stiefel_deviation <= 1e-8 and r.stiefel_distance <= r.polar_distance + 1e-9
                     for r in reports)
    off_manifold = sum(r.arithmetic_deviation > 1e-3 for r in reports)
    return {"stiefel_ok": stiefel_ok, "arithmetic_off_manifold": off_manifold, "seeds": len(reports),
            "passed": stiefel_ok and off_manifold >= math.ceil(0.95 * len(reports))}


def cmd_synthetic(args) -> int:
    out = _out_dir(args)
    modes = ["random", "fixed"] if args.axis_mode == "both" else [args.axis_mode]
    rows, checks = [], {}
    for mode in modes:
        reports = [run_synthetic_experiment(args.m, args.sigma, args.seed + k, axis_mode=mode)
                   for k in range(args.seeds)]
        rows += [row for r in reports for row in r.rows()]
        checks[mode] = synthetic_acceptance(reports)
        traj = [{"axis_mode": mode, "seed": r.seed, "iteration": i, "total_squared_distance": c}
                for r in reports for i, c in enumerate(r.trajectory)]
        io.write_table(out / f"trajectory_{mode}.tsv", traj)
    io.write_table(out / "synthetic.tsv", rows)
    io.write_json(out / "summary.json", checks)
    # the arithmetic-mean criterion is stated for random axes only
    passed = all(c["stiefel_ok"] for c in checks.values()) and all(
        c["passed"] for mode, c in checks.items() if mode == "random")
    for mode, c in checks.items():
        print(f"{mode} axes: stiefel ok={c['stiefel_ok']}, arithmetic mean off-manifold in "
              f"{c['arithmetic_off_manifold']}/{c['seeds']} seeds")
    return EXIT_OK if passed else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, default=0.01, help="coupling weight (default 0.01)")
    common.add_argument("--gamma", type=float, default=0.01, help="Weiszfeld step size (default 0.01)")
    common.add_argument("--p", type=int, default=None, help="number of harmonics (default min(60, n))")
    common.add_argument("--eps1", type=float, default=1e-8)
    common.add_argument("--eps2", type=float, default=1e-6)
    common.add_argument("--eps-outer", type=float, default=1e-6)
    common.add_argument("--max-iters", type=int, default=100, help="outer iteration cap")
    common.add_argument("--max-gpi-iters", type=int, default=500)
    common.add_argument("--max-weiszfeld-iters", type=int, default=200)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--alpha", type=float, default=0.01, help="significance level (default 0.01)")
    common.add_argument("--strict-paper", action="store_true",
                        help="literal updates: Phi_1 start, fixed steps, no safeguards")
    common.add_argument("--inner", choices=["newton", "gpi"], default="newton",
                        help="per-subject solver: GPI with Newton acceleration or plain GPI")
    common.add_argument("--out", default="out")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="stiefel-harmonics", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", parents=[common], help="learn common harmonic waves")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("analyze", parents=[common], help="harmonic energy statistics")
    p.add_argument("--model", required=True, help="directory written by learn")
    p.add_argument("--signals", nargs="+", help="signal tables, optionally NAME=PATH")
    p.add_argument("--basis", choices=["common", "pseudo"], default="common")
    p.add_argument("--groups", nargs=2, metavar=("A", "B"))
    p.add_argument("--alpha-pm", type=float, default=1e-3)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--replicates", type=int, default=50)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("replicability", parents=[common], help="test/retest resampling")
    p.add_argument("manifest")
    p.add_argument("--replicates", type=int, default=50)
    p.add_argument("--base", type=int)
    p.add_argument("--extra", type=int)
    p.set_defaults(func=cmd_replicability)

    p = sub.add_parser("pselect", parents=[common], help="reconstruction error versus p")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest")
    src.add_argument("--matrix")
    p.add_argument("--p-max", type=int)
    p.add_argument("--fraction", type=float, default=0.01)
    p.set_defaults(func=cmd_pselect)

    p = sub.add_parser("synthetic", parents=[common], help="rotation-mean recovery experiment")
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--sigma", type=float, default=math.pi / 15)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--axis-mode", choices=["random", "fixed", "both"], default="random")
    p.set_defaults(func=cmd_synthetic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except io.EmptyManifestError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (io.CohortError, GraphError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
