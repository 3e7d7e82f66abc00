"""Command line driver: ``stopgo solve | verify | enumerate | batch``.

Exit status: 0 success, 1 bad configuration, 2 target not embeddable,
3 duality gap beyond tolerance, 4 monotonicity verdict FAIL, 5 resource or
solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ._numeric import fmt_number
from .config import ExperimentConfig, load_config
from .dual import assemble_dual, check_slackness, contact_set, solve_dual, verify_duality
from .errors import ConfigurationError, ExactSolveError, InfeasibleEmbedding, ResourceError
from .monotonicity import Flavor, enumerate_SG, enumerate_SG_star, verify_MP
from .primal import StoppingFlow, assemble_primal, expected_payoff, solve_primal
from .reports import read_flow, tagged, tree_meta, write_flow, write_nodes, write_summary, write_table
from .walkspace import PathTree, TreeMode, build_tree

log = logging.getLogger("stopgo")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_GAP, EXIT_FAIL, EXIT_RESOURCE = range(6)


def _tree(cfg: ExperimentConfig) -> PathTree:
    return build_tree(cfg.horizon, cfg.tree_mode, cfg.statistic)


def _base_summary(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "command": command,
        "horizon": cfg.horizon,
        "tree": cfg.tree_mode.value,
        "arithmetic": "exact" if cfg.exact else "floating",
        "payoff": cfg.payoff.label,
        "measure": [[x, fmt_number(w, True)] for x, w in zip(cfg.measure.points, cfg.measure.weights)],
        "seed": cfg.seed,
        "P": None,
        "D": None,
        "gap": None,
        "status": None,
        "n_sg_pairs": None,
        "n_violations": None,
    }


def _finish(out: Path, summary: dict, t0: float) -> dict:
    summary["runtime_ms"] = int(round((time.perf_counter() - t0) * 1000))
    write_summary(out / "summary.json", summary)
    return summary


def _write_certificate_files(out: Path, cert, exact: bool):
    meta = tree_meta(cert.tree, exact)
    write_table(out / "lambda.tsv", "lambda", ("value", "lambda"), cert.lam_records(), meta)
    write_table(out / "supermartingale.tsv", "supermartingale", ("node", "S"), cert.S_records(), meta)


def _write_infeasibility(out: Path, summary: dict, err: InfeasibleEmbedding, exact: bool):
    summary["status"] = "INFEASIBLE"
    summary["message"] = str(err)
    cert = err.certificate
    summary["certificate_valid"] = None
    if cert is not None:
        meta = tree_meta(cert.tree, exact)
        write_table(
            out / "infeasibility.tsv",
            "infeasibility",
            ("value", "g"),
            [(str(x), fmt_number(g, exact)) for x, g in sorted(cert.g.items())],
            meta,
        )


def _solve_pair(cfg: ExperimentConfig, tree: PathTree, summary: dict, out: Path):
    """Primal and dual solves; fills the summary. Returns ``(flow, cert, exit)``."""
    try:
        flow, P = solve_primal(assemble_primal(tree, cfg.measure, cfg.payoff), cfg.exact, cfg.lp_tol, cfg.seed)
    except InfeasibleEmbedding as e:
        _write_infeasibility(out, summary, e, cfg.exact)
        if e.certificate is not None:
            summary["certificate_valid"] = e.certificate.check(cfg.measure, 0 if cfg.exact else 1e-7)
        return None, None, EXIT_INFEASIBLE
    cert, D = solve_dual(assemble_dual(tree, cfg.payoff, cfg.measure), cfg.exact, cfg.lp_tol)
    rep = verify_duality(P, D, tol=1e-7, exact=cfg.exact, raise_on_gap=False)
    summary.update(
        P=tagged(P, cfg.exact),
        D=tagged(D, cfg.exact),
        gap=tagged(rep.gap, cfg.exact),
        relative_gap=tagged(rep.relative, False),
        status="OPTIMAL" if rep.ok else "GAP_FAILURE",
        growth_L=tagged(cert.growth, False),
        contact_set_size=len(contact_set(cert, cfg.contact_eps)),
        slackness_ok=check_slackness(flow, cert, cfg.contact_eps).ok,
    )
    write_flow(out / "flow.tsv", flow)
    _write_certificate_files(out, cert, cfg.exact)
    return flow, cert, (EXIT_OK if rep.ok else EXIT_GAP)


def run_solve(cfg: ExperimentConfig) -> tuple[int, dict]:
    t0 = time.perf_counter()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = _base_summary(cfg, "solve")
    _, _, code = _solve_pair(cfg, _tree(cfg), summary, out)
    return code, _finish(out, summary, t0)


def run_verify(cfg: ExperimentConfig, flow_path: str | Path | None = None) -> tuple[int, dict]:
    t0 = time.perf_counter()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = _base_summary(cfg, "verify")
    if cfg.tree_mode is not TreeMode.FULL:
        raise ConfigurationError("verify needs a FULL tree", field="tree")
    tree = _tree(cfg)
    if flow_path is None:
        flow, _, code = _solve_pair(cfg, tree, summary, out)
        if flow is None:
            return code, _finish(out, summary, t0)
        if code != EXIT_OK:
            summary["verdict"] = "FAIL"
            return code, _finish(out, summary, t0)
    else:
        flow = read_flow(Path(flow_path), tree, cfg.exact)
        summary["flow_source"] = Path(flow_path).name
        feasible = flow.is_feasible_for(cfg.measure, 0 if cfg.exact else 1e-7)
        summary["flow_feasible"] = feasible
        P = expected_payoff(flow, cfg.payoff)
        summary["P"] = tagged(P, cfg.exact)
        try:
            _, D = solve_dual(assemble_dual(tree, cfg.payoff, cfg.measure), cfg.exact, cfg.lp_tol)
            rep = verify_duality(P, D, tol=1e-7, exact=cfg.exact, raise_on_gap=False)
            summary.update(D=tagged(D, cfg.exact), gap=tagged(rep.gap, cfg.exact))
            summary["status"] = "OPTIMAL" if rep.ok else "SUBOPTIMAL"
        except InfeasibleEmbedding as e:
            _write_infeasibility(out, summary, e, cfg.exact)
        if not feasible:
            summary["status"] = "INVALID_FLOW"
    reports = {fl: verify_MP(flow, cfg.payoff, fl, cfg.contact_eps, cfg.sg_eps) for fl in Flavor}
    _write_verify_files(out, flow, reports)
    ok = all(r.ok for r in reports.values()) and summary.get("flow_feasible", True)
    summary.update(
        verdict="PASS" if ok else "FAIL",
        n_sg_pairs=len(reports[Flavor.SG].pairs),
        n_sg_star_pairs=len(reports[Flavor.SG_STAR].pairs),
        n_violations=sum(r.n_violations for r in reports.values()),
        n_censored=sum(len(r.censored) for r in reports.values()),
        gamma_star_size=len(reports[Flavor.SG].gamma),
        verdict_by_flavor={fl.value: r.verdict for fl, r in reports.items()},
    )
    return (EXIT_OK if ok else EXIT_FAIL), _finish(out, summary, t0)


def _write_verify_files(out: Path, flow: StoppingFlow, reports: dict):
    tree, exact = flow.tree, flow.exact
    meta = tree_meta(tree, exact)
    sg, sgs = reports[Flavor.SG], reports[Flavor.SG_STAR]
    cols = ("node", "partner", "flavor", "margin")
    write_table(out / "sg_pairs.tsv", "pairs", cols, sg.pairs.records(), meta)
    write_table(out / "sg_star_pairs.tsv", "pairs", cols, sgs.pairs.records(), meta)
    write_nodes(out / "gamma_star.tsv", "nodes", tree, sg.gamma.nodes, exact)
    write_nodes(out / "gamma_star_lower.tsv", "nodes", tree, sg.lower.nodes, exact)
    rows = [(tree.keys[v], fl.value) for fl, r in reports.items() for v in r.projection.nodes]
    write_table(out / "projection.tsv", "projection", ("node", "flavor"), rows, meta)
    wrows = [(*w, fl.value) for fl, r in reports.items() for w in r.witness_records()]
    write_table(out / "violations.tsv", "violations", ("node", "partner", "kind", "margin", "flavor"), wrows, meta)


def run_enumerate(cfg: ExperimentConfig, flow_path: str | Path | None = None) -> tuple[int, dict]:
    t0 = time.perf_counter()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.tree_mode is not TreeMode.FULL:
        raise ConfigurationError("enumerate needs a FULL tree", field="tree")
    tree = _tree(cfg)
    summary = _base_summary(cfg, "enumerate")
    meta = tree_meta(tree, cfg.exact)
    sg = enumerate_SG(cfg.payoff, tree, cfg.sg_eps, exact=cfg.exact)
    cols = ("node", "partner", "flavor", "margin")
    write_table(out / "sg_pairs.tsv", "pairs", cols, sg.records(), meta)
    write_table(
        out / "sg_censored.tsv",
        "pairs",
        ("node", "partner"),
        [(tree.keys[v], tree.keys[w]) for v, w, _ in sg.censored],
        meta,
    )
    write_table(out / "sg_witnesses.tsv", "witnesses", ("node", "partner", "min_gap", "continuation"), sg.witness_records(), meta)
    n_eq = sum(1 for *_, m, _ in sg.rejected if m == 0)
    log.info("SG: %d pairs, %d rejected (%d with an equality witness), %d censored", len(sg), len(sg.rejected), n_eq, len(sg.censored))
    summary.update(
        n_sg_pairs=len(sg),
        n_rejected=len(sg.rejected),
        n_equality_witnesses=n_eq,
        n_censored=len(sg.censored),
        n_violations=0,
        status="OK",
    )
    if flow_path is not None:
        flow = read_flow(Path(flow_path), tree, cfg.exact)
        star = enumerate_SG_star(cfg.payoff, flow, eps_sg=cfg.sg_eps)
        write_table(out / "sg_star_pairs.tsv", "pairs", cols, star.records(), meta)
        summary["n_sg_star_pairs"] = len(star)
    return EXIT_OK, _finish(out, summary, t0)


RUNNERS = {"solve": run_solve, "verify": run_verify, "enumerate": run_enumerate}


def run_config(path: str, out: str | None = None, overrides: dict | None = None) -> tuple[str, int]:
    """Run every command listed in a config file; worker entry point for ``batch``."""
    try:
        cfg = load_config(path)
        cfg = cfg.with_overrides(output=Path(out) if out else None, **(overrides or {}))
        code = EXIT_OK
        for c in cfg.commands:
            rc, _ = RUNNERS[c](cfg)
            code = max(code, rc)
        return path, code
    except ConfigurationError as e:
        log.error("%s: %s", path, e)
        return path, EXIT_CONFIG
    except (ResourceError, ExactSolveError) as e:
        log.error("%s: %s", path, e)
        return path, EXIT_RESOURCE


def run_batch(directory: str | Path, out: str | Path, workers: int | None = None, overrides: dict | None = None) -> tuple[int, dict]:
    """Run every ``*.yaml``/``*.yml`` config of ``directory`` in a process pool."""
    t0 = time.perf_counter()
    directory, out = Path(directory), Path(out)
    configs = sorted(p for p in directory.iterdir() if p.suffix in (".yaml", ".yml"))
    if not configs:
        raise ConfigurationError(f"no config files in {directory}")
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(str(p), str(out / p.stem), overrides) for p in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_config, *zip(*jobs)))
    codes = {Path(p).stem: c for p, c in results}
    summary = {"command": "batch", "configs": codes, "status": "OK" if not any(codes.values()) else "ERRORS"}
    return max(codes.values()), _finish(out, summary, t0)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stopgo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "enumerate", "batch"):
        s = sub.add_parser(name)
        s.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
        s.add_argument("--config", required=True, help="config file (a directory of configs for batch)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--mode", choices=("exact", "floating"))
        s.add_argument("--tol", type=float, help="LP tolerance (floating mode)")
        s.add_argument("--sg-tol", type=float, help="stop-go margin")
        s.add_argument("--seed", type=int, help="pick a seeded vertex of the optimal face")
        if name in ("verify", "enumerate"):
            s.add_argument("--flow", help="flow file to check instead of solving")
        if name == "batch":
            s.add_argument("--workers", type=int)
    return p


def _overrides(args) -> dict:
    ov = {}
    if args.mode:
        ov["exact"] = args.mode == "exact"
    if args.tol is not None:
        ov["lp_tol"] = args.tol
    if args.sg_tol is not None:
        ov["eps_sg"] = args.sg_tol
    if args.seed is not None:
        ov["seed"] = args.seed
    return ov


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "batch":
            code, summary = run_batch(args.config, args.out or "out", args.workers, _overrides(args))
        else:
            cfg = load_config(args.config)
            cfg = cfg.with_overrides(output=Path(args.out) if args.out else None, **_overrides(args))
            runner = RUNNERS[args.command]
            if args.command == "solve":
                code, summary = runner(cfg)
            else:
                code, summary = runner(cfg, args.flow)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, ExactSolveError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    line = {k: summary.get(k) for k in ("status", "verdict", "P", "D") if summary.get(k) is not None}
    print(" ".join(f"{k}={v['value'] if isinstance(v, dict) else v}" for k, v in line.items()))
    return code


if __name__ == "__main__":
    sys.exit(main())
