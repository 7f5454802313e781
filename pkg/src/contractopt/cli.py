"""Command-line entry point: load problem documents, run the solver and
analytics, and persist results with a reproducibility manifest.

Commands: solve, calibrate, sweep, exceedance, reproduce-paper. Problem
instances are YAML documents (schema below); outputs are JSON plus
delimited-text curves, hashed into a manifest so identical configurations
yield identical result fingerprints.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import exceedance, sweep
from .calibration import (
    CalibrationInputs,
    HistoricalSeries,
    bundled_series,
    derive_model_params,
    fit_linear_model,
    prediction_band,
    to_problem_spec,
)
from .model import (
    AgentSpec,
    AgentTypeSpec,
    ContractParams,
    ProblemSpec,
    RiskAttitude,
    Scenario,
    SmoothingSpec,
    UtilitySpec,
    ValueKind,
    ValueSpec,
)
from .optimizer import (
    AnnealerConfig,
    AnnealerDiagnostics,
    ConstraintReport,
    SolveResult,
    best_of_seeds,
    solve_seeds,
    verify_solution,
)
from . import studies

SCHEMA_VERSION = "contractopt-problem/1"
MANIFEST_VERSION = "contractopt-manifest/1"
DEFAULT_SEED = 20240 + 1  # fixed documented default


class ProblemDocumentError(ValueError):
    """Schema violation in a problem document, with file/line context."""

    def __init__(self, message: str, path=None, line=None, fieldpath=None):
        location = str(path) if path else "<document>"
        if line is not None:
            location += f":{line}"
        prefix = f"{location}: " + (f"{fieldpath}: " if fieldpath else "")
        super().__init__(prefix + message)
        self.path = path
        self.line = line
        self.fieldpath = fieldpath


def _node_line(root, fieldpath: list) -> int | None:
    """Resolve a field path (keys and indices) to a 1-based document line."""
    node = root
    for part in fieldpath:
        if node is None:
            return None
        if isinstance(part, int):
            if not isinstance(node, yaml.SequenceNode) or part >= len(node.value):
                return None
            node = node.value[part]
        else:
            if not isinstance(node, yaml.MappingNode):
                return None
            for key, value in node.value:
                if key.value == part:
                    node = value
                    break
            else:
                return None
    return node.start_mark.line + 1 if node is not None else None


class _DocReader:
    """Typed field access over parsed YAML with path/line error reporting."""

    def __init__(self, data, root_node, path):
        self.data = data
        self.root = root_node
        self.path = path

    def fail(self, message, fieldpath):
        line = _node_line(self.root, fieldpath)
        pretty = "".join(
            f"[{p}]" if isinstance(p, int) else (f".{p}" if i else p)
            for i, p in enumerate(fieldpath)
        )
        raise ProblemDocumentError(message, path=self.path, line=line, fieldpath=pretty)

    def get(self, mapping, key, fieldpath, kind=None, required=True, default=None):
        if not isinstance(mapping, dict):
            self.fail("expected a mapping", fieldpath[:-1])
        if key not in mapping:
            if required:
                self.fail(f"missing required field '{key}'", fieldpath[:-1])
            return default
        value = mapping[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(f"expected a number, got {value!r}", fieldpath)
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                self.fail(f"expected an integer, got {value!r}", fieldpath)
            return value
        if kind is str and not isinstance(value, str):
            self.fail(f"expected a string, got {value!r}", fieldpath)
        if kind is list and not isinstance(value, list):
            self.fail(f"expected a list, got {value!r}", fieldpath)
        if kind is dict and not isinstance(value, dict):
            self.fail(f"expected a mapping, got {value!r}", fieldpath)
        return value


def load_problem(path) -> ProblemSpec:
    """Parse and fully validate a problem document."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemDocumentError(str(exc), path=path) from exc
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ProblemDocumentError(
            f"invalid YAML: {exc}", path=path,
            line=None if mark is None else mark.line + 1,
        ) from exc
    if not isinstance(data, dict):
        raise ProblemDocumentError("document must be a mapping", path=path, line=1)
    doc = _DocReader(data, root, path)

    scenario_name = doc.get(data, "scenario", ["scenario"], str, required=False,
                            default=Scenario.TYPE_INDEPENDENT.value)
    try:
        scenario = Scenario(scenario_name)
    except ValueError:
        doc.fail(f"unknown scenario {scenario_name!r} "
                 f"(choices: {[s.value for s in Scenario]})", ["scenario"])

    value_map = doc.get(data, "value", ["value"], dict, required=False, default={})
    kind_name = doc.get(value_map, "kind", ["value", "kind"], str, required=False, default="RB")
    try:
        value_kind = ValueKind(kind_name)
    except ValueError:
        doc.fail(f"unknown value kind {kind_name!r} (choices: ['RB', 'RPI'])", ["value", "kind"])
    try:
        value = ValueSpec(
            kind=value_kind,
            v0=doc.get(value_map, "v0", ["value", "v0"], float, required=False, default=1.0),
            incentive_slope=doc.get(value_map, "incentive_slope", ["value", "incentive_slope"],
                                    float, required=False, default=0.2),
            requirement=doc.get(value_map, "requirement", ["value", "requirement"],
                                float, required=False, default=1.0),
        )
    except ValueError as exc:
        doc.fail(str(exc), ["value"])

    principal = _load_utility(doc, data, "principal_utility")
    smoothing_map = doc.get(data, "smoothing", ["smoothing"], dict, required=False, default={})
    try:
        smoothing = SmoothingSpec(
            alpha_transfer=doc.get(smoothing_map, "alpha_transfer",
                                   ["smoothing", "alpha_transfer"], float,
                                   required=False, default=50.0),
            alpha_value=doc.get(smoothing_map, "alpha_value",
                                ["smoothing", "alpha_value"], float,
                                required=False, default=100.0),
        )
    except ValueError as exc:
        doc.fail(str(exc), ["smoothing"])

    agents_list = doc.get(data, "agents", ["agents"], list)
    if not agents_list:
        doc.fail("at least one agent is required", ["agents"])
    agents = []
    for i, agent_map in enumerate(agents_list):
        apath = ["agents", i]
        attitude_name = doc.get(agent_map, "risk_attitude", apath + ["risk_attitude"],
                                str, required=False, default="risk_averse")
        try:
            attitude = RiskAttitude(attitude_name)
        except ValueError:
            doc.fail(f"unknown risk attitude {attitude_name!r}", apath + ["risk_attitude"])
        risk_coeff = doc.get(agent_map, "risk_coeff", apath + ["risk_coeff"],
                             float, required=False, default=2.0)
        types_list = doc.get(agent_map, "types", apath + ["types"], list)
        if not types_list:
            doc.fail("at least one type is required", apath + ["types"])
        types = []
        for k, type_map in enumerate(types_list):
            tpath = apath + ["types", k]
            try:
                types.append(AgentTypeSpec(
                    kappa=doc.get(type_map, "kappa", tpath + ["kappa"], float),
                    cost_coeff=doc.get(type_map, "cost_coeff", tpath + ["cost_coeff"], float),
                    sigma=doc.get(type_map, "sigma", tpath + ["sigma"], float),
                    prior_prob=doc.get(type_map, "prior_prob", tpath + ["prior_prob"],
                                       float, required=False, default=1.0 / len(types_list)),
                    reservation_utility=doc.get(type_map, "reservation_utility",
                                                tpath + ["reservation_utility"], float,
                                                required=False, default=0.0),
                ))
            except ValueError as exc:
                doc.fail(str(exc), tpath)
        try:
            agents.append(AgentSpec(types=tuple(types), risk_attitude=attitude,
                                    risk_coeff=risk_coeff))
        except ValueError as exc:
            doc.fail(str(exc), apath + ["types"])

    try:
        return ProblemSpec(agents=tuple(agents), value=value, principal_utility=principal,
                           smoothing=smoothing, scenario=scenario)
    except ValueError as exc:
        raise ProblemDocumentError(str(exc), path=path) from exc


def _load_utility(doc, data, key) -> UtilitySpec:
    umap = doc.get(data, key, [key], dict, required=False, default={})
    kind_name = doc.get(umap, "kind", [key, "kind"], str, required=False,
                        default="risk_neutral")
    try:
        kind = RiskAttitude(kind_name)
    except ValueError:
        doc.fail(f"unknown utility kind {kind_name!r}", [key, "kind"])
    try:
        return UtilitySpec(kind=kind, risk_coeff=doc.get(umap, "risk_coeff",
                           [key, "risk_coeff"], float, required=False, default=2.0))
    except ValueError as exc:
        doc.fail(str(exc), [key])


def problem_to_dict(problem: ProblemSpec) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "scenario": problem.scenario.value,
        "value": {
            "kind": problem.value.kind.value,
            "v0": problem.value.v0,
            "incentive_slope": problem.value.incentive_slope,
            "requirement": problem.value.requirement,
        },
        "principal_utility": {
            "kind": problem.principal_utility.kind.value,
            "risk_coeff": problem.principal_utility.risk_coeff,
        },
        "smoothing": {
            "alpha_transfer": problem.smoothing.alpha_transfer,
            "alpha_value": problem.smoothing.alpha_value,
        },
        "agents": [
            {
                "risk_attitude": agent.risk_attitude.value,
                "risk_coeff": agent.risk_coeff,
                "types": [
                    {
                        "kappa": t.kappa,
                        "cost_coeff": t.cost_coeff,
                        "sigma": t.sigma,
                        "prior_prob": t.prior_prob,
                        "reservation_utility": t.reservation_utility,
                    }
                    for t in agent.types
                ],
            }
            for agent in problem.agents
        ],
    }


def dump_problem(problem: ProblemSpec, path) -> None:
    Path(path).write_text(yaml.safe_dump(problem_to_dict(problem), sort_keys=False))


def result_to_dict(result: SolveResult) -> dict:
    report = result.constraint_report
    return {
        "scenario": result.scenario.value,
        "seed": result.seed,
        "contracts": [
            [
                {"base_pay": c.base_pay, "award": c.award,
                 "requirement": c.requirement, "incentive": c.incentive}
                for c in block
            ]
            for block in result.contracts
        ],
        "efforts": [
            {"agent": i, "true_type": k, "announced": l, "effort": e}
            for (i, k, l), e in sorted(result.efforts.items())
        ],
        "principal_expected_utility": result.principal_expected_utility,
        "agent_expected_utilities": [
            {"agent": i, "type": k, "value": v}
            for (i, k), v in sorted(result.agent_expected_utilities.items())
        ],
        "penalized_objective": result.penalized_objective,
        "constraint_report": report_to_dict(report),
        "diagnostics": asdict(result.diagnostics),
    }


def report_to_dict(report: ConstraintReport) -> dict:
    return {
        "participation": [
            {"agent": i, "type": k, "margin": m}
            for (i, k), m in sorted(report.participation_residuals.items())
        ],
        "incentive_compatibility": [
            {"agent": i, "true_type": k, "announced": l, "margin": m}
            for (i, k, l), m in sorted(report.ic_residuals.items())
        ],
        "implementability_ok": report.implementability_ok,
        "feasibility_tol": report.feasibility_tol,
        "feasible": report.feasible,
    }


def result_from_dict(data: dict) -> SolveResult:
    contracts = tuple(
        tuple(ContractParams(c["base_pay"], c["award"], c["requirement"], c["incentive"])
              for c in block)
        for block in data["contracts"]
    )
    report_data = data["constraint_report"]
    report = ConstraintReport(
        participation_residuals={
            (r["agent"], r["type"]): r["margin"] for r in report_data["participation"]
        },
        ic_residuals={
            (r["agent"], r["true_type"], r["announced"]): r["margin"]
            for r in report_data["incentive_compatibility"]
        },
        implementability_ok=report_data["implementability_ok"],
        feasibility_tol=report_data["feasibility_tol"],
    )
    diag = data["diagnostics"]
    return SolveResult(
        contracts=contracts,
        efforts={(e["agent"], e["true_type"], e["announced"]): e["effort"]
                 for e in data["efforts"]},
        principal_expected_utility=data["principal_expected_utility"],
        agent_expected_utilities={(u["agent"], u["type"]): u["value"]
                                  for u in data["agent_expected_utilities"]},
        penalized_objective=data["penalized_objective"],
        constraint_report=report,
        scenario=Scenario(data["scenario"]),
        seed=data["seed"],
        diagnostics=AnnealerDiagnostics(**{
            k: tuple(v) if isinstance(v, list) else v for k, v in diag.items()
        }),
    )


# ---------------------------------------------------------------------------
# output plumbing


def _canonical_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class _OutputWriter:
    """Writes artifacts under one directory and records their hashes."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.hashes = {}

    def write_json(self, name: str, payload) -> None:
        text = json.dumps(payload, indent=1, sort_keys=True)
        (self.dir / name).write_text(text + "\n")
        self.hashes[name] = _sha256(_canonical_json(payload))

    def write_csv(self, name: str, header: list, rows) -> None:
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating))
                                 else x for x in row])
        self.hashes[name] = _sha256(path.read_text())

    def manifest(self, command: str, config: dict, seed: int, wall_time: float) -> dict:
        results_hash = _sha256(_canonical_json(dict(sorted(self.hashes.items()))))
        manifest = {
            "format": MANIFEST_VERSION,
            "command": command,
            "config": config,
            "config_hash": _sha256(_canonical_json(config)),
            "seed": seed,
            "versions": {
                "contractopt": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
            "outputs": dict(sorted(self.hashes.items())),
            "results_hash": results_hash,
            "wall_time_s": round(wall_time, 3),
        }
        text = json.dumps(manifest, indent=1, sort_keys=True)
        (self.dir / "manifest.json").write_text(text + "\n")
        return manifest


def _annealer_from_args(args) -> AnnealerConfig:
    cfg = AnnealerConfig(seed=args.seed)
    overrides = {}
    if args.particles is not None:
        overrides["particle_count"] = args.particles
    if args.gamma_start is not None:
        overrides["gamma_start"] = args.gamma_start
    if args.gamma_end is not None:
        overrides["gamma_end"] = args.gamma_end
    if args.stages is not None:
        overrides["n_stages"] = args.stages
    return replace(cfg, **overrides) if overrides else cfg


def _config_echo(args, extra=None) -> dict:
    skip = {"func", "out"}
    config = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if extra:
        config.update(extra)
    return config


def _solve_and_audit(problem, cfg, n_seeds, writer):
    result = best_of_seeds(problem, cfg, n_seeds=n_seeds)
    audit = verify_solution(result, problem)
    writer.write_json("result.json", result_to_dict(result))
    writer.write_json("constraints.json", report_to_dict(audit))
    for i, block in enumerate(result.contracts):
        for j, contract in enumerate(block):
            q, t = studies.transfer_curve(contract, problem.smoothing)
            writer.write_csv(f"transfer_agent{i}_contract{j}.csv",
                             ["quality", "payment"], zip(q, t))
    return result, audit


def cmd_solve(args) -> int:
    problem = load_problem(args.config)
    cfg = _annealer_from_args(args)
    writer = _OutputWriter(args.out)
    started = time.perf_counter()
    result, audit = _solve_and_audit(problem, cfg, args.n_seeds, writer)
    writer.manifest("solve", _config_echo(args), args.seed, time.perf_counter() - started)
    print(f"principal expected utility: {result.principal_expected_utility:.6f}")
    print(f"constraint audit: {'pass' if audit.feasible else 'FAIL'}")
    return 0 if audit.feasible else 3


def cmd_calibrate(args) -> int:
    with open(args.config) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ProblemDocumentError("calibration config must be a mapping", path=args.config)
    data_path = raw.get("data", "bundled")
    series = bundled_series() if data_path == "bundled" else HistoricalSeries.from_csv(data_path)
    anchor_i, anchor_g = series.anchor
    inputs = CalibrationInputs(
        requirement_physical=float(raw["requirement_physical"]),
        state_of_art_performance=float(raw.get("state_of_art_performance", anchor_g)),
        state_of_art_investment=float(raw.get("state_of_art_investment", anchor_i)),
        engineer_cost_rate=float(raw["engineer_cost_rate"]),
        horizon=float(raw.get("horizon", 1.0)),
        engineer_count=int(raw.get("engineer_count", 1)),
        system_value=float(raw["system_value"]),
    )
    writer = _OutputWriter(args.out)
    started = time.perf_counter()
    fit = fit_linear_model(series, anchor=(inputs.state_of_art_investment,
                                           inputs.state_of_art_performance))
    calib = derive_model_params(fit, inputs,
                                sigma_convention=raw.get("sigma_convention", "mean_square"))
    problem = to_problem_spec(calib, value_kind=ValueKind(raw.get("value_kind", "RB")))
    writer.write_json("calibration.json", {
        "A_hat": calib.A_hat,
        "Sigma_hat": calib.Sigma_hat,
        "sigma_convention": calib.sigma_convention,
        "kappa": calib.kappa,
        "sigma": calib.sigma,
        "cost_coeff": calib.cost_coeff,
        "inputs": asdict(inputs),
        "series_source": series.source,
        "n_records": len(series),
    })
    dump_problem(problem, writer.dir / "problem.yaml")
    writer.hashes["problem.yaml"] = _sha256((writer.dir / "problem.yaml").read_text())
    lo, hi = prediction_band(fit, series.investments)
    writer.write_csv("fit_curve.csv",
                     ["investment", "observed", "fitted", "band_lo", "band_hi"],
                     zip(series.investments, series.performances,
                         fit.predict(series.investments), lo, hi))
    writer.manifest("calibrate", _config_echo(args), args.seed, time.perf_counter() - started)
    print(f"A_hat={calib.A_hat:.6g}  Sigma_hat={calib.Sigma_hat:.6g}  "
          f"kappa={calib.kappa:.4g} sigma={calib.sigma:.4g} cost={calib.cost_coeff:.4g}")
    return 0


def cmd_sweep(args) -> int:
    problem = load_problem(args.config)
    cfg = _annealer_from_args(args)
    levels = [float(x) for x in args.levels.split(",")]
    writer = _OutputWriter(args.out)
    started = time.perf_counter()
    swept = sweep(problem, args.axis, levels, cfg, n_seeds=args.n_seeds)
    rows = [
        (e.level,
         "" if e.requirement is None else e.requirement,
         "" if e.award is None else e.award,
         "" if e.principal_utility is None else e.principal_utility,
         e.error or "")
        for e in swept.entries
    ]
    writer.write_csv("sweep.csv",
                     ["level", "requirement", "award", "principal_utility", "error"], rows)
    writer.write_json("sweep.json", {
        "axis": swept.axis,
        "levels": list(swept.levels),
        "entries": [
            {"level": e.level, "requirement": e.requirement, "award": e.award,
             "principal_utility": e.principal_utility, "error": e.error}
            for e in swept.entries
        ],
    })
    writer.manifest("sweep", _config_echo(args), args.seed, time.perf_counter() - started)
    failures = [e for e in swept.entries if e.error]
    return 0 if not failures else 3


def cmd_exceedance(args) -> int:
    problem = load_problem(args.config)
    cfg = _annealer_from_args(args)
    writer = _OutputWriter(args.out)
    started = time.perf_counter()
    result, audit = _solve_and_audit(problem, cfg, args.n_seeds, writer)
    curve = exceedance(result, problem, sample_count=args.samples, seed=args.seed)
    writer.write_csv("exceedance.csv", ["threshold", "probability"],
                     zip(curve.thresholds, curve.probabilities))
    writer.manifest("exceedance", _config_echo(args), args.seed,
                    time.perf_counter() - started)
    return 0 if audit.feasible else 3


def cmd_reproduce(args) -> int:
    cfg = _annealer_from_args(args)
    writer = _OutputWriter(args.out)
    started = time.perf_counter()
    summary = {"tables": {}, "adverse_selection": {}, "satellite": {}}
    all_feasible = True

    for kind in (ValueKind.RB, ValueKind.RPI):
        table = {}
        for case in studies.moral_hazard_grid(kind):
            results = solve_seeds(case.problem, cfg, n_seeds=args.n_seeds)
            best = max(results, key=lambda r: r.penalized_objective)
            objectives = [r.penalized_objective for r in results]
            audit = verify_solution(best, case.problem)
            all_feasible &= audit.feasible
            contract = best.contract_for(0)
            table[case.name] = {
                "principal_expected_utility": best.principal_expected_utility,
                "contract": [contract.base_pay, contract.award,
                             contract.requirement, contract.incentive],
                "seed_spread": max(objectives) - min(objectives),
                "feasible": audit.feasible,
            }
            q, t = studies.transfer_curve(contract, case.problem.smoothing)
            writer.write_csv(f"transfer_{case.name}.csv", ["quality", "payment"], zip(q, t))
            curve = exceedance(best, case.problem, sample_count=args.samples, seed=cfg.seed)
            writer.write_csv(f"exceedance_{case.name}.csv", ["threshold", "probability"],
                             zip(curve.thresholds, curve.probabilities))
        summary["tables"][kind.value] = table

    for case in studies.adverse_selection_cases():
        results = solve_seeds(case.problem, cfg, n_seeds=args.n_seeds)
        best = max(results, key=lambda r: r.penalized_objective)
        audit = verify_solution(best, case.problem)
        all_feasible &= audit.feasible
        summary["adverse_selection"][case.name] = {
            "principal_expected_utility": best.principal_expected_utility,
            "contracts": [[list(c.as_array()) for c in block] for block in best.contracts],
            "agent_expected_utilities": {
                f"type{k}": v for (i, k), v in sorted(best.agent_expected_utilities.items())
            },
            "seed_spread": (max(r.penalized_objective for r in results)
                            - min(r.penalized_objective for r in results)),
            "feasible": audit.feasible,
        }
        writer.write_json(f"result_{case.name}.json", result_to_dict(best))

    series = studies.satellite_series()
    fit = fit_linear_model(series)
    rows = []
    for inputs, case in zip(studies.satellite_inputs(), studies.satellite_cases()):
        calib = derive_model_params(fit, inputs)
        solved = best_of_seeds(case.problem, cfg, n_seeds=args.n_seeds)
        audit = verify_solution(solved, case.problem)
        all_feasible &= audit.feasible
        contract = solved.contract_for(0)
        rows.append({
            "requirement_physical": inputs.requirement_physical,
            "system_value": inputs.system_value,
            "kappa": calib.kappa,
            "sigma": calib.sigma,
            "cost_coeff": calib.cost_coeff,
            "contract": [contract.base_pay, contract.award,
                         contract.requirement, contract.incentive],
            "principal_expected_utility": solved.principal_expected_utility,
            "feasible": audit.feasible,
        })
        q, t = studies.transfer_curve(contract, case.problem.smoothing)
        writer.write_csv(f"transfer_{case.name}.csv", ["quality", "payment"], zip(q, t))
    summary["satellite"] = {"A_hat": fit.A_hat, "Sigma_hat": fit.Sigma_hat, "rows": rows}

    writer.write_json("summary.json", summary)
    writer.manifest("reproduce-paper", _config_echo(args), args.seed,
                    time.perf_counter() - started)
    print(json.dumps(summary["tables"], indent=1))
    return 0 if all_feasible else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contractopt",
        description="Optimal incentive contracts for delegated design tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="problem document (YAML)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--particles", type=int, default=None)
        p.add_argument("--gamma-start", dest="gamma_start", type=float, default=None)
        p.add_argument("--gamma-end", dest="gamma_end", type=float, default=None)
        p.add_argument("--stages", type=int, default=None)
        p.add_argument("--n-seeds", dest="n_seeds", type=int, default=1,
                       help="independent annealer runs; the best is kept")

    p_solve = sub.add_parser("solve", help="solve one problem document")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_cal = sub.add_parser("calibrate", help="fit model parameters from a data series")
    common(p_cal)
    p_cal.set_defaults(func=cmd_calibrate)

    p_sweep = sub.add_parser("sweep", help="re-solve along one parameter axis")
    common(p_sweep)
    p_sweep.add_argument("--axis", required=True, choices=["complexity", "cost", "uncertainty"])
    p_sweep.add_argument("--levels", required=True, help="comma-separated ascending values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_exc = sub.add_parser("exceedance", help="solve, then sample the utility survival curve")
    common(p_exc)
    p_exc.add_argument("--samples", type=int, default=100_000)
    p_exc.set_defaults(func=cmd_exceedance)

    p_rep = sub.add_parser("reproduce-paper",
                           help="re-run every bundled case study and export its tables and curves")
    common(p_rep, config_required=False)
    p_rep.add_argument("--samples", type=int, default=100_000)
    p_rep.set_defaults(func=cmd_reproduce)
    p_rep.set_defaults(n_seeds=5)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemDocumentError as exc:
        _write_error(args, "problem-document", str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        _write_error(args, type(exc).__name__, str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _write_error(args, kind: str, message: str) -> None:
    out = getattr(args, "out", None)
    if not out:
        return
    try:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "error.json").write_text(
            json.dumps({"error": kind, "message": message}, indent=1) + "\n"
        )
    except OSError:
        pass


def main() -> None:
    sys.exit(run())
