# -*- coding: utf-8 -*-
"""
reebpa/cli.py

Batch front end: one JSON config in, one JSON report out.

    reebpa --config run.json --out report.json
    reebpa census --matrix 2,1,1,1 --kmax 2

Exit codes: 0 pass, 2 certified failure, 1 error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from reebpa import REPORT_SCHEMA, TOOL_NAME, __version__, fixtures
from reebpa.chain_toolkit import (
    CofinalSequence,
    build_chain_summary,
    chain_summaries,
    ch_growth,
    cofinal_constants,
    cofinal_sequence,
    cofinality_check,
    euler_identity_check,
    hypertight_certificate,
    nonvanishing_certificate,
    torsion_rank_bound,
    torsion_tori,
    verify_torsion_orbits,
)
from reebpa.errors import ConfigError, InsufficientRange, MixedClass, NoEpsilonFound, ReebPAError
from reebpa.flow_engine import (
    ChartReebModel,
    ExpressionFieldModel,
    FlowModel,
    Section,
    SuspensionModel,
    TorsionModel,
    find_periodic_orbits,
    seed_grid,
)
from reebpa.lefschetz_tracking import (
    OrbitType,
    PlanarMap,
    TrackedOrbit,
    TrackingOptions,
    orbit_index,
    perturbed_map,
    rel_lefschetz_check,
    tracking_certificate,
    tracking_sum_check,
    winding_index,
)
from reebpa.local_models import StandardPAMap, SuspensionFlow, TorusAutomorphism, count_fixed_points
from reebpa.orbit_census import (
    HomotopyClassKey,
    OrbitRecord,
    SYNTHETIC,
    census_property_checks,
    enumerate_torus_census,
    growth_rate,
    synthetic_census,
)
from reebpa.run_config import config_hash, load_config, validate_config
from reebpa.singular_contact import (
    ChartContactForm,
    GridSpec,
    SmoothingChart,
    SmoothingFunction,
    axis_decay,
    estimate_lipschitz,
    find_epsilon,
    flux_exponent,
    reeb_field,
    smoothed_form,
    t_component_bound,
    verify_contact,
    volume_decomposition,
    volume_inequality_check,
)
from reebpa.workers import resolve_workers

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

DEFAULT_KMAX = {"census": 6, "growth": 12, "chain": 6}
VERIFY_GRID = {"n_t": 16, "n_r": 32, "n_theta": 32}


@dataclass
class Outcome:
    passed: bool
    result: dict
    census: object = None
    simple_only: bool = True
    table: object = None


# ---------------------------------------------------------------------------
# Config → model objects
# ---------------------------------------------------------------------------

def _require(cfg: dict, key: str, base: str = ""):
    if key not in cfg:
        raise ConfigError(f"missing required key '{key}'", f"{base}/{key}")
    return cfg[key]


def _form_bundle(cfg: dict, base: str = "") -> tuple:
    """(form, chart, profile) from a fixture name or an inline form."""
    if "fixture" in cfg:
        name = cfg["fixture"]
        try:
            form = fixtures.load_form(name)
            chart = fixtures.load_chart(name)
            profile = fixtures.load_profile(name)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), f"{base}/fixture") from None
    elif "form" in cfg:
        form = ChartContactForm.from_strings(**cfg["form"])
        chart = SmoothingChart.identity()
        profile = None
    else:
        raise ConfigError("need 'fixture' or 'form'", base or "/")
    if "chart" in cfg:
        chart = SmoothingChart.from_config(cfg["chart"])
    if "chi" in cfg:
        profile = SmoothingFunction(**cfg["chi"]) if cfg["chi"] else None
    return form, chart, profile


def _flow(entry: dict, base: str) -> FlowModel:
    kind = entry["type"]
    if kind == "reeb":
        form, chart, profile = _form_bundle(entry, base)
        if profile is not None and "epsilon" in entry:
            profile = profile.scaled(entry["epsilon"])
        return ChartReebModel(form, chart, profile)
    if kind == "suspension":
        if entry.get("base", "torus") == "torus":
            base_map = TorusAutomorphism.coerce(_require(entry, "matrix", base))
        else:
            base_map = StandardPAMap(int(_require(entry, "n", base)), int(entry.get("k", 0)),
                                     float(entry.get("lambda", 2.0)))
        return SuspensionModel(SuspensionFlow(base_map))
    if kind == "torsion":
        return TorsionModel(int(entry.get("torsion", 1)))
    return ExpressionFieldModel(_require(entry, "t", base), _require(entry, "x", base),
                                _require(entry, "y", base), entry.get("period"))


def _section(model: FlowModel, entry: Optional[dict], center=None) -> Section:
    entry = entry or {}
    c = center if center is not None else entry.get("center", (0.0, 0.0))
    return Section.for_model(model, float(entry.get("t0", 0.0)), float(entry.get("r_max", 0.5)),
                             float(entry.get("r_p", 0.25)), c)


def _census_from(cfg: dict, cmd: str, workers: int):
    if "census" in cfg:
        try:
            return fixtures.load_census(cfg["census"])
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), "/census") from None
    matrix = _require(cfg, "matrix")
    return enumerate_torus_census(matrix, int(cfg.get("kmax", DEFAULT_KMAX.get(cmd, 6))), workers)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_model(cfg: dict, workers: int) -> Outcome:
    model = cfg.get("model", "standard_pa")
    if model == "standard_pa":
        m = StandardPAMap(int(_require(cfg, "n")), int(cfg.get("k", 0)), float(cfg.get("lambda", 2.0)))
        pts = np.asarray(cfg.get("points", [[0.5, 0.0], [0.0, 0.5]]), dtype=float)
        return Outcome(True, {
            "n": m.n, "k": m.k, "lambda": m.lam,
            "points": pts.tolist(),
            "images": m.apply_cartesian(pts).tolist(),
            "prong_rays": m.prong_rays().tolist(),
            "prong_permutation": m.prong_permutation(),
        })
    A = TorusAutomorphism.coerce(_require(cfg, "matrix"))
    kmax = int(cfg.get("kmax", 4))
    result = {
        "matrix": [list(row) for row in A.matrix],
        "det": A.det,
        "trace": A.trace,
        "stretch": A.stretch,
        "eigenvalues": A.eigenvalues().tolist(),
        "fixed_points": {str(k): count_fixed_points(A, k) for k in range(1, kmax + 1)},
    }
    if "points" in cfg:
        result["images"] = A.apply_cartesian(np.asarray(cfg["points"], dtype=float)).tolist()
    return Outcome(True, result)


def cmd_smooth(cfg: dict, workers: int) -> Outcome:
    form, chart, profile = _form_bundle(cfg)
    if profile is not None and "epsilon" in cfg:
        profile = profile.scaled(cfg["epsilon"])
    p = tuple(float(v) for v in cfg.get("point", (0.0, 0.5, 0.0)))
    big_g, big_h = volume_decomposition(form, chart, profile, p)
    result = {
        "point": list(p),
        "form": form.to_dict(),
        "chart": chart.to_dict(),
        "chi": None if profile is None else profile.to_dict(),
        "pullback": [float(v) for v in smoothed_form(form, chart, None, p)],
        "smoothed": [float(v) for v in smoothed_form(form, chart, profile, p)],
        "G": float(big_g),
        "H": float(big_h),
        "lipschitz_estimate": estimate_lipschitz(form),
        "flux_exponent": flux_exponent(form),
        "axis_decay": axis_decay(form, chart, profile, [0.01, 0.05, 0.1]).tolist(),
        "flatness": chart.flatness_report(),
    }
    if big_g + big_h > 0.0:
        rf = reeb_field(form, chart, profile, p)
        result["reeb"] = [float(rf.t_dot), float(rf.r_dot), float(rf.theta_dot)]
        result["residual_alpha"] = rf.residual_alpha
        result["residual_iota"] = rf.residual_iota
    return Outcome(True, result)


def cmd_verify(cfg: dict, workers: int) -> Outcome:
    form, chart, profile = _form_bundle(cfg)
    grid = GridSpec.from_config(cfg.get("grid", VERIFY_GRID))
    if profile is None and "epsilon" not in cfg:
        report = verify_contact(form, chart, None, grid)
        return Outcome(report.passed, {"contact": report.to_dict()})
    if "epsilon" in cfg:
        eps = float(cfg["epsilon"])
        report = verify_contact(form, chart, profile.scaled(eps) if profile else None, grid)
        report.epsilon = eps
    else:
        try:
            cert = find_epsilon(form, chart, profile, grid)
        except NoEpsilonFound as exc:
            last = exc.last_report.to_dict() if exc.last_report is not None else None
            return Outcome(False, {"contact": last, "error": str(exc)})
        eps, report = cert.epsilon, cert.report
    result = {"contact": report.to_dict()}
    passed = report.passed
    if profile is not None and report.passed:
        result["t_component"] = t_component_bound(form, chart, profile.scaled(eps), grid)
    if "C" in cfg and profile is not None and report.passed:
        ineq = volume_inequality_check(form, chart, profile.scaled(eps / 2.0), float(cfg["C"]), grid)
        result["volume_inequality"] = dict(ineq.to_dict(), epsilon=eps / 2.0)
        passed = passed and ineq.passed
    return Outcome(passed, result)


def cmd_orbits(cfg: dict, workers: int) -> Outcome:
    model = _flow(_require(cfg, "flow"), "/flow")
    section = _section(model, cfg.get("section"))
    k = int(cfg.get("iterate", 1))
    n = int(cfg.get("seeds_per_axis", 4))
    seeds = seed_grid(section.center, section.r_p, n, periodic=model.planar_period is not None)
    search = find_periodic_orbits(model, section, seeds, k, workers=workers)
    result = search.to_dict()
    if "eps" in cfg:
        for entry, p in zip(result["orbits"], search.points):
            entry["index"] = orbit_index(model, section, p.point, k, float(cfg["eps"]))
    return Outcome(bool(search.points), result)


def cmd_lefschetz(cfg: dict, workers: int) -> Outcome:
    eps = float(cfg.get("eps", 0.1))
    if cfg.get("model", "standard_pa") == "standard_pa":
        m = PlanarMap.standard_pa(StandardPAMap(int(_require(cfg, "n")), int(cfg.get("k", 0)),
                                                float(cfg.get("lambda", 2.0))))
        if "perturbation" in cfg:
            pert = cfg["perturbation"]
            center = tuple(pert.get("center", (0.0, 0.0)))
            radius = float(pert.get("radius", 0.5))
            K = float(pert.get("K", np.hypot(*center) + radius))
            m2 = perturbed_map(m, pert["vector"], center, radius)
            rep = rel_lefschetz_check(m, m2, K)
            return Outcome(rep.passed, dict(rep.to_dict(), index=rep.sum_first))
        return Outcome(True, {"index": winding_index(m, eps=eps), "eps": eps})

    A = TorusAutomorphism.coerce(_require(cfg, "matrix"))
    model = SuspensionModel(SuspensionFlow(A))
    point = tuple(cfg.get("points", [[0.0, 0.0]])[0])
    k = int(cfg.get("iterate", 1))
    section = _section(model, None, center=point)
    return Outcome(True, {"index": orbit_index(model, section, point, k, min(eps, 0.05)),
                          "iterate": k, "point": list(point)})


def cmd_track(cfg: dict, workers: int) -> Outcome:
    L = float(_require(cfg, "L"))
    if "census_phi" in cfg:
        try:
            c_phi = fixtures.load_census(cfg["census_phi"])
            c_psi = fixtures.load_census(_require(cfg, "census_psi"))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), "/census_phi") from None
        key = HomotopyClassKey.from_dict(cfg.get("class", {"k": 1}))
        rep = tracking_sum_check(c_phi, c_psi, key, L)
        return Outcome(rep.passed, {"sum_check": rep.to_dict()})

    phi = _flow(_require(cfg, "phi"), "/phi")
    psi = _flow(_require(cfg, "psi"), "/psi")
    orbits = []
    for i, o in enumerate(_require(cfg, "orbits")):
        section = _section(phi, o, center=tuple(o.get("center", (0.0, 0.0))))
        orbits.append(TrackedOrbit(o["id"], section, float(o["period"]), int(o.get("k", 1)),
                                   float(o.get("tube_radius", 0.12))))
    options = TrackingOptions(seed=int(cfg.get("seed", 0)), workers=workers)
    rep = tracking_certificate(phi, psi, orbits, L, options)
    return Outcome(rep.passed, rep.to_dict())


def cmd_census(cfg: dict, workers: int) -> Outcome:
    census = _census_from(cfg, "census", workers)
    iterates = bool(cfg.get("iterates", False))
    records = census.records if iterates else census.simple_records
    checks = census_property_checks(census)
    result = {
        "substrate": census.substrate,
        "cutoff": census.cutoff,
        "records": [r.to_dict() for r in records],
        "record_count": len(records),
        "checks": checks.to_dict(),
    }
    if census.matrix is not None:
        A = TorusAutomorphism(census.matrix)
        result["fixed_points"] = {str(k): count_fixed_points(A, k) for k in range(1, int(census.cutoff) + 1)}
    return Outcome(checks.passed, result, census=census, simple_only=not iterates)


def cmd_growth(cfg: dict, workers: int) -> Outcome:
    census = _census_from(cfg, "growth", workers)
    if "scale" in cfg:
        census = census.scaled(float(cfg["scale"]))
    prefactor = cfg.get("prefactor", "margulis")
    frame, ch_rate = ch_growth(census, prefactor=prefactor, workers=workers)
    try:
        rate = growth_rate(census, prefactor)
    except InsufficientRange as exc:
        logger.info("growth rate not fitted: %s", exc)
        rate = None
    passed = bool((frame["CHF"] <= frame["GF"]).all())
    return Outcome(passed, {
        "L": frame["L"].tolist(),
        "GF": frame["GF"].tolist(),
        "CHF": frame["CHF"].tolist(),
        "rate": rate,
        "ch_rate": ch_rate,
        "prefactor": prefactor,
    }, table=frame)


def cmd_chain(cfg: dict, workers: int) -> Outcome:
    census = _census_from(cfg, "chain", workers)
    L = float(cfg.get("L", census.cutoff))
    result: dict = {"L": L}
    passed = True
    try:
        if "class" in cfg:
            substrate = census.substrate if census.matrix is not None else SYNTHETIC
            key = HomotopyClassKey.from_dict(dict({"substrate": substrate}, **cfg["class"]))
            summaries = [build_chain_summary(census, key, L)]
        else:
            summaries = chain_summaries(census, L, workers)
        result["summaries"] = [dict(s.to_dict(), **nonvanishing_certificate(s)) for s in summaries]
    except MixedClass as exc:
        result["summaries"] = None
        result["mixed_class"] = {"class": exc.key, "types": list(exc.types)}
        passed = False

    tight = hypertight_certificate(census, L)
    result["hypertight"] = tight.to_dict()
    passed = passed and tight.passed

    if cfg.get("euler"):
        cases = []
        for case in fixtures.euler_suite():
            key = HomotopyClassKey("synthetic", 1, (0, 0))
            recs = [OrbitRecord.build(1.0 + 0.01 * i, OrbitType("positive_hyperbolic"), key)
                    for i in range(case["psi"])]
            summary = build_chain_summary(synthetic_census(recs, 2.0), key, 2.0)
            rep = euler_identity_check(summary, case["phi"])
            cases.append(dict(rep.to_dict(), name=case["name"], expected_pass=case["pass"]))
        result["euler"] = cases
        passed = passed and all(c["pass"] == c["expected_pass"] for c in cases)

    if "cofinality" in cfg:
        cof = cfg["cofinality"]
        if "gray" in cof:
            margin = float(cof.get("margin", 0.05))
            C, D = cofinal_constants(float(cof["gray"]), margin)
            seq = cofinal_sequence(C, D, 1.0, int(cof.get("n", 5)), margin)
        else:
            seq = CofinalSequence(tuple(_require(cof, "c", "/cofinality")),
                                  tuple(_require(cof, "L", "/cofinality")),
                                  float(_require(cof, "C", "/cofinality")),
                                  float(_require(cof, "D", "/cofinality")))
        rep = cofinality_check(seq)
        result["cofinality"] = dict(rep.to_dict(), C=seq.C, D=seq.D)
        passed = passed and rep.passed
    return Outcome(passed, result)


def cmd_torsion(cfg: dict, workers: int) -> Outcome:
    k = int(cfg.get("torsion", 1))
    cls = tuple(_require(cfg, "primitive"))
    result = {"tori": torsion_tori(k, cls), "rank": torsion_rank_bound(k, cls)}
    passed = True
    if cfg.get("verify_orbits"):
        result["verification"] = verify_torsion_orbits(k, cls)
        passed = result["verification"]["pass"]
    return Outcome(passed, result)


def cmd_bench(cfg: dict, workers: int) -> Outcome:
    from reebpa.performance_monitor import PerformanceBenchmark

    # banner on stderr, JSON report on stdout
    with contextlib.redirect_stdout(sys.stderr):
        results = PerformanceBenchmark(int(cfg.get("seed", 0)), workers).run_full_benchmark_suite(
            quick=bool(cfg.get("quick", False)))
    return Outcome(bool(results["_gate"]["pass"]), results)


COMMANDS: dict[str, Callable[[dict, int], Outcome]] = {
    "model": cmd_model,
    "smooth": cmd_smooth,
    "verify": cmd_verify,
    "orbits": cmd_orbits,
    "lefschetz": cmd_lefschetz,
    "track": cmd_track,
    "census": cmd_census,
    "growth": cmd_growth,
    "chain": cmd_chain,
    "torsion": cmd_torsion,
    "bench": cmd_bench,
}


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def build_report(cfg: dict, status: str, result: dict) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "cmd": cfg.get("cmd"),
        "config_hash": config_hash(cfg),
        "seed": int(cfg.get("seed", 0)),
        "status": status,
        "result": result,
    }


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_json_default) + "\n"


def _emit(report: dict, out: Optional[str]) -> None:
    text = render_report(report)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def dispatch(cfg: dict, workers: Optional[int] = None) -> tuple[int, dict]:
    """Run one validated config; returns (exit code, report)."""
    cmd = cfg["cmd"]
    n = resolve_workers(workers if workers is not None else cfg.get("workers"))
    logger.info("%s: dispatching with %d worker(s)", cmd, n)
    outcome = COMMANDS[cmd](cfg, n)
    report = build_report(cfg, "pass" if outcome.passed else "fail", outcome.result)

    if cfg.get("out") and outcome.census is not None:
        outcome.census.to_json_lines(f"{cfg['out']}.records.jsonl", simple_only=outcome.simple_only)
    if cfg.get("csv") and outcome.table is not None:
        outcome.table.to_csv(cfg["csv"], index=False)
    return (EXIT_PASS if outcome.passed else EXIT_FAIL), report


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="Reeb flows, pseudo-Anosov models and orbit censuses.")
    parser.add_argument("cmd", nargs="?", choices=sorted(COMMANDS), help="command (overrides the config's cmd)")
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    parser.add_argument("--csv", metavar="PATH", help="CSV table output (growth)")
    parser.add_argument("--workers", type=int, metavar="N", help="worker threads")
    parser.add_argument("--seed", type=int, metavar="N", help="random seed")
    parser.add_argument("--kmax", type=int, metavar="N", help="census level cutoff")
    parser.add_argument("--matrix", metavar="a,b,c,d", help="torus automorphism entries")
    parser.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS, help="log level (stderr)")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    return parser


def _merge_args(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = dict(cfg)
    if args.cmd:
        cfg["cmd"] = args.cmd
    for key in ("out", "csv", "workers", "seed", "kmax", "matrix"):
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    return cfg


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT, stream=sys.stderr)

    cfg: dict = {}
    try:
        raw = load_config(args.config) if args.config else {}
        cfg = validate_config(_merge_args(raw, args))
        code, report = dispatch(cfg)
    except Exception as exc:
        pointer = getattr(exc, "pointer", None)
        if isinstance(exc, (ReebPAError, OSError, ValueError)):
            logger.debug("run failed", exc_info=True)
        else:
            logger.exception("internal error")
        print(f"{TOOL_NAME}: error: {exc}", file=sys.stderr)
        if args.out:
            report = build_report(cfg or {"cmd": args.cmd}, "error",
                                  {"error": {"type": type(exc).__name__, "message": str(exc), "pointer": pointer}})
            try:
                _emit(report, args.out)
            except OSError:
                pass
        return EXIT_ERROR

    _emit(report, cfg.get("out"))
    return code


if __name__ == "__main__":
    sys.exit(main())
