"""Command-line front end: ``trapforge <verb> [--config PATH] [--out DIR] ...``.

Verbs: optimize-geometry, optimize-axial, analyze, separate, sweep.
Exit codes: 0 ok, 2 configuration error, 3 no trapping point, 4 ion lost,
5 numerical failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures as cf
import copy
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import axial as ax
from . import config as cfg
from . import constraints as cons
from . import geometry as geo
from . import shuttling as sh
from .constants import UM
from .errors import ConfigError, IonLost, NoCrossing, TrapForgeError

log = logging.getLogger("trapforge")

EXIT_OK, EXIT_CONFIG, EXIT_NO_TRAP, EXIT_ION_LOST, EXIT_NUMERIC = 0, 2, 3, 4, 5


# -- output helpers ---------------------------------------------------------

def _clean(obj):
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for r in rows:
            wr.writerow([_cell(v) for v in r])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else v


def worker_count():
    try:
        return max(1, int(os.environ.get("TRAPFORGE_THREADS", "1")))
    except ValueError:
        raise ConfigError("TRAPFORGE_THREADS must be an integer") from None


def ordered_map(fn, items):
    """Map in a worker pool when ``TRAPFORGE_THREADS > 1``; input order is kept."""
    n = worker_count()
    items = list(items)
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with cf.ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- verbs --------------------------------------------------------------------

def cmd_optimize_geometry(conf, out):
    opt = conf.data["optimize"]
    summary = {}
    zetas = np.geomspace(0.1, 50.0, 512)
    cols = {}
    for mode in opt["ratio_modes"]:
        zeta, kappa = geo.optimize_zeta(mode)
        fw = geo.FiveWireParams.from_zeta(zeta, 1.0, mode)
        summary[mode] = {"zeta_star": zeta, "kappa_star": kappa,
                         "h_over_a": geo.rf_node_analytic(fw)[1]}
        cols[mode] = [geo.kappa_parameterised(z, mode) for z in zetas]
    header = ["zeta"] + [f"kappa_{m}" for m in opt["ratio_modes"]]
    write_csv(out / "kappa_curve.csv", header,
              [[z] + [cols[m][i] for m in opt["ratio_modes"]] for i, z in enumerate(zetas)])
    write_json(out / "geometry_summary.json", summary)
    return summary


def _axial_design(args):
    design, a, mode, n_grid = args
    tpl = ax.design_template(design, a, mode)
    w, b, (ws, bs) = ax.optimize_segment_width(tpl, n_grid=n_grid)
    tpl = tpl.with_widths(E=w, W=w, C_w=w)
    r, br, (rs, brs) = ax.optimize_wedge_ratio(tpl, n_grid=n_grid)
    return {"design": design, "W_star_over_a": w / a, "beta_at_W_star": b,
            "W_over_E_star": r, "beta_at_ratio_star": br,
            "width_curve": list(zip((ws / a).tolist(), bs.tolist())),
            "ratio_curve": list(zip(rs.tolist(), brs.tolist()))}


def cmd_optimize_axial(conf, out):
    opt = conf.data["optimize"]
    a = opt["a_um"] * UM
    jobs = [(d, a, opt["ratio_mode"], int(opt["n_grid"])) for d in opt["designs"]]
    results = ordered_map(_axial_design, jobs)
    summary = {}
    for res in results:
        d = res["design"]
        write_csv(out / f"beta_vs_width_{d}.csv", ["W_over_a", "beta_V_per_m4"], res.pop("width_curve"))
        write_csv(out / f"beta_vs_ratio_{d}.csv", ["W_over_E", "beta_V_per_m4"], res.pop("ratio_curve"))
        summary[d] = res
    if len(summary) == 2:
        widths = {d: summary[d]["W_star_over_a"] for d in summary}
        rows = ax.compare_designs([a], opt["ratio_mode"], widths=widths)
        summary["beta_ratio_centre_over_outer"] = rows[0]["beta_ratio"]
    write_json(out / "axial_summary.json", summary)
    return summary


def analyze_layout(conf, layout, drive, with_budget=True):
    ion = conf.ion()
    info = geo.rf_node_numeric(layout, drive, ion, with_modes=False)
    p = layout.five_wire
    kappa = geo.kappa_exact(p.a, p.b, p.c)
    start = conf.start_voltages()
    wx, wy, angle = geo.radial_modes(layout, drive, ion, voltages=start,
                                     node=(info.x0, info.h), strict=False)
    wx0, wy0, _ = geo.radial_modes(layout, drive, ion, node=(info.x0, info.h), strict=False)
    fit = ax.fit_adaptive(layout, start, charge=ion.charge)
    unit = ax.unit_fit(layout)
    result = {
        "node": {"x0_m": info.x0, "h_m": info.h, "x0_analytic_m": layout.node_analytic()[0],
                 "h_analytic_m": layout.node_analytic()[1],
                 "escape_point_m": info.escape_point},
        "depth_eV": info.depth,
        "depth_analytic_eV": geo.trap_depth_analytic(info.h, kappa, drive, ion),
        "kappa": kappa,
        "compensation_width_m": layout.d,
        "radial": {"omega_x_rad_s": wx, "omega_y_rad_s": wy, "principal_axis_angle_rad": angle,
                   "rf_only_omega_rad_s": [wx0, wy0]},
        "axial": {"alpha_V_per_m2": fit.alpha, "beta_V_per_m4": fit.beta,
                  "well_count": fit.well_count, "well_positions_m": fit.well_positions,
                  "omega_z_rad_s": _safe_omega(fit, ion), "branch": ax.axial_branch(fit, ion),
                  "unit_protocol_alpha": unit.alpha, "unit_protocol_beta": unit.beta},
        "stability_q": cons.stability_q(drive, ion, info.h),
    }
    if with_budget:
        result["budget"] = cons.check_budget(layout, drive, [start, conf.end_voltages()],
                                             conf.budget(), ion)
    return result


def _safe_omega(fit, ion):
    try:
        return ax.axial_frequency(fit, ion)
    except TrapForgeError:
        return None


def cmd_analyze(conf, out):
    result = analyze_layout(conf, conf.layout(), conf.drive())
    write_json(out / "analysis.json", result)
    return result


def _separation_job(args):
    conf_data, steep, T, emit, out = args
    conf = cfg.RunConfig(conf_data)
    sep = conf.data["separation"]
    w = sh.Waveform(conf.start_voltages(), conf.end_voltages(),
                    sh.RampProfile(sep["profile"], float(steep), T))
    run = sh.run_separation(conf.layout(), conf.drive(), conf.ion(), w,
                            n_ions=int(sep["n_ions"]), tol=conf.tolerances(),
                            heating=conf.heating(),
                            temperature=float(sep["initial_temperature_K"]),
                            seed=conf.data["seed"], with_depth=False)
    summary = run.summary()
    if emit:
        name = f"trajectory_N{steep:g}_T{T * 1e6:g}us.csv"
        run.write_csv(Path(out) / name)
        summary["trajectory_csv"] = name
    return summary


def cmd_separate(conf, out):
    sep = conf.data["separation"]
    layout, drive, ion = conf.layout(), conf.drive(), conf.ion()
    emit = bool(conf.data["output"]["emit_trajectory"])
    durations = conf.durations()
    jobs = [(conf.data, float(n), T, emit, str(out)) for n in sep["steepness"] for T in durations]
    runs = ordered_map(_separation_job, jobs)
    # depth retention is a property of the voltage path, not of the duration
    w = sh.Waveform(conf.start_voltages(), conf.end_voltages(),
                    sh.RampProfile(sep["profile"], float(sep["steepness"][0]), durations[0]))
    depth = sh.depth_trace(layout, drive, ion, w, int(sep["depth_samples"]), int(sep["n_ions"]))
    crossings = {}
    for n in sep["steepness"]:
        sel = [r for r in runs if r["steepness"] == float(n)]
        key = f"{float(n):g}"
        if len(sel) < 3:
            crossings[key] = {"error": "fewer than 3 durations"}
            continue
        rep = sh.fit_crossing([r["T_s"] for r in sel], [r["n_s"] for r in sel],
                              [r["n_an"] for r in sel])
        crossings[key] = rep.as_dict()
    best = [c["t_star_s"] for c in crossings.values() if c.get("t_star_s") is not None]
    summary = {
        "runs": runs,
        "crossings": crossings,
        "omega_min_rad_s": min(r["omega_min_rad_s"] for r in runs),
        "n_s": [r["n_s"] for r in runs],
        "n_an": [r["n_an"] for r in runs],
        "n_total": [r["n_total"] for r in runs],
        "t_star_s": min(best) if best else None,
        "min_depth_eV": float(depth[:, 1].min()),
        "budget": cons.check_budget(layout, drive, [conf.start_voltages(), conf.end_voltages()],
                                    conf.budget(), ion),
    }
    write_json(out / "separation_summary.json", summary)
    write_csv(out / "depth_trace.csv", ["t_over_T", "depth_eV"],
              [[t / durations[0], d] for t, d in depth])
    return summary


SWEEP_COLUMNS = ("parameter", "value", "design", "x0_m", "h_m", "depth_eV", "kappa",
                 "omega_x_rad_s", "omega_y_rad_s", "alpha_V_per_m2", "beta_V_per_m4",
                 "omega_z_rad_s", "unit_alpha_V_per_m2", "unit_beta_V_per_m4", "stability_q",
                 "error")


def _sweep_point(args):
    conf_data, param, value = args
    data = copy.deepcopy(conf_data)
    trap, drive = data["trap"], data["drive"]
    if param in drive:
        drive[param] = value
    else:
        if param == "a_um" and data["sweep"]["scale_widths"]:
            s = value / trap["a_um"]
            for k in ("b_um", "c_um", "E_um", "W_um", "C_um", "gap_um"):
                trap[k] *= s
            if trap["d_um"] is not None:
                trap["d_um"] *= s
        trap[param] = value
    row = {"parameter": param, "value": value, "design": trap["design"]}
    try:
        conf = cfg.RunConfig(data)
        res = analyze_layout(conf, conf.layout(), conf.drive(), with_budget=False)
        row.update({
            "x0_m": res["node"]["x0_m"], "h_m": res["node"]["h_m"], "depth_eV": res["depth_eV"],
            "kappa": res["kappa"], "omega_x_rad_s": res["radial"]["omega_x_rad_s"],
            "omega_y_rad_s": res["radial"]["omega_y_rad_s"],
            "alpha_V_per_m2": res["axial"]["alpha_V_per_m2"],
            "beta_V_per_m4": res["axial"]["beta_V_per_m4"],
            "omega_z_rad_s": res["axial"]["omega_z_rad_s"],
            "unit_alpha_V_per_m2": res["axial"]["unit_protocol_alpha"],
            "unit_beta_V_per_m4": res["axial"]["unit_protocol_beta"],
            "stability_q": res["stability_q"]})
    except (TrapForgeError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(conf, out):
    sw = conf.data["sweep"]
    jobs = [(conf.data, sw["parameter"], float(v)) for v in sw["values"]]
    rows = ordered_map(_sweep_point, jobs)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, [[r.get(c) for c in SWEEP_COLUMNS] for r in rows])
    summary = {"parameter": sw["parameter"], "n_points": len(rows),
               "n_errors": sum(1 for r in rows if r.get("error"))}
    write_json(out / "sweep_summary.json", summary)
    return summary


VERBS = {
    "optimize-geometry": cmd_optimize_geometry,
    "optimize-axial": cmd_optimize_axial,
    "analyze": cmd_analyze,
    "separate": cmd_separate,
    "sweep": cmd_sweep,
}


def build_parser():
    p = argparse.ArgumentParser(prog="trapforge", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.directory)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config seed)")
    p.add_argument("--quiet", action="store_true", help="only report errors")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        conf = cfg.load(args.config)
        if args.seed is not None:
            conf.data["seed"] = args.seed
        out = Path(args.out or conf.data["output"]["directory"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "effective_config.json").write_text(conf.to_json() + "\n")
        log.info("running %s into %s", args.verb, out)
        summary = VERBS[args.verb](conf, out)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except IonLost as exc:
        log.error("ion lost: %s; voltages %s", exc, exc.voltages)
        return EXIT_ION_LOST
    except NoCrossing as exc:  # reported in summaries; only reached if raised directly
        log.error("%s", exc)
        return EXIT_NUMERIC
    except TrapForgeError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    if not args.quiet:
        print(json.dumps(_clean(_headline(args.verb, summary)), sort_keys=True))
    return EXIT_OK


def _headline(verb, summary):
    if verb == "separate":
        return {k: summary[k] for k in ("omega_min_rad_s", "t_star_s", "min_depth_eV")}
    if verb == "analyze":
        return {"depth_eV": summary["depth_eV"], "h_m": summary["node"]["h_m"],
                "omega_z_rad_s": summary["axial"]["omega_z_rad_s"]}
    return summary


if __name__ == "__main__":
    sys.exit(main())
