"""
Command-line front end.

    dualppln <command> --config <path> [--out <dir>] [--threads N] [--no-cache]

Commands: design, map, spectrum, dip, eo, entropy, validate. Exit status
0 on success, 2 for configuration errors, 3 for computation errors (or a
failed validation), 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, biphoton, cache, eo, grating, qpm, validate, waveguide
from .config import RunConfig, load_config
from .errors import DualPPLNError, EmptyLocus, SchemaError
from .output import Manifest

log = logging.getLogger("dualppln")

COMMANDS = ("design", "map", "spectrum", "dip", "eo", "entropy", "validate")
EXIT_OK, EXIT_SCHEMA, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4


class Context:
    """Per-run state handed to every command."""

    def __init__(self, cfg: RunConfig, out_dir: Path, command: str, threads: int = 1):
        self.cfg = cfg
        self.threads = max(1, int(threads))
        self.formats = set(cfg.section("output")["formats"])
        self.manifest = Manifest(out_dir, command, cfg.digest, __version__)

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            self.manifest.write_csv(name, header, rows)

    def json(self, name, doc):
        if "json" in self.formats:
            self.manifest.write_json(name, doc)

    def svg(self, name, draw, *args, **kwargs):
        if "svg" in self.formats:
            path = self.manifest.out_dir / f"{name}.svg"
            draw(path, *args, **kwargs)
            self.manifest.add_file(name, path, "svg")


# ------------------------------------------------------------- helpers ---

def _design_point(cfg: RunConfig):
    lam_p, lam_s, T = cfg.waves
    return qpm.design(cfg.geometry, lam_p, lam_s, T, cfg.orders, cfg.model)


def _poling(cfg: RunConfig) -> grating.PolingDesign:
    if cfg.solve_periods:
        sol = _design_point(cfg)
        return cfg.poling((sol.period1, sol.period2))
    return cfg.poling()


def _expansions(cfg: RunConfig):
    lam_p, lam_s, T = cfg.waves
    return biphoton.design_expansions(cfg.geometry, lam_p, lam_s, T, cfg.model)


def _eo_setup(cfg: RunConfig):
    """(slope d kappa/dE, delta, L_m, G_eff, F_EO) for the signal conversion."""
    sec = cfg.section("eo")
    lam_p, lam_s, T = cfg.waves
    geom, model = cfg.geometry, cfg.model
    design = _poling(cfg)
    cutoff = cfg.section("poling")["coincidence_cutoff"]
    m3, n3 = cfg.orders[2]
    G = grating.effective_coefficient(m3, n3, design, cutoff)
    so = waveguide.solve_mode(geom, "o", lam_s, T, model)
    se = waveguide.solve_mode(geom, "e", lam_s, T, model)
    F = waveguide.overlap_integral([so, se]) if sec["F_EO"] == "overlap" else float(sec["F_EO"])
    cal = sec.get("kappa_calibration")
    if cal:
        slope = cal["kappa_rad_per_m"] / cal["at_field_V_per_m"]
    else:
        slope = eo.coupling_coefficient(lam_s, so.n_eff, se.n_eff, cfg.constants.gamma51, 1.0, G, F)
    if sec["delta_rad_per_m"] == "design":
        d3 = qpm.mismatches(geom, lam_p, lam_s, T, model)[2]
        K3 = grating.reciprocal_vector(m3, n3, design.period1, design.period2)
        delta = (d3 - K3) * 1e6
    else:
        delta = float(sec["delta_rad_per_m"])
    return slope, delta, sec["length_cm"] * 1e-2, G, F


def _eo_field(cfg: RunConfig, slope, delta, length):
    sec = cfg.section("eo")
    if sec["field_V_per_m"] == "solve":
        return eo.field_for_target(sec["eta_target"], length, delta, slope)
    return float(sec["field_V_per_m"])


def _axis(spec):
    lo, hi = spec["range"]
    return np.linspace(lo, hi, spec["steps"])


# ------------------------------------------------------------ commands ---

def cmd_design(ctx: Context):
    from .plotting import line_plot

    cfg = ctx.cfg
    sol = _design_point(cfg)
    d1, d2, d3 = sol.mismatches
    ctx.csv("periods",
            ["period1_um", "period2_um", "r1_rad_per_um", "r2_rad_per_um", "r3_rad_per_um",
             "dbeta1_rad_per_um", "dbeta2_rad_per_um", "dbeta3_rad_per_um"],
            [[sol.period1, sol.period2, *sol.residuals, d1, d2, d3]])
    doc = {
        "wavelengths_um": {"pump": sol.lam_p, "signal": sol.lam_s, "idler": sol.lam_i},
        "temperature_C": sol.T,
        "orders": [list(o) for o in sol.orders],
        "periods_um": [sol.period1, sol.period2],
        "residuals_rad_per_um": list(sol.residuals),
        "mismatches_rad_per_um": [d1, d2, d3],
    }
    if not cfg.solve_periods:
        p1, p2 = cfg.section("poling")["periods_um"]
        doc["configured_periods_um"] = [p1, p2]
        doc["relative_deviation"] = [(sol.period1 - p1) / p1, (sol.period2 - p2) / p2]
    ctx.json("design", doc)
    design = cfg.poling((sol.period1, sol.period2))
    pattern = grating.synthesize_pattern(design)
    path = ctx.manifest.out_dir / "poling_pattern.txt"
    grating.write_pattern(pattern, path)
    ctx.manifest.add_file("poling_pattern", path, "txt")
    # first two long periods of the domain sign, for a visual check
    x = np.linspace(0.0, min(2 * design.period2, design.length_um), 4001)
    starts, ends, signs = pattern.segments()
    f = signs[np.clip(np.searchsorted(ends, x), 0, signs.size - 1)]
    ctx.svg("poling", line_plot, x, {"sign": f}, "x (um)", "domain sign")
    return True


def cmd_map(ctx: Context):
    from .plotting import heatmap

    cfg = ctx.cfg
    sw = cfg.section("sweep")
    lam_p, lam_s, T = cfg.waves
    s_ax, t_ax = sw["signal_um"], sw["second"]
    dmap = qpm.delta_map(
        cfg.geometry,
        (*s_ax["range"], s_ax["steps"]),
        (*t_ax["range"], t_ax["steps"]),
        kind=sw["kind"], lam_p=lam_p, T=T, orders=cfg.orders, model=cfg.model, threads=ctx.threads,
    )
    rows = [
        [dmap.axis1[i], dmap.axis2[j], dmap.values[j, i], int(dmap.valid[j, i])]
        for j in range(dmap.axis2.size) for i in range(dmap.axis1.size)
    ]
    ctx.csv("map", ["axis1", "axis2", "delta_rad_per_um", "valid"], rows)
    try:
        locus = qpm.matching_locus(dmap)
    except EmptyLocus:
        locus = []
    ctx.csv("locus", ["axis1", "axis2"], locus)
    marker = (lam_s, lam_p if sw["kind"] == "pump" else T)
    ctx.svg("map", heatmap, dmap.axis1, dmap.axis2, dmap.values, "signal wavelength (um)",
            "pump wavelength (um)" if sw["kind"] == "pump" else "temperature (C)",
            "Delta (rad/um)", locus=locus, marker=marker)
    ctx.manifest.checks.append({"name": "locus_points", "value": len(locus)})
    if not locus:
        raise EmptyLocus("Delta has no zero crossing on the configured grid")
    return True


def cmd_spectrum(ctx: Context):
    from .plotting import line_plot

    cfg = ctx.cfg
    sp = cfg.section("spectrum")
    _, lam_s, _ = cfg.waves
    L = cfg.section("poling")["length_cm"] * 1e-2
    ex = _expansions(cfg)
    rows, widths, curves, xs = [], [], {}, {}
    for b in biphoton.BRANCH_FACTORS:
        nu = biphoton.frequency_grid(L, ex, b, sp["points"], sp["zeros"], sp["sinc"])
        s = biphoton.spectrum(b, L, ex, nu, sp["sinc"])
        rows += [[n, v, b] for n, v in zip(s.nu, s.values)]
        widths.append([b, biphoton.fwhm_nm(s, lam_s), lam_s])
        xs[b], curves[b] = s.nu * 1e-12, s.values
    ctx.csv("spectrum", ["nu_rad_per_s", "amplitude_sq", "branch"], rows)
    ctx.csv("fwhm", ["branch", "fwhm_nm", "lambda_center_um"], widths)
    ctx.json("walkoff", {k: {"D_s_per_m": e.D} for k, e in ex.items()})
    ctx.svg("spectrum", line_plot, xs, curves, "detuning (rad/ps)", "normalized |h|^2")
    return True


def cmd_dip(ctx: Context):
    from .plotting import line_plot

    cfg = ctx.cfg
    sp = cfg.section("spectrum")
    L = cfg.section("poling")["length_cm"] * 1e-2
    ex = _expansions(cfg)
    span = sp["tau_span"] * L * max(abs(e.D) for e in ex.values())
    tau = np.linspace(-span, span, sp["tau_points"])
    curves = {}
    for b in biphoton.BRANCH_FACTORS:
        nu = biphoton.dip_grid(L, ex, b, sp["dip_zeros"], sp["dip_points_per_zero"], sp["sinc"])
        rc = biphoton.hom_dip(biphoton.spectrum(b, L, ex, nu, sp["sinc"]), tau)
        ctx.csv(f"dip_{b}", ["tau_s", "Rc"], zip(tau, rc))
        curves[b] = rc
    ctx.svg("dip", line_plot, tau * 1e12, curves, "delay (ps)", "R_C")
    return True


def cmd_eo(ctx: Context):
    from .plotting import line_plot

    cfg = ctx.cfg
    slope, delta, L, G, F = _eo_setup(cfg)
    E_a = _eo_field(cfg, slope, delta, L)
    kappa = slope * E_a
    setting = eo.EOSetting(E_a, kappa, delta, L)
    o_in, e_in = eo.FieldAmplitudes(1 + 0j, 0j), eo.FieldAmplitudes(0j, 1 + 0j)
    eta_oe = eo.conversion_efficiency(eo.propagate(setting, o_in), "e")
    eta_eo = eo.conversion_efficiency(eo.propagate(setting, e_in), "o")
    ctx.json("eo", {
        "field_V_per_m": E_a, "kappa_rad_per_m": kappa, "slope_rad_per_V": slope,
        "delta_rad_per_m": delta, "length_m": L, "G_eff": G, "F_EO": F,
        "eta_o_to_e": eta_oe, "eta_e_to_o": eta_eo,
    })
    sw = cfg.section("sweep")
    fields, lengths = _axis(sw["eo_field_V_per_m"]), _axis(sw["eo_length_cm"])
    points = list(itertools.product(fields, lengths))

    def eta_at(p):
        e_a, l_cm = p
        k = slope * e_a
        out = eo.propagate(eo.EOSetting(e_a, k, delta, l_cm * 1e-2), o_in)
        return eo.conversion_efficiency(out, "e")

    with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
        etas = list(pool.map(eta_at, points))
    ctx.csv("eo_sweep", ["E_a_V_per_m", "L_cm", "eta"], [[e, l, v] for (e, l), v in zip(points, etas)])
    x, p_o, p_e = eo.power_trace(setting, o_in, cfg.section("eo")["trace_points"])
    ctx.csv("eo_trace", ["x_m", "P_o", "P_e"], zip(x, p_o, p_e))
    ctx.svg("eo_trace", line_plot, x * 1e2, {"P_o": p_o, "P_e": p_e}, "x (cm)", "power fraction")
    return True


def _entropies(cfg: RunConfig, geom, E_a, eta=None):
    lam_p, lam_s, T = cfg.waves
    design = _poling(cfg)
    sec = cfg.section("state")
    conv = cfg.section("spectrum")["sinc"]
    cutoff = cfg.section("poling")["coincidence_cutoff"]
    ex = biphoton.design_expansions(geom, lam_p, lam_s, T, cfg.model)
    inp = biphoton.state_inputs(geom, design, lam_p, lam_s, T, cfg.model, cfg.constants, cutoff)
    orth = biphoton.state_coefficients(inp, 0.0, ex, weighting=sec["weighting"], convention=conv)
    par = biphoton.state_coefficients(inp, E_a, ex, weighting=sec["weighting"], convention=conv, eta=eta)
    return orth, par


def cmd_entropy(ctx: Context):
    cfg = ctx.cfg
    sec = cfg.section("state")
    slope, delta, L, _, _ = _eo_setup(cfg)
    E_a = _eo_field(cfg, slope, delta, L)
    eta = None
    if sec["impurity"]:
        setting = eo.EOSetting(E_a, slope * E_a, delta, L)
        eta = (eo.conversion_efficiency(eo.propagate(setting, eo.FieldAmplitudes(1 + 0j, 0j)), "e"),
               eo.conversion_efficiency(eo.propagate(setting, eo.FieldAmplitudes(0j, 1 + 0j)), "o"))
    orth, par = _entropies(cfg, cfg.geometry, E_a, eta)
    s_orth, s_par = biphoton.entropy(orth), biphoton.entropy(par)
    ctx.json("state", {
        "field_V_per_m": E_a,
        "orthogonal": {"P": orth.P, "weights": orth.weights, "branch": orth.branch, "entropy_bits": s_orth},
        "parallel": {"P": par.P, "weights": par.weights, "branch": par.branch, "entropy_bits": s_par},
        "impurity_eta": eta,
        "provenance": orth.provenance,
    })
    g0 = cfg.geometry
    rows = []
    factors = sec["geometry_sweep"]
    for fw, fd, fn in itertools.product(factors, repeat=3):
        geom = waveguide.WaveguideGeometry(g0.width * fw, g0.depth * fd, g0.dn_max * fn, g0.lateral_diffusion)
        try:
            o, p = _entropies(cfg, geom, E_a, eta)
            rows.append([geom.width, geom.depth, geom.dn_max, biphoton.entropy(o), biphoton.entropy(p), 1])
        except DualPPLNError as exc:
            log.info("geometry %s skipped: %s", geom, exc)
            rows.append([geom.width, geom.depth, geom.dn_max, math.nan, math.nan, 0])
    ctx.csv("entropy_sweep", ["width_um", "depth_um", "dn_max", "S_orthogonal", "S_parallel", "guided"], rows)
    ok = [r for r in rows if r[-1]]
    if ok:
        ctx.manifest.checks.append({"name": "entropy_floor", "value": min(min(r[3], r[4]) for r in ok)})
    return True


def cmd_validate(ctx: Context):
    checks = validate.run_all(ctx.cfg.model)
    ctx.csv("validate", ["check", "error", "tolerance", "passed"],
            [[c.name, c.error, float(c.tolerance), int(c.passed)] for c in checks])
    for c in checks:
        ctx.manifest.checks.append({"name": c.name, "passed": c.passed})
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  error={c.error:.3e}  tol={c.tolerance:.1e}")
    return all(c.passed for c in checks)


HANDLERS = {
    "design": cmd_design, "map": cmd_map, "spectrum": cmd_spectrum, "dip": cmd_dip,
    "eo": cmd_eo, "entropy": cmd_entropy, "validate": cmd_validate,
}


def execute(command: str, cfg: RunConfig, out_dir, threads=1, use_cache=True, cache_dir=None) -> Manifest:
    """Run one command, write its artifacts and manifest, return the manifest.

    Raises the module error on failure. A command whose own checks fail
    returns a manifest with ``ok`` False in its checks list.
    """
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, out_dir, command, threads)
    store = None
    if use_cache:
        store = Path(cache_dir) if cache_dir else cache.default_cache_dir()
        store = store / cache.STORE_NAME
        n = cache.load_modes(store, None, cfg.model)
        log.info("loaded %d cached modes from %s", n, store)
    ok = HANDLERS[command](ctx)
    ctx.manifest.checks.append({"name": "command_ok", "passed": bool(ok)})
    if store is not None:
        cache.save_modes(store)
    ctx.manifest.save()
    return ctx.manifest


def build_parser():
    parser = argparse.ArgumentParser(prog="dualppln", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides output.directory)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    parser.add_argument("--no-cache", action="store_true", help="neither read nor write the mode cache")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out) if args.out else Path(cfg.section("output")["directory"])
        manifest = execute(args.command, cfg, out, args.threads, not args.no_cache)
    except SchemaError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DualPPLNError, ValueError, ArithmeticError) as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if not manifest.verify():
        print("manifest verification failed", file=sys.stderr)
        return EXIT_IO
    ok = all(c.get("passed", True) for c in manifest.checks)
    print(f"{args.command}: wrote {len(manifest.artifacts)} artifacts to {manifest.out_dir}")
    return EXIT_OK if ok else EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
