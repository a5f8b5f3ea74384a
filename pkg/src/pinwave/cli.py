"""Batch front-end.

Parses a flat key=value config file plus command-line overrides (flags
win), dispatches to the solvers, and writes machine-readable CSV/JSON.
Every output carries a header block with the tool version, the fully
resolved configuration, and assumption flags.  Floats are written with 17
significant digits so identical configs give byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__, dispersion, foldy, greens, wienerhopf
from .errors import IllConditionedWarning, PinwaveError
from .types import IncidentWave, LatticeGeometry

COMMANDS = ("field", "coeffs", "energy", "contours", "stack-modes", "orders", "kernel-check")

_CONFIG_KEYS = {
    "command": str, "beta": float, "beta0": float, "beta1": float, "beta_step": float,
    "psi": float, "s": float, "dx": float, "dy": float, "kappa_y": float,
    "n_pins": int, "delta": float, "delta_beta": float, "intervals": int,
    "n_terms": int, "k_max": int, "solver": str, "grid": str, "out": str,
    "lattice": str, "order_cap": int,
    "beta_list": str, "m_half": int, "n_grid": int,
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, complex):
        return f"{_fmt(x.real)},{_fmt(x.imag)}"
    return str(x)


def _parse_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line without '=': {raw.rstrip()}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key: {key}")
            values[key] = val
    return values


def build_parser():
    p = argparse.ArgumentParser(prog="pinwave", description=__doc__)
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--beta", type=float)
    p.add_argument("--beta0", type=float, help="sweep start (energy, stack-modes)")
    p.add_argument("--beta1", type=float, help="sweep end")
    p.add_argument("--beta-step", dest="beta_step", type=float)
    p.add_argument("--beta-list", dest="beta_list", help="comma-separated betas (contours)")
    p.add_argument("--psi", type=float, default=None)
    p.add_argument("--s", type=float, help="single-grating pitch")
    p.add_argument("--dx", type=float)
    p.add_argument("--dy", type=float)
    p.add_argument("--kappa-y", dest="kappa_y", type=float,
                   help="override the default kappa_y = beta sin(psi)")
    p.add_argument("--n-pins", dest="n_pins", type=int)
    p.add_argument("--delta", type=float, help="factorization contour offset")
    p.add_argument("--delta-beta", dest="delta_beta", type=float)
    p.add_argument("--intervals", type=int)
    p.add_argument("--n-terms", dest="n_terms", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--m-half", dest="m_half", type=int)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--order-cap", dest="order_cap", type=int)
    p.add_argument("--grid", help="x0,x1,y0,y1,nx,ny")
    p.add_argument("--solver", choices=("foldy", "wiener-hopf", "both"))
    p.add_argument("--lattice", action="store_const", const="true",
                   help="half-plane lattice of grating columns instead of a single grating")
    p.add_argument("--out", help="output file path (default: stdout)")
    return p


DEFAULTS = {
    "psi": 0.0, "s": 1.0, "delta": 0.0025, "intervals": 1200,
    "n_terms": 5000, "k_max": 100, "n_pins": 500, "solver": "foldy",
    "order_cap": 200, "n_grid": 400, "m_half": 2, "beta_step": 0.005,
}


def resolve_config(argv):
    args = build_parser().parse_args(argv)
    cfg = dict(DEFAULTS)
    assumptions = []
    if args.config:
        for key, raw in _parse_config_file(args.config).items():
            cfg[key] = _CONFIG_KEYS[key](raw)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if "command" not in cfg or cfg["command"] not in COMMANDS:
        raise ValueError(f"--command must be one of {COMMANDS}")
    if "dx" not in cfg:
        cfg["dx"] = cfg["s"]
    if "dy" not in cfg:
        cfg["dy"] = cfg["s"]
    if "delta_beta" not in cfg:
        cfg["delta_beta"] = 2.0 * cfg["delta"] / cfg["dx"]
        assumptions.append("delta_beta=2*delta/d_x (default tie to contour offset)")
    if "kappa_y" not in cfg and "beta" in cfg:
        cfg["kappa_y"] = cfg["beta"] * np.sin(cfg["psi"])
        assumptions.append("kappa_y=beta*sin(psi) (default Bloch coupling)")
    return cfg, assumptions


def _header_lines(cfg, assumptions):
    lines = [f"# pinwave {__version__}", f"# command: {cfg['command']}"]
    for key in sorted(cfg):
        if key != "command":
            lines.append(f"# config: {key}={_fmt(cfg[key])}")
    for a in assumptions:
        lines.append(f"# assumption: {a}")
    return lines


def _write(out_path, text):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header_lines, columns, rows):
    lines = list(header_lines)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _wave(cfg):
    return IncidentWave(beta=cfg["beta"], psi=cfg["psi"])


def _geometry(cfg):
    return LatticeGeometry(d_x=cfg["dx"], d_y=cfg["dy"])


def _is_lattice(cfg):
    return cfg.get("lattice") in ("true", "1", "yes")


def _solve_foldy(cfg, wave):
    if _is_lattice(cfg):
        sc = foldy.ScattererSet.grating_columns(cfg["n_pins"], cfg["dx"], cfg["dy"], cfg["kappa_y"])
    else:
        sc = foldy.ScattererSet.points(cfg["n_pins"], cfg["s"])
    return sc, foldy.solve(sc, wave)


def _solve_wh(cfg, wave):
    if _is_lattice(cfg):
        spec = wienerhopf.KernelSpec(
            mode=wienerhopf.HALF_PLANE_LATTICE, geometry=_geometry(cfg),
            beta=cfg["beta"], kappa_y=cfg["kappa_y"],
            delta_beta=cfg["delta_beta"], n_terms=cfg["n_terms"])
    else:
        spec = wienerhopf.KernelSpec(
            mode=wienerhopf.SINGLE_GRATING, geometry=LatticeGeometry.grating(cfg["s"]),
            beta=cfg["beta"], delta_beta=cfg["delta_beta"], n_terms=cfg["n_terms"])
    config = wienerhopf.FactorizationConfig(delta=cfg["delta"], n_intervals=cfg["intervals"])
    return wienerhopf.solve_coefficients(spec, wave, k_max=cfg["k_max"], config=config)


def cmd_coeffs(cfg, assumptions):
    wave = _wave(cfg)
    head = _header_lines(cfg, assumptions)
    solver = cfg["solver"]
    if solver == "both":
        _, cf = _solve_foldy(cfg, wave)
        cw = _solve_wh(cfg, wave)
        k_top = min(cfg["k_max"], len(cf.values) - 1, len(cw.values) - 1)
        scale = np.max(np.abs(cf.values[: k_top + 1]))
        rows = []
        for k in range(k_top + 1):
            af, aw = cf.values[k], cw.values[k]
            rows.append((k, k * cf.spacing, af.real, af.imag, aw.real, aw.imag,
                         abs(af), abs(aw), abs(abs(af) - abs(aw)) / scale))
        return _csv(head, ["k", "position", "re_foldy", "im_foldy", "re_wh", "im_wh",
                           "abs_foldy", "abs_wh", "rel_diff"], rows)
    if solver == "foldy":
        _, coeffs = _solve_foldy(cfg, wave)
    else:
        coeffs = _solve_wh(cfg, wave)
    rows = [(k, k * coeffs.spacing, a.real, a.imag, abs(a))
            for k, a in enumerate(coeffs.values)]
    return _csv(head, ["k", "position", "re_A", "im_A", "abs_A"], rows)


def cmd_field(cfg, assumptions):
    wave = _wave(cfg)
    if "grid" not in cfg:
        raise ValueError("field command needs --grid x0,x1,y0,y1,nx,ny")
    g = [float(v) for v in cfg["grid"].split(",")]
    grid = (g[0], g[1], g[2], g[3], int(g[4]), int(g[5]))
    sc, coeffs = _solve_foldy(cfg, wave)
    fm = foldy.field(sc, wave, coeffs, grid)
    head = _header_lines(cfg, assumptions)
    rows = []
    for iy, yv in enumerate(fm.y):
        for ix, xv in enumerate(fm.x):
            inc = fm.incident[iy, ix]
            scv = fm.scattered[iy, ix]
            tot = inc + scv
            rows.append((xv, yv, inc.real, inc.imag, scv.real, scv.imag, tot.real, tot.imag))
    return _csv(head, ["x", "y", "re_inc", "im_inc", "re_scat", "im_scat", "re_tot", "im_tot"], rows)


def cmd_energy(cfg, assumptions):
    betas = np.arange(cfg["beta0"], cfg["beta1"] + 0.5 * cfg["beta_step"], cfg["beta_step"])
    head = _header_lines(cfg, assumptions)
    rows = []
    for b in betas:
        wave = IncidentWave(beta=float(b), psi=cfg["psi"])
        try:
            orders, r_tot, t_tot = foldy.infinite_grating_energy(wave, cfg["s"], cfg["order_cap"])
            rows.append((b, r_tot, t_tot, len(orders), r_tot + t_tot))
        except greens.WoodAnomalyError:
            rows.append((b, float("nan"), float("nan"), -1, float("nan")))
    return _csv(head, ["beta", "R_tot", "T_tot", "n_orders", "sum"], rows)


def cmd_orders(cfg, assumptions):
    wave = _wave(cfg)
    orders = dispersion.spectral_orders(wave, cfg["s"])
    kind, p_res = dispersion.resonance_check(wave, cfg["s"])
    head = _header_lines(cfg, assumptions)
    head.append(f"# resonance: {kind}" + (f" p={p_res}" if p_res is not None else ""))
    rows = []
    for o in orders:
        phi = complex(o.phi_p)
        rows.append((o.p, phi.real, phi.imag, o.propagating))
    return _csv(head, ["p", "re_phi", "im_phi", "propagating"], rows)


def cmd_contours(cfg, assumptions):
    geom = _geometry(cfg)
    betas = [float(v) for v in str(cfg["beta_list"]).split(",")] if "beta_list" in cfg else [cfg["beta"]]
    head = _header_lines(cfg, assumptions)
    rows = []
    for b in betas:
        contour = dispersion.isofrequency_scan(geom, b, n_grid=cfg["n_grid"])
        for ci, poly in enumerate(contour.polylines):
            for kx, ky, res in poly:
                rows.append((b, ci, kx, ky, res))
    return _csv(head, ["beta", "contour_id", "kappa_x", "kappa_y", "residual"], rows)


def cmd_stack_modes(cfg, assumptions):
    geom = _geometry(cfg)
    problem = dispersion.StackProblem(
        m_half=cfg["m_half"], geometry=geom,
        beta_range=(cfg["beta0"], cfg["beta1"]), beta_step=cfg["beta_step"],
        kappa_y=cfg.get("kappa_y", 0.0), psi=cfg["psi"])
    res = dispersion.stack_modes(problem)
    head = _header_lines(cfg, assumptions)
    head.append(f"# assumption: kappa_y rule = {res['kappa_y_rule']} (psi={_fmt(res['psi'])})")
    rows = [(b, d.real, d.imag, abs(d), s)
            for b, d, s in zip(res["beta"], res["det"], res["sigma_min"])]
    text = _csv(head, ["beta", "re_det", "im_det", "abs_det", "sigma_min"], rows)
    summary = {"roots": res["roots"], "det_maxima": res["det_maxima"]}
    text += "# summary: " + json.dumps(summary, sort_keys=True) + "\n"
    return text


def cmd_kernel_check(cfg, assumptions):
    wave = _wave(cfg)
    geom = LatticeGeometry.grating(cfg["s"])
    spec = wienerhopf.KernelSpec(
        mode=wienerhopf.SINGLE_GRATING, geometry=geom, beta=cfg["beta"],
        delta_beta=cfg["delta_beta"], n_terms=cfg["n_terms"])
    config = wienerhopf.FactorizationConfig(delta=cfg["delta"], n_intervals=cfg["intervals"])
    fk = wienerhopf.factorize(spec, config)
    rng = np.random.default_rng(7)
    r = np.exp(rng.uniform(-0.4, 0.4, 50) * cfg["delta"])
    th = rng.uniform(0, 2 * np.pi, 50)
    z = r * np.exp(1j * th)
    k1 = fk.kernel_at(z)
    k2 = fk.kernel_at(1.0 / z)
    sym_err = float(np.max(np.abs(k1 - k2) / np.max(np.abs(k1))))
    zu = np.exp(1j * 2 * np.pi * (np.arange(256) + 0.5) / 256)
    prod_err = float(np.max(np.abs(fk.plus_at(zu) * fk.minus_at(zu) / fk.kernel_at(zu) - 1)))
    report = {
        "beta": cfg["beta"], "symmetry_max_rel_err": sym_err,
        "product_identity_max_err": prod_err,
        "n_intervals": cfg["intervals"], "delta": cfg["delta"],
    }
    head = _header_lines(cfg, assumptions)
    return "\n".join(head) + "\n" + json.dumps(report, sort_keys=True) + "\n"


_DISPATCH = {
    "coeffs": cmd_coeffs,
    "field": cmd_field,
    "energy": cmd_energy,
    "orders": cmd_orders,
    "contours": cmd_contours,
    "stack-modes": cmd_stack_modes,
    "kernel-check": cmd_kernel_check,
}


def run(argv=None) -> int:
    try:
        cfg, assumptions = resolve_config(argv)
    except (ValueError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": "CONFIG_ERROR", "message": str(exc)}) + "\n")
        return 2
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", IllConditionedWarning)
            text = _DISPATCH[cfg["command"]](cfg, assumptions)
        for w in caught:
            if issubclass(w.category, IllConditionedWarning):
                sys.stderr.write(json.dumps(
                    {"error": "ILL_CONDITIONED", "message": str(w.message)}) + "\n")
    except PinwaveError as exc:
        sys.stderr.write(json.dumps(
            {"error": exc.code, "message": str(exc)}, sort_keys=True) + "\n")
        return 3
    _write(cfg.get("out"), text)
    return 0


def main():  # console entry point
    raise SystemExit(run())


if __name__ == "__main__":
    main()
