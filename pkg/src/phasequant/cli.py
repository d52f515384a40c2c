"""Command-line front end.

Every subcommand reads an effective run configuration built from (in order of
increasing precedence) built-in defaults, an optional ``--config`` JSON file
and explicit flags.  The effective configuration is echoed on stderr and can
be written with ``--dump-config``; feeding that file back through
``--config`` reproduces the run.  Tables go to CSV (header row, 17
significant digits), scalars and metadata to JSON.

Exit codes: 0 on success, 1 when a numerical contract is violated, 2 on
usage errors.  ``PHASEQUANT_THREADS`` caps the BLAS thread pool.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .constants import PhysicalConstants
from .core import ModelParams, PhaseGrid, PositionGrid
from .errors import PhaseQuantError, RegimeWarning
from .states import load_state_csv, named_state

SUBCOMMANDS = ("transform", "density", "operator", "spectrum", "diffuse", "lamb", "verify")
FMT = "%.17g"

DEFAULTS = {
    "params": {"h": 1.0, "a": 1.0, "b": 1.0},
    "grid": {"half_width": 10.0, "n": 256, "center": 0.0},
    "state": {"name": "gaussian", "q0": 0.0, "p0": 0.0, "file": None},
    "seed": 0,
    "out": None,
}

OPTION_DEFAULTS = {
    "transform": {},
    "density": {"check_normalization": False},
    "operator": {"symbol": "2,0:1", "potential": None, "route": "symbol", "order": "exact", "remove_shift": False},
    "spectrum": {"mass": 1.0, "omega": 1.0, "count": 5, "remove_shift": False, "method": "symbol"},
    "diffuse": {
        "mode": "k1-ground",
        "integrator": "spectral-hermite",
        "tau_end": 0.5,
        "samples": 11,
        "dtau": None,
        "n_hermite": 32,
        "fit_rate": False,
    },
    "lamb": {"dE2_mhz": 1058.0, "level": 2, "modern_alpha": False},
    "verify": {},
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    state: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    options: dict = field(default_factory=dict)

    def model(self) -> ModelParams:
        return ModelParams(h=self.params["h"], a=self.params["a"], b=self.params["b"])

    def position_grid(self) -> PositionGrid:
        g = self.grid
        return PositionGrid.centered(g["half_width"], int(g["n"]), g.get("center", 0.0))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


class UsageError(Exception):
    pass


# -- output helpers -----------------------------------------------------------


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns) -> None:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])

    def _write(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([FMT % v for v in row])

    _atomic_write(Path(path), _write)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(FMT % obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_json(payload: dict, cfg: RunConfig, name: str) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    print(text)
    if cfg.out:
        _atomic_write(Path(cfg.out) / f"{name}.json", lambda fh: fh.write(text + "\n"))


def _out_path(cfg: RunConfig, name: str) -> Path | None:
    return Path(cfg.out) / name if cfg.out else None


# -- state handling -------------------------------------------------------------


def _state(cfg: RunConfig, params: ModelParams, grid: PositionGrid):
    st = cfg.state
    if st.get("file"):
        return load_state_csv(st["file"], grid)
    return named_state(st["name"], grid, params, q0=st.get("q0", 0.0), p0=st.get("p0", 0.0), seed=cfg.seed)


# -- subcommands ------------------------------------------------------------------


def cmd_transform(cfg: RunConfig) -> int:
    from .transform import extract, synthesize

    params, grid = cfg.model(), cfg.position_grid()
    psi = _state(cfg, params, grid)
    pg = PhaseGrid.from_position(grid, params)
    back = extract(synthesize(psi, params, pg), params, grid)
    err = back.distance(psi) / psi.norm()
    if (path := _out_path(cfg, "transform.csv")) is not None:
        write_csv(
            path,
            ["x", "re_psi", "im_psi", "re_roundtrip", "im_roundtrip"],
            [grid.x, psi.values.real, psi.values.imag, back.values.real, back.values.imag],
        )
    emit_json({"roundtrip_relative_error": err, "norm": psi.norm(), "phase_grid": list(pg.shape)}, cfg, "transform")
    return 0 if err < 1e-8 else 1


def cmd_density(cfg: RunConfig) -> int:
    from .density import density_from_wavefunction, smoothing_check, wigner

    params, grid = cfg.model(), cfg.position_grid()
    psi = _state(cfg, params, grid)
    pg = PhaseGrid.from_position(grid, params)
    rho = density_from_wavefunction(psi, params, pg)
    w = wigner(psi, params, pg)
    expected = psi.norm() ** 2
    payload = {
        "integral": rho.norm,
        "norm_squared": expected,
        "minimum": rho.minimum,
        "wigner_minimum": w.minimum,
        "smoothing_residual": smoothing_check(psi, params, pg),
    }
    status = 0
    if cfg.options.get("check_normalization"):
        ok = abs(rho.norm - expected) <= 1e-6 * max(expected, 1e-300)
        payload["normalization_ok"] = ok
        status = 0 if ok else 1
    if (path := _out_path(cfg, "density.csv")) is not None:
        qq, pp = np.meshgrid(pg.q, pg.p, indexing="ij")
        write_csv(path, ["q", "p", "rho", "wigner"], [qq.ravel(), pp.ravel(), rho.values.ravel(), w.values.ravel()])
    emit_json(payload, cfg, "density")
    return status


def _symbol(opts, params):
    from .operators import CoulombPotential, PolynomialSymbol, harmonic

    pot = opts.get("potential")
    if pot == "harmonic":
        return harmonic(opts.get("mass", 1.0), opts.get("omega", 1.0))
    if pot == "coulomb":
        return CoulombPotential(PhysicalConstants().e2)
    if pot:
        raise UsageError(f"unknown potential {pot!r}; expected harmonic or coulomb")
    try:
        return PolynomialSymbol.parse(opts["symbol"])
    except ValueError as exc:
        raise UsageError(f"cannot parse symbol {opts['symbol']!r}: {exc}") from exc


def cmd_operator(cfg: RunConfig) -> int:
    from .operators import expectation, kernel_by_quadrature, kernel_by_symbol

    opts = cfg.options
    params, grid = cfg.model(), cfg.position_grid()
    f = _symbol(opts, params)
    order = opts.get("order", "exact")
    order = 0 if str(order) == "0" else "exact"
    if opts.get("route") == "quadrature":
        op = kernel_by_quadrature(f, params, grid)
        if opts.get("remove_shift"):
            op = op.remove_constant()
    else:
        op = kernel_by_symbol(f, params, grid, order=order, drop_constant=opts.get("remove_shift", False))
    psi = _state(cfg, params, grid)
    payload = {
        "route": opts.get("route"),
        "order": order,
        "hermiticity_error": op.hermiticity_error(),
        "expectation": expectation(op, psi),
        "closed_form": op.closed.to_dict() if op.closed is not None else None,
        "constant_shift": op.constant_shift,
        "constant_removed": op.constant_removed,
    }
    if (path := _out_path(cfg, "kernel.csv")) is not None:
        ii, ll = np.meshgrid(grid.x, grid.x, indexing="ij")
        k = op.kernel
        write_csv(path, ["x", "x_prime", "re", "im"], [ii.ravel(), ll.ravel(), k.real.ravel(), k.imag.ravel()])
    emit_json(payload, cfg, "operator")
    return 0


def cmd_spectrum(cfg: RunConfig) -> int:
    from .spectral import oscillator_levels, oscillator_spectrum

    o = cfg.options
    params, grid = cfg.model(), cfg.position_grid()
    res = oscillator_spectrum(o["mass"], o["omega"], params, grid, int(o["count"]), o["remove_shift"], o["method"])
    expected = oscillator_levels(o["mass"], o["omega"], params, int(o["count"]), o["remove_shift"])
    rel = np.abs(res.eigenvalues - expected) / np.abs(expected)
    if (path := _out_path(cfg, "spectrum.csv")) is not None:
        write_csv(path, ["n", "eigenvalue", "closed_form"], [np.arange(len(expected)), res.eigenvalues, expected])
    emit_json({**res.to_dict(), "closed_form": expected.tolist(), "max_relative_error": float(rel.max())}, cfg, "spectrum")
    return 0


def cmd_diffuse(cfg: RunConfig) -> int:
    from .diffusion import DiffusionSpec, evolve, measure_decay, named_initial
    from .transform import synthesize

    o = cfg.options
    params, grid = cfg.model(), cfg.position_grid()
    pg = PhaseGrid.from_position(grid, params)
    if cfg.state.get("file"):
        phi0 = synthesize(load_state_csv(cfg.state["file"], grid), params, pg)
    else:
        phi0 = named_initial(o["mode"], grid, params, seed=cfg.seed, phase_grid=pg)
    spec = DiffusionSpec(
        params,
        float(o["tau_end"]),
        o["integrator"],
        dtau=o.get("dtau"),
        samples=int(o["samples"]),
        n_hermite=int(o["n_hermite"]),
    )
    traj = evolve(phi0, spec)
    ks = traj.fiber_modes
    if (path := _out_path(cfg, "diffuse.csv")) is not None:
        write_csv(path, ["tau"] + [f"norm_k{k}" for k in ks], [traj.times] + [traj.mode_norms(k) for k in ks])
    payload = {
        "times": traj.times.tolist(),
        "norms": {str(k): traj.mode_norms(k).tolist() for k in ks},
        "dtau": traj.dtau,
        "ground_rate": params.ground_rate,
    }
    if o.get("fit_rate"):
        payload["fiber_rates"] = {str(k): v.to_dict() for k, v in measure_decay(traj).items()}
        payload["hermite_rates"] = {f"{k},{n}": v.to_dict() for (k, n), v in measure_decay(traj, by="hermite").items()}
    emit_json(payload, cfg, "diffuse")
    return 0


def cmd_lamb(cfg: RunConfig) -> int:
    import warnings

    from .spectral import (
        closed_form_shift,
        erg_to_mhz,
        lamb_params,
        lamb_shift_forward,
        lamb_shift_inverse,
        mhz_to_erg,
        perturbative_shift,
    )

    o = cfg.options
    consts = PhysicalConstants.modern() if o.get("modern_alpha") else PhysicalConstants.reproduction()
    n = int(o["level"])
    est = lamb_shift_inverse(mhz_to_erg(float(o["dE2_mhz"]), consts), consts, n)
    payload = est.to_dict()
    payload["forward_check_erg"] = lamb_shift_forward(est.a_over_b, consts, n)
    if n <= 2:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeWarning)
            pert = perturbative_shift(n, lamb_params(est.a_over_b, consts), consts)
        payload["perturbative_shift_mhz"] = erg_to_mhz(pert, consts)
        payload["closed_form_shift_mhz"] = erg_to_mhz(closed_form_shift(n, est.a_over_b, consts), consts)
        payload["regime_warning"] = bool(caught)
    rows = [
        ("a/b", f"{est.a_over_b:.6g}", "s/g"),
        ("dq", f"{est.delta_q:.6g}", "cm"),
        ("dE", f"{est.delta_e_mhz:.6g}", "MHz"),
        ("dE", f"{est.delta_e_erg:.6g}", "erg"),
    ]
    for name, val, unit in rows:
        print(f"{name:>4}  {val:>14}  {unit}", file=sys.stderr)
    emit_json(payload, cfg, "lamb")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    from .verify import run_checks

    results = run_checks()
    width = max(len(r.name) for r in results)
    unexpected = 0
    for r in results:
        status = "PASS" if r.passed else ("FAIL (known)" if r.known_limit else "FAIL")
        if not r.passed and not r.known_limit:
            unexpected += 1
        print(f"{r.name:<{width}}  {status:<12}  {r.detail}")
    if cfg.out:
        emit_json({r.name: {"passed": r.passed, "value": r.value, "detail": r.detail} for r in results}, cfg, "verify")
    return 1 if unexpected else 0


COMMANDS = {
    "transform": cmd_transform,
    "density": cmd_density,
    "operator": cmd_operator,
    "spectrum": cmd_spectrum,
    "diffuse": cmd_diffuse,
    "lamb": cmd_lamb,
    "verify": cmd_verify,
}


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model and grid")
    g.add_argument("--config", help="JSON run configuration; flags override it")
    g.add_argument("--dump-config", metavar="PATH", help="write the effective configuration ('-' for stdout) and exit")
    g.add_argument("--h", type=float, dest="p_h")
    g.add_argument("--a", type=float, dest="p_a")
    g.add_argument("--b", type=float, dest="p_b")
    g.add_argument("--half-width", type=float, dest="g_half_width")
    g.add_argument("--n", type=int, dest="g_n", help="number of position samples")
    g.add_argument("--center", type=float, dest="g_center")
    g.add_argument("--state", dest="s_name", help="gaussian | coherent | hermite-<n> | random")
    g.add_argument("--q0", type=float, dest="s_q0")
    g.add_argument("--p0", type=float, dest="s_p0")
    g.add_argument("--state-file", dest="s_file", help="CSV with columns x, re, im")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="output directory for CSV/JSON artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phasequant", description="Phase-space quantization toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("transform", help="synthesize and extract a wave function")
    _common(sp)

    sp = sub.add_parser("density", help="phase-space density and Wigner comparison")
    _common(sp)
    sp.add_argument("--check-normalization", action="store_const", const=True, dest="o_check_normalization")

    sp = sub.add_parser("operator", help="kernel of an observable")
    _common(sp)
    sp.add_argument("--symbol", dest="o_symbol", help="polynomial 'i,j:c;...' meaning sum c q^i p^j")
    sp.add_argument("--potential", dest="o_potential", choices=["harmonic", "coulomb"])
    sp.add_argument("--route", dest="o_route", choices=["symbol", "quadrature"])
    sp.add_argument("--order", dest="o_order", choices=["exact", "0"])
    sp.add_argument("--remove-shift", action="store_const", const=True, dest="o_remove_shift")

    sp = sub.add_parser("spectrum", help="oscillator eigenvalues")
    _common(sp)
    sp.add_argument("--mass", type=float, dest="o_mass")
    sp.add_argument("--omega", type=float, dest="o_omega")
    sp.add_argument("--count", type=int, dest="o_count")
    sp.add_argument("--remove-shift", action="store_const", const=True, dest="o_remove_shift")
    sp.add_argument("--method", dest="o_method", choices=["symbol", "quadrature", "fd"])

    sp = sub.add_parser("diffuse", help="averaging diffusion of a fiber mode")
    _common(sp)
    sp.add_argument("--mode", dest="o_mode", help="k1-ground | k1-n1 | k1-n2 | k2-ground | synthesized | random")
    sp.add_argument("--integrator", dest="o_integrator", choices=["spectral-hermite", "finite-difference"])
    sp.add_argument("--tau-end", type=float, dest="o_tau_end")
    sp.add_argument("--samples", type=int, dest="o_samples")
    sp.add_argument("--dtau", type=float, dest="o_dtau")
    sp.add_argument("--n-hermite", type=int, dest="o_n_hermite")
    sp.add_argument("--fit-rate", action="store_const", const=True, dest="o_fit_rate")

    sp = sub.add_parser("lamb", help="calibrate a/b from a level shift")
    _common(sp)
    sp.add_argument("--dE2-mhz", type=float, dest="o_dE2_mhz")
    sp.add_argument("--level", type=int, dest="o_level", help="principal quantum number of the shifted level")
    sp.add_argument("--modern-alpha", action="store_const", const=True, dest="o_modern_alpha")

    sp = sub.add_parser("verify", help="run the invariant suite")
    _common(sp)
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    base = json.loads(json.dumps(DEFAULTS))
    options = dict(OPTION_DEFAULTS[ns.command])
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if loaded.get("command", ns.command) != ns.command:
            raise UsageError(f"config is for {loaded['command']!r}, not {ns.command!r}")
        for key in ("params", "grid", "state"):
            base[key].update(loaded.get(key, {}))
        for key in ("seed", "out"):
            if key in loaded:
                base[key] = loaded[key]
        options.update(loaded.get("options", {}))
    for name, value in vars(ns).items():
        if value is None:
            continue
        prefix, _, key = name.partition("_")
        if prefix == "p":
            base["params"][key] = value
        elif prefix == "g":
            base["grid"][key] = value
        elif prefix == "s":
            base["state"][key] = value
        elif prefix == "o":
            options[key] = value
        elif name in ("seed", "out"):
            base[name] = value
    return RunConfig(ns.command, base["params"], base["grid"], base["state"], base["seed"], base["out"], options)


def _thread_limit():
    value = os.environ.get("PHASEQUANT_THREADS")
    if not value:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(value))


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        cfg = resolve_config(ns)
    except UsageError as exc:
        print(f"phasequant: error: {exc}", file=sys.stderr)
        return 2
    if ns.dump_config:
        text = cfg.to_json()
        if ns.dump_config == "-":
            print(text)
        else:
            _atomic_write(Path(ns.dump_config), lambda fh: fh.write(text + "\n"))
        return 0
    print(f"# config: {json.dumps(asdict(cfg), sort_keys=True)}", file=sys.stderr)
    start = time.perf_counter()
    try:
        with _thread_limit():
            code = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"phasequant: error: {exc}", file=sys.stderr)
        return 2
    except (PhaseQuantError, TypeError, ValueError) as exc:
        print(f"phasequant: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"# elapsed {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
