"""Command-line front end.

    collapse-spectra <command> --config <path> [--seed N] [--out PATH] [--format csv|json]

Commands: rates, simulate, spectrum, compare, scan. The config is a strict
JSON object; physical fields carry their unit in the key name. Exit codes:
0 success, 2 configuration error, 3 numerical failure. Diagnostics go to
stderr only, and output files appear atomically or not at all.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .comparators import BathParams, collisional_broadening, discrimination_scan, doppler_broadening
from .dynamics import (
    BlochState,
    SimParams,
    autocorrelation_closed_form,
    autocorrelation_sde,
    line_frequency,
    run_ensemble,
)
from .errors import (
    CollapseSpectraError,
    ConfigurationError,
    DegenerateInputError,
    NoPeakError,
    NumericalFailure,
    WindowError,
)
from .rates import LAMBDA_CSL, LAMBDA_DP, M0_AMU, R_C, CollapseModel, mass_scaling_scan, rates_generic
from .spectroscopy import PAD_FACTOR, fit_lorentzian, spectrum_from_autocorrelation
from .systems import (
    PROTON_MASS_AMU,
    DoubleWellSpec,
    HarmonicSpec,
    HydrogenLikeSpec,
    TwoLevelSystem,
    beta_qed,
    doublewell_system,
    harmonic_system,
    hydrogenlike_system,
)

COMMANDS = ("rates", "simulate", "spectrum", "compare", "scan")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_NUMERIC_ERRORS = (NumericalFailure, WindowError, NoPeakError, DegenerateInputError)


@dataclass(frozen=True)
class ScanSpec:
    kind: str
    factors: tuple
    exact_reduced_mass: bool = False


@dataclass(frozen=True)
class SpectrumSpec:
    source: str = "closed-form"
    pad_factor: int = PAD_FACTOR
    approximate: bool = False


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str]
    system: Optional[TwoLevelSystem] = None
    model: CollapseModel = field(default_factory=CollapseModel)
    sim: Optional[SimParams] = None
    init: BlochState = field(default_factory=BlochState.excited)
    bath: Optional[BathParams] = None
    scan: Optional[ScanSpec] = None
    spectrum: SpectrumSpec = field(default_factory=SpectrumSpec)
    output_path: Optional[str] = None
    format: str = "csv"
    raw: dict = field(default_factory=dict, compare=False, repr=False)


# --- strict schema --------------------------------------------------------


def _number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError("expected a number", path)
    if integer and not (isinstance(value, int) or float(value).is_integer()):
        raise ConfigurationError("expected an integer", path)
    if not math.isfinite(value):
        raise ConfigurationError("expected a finite number", path)
    return int(value) if integer else float(value)


def _string(value, path, choices=None):
    if not isinstance(value, str):
        raise ConfigurationError("expected a string", path)
    if choices is not None and value not in choices:
        raise ConfigurationError(f"must be one of {list(choices)}", path)
    return value


def _boolean(value, path):
    if not isinstance(value, bool):
        raise ConfigurationError("expected true or false", path)
    return value


def _object(value, path, required, optional=()):
    if not isinstance(value, dict):
        raise ConfigurationError("expected an object", path)
    allowed = set(required) | set(optional)
    for key in value:
        if key not in allowed:
            raise ConfigurationError("unknown key", f"{path}.{key}")
    for key in required:
        if key not in value:
            raise ConfigurationError("missing required key", f"{path}.{key}")
    return value


_SYSTEM_KEYS = {
    "generic": (
        ("omega0_rad_per_s", "mass_amu", "D12_amu_m", "I1_amu_m2", "I2_amu_m2"),
        ("d12_C_m",),
    ),
    "hydrogen-like": (("Z",), ("nuclear_mass_amu", "matrix_element")),
    "harmonic": (("mu_amu", "omega0_rad_per_s"), ("convention", "d12_C_m")),
    "double-well": (("mu_amu", "q0_m", "omega0_rad_per_s"), ("d12_C_m",)),
}


def _parse_system(obj, path="$.system") -> TwoLevelSystem:
    if not isinstance(obj, dict):
        raise ConfigurationError("expected an object", path)
    kind = _string(obj.get("kind"), f"{path}.kind", _SYSTEM_KEYS)
    req, opt = _SYSTEM_KEYS[kind]
    _object(obj, path, ("kind",) + req, opt)

    def num(key, **kw):
        return _number(obj[key], f"{path}.{key}", **kw)

    d12 = num("d12_C_m") if "d12_C_m" in obj else None
    if kind == "generic":
        return TwoLevelSystem(
            num("omega0_rad_per_s"), num("mass_amu"), num("D12_amu_m"),
            num("I1_amu_m2"), num("I2_amu_m2"), d12=d12, kind="generic",
        )
    if kind == "hydrogen-like":
        spec = HydrogenLikeSpec(
            num("Z", integer=True),
            num("nuclear_mass_amu") if "nuclear_mass_amu" in obj else PROTON_MASS_AMU,
        )
        element = _string(obj.get("matrix_element", "z"), f"{path}.matrix_element", ("z", "radial"))
        return hydrogenlike_system(spec, element)
    if kind == "harmonic":
        conv = _string(obj.get("convention", "paper"), f"{path}.convention", ("paper", "textbook"))
        return harmonic_system(HarmonicSpec(num("mu_amu"), num("omega0_rad_per_s")), conv, d12=d12)
    return doublewell_system(DoubleWellSpec(num("mu_amu"), num("q0_m"), num("omega0_rad_per_s")), d12=d12)


def _parse_model(obj, path="$.model") -> CollapseModel:
    _object(obj, path, ("variant",), ("Lambda_per_s", "r_C_m", "m0_amu"))
    variant = _string(obj["variant"], f"{path}.variant", ("CSL", "DP"))
    return CollapseModel(
        variant,
        _number(obj["Lambda_per_s"], f"{path}.Lambda_per_s") if "Lambda_per_s" in obj
        else (LAMBDA_CSL if variant == "CSL" else LAMBDA_DP),
        _number(obj["r_C_m"], f"{path}.r_C_m") if "r_C_m" in obj else R_C,
        _number(obj["m0_amu"], f"{path}.m0_amu") if "m0_amu" in obj else M0_AMU,
    )


_SIM_REQUIRED = ("omega_qed", "beta_qed", "lambda_x", "lambda_z", "dt", "t_max")
_SIM_OPTIONAL = ("n_traj", "seed", "scheme", "init")


def _parse_sim(obj, path="$.sim"):
    _object(obj, path, _SIM_REQUIRED, _SIM_OPTIONAL)
    vals = {k: _number(obj[k], f"{path}.{k}") for k in _SIM_REQUIRED}
    n_traj = _number(obj.get("n_traj", 1000), f"{path}.n_traj", integer=True)
    seed = _number(obj.get("seed", 0), f"{path}.seed", integer=True)
    scheme = _string(obj.get("scheme", "ito-euler"), f"{path}.scheme", ("ito-euler", "stratonovich-heun"))
    init = BlochState.excited()
    if "init" in obj:
        ip = f"{path}.init"
        _object(obj["init"], ip, ("sx", "sy", "sz"))
        init = BlochState(*(_number(obj["init"][k], f"{ip}.{k}") for k in ("sx", "sy", "sz")))
        if abs(init.sz) > 1 + 1e-6:
            raise ConfigurationError("|sz| must be <= 1", f"{ip}.sz")
    try:
        sim = SimParams(**vals, n_traj=n_traj, seed=seed, scheme=scheme)
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), path) from None
    return sim, init


def _parse_bath(obj, path="$.bath") -> BathParams:
    keys = ("pressure_Pa", "temperature_K", "bath_mass_amu", "distance_d_m")
    _object(obj, path, keys)
    return BathParams(*(_number(obj[k], f"{path}.{k}") for k in keys))


def _parse_scan(obj, path="$.scan") -> ScanSpec:
    _object(obj, path, ("kind", "factors"), ("exact_reduced_mass",))
    kind = _string(obj["kind"], f"{path}.kind", ("mass-scaling", "system-mass", "bath-mass"))
    if not isinstance(obj["factors"], list):
        raise ConfigurationError("expected a list", f"{path}.factors")
    factors = []
    for i, f in enumerate(obj["factors"]):
        f = _number(f, f"{path}.factors[{i}]")
        if not f > 0:
            raise ConfigurationError("factor must be > 0", f"{path}.factors[{i}]")
        factors.append(f)
    exact = _boolean(obj.get("exact_reduced_mass", False), f"{path}.exact_reduced_mass")
    return ScanSpec(kind, tuple(factors), exact)


def _parse_spectrum(obj, path="$.spectrum") -> SpectrumSpec:
    _object(obj, path, (), ("source", "pad_factor", "approximate"))
    return SpectrumSpec(
        _string(obj.get("source", "closed-form"), f"{path}.source", ("closed-form", "sde")),
        _number(obj.get("pad_factor", PAD_FACTOR), f"{path}.pad_factor", integer=True),
        _boolean(obj.get("approximate", False), f"{path}.approximate"),
    )


_NEEDS = {
    "rates": ("system",),
    "simulate": ("sim",),
    "spectrum": ("sim",),
    "compare": ("system", "bath"),
    "scan": ("system", "scan"),
}


def parse_config(text, command: Optional[str] = None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    ``command`` (from the command line) overrides an absent ``command`` key
    and must agree with a present one.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigurationError(f"config is not UTF-8: {exc}", "$") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", "$") from None
    _object(
        doc, "$", (),
        ("command", "system", "model", "sim", "bath", "scan", "spectrum", "output_path", "format"),
    )
    cmd = doc.get("command")
    if cmd is not None:
        _string(cmd, "$.command", COMMANDS)
    if command is not None:
        if command not in COMMANDS:
            raise ConfigurationError(f"unknown command {command!r}", "$.command")
        if cmd is not None and cmd != command:
            raise ConfigurationError(f"config says {cmd!r} but {command!r} was requested", "$.command")
        cmd = command
    if cmd is None:
        raise ConfigurationError("no command given", "$.command")
    for block in _NEEDS[cmd]:
        if block not in doc:
            raise ConfigurationError(f"required for command {cmd!r}", f"$.{block}")

    try:
        system = _parse_system(doc["system"]) if "system" in doc else None
    except ConfigurationError as exc:
        if exc.path is not None:
            raise
        raise ConfigurationError(str(exc), "$.system") from None
    model = _parse_model(doc["model"]) if "model" in doc else CollapseModel()
    sim, init = _parse_sim(doc["sim"]) if "sim" in doc else (None, BlochState.excited())
    try:
        bath = _parse_bath(doc["bath"]) if "bath" in doc else None
    except ConfigurationError as exc:
        if exc.path is not None:
            raise
        raise ConfigurationError(str(exc), "$.bath") from None
    scan = _parse_scan(doc["scan"]) if "scan" in doc else None
    if scan is not None and scan.kind != "mass-scaling" and bath is None:
        raise ConfigurationError(f"scan kind {scan.kind!r} needs a bath block", "$.bath")
    spectrum = _parse_spectrum(doc["spectrum"]) if "spectrum" in doc else SpectrumSpec()
    out = _string(doc["output_path"], "$.output_path") if "output_path" in doc else None
    fmt = _string(doc.get("format", "csv"), "$.format", ("csv", "json"))
    return RunConfig(cmd, system, model, sim, init, bath, scan, spectrum, out, fmt, raw=doc)


# --- output ---------------------------------------------------------------


def format_number(x) -> str:
    """Shortest round-trip text for a float (``repr``)."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    return "\r\n".join(lines) + "\r\n"


def _json_value(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    return x


def _json_text(obj) -> str:
    return json.dumps(_json_value(obj), indent=2, sort_keys=False) + "\n"


def _table_text(columns, rows, fmt) -> str:
    if fmt == "csv":
        return _csv_text(columns, rows)
    return _json_text([dict(zip(columns, row)) for row in rows])


def sidecar_path(output: Path) -> Path:
    return output.with_name(output.name + ".meta.json")


def write_atomic(files: dict) -> None:
    """Write every ``{path: text}`` to a temp file, then rename all into place."""
    staged = []
    try:
        for path, text in files.items():
            path = Path(path)
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise


# --- commands -------------------------------------------------------------

RATES_COLUMNS = ("lambda_x", "lambda_z", "beta_N", "gamma_N", "beta_QED")
SIMULATE_COLUMNS = ("t", "mean_sx", "mean_sy", "mean_sz", "sem_sx", "sem_sy", "sem_sz")
SPECTRUM_COLUMNS = ("omega", "density")
COMPARE_COLUMNS = ("label", "value")
MASS_SCALING_COLUMNS = ("factor", "M_amu", "beta_N")
DISCRIMINATION_COLUMNS = ("mass_amu", "beta_N", "beta_C", "slope_beta_N", "slope_beta_C")


def _cmd_rates(cfg: RunConfig):
    sys_ = cfg.system
    r = rates_generic(sys_, cfg.model)
    bq = beta_qed(sys_.omega0, sys_.d12) if sys_.d12 is not None else None
    return RATES_COLUMNS, [(r.lambda_x, r.lambda_z, r.beta_N, r.gamma_N, bq)], None


def _sim_echo(cfg: RunConfig) -> dict:
    return {
        "version": __version__,
        "sim": asdict(cfg.sim),
        "init": asdict(cfg.init),
        "seed": cfg.sim.seed,
    }


def _cmd_simulate(cfg: RunConfig):
    stats = run_ensemble(cfg.sim, cfg.init)
    rows = zip(
        stats.times, stats.mean_sx, stats.mean_sy, stats.mean_sz,
        stats.sem_sx, stats.sem_sy, stats.sem_sz,
    )
    return SIMULATE_COLUMNS, list(rows), _sim_echo(cfg)


def _cmd_spectrum(cfg: RunConfig):
    p = cfg.sim
    tau = p.times()
    if cfg.spectrum.source == "closed-form":
        C = autocorrelation_closed_form(p, tau, 1.0, approximate=cfg.spectrum.approximate)
    else:
        C = autocorrelation_sde(p, tau, 1.0).mean
    spec = spectrum_from_autocorrelation(C, p.dt, pad_factor=cfg.spectrum.pad_factor)
    fit = fit_lorentzian(spec)
    summary = {
        "beta_fit": fit.beta_fit,
        "omega_center": fit.omega_center,
        "rms_residual": fit.rms_residual,
        "peak_height": fit.peak_height,
        "converged": fit.converged,
        "predicted_beta": p.beta_qed + p.lambda_x + 2.0 * p.lambda_z,
        "predicted_omega": line_frequency(p.omega_qed, p.lambda_x),
        **_sim_echo(cfg),
        "spectrum": asdict(cfg.spectrum),
    }
    return SPECTRUM_COLUMNS, list(zip(spec.omega, spec.density)), summary


def _cmd_compare(cfg: RunConfig):
    s, bath = cfg.system, cfg.bath
    rows = [
        ("beta_N", rates_generic(s, cfg.model).beta_N),
        ("beta_C", collisional_broadening(bath, s.mass_M)),
        ("beta_D", doppler_broadening(s.omega0, s.mass_M, bath.temperature)),
    ]
    if s.d12 is not None:
        rows.append(("beta_QED", beta_qed(s.omega0, s.d12)))
    return COMPARE_COLUMNS, rows, None


def _cmd_scan(cfg: RunConfig):
    scan = cfg.scan
    if scan.kind == "mass-scaling":
        table = mass_scaling_scan(cfg.system, scan.factors, cfg.model)
        return MASS_SCALING_COLUMNS, [(f, M, b) for f, (M, b) in zip(scan.factors, table)], None
    rows = discrimination_scan(
        scan.kind, cfg.system, cfg.bath, cfg.model, scan.factors, scan.exact_reduced_mass
    )
    return DISCRIMINATION_COLUMNS, [
        (r.mass, r.beta_N, r.beta_C, r.slope_beta_N, r.slope_beta_C) for r in rows
    ], None


_HANDLERS = {
    "rates": _cmd_rates,
    "simulate": _cmd_simulate,
    "spectrum": _cmd_spectrum,
    "compare": _cmd_compare,
    "scan": _cmd_scan,
}


def dispatch(cfg: RunConfig, stderr=None) -> int:
    """Run ``cfg`` and write its outputs; returns the process exit code."""
    stderr = stderr or sys.stderr
    try:
        if cfg.output_path is None:
            raise ConfigurationError("no output path (set output_path or --out)", "$.output_path")
        columns, rows, sidecar = _HANDLERS[cfg.command](cfg)
        out = Path(cfg.output_path)
        files = {out: _table_text(columns, rows, cfg.format)}
        if sidecar is not None:
            files[sidecar_path(out)] = _json_text(sidecar)
        write_atomic(files)
    except _NUMERIC_ERRORS as exc:
        print(f"collapse-spectra: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except CollapseSpectraError as exc:
        print(f"collapse-spectra: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _apply_overrides(cfg: RunConfig, seed, out, fmt) -> RunConfig:
    changes: dict[str, Any] = {}
    if out is not None:
        changes["output_path"] = out
    if fmt is not None:
        changes["format"] = fmt
    if seed is not None:
        if cfg.sim is None:
            raise ConfigurationError("--seed given but config has no sim block", "$.sim")
        try:
            changes["sim"] = SimParams(**{**asdict(cfg.sim), "seed": seed})
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc), "$.sim.seed") from None
    if not changes:
        return cfg
    fields = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
    fields.update(changes)
    return RunConfig(**fields)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="collapse-spectra", description="Collapse-model spectroscopy runs.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to JSON run configuration")
    parser.add_argument("--seed", type=int, help="override sim.seed")
    parser.add_argument("--out", help="override output_path")
    parser.add_argument("--format", choices=("csv", "json"), help="override format")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_bytes()
    except OSError as exc:
        print(f"collapse-spectra: configuration error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, command=args.command)
        cfg = _apply_overrides(cfg, args.seed, args.out, args.format)
    except CollapseSpectraError as exc:
        print(f"collapse-spectra: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
