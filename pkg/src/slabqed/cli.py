"""Command-line front end: config parsing, sweeps, checks, CSV output.

The config format is flat ``key = value`` text with dotted section names
(``medium.omega_p``, ``sweep.count``, ...). A ``case`` key applies one of
the named presets first; every other key then overrides whatever the
preset chose, in file order. ``slabqed sweep --case 1A`` with no config
file runs the stock scenario end to end.

Exit codes: 0 success, 1 solver failure or threshold violation, 2 config
error. ``SLABQED_WORKERS`` overrides the sweep worker count.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from .fem import assemble
from .greens import solve_point_source
from .identities import (
    check_discrete_ddgt,
    check_lossless_identity_failure,
    check_thermal_equilibrium,
)
from .medium import ATOM_INSIDE, ATOM_OUTSIDE, CASE_PRESETS, MediumSpec, case_preset
from .micromodes import (
    BathConfig,
    build_gevp,
    diagonalize,
    gevp_mesh,
    purcell_from_modes,
)
from .oracle import tmm_green, tmm_reflection_transmission, tmm_total_field
from .purcell import purcell_mesh, sweep
from .scattering import extract_r_t, solve_scattering

CSV_COLUMNS = (
    "omega_a",
    "pf_sfa",
    "pf_b",
    "pf_m",
    "pf_modified_ln",
    "pf_original_ln",
    "pf_modes",
    "tec_residual",
)

_PRESET_NAMES = ("1A", "1B", "2A", "2B", "vacuum")


class ConfigError(ValueError):
    """Any problem with the run configuration (exit code 2)."""


@dataclass
class RunConfig:
    """Fully resolved run parameters; every field echoes to CSV metadata."""

    case: str
    medium: MediumSpec
    atom_position: float
    sweep_min: float = 300.0
    sweep_max: float = 700.0
    sweep_count: int = 101
    ppw: float = 40.0
    padding: float = 0.05
    pml_thickness: float = 0.05
    method_sfa: bool = True
    method_modified_ln: bool = True
    method_original_ln: bool = True
    method_modes: bool = False
    bath: BathConfig = dataclasses.field(default_factory=BathConfig)
    eta: float = 20.0
    output_path: str = "sweep.csv"
    ddgt_max: float = 1e-10
    balance_max: float = 0.01
    lossless_min: float = 0.5
    closed_box: bool = False
    oracle_ppw: float = 160.0
    oracle_tolerance: float = 0.005

    def grid(self):
        return np.linspace(self.sweep_min, self.sweep_max, self.sweep_count)

    def validate(self):
        if self.sweep_count < 1:
            raise ConfigError(f"sweep.count must be >= 1, got {self.sweep_count}")
        if self.sweep_count > 1 and not self.sweep_min < self.sweep_max:
            raise ConfigError(
                f"sweep.min must be < sweep.max, got "
                f"[{self.sweep_min}, {self.sweep_max}]"
            )
        if self.sweep_min <= 0:
            raise ConfigError(f"sweep.min must be > 0, got {self.sweep_min}")
        if not any((self.method_sfa, self.method_modified_ln,
                    self.method_original_ln, self.method_modes)):
            raise ConfigError("at least one method must be enabled")
        if self.ppw < 10:
            raise ConfigError(f"mesh.ppw must be >= 10, got {self.ppw}")
        if self.oracle_ppw < 10:
            raise ConfigError(f"oracle.ppw must be >= 10, got {self.oracle_ppw}")
        if self.padding <= 0 or self.pml_thickness <= 0:
            raise ConfigError("mesh.padding and mesh.pml_thickness must be > 0")
        if self.eta <= 0:
            raise ConfigError(f"modes.eta must be > 0, got {self.eta}")
        for name in ("ddgt_max", "balance_max", "lossless_min",
                     "oracle_tolerance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"threshold {name} must be > 0")
        return self

    def items(self):
        """The flat key/value view; re-parsing it reproduces this config."""
        return [
            ("case", self.case),
            ("medium.omega_p", repr(self.medium.omega_p)),
            ("medium.omega_0", repr(self.medium.omega_0)),
            ("medium.gamma", repr(self.medium.gamma)),
            ("medium.slab_half_length", repr(self.medium.slab_half_length)),
            ("atom.position", repr(self.atom_position)),
            ("sweep.min", repr(self.sweep_min)),
            ("sweep.max", repr(self.sweep_max)),
            ("sweep.count", repr(self.sweep_count)),
            ("mesh.ppw", repr(self.ppw)),
            ("mesh.padding", repr(self.padding)),
            ("mesh.pml_thickness", repr(self.pml_thickness)),
            ("methods.sfa", repr(self.method_sfa).lower()),
            ("methods.modified_ln", repr(self.method_modified_ln).lower()),
            ("methods.original_ln", repr(self.method_original_ln).lower()),
            ("methods.modes", repr(self.method_modes).lower()),
            ("modes.n_bins", repr(self.bath.n_bins)),
            ("modes.nu_max", repr(self.bath.nu_max)),
            ("modes.box_length", repr(self.bath.box_length)),
            ("modes.eta", repr(self.eta)),
            ("output.path", self.output_path),
            ("identities.ddgt_max", repr(self.ddgt_max)),
            ("identities.balance_max", repr(self.balance_max)),
            ("identities.lossless_min", repr(self.lossless_min)),
            ("identities.closed_box", repr(self.closed_box).lower()),
            ("oracle.ppw", repr(self.oracle_ppw)),
            ("oracle.tolerance", repr(self.oracle_tolerance)),
        ]


def _parse_bool(key, value):
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _parse_float(key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _parse_int(key, value):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def parse_config_text(text):
    """Split config text into ordered (key, value) pairs.

    Blank lines and ``#`` comments are ignored; everything else must be
    ``key = value``.
    """
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        items.append((key.strip(), value.strip()))
    return items


def _apply_case(config: RunConfig, name: str) -> RunConfig:
    if name not in _PRESET_NAMES:
        raise ConfigError(
            f"unknown case {name!r}; choose one of {', '.join(_PRESET_NAMES)}"
        )
    medium, x_atom = case_preset(name)
    # the vacuum scenario carries its own resolution requirement: holding
    # the dispersion bias under 1e-3 at the top of the band needs a finer
    # mesh than the slab cases use
    ppw = 80.0 if name == "vacuum" else 40.0
    return dataclasses.replace(
        config, case=name, medium=medium, atom_position=x_atom, ppw=ppw
    )


def _apply_item(config: RunConfig, key: str, value: str) -> RunConfig:
    med = config.medium
    bath = config.bath
    try:
        if key == "case":
            return _apply_case(config, value)
        if key == "medium.omega_p":
            return dataclasses.replace(
                config,
                medium=MediumSpec(_parse_float(key, value), med.omega_0,
                                  med.gamma, med.slab_half_length),
            )
        if key == "medium.omega_0":
            return dataclasses.replace(
                config,
                medium=MediumSpec(med.omega_p, _parse_float(key, value),
                                  med.gamma, med.slab_half_length),
            )
        if key == "medium.gamma":
            return dataclasses.replace(
                config,
                medium=MediumSpec(med.omega_p, med.omega_0,
                                  _parse_float(key, value),
                                  med.slab_half_length),
            )
        if key == "medium.slab_half_length":
            return dataclasses.replace(
                config,
                medium=MediumSpec(med.omega_p, med.omega_0, med.gamma,
                                  _parse_float(key, value)),
            )
        if key == "atom.position":
            if value.strip() == "A":
                return dataclasses.replace(config, atom_position=ATOM_INSIDE)
            if value.strip() == "B":
                return dataclasses.replace(config, atom_position=ATOM_OUTSIDE)
            return dataclasses.replace(
                config, atom_position=_parse_float(key, value)
            )
        if key == "sweep.min":
            return dataclasses.replace(config, sweep_min=_parse_float(key, value))
        if key == "sweep.max":
            return dataclasses.replace(config, sweep_max=_parse_float(key, value))
        if key == "sweep.count":
            return dataclasses.replace(config, sweep_count=_parse_int(key, value))
        if key == "mesh.ppw":
            return dataclasses.replace(config, ppw=_parse_float(key, value))
        if key == "mesh.padding":
            return dataclasses.replace(config, padding=_parse_float(key, value))
        if key == "mesh.pml_thickness":
            return dataclasses.replace(
                config, pml_thickness=_parse_float(key, value)
            )
        if key == "methods.sfa":
            return dataclasses.replace(config, method_sfa=_parse_bool(key, value))
        if key == "methods.modified_ln":
            return dataclasses.replace(
                config, method_modified_ln=_parse_bool(key, value)
            )
        if key == "methods.original_ln":
            return dataclasses.replace(
                config, method_original_ln=_parse_bool(key, value)
            )
        if key == "methods.modes":
            return dataclasses.replace(
                config, method_modes=_parse_bool(key, value)
            )
        if key == "modes.n_bins":
            return dataclasses.replace(
                config,
                bath=BathConfig(_parse_int(key, value), bath.nu_max,
                                bath.box_length),
            )
        if key == "modes.nu_max":
            return dataclasses.replace(
                config,
                bath=BathConfig(bath.n_bins, _parse_float(key, value),
                                bath.box_length),
            )
        if key == "modes.box_length":
            return dataclasses.replace(
                config,
                bath=BathConfig(bath.n_bins, bath.nu_max,
                                _parse_float(key, value)),
            )
        if key == "modes.eta":
            return dataclasses.replace(config, eta=_parse_float(key, value))
        if key == "output.path":
            return dataclasses.replace(config, output_path=value)
        if key == "identities.ddgt_max":
            return dataclasses.replace(config, ddgt_max=_parse_float(key, value))
        if key == "identities.balance_max":
            return dataclasses.replace(
                config, balance_max=_parse_float(key, value)
            )
        if key == "identities.lossless_min":
            return dataclasses.replace(
                config, lossless_min=_parse_float(key, value)
            )
        if key == "identities.closed_box":
            return dataclasses.replace(
                config, closed_box=_parse_bool(key, value)
            )
        if key == "oracle.ppw":
            return dataclasses.replace(config, oracle_ppw=_parse_float(key, value))
        if key == "oracle.tolerance":
            return dataclasses.replace(
                config, oracle_tolerance=_parse_float(key, value)
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def build_config(text=None, case=None, out=None) -> RunConfig:
    """Resolve defaults, preset, config file and flags into a RunConfig."""
    config = _apply_case(
        RunConfig(case="vacuum", medium=CASE_PRESETS["vacuum"],
                  atom_position=ATOM_INSIDE),
        case if case is not None else "vacuum",
    )
    for key, value in parse_config_text(text) if text else []:
        if key == "case" and case is not None:
            continue  # the command-line flag wins over the file's preset
        config = _apply_item(config, key, value)
    if out is not None:
        config = dataclasses.replace(config, output_path=out)
    return config.validate()


def config_from_items(items) -> RunConfig:
    """Rebuild a RunConfig from ``RunConfig.items()`` output."""
    config = RunConfig(case="vacuum", medium=CASE_PRESETS["vacuum"],
                       atom_position=ATOM_INSIDE)
    for key, value in items:
        config = _apply_item(config, key, value)
    return config.validate()


def _fmt(value):
    return "" if value is None else f"{value:.12e}"


def _metadata_lines(command, config, mesh=None, wall_seconds=None):
    lines = [
        f"slabqed {command}",
        f"version = {__version__}",
        f"generated = {time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}",
    ]
    if wall_seconds is not None:
        lines.append(f"wall_seconds = {wall_seconds:.3f}")
    if mesh is not None:
        lines.append(
            f"mesh: {mesh.n_nodes} nodes, h_max = {mesh.h_max:.6e}"
        )
    lines.append("config:")
    lines.extend(f"  {key} = {value}" for key, value in config.items())
    return lines


def _write_csv(path, metadata, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in metadata:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def read_config_echo(path) -> RunConfig:
    """Re-parse the config echoed in a CSV metadata header."""
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        in_config = False
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body == "config:":
                in_config = True
                continue
            if in_config and "=" in body:
                key, value = body.split("=", 1)
                items.append((key.strip(), value.strip()))
    if not items:
        raise ConfigError(f"{path} carries no config echo")
    return config_from_items(items)


def _worker_count():
    raw = os.environ.get("SLABQED_WORKERS")
    if raw is None:
        return None
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"SLABQED_WORKERS must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"SLABQED_WORKERS must be >= 1, got {workers}")
    return workers


def cmd_sweep(config: RunConfig) -> int:
    start = time.monotonic()
    grid = config.grid()
    mesh = purcell_mesh(
        config.medium,
        config.atom_position,
        k_max=float(grid[-1]),
        ppw=config.ppw,
        padding=config.padding,
        pml_thickness=config.pml_thickness,
    )
    records = sweep(mesh, config.medium, grid, config.atom_position,
                    max_workers=_worker_count())

    mode_rates = {}
    if config.method_modes:
        system = build_gevp(
            gevp_mesh(config.medium, config.bath), config.medium, config.bath
        )
        modes = diagonalize(system, band=(1.0, max(1000.0, grid[-1] + 300.0)))
        for omega in grid:
            omega = float(omega)
            try:
                mode_rates[omega] = purcell_from_modes(
                    modes, config.atom_position, omega, config.eta
                )
            except ValueError as exc:
                raise RuntimeError(
                    f"sweep point omega_a = {omega}: {exc}"
                ) from exc

    want_tec = config.method_sfa and config.method_modified_ln
    rows = []
    for rec in records:
        rows.append((
            _fmt(rec.omega_a),
            _fmt(rec.pf_sfa) if config.method_sfa else "",
            _fmt(rec.pf_b) if config.method_modified_ln else "",
            _fmt(rec.pf_m) if config.method_modified_ln else "",
            _fmt(rec.pf_modified_ln) if config.method_modified_ln else "",
            _fmt(rec.pf_original_ln) if config.method_original_ln else "",
            _fmt(mode_rates.get(rec.omega_a)) if config.method_modes else "",
            _fmt(rec.tec_residual) if want_tec else "",
        ))
    metadata = _metadata_lines("sweep", config, mesh=mesh,
                               wall_seconds=time.monotonic() - start)
    _write_csv(config.output_path, metadata, CSV_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {config.output_path}")
    return 0


def _report(lines, name, value, bound, comparison):
    ok = value < bound if comparison == "<" else value > bound
    lines.append(
        f"{'PASS' if ok else 'FAIL'}  {name}: {value:.3e} "
        f"(needs {comparison} {bound:g})"
    )
    return ok


def cmd_check_identities(config: RunConfig) -> int:
    """Operator-identity gauntlet; exit 0 only if every check passes."""
    x_b = ATOM_OUTSIDE
    lines = []
    all_ok = True
    if config.closed_box:
        lines.append(
            "SKIP  lossless-identity failure: closed box is degenerate "
            "(no leakage channel, the medium-only identity holds exactly)"
        )

    # operator identities on small meshes: exactness does not depend on
    # resolution, so ppw = 15 keeps the dense inverses cheap
    for label, medium in (("vacuum", CASE_PRESETS["vacuum"]),
                          ("slab", config.medium)):
        mesh = purcell_mesh(medium, x_b, k_max=700.0, ppw=15.0,
                            padding=config.padding,
                            pml_thickness=config.pml_thickness)
        for k in (300.0, 500.0, 700.0):
            system = assemble(mesh, medium, k)
            all_ok &= _report(
                lines, f"two-channel dissipation [{label}, k={k:g}]",
                check_discrete_ddgt(system), config.ddgt_max, "<",
            )
            # the failure demonstration needs the radiation channel to be
            # the dominant loss, so it is a vacuum-only statement: a lossy
            # slab legitimately absorbs part of that channel and the
            # residual drops below any fixed floor
            if label == "vacuum" and not config.closed_box:
                all_ok &= _report(
                    lines,
                    f"lossless-identity failure [{label}, k={k:g}]",
                    check_lossless_identity_failure(system),
                    config.lossless_min, ">",
                )

    # field-correlation balance on a resolved mesh; the sweep-resolution
    # residual is boundary-rate floor limited and documented elsewhere
    mesh = purcell_mesh(config.medium, x_b, k_max=700.0, ppw=160.0,
                        padding=config.padding,
                        pml_thickness=config.pml_thickness)
    worst = 0.0
    for k in np.linspace(300.0, 700.0, 21):
        worst = max(worst, check_thermal_equilibrium(
            mesh, config.medium, float(k), x_b, x_b
        ))
    all_ok &= _report(lines, "field-correlation balance [x_B, 21 points]",
                      worst, config.balance_max, "<")

    print("\n".join(lines))
    return 0 if all_ok else 1


def cmd_oracle_compare(config: RunConfig) -> int:
    """Solver-vs-transfer-matrix comparison; exit 0 iff within tolerance."""
    start = time.monotonic()
    grid = config.grid()
    mesh = purcell_mesh(
        config.medium,
        config.atom_position,
        k_max=float(grid[-1]),
        ppw=config.oracle_ppw,
        padding=config.padding,
        pml_thickness=config.pml_thickness,
    )
    sample = np.linspace(-config.medium.slab_half_length,
                         config.medium.slab_half_length, 9)
    rows = []
    worst = 0.0
    for omega in grid:
        omega = float(omega)
        solution = solve_scattering(mesh, config.medium, omega, +1)
        r_fem, t_fem = extract_r_t(solution)
        r_ref, t_ref = tmm_reflection_transmission(config.medium, omega)
        scale = max(abs(r_ref), abs(t_ref))
        res_rt = max(abs(r_fem - r_ref), abs(t_fem - t_ref)) / scale

        probes = np.array([ATOM_INSIDE, ATOM_OUTSIDE])
        fem_field = solution.total_at(probes) / solution.amplitude
        tmm_field = tmm_total_field(config.medium, omega, +1, probes)
        # floor the scale at the unit incident amplitude: on resonance an
        # opaque slab shadows both probe points and the local field is
        # exponentially small, which would turn roundoff into a huge ratio
        scale_field = max(float(np.max(np.abs(tmm_field))), 1.0)
        res_field = float(np.max(np.abs(fem_field - tmm_field))) / scale_field

        field = solve_point_source(mesh, config.medium, omega,
                                   config.atom_position)
        g_fem = field(sample)
        g_tmm = tmm_green(config.medium, omega, sample, config.atom_position)
        res_green = float(
            np.max(np.abs(g_fem - g_tmm)) / np.max(np.abs(g_tmm))
        )

        worst = max(worst, res_rt, res_field, res_green)
        rows.append((
            _fmt(omega), _fmt(res_rt), _fmt(res_field), _fmt(res_green)
        ))

    metadata = _metadata_lines("oracle-compare", config, mesh=mesh,
                               wall_seconds=time.monotonic() - start)
    _write_csv(config.output_path, metadata,
               ("omega", "res_rt", "res_field", "res_green"), rows)
    ok = worst < config.oracle_tolerance
    print(
        f"worst residual {worst:.3e} vs tolerance {config.oracle_tolerance:g}"
        f" -> {'PASS' if ok else 'FAIL'} ({config.output_path})"
    )
    return 0 if ok else 1


def cmd_modes(config: RunConfig) -> int:
    """Diagonalize the closed-box pencil; write spectrum and rate curve."""
    start = time.monotonic()
    grid = config.grid()
    system = build_gevp(
        gevp_mesh(config.medium, config.bath), config.medium, config.bath
    )
    modes = diagonalize(system, band=(1.0, max(1000.0, grid[-1] + 300.0)))

    root, ext = os.path.splitext(config.output_path)
    spectrum_path = f"{root}_spectrum{ext or '.csv'}"
    metadata = _metadata_lines("modes", config,
                               wall_seconds=time.monotonic() - start)
    _write_csv(
        spectrum_path, metadata, ("omega_m",),
        [(_fmt(w),) for w in modes.frequencies],
    )
    rows = [
        (_fmt(float(w)),
         _fmt(purcell_from_modes(modes, config.atom_position, float(w),
                                 config.eta)))
        for w in grid
    ]
    _write_csv(config.output_path, metadata, ("omega_a", "pf_modes"), rows)
    print(
        f"wrote {modes.n_modes} mode frequencies to {spectrum_path} and "
        f"{len(rows)} rate samples to {config.output_path}"
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slabqed",
        description="Emission rates near a lossy slab: sweeps and checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in (
        ("sweep", cmd_sweep),
        ("check-identities", cmd_check_identities),
        ("oracle-compare", cmd_oracle_compare),
        ("modes", cmd_modes),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--case", choices=_PRESET_NAMES,
                       help="scenario preset; overrides the file's case")
        p.add_argument("--out", help="output CSV path")
        p.set_defaults(runner=runner)
    args = parser.parse_args(argv)

    try:
        text = None
        if args.config is not None:
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from exc
        config = build_config(text, case=args.case, out=args.out)
        return args.runner(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # solver/runtime failures
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
