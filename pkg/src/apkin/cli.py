"""Command-line front end: ``apkin analyze|simulate|converge``.

Exit codes: 0 success, 1 runtime abort, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import stability
from .collision import estimate_mu, spectral_init
from .convergence import StudyConfig, run_study
from .phase_space import (MOMENT_COLUMNS, InadmissibleStateError, VelocityGrid, maxwellian,
                          moment_array, moment_rows, moments, write_snapshot)
from .solver import Mode, SolverAbort, StepConfig, homogeneous_step, initial_field, integrate, step_count
from .tableau import TableauError, get_scheme, load_tableau, registry
from .transport import SpaceGrid

log = logging.getLogger("apkin")

COMMANDS = ("analyze", "simulate", "converge")
OPERATORS = ("bgk", "boltzmann")
INITS = ("eq", "noneq")
REFERENCES = ("successive", "finest", "rk4")


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str = "analyze"
    scheme: str = "ARS(2,2,2)"
    eps: float = 1e-6
    nx: tuple = (128,)
    nv: int = 32
    vmax: float = 8.0
    t_final: float = 0.05
    cfl: float = 0.5
    operator: str = "bgk"
    penalized: bool = False
    init: str = "eq"
    out: str | None = None
    seed: int = 0
    reference: str = "successive"
    tableau_file: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("eps", "vmax", "t_final", "cfl"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.nv < 2 or any(n < 1 for n in self.nx):
            raise ConfigError("grid sizes must be positive")
        if self.operator not in OPERATORS:
            raise ConfigError(f"operator must be one of {OPERATORS}")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}")
        if self.reference not in REFERENCES:
            raise ConfigError(f"reference must be one of {REFERENCES}")
        if self.command == "converge":
            if len(self.nx) < 3:
                raise ConfigError("converge needs at least three nx values")
            if any(b <= a for a, b in zip(self.nx, self.nx[1:])):
                raise ConfigError("nx list must be strictly increasing")
        if self.command == "simulate" and len(self.nx) != 1:
            raise ConfigError("simulate takes a single nx")
        if self.operator == "boltzmann" and not self.penalized:
            raise ConfigError("the Boltzmann operator is only available with --penalized")
        return self


_KEY_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_value(key: str, text: str):
    text = text.strip()
    if key not in _KEY_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        if key == "nx":
            return tuple(int(t) for t in text.split(",") if t.strip())
        if key in ("nv", "seed"):
            return int(text)
        if key in ("eps", "vmax", "t_final", "cfl"):
            return float(text)
        if key == "penalized":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if key in ("out", "tableau_file"):
            return None if text in ("", "none", "None") else text
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def parse_config(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key == "tfinal":
            key = "t_final"
        out[key] = _parse_value(key, value)
    return out


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for k, v in asdict(cfg).items():
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        elif v is None:
            v = "none"
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> RunConfig:
    return RunConfig(**parse_config(text))


# --------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apkin", description="IMEX schemes for kinetic equations")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--scheme", help="registry name, or 'all' for analyze")
    p.add_argument("--tableau-file", dest="tableau_file", help="analyze a tableau from a text file")
    p.add_argument("--eps", type=float)
    p.add_argument("--nx", help="cells, or comma separated list for converge")
    p.add_argument("--nv", type=int)
    p.add_argument("--vmax", type=float)
    p.add_argument("--tfinal", dest="t_final", type=float)
    p.add_argument("--cfl", type=float)
    p.add_argument("--operator", choices=OPERATORS)
    p.add_argument("--penalized", action="store_true", default=None)
    p.add_argument("--init", choices=INITS)
    p.add_argument("--reference", choices=REFERENCES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


_DEFAULT_NX = {"analyze": (128,), "simulate": (128,), "converge": (32, 64, 128, 256)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {"command": args.command, "nx": _DEFAULT_NX[args.command]}
    if args.command == "analyze":
        values["scheme"] = "all"
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        file_values = parse_config(text)
        file_values.pop("command", None)
        values.update(file_values)
    for key in ("scheme", "tableau_file", "eps", "nv", "vmax", "t_final", "cfl", "operator",
                "penalized", "init", "reference", "seed", "out"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if args.nx is not None:
        values["nx"] = _parse_value("nx", args.nx)
    return RunConfig(**values).validate()


# --------------------------------------------------------------------------
# commands

def _out_dir(cfg: RunConfig) -> Path | None:
    if cfg.out is None:
        return None
    path = Path(cfg.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _schemes_for(cfg: RunConfig):
    if cfg.tableau_file:
        try:
            return [load_tableau(cfg.tableau_file)]
        except (OSError, TableauError, ValueError) as exc:
            raise ConfigError(f"cannot load tableau: {exc}") from exc
    if cfg.scheme == "all":
        return list(registry().values())
    try:
        return [get_scheme(cfg.scheme)]
    except KeyError as exc:
        raise ConfigError(f"unknown scheme {cfg.scheme!r}") from exc


def _scheme(cfg: RunConfig):
    schemes = _schemes_for(cfg)
    if len(schemes) != 1:
        raise ConfigError("this command needs a single scheme")
    return schemes[0]


def format_report(reports) -> str:
    rows = stability.report_rows(reports)
    cols = ["name", "type", "gsa", "aa", "aa_c", "am_intervals", "weak_ap_intervals"]
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in cols}
    lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
    lines.append("  ".join("-" * widths[c] for c in cols))
    for r in rows:
        lines.append("  ".join(r[c].ljust(widths[c]) for c in cols))
    lines.append("")
    lines.append("R(alpha, inf) at alpha = " + ", ".join(f"{a:g}" for a in stability.ALPHA_SAMPLES))
    for r in rows:
        lines.append(f"  {r['name']}: {r['R_inf_alpha_samples']}")
    return "\n".join(lines)


def cmd_analyze(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    reports = stability.table1_report(_schemes_for(cfg))
    print(format_report(reports), file=stdout)
    out = _out_dir(cfg)
    if out is not None:
        (out / "analyze.csv").write_text(stability.to_csv(reports), newline="")
    return 1 if any(r.error for r in reports) else 0


def cmd_simulate(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    tab = _scheme(cfg)
    vgrid = VelocityGrid(cfg.nv, cfg.vmax)
    nx = cfg.nx[0]
    out = _out_dir(cfg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["step", "t"] + MOMENT_COLUMNS)

    def record(n, t, f):
        xs = x if nx > 1 else np.array([0.5])
        for row in moment_rows(xs, moments(f, vgrid)):
            writer.writerow([n, repr(float(t))] + row)

    op = None
    if cfg.operator == "boltzmann":
        op = spectral_init(cfg.nv, cfg.vmax, cache_dir=None if out is None else out / "kernels")
    if nx == 1:
        # space-homogeneous run at x = 1/2
        x = np.array([0.5])
        f = initial_field(cfg.init, None, vgrid, x=x)
        n_steps, dt = step_count(cfg.t_final, cfg.cfl / cfg.vmax)
        mu = estimate_mu(f, vgrid, op.sigma) if op is not None else 1.0
        mode = Mode.HOMOGENEOUS_PENALIZED if cfg.penalized else Mode.HOMOGENEOUS_BGK
        step_cfg = StepConfig(tab, cfg.eps, dt, mode, mu)
        collision = op.apply if op is not None else (lambda F: mu * (maxwellian(moments(F, vgrid), vgrid) - F))
        mass0 = moment_array(f, vgrid)[..., 0].sum()
        record(0, 0.0, f)
        for s in range(n_steps):
            f = homogeneous_step(f, step_cfg, vgrid, collision)
            record(s + 1, (s + 1) * dt, f)
    else:
        sgrid = SpaceGrid(nx)
        x = sgrid.x
        f = initial_field(cfg.init, sgrid, vgrid)
        mass0 = moment_array(f, vgrid)[..., 0].sum() / nx
        mu = 1.0
        collision = None
        if cfg.penalized:
            if op is not None:
                mu = estimate_mu(f, vgrid, op.sigma)
                collision = op.apply
            else:
                def collision(F):
                    return mu * (maxwellian(moments(F, vgrid), vgrid) - F)
        f = integrate(f, tab, cfg.eps, cfg.t_final, sgrid, vgrid, cfg.cfl, mu, collision, record)
    mass1 = moment_array(f, vgrid)[..., 0].sum() / max(nx, 1)
    drift = abs(mass1 - mass0)
    print(f"scheme {tab.name}  nx {nx}  nv {cfg.nv}  eps {cfg.eps:g}  t_final {cfg.t_final:g}", file=stdout)
    print(f"mass drift {drift:.3e}", file=stdout)
    if out is not None:
        (out / "moments.csv").write_text(buf.getvalue(), newline="")
        write_snapshot(out / "final.bin", f, vgrid)
    return 0


CONVERGENCE_COLUMNS = ["nx", "l1_error", "order"]


def convergence_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CONVERGENCE_COLUMNS)
    for r in rows:
        w.writerow([r.nx, repr(r.error), "" if r.order is None else repr(r.order)])
    return buf.getvalue()


def cmd_converge(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    tab = _scheme(cfg)
    out = _out_dir(cfg)
    study = StudyConfig(tab, cfg.eps, tuple(cfg.nx), cfg.nv, cfg.vmax, cfg.t_final, cfg.cfl,
                        cfg.operator, cfg.init, reference=cfg.reference,
                        kernel_cache=None if out is None else str(out / "kernels"))
    if cfg.operator == "boltzmann" and not cfg.penalized:
        raise ConfigError("the Boltzmann operator is only available with --penalized")
    try:
        rows = run_study(study)
    except ValueError as exc:
        if isinstance(exc, InadmissibleStateError):
            raise
        raise ConfigError(str(exc)) from exc
    text = convergence_csv(rows)
    stdout.write(text.replace("\r\n", "\n"))
    if out is not None:
        (out / "convergence.csv").write_text(text, newline="")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if cfg.out is not None:
            _out_dir(cfg)
            (Path(cfg.out) / "config.txt").write_text(serialize_config(cfg), encoding="utf-8")
        handler = {"analyze": cmd_analyze, "simulate": cmd_simulate, "converge": cmd_converge}[cfg.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"apkin: error: {exc}", file=sys.stderr)
        return 2
    except (SolverAbort, InadmissibleStateError, FloatingPointError) as exc:
        print(f"apkin: run aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
