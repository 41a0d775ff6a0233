"""Configuration files, result persistence, and the command-line interface.

Configs are flat JSON objects of scalars and strings.  Physical parameters
(grid size, domain length, epsilon, tau, step counts, seed, smoothing counts,
tolerance) must be explicit; only I/O cadence and solver bookkeeping have
defaults.  Unknown keys are errors.

Snapshots are little-endian binary files with a fixed 64-byte header followed
by the m^3 float64 payload in (i, j, k) order with k fastest; they round-trip
bit-exactly and are the source of truth.  A legacy-ASCII structured-points
export is provided for standard viewers (precision-lossy, view only).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import struct
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .driver import RunConfig, RunReport, run
from .grid import CellField, GridSpec
from .harness import cauchy_convergence_test, complexity_test
from .multigrid import MGConfig, SolverError

SNAPSHOT_MAGIC = b"PFC3D\x00"
SNAPSHOT_VERSION = 1
SNAPSHOT_ENCODING_F64 = 0
# magic, version, m, L, time, step, encoding tag, zero padding to 64 bytes
_HEADER = struct.Struct("<6sIIddQI22x")
assert _HEADER.size == 64

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3


class ConfigError(Exception):
    """A configuration file or CLI usage problem (exit code 2)."""


# -- config parsing ---------------------------------------------------------------


class _ConfigReader:
    """Strict reader for a flat JSON object with per-key type checks."""

    _REQUIRED = object()

    def __init__(self, path):
        self.path = Path(path)
        try:
            text = self.path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        self.data = data
        self.lines = text.splitlines()
        self.seen: set[str] = set()

    def line_of(self, key: str):
        needle = f'"{key}"'
        for n, line in enumerate(self.lines, start=1):
            if needle in line:
                return n
        return None

    def _where(self, key: str) -> str:
        line = self.line_of(key)
        return f"{self.path.name}:{line}" if line else self.path.name

    def take(self, key: str, kind, default=_REQUIRED):
        if key not in self.data:
            if default is self._REQUIRED:
                raise ConfigError(f"{self.path.name}: missing required key '{key}'")
            return default
        self.seen.add(key)
        value = self.data[key]
        if kind is bool:
            if not isinstance(value, bool):
                raise ConfigError(
                    f"{self._where(key)}: key '{key}' must be a boolean"
                )
            return value
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(
                    f"{self._where(key)}: key '{key}' must be an integer"
                )
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{self._where(key)}: key '{key}' must be a number")
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise ConfigError(f"{self._where(key)}: key '{key}' must be a string")
            return value
        raise AssertionError(kind)

    def has(self, key: str) -> bool:
        return key in self.data

    def finish(self):
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            key = unknown[0]
            raise ConfigError(f"{self._where(key)}: unknown key '{key}'")


def _mg_from_reader(r: _ConfigReader, with_smoothing: bool = True) -> MGConfig:
    kwargs = {
        "tol": r.take("tol", float),
        "max_cycles": r.take("max_cycles", int, 100),
        "coarsest_m": r.take("coarsest_m", int, 2),
        "smoother_order": r.take("smoother_order", str, "lexicographic"),
        "coarse_sweeps": r.take("coarse_sweeps", int, 50),
        "residual_norm": r.take("residual_norm", str, "l2"),
        "prolongation": r.take("prolongation", str, "constant"),
    }
    if with_smoothing:
        kwargs["nu1"] = r.take("nu1", int)
        kwargs["nu2"] = r.take("nu2", int)
    try:
        return MGConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{r.path.name}: {exc}") from exc


def _steps_from_reader(r: _ConfigReader, tau: float) -> int:
    has_n = r.has("n_steps")
    has_t = r.has("t_final")
    if has_n == has_t:
        raise ConfigError(
            f"{r.path.name}: exactly one of 'n_steps' or 't_final' is required"
        )
    if has_n:
        return r.take("n_steps", int)
    t_final = r.take("t_final", float)
    n_float = t_final / tau
    n = int(round(n_float))
    if n < 1 or abs(n - n_float) > 1e-9 * max(abs(n_float), 1.0):
        raise ConfigError(
            f"{r.path.name}: t_final={t_final} is not an integer multiple of "
            f"tau={tau}"
        )
    return n


def _common_run_fields(r: _ConfigReader, with_grid: bool = True) -> dict:
    fields = {}
    if with_grid:
        m = r.take("m", int)
        L = r.take("L", float)
        try:
            fields["grid"] = GridSpec(m, L)
        except ValueError as exc:
            raise ConfigError(f"{r.path.name}: {exc}") from exc
    else:
        fields["L"] = r.take("L", float)
    fields["epsilon"] = r.take("epsilon", float)
    fields["init"] = r.take("init", str)
    fields["bootstrap"] = r.take("bootstrap", str)
    if fields["init"] == "random" or r.has("seed"):
        fields["seed"] = r.take("seed", int, None)
    else:
        fields["seed"] = None
    return fields


def _io_fields(r: _ConfigReader) -> dict:
    out = r.take("output_dir", str, None)
    return {
        "output_dir": Path(out) if out else None,
        "snapshot_every": r.take("snapshot_every", int, 0),
        "snapshot_vtk": r.take("snapshot_vtk", bool, False),
        "energy_log_every": r.take("energy_log_every", int, 1),
        "stability_slack_rel": r.take("stability_slack_rel", float, 1e-9),
    }


def parse_config(path) -> RunConfig:
    """Read a `run` config; all physics explicit, I/O cadence defaulted."""
    r = _ConfigReader(path)
    common = _common_run_fields(r)
    tau = r.take("tau", float)
    n_steps = _steps_from_reader(r, tau)
    mg = _mg_from_reader(r)
    io = _io_fields(r)
    r.finish()
    try:
        return RunConfig(tau=tau, n_steps=n_steps, mg=mg, **common, **io)
    except ValueError as exc:
        raise ConfigError(f"{r.path.name}: {exc}") from exc


def _parse_grid_list(r: _ConfigReader) -> list[int]:
    raw = r.take("grids", str)
    try:
        grids = [int(tok) for tok in raw.replace(" ", "").split(",") if tok]
    except ValueError:
        raise ConfigError(
            f"{r._where('grids')}: 'grids' must be comma-separated integers"
        ) from None
    if len(grids) < 1:
        raise ConfigError(f"{r._where('grids')}: 'grids' is empty")
    return grids


def parse_converge_config(path):
    """Read a `converge` config: base run template plus the refinement path."""
    r = _ConfigReader(path)
    common = _common_run_fields(r, with_grid=False)
    L = common.pop("L")
    grids = _parse_grid_list(r)
    if len(grids) < 2:
        raise ConfigError(f"{r.path.name}: convergence needs at least two grids")
    tau_over_h = r.take("tau_over_h", float)
    t_final = r.take("t_final", float)
    mg = _mg_from_reader(r)
    out = r.take("output_dir", str, None)
    r.finish()
    if tau_over_h <= 0 or t_final <= 0:
        raise ConfigError(f"{r.path.name}: tau_over_h and t_final must be positive")
    # placeholder grid/tau/steps; the harness re-derives them per grid size
    spec = GridSpec(grids[0], L)
    tau = tau_over_h * spec.h
    base = RunConfig(
        grid=spec,
        tau=tau,
        n_steps=max(int(round(t_final / tau)), 1),
        mg=mg,
        **common,
    )
    return base, grids, tau_over_h, t_final, Path(out) if out else None


def parse_complexity_config(path):
    """Read a `complexity` config: base run template plus sweep lists."""
    r = _ConfigReader(path)
    common = _common_run_fields(r, with_grid=False)
    L = common.pop("L")
    grids = _parse_grid_list(r)
    raw = r.take("smoothing", str)
    smoothing = []
    try:
        for pair in raw.replace(" ", "").split(";"):
            if not pair:
                continue
            a, b = pair.split(",")
            smoothing.append((int(a), int(b)))
    except ValueError:
        raise ConfigError(
            f"{r._where('smoothing')}: 'smoothing' must look like '1,1;2,2'"
        ) from None
    if not smoothing:
        raise ConfigError(f"{r._where('smoothing')}: no smoothing pairs given")
    tau = r.take("tau", float)
    n_steps = _steps_from_reader(r, tau)
    mg = _mg_from_reader(r, with_smoothing=False)
    out = r.take("output_dir", str, None)
    r.finish()
    try:
        base = RunConfig(
            grid=GridSpec(grids[0], L), tau=tau, n_steps=n_steps, mg=mg, **common
        )
    except ValueError as exc:
        raise ConfigError(f"{r.path.name}: {exc}") from exc
    return base, grids, smoothing, Path(out) if out else None


# -- snapshots --------------------------------------------------------------------


def write_snapshot(f: CellField, path, time: float = 0.0, step: int = 0):
    """Binary snapshot: 64-byte header + m^3 float64 payload, k fastest."""
    header = _HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        f.spec.m,
        f.spec.L,
        float(time),
        int(step),
        SNAPSHOT_ENCODING_F64,
    )
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C"))


def read_snapshot(path) -> tuple[CellField, dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise ValueError(f"{path}: truncated snapshot header")
        magic, version, m, L, time, step, encoding = _HEADER.unpack(header)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        if encoding != SNAPSHOT_ENCODING_F64:
            raise ValueError(f"{path}: unsupported value encoding {encoding}")
        payload = fh.read(m**3 * 8)
        if len(payload) < m**3 * 8:
            raise ValueError(f"{path}: truncated snapshot payload")
    values = np.frombuffer(payload, dtype="<f8").reshape(m, m, m)
    field = CellField(GridSpec(m, L), values.copy())
    meta = {"m": m, "L": L, "time": time, "step": step}
    return field, meta


def export_vtk(f: CellField, path, name: str = "phi", time: float | None = None):
    """Legacy-ASCII structured-points export (for viewers; precision-lossy)."""
    spec = f.spec
    h = spec.h
    title = f"pfc3d density field"
    if time is not None:
        title += f" t={time!r}"
    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {spec.m} {spec.m} {spec.m}",
        f"ORIGIN {0.5 * h!r} {0.5 * h!r} {0.5 * h!r}",
        f"SPACING {h!r} {h!r} {h!r}",
        f"POINT_DATA {spec.m**3}",
        f"SCALARS {name} double 1",
        "LOOKUP_TABLE default",
    ]
    # VTK expects x varying fastest; storage has k fastest
    body = "\n".join("%.17g" % v for v in f.values.ravel(order="F"))
    Path(path).write_text("\n".join(lines) + "\n" + body + "\n")


def write_run_snapshot(outdir: Path, f: CellField, step: int, time: float, vtk: bool):
    snapdir = Path(outdir) / "snapshots"
    snapdir.mkdir(parents=True, exist_ok=True)
    binpath = snapdir / f"step{step:06d}.bin"
    write_snapshot(f, binpath, time=time, step=step)
    entry = {"step": step, "time": time, "file": str(binpath.relative_to(outdir))}
    if vtk:
        vtkpath = snapdir / f"step{step:06d}.vtk"
        export_vtk(f, vtkpath, time=time)
        entry["vtk"] = str(vtkpath.relative_to(outdir))
    return entry


# -- logs and reports -------------------------------------------------------------


def write_energy_csv(path, records):
    lines = ["step,time,F_h,modified_energy,mg_cycles,residual"]
    for rec in records:
        lines.append(
            f"{rec.step},{rec.time!r},{rec.energy!r},{rec.modified_energy!r},"
            f"{rec.mg_cycles},{rec.residual!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_json(path, report: RunReport):
    doc = {
        "config": report.config,
        "rng_algorithm": report.rng_algorithm,
        "backend": report.backend,
        "threads": kernels.get_threads(),
        "energy_bound": report.energy_bound,
        "mass_initial": report.mass_initial,
        "mass_final": report.mass_final,
        "stability_violations": report.stability_violations,
        "snapshots": report.snapshots,
        "steps_logged": len(report.records),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


@contextlib.contextmanager
def output_lock(outdir: Path | None):
    """One run per output directory, enforced by an exclusive lock file."""
    if outdir is None:
        yield
        return
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lock = outdir / ".pfc3d.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory {outdir} is in use (lock file {lock.name} exists)"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(OSError):
            lock.unlink()


# -- CLI --------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfc3d",
        description="Energy-stable finite-difference solver for the 3D phase "
        "field crystal equation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--output", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
        p.add_argument(
            "--threads",
            type=int,
            help="worker threads for red-black smoothing "
            "(default: PFC3D_THREADS or 1)",
        )

    add_common(sub.add_parser("run", help="march a time-dependent simulation"))
    add_common(sub.add_parser("converge", help="grid refinement convergence study"))
    add_common(sub.add_parser("complexity", help="multigrid complexity sweep"))
    verify_p = sub.add_parser("verify", help="run the property verification suites")
    verify_p.add_argument("--seed", type=int, default=20260809, help="suite RNG seed")
    verify_p.add_argument("--output", help=argparse.SUPPRESS)
    verify_p.add_argument("--threads", type=int, help=argparse.SUPPRESS)
    return parser


def _apply_thread_setting(args):
    threads = args.threads
    if threads is None:
        env = os.environ.get("PFC3D_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"PFC3D_THREADS must be an integer, got {env!r}")
    if threads is not None:
        try:
            kernels.set_threads(threads)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _override(config: RunConfig, args) -> RunConfig:
    import dataclasses

    updates = {}
    if args.output:
        updates["output_dir"] = Path(args.output)
    if args.seed is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(config, **updates) if updates else config


def _cmd_run(args) -> int:
    config = _override(parse_config(args.config), args)
    report = run(config)
    last = report.records[-1]
    print(
        f"completed {config.n_steps} steps on {config.grid.m}^3 "
        f"(backend {report.backend}); final F_h={last.energy!r}"
    )
    print(
        f"energy bound {report.energy_bound!r}; "
        f"{len(report.stability_violations)} stability violations; "
        f"mass drift {abs(report.mass_final - report.mass_initial):.3e}"
    )
    if config.output_dir is not None:
        print(f"results in {config.output_dir}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    base, grids, tau_over_h, t_final, outdir = parse_converge_config(args.config)
    if args.seed is not None:
        import dataclasses

        base = dataclasses.replace(base, seed=args.seed)
    if args.output:
        outdir = Path(args.output)
    report = cauchy_convergence_test(base, grids, tau_over_h, t_final)
    print("m_coarse -> m_fine   error_l2       error_linf     rate")
    for p in report.pairs:
        rate = "-" if p.rate is None else f"{p.rate:.4f}"
        print(
            f"{p.m_coarse:>8} -> {p.m_fine:<6} {p.error_l2:.6e} "
            f"{p.error_linf:.6e} {rate}"
        )
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "convergence.csv"
        path.write_text(report.csv_text())
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_complexity(args) -> int:
    base, grids, smoothing, outdir = parse_complexity_config(args.config)
    if args.seed is not None:
        import dataclasses

        base = dataclasses.replace(base, seed=args.seed)
    if args.output:
        outdir = Path(args.output)
    report = complexity_test(base, grids, smoothing)
    print("nu1,nu2   m    cycles(final step)  converged")
    for e in report.entries:
        print(
            f"({e.nu1},{e.nu2})  {e.m:>4}  {e.cycles_final_step:>6}"
            f"              {'yes' if e.converged else 'NO'}"
        )
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "complexity.csv").write_text(report.csv_text())
        (outdir / "residual_history.csv").write_text(report.residual_csv_text())
        print(f"wrote {outdir / 'complexity.csv'} and residual_history.csv")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_all

    results, n_pass, n_fail = run_all(seed=args.seed)
    for res in results:
        status = "ok" if res.passed else "FAIL"
        print(f"[{status}] {res.name}: {res.detail}")
    print(f"checked {len(results)} property groups: {n_pass} passed, {n_fail} failed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        _apply_thread_setting(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "converge":
            return _cmd_converge(args)
        if args.command == "complexity":
            return _cmd_complexity(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"pfc3d: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"pfc3d: error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"pfc3d: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main():
    sys.exit(cli_main())
