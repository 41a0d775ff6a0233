"""Time-stepping driver: initialization, first-step bootstrap, marching loop,
energy monitoring, and snapshot scheduling.

A run builds phi^0, obtains phi^1 by the configured bootstrap (plain copy, or
one step of the first-order splitting scheme), then marches the two-level
scheme.  The modified energy of (phi^1, phi^0) is the bound that no later
energy value may exceed; violations beyond a small slack are recorded with
their step index but do not abort the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .energy import EnergyParams, discrete_energy, modified_energy
from .grid import CellField, GridSpec, mean
from .multigrid import (
    MGConfig,
    SolverError,
    solve_first_order_step,
    solve_timestep,
)
from .scheme import MobilityModel, SchemeState

INIT_MODES = ("smooth", "random")
BOOTSTRAP_MODES = ("copy", "first_order")

# identifier of the deterministic generator behind `init_random`; recorded in
# run reports so results can be reproduced elsewhere
RNG_ALGORITHM = "numpy-pcg64"


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; physics fields have no defaults on disk."""

    grid: GridSpec
    epsilon: float
    tau: float
    n_steps: int
    init: str = "smooth"
    seed: int | None = None
    bootstrap: str = "copy"
    mg: MGConfig = field(default_factory=MGConfig)
    mobility: MobilityModel = field(default_factory=MobilityModel)
    output_dir: Path | None = None
    snapshot_every: int = 0  # 0 disables snapshots
    snapshot_vtk: bool = False
    energy_log_every: int = 1
    stability_slack_rel: float = 1e-9

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "random" and self.seed is None:
            raise ValueError("random initialization requires a seed")
        if self.seed is not None and not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed!r}")
        if self.bootstrap not in BOOTSTRAP_MODES:
            raise ValueError(
                f"bootstrap must be one of {BOOTSTRAP_MODES}, got {self.bootstrap!r}"
            )
        if self.snapshot_every < 0 or self.energy_log_every < 1:
            raise ValueError("snapshot/energy cadences must be >= 1 (snapshot 0 = off)")

    @property
    def params(self) -> EnergyParams:
        return EnergyParams(self.epsilon)

    def echo(self) -> dict:
        d = {
            "m": self.grid.m,
            "L": self.grid.L,
            "epsilon": self.epsilon,
            "tau": self.tau,
            "n_steps": self.n_steps,
            "init": self.init,
            "seed": self.seed,
            "bootstrap": self.bootstrap,
            "nu1": self.mg.nu1,
            "nu2": self.mg.nu2,
            "tol": self.mg.tol,
            "max_cycles": self.mg.max_cycles,
            "coarsest_m": self.mg.coarsest_m,
            "smoother_order": self.mg.smoother_order,
            "coarse_sweeps": self.mg.coarse_sweeps,
            "residual_norm": self.mg.residual_norm,
            "prolongation": self.mg.prolongation,
            "snapshot_every": self.snapshot_every,
            "snapshot_vtk": self.snapshot_vtk,
            "energy_log_every": self.energy_log_every,
            "stability_slack_rel": self.stability_slack_rel,
            "mobility": self.mobility.name,
        }
        return d


@dataclass
class StepRecord:
    step: int
    time: float
    energy: float
    modified_energy: float
    mg_cycles: int
    residual: float


@dataclass
class RunReport:
    """Everything observed during a run, in memory."""

    config: dict
    rng_algorithm: str | None
    backend: str
    records: list[StepRecord] = field(default_factory=list)
    residual_histories: list = field(default_factory=list)  # (step, [(cycle, r)])
    stability_violations: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)  # manifest dicts
    energy_bound: float = float("nan")
    mass_initial: float = float("nan")
    mass_final: float = float("nan")
    final_field: CellField | None = None


def init_smooth(grid: GridSpec, mean_value: float = 0.2, amplitude: float = 0.05) -> CellField:
    """Product-cosine profile with one full period per axis."""
    L = grid.L
    w = 2.0 * np.pi / L
    return CellField.from_function(
        grid,
        lambda x, y, z: mean_value
        + amplitude * np.cos(w * x) * np.cos(w * y) * np.cos(w * z),
    )


def init_random(
    grid: GridSpec, seed: int, mean_value: float = 0.2, amplitude: float = 0.005
) -> CellField:
    """mean + amplitude * U[0,1] noise, reproducible from the seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return CellField(grid, mean_value + amplitude * rng.random(grid.shape))


def build_initial_field(config: RunConfig) -> CellField:
    if config.init == "smooth":
        return init_smooth(config.grid)
    return init_random(config.grid, int(config.seed))


def bootstrap_first_step(phi0: CellField, config: RunConfig):
    """Produce phi^1 from phi^0; returns (phi1, solve report or None)."""
    if config.bootstrap == "copy":
        return phi0.copy(), None
    u, report = solve_first_order_step(
        phi0, config.tau, config.params, config.mobility, config.mg
    )
    if not report.converged:
        raise SolverError(
            f"first-order bootstrap did not converge in {report.cycles} cycles "
            f"(residual {report.residual_history[-1][1]:.3e})"
        )
    return u.phi, report


def run(config: RunConfig) -> RunReport:
    """March n_steps time steps and return the full report.

    Steps 0 and 1 are the initial field and the bootstrap; steps 2..n_steps
    are implicit solves.  Non-convergence of any solve is fatal.  When
    config.output_dir is set, the energy log, report and snapshots are
    persisted there (one run per directory, enforced by a lock file).
    """
    from . import io_cli  # deferred: io_cli imports driver types

    report = RunReport(
        config=config.echo(),
        rng_algorithm=RNG_ALGORITHM if config.init == "random" else None,
        backend=kernels.BACKEND,
    )
    params = config.params
    outdir = Path(config.output_dir) if config.output_dir is not None else None

    with io_cli.output_lock(outdir):
        phi0 = build_initial_field(config)
        report.mass_initial = mean(phi0)

        def log_record(step, phi_curr, phi_prev, cycles, resid):
            e = discrete_energy(phi_curr, params)
            me = modified_energy(phi_curr, phi_prev, params)
            report.records.append(
                StepRecord(step, step * config.tau, e, me, cycles, resid)
            )
            return e

        def snapshot(step, f):
            if outdir is None or config.snapshot_every <= 0:
                return
            if step % config.snapshot_every and step != config.n_steps:
                return
            entry = io_cli.write_run_snapshot(
                outdir, f, step=step, time=step * config.tau, vtk=config.snapshot_vtk
            )
            report.snapshots.append(entry)

        log_record(0, phi0, phi0, 0, 0.0)
        snapshot(0, phi0)

        phi1, boot = bootstrap_first_step(phi0, config)
        if not phi1.is_finite():
            raise SolverError("bootstrap produced non-finite values")
        bound = modified_energy(phi1, phi0, params)
        report.energy_bound = bound
        slack = config.stability_slack_rel * abs(bound)
        if boot is not None:
            report.residual_histories.append((1, boot.residual_history))
        log_record(1, phi1, phi0, 0 if boot is None else boot.cycles,
                   0.0 if boot is None else boot.residual_history[-1][1])
        snapshot(1, phi1)

        phi_prev, phi_curr = phi0, phi1
        for step in range(2, config.n_steps + 1):
            state = SchemeState(
                phi_curr, phi_prev, config.tau, params, config.mobility
            )
            u, rep = solve_timestep(state, config.mg)
            if not rep.converged:
                raise SolverError(
                    f"step {step}: multigrid did not converge within "
                    f"{rep.cycles} cycles (residual "
                    f"{rep.residual_history[-1][1]:.3e})"
                )
            if not u.phi.is_finite():
                raise SolverError(f"step {step}: non-finite solution values")
            report.residual_histories.append((step, rep.residual_history))
            phi_prev, phi_curr = phi_curr, u.phi
            if step % config.energy_log_every == 0 or step == config.n_steps:
                e = log_record(step, phi_curr, phi_prev, rep.cycles,
                               rep.residual_history[-1][1])
                if e > bound + slack:
                    report.stability_violations.append(
                        {"step": step, "energy": e, "bound": bound}
                    )
            snapshot(step, phi_curr)

        report.mass_final = mean(phi_curr)
        report.final_field = phi_curr

        if outdir is not None:
            io_cli.write_energy_csv(outdir / "energy.csv", report.records)
            io_cli.write_report_json(outdir / "report.json", report)
    return report
