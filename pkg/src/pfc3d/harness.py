"""Quantitative experiment harness: grid-refinement convergence rates and
multigrid complexity sweeps.

Without an exact solution, convergence is measured through differences of
solutions on consecutive grids: the coarse solution is injected onto the fine
grid (each coarse value copied to its 8 children, matching the cell-centered
stencil) and subtracted from the fine solution at the same final time.  The
refinement path ties the time step to the spacing, so halving h quarters the
expected difference.

The complexity sweep runs a fixed number of implicit steps per grid size and
smoothing pair, recording the V-cycle count of the final step and the full
per-cycle residual histories for plotting.
"""

from __future__ import annotations

import dataclasses
import io
from dataclasses import dataclass, field

import numpy as np

from .driver import RunConfig, bootstrap_first_step, build_initial_field, run
from .grid import CellField, GridSpec, norm_inf, norm_p
from .multigrid import solve_timestep
from .scheme import SchemeState


def nn_interpolate_coarse_to_fine(f_coarse: CellField, m_fine: int) -> CellField:
    """Nearest-neighbor injection onto a grid with twice the cells per axis."""
    if m_fine != 2 * f_coarse.spec.m:
        raise ValueError(
            f"fine size must be twice the coarse size, got {m_fine} from "
            f"{f_coarse.spec.m}"
        )
    fine = np.repeat(np.repeat(np.repeat(f_coarse.values, 2, 0), 2, 1), 2, 2)
    return CellField(GridSpec(m_fine, f_coarse.spec.L), fine)


@dataclass
class ConvergencePair:
    m_coarse: int
    m_fine: int
    error_l2: float
    error_linf: float
    rate: float | None  # log2 of consecutive l2 error ratio; None for first pair


@dataclass
class ConvergenceReport:
    pairs: list[ConvergencePair]
    config: dict

    def csv_text(self) -> str:
        out = io.StringIO()
        out.write("m_coarse,m_fine,error_l2,error_linf,rate\n")
        for p in self.pairs:
            rate = "" if p.rate is None else repr(p.rate)
            out.write(
                f"{p.m_coarse},{p.m_fine},{p.error_l2!r},{p.error_linf!r},{rate}\n"
            )
        return out.getvalue()


def _run_to_final_time(base: RunConfig, m: int, tau_over_h: float, t_final: float):
    spec = GridSpec(m, base.grid.L)
    tau = tau_over_h * spec.h
    n_float = t_final / tau
    n = int(round(n_float))
    if n < 1 or abs(n - n_float) > 1e-9 * max(n_float, 1.0):
        raise ValueError(
            f"final time {t_final} is not an integer number of steps of "
            f"tau={tau} at m={m}"
        )
    config = dataclasses.replace(
        base,
        grid=spec,
        tau=tau,
        n_steps=n,
        output_dir=None,
        snapshot_every=0,
        energy_log_every=max(n, 1),
    )
    report = run(config)
    return report.final_field, report


def cauchy_convergence_test(
    base: RunConfig,
    grid_list: list[int],
    tau_over_h: float = 0.05,
    t_final: float | None = None,
) -> ConvergenceReport:
    """Measure grid-difference errors along a doubling refinement path.

    Runs to the common final time on every grid in `grid_list` (strictly
    doubling), injects each coarse solution onto the next finer grid and
    records the 2-norm and max-norm of the difference, with rates from
    consecutive pairs.
    """
    if len(grid_list) < 2:
        raise ValueError("need at least two grid sizes")
    for a, b in zip(grid_list, grid_list[1:]):
        if b != 2 * a:
            raise ValueError(f"grid list must double at each entry, got {a}->{b}")
    if t_final is None:
        t_final = base.n_steps * base.tau

    fields = {}
    for m in grid_list:
        fields[m], _ = _run_to_final_time(base, m, tau_over_h, t_final)

    pairs = []
    prev_err = None
    for mc, mf in zip(grid_list, grid_list[1:]):
        diff = fields[mf] - nn_interpolate_coarse_to_fine(fields[mc], mf)
        e2 = norm_p(diff, 2)
        einf = norm_inf(diff)
        rate = None if prev_err is None else float(np.log2(prev_err / e2))
        pairs.append(ConvergencePair(mc, mf, e2, einf, rate))
        prev_err = e2
    cfg = base.echo()
    cfg.update({"tau_over_h": tau_over_h, "t_final": t_final, "grids": grid_list})
    return ConvergenceReport(pairs, cfg)


@dataclass
class ComplexityEntry:
    nu1: int
    nu2: int
    m: int
    cycles_final_step: int
    converged: bool


@dataclass
class ComplexityReport:
    entries: list[ComplexityEntry]
    histories: list = field(default_factory=list)  # (nu1, nu2, m, step, [(c, r)])
    config: dict = field(default_factory=dict)

    def csv_text(self) -> str:
        out = io.StringIO()
        out.write("nu1,nu2,m,cycles_final_step,converged\n")
        for e in self.entries:
            out.write(
                f"{e.nu1},{e.nu2},{e.m},{e.cycles_final_step},"
                f"{int(e.converged)}\n"
            )
        return out.getvalue()

    def residual_csv_text(self) -> str:
        out = io.StringIO()
        out.write("nu1,nu2,m,step,cycle,residual\n")
        for nu1, nu2, m, step, history in self.histories:
            for cycle, r in history:
                out.write(f"{nu1},{nu2},{m},{step},{cycle},{r!r}\n")
        return out.getvalue()


def complexity_test(
    base: RunConfig,
    grid_list: list[int],
    smoothing_list: list[tuple[int, int]],
) -> ComplexityReport:
    """V-cycle counts per grid size and smoothing pair after base.n_steps steps.

    Non-convergence of a step is recorded (count capped at max_cycles, flag
    cleared) rather than raised, and the sweep continues with the returned
    iterate.
    """
    entries = []
    histories = []
    for nu1, nu2 in smoothing_list:
        for m in grid_list:
            config = dataclasses.replace(
                base,
                grid=GridSpec(m, base.grid.L),
                mg=dataclasses.replace(base.mg, nu1=nu1, nu2=nu2),
                output_dir=None,
                snapshot_every=0,
            )
            phi0 = build_initial_field(config)
            phi1, boot = bootstrap_first_step(phi0, config)
            if boot is not None:
                histories.append((nu1, nu2, m, 1, boot.residual_history))
            prev, curr = phi0, phi1
            last_cycles, ok = 0, True
            for step in range(2, config.n_steps + 1):
                state = SchemeState(
                    curr, prev, config.tau, config.params, config.mobility
                )
                u, rep = solve_timestep(state, config.mg)
                histories.append((nu1, nu2, m, step, rep.residual_history))
                prev, curr = curr, u.phi
                last_cycles, ok = rep.cycles, rep.converged
            entries.append(ComplexityEntry(nu1, nu2, m, last_cycles, ok))
    cfg = base.echo()
    cfg.update({"grids": grid_list, "smoothing": smoothing_list})
    return ComplexityReport(entries, histories, cfg)
