"""Closed moment system for constant growth, constant degradation,
linear splitting with uniform daughters, and constant joining.

For that coefficient choice the first two moments of the size equation
close on themselves, giving a three-component ODE that serves as an
independent reference for the full solver:

    v'  = lam - gamma*v - V*tau*U0 + beta*y0^2*U0
    U0' = -mu*U0 + beta*(U1 - 2*y0*U0) - eta*U0^2
    U1' = V*tau*U0 - mu*U1 - beta*y0^2*U0

with V = v/(1 + nu*U1).  Every term is the exact moment of the
corresponding mechanism; the derivation is spelled out term by term in
the test suite.  Summing the first and third lines gives the total
monomer count law (v + U1)' = lam - gamma*v - mu*U1, which the
integrator must preserve exactly at the level of the right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Tuple

import numpy as np

from ._ode import rk4_solve
from .errors import BlowUp, MismatchedRates
from .kernels import KernelSet

__all__ = [
    "MomentOdeState",
    "MomentRates",
    "rates_from_kernel_set",
    "moment_ode_rhs",
    "integrate_oracle",
    "OracleTrajectory",
    "compare",
]


@dataclass(frozen=True)
class MomentOdeState:
    v: float
    U0: float
    U1: float

    def as_array(self) -> np.ndarray:
        return np.array([self.v, self.U0, self.U1])

    @classmethod
    def from_array(cls, a) -> "MomentOdeState":
        return cls(v=float(a[0]), U0=float(a[1]), U1=float(a[2]))


@dataclass(frozen=True)
class MomentRates:
    """Scalar coefficients of the closed system."""

    production: float = 0.0
    degradation: float = 0.0
    saturation: float = 0.0
    growth: float = 1.0
    death: float = 0.0
    frag_slope: float = 0.0
    join: float = 0.0
    min_size: float = 1.0

    def __post_init__(self):
        for name in ("production", "degradation", "saturation", "death",
                     "frag_slope", "join"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.growth <= 0.0:
            raise ValueError("growth must be positive")
        if self.min_size <= 0.0:
            raise ValueError("min_size must be positive")


def rates_from_kernel_set(k: KernelSet) -> MomentRates:
    """Read the scalar coefficients off a kernel set by probing the
    closures; only meaningful for the constant/linear family the closure
    holds for."""
    y = np.array([2.0 * k.params.min_size, 4.0 * k.params.min_size])
    growth = float(np.asarray(k.growth(y), dtype=float)[0])
    death = float(np.asarray(k.death(y), dtype=float)[0])
    frag = np.asarray(k.frag(y), dtype=float)
    slope = float(frag[1] - frag[0]) / float(y[1] - y[0])
    join = float(np.asarray(k.join(y[:1], y[1:]), dtype=float)[0])
    return MomentRates(
        production=k.params.production,
        degradation=k.params.degradation,
        saturation=k.params.saturation,
        growth=growth,
        death=death,
        frag_slope=slope,
        join=join,
        min_size=k.params.min_size,
    )


def moment_ode_rhs(state: MomentOdeState, rates: MomentRates) -> MomentOdeState:
    v, u0, u1 = state.v, state.U0, state.U1
    r = rates
    speed = v / (1.0 + r.saturation * u1)
    y0 = r.min_size
    dv = (r.production - r.degradation * v - speed * r.growth * u0
          + r.frag_slope * y0 * y0 * u0)
    du0 = (-r.death * u0 + r.frag_slope * (u1 - 2.0 * y0 * u0)
           - r.join * u0 * u0)
    du1 = speed * r.growth * u0 - r.death * u1 - r.frag_slope * y0 * y0 * u0
    return MomentOdeState(v=dv, U0=du0, U1=du1)


@dataclass(frozen=True)
class OracleTrajectory:
    times: np.ndarray
    v: np.ndarray
    U0: np.ndarray
    U1: np.ndarray
    step_halving_error: float
    rates: "MomentRates" = None

    def state_at(self, index: int) -> MomentOdeState:
        return MomentOdeState(v=float(self.v[index]),
                              U0=float(self.U0[index]),
                              U1=float(self.U1[index]))

    def as_columns(self) -> Mapping[str, np.ndarray]:
        return {"t": self.times, "v": self.v, "U0": self.U0, "U1": self.U1}


def _rhs_array(rates: MomentRates):
    def f(t, a):
        d = moment_ode_rhs(MomentOdeState.from_array(a), rates)
        return d.as_array()

    return f


def integrate_oracle(
    state0: MomentOdeState,
    rates: MomentRates,
    t_end: float,
    dt: float,
) -> OracleTrajectory:
    """Classical fourth-order integration of the closed system on a
    uniform time grid, with a built-in step-halving error estimate.

    The reported error is the largest relative deviation between the dt
    and dt/2 runs at shared times; it quantifies the oracle's own time
    discretization and must be far below any tolerance the oracle is
    used to enforce."""
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    if dt <= 0.0 or dt > t_end / 10.0:
        raise ValueError("dt must be positive and at most t_end/10")
    n_steps = int(math.ceil(t_end / dt - 1e-12))
    times = np.linspace(0.0, n_steps * dt, n_steps + 1)
    f = _rhs_array(rates)
    coarse = rk4_solve(f, state0.as_array(), times)
    fine = rk4_solve(f, state0.as_array(), times, substeps=2)
    if not np.all(np.isfinite(coarse)):
        raise BlowUp("moment system diverged; shrink dt or the horizon")
    scale = np.maximum(1.0, np.max(np.abs(coarse)))
    halving = float(np.max(np.abs(coarse - fine)) / scale)
    v, u0, u1 = coarse[:, 0], coarse[:, 1], coarse[:, 2]
    floor = -1e-9 * float(scale)
    if np.any(v < floor) or np.any(u0 < floor) or np.any(u1 < floor):
        raise BlowUp("moment system left the positive cone")
    return OracleTrajectory(times=times, v=v, U0=u0, U1=u1,
                            step_halving_error=halving, rates=rates)


def compare(pde_ledger, oracle_traj: OracleTrajectory,
            expected_rates: MomentRates = None) -> dict:
    """Largest relative deviation between a run's ledger columns and the
    closed moment system, per component, at the ledger's times (the
    oracle columns are linearly interpolated there, so integrate the
    oracle at least as finely as the run).

    Raises MismatchedRates when the trajectory was integrated with a
    different coefficient set than the caller expects.  When the run
    pushed noticeable count past the outer monitoring band, the report
    carries a caveat: the truncated system no longer matches the closed
    one regardless of step sizes."""
    if (expected_rates is not None and oracle_traj.rates is not None
            and oracle_traj.rates != expected_rates):
        raise MismatchedRates(
            f"oracle used {oracle_traj.rates}, caller expected {expected_rates}")
    times = pde_ledger.column("t")
    if times[-1] > oracle_traj.times[-1] + 1e-12:
        raise ValueError("oracle horizon is shorter than the run")
    report = {}
    for name in ("v", "U0", "U1"):
        ref = np.interp(times, oracle_traj.times, getattr(oracle_traj, name))
        col = pde_ledger.column(name)
        scale = max(1.0, float(np.max(np.abs(ref))))
        report[name] = float(np.max(np.abs(col - ref))) / scale
    caveats = []
    tail = pde_ledger.column("tail_mass")
    u1 = pde_ledger.column("U1")
    if float(np.max(tail)) > 1e-4 * max(1e-300, float(np.max(u1))):
        caveats.append("tail count is non-negligible; the comparison "
                       "reflects truncation as well as time stepping")
    report["caveats"] = caveats
    report["oracle_self_error"] = oracle_traj.step_halving_error
    return report
