"""Low-dissipation machinery: the auxiliary path driven by the gradient of
the stochastic convolution, the coupled (u', u#) fixed point, and assembly
u = X + u' << Q + u#.

The coupled system solved here (driven by X with datum u0 carried by u#):

    u' = X + uQ,             uQ := u' << Q + u#
    L u# = [1/2 dx(X^2) - X < dxX] + 1/2 dx(uQ^2)
           + [dx(uQ X) - uQ < dxX] + [u' < dxX - L(u' << Q)],
    u#(0) = u0,

with L = d/dt - Lambda^gamma and Q the zero-start solution of L Q = dx X.
Because u' = X + uQ, the paraproduct groups telescope and the assembled
u = X + u' << Q + u# solves the plain mild Burgers equation; the groups are
still evaluated separately since their individual sizes are the science.

The Duhamel image of L(u' << Q) is evaluated through the exact
variation-of-constants identity int_0^t P(t-s) L w ds = w(t) - P(t) w(0)
(= w(t) here, since Q(0) = 0).  The discrete-stencil cancellation defect
||u' < dxX - L_disc(u' << Q)|| is still measured and reported, never assumed
zero; pass ``l_eval="stencil"`` to use the literal stencil route instead.

Two printed forms of u' circulate for this system (one with u' = X + 2 u' <<
u#); the u' = X + uQ form is implemented, the other is surfaced here as an
inconsistency rather than resolved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .besov import default_fit_range, fit_regularity
from .dynamics import SolverConfig, duhamel_path
from .errors import ConfigError, DivergenceError, InsufficientDataError, NonContractionError
from .paraproduct import (
    TemporalMollifier,
    heat_operator_discrete,
    modified_para,
    para_less_path,
)
from .spectral import (
    TWO_PI,
    SpectralField,
    TimePath,
    product_coeffs,
)


def duhamel_gradient(x_path: TimePath, gamma: float) -> TimePath:
    """Zero-start solution of (d/dt - Lambda^gamma) Q = d/dx X, per mode ETD."""
    grid = x_path.grid
    k = grid.wavenumbers.astype(float)
    lam = np.abs(k) ** gamma
    h = 1j * k[None, :] * x_path.coeffs
    return TimePath(grid, x_path.times, duhamel_path(h, lam, x_path.dt))


@dataclass
class CoupledReport:
    """Iteration record of the coupled fixed point in the weighted norm."""

    increments: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    in_proven_range: bool = True
    l_eval: str = "exact"
    stencil_defect_sup: float = 0.0

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def as_dict(self) -> dict:
        return {
            "increments": self.increments,
            "ratios": self.ratios,
            "converged": self.converged,
            "iterations": self.iterations,
            "in_proven_range": self.in_proven_range,
            "l_eval": self.l_eval,
            "stencil_defect_sup": self.stencil_defect_sup,
        }


@dataclass(frozen=True)
class ParacontrolledState:
    """The solved triple with its ingredients and assembled solution."""

    x: TimePath
    q: TimePath
    u_prime: TimePath
    u_sharp: TimePath
    u: TimePath
    gamma: float
    report: CoupledReport

    def assembly_defect(self, moll: Optional[TemporalMollifier] = None) -> float:
        """sup-L2 defect of u - (X + u' << Q + u#); definitional, re-verified."""
        moll = moll or TemporalMollifier(self.gamma)
        w = modified_para(self.u_prime, self.q, moll)
        diff = self.u.coeffs - (self.x.coeffs + w.coeffs + self.u_sharp.coeffs)
        return float(np.max(np.sqrt(TWO_PI * np.sum(np.abs(diff) ** 2, axis=-1))))


def solve_paracontrolled(
    u0: SpectralField,
    x_path: TimePath,
    config: SolverConfig,
    moll: Optional[TemporalMollifier] = None,
    l_eval: str = "exact",
) -> ParacontrolledState:
    """Coupled iteration for (u', u#) with assembly and diagnostics.

    Convergence is measured in the weighted norm 2 ||du#|| + ||du'|| with
    ||.|| the sup-in-time H^{s_work} norm; the recorded contraction ratios
    sit below the coupled-iteration bound 37/40 on converged runs.
    """
    if l_eval not in ("exact", "stencil"):
        raise ConfigError(f"l_eval must be 'exact' or 'stencil', got {l_eval!r}")
    grid = u0.grid
    if grid.n_modes != x_path.grid.n_modes:
        raise ConfigError("initial datum and forcing live on different grids")
    if not u0.is_mean_zero(tol=1e-10):
        raise ConfigError("initial datum must be mean-zero")
    if not (1.25 < config.gamma <= 2.0):
        raise ConfigError(f"gamma must lie in (5/4, 2], got {config.gamma}")
    moll = moll or TemporalMollifier(config.gamma)

    times = x_path.times
    dt = x_path.dt
    k = grid.wavenumbers.astype(float)
    lam = np.abs(k) ** config.gamma
    ik = 1j * k

    q = duhamel_gradient(x_path, config.gamma)
    dx_x = TimePath(grid, times, ik[None, :] * x_path.coeffs)

    envelope = np.exp(-np.outer(times - times[0], lam))
    base = envelope * u0.coeffs[None, :]

    # group 1 is u'-independent: 1/2 dx(X^2) - X < dx X
    xx = product_coeffs(x_path.coeffs, x_path.coeffs, grid)
    t1 = 0.5 * ik[None, :] * xx - para_less_path(x_path, dx_x).coeffs

    weights = (1.0 + k**2) ** config.s_work
    def work_norm(delta):
        return float(np.max(np.sqrt(TWO_PI * np.sum(weights * np.abs(delta) ** 2, axis=-1))))

    report = CoupledReport(
        in_proven_range=config.gamma <= 4.0 / 3.0,
        l_eval=l_eval,
    )

    u_prime = x_path
    u_sharp = TimePath(grid, times, base)
    rising = 0
    for it in range(1, config.picard_max_iters + 1):
        w = modified_para(u_prime, q, moll)
        uq = w.coeffs + u_sharp.coeffs
        uq_path = TimePath(grid, times, uq)

        t2 = 0.5 * ik[None, :] * product_coeffs(uq, uq, grid)
        t3 = ik[None, :] * product_coeffs(uq, x_path.coeffs, grid) \
            - para_less_path(uq_path, dx_x).coeffs
        t4 = para_less_path(u_prime, dx_x).coeffs
        rhs = t1 + t2 + t3 + t4

        integral = duhamel_path(rhs, lam, dt)
        if l_eval == "exact":
            u_sharp_new = TimePath(grid, times, base + integral - w.coeffs)
        else:
            lw = heat_operator_discrete(w, config.gamma)
            lw_full = np.concatenate([lw.coeffs, lw.coeffs[-1:]], axis=0)
            u_sharp_new = TimePath(
                grid, times, base + integral - duhamel_path(lw_full, lam, dt)
            )
        u_prime_new = TimePath(grid, times, x_path.coeffs + uq)

        inc = 2.0 * work_norm(u_sharp_new.coeffs - u_sharp.coeffs) + work_norm(
            u_prime_new.coeffs - u_prime.coeffs
        )
        report.increments.append(inc)
        report.iterations = it
        if len(report.increments) >= 2 and report.increments[-2] > 10 * config.picard_tol:
            ratio = inc / report.increments[-2]
            report.ratios.append(ratio)
            rising = rising + 1 if ratio >= 1.0 else 0
        u_sharp, u_prime = u_sharp_new, u_prime_new
        if inc < config.picard_tol:
            report.converged = True
            break
        if rising >= 3:
            raise NonContractionError(
                "coupled increments stopped contracting; halve the window", report
            )
    if not report.converged:
        raise DivergenceError(
            f"no convergence in {config.picard_max_iters} iterations", report
        )

    w = modified_para(u_prime, q, moll)
    u = TimePath(grid, times, x_path.coeffs + w.coeffs + u_sharp.coeffs)

    # cancellation defect of the literal stencil route, reported not assumed zero
    lw = heat_operator_discrete(w, config.gamma)
    cancel = para_less_path(u_prime, dx_x).coeffs[:-1] - lw.coeffs
    report.stencil_defect_sup = float(
        np.max(np.sqrt(TWO_PI * np.sum(np.abs(cancel) ** 2, axis=-1)))
    )
    return ParacontrolledState(
        x=x_path, q=q, u_prime=u_prime, u_sharp=u_sharp, u=u,
        gamma=config.gamma, report=report,
    )


def residual_mild(state: ParacontrolledState, config: SolverConfig) -> np.ndarray:
    """Per-time L2 residual of the assembled u in the mild Burgers equation.

    Plugs u into u(t) = P(t) u(0) + B(u, u)(t) + X(t) with the toolkit's own
    ETD quadrature; a small residual certifies that the assembled triple
    solves the original dynamics at the discrete level.
    """
    grid = state.u.grid
    k = grid.wavenumbers.astype(float)
    lam = np.abs(k) ** config.gamma
    times = state.u.times
    envelope = np.exp(-np.outer(times - times[0], lam))
    base = envelope * state.u.coeffs[0][None, :]
    h = 0.5j * k[None, :] * product_coeffs(state.u.coeffs, state.u.coeffs, grid)
    mild = base + duhamel_path(h, lam, state.u.dt) + state.x.coeffs
    diff = state.u.coeffs - mild
    return np.sqrt(TWO_PI * np.sum(np.abs(diff) ** 2, axis=-1))


PREDICTED_EXPONENTS = {
    "x": lambda a, g: a,
    "q": lambda a, g: a + g - 1.0,
    "w": lambda a, g: a + g - 1.0,
    "u_sharp": lambda a, g: 0.5,
    "u": lambda a, g: a,
}


def regularity_report(
    states: List[ParacontrolledState],
    p=2,
    j_range=None,
    time_index: int = -1,
    moll: Optional[TemporalMollifier] = None,
) -> dict:
    """Fitted exponents for X, Q, u'<<Q, u#, u against the predicted values.

    Fields are sampled at ``time_index`` across the ensemble of states.
    Requires at least 20 states.
    """
    states = list(states)
    if len(states) < 20:
        raise InsufficientDataError(f"need >= 20 states, got {len(states)}")
    gamma = states[0].gamma
    alpha = gamma / 2.0 - 0.5
    grid = states[0].u.grid
    if j_range is None:
        j_range = default_fit_range(grid)
    moll = moll or TemporalMollifier(gamma)

    samples = {"x": [], "q": [], "w": [], "u_sharp": [], "u": []}
    for st in states:
        w = modified_para(st.u_prime, st.q, moll)
        samples["x"].append(st.x.field_at(time_index))
        samples["q"].append(st.q.field_at(time_index))
        samples["w"].append(w.field_at(time_index))
        samples["u_sharp"].append(st.u_sharp.field_at(time_index))
        samples["u"].append(st.u.field_at(time_index))

    rows = []
    for name, fields in samples.items():
        fit = fit_regularity(fields, p, j_range)
        rows.append(
            {
                "object": name,
                "fitted": fit.alpha,
                "stderr": fit.stderr,
                "predicted": PREDICTED_EXPONENTS[name](alpha, gamma),
                "convention": fit.convention,
            }
        )
    return {"gamma": gamma, "alpha": alpha, "rows": rows, "ensemble": len(states)}
