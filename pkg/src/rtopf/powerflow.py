"""Newton-Raphson AC power flow (polar form) and operating-limit checks.

The slack bus balances the network: its active/reactive injection and the
total losses come out of the solve. All buses except the slack are PQ.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Network, build_admittance

DEFAULT_TOL = 1e-8  # pu mismatch
DEFAULT_MAX_ITER = 50


class PowerFlowError(Exception):
    pass


class NonConvergence(PowerFlowError):
    def __init__(self, iterations: int, final_residual: float):
        self.iterations = iterations
        self.final_residual = final_residual
        super().__init__(
            f"power flow did not converge after {iterations} iterations "
            f"(residual {final_residual:.3e} pu)")


class SingularJacobian(PowerFlowError):
    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"singular Jacobian at iteration {iteration}")


@dataclass(frozen=True)
class InjectionSpec:
    """Specified injections at every bus, MW / Mvar (slack entries ignored).

    Positive means injection into the network (generation), negative means
    consumption. Wind stations run at unity power factor, so wind only
    contributes to the active part.
    """
    p_mw: np.ndarray
    q_mvar: np.ndarray

    @staticmethod
    def from_mappings(net: Network, p_by_bus, q_by_bus) -> "InjectionSpec":
        p = np.zeros(net.n_buses)
        q = np.zeros(net.n_buses)
        for bus, val in p_by_bus.items():
            p[net.index_of(int(bus))] += val
        for bus, val in q_by_bus.items():
            q[net.index_of(int(bus))] += val
        return InjectionSpec(p, q)


@dataclass(frozen=True)
class PowerFlowSolution:
    v: np.ndarray        # pu magnitude per bus
    theta: np.ndarray    # rad per bus
    p_s: float           # MW at slack
    q_s: float           # Mvar at slack
    p_loss: float        # MW
    flows: np.ndarray    # MVA per branch, max of the two ends
    iterations: int
    max_residual: float  # pu


def _branch_arrays(net: Network):
    fidx = np.array([net.index_of(b.from_bus) for b in net.branches], dtype=int)
    tidx = np.array([net.index_of(b.to_bus) for b in net.branches], dtype=int)
    ys = np.array([1.0 / complex(b.resistance, b.reactance)
                   for b in net.branches])
    bsh = np.array([1j * b.shunt_susceptance_total / 2.0
                    for b in net.branches])
    return fidx, tidx, ys, bsh


def _newton(y: np.ndarray, p_pu: np.ndarray, q_pu: np.ndarray,
            pq: np.ndarray, v: np.ndarray, theta: np.ndarray,
            tol: float, max_iter: int):
    """Core polar Newton iteration on raw arrays; mutates v and theta.

    Returns (iterations, max_residual). Raises NonConvergence or
    SingularJacobian.
    """
    npq = pq.size
    diag = np.arange(y.shape[0])
    for it in range(max_iter + 1):
        vc = v * np.exp(1j * theta)
        cur = y @ vc
        s = vc * np.conj(cur)
        dp = p_pu[pq] - s.real[pq]
        dq = q_pu[pq] - s.imag[pq]
        res = float(max(np.abs(dp).max(), np.abs(dq).max())) if npq else 0.0
        if not np.isfinite(res):
            raise NonConvergence(it, res)
        if res <= tol:
            return it, res
        if it == max_iter:
            raise NonConvergence(it, res)

        # complex power sensitivities (standard polar-form formulas)
        m = -(y * vc[None, :])
        m[diag, diag] += cur
        ds_dth = 1j * vc[:, None] * np.conj(m)
        vn = vc / v
        ds_dvm = vc[:, None] * np.conj(y * vn[None, :])
        ds_dvm[diag, diag] += np.conj(cur) * vn

        jac = np.empty((2 * npq, 2 * npq))
        jac[:npq, :npq] = ds_dth.real[np.ix_(pq, pq)]
        jac[:npq, npq:] = ds_dvm.real[np.ix_(pq, pq)]
        jac[npq:, :npq] = ds_dth.imag[np.ix_(pq, pq)]
        jac[npq:, npq:] = ds_dvm.imag[np.ix_(pq, pq)]
        rhs = np.concatenate([dp, dq])
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            raise SingularJacobian(it) from None
        theta[pq] += step[:npq]
        v[pq] += step[npq:]
        if np.any(v[pq] <= 0) or not np.all(np.isfinite(v[pq])):
            raise NonConvergence(it + 1, float("inf"))
    raise NonConvergence(max_iter, res)  # pragma: no cover


def branch_flows(net: Network, v: np.ndarray, theta: np.ndarray,
                 arrays=None) -> np.ndarray:
    """Apparent power per branch in MVA, the larger of the two ends."""
    if not net.branches:
        return np.zeros(0)
    fidx, tidx, ys, bsh = arrays if arrays is not None else _branch_arrays(net)
    vc = v * np.exp(1j * theta)
    vf, vt = vc[fidx], vc[tidx]
    i_f = (vf - vt) * ys + vf * bsh
    i_t = (vt - vf) * ys + vt * bsh
    s_f = np.abs(vf * np.conj(i_f))
    s_t = np.abs(vt * np.conj(i_t))
    return np.maximum(s_f, s_t) * net.base_mva


def solve_power_flow(net: Network, inj: InjectionSpec, *,
                     tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER,
                     start=None,
                     y: np.ndarray | None = None) -> PowerFlowSolution:
    """Solve the AC power-flow equations for the given injections.

    ``start`` is None for a flat start or a ``(v, theta)`` pair for a warm
    start. ``y`` optionally passes a precomputed admittance matrix.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    n = net.n_buses
    if y is None:
        y = build_admittance(net)
    pq = np.arange(1, n)
    p_pu = np.asarray(inj.p_mw, dtype=float) / net.base_mva
    q_pu = np.asarray(inj.q_mvar, dtype=float) / net.base_mva

    if start is None:
        v = np.full(n, net.slack_voltage)
        theta = np.full(n, net.slack_angle)
    else:
        v = np.array(start[0], dtype=float)
        theta = np.array(start[1], dtype=float)
        v[0] = net.slack_voltage
        theta[0] = net.slack_angle

    iterations, res = _newton(y, p_pu, q_pu, pq, v, theta, tol, max_iter)

    vc = v * np.exp(1j * theta)
    s_slack = vc[0] * np.conj((y @ vc)[0])
    p_s = float(s_slack.real) * net.base_mva
    q_s = float(s_slack.imag) * net.base_mva
    # balance identity: the slack covers demand minus wind plus losses
    p_loss = p_s + float(np.sum(inj.p_mw[1:]))
    return PowerFlowSolution(
        v=v, theta=theta, p_s=p_s, q_s=q_s, p_loss=p_loss,
        flows=branch_flows(net, v, theta),
        iterations=iterations, max_residual=res)


# --- operating-limit checks -------------------------------------------------

@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    value: float
    lower: float
    upper: float
    violated: bool

    @property
    def slack(self) -> float:
        """Distance to the nearest bound; negative when violated."""
        return min(self.value - self.lower, self.upper - self.value)


@dataclass(frozen=True)
class ConstraintReport:
    checks: tuple[ConstraintCheck, ...]

    @property
    def violations(self) -> tuple[ConstraintCheck, ...]:
        return tuple(c for c in self.checks if c.violated)

    @property
    def ok(self) -> bool:
        return not any(c.violated for c in self.checks)


def check_limits(net: Network, sol: PowerFlowSolution,
                 tol: float = 1e-6) -> ConstraintReport:
    """Evaluate every operating constraint against the solved state.

    Covers the slack apparent/active/reactive bounds, PQ-bus voltage bands,
    and per-branch apparent-flow limits. A constraint is flagged violated
    when it exceeds its bound by more than ``tol``.
    """
    inf = float("inf")
    checks: list[ConstraintCheck] = []

    def add(name, value, lower, upper):
        checks.append(ConstraintCheck(
            name=name, value=value, lower=lower, upper=upper,
            violated=(value < lower - tol or value > upper + tol)))

    s_slack = float(np.hypot(sol.p_s, sol.q_s))
    add("slack_apparent_mva", s_slack, -inf, net.s_s_max)
    add("slack_active_mw", sol.p_s, 0.0, net.s_s_max)
    add("slack_reactive_mvar", sol.q_s, 0.0, net.s_s_max)
    for i, bus in enumerate(net.buses):
        if bus.kind == "pq":
            add(f"voltage_bus_{bus.id}", float(sol.v[i]), bus.v_min, bus.v_max)
    for k, br in enumerate(net.branches):
        add(f"flow_{br.from_bus}_{br.to_bus}", float(sol.flows[k]),
            -inf, br.s_l_max)
    return ConstraintReport(checks=tuple(checks))
