"""Single-scenario OPF: choose wind-curtailment factors maximizing revenue.

The objective is wind revenue minus the costs of grid losses and of active
and reactive energy imported at the slack bus, subject to the AC power-flow
equations, slack/voltage/feeder limits, and box bounds on the curtailment
factors. With only a handful of decision variables (one per wind station),
the solver is a multi-start projected local search with a pattern-search
polish, certified against a brute-force grid oracle.

The receding-horizon controller solves tens of thousands of these problems
per simulated day, so the evaluator batches candidate points through a
vectorized Newton power flow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .network import Network, build_admittance
from .powerflow import (ConstraintReport, InjectionSpec, PowerFlowSolution,
                        _branch_arrays, check_limits, solve_power_flow)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_FAILURE = "solver_failure"


@dataclass(frozen=True)
class HorizonInput:
    """Forecast data and prices for one prediction horizon.

    ``demand_p`` / ``demand_q`` map demand-bus id to MW / Mvar;
    ``wind_available`` maps station bus id to available MW; prices are per
    MW / Mvar per horizon.
    """
    demand_p: Mapping[int, float]
    demand_q: Mapping[int, float]
    wind_available: Mapping[int, float]
    price_p: float
    price_q: float

    def validated(self, net: Network) -> "HorizonInput":
        for bus, val in {**self.demand_p, **self.demand_q}.items():
            net.index_of(int(bus))
            if val < 0:
                raise ValueError(f"negative demand at bus {bus}")
        rated = {s.bus: s.rated_power for s in net.stations}
        for bus, val in self.wind_available.items():
            if int(bus) not in rated:
                raise ValueError(f"no wind station at bus {bus}")
            if not (0 <= val <= rated[int(bus)] + 1e-9):
                raise ValueError(
                    f"wind at bus {bus} outside [0, rated]: {val}")
        if self.price_p < 0 or self.price_q < 0:
            raise ValueError("prices must be non-negative")
        return self

    def with_wind(self, wind_by_station: Mapping[int, float]) -> "HorizonInput":
        return replace(self, wind_available=dict(wind_by_station))


@dataclass(frozen=True)
class OPFSolution:
    beta: tuple[float, ...]  # per station, in net.stations order
    p_s: float
    q_s: float
    p_loss: float
    f: float
    f1: float
    f2: float
    f3: float
    f4: float
    status: str
    power_flow: PowerFlowSolution | None = None
    report: ConstraintReport | None = None
    evals: int = 0
    message: str = ""


@dataclass(frozen=True)
class OPFOptions:
    tol_obj: float = 1e-9      # minimum accepted line-search improvement
    tol_cons: float = 1e-6     # constraint-violation tolerance
    max_evals: int = 20000
    coarse_grid: int = 7       # grid points per station for seeding
    pg_iters: int = 30         # projected-gradient iterations per start
    polish_step: float = 0.05  # initial pattern-search step
    polish_step_min: float = 1e-6
    pf_tol: float = 1e-8
    pf_max_iter: int = 30


# tuned-down options for the receding-horizon loop; same algorithm, coarser
# polish resolution and no gradient phase
FAST_OPTS = OPFOptions(tol_obj=1e-7, coarse_grid=2, pg_iters=0,
                       polish_step=0.25, polish_step_min=1e-2,
                       max_evals=4000)


def _newton_batch(y: np.ndarray, p_pu: np.ndarray, q_pu: np.ndarray,
                  v: np.ndarray, th: np.ndarray, tol: float, max_iter: int):
    """Vectorized polar Newton over K independent injection sets.

    ``p_pu``/``q_pu``/``v``/``th`` are (K, n); bus 0 is the slack. Mutates
    v and th in place; returns a boolean convergence mask of shape (K,).
    """
    k_tot, n = v.shape
    npq = n - 1
    diag = np.arange(n)
    ok = np.zeros(k_tot, dtype=bool)
    fail = np.zeros(k_tot, dtype=bool)
    for it in range(max_iter + 1):
        vc = v * np.exp(1j * th)
        cur = vc @ y.T
        s = vc * np.conj(cur)
        dp = p_pu[:, 1:] - s.real[:, 1:]
        dq = q_pu[:, 1:] - s.imag[:, 1:]
        res = np.maximum(np.abs(dp).max(axis=1), np.abs(dq).max(axis=1)) \
            if npq else np.zeros(k_tot)
        fail |= ~np.isfinite(res)
        ok = ~fail & (res <= tol)
        act = ~(ok | fail)
        if not act.any() or it == max_iter:
            break
        idx = np.nonzero(act)[0]
        vca, cura, va = vc[idx], cur[idx], v[idx]
        m = -(y[None, :, :] * vca[:, None, :])
        m[:, diag, diag] += cura
        ds_dth = 1j * vca[:, :, None] * np.conj(m)
        vn = vca / va
        ds_dvm = vca[:, :, None] * np.conj(y[None, :, :] * vn[:, None, :])
        ds_dvm[:, diag, diag] += np.conj(cura) * vn
        jac = np.empty((idx.size, 2 * npq, 2 * npq))
        jac[:, :npq, :npq] = ds_dth.real[:, 1:, 1:]
        jac[:, :npq, npq:] = ds_dvm.real[:, 1:, 1:]
        jac[:, npq:, :npq] = ds_dth.imag[:, 1:, 1:]
        jac[:, npq:, npq:] = ds_dvm.imag[:, 1:, 1:]
        rhs = np.concatenate([dp[idx], dq[idx]], axis=1)
        try:
            step = np.linalg.solve(jac, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(rhs)
            for r in range(idx.size):
                try:
                    step[r] = np.linalg.solve(jac[r], rhs[r])
                except np.linalg.LinAlgError:
                    fail[idx[r]] = True
        th[idx, 1:] += step[:, :npq]
        v[idx, 1:] += step[:, npq:]
        bad = (v[idx, 1:] <= 0).any(axis=1) \
            | ~np.isfinite(v[idx, 1:]).all(axis=1)
        fail[idx[bad]] = True
    return ok


class _Eval:
    """Result of one objective evaluation (slots keep it light)."""
    __slots__ = ("score", "f", "f1", "f2", "f3", "f4", "p_s", "q_s",
                 "p_loss", "feasible", "converged")

    def __init__(self, score, f, f1, f2, f3, f4, p_s, q_s, p_loss,
                 feasible, converged):
        self.score = score
        self.f, self.f1, self.f2, self.f3, self.f4 = f, f1, f2, f3, f4
        self.p_s, self.q_s, self.p_loss = p_s, q_s, p_loss
        self.feasible = feasible
        self.converged = converged


_FAILED_EVAL = _Eval(-math.inf, *([math.nan] * 8), False, False)


class _Evaluator:
    """Caches network arrays and evaluates the objective at beta points.

    All candidate points of a search phase go through one batched Newton
    solve. Batches warm-start from the last best converged state; the
    evaluation order is deterministic, so results do not depend on worker
    scheduling.
    """

    def __init__(self, net: Network, inp: HorizonInput, opts: OPFOptions):
        self.net = net
        self.inp = inp
        self.opts = opts
        n = net.n_buses
        self.y = build_admittance(net)
        self.base = net.base_mva
        self.p_inj = np.zeros(n)  # MW, demand only
        self.q_inj = np.zeros(n)
        for bus, val in inp.demand_p.items():
            self.p_inj[net.index_of(int(bus))] -= val
        for bus, val in inp.demand_q.items():
            self.q_inj[net.index_of(int(bus))] -= val
        self.st_idx = np.array([net.index_of(s.bus) for s in net.stations],
                               dtype=int)
        self.wind = np.array([inp.wind_available.get(s.bus, 0.0)
                              for s in net.stations])
        self.fidx, self.tidx, self.ys, self.bsh = _branch_arrays(net)
        self.sl_max = np.array([b.s_l_max for b in net.branches])
        self.v_min = np.array([b.v_min for b in net.buses])
        self.v_max = np.array([b.v_max for b in net.buses])
        self.evals = 0
        self._warm = None

    def eval_many(self, xs: Sequence[np.ndarray]) -> list[_Eval]:
        k = len(xs)
        self.evals += k
        net, opts = self.net, self.opts
        n = net.n_buses
        beta = np.asarray(xs, dtype=float).reshape(k, -1)
        p = np.tile(self.p_inj, (k, 1))
        if self.st_idx.size:
            p[:, self.st_idx] += beta * self.wind
        p_pu = p / self.base
        q_pu = np.tile(self.q_inj / self.base, (k, 1))
        if self._warm is None:
            v = np.full((k, n), net.slack_voltage)
            th = np.full((k, n), net.slack_angle)
        else:
            v = np.tile(self._warm[0], (k, 1))
            th = np.tile(self._warm[1], (k, 1))
        ok = _newton_batch(self.y, p_pu, q_pu, v, th,
                           opts.pf_tol, opts.pf_max_iter)

        vc = v * np.exp(1j * th)
        s_slack = vc[:, 0] * np.conj((vc @ self.y.T)[:, 0])
        p_s = s_slack.real * self.base
        q_s = s_slack.imag * self.base
        p_loss = p_s + p[:, 1:].sum(axis=1)
        if self.fidx.size:
            vf, vt = vc[:, self.fidx], vc[:, self.tidx]
            i_f = (vf - vt) * self.ys + vf * self.bsh
            i_t = (vt - vf) * self.ys + vt * self.bsh
            flows = np.maximum(np.abs(vf * np.conj(i_f)),
                               np.abs(vt * np.conj(i_t))) * self.base
            flow_ok = (flows <= self.sl_max + opts.tol_cons).all(axis=1)
        else:
            flow_ok = np.ones(k, dtype=bool)
        tol = opts.tol_cons
        feas = (ok & flow_ok
                & (np.hypot(p_s, q_s) <= net.s_s_max + tol)
                & (p_s >= -tol) & (p_s <= net.s_s_max + tol)
                & (q_s >= -tol) & (q_s <= net.s_s_max + tol)
                & (v[:, 1:] >= self.v_min[1:] - tol).all(axis=1)
                & (v[:, 1:] <= self.v_max[1:] + tol).all(axis=1))

        f1 = self.inp.price_p * (beta * self.wind).sum(axis=1)
        f2 = self.inp.price_p * p_loss
        f3 = self.inp.price_p * p_s
        f4 = self.inp.price_q * q_s
        f = f1 - f2 - f3 - f4

        out = []
        best_k = None
        for i in range(k):
            if not ok[i]:
                out.append(_FAILED_EVAL)
                continue
            e = _Eval(float(f[i]) if feas[i] else -math.inf,
                      float(f[i]), float(f1[i]), float(f2[i]), float(f3[i]),
                      float(f4[i]), float(p_s[i]), float(q_s[i]),
                      float(p_loss[i]), bool(feas[i]), True)
            out.append(e)
            if e.feasible and (best_k is None
                               or e.score > out[best_k].score):
                best_k = i
        if best_k is None:
            for i in range(k):
                if ok[i]:
                    best_k = i
                    break
        if best_k is not None:
            self._warm = (v[best_k].copy(), th[best_k].copy())
        return out

    def __call__(self, x: np.ndarray) -> _Eval:
        return self.eval_many([x])[0]

    def full_solution(self, beta: np.ndarray, status: str,
                      message: str = "") -> OPFSolution:
        """Re-solve at beta through the public path and attach the report."""
        inj = _injections(self.net, self.inp, beta)
        pf = solve_power_flow(self.net, inj, tol=self.opts.pf_tol,
                              max_iter=self.opts.pf_max_iter, y=self.y,
                              start=self._warm)
        report = check_limits(self.net, pf, tol=self.opts.tol_cons)
        f1 = self.inp.price_p * float(np.dot(beta, self.wind))
        f2 = self.inp.price_p * pf.p_loss
        f3 = self.inp.price_p * pf.p_s
        f4 = self.inp.price_q * pf.q_s
        return OPFSolution(
            beta=tuple(float(b) for b in beta),
            p_s=pf.p_s, q_s=pf.q_s, p_loss=pf.p_loss,
            f=f1 - f2 - f3 - f4, f1=f1, f2=f2, f3=f3, f4=f4,
            status=status, power_flow=pf, report=report,
            evals=self.evals, message=message)


def _injections(net: Network, inp: HorizonInput,
                beta: Sequence[float]) -> InjectionSpec:
    p = np.zeros(net.n_buses)
    q = np.zeros(net.n_buses)
    for bus, val in inp.demand_p.items():
        p[net.index_of(int(bus))] -= val
    for bus, val in inp.demand_q.items():
        q[net.index_of(int(bus))] -= val
    for b, st in zip(beta, net.stations):
        p[net.index_of(st.bus)] += b * inp.wind_available.get(st.bus, 0.0)
    return InjectionSpec(p, q)


@dataclass(frozen=True)
class ObjectiveBreakdown:
    f: float
    f1: float
    f2: float
    f3: float
    f4: float
    report: ConstraintReport
    power_flow: PowerFlowSolution


def evaluate_objective(net: Network, inp: HorizonInput,
                       beta: Sequence[float],
                       tol_cons: float = 1e-6) -> ObjectiveBreakdown:
    """Objective decomposition and constraint report at a fixed beta."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < -1e-12) or np.any(beta > 1 + 1e-12):
        raise ValueError("beta must lie in [0, 1] per station")
    pf = solve_power_flow(net, _injections(net, inp, beta))
    wind = np.array([inp.wind_available.get(s.bus, 0.0)
                     for s in net.stations])
    f1 = inp.price_p * float(np.dot(beta, wind))
    f2 = inp.price_p * pf.p_loss
    f3 = inp.price_p * pf.p_s
    f4 = inp.price_q * pf.q_s
    return ObjectiveBreakdown(f=f1 - f2 - f3 - f4, f1=f1, f2=f2, f3=f3, f4=f4,
                              report=check_limits(net, pf, tol=tol_cons),
                              power_flow=pf)


def _failed(beta_len: int, status: str, evals: int,
            message: str) -> OPFSolution:
    nan = float("nan")
    return OPFSolution(beta=(nan,) * beta_len, p_s=nan, q_s=nan, p_loss=nan,
                       f=nan, f1=nan, f2=nan, f3=nan, f4=nan,
                       status=status, evals=evals, message=message)


def _rebalanced(ev: _Evaluator, xn: np.ndarray, p_s_short: float,
                exclude: int | None = None):
    """Retreat the wind injection by ``p_s_short`` MW so the slack balance
    moves back to zero, taking the power from the station with the most
    curtailable output. Returns the corrected point or None."""
    need = p_s_short + 1e-9
    room = ev.wind * xn
    if exclude is not None:
        room = room.copy()
        room[exclude] = -1.0
    k = int(np.argmax(room))
    if room[k] <= 0 or need > room[k]:
        return None
    out = xn.copy()
    out[k] -= need / ev.wind[k]
    return out


def _fd_gradient(ev: _Evaluator, x: np.ndarray, fx: float,
                 h: float = 1e-6) -> np.ndarray:
    """One-sided finite differences, stepping away from the box bound."""
    pts, signs = [], []
    for i in range(x.size):
        if x[i] + h <= 1.0:
            xp = x.copy()
            xp[i] += h
            pts.append(xp)
            signs.append(1.0)
        else:
            xp = x.copy()
            xp[i] -= h
            pts.append(xp)
            signs.append(-1.0)
    res = ev.eval_many(pts)
    g = np.zeros_like(x)
    for i, (e, sg) in enumerate(zip(res, signs)):
        if math.isfinite(e.score):
            g[i] = sg * (e.score - fx) / h
    return g


def _projected_gradient(ev: _Evaluator, x0: np.ndarray, opts: OPFOptions):
    """Gradient ascent with projection onto the unit box; infeasible
    iterates are handled by backtracking the step."""
    x = np.clip(x0, 0.0, 1.0)
    fx = ev(x).score
    if not math.isfinite(fx):
        return x, fx
    for _ in range(opts.pg_iters):
        if ev.evals >= opts.max_evals:
            break
        g = _fd_gradient(ev, x, fx)
        norm = float(np.linalg.norm(g))
        if norm < 1e-12:
            break
        d = g / norm
        alpha = 0.25
        improved = False
        while alpha >= 1e-7:
            xn = np.clip(x + alpha * d, 0.0, 1.0)
            if np.array_equal(xn, x):
                break
            fn = ev(xn).score
            if fn > fx + opts.tol_obj:
                x, fx = xn, fn
                improved = True
                break
            alpha /= 2.0
        if not improved:
            break
    return x, fx


def _moves(n: int, wind: np.ndarray):
    """Polish directions: coordinate steps plus wind-weighted exchange pairs.

    An exchange raises one station and lowers another in proportion to their
    available wind, which holds the total injection (and hence the slack
    balance) roughly constant -- the direction needed to slide along the
    active-power boundary of the feasible set.
    """
    out = [(i, 1.0, None, 0.0) for i in range(n)]
    out += [(i, -1.0, None, 0.0) for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and wind[i] > 0 and wind[j] > 0:
                out.append((i, 1.0, j, -wind[i] / wind[j]))
    return out


def _compass_polish(ev: _Evaluator, x: np.ndarray, fx: float,
                    opts: OPFOptions):
    """Pattern search over coordinate and exchange moves, batch-evaluated.

    Candidates that overshoot the reverse-flow boundary (slack active power
    slightly negative) are pulled back onto it by an exact injection
    retreat; this is what lets the search slide along the binding surface
    instead of stalling against the infeasibility wall.
    """
    moves = _moves(x.size, ev.wind)
    step = opts.polish_step
    while step >= opts.polish_step_min:
        if ev.evals >= opts.max_evals:
            return x, fx, False
        cands = []
        for i, di, j, dj in moves:
            xn = x.copy()
            xn[i] = min(1.0, max(0.0, x[i] + di * step))
            if j is not None:
                xn[j] = min(1.0, max(0.0, x[j] + dj * step))
            if not np.array_equal(xn, x):
                cands.append(xn)
        if not cands:
            step /= 2.0
            continue
        results = ev.eval_many(cands)
        extra = []
        for xc, e in zip(cands, results):
            if not math.isfinite(e.score) and e.converged and e.p_s < 0:
                xr = _rebalanced(ev, xc, -e.p_s)
                if xr is not None:
                    extra.append(xr)
        if extra:
            cands += extra
            results += ev.eval_many(extra)
        best = None
        for xc, e in zip(cands, results):
            if e.score > fx + opts.tol_obj and (best is None
                                                or e.score > best[1]):
                best = (xc, e.score)
        if best is not None:
            x, fx = best
        else:
            step /= 2.0
    return x, fx, True


def _push_to_surface(ev: _Evaluator, x: np.ndarray, fx: float,
                     opts: OPFOptions):
    """Advance the wind injection by the slack active-power surplus so the
    point lands on the reverse-flow boundary, where the objective is
    maximal in the high-wind regime. The surplus goes to the station with
    the most headroom; a couple of iterations absorb the loss feedback."""
    for _ in range(3):
        e = ev(x)
        if not e.feasible or e.p_s <= 10 * opts.tol_cons:
            break
        head = (1.0 - x) * ev.wind
        k = int(np.argmax(head))
        if head[k] <= 0:
            break
        xn = x.copy()
        xn[k] = min(1.0, xn[k] + min(e.p_s, head[k]) / ev.wind[k])
        en = ev(xn)
        if not math.isfinite(en.score) and en.converged and en.p_s < 0:
            xr = _rebalanced(ev, xn, -en.p_s)
            if xr is None:
                break
            xn = xr
            en = ev(xn)
        if en.score <= fx:
            break
        x, fx = xn, en.score
    return x, fx


def _snap_to_bounds(ev: _Evaluator, x: np.ndarray, fx: float,
                    opts: OPFOptions):
    """Deterministic tie-break: a station sitting within 1% of fully
    uncurtailed is pushed onto the bound (rebalancing the slack through the
    other stations) whenever that costs nothing measurable. The objective
    is flat along the binding surface, so the polished point can otherwise
    end arbitrarily close to, but not at, beta = 1. The tie margin absorbs
    the objective credit of a point hugging the constraint tolerance."""
    tie = 1e-5 * max(1.0, abs(fx))
    for i in range(x.size):
        if x[i] == 1.0 or x[i] < 0.99 or ev.wind[i] <= 0:
            continue
        xn = x.copy()
        xn[i] = 1.0
        e = ev(xn)
        if not math.isfinite(e.score) and e.converged and e.p_s < 0:
            xr = _rebalanced(ev, xn, -e.p_s, exclude=i)
            if xr is None:
                continue
            xn = xr
            e = ev(xn)
        if math.isfinite(e.score) and e.score >= fx - tie and xn[i] == 1.0:
            x, fx = xn, max(fx, e.score)
    return x, fx


def solve_opf(net: Network, inp: HorizonInput,
              opts: OPFOptions | None = None) -> OPFSolution:
    """Optimal curtailment factors for one scenario.

    status 'optimal': all constraints hold within tol_cons and the
    objective is certified against oracle_opf in the test suite.
    status 'infeasible': no point of a dense per-station grid admits a
    violation-free converged power flow.
    status 'solver_failure': the evaluation budget ran out before the
    search converged; the best point found so far is attached.
    """
    opts = opts or OPFOptions()
    inp = inp.validated(net)
    ev = _Evaluator(net, inp, opts)
    nst = len(net.stations)

    if nst == 0:
        if ev(np.zeros(0)).feasible:
            return ev.full_solution(np.zeros(0), STATUS_OPTIMAL)
        return _failed(0, STATUS_INFEASIBLE, ev.evals,
                       "demand-only power flow violates limits")

    ones = np.ones(nst)
    # degenerate flat objectives: deterministic beta = (1, ..., 1)
    degenerate = (not np.any(ev.wind > 0)) or (
        inp.price_p == 0 and inp.price_q == 0)
    if degenerate:
        if ev(ones).feasible:
            return ev.full_solution(ones, STATUS_OPTIMAL)
        if not np.any(ev.wind > 0):
            return _failed(nst, STATUS_INFEASIBLE, ev.evals,
                           "infeasible at every beta (zero wind)")

    # coarse seeding grid, batch-evaluated, plus the fully-uncurtailed point
    # pulled back onto the reverse-flow boundary (the usual optimum basin)
    axis = np.linspace(0.0, 1.0, opts.coarse_grid)
    grid = [np.array(c) for c in itertools.product(axis, repeat=nst)]
    results = ev.eval_many(grid)
    best_x, best_f = None, -math.inf
    for xc, e in zip(grid, results):
        if e.score > best_f:
            best_x, best_f = xc, e.score
    e_ones = results[-1]  # grid ends at (1, ..., 1)
    if not math.isfinite(e_ones.score) and e_ones.converged and e_ones.p_s < 0:
        xr = _rebalanced(ev, ones, -e_ones.p_s)
        if xr is not None:
            er = ev(xr)
            if er.score > best_f:
                best_x, best_f = xr, er.score

    if best_x is None or not math.isfinite(best_f):
        # dense certification scan, early exit on the first feasible point
        dense = np.linspace(0.0, 1.0, 101)
        found = None
        for chunk in itertools.zip_longest(
                *[iter(itertools.product(dense, repeat=nst))] * 101):
            pts = [np.array(c) for c in chunk if c is not None]
            for xc, e in zip(pts, ev.eval_many(pts)):
                if math.isfinite(e.score):
                    found = (xc, e.score)
                    break
            if found:
                break
        if found is None:
            return _failed(nst, STATUS_INFEASIBLE, ev.evals,
                           "no feasible point on the 101-per-station grid")
        best_x, best_f = found

    starts = [best_x, ones, np.zeros(nst)]
    seen: set[tuple[float, ...]] = set()
    for s in starts:
        key = tuple(np.round(s, 12))
        if key in seen or ev.evals >= opts.max_evals or opts.pg_iters == 0:
            continue
        seen.add(key)
        x, fx = _projected_gradient(ev, s, opts)
        if fx > best_f:
            best_x, best_f = x, fx

    best_x, best_f, converged = _compass_polish(ev, best_x, best_f, opts)
    best_x, best_f = _push_to_surface(ev, best_x, best_f, opts)
    best_x, best_f = _snap_to_bounds(ev, best_x, best_f, opts)

    if not converged:
        return ev.full_solution(best_x, STATUS_FAILURE,
                                f"evaluation budget exhausted before the "
                                f"polish converged ({ev.evals} evals)")
    return ev.full_solution(best_x, STATUS_OPTIMAL)


def oracle_opf(net: Network, inp: HorizonInput,
               grid_points: int = 21,
               opts: OPFOptions | None = None) -> OPFSolution:
    """Brute-force grid search over beta with five local refinement passes.

    Independent verification path for solve_opf: evaluates the objective on
    a full per-station grid, keeps the best violation-free point, then
    repeatedly shrinks the grid tenfold around the incumbent.
    """
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    opts = opts or OPFOptions()
    inp = inp.validated(net)
    nst = len(net.stations)
    if nst > 3:
        raise ValueError("oracle grid is only tractable for <= 3 stations")
    ev = _Evaluator(net, inp, opts)
    if nst == 0:
        if ev(np.zeros(0)).feasible:
            return ev.full_solution(np.zeros(0), STATUS_OPTIMAL)
        return _failed(0, STATUS_INFEASIBLE, ev.evals,
                       "demand-only power flow violates limits")

    lo = np.zeros(nst)
    hi = np.ones(nst)
    best_x, best_f = None, -math.inf
    for _pass in range(6):  # initial grid + 5 refinements
        axes = [np.linspace(lo[i], hi[i], grid_points) for i in range(nst)]
        pts = [np.array(c) for c in itertools.product(*axes)]
        for xc, e in zip(pts, ev.eval_many(pts)):
            if e.score > best_f:
                best_x, best_f = xc, e.score
        if best_x is None:
            return _failed(nst, STATUS_INFEASIBLE, ev.evals,
                           "every grid point violates constraints "
                           "or fails to converge")
        half = (hi - lo) / 10.0
        lo = np.clip(best_x - half, 0.0, 1.0)
        hi = np.clip(best_x + half, 0.0, 1.0)
    return ev.full_solution(best_x, STATUS_OPTIMAL)
