"""Deterministic jump equation: flow between jumps, jump updates, and the
first/second-order derivatives of the terminal state with respect to jump
times, jump amplitudes, and the starting point.

Between jumps the state follows the drift flow

    Phi_u(t, x) = x + int_u^t g(r, Phi_u(r, x)) dr,

whose x-derivative is e_{u,t}(x) = exp(int_u^t g_x(r, Phi) dr).  At a jump the
state updates by s -> s + c(u, a, s).  Moving a jump time u_j perturbs the
terminal state at rate

    q(t, a, x) = (c_t + g * c_x)(t, a, x) + g(t, x) - g(t, x + c(t, a, x))

propagated by e-factors and (1 + c_x) jump multipliers; amplitude and
starting-point derivatives follow analogous forward recursions.  Second-order
terms additionally involve the segment curvature integral

    I_{u,t}(x) = int_u^t g_xx(r, Phi_u(r, x)) e_{u,r}(x) dr.

All recursions consume only per-segment quantities (e, I, endpoint states), so
closed-form models evaluate exactly and custom models reuse one adaptive ODE
solve per segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .noise_model import JumpPath, DomainError, ParameterError

__all__ = [
    "NumericsError",
    "ModelSpec",
    "vasicek_model",
    "geometric_model",
    "custom_model",
    "flow",
    "flow_sensitivity",
    "flow_curvature",
    "q_factor",
    "PathSolution",
    "solve_path",
    "PathDerivatives",
    "derivative_table",
    "TimeDerivatives",
    "time_derivatives",
    "AmplitudeDerivatives",
    "amplitude_derivatives",
    "InitialSensitivity",
    "initial_sensitivity",
    "NondegeneracyReport",
    "check_nondegeneracy",
    "spot_check_growth",
]


class NumericsError(RuntimeError):
    """ODE integration failed to converge."""


def _zero2(t: float, x: float) -> float:
    return 0.0


def _zero3(t: float, a: float, x: float) -> float:
    return 0.0


@dataclass(frozen=True)
class ModelSpec:
    """Jump coefficient c(t, a, x), drift g(t, x), and their partials.

    Partials default to zero; supply every one that is not identically zero.
    Tagged models ("vasicek", "geometric") carry exact closed forms for the
    flow, its sensitivity e, and the curvature integral, so every derivative
    recursion below is exact arithmetic for them.
    """

    tag: str
    c: Callable[[float, float, float], float]
    g: Callable[[float, float], float]
    c_t: Callable = _zero3
    c_a: Callable = _zero3
    c_x: Callable = _zero3
    c_tt: Callable = _zero3
    c_ta: Callable = _zero3
    c_tx: Callable = _zero3
    c_aa: Callable = _zero3
    c_ax: Callable = _zero3
    c_xx: Callable = _zero3
    g_t: Callable = _zero2
    g_x: Callable = _zero2
    g_xx: Callable = _zero2
    flow_closed: Optional[Callable[[float, float, float], float]] = None
    flow_sens_closed: Optional[Callable[[float, float, float], float]] = None
    flow_curv_closed: Optional[Callable[[float, float, float], float]] = None
    params: Optional[dict] = None
    rtol: float = 1e-12
    atol: float = 1e-14


def vasicek_model(r: float, level: float, sigma: float) -> ModelSpec:
    """Mean-reverting drift g = -r(x - level) with additive jumps c = sigma*a."""
    return ModelSpec(
        tag="vasicek",
        c=lambda t, a, x: sigma * a,
        c_a=lambda t, a, x: sigma,
        g=lambda t, x: -r * (x - level),
        g_x=lambda t, x: -r,
        flow_closed=lambda u, t, x: level + (x - level) * math.exp(-r * (t - u)),
        flow_sens_closed=lambda u, t, x: math.exp(-r * (t - u)),
        flow_curv_closed=lambda u, t, x: 0.0,
        params={"r": r, "level": level, "sigma": sigma},
    )


def geometric_model(r: float, sigma: float) -> ModelSpec:
    """Exponential drift g = r*x with multiplicative jumps c = sigma*a*x."""
    return ModelSpec(
        tag="geometric",
        c=lambda t, a, x: sigma * a * x,
        c_a=lambda t, a, x: sigma * x,
        c_x=lambda t, a, x: sigma * a,
        c_ax=lambda t, a, x: sigma,
        g=lambda t, x: r * x,
        g_x=lambda t, x: r,
        flow_closed=lambda u, t, x: x * math.exp(r * (t - u)),
        flow_sens_closed=lambda u, t, x: math.exp(r * (t - u)),
        flow_curv_closed=lambda u, t, x: 0.0,
        params={"r": r, "sigma": sigma},
    )


def custom_model(c: Callable, g: Callable, **partials) -> ModelSpec:
    """Model from explicit coefficient functions; unspecified partials are zero."""
    return ModelSpec(tag="custom", c=c, g=g, **partials)


# ---------------------------------------------------------------------------
# Flow
# ---------------------------------------------------------------------------


def _segment(model: ModelSpec, u: float, t: float, x: float) -> tuple[float, float, float]:
    """(Phi_u(t,x), e_{u,t}(x), I_{u,t}(x)) for one drift segment."""
    if t < u:
        raise DomainError(f"need u <= t, got u={u}, t={t}")
    if t == u:
        return x, 1.0, 0.0
    if model.flow_closed is not None:
        return (
            model.flow_closed(u, t, x),
            model.flow_sens_closed(u, t, x),
            model.flow_curv_closed(u, t, x),
        )

    def rhs(r, y):
        s, e, i = y
        return (model.g(r, s), model.g_x(r, s) * e, model.g_xx(r, s) * e)

    sol = solve_ivp(rhs, (u, t), (x, 1.0, 0.0), method="DOP853",
                    rtol=model.rtol, atol=model.atol, dense_output=False)
    if not sol.success:
        raise NumericsError(f"flow integration failed on [{u}, {t}] from x={x}: {sol.message}")
    s, e, i = sol.y[:, -1]
    return float(s), float(e), float(i)


def flow(model: ModelSpec, u: float, t: float, x: float) -> float:
    """Phi_u(t, x): drift-only evolution from (u, x) to time t."""
    return _segment(model, u, t, x)[0]


def flow_sensitivity(model: ModelSpec, u: float, t: float, x: float) -> float:
    """e_{u,t}(x) = d Phi_u(t, x) / dx, strictly positive."""
    return _segment(model, u, t, x)[1]


def flow_curvature(model: ModelSpec, u: float, t: float, x: float) -> float:
    """I_{u,t}(x) = int_u^t g_xx(r, Phi) e_{u,r}(x) dr (zero for affine drifts)."""
    return _segment(model, u, t, x)[2]


def q_factor(model: ModelSpec, t: float, a: float, x: float) -> float:
    """Instantaneous rate at which moving a jump time perturbs the state."""
    g_here = model.g(t, x)
    return (
        model.c_t(t, a, x)
        + g_here * model.c_x(t, a, x)
        + g_here
        - model.g(t, x + model.c(t, a, x))
    )


# ---------------------------------------------------------------------------
# Path solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSolution:
    """Piecewise-flow solution of the jump equation up to time ``t``.

    Segment p spans [u_p, u_{p+1}) with u_0 = 0 and u_{n+1} = t; ``e_seg`` and
    ``i_seg`` are the segment sensitivity and curvature factors, stored so the
    derivative recursions reuse exactly the quantities of this solve.
    """

    model: ModelSpec
    x0: float
    t: float
    times: np.ndarray
    amplitudes: np.ndarray
    s_left: np.ndarray  # s_{u_j-}
    s_right: np.ndarray  # s_{u_j}
    e_seg: np.ndarray  # (n+1,)
    i_seg: np.ndarray  # (n+1,)
    terminal: float
    grid: Optional[np.ndarray] = None
    grid_values: Optional[np.ndarray] = None

    @property
    def count(self) -> int:
        return len(self.times)

    def initial_slope(self) -> float:
        """d s_t / d x0 via the forward product recursion."""
        out = 1.0
        for j in range(self.count):
            out *= self.e_seg[j]
            out *= 1.0 + self.model.c_x(self.times[j], self.amplitudes[j], self.s_left[j])
        return out * self.e_seg[self.count]


def solve_path(
    model: ModelSpec,
    x0: float,
    path: JumpPath,
    t: Optional[float] = None,
    grid: Optional[Sequence[float]] = None,
) -> PathSolution:
    """Solve the jump equation: flow between jumps, state update at each jump."""
    if t is None:
        t = path.horizon
    if t < 0 or t > path.horizon:
        raise DomainError(f"t={t} outside [0, {path.horizon}]")
    m = int(np.searchsorted(path.times, t, side="right"))
    times = path.times[:m]
    amps = path.amplitudes[:m]

    s_left = np.empty(m)
    s_right = np.empty(m)
    e_seg = np.empty(m + 1)
    i_seg = np.empty(m + 1)
    x = x0
    prev = 0.0
    for j in range(m):
        sl, e, i = _segment(model, prev, times[j], x)
        s_left[j] = sl
        e_seg[j] = e
        i_seg[j] = i
        x = sl + model.c(times[j], amps[j], sl)
        s_right[j] = x
        prev = times[j]
    terminal, e_seg[m], i_seg[m] = _segment(model, prev, t, x)

    grid_values = None
    garr = None
    if grid is not None:
        garr = np.asarray(grid, dtype=float)
        grid_values = np.empty(len(garr))
        for k, tk in enumerate(garr):
            if tk < 0 or tk > t:
                raise DomainError(f"grid point {tk} outside [0, {t}]")
            p = int(np.searchsorted(times, tk, side="right"))
            left_t = 0.0 if p == 0 else times[p - 1]
            left_x = x0 if p == 0 else s_right[p - 1]
            grid_values[k] = flow(model, left_t, tk, left_x)

    return PathSolution(
        model=model, x0=x0, t=t, times=times, amplitudes=amps,
        s_left=s_left, s_right=s_right, e_seg=e_seg, i_seg=i_seg,
        terminal=terminal, grid=garr, grid_values=grid_values,
    )


# ---------------------------------------------------------------------------
# Derivative table
# ---------------------------------------------------------------------------


class PathDerivatives:
    """All noise derivatives of the terminal state for one solved path.

    First derivatives with respect to each jump time and amplitude, the full
    second-derivative blocks (time-time, time-amplitude, amplitude-amplitude),
    the starting-point sensitivity, and its noise partials.  Everything is
    computed in one forward pass over the stored segment quantities.
    """

    def __init__(self, sol: PathSolution):
        self.sol = sol
        model = sol.model
        n = sol.count
        self.n = n
        u = sol.times
        a = sol.amplitudes
        sL = sol.s_left
        sR = sol.s_right
        E = sol.e_seg
        I = sol.i_seg

        # per-jump model evaluations
        cx = np.array([model.c_x(u[j], a[j], sL[j]) for j in range(n)])
        ca = np.array([model.c_a(u[j], a[j], sL[j]) for j in range(n)])
        ct = np.array([model.c_t(u[j], a[j], sL[j]) for j in range(n)])
        caa = np.array([model.c_aa(u[j], a[j], sL[j]) for j in range(n)])
        cax = np.array([model.c_ax(u[j], a[j], sL[j]) for j in range(n)])
        ctx = np.array([model.c_tx(u[j], a[j], sL[j]) for j in range(n)])
        ctt = np.array([model.c_tt(u[j], a[j], sL[j]) for j in range(n)])
        cta = np.array([model.c_ta(u[j], a[j], sL[j]) for j in range(n)])
        cxx = np.array([model.c_xx(u[j], a[j], sL[j]) for j in range(n)])
        gL = np.array([model.g(u[j], sL[j]) for j in range(n)])
        gR = np.array([model.g(u[j], sR[j]) for j in range(n)])
        gxL = np.array([model.g_x(u[j], sL[j]) for j in range(n)])
        gxR = np.array([model.g_x(u[j], sR[j]) for j in range(n)])
        gtL = np.array([model.g_t(u[j], sL[j]) for j in range(n)])
        gtR = np.array([model.g_t(u[j], sR[j]) for j in range(n)])

        q = ct + gL * cx + gL - gR
        # T(f) = f_t + g f_x along the pre-jump state
        q_t = ctt + gtL * cx + gL * ctx + gtL - gtR - gxR * ct
        q_x = ctx + gxL * cx + gL * cxx + gxL - gxR * (1.0 + cx)
        Tq = q_t + gL * q_x
        q_a = cta + gL * cax - gxR * ca
        Tcx = ctx + gL * cxx
        h = ct + (1.0 + cx) * gL  # d s_{u_j} / d u_j, one-sided from the right
        h_t = ctt + gtL * (1.0 + cx) + gL * ctx
        h_x = ctx + gxL * (1.0 + cx) + gL * cxx
        Th = h_t + gL * h_x
        Tg = gtL + gL * gxL

        self.cx, self.ca, self.caa, self.cax, self.cxx = cx, ca, caa, cax, cxx
        self.q, self.Tq, self.q_a, self.Tcx = q, Tq, q_a, Tcx
        self.h, self.Th, self.Tg = h, Th, Tg
        self.gL, self.gxL, self.gxR = gL, gxL, gxR
        self.E, self.I = E, I

        one_cx = 1.0 + cx

        # Segment convention (matches solve_path): E[i], I[i] cover the drift
        # segment ENDING at jump i, i.e. [u_{i-1}, u_i] with u_{-1} = 0, and
        # E[n], I[n] cover the final segment [u_{n-1}, t].

        # First-derivative tables: value just before (L) and just after (R)
        # each jump u_i, plus the terminal value.  Row j is noise j.
        duL = np.zeros((n, n))
        duR = np.zeros((n, n))
        daL = np.zeros((n, n))
        daR = np.zeros((n, n))
        du_T = np.zeros(n)
        da_T = np.zeros(n)
        for j in range(n):
            # time noise j: propagation past u_j starts in the q-form
            if j == n - 1:
                du_T[j] = q[j] * E[n]
            else:
                duL[j, j + 1] = q[j] * E[j + 1]
                duR[j, j + 1] = one_cx[j + 1] * duL[j, j + 1]
                for i in range(j + 2, n):
                    duL[j, i] = E[i] * duR[j, i - 1]
                    duR[j, i] = one_cx[i] * duL[j, i]
                du_T[j] = E[n] * duR[j, n - 1]
            # amplitude noise j
            daR[j, j] = ca[j]
            for i in range(j + 1, n):
                daL[j, i] = E[i] * daR[j, i - 1]
                daR[j, i] = one_cx[i] * daL[j, i]
            da_T[j] = E[n] * daR[j, n - 1]

        # starting-point sensitivity Y = d s / d x0
        yL = np.zeros(n)
        yR = np.zeros(n)
        for i in range(n):
            yL[i] = E[i] * (1.0 if i == 0 else yR[i - 1])
            yR[i] = one_cx[i] * yL[i]
        y_T = E[n] * (yR[n - 1] if n else 1.0)

        self.duL, self.duR, self.daL, self.daR = duL, duR, daL, daR
        self.du_terminal, self.da_terminal = du_T, da_T
        self.yL, self.yR, self.y_terminal = yL, yR, y_T

        # second-order blocks
        self.hess_tt = np.zeros((n, n))
        self.hess_aa = np.zeros((n, n))
        self.hess_ta = np.zeros((n, n))  # [j, k] = d^2 s / (d u_j d a_k)
        self.d2u_terminal = np.zeros(n)
        self.d2a_terminal = np.zeros(n)
        self.dy_dtime = np.zeros(n)
        self.dy_damp = np.zeros(n)
        self._fill_second_order()

    # -- second-order machinery ---------------------------------------------

    def _rho_end(self, k: int) -> float:
        """rho_k at the end of the segment following jump k: the derivative of
        that segment's e-factor with respect to the jump time starting it."""
        return self.E[k + 1] * (-self.gxR[k] + self.q[k] * self.I[k + 1])

    def _propagate(self, x_val: float, m: int, thL, thR, phL, phR) -> float:
        """Carry a second-order quantity from the end of the segment following
        jump m down to the terminal time.

        ``x_val`` is the left-limit at u_{m+1} (already terminal if m == n-1).
        ``th*`` tables hold the first derivative being differentiated; ``ph*``
        the differentiating noise's first derivative.  Each later jump i
        contributes the curvature kick c_xx * phL[i] * thL[i] and each later
        segment the e-derivative term E * phR * I * thR.
        """
        n = self.n
        one_cx = 1.0 + self.cx
        for i in range(m + 1, n):
            x_val = one_cx[i] * x_val + self.cxx[i] * phL[i] * thL[i]
            x_val = self.E[i + 1] * x_val + self.E[i + 1] * phR[i] * self.I[i + 1] * thR[i]
        return x_val

    def _fill_second_order(self):
        n = self.n
        E, I = self.E, self.I
        one_cx = 1.0 + self.cx
        duL, duR, daL, daR = self.duL, self.duR, self.daL, self.daR
        yL, yR = self.yL, self.yR

        # time-time diagonal (terminal second derivatives in the jump times)
        for j in range(n):
            init = self.Tq[j] * E[j + 1] + self.q[j] * self._rho_end(j)
            self.hess_tt[j, j] = self._propagate(init, j, duL[j], duR[j], duL[j], duR[j])
            self.d2u_terminal[j] = self.hess_tt[j, j]

        # time-time cross (j < k): differentiate the u_j propagation by u_k
        for j in range(n):
            for k in range(j + 1, n):
                nr = (self.Tcx[k] + one_cx[k] * self.gxL[k]) * duL[j, k]
                init = self._rho_end(k) * duR[j, k] + E[k + 1] * nr
                val = self._propagate(init, k, duL[j], duR[j], duL[k], duR[k])
                self.hess_tt[j, k] = val
                self.hess_tt[k, j] = val

        # amplitude-amplitude diagonal
        for j in range(n):
            init = E[j + 1] * (self.caa[j] + self.ca[j] ** 2 * I[j + 1])
            self.hess_aa[j, j] = self._propagate(init, j, daL[j], daR[j], daL[j], daR[j])
            self.d2a_terminal[j] = self.hess_aa[j, j]

        # amplitude-amplitude cross (j < k): differentiate d/da_j by a_k
        for j in range(n):
            for k in range(j + 1, n):
                init = E[k + 1] * (self.cax[k] * daL[j, k] + self.ca[k] * I[k + 1] * daR[j, k])
                val = self._propagate(init, k, daL[j], daR[j], daL[k], daR[k])
                self.hess_aa[j, k] = val
                self.hess_aa[k, j] = val

        # time-amplitude block
        for j in range(n):
            for k in range(n):
                if j == k:
                    init = self.q_a[j] * E[j + 1] + self.q[j] * E[j + 1] * self.ca[j] * I[j + 1]
                    val = self._propagate(init, j, duL[j], duR[j], daL[j], daR[j])
                elif j < k:
                    # amplitude a_k acts after the time noise u_j
                    init = E[k + 1] * (self.cax[k] * duL[j, k] + self.ca[k] * I[k + 1] * duR[j, k])
                    val = self._propagate(init, k, duL[j], duR[j], daL[k], daR[k])
                else:
                    # time u_j acts after the amplitude a_k
                    nr = (self.Tcx[j] + one_cx[j] * self.gxL[j]) * daL[k, j]
                    init = self._rho_end(j) * daR[k, j] + E[j + 1] * nr
                    val = self._propagate(init, j, daL[k], daR[k], duL[j], duR[j])
                self.hess_ta[j, k] = val

        # noise partials of the starting-point sensitivity
        for k in range(n):
            init = E[k + 1] * (self.cax[k] * yL[k] + self.ca[k] * I[k + 1] * yR[k])
            self.dy_damp[k] = self._propagate(init, k, yL, yR, daL[k], daR[k])
            nr = (self.Tcx[k] + one_cx[k] * self.gxL[k]) * yL[k]
            init = self._rho_end(k) * yR[k] + E[k + 1] * nr
            self.dy_dtime[k] = self._propagate(init, k, yL, yR, duL[k], duR[k])


def derivative_table(model: ModelSpec, sol: PathSolution) -> PathDerivatives:
    """All first/second noise derivatives of the terminal state (one pass)."""
    if sol.model is not model:
        raise ParameterError("solution was produced by a different model")
    return PathDerivatives(sol)


@dataclass(frozen=True)
class TimeDerivatives:
    """d s / d u_j data: one-sided values at the jump itself, post-jump values
    at each later jump, and the terminal first/second derivatives."""

    first: float
    second: float
    before_jump: float  # d s_{u_j-} / d u_j = g(u_j, s_{u_j-})
    after_jump: float  # d s_{u_j} / d u_j
    at_jumps: np.ndarray  # post-jump values d s_{u_i} / d u_j, i > j
    second_before_jump: float
    second_after_jump: float


def time_derivatives(model: ModelSpec, sol: PathSolution, j: int) -> TimeDerivatives:
    """Terminal d s/d u_j and d^2 s/d u_j^2 plus intermediate jump values.

    The derivative is genuinely discontinuous at t = u_j; both one-sided
    values are exposed and nothing is evaluated "at" the discontinuity.
    """
    tab = derivative_table(model, sol)
    if not 0 <= j < tab.n:
        raise DomainError(f"jump index {j} out of range (n={tab.n})")
    at_jumps = tab.duR[j, j + 1:] if j + 1 <= tab.n - 1 else np.empty(0)
    return TimeDerivatives(
        first=tab.du_terminal[j],
        second=tab.d2u_terminal[j],
        before_jump=tab.gL[j],
        after_jump=tab.h[j],
        at_jumps=at_jumps,
        second_before_jump=tab.Tg[j],
        second_after_jump=tab.Th[j],
    )


@dataclass(frozen=True)
class AmplitudeDerivatives:
    first: float
    second: float
    at_jumps: np.ndarray  # post-jump values d s_{u_i} / d a_j, i >= j


def amplitude_derivatives(model: ModelSpec, sol: PathSolution, j: int) -> AmplitudeDerivatives:
    """Terminal d s/d a_j and d^2 s/d a_j^2 via the forward linear recursion."""
    tab = derivative_table(model, sol)
    if not 0 <= j < tab.n:
        raise DomainError(f"jump index {j} out of range (n={tab.n})")
    return AmplitudeDerivatives(
        first=tab.da_terminal[j],
        second=tab.d2a_terminal[j],
        at_jumps=tab.daR[j, j:],
    )


@dataclass(frozen=True)
class InitialSensitivity:
    value: float  # d s_t / d x0
    by_amplitude: np.ndarray  # d/da_j (d s_t / d x0)
    by_time: np.ndarray  # d/du_j (d s_t / d x0)


def initial_sensitivity(model: ModelSpec, sol: PathSolution) -> InitialSensitivity:
    """Starting-point sensitivity of the terminal state and its noise partials."""
    tab = derivative_table(model, sol)
    return InitialSensitivity(
        value=tab.y_terminal,
        by_amplitude=tab.dy_damp.copy(),
        by_time=tab.dy_dtime.copy(),
    )


# ---------------------------------------------------------------------------
# Nondegeneracy / growth reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NondegeneracyReport:
    """Grid infima of the quantities controlling each weight family.

    Amplitude IBP needs |c_a| and |1 + c_x| bounded below; jump-time IBP needs
    |q| and |1 + c_x|; the mixed calculus needs all three.
    """

    inf_q: float
    inf_one_plus_cx: float
    inf_ca: float
    eta: float
    amplitude_ok: bool
    jump_time_ok: bool
    mixed_ok: bool
    argmin_q: tuple[float, float, float]
    argmin_one_plus_cx: tuple[float, float, float]
    argmin_ca: tuple[float, float, float]


def check_nondegeneracy(
    model: ModelSpec,
    times: Sequence[float],
    amplitudes: Sequence[float],
    states: Sequence[float],
    eta: float = 1e-8,
) -> NondegeneracyReport:
    """Scan |q|, |1 + c_x| and |c_a| over the (t, a, x) grid; degeneracy is a
    report, never an exception."""
    inf_q = inf_cx = inf_ca = math.inf
    arg_q = arg_cx = arg_ca = (math.nan, math.nan, math.nan)
    for t in times:
        for a in amplitudes:
            for x in states:
                vq = abs(q_factor(model, t, a, x))
                vcx = abs(1.0 + model.c_x(t, a, x))
                vca = abs(model.c_a(t, a, x))
                if vq < inf_q:
                    inf_q, arg_q = vq, (t, a, x)
                if vcx < inf_cx:
                    inf_cx, arg_cx = vcx, (t, a, x)
                if vca < inf_ca:
                    inf_ca, arg_ca = vca, (t, a, x)
    return NondegeneracyReport(
        inf_q=inf_q,
        inf_one_plus_cx=inf_cx,
        inf_ca=inf_ca,
        eta=eta,
        amplitude_ok=(inf_ca >= eta and inf_cx >= eta),
        jump_time_ok=(inf_q >= eta and inf_cx >= eta),
        mixed_ok=(inf_q >= eta and inf_cx >= eta and inf_ca >= eta),
        argmin_q=arg_q,
        argmin_one_plus_cx=arg_cx,
        argmin_ca=arg_ca,
    )


@dataclass(frozen=True)
class GrowthReport:
    linear_growth_constant: float  # smallest K with |c| + |g| <= K(1+|x|) on the grid
    partial_bound: float  # max of sampled first/second partials
    ok: bool


def spot_check_growth(
    model: ModelSpec,
    times: Sequence[float],
    amplitudes: Sequence[float],
    states: Sequence[float],
    max_constant: float = 1e6,
) -> GrowthReport:
    """Sampled check of the linear-growth and bounded-derivative hypothesis."""
    k_best = 0.0
    p_best = 0.0
    for t in times:
        for a in amplitudes:
            for x in states:
                k_best = max(
                    k_best,
                    (abs(model.c(t, a, x)) + abs(model.g(t, x))) / (1.0 + abs(x)),
                )
                for f in (model.c_t, model.c_a, model.c_x, model.c_tt, model.c_ta,
                          model.c_tx, model.c_aa, model.c_ax, model.c_xx):
                    p_best = max(p_best, abs(f(t, a, x)))
                for f in (model.g_t, model.g_x, model.g_xx):
                    p_best = max(p_best, abs(f(t, x)))
    return GrowthReport(
        linear_growth_constant=k_best,
        partial_bound=p_best,
        ok=(k_best <= max_constant and p_best <= max_constant),
    )
