"""Delta estimators for pure-jump diffusions.

The Delta of E(phi(S_T)) splits over the jump count: a deterministic
no-jump branch plus, on {J_T = n >= 1}, an expectation of phi(S_T) times a
payoff-independent weight H_n built from the derivative calculus.  Closed-form
weight kernels are provided for the two tagged models:

  * mean-reverting model, amplitude noises (unit weight):
        H_n = sum_j Delta_j e^{r T_j} / (sigma sum_j e^{2 r T_j})
  * mean-reverting model, jump-time noises (singular weights, n >= 4), with
    the sign fixed by the generic engine (the classical closed form prints
    both terms with the opposite sign); for n <= 3 the weight falls back to
    integration by parts in the first amplitude only:
        H_n = Delta_1 e^{-r T_1} / sigma
  * multiplicative model, amplitude noises:
        H_n = B/(sigma x A) + 1/x - 2 C /(x A^2),
        A = sum (1+sigma Delta_j)^-2, B = sum Delta_j/(1+sigma Delta_j),
        C = sum (1+sigma Delta_j)^-4.

Every kernel is verified against the generic engine (bundle + ibp_weight)
in the test suite.  A finite-difference baseline with common random numbers
and a payoff localization (smooth part differentiated pathwise, kink window
through the weight) complete the estimator family.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import jump_sde, malliavin_core, noise_model
from .jump_sde import ModelSpec, derivative_table, flow, flow_sensitivity, solve_path
from .malliavin_core import DegeneracyError, FunctionalBundle, NoiseSystem, ibp_weight
from .noise_model import (
    JumpBatch,
    JumpPath,
    ParameterError,
    gaussian_amplitude,
    jump_time_noise,
    sample_jump_batch,
    singular_weight,
    substream,
    unit_weight,
)

__all__ = [
    "PayoffSpec",
    "call_payoff",
    "digital_payoff",
    "custom_payoff",
    "LocalizedPayoff",
    "localize",
    "EstimateReport",
    "KinkWarning",
    "weight_vasicek_aj",
    "weight_vasicek_jt",
    "weight_geometric_aj",
    "weight_mixed",
    "engine_weight",
    "delta_zero_jump_term",
    "delta_malliavin",
    "delta_fd",
    "terminal_state_variance",
]

DEGENERACY_GUARD = 1e-10


class KinkWarning(UserWarning):
    """The deterministic no-jump state sits exactly at a payoff kink."""


# ---------------------------------------------------------------------------
# Payoffs and localization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffSpec:
    """Payoff phi with its derivative where defined.

    ``value`` and ``slope`` accept numpy arrays.  ``loc_width`` is the
    localization half-width delta >= 0 around the strike; ``None`` defers to
    the estimator default (0.2 times the standard deviation of S_T).
    """

    kind: str  # "call" | "digital" | "custom"
    strike: float
    value: Callable[[np.ndarray], np.ndarray]
    slope: Optional[Callable[[np.ndarray], np.ndarray]]
    loc_width: Optional[float] = None


def call_payoff(strike: float, loc_width: Optional[float] = None) -> PayoffSpec:
    k = float(strike)
    return PayoffSpec(
        kind="call",
        strike=k,
        value=lambda x: np.maximum(np.asarray(x, dtype=float) - k, 0.0),
        slope=lambda x: (np.asarray(x, dtype=float) > k).astype(float),
        loc_width=loc_width,
    )


def digital_payoff(strike: float, loc_width: Optional[float] = None) -> PayoffSpec:
    k = float(strike)
    return PayoffSpec(
        kind="digital",
        strike=k,
        value=lambda x: (np.asarray(x, dtype=float) >= k).astype(float),
        slope=None,
        loc_width=loc_width,
    )


def custom_payoff(value: Callable, slope: Callable, strike: float = 0.0) -> PayoffSpec:
    return PayoffSpec(kind="custom", strike=strike, value=value, slope=slope)


@dataclass(frozen=True)
class LocalizedPayoff:
    """phi = reg + loc with reg Lipschitz-differentiable and loc supported on
    the kink window [K - width, K + width]."""

    reg_value: Callable[[np.ndarray], np.ndarray]
    reg_slope: Callable[[np.ndarray], np.ndarray]
    loc_value: Callable[[np.ndarray], np.ndarray]
    width: float


def localize(payoff: PayoffSpec, width: Optional[float] = None) -> LocalizedPayoff:
    """Split the payoff for variance reduction.

    Digital: reg is the linear ramp from 0 to 1 across the window (with zero
    width the whole payoff goes through the weight).  Call: reg replaces the
    kink by its quadratic smoothing on the window.  Custom payoffs pass
    through untouched (they carry their own derivative).
    """
    d = payoff.loc_width if width is None else width
    d = 0.0 if d is None else float(d)
    if d < 0:
        raise ParameterError(f"localization width must be >= 0, got {d}")
    k = payoff.strike

    if payoff.kind == "custom":
        return LocalizedPayoff(payoff.value, payoff.slope, lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0)

    if payoff.kind == "call":
        if d == 0.0:
            return LocalizedPayoff(
                payoff.value, payoff.slope,
                lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0,
            )

        def reg_value(x):
            x = np.asarray(x, dtype=float)
            mid = (x - k + d) ** 2 / (4.0 * d)
            return np.where(x <= k - d, 0.0, np.where(x >= k + d, x - k, mid))

        def reg_slope(x):
            x = np.asarray(x, dtype=float)
            return np.clip((x - k + d) / (2.0 * d), 0.0, 1.0)

        def loc_value(x):
            x = np.asarray(x, dtype=float)
            return payoff.value(x) - reg_value(x)

        return LocalizedPayoff(reg_value, reg_slope, loc_value, d)

    if payoff.kind == "digital":
        if d == 0.0:
            zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
            return LocalizedPayoff(zero, zero, payoff.value, 0.0)

        def reg_value(x):
            x = np.asarray(x, dtype=float)
            return np.clip((x - k + d) / (2.0 * d), 0.0, 1.0)

        def reg_slope(x):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x - k) < d, 1.0 / (2.0 * d), 0.0)

        def loc_value(x):
            x = np.asarray(x, dtype=float)
            return payoff.value(x) - reg_value(x)

        return LocalizedPayoff(reg_value, reg_slope, loc_value, d)

    raise ParameterError(f"unknown payoff kind {payoff.kind!r}")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimateReport:
    """One Delta estimate with its per-path variance accounting."""

    estimate: float
    variance: float  # empirical variance of the per-path summand
    std_error: float
    n_paths: int  # requested path count M
    n_used: int  # paths entering the mean after degeneracy skips
    method: str  # "aj" | "jt" | "mixed" | "fd"
    zero_jump_term: float
    degenerate_paths: int


def _summarize(psi: np.ndarray, method: str, zero_term: float, n_total: int,
               n_degenerate: int) -> EstimateReport:
    """Fixed-order compensated reduction: bit-identical for identical inputs."""
    n_used = len(psi)
    mean = math.fsum(psi) / n_used
    var = math.fsum((psi - mean) ** 2) / (n_used - 1) if n_used > 1 else 0.0
    if n_degenerate > 0.01 * n_total:
        warnings.warn(
            f"{n_degenerate}/{n_total} paths skipped as degenerate; "
            "the estimate may be biased",
            stacklevel=3,
        )
    return EstimateReport(
        estimate=zero_term + mean,
        variance=var,
        std_error=math.sqrt(var / n_used) if n_used else math.nan,
        n_paths=n_total,
        n_used=n_used,
        method=method,
        zero_jump_term=zero_term,
        degenerate_paths=n_degenerate,
    )


# ---------------------------------------------------------------------------
# Closed-form weight kernels (vectorized over blocks of equal jump count)
# ---------------------------------------------------------------------------


def _vasicek_aj_block(times: np.ndarray, amps: np.ndarray, sigma: float, r: float) -> np.ndarray:
    """Amplitude weight: sum Delta_j e^{rT_j} / (sigma sum e^{2rT_j})."""
    ert = np.exp(r * times)
    return np.sum(amps * ert, axis=1) / (sigma * np.sum(ert * ert, axis=1))


def _gaps(times: np.ndarray, horizon: float) -> np.ndarray:
    """(m, n+1) array of gaps delta_1..delta_{n+1} for each row."""
    m, n = times.shape
    bounds = np.empty((m, n + 2))
    bounds[:, 0] = 0.0
    bounds[:, 1:-1] = times
    bounds[:, -1] = horizon
    return np.diff(bounds, axis=1)


def _vasicek_jt_block_printed(times: np.ndarray, amps: np.ndarray, sigma: float,
                              r: float, horizon: float, alpha: float) -> np.ndarray:
    """The classical printed two-term jump-time closed form (n >= 4), as
    published; the engine-consistent weight is its negative."""
    m, n = times.shape
    d = _gaps(times, horizon)  # (m, n+1)
    prod = d[:, :-1] * d[:, 1:]
    w = prod ** alpha
    wp = alpha * prod ** (alpha - 1.0) * (d[:, 1:] - d[:, :-1])
    ert = np.exp(r * times)
    e2 = ert * ert
    a_coef = alpha * prod ** (alpha - 1.0) * amps**2 * e2
    b_coef = amps**2 * e2 * (2.0 * r * w + wp)

    term = b_coef.copy()
    term[:, 1:] += a_coef[:, :-1] * d[:, : n - 1]
    term[:, :-1] -= a_coef[:, 1:] * d[:, 2:]

    sighat = np.sum(w * amps**2 * e2, axis=1)
    s1 = np.sum(amps * ert * (r * w + wp), axis=1)
    s2 = np.sum(w * amps * ert * term, axis=1)
    return s1 / (sigma * r * sighat) - s2 / (sigma * r * sighat**2)


def _vasicek_jt_block(times, amps, sigma, r, horizon, alpha) -> np.ndarray:
    """Engine-sign jump-time weight (n >= 4)."""
    return -_vasicek_jt_block_printed(times, amps, sigma, r, horizon, alpha)


def _vasicek_jt_fallback_block(times: np.ndarray, amps: np.ndarray, sigma: float,
                               r: float) -> np.ndarray:
    """n <= 3: integration by parts in the first amplitude only."""
    return amps[:, 0] * np.exp(-r * times[:, 0]) / sigma


def _vasicek_mixed_block(times: np.ndarray, amps: np.ndarray, sigma: float, r: float,
                         horizon: float, alpha: float) -> np.ndarray:
    """Weight over the 2n-noise system (times with singular weights,
    amplitudes with unit weight) for the mean-reverting model."""
    m, n = times.shape
    d = _gaps(times, horizon)
    prod = d[:, :-1] * d[:, 1:]
    w = prod ** alpha
    wp = alpha * prod ** (alpha - 1.0) * (d[:, 1:] - d[:, :-1])
    ef = np.exp(-r * (horizon - times))  # e^{-r(T - T_i)}
    dt = sigma * r * amps * ef  # time-noise gradient
    da = sigma * ef  # amplitude-noise gradient

    sig = np.sum(w * dt * dt + da * da, axis=1)
    lf = np.sum(-(wp + r * w) * dt + amps * da, axis=1)

    nb = np.zeros_like(dt)
    nb[:, 1:] += alpha * d[:, 1:n] ** (alpha - 1.0) * d[:, : n - 1] ** alpha * dt[:, :-1] ** 2
    nb[:, :-1] -= alpha * d[:, 1:n] ** (alpha - 1.0) * d[:, 2:] ** alpha * dt[:, 1:] ** 2
    dsig_t = wp * dt * dt + 2.0 * w * dt * (r * dt) + 2.0 * da * (sigma * r * ef) + nb
    dsig_a = 2.0 * w * dt * (sigma * r * ef)

    drift = np.sum(w * dt * dsig_t + da * dsig_a, axis=1)
    return math.exp(-r * horizon) * (lf / sig + drift / sig**2)


def _geometric_aj_block(amps: np.ndarray, sigma: float, x: float) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude weight for the multiplicative model; returns (H, degenerate)."""
    f = 1.0 + sigma * amps
    degenerate = np.any(np.abs(f) < DEGENERACY_GUARD, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv2 = 1.0 / (f * f)
        a = np.sum(inv2, axis=1)
        b = np.sum(amps / f, axis=1)
        c = np.sum(inv2 * inv2, axis=1)
        h = b / (sigma * x * a) + 1.0 / x - 2.0 * c / (x * a * a)
    return h, degenerate


# ---------------------------------------------------------------------------
# Per-path weight operations
# ---------------------------------------------------------------------------


def _require_jumps(path: JumpPath):
    if path.count == 0:
        raise ParameterError("weight is undefined on a path with no jumps")


def weight_vasicek_aj(path: JumpPath, sigma: float, r: float, horizon: float) -> float:
    """Closed-form amplitude weight for the mean-reverting model."""
    _require_jumps(path)
    return float(_vasicek_aj_block(path.times[None, :], path.amplitudes[None, :], sigma, r)[0])


def weight_vasicek_jt(path: JumpPath, sigma: float, r: float, horizon: float,
                      alpha: float = 0.25) -> float:
    """Jump-time weight with the engine-resolved sign; single-amplitude
    fallback Delta_1 e^{-r T_1} / sigma for paths with fewer than 4 jumps."""
    _require_jumps(path)
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha must be in (0, 1/2), got {alpha}")
    if np.any(path.gaps <= noise_model.SINGULARITY_GUARD):
        raise noise_model.SingularityError("a jump-time gap vanished; resample the path")
    t = path.times[None, :]
    a = path.amplitudes[None, :]
    if path.count <= 3:
        return float(_vasicek_jt_fallback_block(t, a, sigma, r)[0])
    return float(_vasicek_jt_block(t, a, sigma, r, horizon, alpha)[0])


def weight_geometric_aj(path: JumpPath, sigma: float, r: float, horizon: float,
                        x: float) -> float:
    """Closed-form amplitude weight for the multiplicative model."""
    _require_jumps(path)
    h, degenerate = _geometric_aj_block(path.amplitudes[None, :], sigma, x)
    if degenerate[0]:
        raise DegeneracyError("a jump factor 1 + sigma*Delta vanished on this path")
    return float(h[0])


# -- generic engine bridge ---------------------------------------------------


def _time_noise_systems(path_times: np.ndarray, horizon: float, alpha: float):
    """NoiseSpec/WeightScheme pairs for each jump time given its neighbours."""
    n = len(path_times)
    specs, schemes = [], []
    for i in range(n):
        prev = 0.0 if i == 0 else path_times[i - 1]
        nxt = horizon if i == n - 1 else path_times[i + 1]
        spec = jump_time_noise(prev, nxt)
        specs.append(spec)
        schemes.append(singular_weight(spec, alpha))
    return specs, schemes


def _jt_dsigma_cross(gaps: np.ndarray, grad_t: np.ndarray, alpha: float) -> np.ndarray:
    """Extra d sigma / d T_j terms from the neighbouring jump-time weights
    (their windows move with T_j)."""
    n = len(grad_t)
    out = np.zeros(n)
    if n >= 2:
        out[1:] += alpha * gaps[1:n] ** (alpha - 1.0) * gaps[: n - 1] ** alpha * grad_t[:-1] ** 2
        out[:-1] -= alpha * gaps[1:n] ** (alpha - 1.0) * gaps[2:] ** alpha * grad_t[1:] ** 2
    return out


def engine_weight(model: ModelSpec, path: JumpPath, method: str,
                  alpha: float = 0.25, x0: float = 100.0) -> float:
    """Weight from the generic simple-functional calculus.

    Builds the terminal-state bundle (value, gradient, full second-derivative
    matrix over the active noises) from the derivative recursions, the
    starting-point sensitivity bundle, and the sigma-derivative including the
    window terms of the jump-time weights, then applies the
    integration-by-parts weight formula.  The jump-time route below 4 jumps
    uses integration by parts in the first amplitude alone.
    """
    _require_jumps(path)
    sol = solve_path(model, x0, path)
    tab = derivative_table(model, sol)
    n = path.count
    gaps = path.gaps

    amp_spec = gaussian_amplitude()
    amp_scheme = unit_weight()

    if method == "aj":
        sys = NoiseSystem([amp_spec] * n, [amp_scheme] * n, path.amplitudes)
        F = FunctionalBundle(sol.terminal, tab.da_terminal, tab.hess_aa)
        G = FunctionalBundle(tab.y_terminal, tab.dy_damp)
        dsig = malliavin_core.dsigma_from_bundle(F, sys)
        return ibp_weight(F, G, dsig, sys)

    if method == "jt":
        if n <= 3:
            sys = NoiseSystem([amp_spec], [amp_scheme], path.amplitudes[:1])
            F = FunctionalBundle(sol.terminal, tab.da_terminal[:1], tab.hess_aa[:1, :1])
            G = FunctionalBundle(tab.y_terminal, tab.dy_damp[:1])
            dsig = malliavin_core.dsigma_from_bundle(F, sys)
            return ibp_weight(F, G, dsig, sys)
        specs, schemes = _time_noise_systems(path.times, path.horizon, alpha)
        sys = NoiseSystem(specs, schemes, path.times)
        F = FunctionalBundle(sol.terminal, tab.du_terminal, tab.hess_tt)
        G = FunctionalBundle(tab.y_terminal, tab.dy_dtime)
        dsig = malliavin_core.dsigma_from_bundle(F, sys)
        dsig += _jt_dsigma_cross(gaps, tab.du_terminal, alpha)
        return ibp_weight(F, G, dsig, sys)

    if method == "mixed":
        specs, schemes = _time_noise_systems(path.times, path.horizon, alpha)
        specs = specs + [amp_spec] * n
        schemes = schemes + [amp_scheme] * n
        values = np.concatenate([path.times, path.amplitudes])
        sys = NoiseSystem(specs, schemes, values)
        grad = np.concatenate([tab.du_terminal, tab.da_terminal])
        hess = np.block([[tab.hess_tt, tab.hess_ta], [tab.hess_ta.T, tab.hess_aa]])
        F = FunctionalBundle(sol.terminal, grad, hess)
        G = FunctionalBundle(tab.y_terminal, np.concatenate([tab.dy_dtime, tab.dy_damp]))
        dsig = malliavin_core.dsigma_from_bundle(F, sys)
        dsig[:n] += _jt_dsigma_cross(gaps, tab.du_terminal, alpha)
        return ibp_weight(F, G, dsig, sys)

    raise ParameterError(f"unknown method {method!r}")


def weight_mixed(path: JumpPath, model: ModelSpec, alpha: float = 0.25,
                 x0: float = 100.0) -> float:
    """Weight over the 2n-noise system (jump times and amplitudes together)."""
    return engine_weight(model, path, "mixed", alpha=alpha, x0=x0)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def terminal_state_variance(model: ModelSpec, rate: float, horizon: float,
                            x0: float) -> float:
    """Exact variance of the terminal state (used for the localization width).

    Mean-reverting model: sigma^2 * rate * (1 - e^{-2 r T}) / (2 r).
    Multiplicative model: x^2 e^{2 r T} (e^{sigma^2 rate T} - 1).
    """
    p = model.params
    if model.tag == "vasicek":
        r, sigma = p["r"], p["sigma"]
        return sigma**2 * rate * (1.0 - math.exp(-2.0 * r * horizon)) / (2.0 * r)
    if model.tag == "geometric":
        r, sigma = p["r"], p["sigma"]
        return x0**2 * math.exp(2.0 * r * horizon) * (math.exp(sigma**2 * rate * horizon) - 1.0)
    raise ParameterError(f"no variance formula for model tag {model.tag!r}")


def delta_zero_jump_term(model: ModelSpec, payoff: PayoffSpec, x: float,
                         horizon: float, rate: float) -> float:
    """Deterministic {J_T = 0} branch: e^{-rate*T} phi'(s_T(x)) ds_T/dx.

    Piecewise-constant payoffs contribute 0 away from the kink; exactly at a
    kink the derivative does not exist, a ``KinkWarning`` is emitted and 0 is
    returned.
    """
    s_det = flow(model, 0.0, horizon, x)
    slope_det = flow_sensitivity(model, 0.0, horizon, x)
    weight = math.exp(-rate * horizon)
    if payoff.kind == "call":
        if s_det == payoff.strike:
            warnings.warn("no-jump state sits exactly at the call kink", KinkWarning)
            return 0.0
        dphi = 1.0 if s_det > payoff.strike else 0.0
    elif payoff.kind == "digital":
        if s_det == payoff.strike:
            warnings.warn("no-jump state sits exactly at the digital jump", KinkWarning)
            return 0.0
        dphi = 0.0
    else:
        dphi = float(payoff.slope(np.asarray([s_det]))[0])
    return weight * dphi * slope_det


def _blocks_by_count(batch: JumpBatch):
    """Yield (count, path_indices, times_block, amps_block) for counts >= 1."""
    counts = batch.counts
    order = np.argsort(counts, kind="stable")
    sorted_counts = counts[order]
    distinct, starts = np.unique(sorted_counts, return_index=True)
    bounds = np.append(starts, len(order))
    for v, lo, hi in zip(distinct, bounds[:-1], bounds[1:]):
        if v == 0:
            continue
        idx = order[lo:hi]
        cols = np.arange(v)
        rows = batch.offsets[idx][:, None] + cols[None, :]
        yield int(v), idx, batch.times[rows], batch.amplitudes[rows]


def _terminal_state_blockwise(model: ModelSpec, batch: JumpBatch, x0: float,
                              horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """(S_T, dS_T/dx) per path for the tagged models, vectorized."""
    p = model.params
    n_paths = len(batch.counts)
    s = np.empty(n_paths)
    dxs = np.empty(n_paths)
    if model.tag == "vasicek":
        r, level, sigma = p["r"], p["level"], p["sigma"]
        base = x0 * math.exp(-r * horizon) + level * (1.0 - math.exp(-r * horizon))
        s[:] = base
        dxs[:] = math.exp(-r * horizon)
        for n, idx, tb, ab in _blocks_by_count(batch):
            s[idx] = base + sigma * np.sum(ab * np.exp(-r * (horizon - tb)), axis=1)
    elif model.tag == "geometric":
        r, sigma = p["r"], p["sigma"]
        grow = math.exp(r * horizon)
        s[:] = x0 * grow
        for n, idx, tb, ab in _blocks_by_count(batch):
            s[idx] = x0 * grow * np.prod(1.0 + sigma * ab, axis=1)
        dxs = s / x0
    else:
        raise ParameterError(f"vectorized path evaluation needs a tagged model, got {model.tag!r}")
    return s, dxs


def _weights_blockwise(model: ModelSpec, batch: JumpBatch, method: str, x0: float,
                       horizon: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """(H, degenerate_mask) per path; H = 0 on no-jump paths."""
    p = model.params
    n_paths = len(batch.counts)
    h = np.zeros(n_paths)
    degenerate = np.zeros(n_paths, dtype=bool)
    if model.tag == "vasicek":
        r, sigma = p["r"], p["sigma"]
        for n, idx, tb, ab in _blocks_by_count(batch):
            if method == "aj":
                h[idx] = _vasicek_aj_block(tb, ab, sigma, r)
            elif method == "jt":
                if n <= 3:
                    h[idx] = _vasicek_jt_fallback_block(tb, ab, sigma, r)
                else:
                    h[idx] = _vasicek_jt_block(tb, ab, sigma, r, horizon, alpha)
            elif method == "mixed":
                h[idx] = _vasicek_mixed_block(tb, ab, sigma, r, horizon, alpha)
            else:
                raise ParameterError(f"unknown method {method!r}")
    elif model.tag == "geometric":
        r, sigma = p["r"], p["sigma"]
        if method == "jt":
            raise DegeneracyError(
                "jump-time weights are degenerate for the multiplicative model "
                "(the state depends on the times through the count only)"
            )
        if method not in ("aj", "mixed"):
            raise ParameterError(f"unknown method {method!r}")
        # the mixed system reduces to the amplitude weight: time gradients vanish
        for n, idx, tb, ab in _blocks_by_count(batch):
            hb, db = _geometric_aj_block(ab, sigma, x0)
            h[idx] = hb
            degenerate[idx] = db
    else:
        raise ParameterError(f"vectorized weights need a tagged model, got {model.tag!r}")
    return h, degenerate


def _default_loc_width(model: ModelSpec, rate: float, horizon: float, x0: float) -> float:
    return 0.2 * math.sqrt(terminal_state_variance(model, rate, horizon, x0))


def delta_malliavin(
    model: ModelSpec,
    payoff: PayoffSpec,
    method: str,
    n_paths: int,
    seed: int,
    *,
    x0: float,
    horizon: float,
    rate: float,
    alpha: float = 0.25,
    loc_width: Optional[float] = None,
) -> EstimateReport:
    """Weight-based Delta estimate.

    estimate = deterministic no-jump term
             + mean of phi_reg'(S_T) dS_T/dx          (pathwise, smooth part)
             + mean of phi_loc(S_T) H                 (weight, kink window)

    Degenerate paths (vanishing covariance or jump factor) are skipped and
    counted; if they exceed 1% of the sample a loud warning is raised.
    """
    if method not in ("aj", "jt", "mixed"):
        raise ParameterError(f"method must be aj, jt or mixed, got {method!r}")
    if n_paths < 2:
        raise ParameterError("need at least 2 paths")

    if loc_width is None:
        loc_width = payoff.loc_width
    if loc_width is None and payoff.kind != "custom":
        loc_width = _default_loc_width(model, rate, horizon, x0)
    split = localize(payoff, loc_width)

    zero_term = delta_zero_jump_term(model, payoff, x0, horizon, rate)

    if model.tag in ("vasicek", "geometric"):
        batch = sample_jump_batch(rate, horizon, n_paths, substream(seed))
        s, dxs = _terminal_state_blockwise(model, batch, x0, horizon)
        h, degenerate = _weights_blockwise(model, batch, method, x0, horizon, alpha)
        jumped = batch.counts >= 1
        psi = np.where(jumped, split.reg_slope(s) * dxs + split.loc_value(s) * h, 0.0)
        keep = ~degenerate
        return _summarize(psi[keep], method, zero_term, n_paths, int(degenerate.sum()))

    # custom models: per-path generic engine (documented slow path)
    law = gaussian_amplitude()
    psi = np.empty(n_paths)
    n_deg = 0
    kept = []
    for k in range(n_paths):
        path = noise_model.sample_jump_path(rate, horizon, law, substream(seed, k))
        if path.count == 0:
            kept.append(0.0)
            continue
        sol = solve_path(model, x0, path)
        tab = derivative_table(model, sol)
        try:
            hk = engine_weight(model, path, method, alpha=alpha, x0=x0)
        except DegeneracyError:
            n_deg += 1
            continue
        sk = np.asarray([sol.terminal])
        kept.append(float(split.reg_slope(sk)[0] * tab.y_terminal + split.loc_value(sk)[0] * hk))
    return _summarize(np.asarray(kept), method, zero_term, n_paths, n_deg)


def delta_fd(
    model: ModelSpec,
    payoff: PayoffSpec,
    bump: float,
    n_paths: int,
    seed: int,
    *,
    x0: float,
    horizon: float,
    rate: float,
) -> EstimateReport:
    """Central finite difference with common random numbers.

    Both bumps reuse the identical jump paths; the per-path difference
    quotient's empirical variance is reported.  The terminal state of both
    tagged models is affine in the start value, so the bumped states are
    S_T +/- bump * dS_T/dx exactly.
    """
    if bump <= 0:
        raise ParameterError(f"bump must be positive, got {bump}")
    if n_paths < 2:
        raise ParameterError("need at least 2 paths")

    if model.tag in ("vasicek", "geometric"):
        batch = sample_jump_batch(rate, horizon, n_paths, substream(seed))
        s, dxs = _terminal_state_blockwise(model, batch, x0, horizon)
        s_up = s + bump * dxs
        s_dn = s - bump * dxs
    else:
        law = gaussian_amplitude()
        s_up = np.empty(n_paths)
        s_dn = np.empty(n_paths)
        for k in range(n_paths):
            path = noise_model.sample_jump_path(rate, horizon, law, substream(seed, k))
            s_up[k] = solve_path(model, x0 + bump, path).terminal
            s_dn[k] = solve_path(model, x0 - bump, path).terminal
    quotient = (payoff.value(s_up) - payoff.value(s_dn)) / (2.0 * bump)
    return _summarize(np.asarray(quotient, dtype=float), "fd", 0.0, n_paths, 0)
