"""Poisson jump paths, noise laws, and the singular weight schemes they carry.

A jump path is one realization of a finite-activity Poisson point measure on
[0, T]: ordered jump times plus i.i.d. amplitudes.  Each scalar noise (an
amplitude, or one jump time conditioned on its neighbours) is described by a
``NoiseSpec`` (support, interior singularities of its density, log-density
slope) and a ``WeightScheme``: a state-dependent factor pi(y) that vanishes at
every singularity so that integration by parts produces no border terms.  On a
bounded subinterval (q_i, q_{i+1}) the weight is

    pi(y) = (q_{i+1} - y)**alpha * (y - q_i)**alpha,      alpha in (0, 1),

with pi'(y) = alpha * (q_{i+1}-y)**(alpha-1) * (y-q_i)**(alpha-1)
              * (q_i - 2*y + q_{i+1});
on an unbounded tail the factor |y|**(-beta) (beta > alpha) keeps pi bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "ParameterError",
    "DomainError",
    "SingularityError",
    "SINGULARITY_GUARD",
    "substream",
    "JumpPath",
    "count_jumps",
    "NoiseSpec",
    "gaussian_amplitude",
    "uniform_amplitude",
    "piecewise_exp_amplitude",
    "jump_time_noise",
    "WeightScheme",
    "unit_weight",
    "singular_weight",
    "weight_eval",
    "IntegrabilityReport",
    "check_weight_integrability",
    "sample_jump_times",
    "sample_amplitudes",
    "sample_jump_path",
    "JumpBatch",
    "sample_jump_batch",
]


class ParameterError(ValueError):
    """Invalid parameter passed to a sampler or constructor."""


class DomainError(ValueError):
    """Query outside the valid domain (e.g. time outside [0, T])."""


class SingularityError(ArithmeticError):
    """Evaluation exactly at a density singularity or weight endpoint."""


# Draws landing this close to a singularity are rejected and redrawn, so the
# weight derivative (which has a pole there) is never evaluated at the point.
SINGULARITY_GUARD = 1e-12

# Default truncation for the standard normal amplitude law, in standard
# deviations.  Redrawing beyond 10 sigma changes expectations by < 1e-20 but
# makes the bounded-log-density hypothesis literally checkable.
GAUSSIAN_TRUNCATION = 10.0


def substream(seed: int, *index: int) -> np.random.Generator:
    """Independent deterministic substream for (seed, index...).

    Counter-based (Philox) splitting: the same key always yields the same
    stream, regardless of how many other streams exist or which worker asks,
    so path-level and cell-level sampling is reproducible under any degree of
    parallelism.
    """
    key = (int(seed),) + tuple(int(i) for i in index)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


# ---------------------------------------------------------------------------
# Jump paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpPath:
    """One realization of the point measure: horizon, ordered times, amplitudes.

    Gaps are delta_i = T_i - T_{i-1} with T_0 = 0 and delta_{n+1} = T - T_n;
    construction rejects ties so every gap is strictly positive.
    """

    horizon: float
    times: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        amps = np.asarray(self.amplitudes, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "amplitudes", amps)
        if self.horizon < 0:
            raise ParameterError(f"horizon must be >= 0, got {self.horizon}")
        if times.ndim != 1 or amps.ndim != 1:
            raise ParameterError("times and amplitudes must be 1-d")
        if len(times) != len(amps):
            raise ParameterError(
                f"times ({len(times)}) and amplitudes ({len(amps)}) differ in length"
            )
        if len(times) > 0:
            if times[0] <= 0.0 or times[-1] > self.horizon:
                raise ParameterError("jump times must lie in (0, horizon]")
            if np.any(np.diff(times) <= 0.0):
                raise ParameterError("jump times must be strictly increasing")
        if np.any(self.gaps <= 0.0):
            raise ParameterError("all gaps must be strictly positive")

    @property
    def count(self) -> int:
        return len(self.times)

    @property
    def gaps(self) -> np.ndarray:
        """delta_1 .. delta_{n+1}, including the final gap to the horizon."""
        bounds = np.concatenate(([0.0], self.times, [self.horizon]))
        return np.diff(bounds)


def count_jumps(path: JumpPath, t: float) -> int:
    """Counting process J_t = number of jump times <= t (right-continuous)."""
    if t < 0.0 or t > path.horizon:
        raise DomainError(f"t={t} outside [0, {path.horizon}]")
    return int(np.searchsorted(path.times, t, side="right"))


# ---------------------------------------------------------------------------
# Noise specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """One scalar noise: its support, density singularities, and density data.

    ``log_density_slope`` is d/dy ln p(y), defined on the open subintervals
    between singularities.  ``sampler(rng, n)`` draws n i.i.d. values when the
    law supports direct sampling.
    """

    kind: str  # "amplitude" | "time"
    support: tuple[float, float]
    density: Callable[[float], float]
    log_density_slope: Callable[[float], float]
    singularities: tuple[float, ...] = ()
    sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None
    label: str = "custom"

    def __post_init__(self):
        a, b = self.support
        if not a < b:
            raise ParameterError(f"empty support ({a}, {b})")
        if self.kind not in ("amplitude", "time"):
            raise ParameterError(f"unknown noise kind {self.kind!r}")
        for s in self.singularities:
            if not a < s < b:
                raise ParameterError(f"singularity {s} not interior to ({a}, {b})")
        if any(np.diff(self.singularities) <= 0):
            raise ParameterError("singularities must be strictly increasing")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """q_0 < q_1 < ... < q_{k+1}: support endpoints plus singularities."""
        return (self.support[0],) + tuple(self.singularities) + (self.support[1],)

    def check_density_normalization(self, tol: float = 1e-8) -> float:
        """Numerically verify the density integrates to 1; returns the error."""
        a, b = self.support
        pts = list(self.singularities) if math.isfinite(a) and math.isfinite(b) else None
        total, _ = integrate.quad(self.density, a, b, points=pts, limit=200)
        err = abs(total - 1.0)
        if err > tol:
            raise ParameterError(f"density integrates to {total}, not 1 (err={err:.3e})")
        return err


def _normal_pdf(y: float) -> float:
    return math.exp(-0.5 * y * y) / math.sqrt(2.0 * math.pi)


def gaussian_amplitude(truncation: float = GAUSSIAN_TRUNCATION) -> NoiseSpec:
    """Standard normal amplitude law.

    Draws beyond ``truncation`` standard deviations are redrawn; the
    log-density slope is -y throughout.
    """
    if truncation <= 0:
        raise ParameterError("truncation must be positive")

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        out = rng.standard_normal(n)
        bad = np.abs(out) > truncation
        while np.any(bad):
            out[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(out) > truncation
        return out

    return NoiseSpec(
        kind="amplitude",
        support=(-math.inf, math.inf),
        density=_normal_pdf,
        log_density_slope=lambda y: -y,
        sampler=sampler,
        label="normal",
    )


def uniform_amplitude(a: float, b: float) -> NoiseSpec:
    """Uniform law on (a, b); the density is singular at both endpoints."""
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ParameterError(f"invalid uniform support ({a}, {b})")
    width = b - a

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        out = a + width * rng.random(n)
        bad = (out - a < SINGULARITY_GUARD) | (b - out < SINGULARITY_GUARD)
        while np.any(bad):
            out[bad] = a + width * rng.random(int(bad.sum()))
            bad = (out - a < SINGULARITY_GUARD) | (b - out < SINGULARITY_GUARD)
        return out

    return NoiseSpec(
        kind="amplitude",
        support=(a, b),
        density=lambda y, _w=width: 1.0 / _w,
        log_density_slope=lambda y: 0.0,
        sampler=sampler,
        label="uniform",
    )


def piecewise_exp_amplitude(
    breakpoints: Sequence[float],
    rho: Callable[[float], float],
    rho_slope: Callable[[float], float],
    table_size: int = 4096,
) -> NoiseSpec:
    """Law with density proportional to exp(rho(y)) on a union of intervals.

    ``breakpoints`` are q_0 < ... < q_{k+1} (finite); interior points are
    density singularities.  Sampling uses an inverse-CDF table built once per
    spec.
    """
    qs = tuple(float(q) for q in breakpoints)
    if len(qs) < 2 or any(np.diff(qs) <= 0):
        raise ParameterError("breakpoints must be increasing with at least 2 entries")
    if not all(math.isfinite(q) for q in qs):
        raise ParameterError("piecewise-exp law requires finite breakpoints")

    norm = 0.0
    for lo, hi in zip(qs[:-1], qs[1:]):
        piece, _ = integrate.quad(lambda y: math.exp(rho(y)), lo, hi, limit=200)
        norm += piece
    grid = np.linspace(qs[0], qs[-1], table_size)
    dens = np.exp([rho(float(y)) for y in grid])
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))))
    cdf /= cdf[-1]

    def density(y: float) -> float:
        if y <= qs[0] or y >= qs[-1]:
            return 0.0
        return math.exp(rho(y)) / norm

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        out = np.interp(u, cdf, grid)
        guard = np.array(qs)
        bad = np.min(np.abs(out[:, None] - guard[None, :]), axis=1) < SINGULARITY_GUARD
        while np.any(bad):
            out[bad] = np.interp(rng.random(int(bad.sum())), cdf, grid)
            bad = np.min(np.abs(out[:, None] - guard[None, :]), axis=1) < SINGULARITY_GUARD
        return out

    return NoiseSpec(
        kind="amplitude",
        support=(qs[0], qs[-1]),
        density=density,
        log_density_slope=rho_slope,
        singularities=qs[1:-1],
        sampler=sampler,
        label="piecewise-exp",
    )


def jump_time_noise(t_prev: float, t_next: float) -> NoiseSpec:
    """Conditional law of one jump time given its neighbours: uniform on
    (t_prev, t_next), so the log-density slope is 0 in the interior."""
    if not t_prev < t_next:
        raise ParameterError(f"need t_prev < t_next, got ({t_prev}, {t_next})")
    width = t_next - t_prev
    return NoiseSpec(
        kind="time",
        support=(t_prev, t_next),
        density=lambda y, _w=width: 1.0 / _w,
        log_density_slope=lambda y: 0.0,
        label="jump-time",
    )


# ---------------------------------------------------------------------------
# Weight schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightScheme:
    """The factor pi_i and its derivative, per subinterval of the support.

    ``unit=True`` is the trivial weight pi = 1 (used when the density is
    smooth and vanishing at infinity, e.g. a Gaussian amplitude).  Otherwise
    pi vanishes at every breakpoint with exponent ``alpha``, and on unbounded
    tails carries the extra decay |y|**(-beta).
    """

    breakpoints: tuple[float, ...]
    alpha: float = 0.25
    beta: Optional[float] = None
    unit: bool = False

    def __post_init__(self):
        if any(np.diff(self.breakpoints) <= 0):
            raise ParameterError("breakpoints must be strictly increasing")
        if self.unit:
            return
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must be in (0, 1), got {self.alpha}")
        unbounded = math.isinf(self.breakpoints[0]) or math.isinf(self.breakpoints[-1])
        if unbounded:
            if self.beta is None or self.beta <= self.alpha:
                raise ParameterError("unbounded support requires beta > alpha")
            finite = [q for q in self.breakpoints if math.isfinite(q)]
            if not finite:
                raise ParameterError("singular weight needs at least one finite breakpoint")


def unit_weight(support: tuple[float, float] = (-math.inf, math.inf)) -> WeightScheme:
    return WeightScheme(breakpoints=tuple(support), unit=True)


def singular_weight(spec: NoiseSpec, alpha: float = 0.25, beta: Optional[float] = None) -> WeightScheme:
    """Weight vanishing at every singularity of ``spec`` with exponent alpha."""
    return WeightScheme(breakpoints=spec.breakpoints, alpha=alpha, beta=beta)


def weight_eval(
    scheme: WeightScheme,
    spec: Optional[NoiseSpec],
    y: float,
    guarded: bool = True,
) -> tuple[float, float]:
    """Evaluate (pi(y), pi'(y)).

    Returns (0, 0) outside the support.  When ``guarded``, raises
    ``SingularityError`` if y is within ``SINGULARITY_GUARD`` of a finite
    breakpoint: pi' has a pole there and Monte Carlo callers are expected to
    resample instead.  Quadrature callers pass ``guarded=False`` to evaluate
    arbitrarily close to (never exactly at) the singular points.
    """
    qs = scheme.breakpoints
    lo, hi = qs[0], qs[-1]
    if y < lo or y > hi:
        return 0.0, 0.0
    if scheme.unit:
        return 1.0, 0.0
    for q in qs:
        if math.isfinite(q) and abs(y - q) <= (SINGULARITY_GUARD if guarded else 0.0):
            raise SingularityError(f"y={y} at weight breakpoint {q}")

    k = int(np.searchsorted(qs, y)) - 1
    ql, qr = qs[k], qs[k + 1]
    a = scheme.alpha
    if math.isfinite(ql) and math.isfinite(qr):
        left = y - ql
        right = qr - y
        pi = (right * left) ** a
        dpi = a * right ** (a - 1.0) * left ** (a - 1.0) * (ql - 2.0 * y + qr)
        return pi, dpi
    b = scheme.beta
    if math.isinf(qr):  # right tail: y > q_k
        t = y - ql
        ay = abs(y)
        pi = t ** a * ay ** (-b)
        dpi = a * t ** (a - 1.0) * ay ** (-b) - b * t ** a * ay ** (-b - 1.0) * math.copysign(1.0, y)
        return pi, dpi
    # left tail: y < q_1
    t = qr - y
    ay = abs(y)
    pi = t ** a * ay ** (-b)
    dpi = -a * t ** (a - 1.0) * ay ** (-b) - b * t ** a * ay ** (-b - 1.0) * math.copysign(1.0, y)
    return pi, dpi


@dataclass(frozen=True)
class IntegrabilityReport:
    """Result of the weight-integrability check backing the nondegeneracy argument."""

    alpha: float
    delta: float
    eta: float
    exponent_bound_pole: float  # 2*alpha*(1+delta), must be < 1
    exponent_bound_blowup: float  # (1-alpha)*(1+delta), must be < 1
    moment_dpi: Optional[float]  # E|pi'(V)|^(1+eta)
    moment_inv_pi: Optional[float]  # E pi(V)^(-2(1+delta))
    passed: bool
    messages: tuple[str, ...]


def check_weight_integrability(
    scheme: WeightScheme,
    spec: NoiseSpec,
    delta: Optional[float] = None,
    eta: Optional[float] = None,
) -> IntegrabilityReport:
    """Verify E|pi'(V)|^(1+eta) < inf and E pi(V)^(-2(1+delta)) < inf numerically.

    The admissible exponents require 2*alpha*(1+delta) < 1 and
    (1-alpha)*(1+delta) < 1, which forces alpha < 1/2; violations are reported
    as a failed flag, not an exception.
    """
    msgs = []
    a = scheme.alpha if not scheme.unit else 0.0
    if scheme.unit:
        return IntegrabilityReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, True,
                                   ("unit weight: pi'=0, pi=1, nothing to check",))
    if delta is None:
        # midpoint of the admissible range, leaving margin on both bounds
        cap = min(1.0 / (2.0 * a) - 1.0, 1.0 / (1.0 - a) - 1.0) if a < 0.5 else 0.0
        delta = 0.5 * cap if cap > 0 else 0.05
    if eta is None:
        eta = delta

    bound_pole = 2.0 * a * (1.0 + delta)
    bound_blow = (1.0 - a) * (1.0 + delta)
    ok = True
    if a >= 0.5:
        ok = False
        msgs.append(f"alpha={a} >= 1/2: no admissible delta exists")
    if bound_pole >= 1.0:
        ok = False
        msgs.append(f"2*alpha*(1+delta) = {bound_pole:.6g} >= 1")
    if bound_blow >= 1.0:
        ok = False
        msgs.append(f"(1-alpha)*(1+delta) = {bound_blow:.6g} >= 1")

    moment_dpi = moment_inv = None
    lo, hi = scheme.breakpoints[0], scheme.breakpoints[-1]
    if ok and math.isfinite(lo) and math.isfinite(hi):
        def f_dpi(y):
            pi, dpi = weight_eval(scheme, spec, y, guarded=False)
            return abs(dpi) ** (1.0 + eta) * spec.density(y)

        def f_inv(y):
            pi, _ = weight_eval(scheme, spec, y, guarded=False)
            return pi ** (-2.0 * (1.0 + delta)) * spec.density(y)

        pts = [q for q in scheme.breakpoints[1:-1]]
        moment_dpi, _ = integrate.quad(f_dpi, lo, hi, points=pts or None, limit=400)
        moment_inv, _ = integrate.quad(f_inv, lo, hi, points=pts or None, limit=400)
        if not (math.isfinite(moment_dpi) and math.isfinite(moment_inv)):
            ok = False
            msgs.append("quadrature detected a non-integrable moment")

    return IntegrabilityReport(
        alpha=a,
        delta=delta,
        eta=eta,
        exponent_bound_pole=bound_pole,
        exponent_bound_blowup=bound_blow,
        moment_dpi=moment_dpi,
        moment_inv_pi=moment_inv,
        passed=ok,
        messages=tuple(msgs),
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_jump_times(rate: float, horizon: float, stream: np.random.Generator) -> np.ndarray:
    """Ordered jump times of a rate-``rate`` Poisson process on (0, horizon].

    Built from i.i.d. exponential gaps, so the count is Poisson(rate*horizon).
    """
    if rate <= 0.0:
        raise ParameterError(f"rate must be positive, got {rate}")
    if horizon < 0.0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}")
    if horizon == 0.0:
        return np.empty(0)
    times = []
    t = stream.exponential(1.0 / rate)
    while t <= horizon:
        times.append(t)
        t += stream.exponential(1.0 / rate)
    return np.asarray(times)


def sample_amplitudes(law: NoiseSpec, count: int, stream: np.random.Generator) -> np.ndarray:
    """``count`` i.i.d. draws from the amplitude law."""
    if count < 0:
        raise ParameterError(f"count must be >= 0, got {count}")
    if law.sampler is None:
        raise ParameterError(f"law {law.label!r} does not support sampling")
    if count == 0:
        return np.empty(0)
    return law.sampler(stream, count)


def sample_jump_path(
    rate: float,
    horizon: float,
    law: NoiseSpec,
    stream: np.random.Generator,
) -> JumpPath:
    """One jump path: Poisson times plus i.i.d. amplitudes from ``law``."""
    while True:
        times = sample_jump_times(rate, horizon, stream)
        gaps_ok = len(times) == 0 or (
            times[0] > SINGULARITY_GUARD
            and np.all(np.diff(times) > SINGULARITY_GUARD)
            and horizon - times[-1] > SINGULARITY_GUARD
        )
        if gaps_ok:
            break
    amps = sample_amplitudes(law, len(times), stream)
    return JumpPath(horizon=horizon, times=times, amplitudes=amps)


@dataclass(frozen=True)
class JumpBatch:
    """Ragged batch of jump paths in flat layout (vectorized kernels' input).

    ``counts[k]`` jumps belong to path k; their times/amplitudes occupy
    ``times[offsets[k]:offsets[k+1]]``.
    """

    horizon: float
    counts: np.ndarray  # (M,) int
    times: np.ndarray  # (total,) flat, ordered within each path
    amplitudes: np.ndarray  # (total,)
    offsets: np.ndarray  # (M+1,) int

    def path(self, k: int) -> JumpPath:
        i, j = self.offsets[k], self.offsets[k + 1]
        return JumpPath(self.horizon, self.times[i:j], self.amplitudes[i:j])


def sample_jump_batch(
    rate: float,
    horizon: float,
    n_paths: int,
    stream: np.random.Generator,
    truncation: float = GAUSSIAN_TRUNCATION,
) -> JumpBatch:
    """Vectorized batch of paths with standard-normal amplitudes.

    Counts are Poisson(rate*horizon); conditional on the count the times are
    order statistics of uniforms on (0, horizon), which is the same law as the
    exponential-gap construction.  Draw order is fixed, so a given stream
    always produces the same batch.
    """
    if rate <= 0.0:
        raise ParameterError(f"rate must be positive, got {rate}")
    if horizon <= 0.0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    if n_paths <= 0:
        raise ParameterError(f"n_paths must be positive, got {n_paths}")

    counts = stream.poisson(rate * horizon, size=n_paths)
    total = int(counts.sum())
    offsets = np.concatenate(([0], np.cumsum(counts)))

    raw = horizon * stream.random(total)
    path_ids = np.repeat(np.arange(n_paths, dtype=np.int64), counts)
    # sort within each path: stable sort on (path, time)
    order = np.lexsort((raw, path_ids))
    times = raw[order]

    # reject pathological ties / boundary hits (probability ~ 2**-53 per draw)
    if total:
        bad_paths = np.unique(np.concatenate([
            path_ids[1:][(path_ids[1:] == path_ids[:-1])
                         & (np.diff(times) <= SINGULARITY_GUARD)],
            path_ids[times <= SINGULARITY_GUARD],
            path_ids[horizon - times <= SINGULARITY_GUARD],
        ]))
        for k in bad_paths:
            i, j = offsets[k], offsets[k + 1]
            seg = times[i:j]
            while (
                seg[0] <= SINGULARITY_GUARD
                or horizon - seg[-1] <= SINGULARITY_GUARD
                or np.any(np.diff(seg) <= SINGULARITY_GUARD)
            ):
                seg = np.sort(horizon * stream.random(len(seg)))
            times[i:j] = seg

    amps = stream.standard_normal(total)
    bad = np.abs(amps) > truncation
    while np.any(bad):
        amps[bad] = stream.standard_normal(int(bad.sum()))
        bad = np.abs(amps) > truncation

    return JumpBatch(horizon=horizon, counts=counts, times=times, amplitudes=amps, offsets=offsets)
