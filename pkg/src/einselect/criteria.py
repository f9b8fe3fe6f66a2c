"""Estimators and verdicts for the four decoherence criteria.

(a) long-time ``|z|`` vanishes as the environment grows,
(b) the running time average of ``z`` vanishes,
(c) the long-time spread ``dz`` shrinks with environment size,
(d) pointer states stay put for arbitrary environment states.

All statistics use the stationary window ``[t_max/2, t_max]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import reduced_density
from .system import DENSE_CAP, CompositeSystem, ProductInitialState

VANISHING_THRESHOLD = 0.1
TIME_AVERAGE_THRESHOLD = 0.05
STABILITY_TOL = 1e-8
MONOTONE_RTOL = 0.05
NO_FLUCTUATION = 1e-14

EISR_CANDIDATE = "eisr_candidate"
NO_POINTER_BASIS = "no_pointer_basis"
CRITERIA_FAILED = "criteria_failed"


def stationary_window(times) -> np.ndarray:
    """Boolean mask selecting ``[t_max/2, t_max]``."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty time grid")
    return times >= times[-1] / 2


@dataclass
class VanishingResult:
    means: dict[int, float]
    threshold: float
    monotone: bool
    passed: bool

    def to_dict(self) -> dict:
        largest = max(self.means)
        return {
            "means": {str(n): v for n, v in self.means.items()},
            "mean_abs_z_largest_N": self.means[largest],
            "largest_N": largest,
            "threshold": self.threshold,
            "monotone": self.monotone,
            "pass": self.passed,
        }


def window_mean_abs(z, times) -> float:
    mask = stationary_window(times)
    return float(np.mean(np.abs(np.asarray(z)[mask])))


def check_vanishing(
    z_by_n: Mapping[int, np.ndarray | Sequence[np.ndarray]],
    times,
    threshold: float = VANISHING_THRESHOLD,
    rtol: float = MONOTONE_RTOL,
) -> VanishingResult:
    """Desk-scale surrogate for ``lim_t lim_N z = 0``.

    ``z_by_n`` maps environment size to one z series or a list of them (one
    per seed; window means are averaged). Passes when the window means of
    ``|z|`` do not increase with N by more than ``rtol`` and the largest-N
    mean is at most ``threshold``.
    """
    if len(z_by_n) < 3:
        raise ValueError(f"condition (a) needs at least 3 environment sizes, got {len(z_by_n)}")
    means = {}
    for n in sorted(z_by_n):
        series = z_by_n[n]
        if isinstance(series, np.ndarray) and series.ndim == 1:
            series = [series]
        means[int(n)] = float(np.mean([window_mean_abs(z, times) for z in series]))
    vals = list(means.values())
    monotone = all(b <= a * (1 + rtol) for a, b in zip(vals, vals[1:]))
    passed = monotone and vals[-1] <= threshold
    return VanishingResult(means, threshold, monotone, passed)


@dataclass
class TimeAverageResult:
    running_average: np.ndarray = field(repr=False)
    final: float
    threshold: float
    envelope_decreasing: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "final_abs_running_average": self.final,
            "threshold": self.threshold,
            "envelope_decreasing": self.envelope_decreasing,
            "pass": self.passed,
        }


def running_average(z, times) -> np.ndarray:
    """``<z>_T = (1/T) int_0^T z dt`` (trapezoid) at every grid point; ``z(0)`` at ``T = 0``."""
    z = np.asarray(z, dtype=complex)
    times = np.asarray(times, dtype=float)
    integral = cumulative_trapezoid(z, times, initial=0)
    out = np.empty_like(z)
    span = times - times[0]
    nz = span > 0
    out[nz] = integral[nz] / span[nz]
    out[~nz] = z[~nz]
    return out


def check_time_average(z, times, threshold: float = TIME_AVERAGE_THRESHOLD) -> TimeAverageResult:
    """Surrogate for ``lim_T <z>_T = 0``.

    The envelope test compares the peak ``|<z>_T|`` of the last quarter of
    the run with that of the third quarter; the later peak must not exceed
    the earlier one.
    """
    z = np.asarray(z, dtype=complex)
    times = np.asarray(times, dtype=float)
    if z.size < 100 or times.size != z.size:
        raise ValueError(f"condition (b) needs at least 100 samples, got {z.size}")
    avg = np.abs(running_average(z, times))
    t_max = times[-1]
    third = avg[(times >= t_max / 2) & (times < 3 * t_max / 4)]
    last = avg[times >= 3 * t_max / 4]
    decreasing = bool(last.max() <= third.max())
    final = float(avg[-1])
    return TimeAverageResult(avg, final, threshold, decreasing, decreasing and final <= threshold)


def estimate_deviation(z, times=None) -> float:
    """Long-time spread ``dz = sqrt(<|z|^2> - |<z>|^2)`` over the stationary window.

    With ``times=None`` the whole series is treated as the window.
    """
    z = np.asarray(z, dtype=complex)
    if times is not None:
        z = z[stationary_window(times)]
    if z.size == 0:
        raise ValueError("empty window")
    # two-pass form; the one-pass <|z|^2> - |<z>|^2 cancels badly near zero
    dev = z - np.mean(z)
    return float(np.sqrt(np.mean(dev.real**2 + dev.imag**2)))


def _linear_fit(x, y) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class ScalingResult:
    table: dict[int, float]
    per_seed: dict[int, list[float]]
    power_fit: dict | None
    exp_fit: dict | None
    decreasing: bool
    passed: bool
    flag: str | None = None

    def to_dict(self) -> dict:
        return {
            "table": {str(n): v for n, v in self.table.items()},
            "power_fit": self.power_fit,
            "exp_fit": self.exp_fit,
            "decreasing": self.decreasing,
            "flag": self.flag,
            "pass": self.passed,
        }


def check_deviation_scaling(
    dz_by_n: Mapping[int, Sequence[float]],
    rtol: float = MONOTONE_RTOL,
    min_sizes: int = 4,
    min_seeds: int = 5,
) -> ScalingResult:
    """Seed-averaged ``dz`` versus N, with power-law and exponential fits.

    Fits ``log dz = a - p log N`` and ``log dz = a - r N`` and reports both
    with R^2 without choosing between them. Passes iff every step in N
    lowers the averaged ``dz`` by more than ``rtol`` (relative).
    """
    if len(dz_by_n) < min_sizes:
        raise ValueError(f"condition (c) needs at least {min_sizes} environment sizes")
    per_seed = {int(n): [float(v) for v in dz_by_n[n]] for n in sorted(dz_by_n)}
    if any(len(v) < min_seeds for v in per_seed.values()):
        raise ValueError(f"condition (c) needs at least {min_seeds} seeds per size")
    table = {n: float(np.mean(v)) for n, v in per_seed.items()}
    ns = np.array(list(table), dtype=float)
    dz = np.array(list(table.values()))
    if np.all(dz <= NO_FLUCTUATION):
        return ScalingResult(table, per_seed, None, None, False, False, flag="no fluctuation")
    decreasing = bool(all(b < a * (1 - rtol) for a, b in zip(dz, dz[1:])))
    if np.any(dz <= 0):
        return ScalingResult(table, per_seed, None, None, decreasing, False, flag="zero deviation at some N")
    slope, _, r2 = _linear_fit(np.log(ns), np.log(dz))
    power = {"p": -slope, "r2": r2}
    slope, _, r2 = _linear_fit(ns, np.log(dz))
    expo = {"r": -slope, "r2": r2}
    return ScalingResult(table, per_seed, power, expo, decreasing, decreasing)


@dataclass
class StabilityResult:
    min_fidelity: dict[int, float]
    tolerance: float
    passed: bool
    basis: str = "pointer"
    n_env_states: int = 0

    def to_dict(self) -> dict:
        return {
            "min_fidelity": {str(m): v for m, v in self.min_fidelity.items()},
            "tolerance": self.tolerance,
            "basis": self.basis,
            "n_env_states": self.n_env_states,
            "pass": self.passed,
        }


def check_pointer_stability(
    model: CompositeSystem,
    states,
    env_states,
    times,
    tol: float = STABILITY_TOL,
    basis: str = "pointer",
    cap: int = DENSE_CAP,
) -> StabilityResult:
    """Fidelity ``F_m(t) = <m|rho_S(t)|m>`` starting from ``|m> (x) |chi>``.

    ``states`` holds the candidate system states as columns (the rank-1
    pointer states, or any candidate basis for models without one);
    ``env_states`` is an iterable of environment vectors.
    """
    states = np.asarray(states, dtype=complex)
    env_states = [np.asarray(chi, dtype=complex).ravel() for chi in env_states]
    worst = {}
    for m in range(states.shape[1]):
        vec = states[:, m]
        fmin = np.inf
        for chi in env_states:
            init = ProductInitialState(vec, env_vector=chi)
            rho = reduced_density(model, init, times, cap)
            fid = np.einsum("i,tij,j->t", vec.conj(), rho, vec).real
            fmin = min(fmin, float(fid.min()))
        worst[m] = fmin
    passed = all(f >= 1 - tol for f in worst.values())
    return StabilityResult(worst, tol, passed, basis, len(env_states))


@dataclass
class CriteriaReport:
    cond_A: dict
    cond_B: dict
    cond_a: dict | None
    cond_b: dict | None
    cond_c: dict | None
    cond_d: dict | None
    r1_verdict: str
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cond_A": self.cond_A,
            "cond_B": self.cond_B,
            "cond_a": self.cond_a,
            "cond_b": self.cond_b,
            "cond_c": self.cond_c,
            "cond_d": self.cond_d,
            "r1_verdict": self.r1_verdict,
            "reasons": list(self.reasons),
        }


def _as_dict(sub) -> dict | None:
    if sub is None or isinstance(sub, dict):
        return sub
    return sub.to_dict()


def _passed(sub) -> bool:
    if isinstance(sub, dict):
        return bool(sub.get("pass", False)) and not sub.get("skipped", False)
    return bool(sub.passed)


def verdict_R1(cond_A, cond_B, cond_a=None, cond_b=None, cond_c=None, cond_d=None) -> CriteriaReport:
    """Combine sub-reports into the overall verdict.

    ``no_pointer_basis`` when separability (A) or nondemolition (B) fails;
    ``criteria_failed`` when both hold but any of (a)-(d) fails or was
    skipped; ``eisr_candidate`` otherwise. Passing is never a proof of
    decoherence, only a candidate.
    """
    a_dict = _as_dict(cond_A)
    b_dict = _as_dict(cond_B)
    reasons = []
    if not a_dict["separable"]:
        reasons.append("condition (A) fails: H_int has no product eigenbasis")
    if not b_dict["nondemolition"]:
        reasons.append("condition (B) fails: H_int(t) does not commute with itself in time")
    subs = {"a": cond_a, "b": cond_b, "c": cond_c, "d": cond_d}
    if reasons:
        verdict = NO_POINTER_BASIS
    else:
        for name, sub in subs.items():
            if sub is None:
                reasons.append(f"condition ({name}) not established: skipped")
            elif isinstance(sub, dict) and sub.get("skipped"):
                reasons.append(f"condition ({name}) not established: {sub.get('reason', 'skipped')}")
            elif not _passed(sub):
                reasons.append(f"condition ({name}) fails")
        verdict = CRITERIA_FAILED if reasons else EISR_CANDIDATE
    return CriteriaReport(
        a_dict, b_dict, *(_as_dict(s) for s in subs.values()), r1_verdict=verdict, reasons=reasons
    )
