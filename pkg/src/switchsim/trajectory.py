"""Stochastic unraveling of the switching measurement.

Each trajectory is one experimental run: the detector either switches at
some random time in [0, tau] or survives the whole pulse, and the qubit
ends in the state conditioned on that record.  The default sampler inverts
the survival probability exactly (no discretization error); a first-order
stepped sampler is kept as an independent cross-check.

Randomness is counter-based (Philox) and keyed by (seed, trajectory
index): trajectory i always sees the same numbers no matter how many
trajectories run, in which order, or on how many workers.  For the exact
sampler trajectory i consumes the i-th variate of the base stream; the
stepped sampler gives trajectory i its own dedicated stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import chi2 as chi2_dist

from . import mat2 as m2
from .detector import (
    DetectorParams,
    max_step,
    p_no_switch,
    probe_basis,
    propagator,
    rate_matrix,
    survival_function,
    u_ham,
)
from .errors import BisectionFailureError, InsufficientCountsError, StepTooLargeError
from .tolerances import BISECTION_MAX_ITER, BISECTION_REL_TOL

_EULER_CHUNK = 16384


@dataclass(frozen=True)
class SimConfig:
    """Ensemble size, pulse duration, RNG seed and sampling method.

    method "exact" inverts the survival function; "euler" steps the state
    with step dt, which must resolve both 1/gamma_plus and 1/E.
    """

    n_traj: int
    tau: float
    seed: int
    method: str = "exact"
    dt: Optional[float] = None
    n_bins: int = 50

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if not (self.tau > 0.0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive and finite")
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if self.method not in ("exact", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "euler" and (self.dt is None or self.dt <= 0.0):
            raise ValueError("euler method requires a positive dt")


@dataclass(frozen=True)
class TrajectoryOutcome:
    """One run: whether/when the detector switched and the conditional
    (trace-normalized) final state of the qubit."""

    switched: bool
    switch_time: Optional[float]
    final_state: np.ndarray


@dataclass(frozen=True)
class Histogram:
    """Binned switching times plus the count of runs that never switched."""

    bin_edges: np.ndarray
    counts: np.ndarray
    no_switch_count: int
    total: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or len(edges) != len(counts) + 1:
            raise ValueError("need len(bin_edges) == len(counts) + 1")
        if np.any(np.diff(edges) <= 0.0):
            raise ValueError("bin edges must be strictly increasing")
        if int(counts.sum()) + int(self.no_switch_count) != int(self.total):
            raise ValueError("counts + no_switch_count must equal total")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)


def _base_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _euler_stream(seed: int, index: int) -> np.random.Generator:
    # counter word 3 keys the substream; word 0 counts blocks within it
    return np.random.Generator(
        np.random.Philox(key=np.uint64(seed), counter=[0, 0, 0, 1 + index])
    )


def _sqrt_rate_matrix(p: DetectorParams) -> np.ndarray:
    basis = probe_basis(p)
    return math.sqrt(p.gamma_L) * np.outer(basis.L, basis.L.conj()) + math.sqrt(
        p.gamma_R
    ) * np.outer(basis.R, basis.R.conj())


def _normalize(rho: np.ndarray) -> np.ndarray:
    return rho / m2.trace(rho).real


def _invert_survival(surv, u: np.ndarray, tau: float) -> np.ndarray:
    """Solve S(t) = u for each u < S(0), on [0, tau], by bisection.

    S is monotone non-increasing; the bracket is checked and a residual
    mismatch raises, since it would indicate a broken survival function
    rather than bad data.
    """
    if u.size == 0:
        return np.empty(0)
    lo = np.zeros_like(u)
    hi = np.full_like(u, tau)
    tol = BISECTION_REL_TOL * tau
    for _ in range(BISECTION_MAX_ITER):
        if np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        above = surv(mid) >= u
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    t = 0.5 * (lo + hi)
    if np.max(np.abs(surv(t) - u)) > 1e-7:
        raise BisectionFailureError(
            "survival inversion residual too large; S(t) appears non-monotone"
        )
    return t


def _sample_exact(
    p: DetectorParams, rho0: np.ndarray, cfg: SimConfig
) -> tuple[np.ndarray, int]:
    """Switch times (sorted by trajectory index removed) and no-switch count."""
    u = 1.0 - _base_stream(cfg.seed).random(cfg.n_traj)  # in (0, 1]
    surv = survival_function(p, rho0)
    s_tau = float(surv(cfg.tau))
    switched = u > s_tau
    times = _invert_survival(surv, u[switched], cfg.tau)
    return times, int(cfg.n_traj - switched.sum())


def _euler_step_operator(p: DetectorParams, dt: float) -> np.ndarray:
    return u_ham(p, dt) @ p_no_switch(p, dt)


def _check_euler_step(p: DetectorParams, dt: float) -> float:
    cap = max_step(p)
    if dt > cap:
        raise StepTooLargeError(f"euler dt {dt} exceeds {cap}")
    return dt


def _euler_step_probabilities(
    p: DetectorParams, rho0: np.ndarray, n_steps: int, dt: float
) -> np.ndarray:
    """Per-step switch probabilities along the deterministic no-switch chain.

    Conditioned on not having switched, every trajectory carries the same
    state, so the whole ensemble shares one probability sequence.
    """
    gam = rate_matrix(p)
    step_op = _euler_step_operator(p, dt)
    step_op_dag = m2.dag(step_op)
    rho = np.asarray(rho0, dtype=complex)
    probs = np.empty(n_steps)
    for k in range(n_steps):
        probs[k] = dt * m2.trace(gam @ rho).real
        rho = _normalize(step_op @ rho @ step_op_dag)
    return probs


def _sample_euler(
    p: DetectorParams, rho0: np.ndarray, cfg: SimConfig
) -> tuple[np.ndarray, int]:
    _check_euler_step(p, cfg.dt)
    n_steps = max(int(math.ceil(cfg.tau / cfg.dt)), 1)
    dt = cfg.tau / n_steps
    probs = _euler_step_probabilities(p, rho0, n_steps, dt)

    all_times = []
    no_switch = 0
    for start in range(0, cfg.n_traj, _EULER_CHUNK):
        n = min(_EULER_CHUNK, cfg.n_traj - start)
        uniforms = np.empty((n, n_steps))
        for i in range(n):
            uniforms[i] = _euler_stream(cfg.seed, start + i).random(n_steps)
        hit = uniforms < probs[None, :]
        any_hit = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        all_times.append((first[any_hit] + 0.5) * dt)
        no_switch += int(n - any_hit.sum())
    return np.concatenate(all_times) if all_times else np.array([]), no_switch


def run_trajectory(
    p: DetectorParams, rho0: np.ndarray, cfg: SimConfig, stream_index: int
) -> TrajectoryOutcome:
    """Simulate the single trajectory with the given stream index.

    Reproduces exactly the record that run_ensemble attributes to the same
    index under the same config.
    """
    m2.check_density_matrix(rho0)
    if abs(m2.trace(rho0).real - 1.0) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    if not 0 <= stream_index < cfg.n_traj:
        raise ValueError("stream_index must lie in [0, n_traj)")
    rho0 = np.asarray(rho0, dtype=complex)

    if cfg.method == "exact":
        u = 1.0 - float(_base_stream(cfg.seed).random(stream_index + 1)[-1])
        surv = survival_function(p, rho0)
        prop = propagator(p)
        if float(surv(cfg.tau)) >= u:
            u_tau = prop(cfg.tau)
            return TrajectoryOutcome(False, None, _normalize(u_tau @ rho0 @ m2.dag(u_tau)))
        t = float(_invert_survival(surv, np.array([u]), cfg.tau)[0])
        k = _sqrt_rate_matrix(p)
        u_t = prop(t)
        final = _normalize(k @ u_t @ rho0 @ m2.dag(u_t) @ m2.dag(k))
        return TrajectoryOutcome(True, t, final)

    _check_euler_step(p, cfg.dt)
    n_steps = max(int(math.ceil(cfg.tau / cfg.dt)), 1)
    dt = cfg.tau / n_steps
    gam = rate_matrix(p)
    k_op = _sqrt_rate_matrix(p)
    step_op = _euler_step_operator(p, dt)
    uniforms = _euler_stream(cfg.seed, stream_index).random(n_steps)
    rho = rho0.copy()
    for k in range(n_steps):
        p_sw = dt * m2.trace(gam @ rho).real
        if uniforms[k] < p_sw:
            return TrajectoryOutcome(
                True, (k + 0.5) * dt, _normalize(k_op @ rho @ m2.dag(k_op))
            )
        rho = _normalize(step_op @ rho @ m2.dag(step_op))
    return TrajectoryOutcome(False, None, rho)


def sample_switch_times(
    p: DetectorParams, rho0: np.ndarray, cfg: SimConfig
) -> tuple[np.ndarray, int]:
    """Switching times of the trajectories that switched (in trajectory
    order), and the count of those that survived the pulse."""
    m2.check_density_matrix(rho0)
    if abs(m2.trace(rho0).real - 1.0) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    rho0 = np.asarray(rho0, dtype=complex)
    if cfg.method == "exact":
        return _sample_exact(p, rho0, cfg)
    return _sample_euler(p, rho0, cfg)


def bin_switch_times(times: np.ndarray, no_switch: int, cfg: SimConfig) -> Histogram:
    edges = np.linspace(0.0, cfg.tau, cfg.n_bins + 1)
    counts, _ = np.histogram(times, bins=edges)
    return Histogram(edges, counts.astype(np.int64), no_switch, cfg.n_traj)


def run_ensemble(p: DetectorParams, rho0: np.ndarray, cfg: SimConfig) -> Histogram:
    """Run cfg.n_traj independent trajectories and bin the switching times.

    Deterministic: identical (params, rho0, config) give identical
    histograms, and per-trajectory records are independent of ensemble
    size ordering, so partial histograms from parallel workers merge to
    the same result.
    """
    times, no_switch = sample_switch_times(p, rho0, cfg)
    return bin_switch_times(times, no_switch, cfg)


def merge_histograms(parts: list[Histogram]) -> Histogram:
    """Combine per-worker partial histograms over identical bin edges."""
    if not parts:
        raise ValueError("nothing to merge")
    edges = parts[0].bin_edges
    for h in parts[1:]:
        if not np.array_equal(h.bin_edges, edges):
            raise ValueError("histograms have different bin edges")
    return Histogram(
        edges,
        np.sum([h.counts for h in parts], axis=0).astype(np.int64),
        int(sum(h.no_switch_count for h in parts)),
        int(sum(h.total for h in parts)),
    )


def expected_cell_probabilities(
    h: Histogram, p: DetectorParams, rho0: np.ndarray
) -> np.ndarray:
    """Model probability of each histogram cell, no-switch cell last.

    Bin probabilities are exact survival differences, so no quadrature
    error enters the comparison.
    """
    surv = survival_function(p, rho0)
    s_edges = surv(h.bin_edges)
    probs = np.append(-np.diff(s_edges), s_edges[-1])
    return np.clip(probs, 0.0, None)


def chi2_vs_analytic(
    h: Histogram, p: DetectorParams, rho0: np.ndarray, min_expected: float = 5.0
) -> tuple[float, int, float]:
    """Pearson chi-squared of a histogram against the model distribution.

    Cells (bins plus the no-switch cell) with expected count below
    min_expected are merged into their neighbor before the statistic is
    formed.  Returns (statistic, dof, p_value).
    """
    if h.total <= 0 or (int(h.counts.sum()) + h.no_switch_count) <= 0:
        raise InsufficientCountsError("empty histogram")
    expected = expected_cell_probabilities(h, p, rho0) * h.total
    observed = np.append(h.counts, h.no_switch_count).astype(float)

    # merge adjacent low-expectation cells left to right; the no-switch
    # cell folds into the last time bin if it is itself too thin
    exp_m, obs_m = [], []
    acc_e = acc_o = 0.0
    for e, o in zip(expected, observed):
        acc_e += e
        acc_o += o
        if acc_e >= min_expected:
            exp_m.append(acc_e)
            obs_m.append(acc_o)
            acc_e = acc_o = 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if exp_m:
            exp_m[-1] += acc_e
            obs_m[-1] += acc_o
        else:
            exp_m.append(acc_e)
            obs_m.append(acc_o)
    if len(exp_m) < 2:
        raise InsufficientCountsError(
            "fewer than two cells with sufficient expected counts"
        )
    exp_arr = np.asarray(exp_m)
    obs_arr = np.asarray(obs_m)
    stat = float(np.sum((obs_arr - exp_arr) ** 2 / exp_arr))
    dof = len(exp_arr) - 1
    return stat, dof, float(chi2_dist.sf(stat, dof))


def write_histogram_csv(h: Histogram, path, time_scale: float = 1.0) -> None:
    """Write `bin_start,bin_end,count` rows with trailing metadata rows.

    Edge values are multiplied by time_scale (e.g. gamma_R to express times
    in units of 1/gamma_R).
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin_start,bin_end,count\n")
        for i, c in enumerate(h.counts):
            start = repr(float(h.bin_edges[i] * time_scale))
            end = repr(float(h.bin_edges[i + 1] * time_scale))
            fh.write(f"{start},{end},{int(c)}\n")
        fh.write(f"#no_switch,{h.no_switch_count}\n")
        fh.write(f"#total,{h.total}\n")


def read_histogram_csv(path, time_scale: float = 1.0) -> Histogram:
    """Inverse of write_histogram_csv (divides edges by time_scale)."""
    edges = []
    counts = []
    no_switch = total = None
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "bin_start,bin_end,count":
            raise ValueError(f"unexpected histogram header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#no_switch,"):
                no_switch = int(line.split(",")[1])
            elif line.startswith("#total,"):
                total = int(line.split(",")[1])
            else:
                start, end, count = line.split(",")
                if not edges:
                    edges.append(float(start) / time_scale)
                edges.append(float(end) / time_scale)
                counts.append(int(count))
    if no_switch is None or total is None:
        raise ValueError("histogram file missing #no_switch or #total rows")
    return Histogram(np.asarray(edges), np.asarray(counts, dtype=np.int64), no_switch, total)
