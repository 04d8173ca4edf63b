"""Incoherent two-state switching detector coupled to a qubit.

The detector probes the qubit operator at angle ``beta`` from the
Hamiltonian axis and switches irreversibly with rate ``gamma_L`` or
``gamma_R`` depending on which probe eigenstate the qubit occupies.  The
qubit state conditioned on the detector record evolves under non-unitary
propagators: one for "no switch so far", one for "switched in a known
short window".  Both are assembled here, together with the survival
probability and the switching-time density they imply.

Units: hbar = 1, rates and energies in inverse time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import StepTooLargeError
from .mat2 import IDENTITY, dag, normalize_phase, trace
from .tolerances import GENERATOR_DEGENERATE_TOL, STEP_FRACTION


@dataclass(frozen=True)
class DetectorParams:
    """Switching rates, probe angle and qubit energy splitting.

    ``gamma_plus`` and ``gamma_minus`` are always derived from the two bare
    rates, never stored, so they cannot drift out of sync.
    """

    gamma_L: float
    gamma_R: float
    beta: float
    E: float

    def __post_init__(self):
        for name in ("gamma_L", "gamma_R", "E"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not 0.0 <= self.beta <= math.pi:
            raise ValueError(f"beta must lie in [0, pi], got {self.beta}")

    @property
    def gamma_plus(self) -> float:
        return 0.5 * (self.gamma_R + self.gamma_L)

    @property
    def gamma_minus(self) -> float:
        return 0.5 * (self.gamma_R - self.gamma_L)


class ProbeBasis(NamedTuple):
    L: np.ndarray
    R: np.ndarray


def probe_basis(p: DetectorParams) -> ProbeBasis:
    """Eigenstates of the probed operator, expressed in the energy basis.

    L = cos(beta/2)|0> + sin(beta/2)|1>, R = sin(beta/2)|0> - cos(beta/2)|1>,
    phase-normalized so the first nonzero amplitude is real positive.
    """
    half = 0.5 * p.beta
    L = np.array([math.cos(half), math.sin(half)], dtype=complex)
    R = np.array([math.sin(half), -math.cos(half)], dtype=complex)
    return ProbeBasis(normalize_phase(L), normalize_phase(R))


def rate_matrix(p: DetectorParams) -> np.ndarray:
    """gamma_L |L><L| + gamma_R |R><R|: the switching-rate operator."""
    c = math.cos(p.beta)
    s = math.sin(p.beta)
    gp, gm = p.gamma_plus, p.gamma_minus
    # gamma_+ I - gamma_- (cos b sz + sin b sx); diagonal in the probe basis.
    return np.array(
        [[gp - gm * c, -gm * s], [-gm * s, gp + gm * c]], dtype=complex
    )


def _check_step(p: DetectorParams, dt: float) -> None:
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if max(p.gamma_L, p.gamma_R) * dt > 1.0:
        raise StepTooLargeError(
            f"rate*dt = {max(p.gamma_L, p.gamma_R) * dt} exceeds 1; "
            "the square-root switching amplitudes are undefined"
        )


def p_switch(p: DetectorParams, dt: float) -> np.ndarray:
    """Switching operator sqrt(gL dt)|L><L| + sqrt(gR dt)|R><R|."""
    _check_step(p, dt)
    basis = probe_basis(p)
    return math.sqrt(p.gamma_L * dt) * np.outer(basis.L, basis.L.conj()) + math.sqrt(
        p.gamma_R * dt
    ) * np.outer(basis.R, basis.R.conj())


def p_no_switch(p: DetectorParams, dt: float) -> np.ndarray:
    """No-switch operator sqrt(1-gL dt)|L><L| + sqrt(1-gR dt)|R><R|.

    The exact square-root form is used rather than its first-order
    expansion: it satisfies p_switch^2 + p_no_switch^2 = identity at any
    admissible step size, not just asymptotically.
    """
    _check_step(p, dt)
    basis = probe_basis(p)
    return math.sqrt(1.0 - p.gamma_L * dt) * np.outer(basis.L, basis.L.conj()) + math.sqrt(
        1.0 - p.gamma_R * dt
    ) * np.outer(basis.R, basis.R.conj())


def u_ham(p: DetectorParams, dt: float) -> np.ndarray:
    """Free-evolution unitary diag(e^{iE dt/2}, e^{-iE dt/2})."""
    phase = 0.5 * p.E * dt
    return np.array(
        [[np.exp(1j * phase), 0.0], [0.0, np.exp(-1j * phase)]], dtype=complex
    )


def generator(p: DetectorParams) -> np.ndarray:
    """Generator G of the no-switch propagator, dU/dt = G U."""
    gp, gm = p.gamma_plus, p.gamma_minus
    c = math.cos(p.beta)
    s = math.sin(p.beta)
    off = 0.5 * gm * s
    return np.array(
        [
            [0.5j * p.E - 0.5 * gp + 0.5 * gm * c, off],
            [off, -0.5j * p.E - 0.5 * gp - 0.5 * gm * c],
        ],
        dtype=complex,
    )


class _Propagator:
    """exp(G t) evaluated through the eigenstructure of G.

    Non-degenerate: exp(Gt) = e^{l+ t} W+ + e^{l- t} W- with spectral
    projectors W+-.  A (near-)defective G falls back to the exact
    single-eigenvalue form e^{lt} (I + (G - l)t).
    """

    def __init__(self, g: np.ndarray):
        mid = 0.5 * (g[0, 0] + g[1, 1])
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        root = np.sqrt(mid * mid - det)
        scale = max(abs(mid) + abs(root), 1e-300)
        self.degenerate = abs(2.0 * root) < GENERATOR_DEGENERATE_TOL * scale
        if self.degenerate:
            self.lam = mid
            self.nilpotent = g - mid * IDENTITY
        else:
            self.lam_hi = mid + root
            self.lam_lo = mid - root
            self.w_hi = (g - self.lam_lo * IDENTITY) / (2.0 * root)
            self.w_lo = (g - self.lam_hi * IDENTITY) / (-2.0 * root)

    def __call__(self, t):
        """Propagator at time(s) t; shape (..., 2, 2)."""
        t = np.asarray(t, dtype=float)
        if self.degenerate:
            base = np.exp(self.lam * t)[..., None, None]
            return base * (IDENTITY + t[..., None, None] * self.nilpotent)
        e_hi = np.exp(self.lam_hi * t)[..., None, None]
        e_lo = np.exp(self.lam_lo * t)[..., None, None]
        return e_hi * self.w_hi + e_lo * self.w_lo


def propagator(p: DetectorParams) -> _Propagator:
    """No-switch propagator as a reusable callable over time arrays."""
    return _Propagator(generator(p))


def u_ns(p: DetectorParams, t: float) -> np.ndarray:
    """No-switch propagator U_ns(t) = exp(G t) for a single time t >= 0."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    return propagator(p)(float(t))


def u_s(p: DetectorParams, t: float, dt: float) -> np.ndarray:
    """Propagator for: no switch during [0, t], switch within the next dt."""
    return p_switch(p, dt) @ u_ns(p, t)


def survival_function(
    p: DetectorParams, rho0: np.ndarray
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized S(t) = Tr{U_ns(t) rho0 U_ns(t)^dag}.

    Returns a callable accepting scalar or array t.  The trace reduces to a
    four-term exponential sum (or polynomial-times-exponential in the
    defective case), so evaluation over large time grids is cheap; the
    trajectory sampler leans on this.
    """
    prop = propagator(p)
    rho0 = np.asarray(rho0, dtype=complex)
    if prop.degenerate:
        lam2 = 2.0 * prop.lam.real
        n = prop.nilpotent
        a = trace(rho0).real
        b = 2.0 * trace(n @ rho0).real
        c = trace(n @ rho0 @ dag(n)).real

        def s_degenerate(t):
            t = np.asarray(t, dtype=float)
            return np.exp(lam2 * t) * (a + b * t + c * t * t)

        return s_degenerate

    lams = (prop.lam_hi, prop.lam_lo)
    ws = (prop.w_hi, prop.w_lo)
    mus = np.array([[lj + lk.conjugate() for lk in lams] for lj in lams])
    coef = np.array(
        [[trace(ws[k].conj().T @ ws[j] @ rho0) for k in range(2)] for j in range(2)]
    )

    def s(t):
        t = np.asarray(t, dtype=float)
        return np.real(
            np.einsum("jk,...jk->...", coef, np.exp(mus * t[..., None, None]))
        )

    return s


def survival_probability(p: DetectorParams, rho0: np.ndarray, t: float) -> float:
    """Probability that the detector has not switched by time t."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    val = float(survival_function(p, rho0)(float(t)))
    return min(max(val, 0.0), 1.0)


def switch_density(p: DetectorParams, rho0: np.ndarray, t: float) -> float:
    """Switching-time probability density -dS/dt at time t (units 1/time)."""
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    u = u_ns(p, t)
    m = dag(u) @ rate_matrix(p) @ u
    return max(float(trace(m @ np.asarray(rho0, dtype=complex)).real), 0.0)


def switch_density_function(
    p: DetectorParams, rho0: np.ndarray
) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized switching-time density; same structure as survival_function."""
    prop = propagator(p)
    rho0 = np.asarray(rho0, dtype=complex)
    gam = rate_matrix(p)
    if prop.degenerate:
        lam2 = 2.0 * prop.lam.real
        n = prop.nilpotent
        a = trace(gam @ rho0).real
        b = (trace(dag(n) @ gam @ rho0) + trace(gam @ n @ rho0)).real
        c = trace(dag(n) @ gam @ n @ rho0).real

        def d_degenerate(t):
            t = np.asarray(t, dtype=float)
            return np.maximum(np.exp(lam2 * t) * (a + b * t + c * t * t), 0.0)

        return d_degenerate

    lams = (prop.lam_hi, prop.lam_lo)
    ws = (prop.w_hi, prop.w_lo)
    mus = np.array([[lj.conjugate() + lk for lk in lams] for lj in lams])
    coef = np.array(
        [
            [trace(ws[j].conj().T @ gam @ ws[k] @ rho0) for k in range(2)]
            for j in range(2)
        ]
    )

    def d(t):
        t = np.asarray(t, dtype=float)
        return np.maximum(
            np.real(
                np.einsum("jk,...jk->...", coef, np.exp(mus * t[..., None, None]))
            ),
            0.0,
        )

    return d


def max_step(p: DetectorParams) -> float:
    """Largest admissible step for discretized no-switch evolution."""
    scales = [1.0 / v for v in (p.gamma_plus, p.E) if v > 0.0]
    return STEP_FRACTION * min(scales) if scales else math.inf


def u_ns_stepped(p: DetectorParams, t: float, n_steps: int) -> np.ndarray:
    """Discretized no-switch propagator: n alternating free/no-switch steps.

    First-order accurate in t/n; retained as an independent cross-check of
    the closed-form propagator.  The step must resolve both the precession
    and decay timescales.
    """
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    step = t / n_steps
    if step > max_step(p):
        raise StepTooLargeError(
            f"step {step} exceeds {max_step(p)}; increase n_steps"
        )
    a = u_ham(p, step) @ p_no_switch(p, step)
    return np.linalg.matrix_power(a, n_steps)
