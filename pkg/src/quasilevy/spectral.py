"""Spectral triplets of separated discrete laws.

A discrete law whose characteristic function f is separated from zero has
a global distinguished logarithm, and Ln f is an almost periodic function
whose Fourier coefficients live on the support module.  Numerically this
becomes: lift f to the torus, unwrap the phase along the grid, peel off
the integer winding numbers, and read the remaining coefficients from a
DFT.  The winding numbers give the shift gamma as an exact integer
combination of the basis; the DFT coefficients give the real spectral
weights lambda_u with an l1 tail that is tracked explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import numpy as np

from .charfn import SeparationParams, cf_eval, require_separated, torus_lift
from .errors import NonConvergent, NonpositiveTau, StepTooCoarse, ZeroOnPath
from .measures import (
    Coords,
    DiscreteLaw,
    FrequencyBasis,
    Scalar,
    is_exact,
    lattice_masses,
    to_lattice_form,
)

TWO_PI = 2.0 * math.pi
DEFAULT_STEP_GUARD = 0.9 * math.pi
LAMBDA_DROP_TOL = 1e-13
REAL_PART_TOL = 1e-10


# --- distinguished logarithm along sampled paths -----------------------------


def distinguished_log(values, step_guard: float = DEFAULT_STEP_GUARD, zero_tol: float = 1e-12) -> np.ndarray:
    """Continuous branch of log along a sampled path starting at 1.

    The phase is integrated from the wrapped increments arg(v_{j+1}/v_j);
    that is only the true continuous branch if every increment stays below
    the guard, so an increment >= step_guard raises StepTooCoarse and the
    caller must refine its sampling.
    """
    vals = np.asarray(values, dtype=complex)
    mods = np.abs(vals)
    if np.any(mods < zero_tol):
        raise ZeroOnPath(f"path modulus fell below {zero_tol}")
    if abs(vals[0] - 1.0) > 1e-9:
        raise ValueError("path must start at 1")
    dphi = np.angle(vals[1:] / vals[:-1])
    if dphi.size and float(np.max(np.abs(dphi))) >= step_guard:
        raise StepTooCoarse(
            f"adjacent phase jump {float(np.max(np.abs(dphi))):.4f} >= guard {step_guard:.4f}"
        )
    phase = np.empty(len(vals))
    phase[0] = 0.0
    np.cumsum(dphi, out=phase[1:])
    return np.log(mods) + 1j * phase


def winding_number(loop_values, step_guard: float = DEFAULT_STEP_GUARD) -> int:
    """Integer phase increment (in turns) around a closed sampled loop."""
    vals = np.asarray(loop_values, dtype=complex)
    dphi = np.angle(np.roll(vals, -1) / vals)
    if float(np.max(np.abs(dphi))) >= step_guard:
        raise StepTooCoarse("loop sampled too coarsely for a reliable winding number")
    total = float(np.sum(dphi))
    m = round(total / TWO_PI)
    if abs(total - TWO_PI * m) > 1e-6:
        raise StepTooCoarse(f"loop phase increment {total} is not close to a multiple of 2*pi")
    return m


# --- triplet container ---------------------------------------------------------


class QuasiTriplet:
    """The pair (gamma, {lambda_u}) over a frequency basis, plus a tail bound.

    gamma_coords are integers, so gamma = sum_j m_j alpha_j lies in the
    support module exactly.  lambdas maps nonzero integer frequency vectors
    l (i.e. u = sum_j l_j alpha_j) to real weights.  tail_bound is a
    certified bound on the l1 mass of everything not stored.
    """

    __slots__ = ("basis", "gamma_coords", "_lambdas", "tail_bound", "diagnostics")

    def __init__(
        self,
        basis: FrequencyBasis,
        gamma_coords: Iterable[int],
        lambdas: Mapping[Coords, float],
        tail_bound: float = 0.0,
        diagnostics: Optional[dict] = None,
    ):
        self.basis = basis
        self.gamma_coords = tuple(int(c) for c in gamma_coords)
        if len(self.gamma_coords) != basis.d:
            raise ValueError("gamma_coords must match the basis dimension")
        clean: dict[Coords, float] = {}
        for coords, lam in lambdas.items():
            coords = tuple(int(c) for c in coords)
            if all(c == 0 for c in coords):
                raise ValueError("zero frequency must not be stored; its weight is derived")
            clean[coords] = float(lam)
        self._lambdas = MappingProxyType(clean)
        self.tail_bound = float(tail_bound)
        self.diagnostics = diagnostics or {}

    @property
    def lambdas(self) -> Mapping[Coords, float]:
        return self._lambdas

    @property
    def d(self) -> int:
        return self.basis.d

    def gamma_value(self) -> Scalar:
        return self.basis.value(self.gamma_coords)

    def frequency_value(self, coords: Coords) -> Scalar:
        return self.basis.value(coords)

    def ell1(self) -> float:
        return float(sum(abs(v) for v in self._lambdas.values()))

    def frequency_items(self) -> list[tuple[float, Coords, float]]:
        """(u value, coords, lambda) sorted by (|u|, sign, coords)."""
        items = [(float(self.basis.value(c)), c, lam) for c, lam in self._lambdas.items()]
        items.sort(key=lambda e: (abs(e[0]), 0 if e[0] < 0 else 1, e[1]))
        return items

    def __eq__(self, other):
        if not isinstance(other, QuasiTriplet):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.gamma_coords == other.gamma_coords
            and dict(self._lambdas) == dict(other.lambdas)
            and self.tail_bound == other.tail_bound
        )

    def __repr__(self):
        return (
            f"QuasiTriplet(gamma={self.gamma_coords}, {len(self._lambdas)} frequencies, "
            f"tail<={self.tail_bound:.2e})"
        )


def cf_from_triplet(triplet: QuasiTriplet, t):
    """exp(i*t*gamma + sum lambda_u (e^(i*t*u) - 1)) for scalar or array t."""
    t_arr = np.asarray(t, dtype=float)
    gamma = float(triplet.gamma_value())
    us = np.array([float(triplet.basis.value(c)) for c in triplet.lambdas], dtype=float)
    lams = np.array(list(triplet.lambdas.values()), dtype=float)
    expo = 1j * t_arr * gamma
    if us.size:
        expo = expo + (np.exp(1j * np.multiply.outer(t_arr, us)) - 1.0) @ lams
    out = np.exp(expo)
    return complex(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass
class TripletParams:
    """Grid and tolerance knobs for triplet extraction.

    n_init None picks 1024 samples per axis for d <= 2 and 128 for d = 3;
    the grid doubles until the phase steps, the aliasing guard, and the
    reconstruction residual all pass, or n_max is exceeded.
    """

    n_init: Optional[int] = None
    tol: float = 1e-10
    n_max: int = 1 << 17
    drop_tol: float = LAMBDA_DROP_TOL
    separation: Optional[SeparationParams] = None

    def initial_n(self, d: int, spread: int) -> int:
        n = self.n_init if self.n_init is not None else (1024 if d <= 2 else 128)
        while n < 4 * (spread + 1):
            n *= 2
        return n


# --- lattice (d = 1, arithmetic-progression support) ---------------------------


def _lattice_arrays(law: DiscreteLaw) -> tuple[np.ndarray, int]:
    """Masses re-indexed from 0 on the lattice, plus the index spread."""
    masses = lattice_masses(law)
    lmin = min(masses)
    spread = max(masses) - lmin
    q = np.zeros(spread + 1)
    for l, m in masses.items():
        q[l - lmin] = float(m)
    return q, lmin


def _lattice_pass(q: np.ndarray, n: int, params: TripletParams):
    """One lattice extraction attempt at grid size n; None if n must double."""
    g = n * np.fft.ifft(q, n)  # g(theta_j) = sum_l q_l e^(i l theta_j)
    mods = np.abs(g)
    if float(mods.min()) < 1e-13:
        raise ZeroOnPath("characteristic function vanishes on the sampling grid")
    dphi = np.angle(np.roll(g, -1) / g)
    if float(np.max(np.abs(dphi))) >= 0.5 * math.pi:
        return None
    m = round(float(np.sum(dphi)) / TWO_PI)
    phase = np.empty(n)
    phase[0] = 0.0
    np.cumsum(dphi[:-1], out=phase[1:])
    theta = TWO_PI * np.arange(n) / n
    h = np.log(mods) + 1j * (phase - m * theta)
    coeffs = np.fft.fft(h) / n
    freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)

    nonzero = freqs != 0
    if float(np.max(np.abs(coeffs[nonzero].imag), initial=0.0)) > REAL_PART_TOL:
        return None  # phase-unwrap fault; refine
    outer = np.abs(freqs) > (3 * n) // 8
    alias_mass = float(np.sum(np.abs(coeffs[outer & nonzero])))
    if alias_mass > params.tol:
        return None

    lam = coeffs.real.copy()
    keep = nonzero & (np.abs(coeffs) >= params.drop_tol)
    dropped = float(np.sum(np.abs(coeffs[nonzero & ~keep])))

    masked = np.where(keep, coeffs.real, 0.0).astype(complex)
    masked[0] = -float(np.sum(lam[keep]))
    s_grid = n * np.fft.ifft(masked)
    g_rec = np.exp(s_grid + 1j * m * theta)
    q_rec = np.fft.fft(g_rec) / n
    q_pad = np.zeros(n, dtype=complex)
    q_pad[: len(q)] = q
    residual = float(np.sum(np.abs(q_rec - q_pad)))
    if residual > params.tol:
        return None

    lambdas = {int(k): float(lam[i]) for i, k in enumerate(freqs) if keep[i]}
    return m, lambdas, dropped + alias_mass, residual, float(np.max(np.abs(coeffs[nonzero].imag), initial=0.0))


def triplet_lattice(
    law: DiscreteLaw,
    params: TripletParams | None = None,
    input_tv_error: float = 0.0,
) -> QuasiTriplet:
    """Triplet of a law on an arithmetic progression a + b*Z.

    Separation is certified first.  gamma = a + b*m with m the winding
    number of the period function; lambda_{b*k} comes from the DFT of the
    distinguished log minus the winding term.  The grid doubles until the
    phase steps, the alias guard, and the reconstruction residual pass.
    input_tv_error is the total-variation error of an upstream support
    truncation; it enters tail_bound through the Wiener-norm log bound.
    """
    if params is None:
        params = TripletParams()
    law = to_lattice_form(law)
    cert = require_separated(law, params.separation)
    lf = law.lattice_form
    q, lmin = _lattice_arrays(law)

    n = params.initial_n(1, len(q) - 1)
    result = None
    while n <= params.n_max:
        result = _lattice_pass(q, n, params)
        if result is not None:
            break
        n *= 2
    if result is None:
        raise NonConvergent(f"lattice triplet did not converge by n_max={params.n_max}")
    m_g, lambdas_k, tail, residual, max_imag = result

    span = lf.span_coord
    offset = lf.offset_coord + span * lmin  # index 0 sits at lmin, not at the lattice origin
    gamma_coords = (offset + span * m_g,)
    lambdas = {(span * k,): v for k, v in lambdas_k.items()}
    tail += _truncation_tail(input_tv_error, sum(abs(v) for v in lambdas_k.values()))
    return QuasiTriplet(
        law.basis,
        gamma_coords,
        lambdas,
        tail_bound=tail,
        diagnostics={
            "grid_n": n,
            "residual": residual,
            "max_imag": max_imag,
            "winding": m_g,
            "certificate": cert,
        },
    )


def _truncation_tail(input_tv_error: float, ell1: float) -> float:
    """l1 bound on spectral mass missed by truncating the input law.

    If the supplied law approximates a larger one within input_tv_error in
    total variation, the log of the ratio has Wiener norm at most
    -log(1 - input_tv_error * exp(2*ell1)).
    """
    if input_tv_error == 0.0:
        return 0.0
    qv = input_tv_error * math.exp(2.0 * ell1)
    if qv >= 1.0:
        raise NonConvergent(
            "input truncation too coarse: cannot bound the spectral tail "
            f"(tv_error={input_tv_error}, ell1={ell1})"
        )
    return -math.log1p(-qv)


# --- general basis (d >= 1) ------------------------------------------------------


def _unwrap_grid(phase: np.ndarray) -> np.ndarray:
    """Continuous phase on a sampled cube, seeded from the theta=0 corner."""
    def wrap(x):
        return np.angle(np.exp(1j * x))

    if phase.ndim == 1:
        out = np.empty_like(phase)
        out[0] = phase[0]
        out[1:] = phase[0] + np.cumsum(wrap(np.diff(phase)))
        return out
    plane = _unwrap_grid(phase[0])
    out = np.concatenate(
        [phase[:1], phase[:1] + np.cumsum(wrap(np.diff(phase, axis=0)), axis=0)], axis=0
    )
    out += (plane - phase[0])[None, ...]
    return out


def triplet_multibasis(
    law: DiscreteLaw,
    params: TripletParams | None = None,
    input_tv_error: float = 0.0,
) -> QuasiTriplet:
    """Triplet over a declared d-dimensional frequency basis.

    The d = 1 case agrees with triplet_lattice (same frequency coords,
    same exact gamma); for d >= 2 the winding numbers are read off the
    axis loops of the torus lift and the weights from the d-dimensional
    DFT of its distinguished log.
    """
    if params is None:
        params = TripletParams()
    cert = require_separated(law, params.separation)
    phi = torus_lift(law)
    d = phi.d
    coords_arr = np.array(list(law.atoms.keys()), dtype=int)
    spread = int(np.max(coords_arr.max(axis=0) - coords_arr.min(axis=0), initial=0))

    n = params.initial_n(d, spread)
    while n <= params.n_max:
        if n ** d > (1 << 22):
            raise NonConvergent(f"grid {n}^{d} exceeds the memory budget")
        axis = TWO_PI * np.arange(n) / n
        vals = phi.eval_grid([axis] * d)
        mods = np.abs(vals)
        if float(mods.min()) < 1e-13:
            raise ZeroOnPath("torus lift vanishes on the sampling grid")

        jump_ok = True
        for j in range(d):
            dphi = np.angle(np.roll(vals, -1, axis=j) / vals)
            if float(np.max(np.abs(dphi))) >= 0.5 * math.pi:
                jump_ok = False
                break
        if not jump_ok:
            n *= 2
            continue

        windings = []
        for j in range(d):
            idx = tuple(slice(None) if i == j else 0 for i in range(d))
            windings.append(winding_number(vals[idx]))
        m_vec = np.array(windings)

        theta_sum = np.zeros([n] * d)
        for j in range(d):
            shape = [1] * d
            shape[j] = n
            theta_sum = theta_sum + m_vec[j] * axis.reshape(shape)
        h = np.log(mods) + 1j * (_unwrap_grid(np.angle(vals)) - theta_sum)

        coeffs = np.fft.fftn(h) / n ** d
        freqs = np.fft.fftfreq(n, d=1.0 / n).astype(int)
        grids = np.meshgrid(*([freqs] * d), indexing="ij")
        zero_mask = np.ones([n] * d, dtype=bool)
        outer_mask = np.zeros([n] * d, dtype=bool)
        for gk in grids:
            zero_mask &= gk == 0
            outer_mask |= np.abs(gk) > (3 * n) // 8
        nonzero = ~zero_mask

        max_imag = float(np.max(np.abs(coeffs.imag[nonzero]), initial=0.0))
        alias_mass = float(np.sum(np.abs(coeffs[outer_mask & nonzero])))
        if max_imag > REAL_PART_TOL or alias_mass > params.tol:
            n *= 2
            continue

        keep = nonzero & (np.abs(coeffs) >= params.drop_tol)
        dropped = float(np.sum(np.abs(coeffs[nonzero & ~keep])))

        masked = np.where(keep, coeffs.real, 0.0).astype(complex)
        masked[(0,) * d] = -float(np.sum(coeffs.real[keep]))
        s_grid = (n ** d) * np.fft.ifftn(masked)
        g_rec = np.exp(s_grid + 1j * theta_sum)
        q_rec = np.fft.fftn(g_rec) / n ** d
        q_pad = np.zeros([n] * d, dtype=complex)
        for ck, p in zip(coords_arr, phi.masses):
            q_pad[tuple(int(c) % n for c in ck)] += p
        residual = float(np.sum(np.abs(q_rec - q_pad)))
        if residual > params.tol:
            n *= 2
            continue

        kept_idx = np.argwhere(keep)
        lambdas = {
            tuple(int(freqs[i]) for i in idx): float(coeffs.real[tuple(idx)]) for idx in kept_idx
        }
        tail = dropped + alias_mass
        tail += _truncation_tail(input_tv_error, sum(abs(v) for v in lambdas.values()))
        return QuasiTriplet(
            law.basis,
            tuple(int(mj) for mj in m_vec),
            lambdas,
            tail_bound=tail,
            diagnostics={
                "grid_n": n,
                "residual": residual,
                "max_imag": max_imag,
                "winding": tuple(int(mj) for mj in m_vec),
                "certificate": cert,
            },
        )
    raise NonConvergent(f"multibasis triplet did not converge by n_max={params.n_max}")


# --- derived quantities --------------------------------------------------------


@dataclass(frozen=True)
class MeanMotion:
    """Exact shift from the triplet next to path-based Arg f(T)/T estimates."""

    exact: float
    estimates: tuple[tuple[float, float], ...]
    deviation_bound: float  # (ell1 + tail) / T majorizes |estimate - exact| at each T

    def final_estimate(self) -> float:
        return self.estimates[-1][1]


def mean_motion(
    law: DiscreteLaw,
    triplet: QuasiTriplet,
    t_schedule: Iterable[float] = (16.0, 64.0, 256.0, 1024.0),
) -> MeanMotion:
    """Mean motion of Arg f: the exact gamma and its long-window estimates.

    The estimate integrates the phase of f along [0, T] with adaptive
    refinement, so it never consults the triplet's weights; agreement
    within (ell1 + tail)/T is a genuine cross-check of gamma.
    """
    schedule = sorted(float(t) for t in t_schedule)
    amp = sum(float(m) * abs(float(law.basis.value(c))) for c, m in law.atoms.items())
    estimates = []
    for t_end in schedule:
        step = min(0.2, 0.45 / max(amp, 1e-9))
        while True:
            ts = np.linspace(0.0, t_end, max(int(t_end / step) + 2, 16))
            try:
                logs = distinguished_log(cf_eval(law, ts))
                break
            except StepTooCoarse:
                step *= 0.5
                if step < 1e-7:
                    raise
        estimates.append((t_end, float(logs[-1].imag) / t_end))
    return MeanMotion(
        exact=float(triplet.gamma_value()),
        estimates=tuple(estimates),
        deviation_bound=triplet.ell1() + triplet.tail_bound,
    )


def gamma_tau(triplet: QuasiTriplet, tau: float) -> float:
    """Mean motion on [0, tau]: gamma + (1/tau) sum lambda_u sin(tau*u)."""
    if not tau > 0:
        raise NonpositiveTau(f"tau must be positive, got {tau}")
    total = float(triplet.gamma_value())
    for coords, lam in triplet.lambdas.items():
        total += lam * math.sin(tau * float(triplet.basis.value(coords))) / tau
    return total


class SpectralFunction:
    """Two-sided step function built from the spectral jumps.

    For u < 0 it accumulates the weights at frequencies <= u; for u > 0 it
    is minus the weight mass strictly above u.  Both tails vanish exactly
    beyond the extreme jump.
    """

    def __init__(self, jumps: Iterable[tuple[float, float]]):
        self.jumps = tuple(sorted((float(u), float(lam)) for u, lam in jumps))
        if any(u == 0 for u, _ in self.jumps):
            raise ValueError("spectral jumps live on R \\ {0}")

    def __call__(self, u: float) -> float:
        if u == 0:
            raise ValueError("the spectral function is defined on R \\ {0}")
        if u < 0:
            return sum(lam for uk, lam in self.jumps if uk <= u)
        return -sum(lam for uk, lam in self.jumps if uk > u)

    def variation_outside(self, r: float) -> float:
        if not r > 0:
            raise ValueError("r must be positive")
        return sum(abs(lam) for uk, lam in self.jumps if abs(uk) >= r)


def levy_spectral_function(triplet: QuasiTriplet) -> SpectralFunction:
    return SpectralFunction(
        (float(triplet.basis.value(c)), lam) for c, lam in triplet.lambdas.items()
    )


# --- support truncation helper ----------------------------------------------------


def truncate_renormalize(law: DiscreteLaw, n_atoms: int) -> tuple[DiscreteLaw, float]:
    """Keep the n heaviest atoms, renormalize, and bound the CF error.

    Returns the truncated law and a sup-norm bound on |f - f_n| over all
    real t, namely twice the dropped mass; feed that bound to the triplet
    extractors as input_tv_error so it lands in tail_bound.
    """
    if n_atoms < 1:
        raise ValueError("keep at least one atom")
    ranked = sorted(law.atoms.items(), key=lambda kv: (-float(kv[1]), kv[0]))
    kept = ranked[:n_atoms]
    total = sum(m for _, m in kept)
    dropped = 1 - total if is_exact(total) else max(0.0, 1.0 - float(total))
    if is_exact(total):
        atoms = [(c, Fraction(m) / total) for c, m in kept]
    else:
        atoms = [(c, float(m) / float(total)) for c, m in kept]
    truncated = DiscreteLaw.from_pairs(law.basis, atoms)
    return truncated, 2.0 * float(dropped)
