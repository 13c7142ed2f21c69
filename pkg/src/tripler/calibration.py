"""Power calibration between instrument plane and mode amplitudes.

The drive chain and the readout chain each hide an unknown linear factor
(line attenuation Att, system gain G).  All model predictions depend on
the drive chain only through the single combination

    X = Q_2ext * 10**(Att/10)

which is the one parameter fitted to measured power linecuts.  Drive
power here is the generator-plane quantity ``P_d = 3*hbar*omega*|B2|^2 *
10**(Att/10)`` (three quanta of the signal frequency per drive photon),
and the detected power is ``P_out = hbar*omega*|a1|^2 * 2*Gamma_1ext *
10**(G/10)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.optimize import minimize_scalar

from . import circuit, steady
from .errors import BelowThresholdError, ConvergenceError, NoSignalError


def dbm_to_watt(p_dbm):
    """P[W] from P[dBm] with the 1 mW reference."""
    return 1e-3 * np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def watt_to_dbm(p_w):
    """P[dBm] = 10*log10(P / 1 mW)."""
    return 10.0 * np.log10(np.asarray(p_w, dtype=float) / 1e-3)


def drive_power(b2_sq, att_db: float, omega: float):
    """Generator-plane drive power (W) from |B2|^2 (s^-1)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return 3.0 * HBAR * omega * np.asarray(b2_sq, dtype=float) \
        * 10.0 ** (att_db / 10.0)


def drive_amplitude_sq(p_d, att_db: float, omega: float):
    """Inverse of :func:`drive_power`: |B2|^2 (s^-1) from P_d (W)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return np.asarray(p_d, dtype=float) * 10.0 ** (-att_db / 10.0) \
        / (3.0 * HBAR * omega)


def output_power(a1_sq, gamma1_ext: float, gain_db: float, omega: float):
    """Detected power (W) of ``a1_sq`` photons emitted through the output port."""
    if gamma1_ext <= 0 or omega <= 0:
        raise ValueError("gamma1_ext and omega must be positive")
    return HBAR * omega * np.asarray(a1_sq, dtype=float) * 2.0 * gamma1_ext \
        * 10.0 ** (gain_db / 10.0)


def photon_number(p_out, gamma1_ext: float, gain_db: float, omega: float):
    """Inverse of :func:`output_power`."""
    return np.asarray(p_out, dtype=float) \
        / (HBAR * omega * 2.0 * gamma1_ext * 10.0 ** (gain_db / 10.0))


@dataclass(frozen=True)
class CalibrationChain:
    """Measurement-chain constants.

    ``att_db`` is the drive-line attenuation magnitude in dB (used as the
    factor 10**(att_db/10) that maps resonator-plane drive back to the
    generator plane); ``gain_db`` the output gain; ``noise_floor_w`` the
    detected noise power; ``x`` the fitted chain parameter when known;
    ``scale07`` the empirical ratio of the observed to the predicted
    maximum intensity.
    """

    gain_db: float
    noise_floor_w: float
    att_db: float | None = None
    x: float | None = None
    scale07: float = 0.7

    def __post_init__(self):
        if self.noise_floor_w <= 0:
            raise ValueError("noise floor must be positive")
        if not 0.0 < self.scale07 <= 1.0:
            raise ValueError("scale07 must lie in (0, 1]")


@dataclass(frozen=True)
class Linecut:
    """Measured output power versus drive power at fixed detuning and flux."""

    delta1: float            # rad/s
    flux: float              # flux quanta
    pd_w: np.ndarray
    pout_w: np.ndarray

    def __post_init__(self):
        pd = np.asarray(self.pd_w, dtype=float)
        po = np.asarray(self.pout_w, dtype=float)
        object.__setattr__(self, "pd_w", pd)
        object.__setattr__(self, "pout_w", po)
        if pd.shape != po.shape or pd.ndim != 1:
            raise ValueError("pd_w and pout_w must be matching 1-D arrays")
        if not np.all(np.diff(pd) > 0):
            raise ValueError("drive powers must be strictly increasing")
        if np.any(po < 0):
            raise ValueError("output powers must be non-negative")


@dataclass(frozen=True)
class _FluxCoeffs:
    """Mode coefficients at one flux, cached for linecut models."""

    omega1: float
    omega2: float
    anh: float
    alpha1: float
    Gamma1: float
    Gamma1_ext: float
    beta: float

    @classmethod
    def at(cls, params: circuit.CircuitParams, flux: float) -> "_FluxCoeffs":
        m1 = circuit.mode_profile(params, flux, 1)
        m2 = circuit.mode_profile(params, flux, 2)
        return cls(omega1=m1.omega, omega2=m2.omega,
                   anh=3.0 * m1.omega - m2.omega, alpha1=m1.alpha,
                   Gamma1=m1.gamma, Gamma1_ext=m1.gamma_ext,
                   beta=circuit.couplings(m1, m2).beta)


def pump_intensity(p_d, x: float, co: _FluxCoeffs, delta1: float):
    """Reduced pump intensity r2^2 from generator power, in the stiff-pump limit.

    r2^2 = beta^2*omega2*P_d / (3*hbar*omega*(3w1-w2)^2*X); the attenuation
    and the pump external Q enter only through X.
    """
    omega = co.omega1 + delta1
    return (co.beta**2 * co.omega2 * np.asarray(p_d, dtype=float)
            / (3.0 * HBAR * omega * co.anh**2 * x))


def _linecut_model(p_d, x: float, co: _FluxCoeffs, delta1: float,
                   gain_db: float, scale: float = 1.0):
    """Model detected power along a linecut for a given chain parameter."""
    delta = delta1 / co.alpha1
    gamma1 = co.Gamma1 / co.alpha1
    v = pump_intensity(p_d, x, co, delta1)
    window = steady.existence_window(delta, gamma1)
    out = np.zeros_like(np.asarray(p_d, dtype=float))
    if window is None:
        return out
    lo, hi = window
    mask = (v >= lo) & (v <= hi)
    if np.any(mask):
        disc = -v[mask] * delta - 1.75 * v[mask] ** 2 - gamma1**2
        r1 = -(delta + 1.5 * v[mask]) + np.sqrt(np.maximum(disc, 0.0))
        out[mask] = output_power(scale * r1, co.Gamma1_ext, gain_db,
                                 co.omega1 + delta1)
    return out


@dataclass(frozen=True)
class FitResult:
    """Single-parameter calibration fit output."""

    x: float
    x_sigma: float
    residual: float      # sum of squared residuals at the optimum (W^2)
    n_points: int
    curves: tuple        # model P_out per linecut at the fitted x


def fit_x(linecuts, params: circuit.CircuitParams, chain: CalibrationChain,
          bounds=(1e8, 1e16), min_points: int = 5) -> FitResult:
    """Least-squares fit of the chain parameter X to power linecuts.

    Uniform absolute-power weighting over the points above the noise
    floor; each linecut must contribute at least ``min_points`` such
    points.  The achieved 1-sigma uncertainty comes from the curvature of
    the residual near the optimum.
    """
    if not linecuts:
        raise NoSignalError("no linecuts supplied")
    prepared = []
    n_points = 0
    for lc in linecuts:
        co = _FluxCoeffs.at(params, lc.flux)
        mask = lc.pout_w > chain.noise_floor_w
        if int(mask.sum()) < min_points:
            raise NoSignalError(
                f"linecut at delta1={lc.delta1:.3g} has {int(mask.sum())} points "
                f"above the noise floor; need {min_points}")
        prepared.append((lc, co, mask))
        n_points += int(mask.sum())

    def rss(log10x: float) -> float:
        x = 10.0 ** log10x
        total = 0.0
        for lc, co, mask in prepared:
            model = _linecut_model(lc.pd_w[mask], x, co, lc.delta1, chain.gain_db)
            total += float(np.sum((model - lc.pout_w[mask]) ** 2))
        return total

    lo, hi = math.log10(bounds[0]), math.log10(bounds[1])
    grid = np.linspace(lo, hi, 161)
    vals = np.array([rss(g) for g in grid])
    k = int(np.argmin(vals))
    if k in (0, len(grid) - 1):
        raise ConvergenceError("objective minimized at the search boundary",
                               diagnostics={"bounds": bounds})
    res = minimize_scalar(rss, bracket=(grid[k - 1], grid[k], grid[k + 1]),
                          method="brent", options={"xtol": 1e-12})
    if not res.success:
        raise ConvergenceError("chain-parameter fit did not converge",
                               diagnostics={"message": res.message})
    x = 10.0 ** res.x
    # 1-sigma from the curvature of chi^2 with respect to x itself
    h = 1e-4 * x
    chi = rss(res.x)
    curv = (rss(math.log10(x + h)) - 2.0 * chi + rss(math.log10(x - h))) / h**2
    dof = max(n_points - 1, 1)
    sigma = math.sqrt(2.0 * (chi / dof) / curv) if curv > 0 else math.inf
    curves = tuple(_linecut_model(lc.pd_w, x, co, lc.delta1, chain.gain_db)
                   for lc, co, _ in prepared)
    return FitResult(x=x, x_sigma=sigma, residual=chi, n_points=n_points,
                     curves=curves)


def predict_max_output(params: circuit.CircuitParams, flux: float,
                       delta1: float, chain: CalibrationChain) -> float:
    """Peak detected power (W) at a detuning past threshold.

    The predicted peak intensity is scaled by the empirical ``scale07``
    before conversion to detected power.
    """
    co = _FluxCoeffs.at(params, flux)
    delta = delta1 / co.alpha1
    gamma1 = co.Gamma1 / co.alpha1
    r1_max, _ = steady.max_intensity(delta, gamma1)   # raises above threshold
    return float(output_power(chain.scale07 * r1_max, co.Gamma1_ext,
                              chain.gain_db, co.omega1 + delta1))


def visible_threshold(params: circuit.CircuitParams, flux: float,
                      chain: CalibrationChain) -> float:
    """Detuning (rad/s, negative) where oscillations first become visible.

    The true existence threshold is -sqrt(7)*Gamma1(flux); when the peak
    output there is below the noise floor, visibility starts deeper in the
    red, where the predicted peak power crosses the floor.  Returns the
    larger magnitude of the two.
    """
    co = _FluxCoeffs.at(params, flux)
    true_th = steady.THRESHOLD_FACTOR * co.Gamma1

    def peak(mag):
        return predict_max_output(params, flux, -mag, chain)

    if peak(true_th * (1.0 + 1e-12)) >= chain.noise_floor_w:
        return -true_th
    hi = true_th * 2.0
    for _ in range(200):
        if peak(hi) >= chain.noise_floor_w:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("noise floor never crossed",
                               diagnostics={"flux": flux, "last": hi})
    lo = true_th
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if peak(mid) >= chain.noise_floor_w:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return -0.5 * (lo + hi)


@dataclass(frozen=True)
class RegionMap:
    """Existence classification over a drive-power/detuning grid.

    ``labels`` is "I" where no excited state exists and "exists" in the
    region II+III where one does (which part of it the system actually
    occupies is a noise-dynamics question beyond this map).  The boundary
    array carries the maximum drive power per detuning column (NaN above
    threshold).
    """

    delta1: np.ndarray
    pd_w: np.ndarray
    labels: np.ndarray       # shape (len(delta1), len(pd_w)), dtype object/str
    boundary_pd_w: np.ndarray


def region_map(params: circuit.CircuitParams, flux: float,
               chain: CalibrationChain, delta1_grid, pd_grid_w,
               threads: int = 1) -> RegionMap:
    """Classify a (detuning x drive power) grid and trace the upper boundary.

    Requires the fitted ``chain.x``.  A cell supports excited states when
    its detuning is past threshold and the stiff-pump intensity falls
    inside the existence window; the boundary polyline is the closed-form
    maximum drive power restored to generator-plane watts through X.
    Detuning columns are independent and split across ``threads`` workers.
    """
    if chain.x is None:
        raise ValueError("region_map needs the fitted chain parameter x")
    d1 = np.asarray(delta1_grid, dtype=float)
    pd = np.asarray(pd_grid_w, dtype=float)
    if d1.size == 0 or pd.size == 0 or np.any(pd <= 0):
        raise ValueError("grids must be non-empty and powers positive")
    co = _FluxCoeffs.at(params, flux)
    labels = np.full((d1.size, pd.size), "I", dtype=object)
    boundary = np.full(d1.size, np.nan)

    def column(i):
        dd = d1[i]
        delta = dd / co.alpha1
        gamma1 = co.Gamma1 / co.alpha1
        window = steady.existence_window(delta, gamma1)
        if window is None:
            return
        v = pump_intensity(pd, chain.x, co, dd)
        inside = (v >= window[0]) & (v <= window[1])
        labels[i, inside] = "exists"
        # generator power at the closed-form maximum drive, via X only:
        # P_d,max = 3*hbar*omega * (4*Delta^2*|delta|*alpha1^2/(7*beta^2*omega2)) * X
        omega = co.omega1 + dd
        big_delta = co.anh / co.alpha1
        bmax_times_att = (4.0 * big_delta**2 * abs(delta) * co.alpha1**2
                          / (7.0 * co.beta**2 * co.omega2)) * chain.x
        boundary[i] = 3.0 * HBAR * omega * bmax_times_att

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(column, range(d1.size)))
    else:
        for i in range(d1.size):
            column(i)
    return RegionMap(delta1=d1, pd_w=pd, labels=labels, boundary_pd_w=boundary)
