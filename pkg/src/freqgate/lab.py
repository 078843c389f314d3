"""Virtual test bench: coherent-state probing of a hidden multiport.

The gate is characterized exactly as on a real bench: single-mode probes
give the d^2 moduli from measured output spectra, two-mode probes with a
scanned relative phase give interference fringes whose fitted phases fix
every matrix element in the gauge where the first row and column carry
phase zero. Insertion loss divides out by normalizing against the total
detected power over the whole lattice. A Poisson photon-counting layer
reproduces the weak-coherent-state interference measurement, including
detector dark counts and their mean subtraction.

All randomness is consumed through streams derived from (seed,
acquisition index), so scans are deterministic and order independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .lattice import ModeLattice, TransferMatrix, wrap_phase
from .multiport import fidelity, fixed_gauge, success_probability

TWO_PI = 2.0 * math.pi


def db_to_transmissivity(loss_db: float) -> float:
    """Insertion loss in dB (positive number) to a power transmissivity."""
    if loss_db < 0:
        raise ValueError("loss_db is a positive attenuation figure")
    return 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class VirtualApparatus:
    """A hidden transformation behind a lossy, noisy spectrum analyzer.

    ``osa_noise_sigma`` is the relative std of multiplicative power noise
    per bin per acquisition (clipped at five sigma).
    """

    truth: TransferMatrix
    insertion_loss: float = 1.0
    osa_noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.insertion_loss <= 1.0:
            raise ValueError("insertion_loss must be a transmissivity in (0, 1]")
        if not 0.0 <= self.osa_noise_sigma < 0.1:
            raise ValueError("osa_noise_sigma must lie in [0, 0.1)")

    @property
    def lattice(self) -> ModeLattice:
        return self.truth.lattice

    def _rng(self, acquisition: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(
            [self.seed & 0xFFFFFFFFFFFFFFFF, int(acquisition)]))

    def noise_factors(self, acquisition: int) -> NDArray[np.float64]:
        if self.osa_noise_sigma == 0.0:
            return np.ones(self.lattice.mode_count)
        sigma = self.osa_noise_sigma
        eps = self._rng(acquisition).normal(0.0, sigma, self.lattice.mode_count)
        return 1.0 + np.clip(eps, -5.0 * sigma, 5.0 * sigma)


@dataclass(frozen=True)
class ProbeState:
    """Complex mode amplitudes placed on the computational window."""

    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or not np.any(a != 0):
            raise ValueError("probe needs at least one nonzero amplitude")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def total_power(self) -> float:
        return float((np.abs(self.amplitudes) ** 2).sum())

    def field_vector(self, lattice: ModeLattice) -> NDArray[np.complex128]:
        if len(self.amplitudes) != lattice.computational_dim:
            raise ValueError("probe does not match the computational window")
        x = np.zeros(lattice.mode_count, dtype=complex)
        x[lattice.window] = self.amplitudes
        return x

    @staticmethod
    def single_mode(d: int, mode: int, power: float = 1.0) -> "ProbeState":
        a = np.zeros(d, dtype=complex)
        a[mode] = math.sqrt(power)
        return ProbeState(a)

    @staticmethod
    def pair(d: int, modes: tuple[int, int], phi: float, power: float = 1.0) -> "ProbeState":
        a = np.zeros(d, dtype=complex)
        a[modes[0]] = math.sqrt(power)
        a[modes[1]] = math.sqrt(power) * np.exp(1j * phi)
        return ProbeState(a)

    @staticmethod
    def phase_ramp(d: int, phi: float, power_per_mode: float = 1.0) -> "ProbeState":
        """Equal amplitudes with phases -n*phi, the scanned interference input."""
        n = np.arange(d)
        return ProbeState(math.sqrt(power_per_mode) * np.exp(-1j * n * phi))


@dataclass(frozen=True)
class Spectrum:
    """Per-bin optical powers over the whole lattice for one acquisition."""

    powers: NDArray[np.float64]
    acquisition: int = 0
    label: str = ""

    def __post_init__(self):
        p = np.asarray(self.powers, dtype=float)
        if np.any(p < 0):
            raise ValueError("spectral powers must be nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)

    @property
    def total(self) -> float:
        return float(self.powers.sum())


def measure_spectrum(app: VirtualApparatus, probe: ProbeState,
                     acquisition: int = 0) -> Spectrum:
    """Output power spectrum for one probe: eta * |V x|^2, with OSA noise."""
    x = probe.field_vector(app.lattice)
    y = app.truth.entries @ x
    powers = app.insertion_loss * np.abs(y) ** 2 * app.noise_factors(acquisition)
    return Spectrum(np.maximum(powers, 0.0), acquisition)


def reconstruct_amplitudes(spectra: list[Spectrum], lattice: ModeLattice) -> NDArray[np.float64]:
    """Window moduli r[m, n] from d single-mode-probe spectra.

    Each element is normalized by the probe's total detected power over
    all lattice modes, so insertion loss cancels exactly.
    """
    d = lattice.computational_dim
    if len(spectra) != d:
        raise ValueError(f"need one spectrum per input mode, got {len(spectra)} for d={d}")
    r = np.zeros((d, d))
    for n, spec in enumerate(spectra):
        total = spec.total
        if total <= 0.0:
            raise ZeroDivisionError(f"probe {n} produced no detected power")
        r[:, n] = np.sqrt(spec.powers[lattice.window] / total)
    return r


@dataclass(frozen=True)
class FringeTrace:
    """Powers (or counts) per output mode over a scanned relative phase."""

    phi: NDArray[np.float64]
    values: NDArray[np.float64]          # shape (K, n_modes)
    pair: tuple[int, int] = (0, 1)
    errors: NDArray[np.float64] | None = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[0] != phi.size:
            raise ValueError("values must have one row per phase sample")
        phi.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "values", vals)

    @property
    def samples(self) -> int:
        return self.phi.size

    def mode(self, m: int) -> NDArray[np.float64]:
        return self.values[:, m]


def phase_scan(app: VirtualApparatus, pair: tuple[int, int], samples: int,
               base_acquisition: int = 0, power_per_mode: float = 1.0) -> FringeTrace:
    """Scan the relative phase of a two-mode probe over [0, 2pi).

    Records the power in every computational output mode at each of the
    ``samples`` uniformly spaced phase settings.
    """
    lat = app.lattice
    d = lat.computational_dim
    ref, n = pair
    if ref != 0:
        raise ValueError("scans are referenced to input mode 0")
    if not 1 <= n <= d - 1:
        raise ValueError(f"scan partner must be one of modes 1..{d - 1}")
    if samples < 2 * (d - 1) + 2:
        raise ValueError("not enough phase samples to resolve the fringe harmonics")
    phi = TWO_PI * np.arange(samples) / samples
    values = np.empty((samples, d))
    for k, ph in enumerate(phi):
        probe = ProbeState.pair(d, (0, n), ph, power_per_mode)
        spec = measure_spectrum(app, probe, acquisition=base_acquisition + k)
        values[k] = spec.powers[lat.window]
    return FringeTrace(phi=phi, values=values, pair=(0, n))


def fit_fringe(phi: NDArray[np.float64], values: NDArray[np.float64],
               harmonic: int = 1) -> tuple[float, float, float]:
    """Fit y = offset + amplitude * cos(harmonic * phi + phase) on a uniform grid.

    Discrete-Fourier extraction: exact for noiseless single-harmonic
    data and the least-squares optimum for uniformly sampled noisy data.
    Returns (offset, amplitude, phase) with amplitude >= 0; a constant
    trace reports phase 0 by convention.
    """
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(values, dtype=float)
    K = phi.size
    if harmonic < 1 or 2 * harmonic >= K:
        raise ValueError(f"harmonic {harmonic} aliases on a {K}-point grid")
    offset = float(y.mean())
    z = 2.0 / K * (y * np.exp(-1j * harmonic * phi)).sum()
    amplitude = float(abs(z))
    if amplitude < 1e-12 * max(abs(offset), 1e-300):
        return offset, amplitude, 0.0
    return offset, amplitude, float(np.angle(z))


@dataclass(frozen=True)
class ReconstructedMultiport:
    """Gauge-fixed d x d transformation recovered from virtual measurements."""

    entries: NDArray[np.complex128]
    success_probability: float
    fidelity: float
    target_name: str

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        d = m.shape[0]
        if np.max(np.abs(np.angle(m[0, :]))) > 1e-12 or \
           np.max(np.abs(np.angle(m[:, 0]))) > 1e-12:
            raise ValueError("reconstruction must be in the zero first-row/column gauge")
        if (np.abs(m) ** 2).sum() > d * (1.0 + 1e-6):
            raise ValueError("reconstructed power exceeds the passive limit")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def moduli(self) -> NDArray[np.float64]:
        return np.abs(self.entries)

    @property
    def phases(self) -> NDArray[np.float64]:
        return np.angle(self.entries)


def reconstruct(app: VirtualApparatus, target, samples: int = 16) -> ReconstructedMultiport:
    """Full amplitude and phase characterization against a target gate.

    Runs d single-mode probes for the moduli, then d-1 two-mode phase
    scans against input mode 0; fringe phases fitted at harmonic 1 give
    the element phases relative to the first row and column.
    """
    lat = app.lattice
    d = lat.computational_dim
    if target.dim != d:
        raise ValueError("target dimension does not match the apparatus window")
    spectra = [measure_spectrum(app, ProbeState.single_mode(d, n), acquisition=n)
               for n in range(d)]
    moduli = reconstruct_amplitudes(spectra, lat)
    phases = np.zeros((d, d))
    for n in range(1, d):
        trace = phase_scan(app, (0, n), samples,
                           base_acquisition=d + (n - 1) * samples)
        fitted = np.array([fit_fringe(trace.phi, trace.mode(m), 1)[2] for m in range(d)])
        phases[:, n] = wrap_phase(fitted - fitted[0])
    entries = moduli * np.exp(1j * phases)
    entries[0, :] = np.abs(entries[0, :])
    entries[:, 0] = np.abs(entries[:, 0])
    P = success_probability(entries)
    F = fidelity(entries, target)
    return ReconstructedMultiport(entries=entries, success_probability=P,
                                  fidelity=F, target_name=target.name)


def embed_window_matrix(block: NDArray[np.complex128], lattice: ModeLattice) -> TransferMatrix:
    """Lift a measured d x d block onto the full lattice as a hidden truth.

    Any column-power deficit (the photons scattered outside the window in
    the original measurement) is re-attached to one dedicated sideband
    row per column, so total detected power per probe stays exact.
    """
    block = np.asarray(block, dtype=complex)
    d = lattice.computational_dim
    M = lattice.mode_count
    if block.shape != (d, d):
        raise ValueError(f"block must be {d}x{d}")
    if lattice.window_offset + 2 * d > M:
        raise ValueError("no room above the window for scatter sidebands")
    full = np.zeros((M, M), dtype=complex)
    w = lattice.window
    full[np.ix_(w, w)] = block
    deficit = 1.0 - (np.abs(block) ** 2).sum(axis=0)
    deficit = np.maximum(deficit, 0.0)
    for n in range(d):
        full[lattice.window_offset + d + n, w[n]] = math.sqrt(deficit[n])
    return TransferMatrix(full, lattice, unitary_flag=False)


@dataclass(frozen=True)
class Detector:
    """Gated single-photon detector parameters."""

    efficiency: float
    gate_rate_hz: float
    dark_rate_hz: float
    gate_duration_s: float = 1e-9

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.gate_rate_hz <= 0 or self.gate_duration_s <= 0:
            raise ValueError("gate rate and duration must be positive")
        if self.dark_rate_hz < 0:
            raise ValueError("dark rate must be nonnegative")


@dataclass(frozen=True)
class PhotonCountingScan:
    """Raw and dark-subtracted count fringes from a weak-coherent-state scan."""

    phi: NDArray[np.float64]
    counts: NDArray[np.float64]            # (K, d, repeats) raw counts per dwell
    dark_counts: NDArray[np.float64]       # (repeats,) laser-off dwell counts
    dwell_s: float

    @property
    def dark_mean(self) -> float:
        return float(self.dark_counts.mean())

    @property
    def mean_trace(self) -> NDArray[np.float64]:
        """Dark-subtracted mean counts per dwell, shape (K, d)."""
        return self.counts.mean(axis=2) - self.dark_mean

    @property
    def std_trace(self) -> NDArray[np.float64]:
        return self.counts.std(axis=2, ddof=1)

    def trace(self, mode: int) -> FringeTrace:
        return FringeTrace(phi=self.phi, values=self.mean_trace[:, [mode]],
                           errors=self.std_trace[:, [mode]])


def photon_counting_scan(app: VirtualApparatus, mean_photons_per_gate: float,
                         detector: Detector, dwell_s: float = 5.0, repeats: int = 5,
                         samples: int = 20) -> PhotonCountingScan:
    """Monte Carlo weak-coherent-state interference scan.

    The input is the equal-amplitude phase ramp over all window modes
    with total flux ``mean_photons_per_gate`` per detector gate at the
    gate input. Per phase setting and output mode, the detection
    probability per gate is 1 - exp(-mu * eta * q_m * efficiency) with
    q_m the mode's output power fraction; counts are Poisson per dwell.
    Dark counts are measured laser-off and their mean subtracted.
    """
    if mean_photons_per_gate <= 0:
        raise ValueError("mean photon number must be positive")
    if repeats < 1 or dwell_s <= 0:
        raise ValueError("dwell and repeats must be positive")
    lat = app.lattice
    d = lat.computational_dim
    phi = TWO_PI * np.arange(samples) / samples
    gates = detector.gate_rate_hz * dwell_s
    counts = np.empty((samples, d, repeats))
    for k, ph in enumerate(phi):
        probe = ProbeState.phase_ramp(d, ph, power_per_mode=1.0 / d)
        x = probe.field_vector(lat)
        y = app.truth.entries @ x
        q = np.abs(y[lat.window]) ** 2 / probe.total_power
        lam = mean_photons_per_gate * app.insertion_loss * q * detector.efficiency
        rate = gates * (1.0 - np.exp(-lam)) + detector.dark_rate_hz * dwell_s
        for rep in range(repeats):
            rng = app._rng(1_000_000 + k * repeats + rep)
            counts[k, :, rep] = rng.poisson(rate)
    dark_rng = app._rng(2_000_000)
    dark_counts = dark_rng.poisson(detector.dark_rate_hz * dwell_s, repeats).astype(float)
    return PhotonCountingScan(phi=phi, counts=counts, dark_counts=dark_counts,
                              dwell_s=dwell_s)


def visibility(phi: NDArray[np.float64], values: NDArray[np.float64],
               harmonics: int) -> float:
    """(max - min) / (max + min) of a truncated-Fourier fit to a fringe.

    The fit is  sum_{n=0..harmonics} A_n cos(n phi + B_n)  extracted by
    discrete Fourier analysis and evaluated on a fine grid. Noise pushing
    the fitted minimum below zero saturates the scale at 1.
    """
    y = np.asarray(values, dtype=float)
    if not np.any(y != 0):
        raise ZeroDivisionError("visibility of an all-zero trace is undefined")
    K = y.size
    if 2 * harmonics >= K:
        raise ValueError(f"{harmonics} harmonics alias on a {K}-point grid")
    fine = np.linspace(0.0, TWO_PI, 4096, endpoint=False)
    curve = np.full(fine.shape, float(y.mean()))
    for n in range(1, harmonics + 1):
        z = 2.0 / K * (y * np.exp(-1j * n * phi)).sum()
        curve += np.real(z * np.exp(1j * n * fine))
    top, bottom = float(curve.max()), float(curve.min())
    if top + bottom <= 0:
        return 1.0
    return min(1.0, (top - bottom) / (top + bottom))
