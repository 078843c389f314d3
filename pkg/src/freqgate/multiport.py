"""Matrix machinery for frequency-bin multiports.

A phase modulator driven periodically at the bin spacing acts on mode
amplitudes as a circulant Toeplitz matrix: entry (m, n) equals the
Fourier coefficient

    c_k = (1/T) * integral_T exp(i*phi(t)) * exp(i*k*dw*t) dt,   k = m - n,

so a drive couples every mode n to n + k with the same weight. The
pulse shaper is diagonal in the frequency basis. The full gate is the
cascade  EOM -> shaper -> EOM, composed here with orthonormal FFTs.

Convention: the DFT matrix is F[j, k] = exp(-2*pi*i*j*k/M) / sqrt(M),
and the modulator's frequency-basis operator is F^dag diag(e^{i phi}) F,
which reproduces the integral above exactly on the discrete lattice
(e.g. a single positive sine tone gives c_1 = -J_1(beta) at theta = 0).
"""
from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from .lattice import (
    CONSTRUCTION_TOL,
    ModeLattice,
    FourierDrive,
    GateTarget,
    ShaperPattern,
    TransferMatrix,
    wrap_phase,
)

__all__ = [
    "dft_matrix",
    "eom_diagonal",
    "shaper_diagonal",
    "toeplitz_from_drive",
    "compose_cascade",
    "cascade_columns",
    "truncate",
    "success_probability",
    "fidelity",
    "fixed_gauge",
    "scatter_bound",
    "single_eom_ceiling",
    "hadamard_target",
    "dft_target",
    "rf_power_dbm",
    "NO_DRIVE_DBM",
]


def dft_matrix(M: int) -> NDArray[np.complex128]:
    """Unitary DFT matrix F[j, k] = exp(-2*pi*i*j*k/M) / sqrt(M)."""
    if M < 1:
        raise ValueError("M must be a positive integer")
    j = np.arange(M)
    return np.exp(-2j * np.pi * np.outer(j, j) / M) / math.sqrt(M)


def eom_diagonal(drive: FourierDrive, M: int) -> NDArray[np.complex128]:
    """Time-basis diagonal exp(i*phi(t_j)), one period sampled at M points."""
    if M < 1:
        raise ValueError("M must be a positive integer")
    return np.exp(1j * drive.phase_samples(M))


def shaper_diagonal(shaper: ShaperPattern, M: int) -> NDArray[np.complex128]:
    if shaper.mode_count != M:
        raise ValueError(f"shaper sized for {shaper.mode_count} modes, lattice has {M}")
    return shaper.diagonal()


def _eom_frequency_operator(drive: FourierDrive, M: int) -> NDArray[np.complex128]:
    # F^dag D F applied to the identity, via orthonormal FFTs
    D = eom_diagonal(drive, M)
    cols = np.fft.fft(np.eye(M, dtype=complex), axis=0, norm="ortho")
    return np.fft.ifft(D[:, None] * cols, axis=0, norm="ortho")


def toeplitz_from_drive(drive: FourierDrive, M: int) -> TransferMatrix:
    """Single-modulator operator in the frequency basis.

    The result is circulant on the finite lattice: entry (m, n) depends
    only on (m - n) mod M and equals the drive's Fourier coefficient
    c_{m-n}. Uses the same conjugation as :func:`compose_cascade`, so a
    cascade with an identity shaper and one idle modulator reproduces it
    entrywise.
    """
    lattice = ModeLattice(M, 1, M // 2)
    return TransferMatrix(_eom_frequency_operator(drive, M), lattice, unitary_flag=True)


def compose_cascade(drive1: FourierDrive, shaper: ShaperPattern, drive2: FourierDrive,
                    lattice: ModeLattice) -> TransferMatrix:
    """Full transfer matrix of the modulator-shaper-modulator cascade."""
    M = lattice.mode_count
    D1 = eom_diagonal(drive1, M)
    D2 = shaper_diagonal(shaper, M)
    D3 = eom_diagonal(drive2, M)
    V = np.fft.fft(np.eye(M, dtype=complex), axis=0, norm="ortho")
    V = np.fft.ifft(D1[:, None] * V, axis=0, norm="ortho")
    V = D2[:, None] * V
    V = np.fft.fft(V, axis=0, norm="ortho")
    V = np.fft.ifft(D3[:, None] * V, axis=0, norm="ortho")
    return TransferMatrix(V, lattice, unitary_flag=shaper.is_pure_phase)


def cascade_columns(drive1: FourierDrive, shaper: ShaperPattern, drive2: FourierDrive,
                    lattice: ModeLattice,
                    columns: NDArray[np.intp] | None = None) -> NDArray[np.complex128]:
    """Selected columns of the cascade (all M rows), without forming the full matrix.

    Defaults to the computational-window columns; this is the hot path
    shared by the optimizer and the virtual test bench.
    """
    M = lattice.mode_count
    if columns is None:
        columns = lattice.window
    D1 = eom_diagonal(drive1, M)
    D2 = shaper_diagonal(shaper, M)
    D3 = eom_diagonal(drive2, M)
    X = np.zeros((M, len(columns)), dtype=complex)
    X[np.asarray(columns), np.arange(len(columns))] = 1.0
    Y = np.fft.ifft(D1[:, None] * np.fft.fft(X, axis=0, norm="ortho"), axis=0, norm="ortho")
    Y = D2[:, None] * Y
    Y = np.fft.ifft(D3[:, None] * np.fft.fft(Y, axis=0, norm="ortho"), axis=0, norm="ortho")
    return Y


def truncate(V: TransferMatrix) -> NDArray[np.complex128]:
    """The d x d block of V on the computational window."""
    w = V.lattice.window
    return V.entries[np.ix_(w, w)]


def success_probability(V_d: NDArray[np.complex128]) -> float:
    """P = Tr(V^dag V) / d: probability of staying in the computational space."""
    V_d = np.asarray(V_d)
    if V_d.ndim != 2 or V_d.shape[0] != V_d.shape[1]:
        raise ValueError("success_probability needs a square matrix")
    d = V_d.shape[0]
    return float((np.abs(V_d) ** 2).sum() / d)


def fidelity(V_d: NDArray[np.complex128], target: GateTarget | NDArray[np.complex128]) -> float:
    """F = |Tr(V^dag U)|^2 / (P d^2), insensitive to uniform loss on V."""
    U = target.matrix if isinstance(target, GateTarget) else np.asarray(target, dtype=complex)
    V_d = np.asarray(V_d, dtype=complex)
    if V_d.shape != U.shape:
        raise ValueError(f"shape mismatch: V is {V_d.shape}, target is {U.shape}")
    d = U.shape[0]
    P = success_probability(V_d)
    if P == 0.0:
        raise ZeroDivisionError("fidelity undefined for an all-zero matrix (P = 0)")
    overlap = np.abs((V_d.conj() * U).sum()) ** 2
    return float(overlap / (P * d * d))


def fixed_gauge(matrix: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Rotate row/column phases so the first row and column are real nonnegative.

    This is the phase convention in which a multiport is physically
    characterized: only phases relative to the first row and column are
    observable. Entries with vanishing modulus keep phase 0.
    """
    m = np.asarray(matrix, dtype=complex).copy()
    d = m.shape[0]
    eps = 1e-15 * max(1.0, float(np.abs(m).max()))
    row0 = np.where(np.abs(m[0]) > eps, np.angle(m[0]), 0.0)
    m = m * np.exp(-1j * row0)[None, :]
    col0 = np.where(np.abs(m[:, 0]) > eps, np.angle(m[:, 0]), 0.0)
    m = m * np.exp(-1j * col0)[:, None]
    # reference row/column are real up to float error; make the phases exactly zero
    m[0, :] = np.abs(m[0, :])
    m[:, 0] = np.abs(m[:, 0])
    return m


def scatter_bound(d: int) -> float:
    """Minimum scatter probability (d-1)/(2d-1) of a single-modulator uniform mixer."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    return (d - 1) / (2 * d - 1)


def single_eom_ceiling(d: int) -> float:
    """Success-probability ceiling d/(2d-1) implied by :func:`scatter_bound`."""
    return 1.0 - scatter_bound(d)


def hadamard_target() -> GateTarget:
    """The 50/50 two-mode mixer with Hadamard phases."""
    m = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
    return GateTarget(m, name="hadamard")


def dft_target(d: int) -> GateTarget:
    """Uniform d-mode mixer U[j, k] = exp(+2*pi*i*j*k/d) / sqrt(d)."""
    if d < 2:
        raise ValueError("dft target needs d >= 2")
    j = np.arange(d)
    m = np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)
    return GateTarget(m, name=f"dft({d})")


#: Sentinel returned for a zero-amplitude drive (power is -inf dBm).
NO_DRIVE_DBM = float("-inf")


def rf_power_dbm(beta: float, v_pi: float, impedance: float = 50.0) -> float:
    """Drive power (dBm) needed for modulation index beta on one tone.

    V_peak = beta * V_pi / pi into the given impedance; average sine power
    V_peak^2 / (2 R), referenced to 1 mW.
    """
    if v_pi <= 0:
        raise ValueError("v_pi must be positive")
    if impedance <= 0:
        raise ValueError("impedance must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0:
        return NO_DRIVE_DBM
    v_peak = beta * v_pi / math.pi
    power_w = v_peak * v_peak / (2.0 * impedance)
    return 10.0 * math.log10(power_w / 1e-3)
