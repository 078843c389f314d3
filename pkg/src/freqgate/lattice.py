"""Core value types for the frequency-bin mode space.

The simulation lives on a finite circulant lattice of ``M`` equispaced
frequency bins. A gate occupies a ``d``-mode computational window placed
near the middle of the lattice so that modulation sidebands never wrap
around the lattice boundary at the accuracy targets used here. All math
is index based; the physical bin spacing is carried only as metadata.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

TWO_PI = 2.0 * math.pi

#: Construction-level tolerance (unitarity of exact factors).
CONSTRUCTION_TOL = 1e-12
#: Tolerance for derived-property checks (unitarity of cascades, Bessel).
PROPERTY_TOL = 1e-10


def wrap_phase(phi):
    """Wrap angles to the half-open interval (-pi, pi]."""
    phi = np.asarray(phi, dtype=float)
    wrapped = np.remainder(-phi + math.pi, TWO_PI)
    out = -(wrapped - math.pi)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModeLattice:
    """Discretized frequency-bin space with an embedded computational window.

    Parameters
    ----------
    mode_count:
        Total number of simulated bins ``M``. Must be even and at least
        twice the computational dimension, leaving room for scattered
        sidebands on either side.
    computational_dim:
        Number of modes ``d`` the gate acts on.
    window_offset:
        Lattice index of computational mode 0. Defaults to centering the
        window at ``M // 2``.
    spacing:
        Angular bin spacing in rad/s. Informational only.
    """

    mode_count: int
    computational_dim: int
    window_offset: int = -1
    spacing: float = TWO_PI * 25e9

    def __post_init__(self):
        M, d = self.mode_count, self.computational_dim
        if d < 1:
            raise ValueError("computational_dim must be positive")
        if M < 2 * d or M % 2 != 0:
            raise ValueError(f"mode_count must be even and >= 2*d, got M={M}, d={d}")
        if self.window_offset < 0:
            object.__setattr__(self, "window_offset", (M - d) // 2)
        if not 0 <= self.window_offset <= M - d:
            raise ValueError(f"window [{self.window_offset}, {self.window_offset + d}) "
                             f"falls outside the {M}-mode lattice")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def window(self) -> NDArray[np.intp]:
        """Lattice indices of the computational window."""
        return np.arange(self.window_offset, self.window_offset + self.computational_dim)

    def doubled(self) -> "ModeLattice":
        """Same window on a lattice of twice the size (aliasing checks)."""
        return ModeLattice(2 * self.mode_count, self.computational_dim,
                           (2 * self.mode_count - self.computational_dim) // 2, self.spacing)

    def with_offset(self, window_offset: int) -> "ModeLattice":
        return ModeLattice(self.mode_count, self.computational_dim, window_offset, self.spacing)


@dataclass(frozen=True)
class FourierDrive:
    """Temporal phase of one modulator as a finite harmonic series.

    ``harmonics`` is an ordered tuple of ``(k, beta_k, theta_k)``:
    phi(t) = sum_k beta_k * sin(k * dw * t + theta_k), with k a positive
    integer multiple of the bin spacing, beta_k >= 0 in radians, and
    theta_k wrapped to (-pi, pi].
    """

    harmonics: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        norm = []
        last_k = 0
        for k, beta, theta in self.harmonics:
            k = int(k)
            if k <= last_k:
                raise ValueError("harmonic indices must be strictly increasing and positive")
            if beta < 0:
                raise ValueError("harmonic amplitudes must be nonnegative")
            norm.append((k, float(beta), float(wrap_phase(theta))))
            last_k = k
        object.__setattr__(self, "harmonics", tuple(norm))

    @property
    def harmonic_count(self) -> int:
        return len(self.harmonics)

    @property
    def max_harmonic(self) -> int:
        return self.harmonics[-1][0] if self.harmonics else 0

    def validate_for(self, mode_count: int) -> None:
        """Nyquist margin: the highest drive tone must fit the lattice."""
        if 2 * self.max_harmonic >= mode_count // 2:
            raise ValueError(f"harmonic {self.max_harmonic} violates the Nyquist margin "
                             f"for an M={mode_count} lattice")

    def phase_samples(self, mode_count: int) -> NDArray[np.float64]:
        """phi(t_j) over one fundamental period, t_j = j*T/M, j = 0..M-1."""
        self.validate_for(mode_count)
        x = TWO_PI * np.arange(mode_count) / mode_count
        phi = np.zeros(mode_count)
        for k, beta, theta in self.harmonics:
            phi += beta * np.sin(k * x + theta)
        return phi

    @staticmethod
    def single_tone(beta: float, theta: float = 0.0, k: int = 1) -> "FourierDrive":
        return FourierDrive(((k, beta, theta),))

    @staticmethod
    def zero() -> "FourierDrive":
        return FourierDrive(())


@dataclass(frozen=True)
class ShaperPattern:
    """Per-bin spectral phases (and optional amplitude mask) of the shaper.

    Amplitudes default to 1 everywhere; any amplitude below 1 makes the
    resulting transfer matrix non-unitary (a deliberately lossy passband).
    """

    phases: NDArray[np.float64]
    amplitudes: NDArray[np.float64] | None = None

    def __post_init__(self):
        phases = wrap_phase(np.asarray(self.phases, dtype=float))
        object.__setattr__(self, "phases", phases)
        if self.amplitudes is not None:
            amps = np.asarray(self.amplitudes, dtype=float)
            if amps.shape != phases.shape:
                raise ValueError("amplitudes and phases must have equal length")
            if np.any(amps < 0) or np.any(amps > 1):
                raise ValueError("amplitudes must lie in [0, 1]")
            object.__setattr__(self, "amplitudes", amps)
        self.phases.setflags(write=False)
        if self.amplitudes is not None:
            self.amplitudes.setflags(write=False)

    @property
    def mode_count(self) -> int:
        return len(self.phases)

    @property
    def is_pure_phase(self) -> bool:
        return self.amplitudes is None or bool(np.all(self.amplitudes == 1.0))

    def diagonal(self) -> NDArray[np.complex128]:
        diag = np.exp(1j * self.phases)
        if self.amplitudes is not None:
            diag = self.amplitudes * diag
        return diag

    @staticmethod
    def flat(mode_count: int) -> "ShaperPattern":
        return ShaperPattern(np.zeros(mode_count))


@dataclass(frozen=True)
class GateTarget:
    """A d x d unitary the gate should implement."""

    matrix: NDArray[np.complex128]
    name: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("target matrix must be square")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if dev > CONSTRUCTION_TOL:
            raise ValueError(f"target matrix is not unitary (deviation {dev:.2e})")
        object.__setattr__(self, "matrix", m)
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class TransferMatrix:
    """Full M x M frequency-basis transfer matrix of a component or cascade."""

    entries: NDArray[np.complex128]
    lattice: ModeLattice
    unitary_flag: bool = True

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        M = self.lattice.mode_count
        if m.shape != (M, M):
            raise ValueError(f"entries must be {M}x{M}, got {m.shape}")
        col_norms = np.sqrt((np.abs(m) ** 2).sum(axis=0))
        if np.any(col_norms > 1.0 + PROPERTY_TOL):
            raise ValueError("column norms exceed 1; not a passive transformation")
        if self.unitary_flag:
            dev = np.max(np.abs(m.conj().T @ m - np.eye(M)))
            if dev > PROPERTY_TOL:
                raise ValueError(f"unitary_flag set but V^dag V deviates from I by {dev:.2e}")
        object.__setattr__(self, "entries", m)
        self.entries.setflags(write=False)
