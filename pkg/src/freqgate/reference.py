"""Published reference numbers for side-by-side comparison in reports.

The experimental error-bar figures are hardware measurements; they are
quoted next to simulated results, never reproduced by this package.
"""
from __future__ import annotations

import numpy as np

#: reference metrics keyed by gate, each tagged with its source description
REFERENCE_VALUES = {
    "hadamard": {
        "predicted_fidelity": (0.9999, "published design prediction, two-mode mixer"),
        "predicted_success": (0.9760, "published design prediction, two-mode mixer"),
        "measured_fidelity": ("0.99998 +/- 0.00003", "published measurement, two-mode mixer"),
        "measured_success": ("0.9739 +/- 0.0003", "published measurement, two-mode mixer"),
        "single_eom_ceiling": (2.0 / 3.0, "scatter bound for one modulator, d=2"),
        "visibility_range": ("0.97 - 1.00", "published dark-subtracted visibilities"),
    },
    "dft(3)": {
        "predicted_fidelity": (0.9999, "published design prediction, three-mode mixer"),
        "predicted_success": (0.9733, "published design prediction, three-mode mixer"),
        "measured_fidelity": ("0.9989 +/- 0.0004", "published measurement, three-mode mixer"),
        "measured_success": ("0.9730 +/- 0.0002", "published measurement, three-mode mixer"),
        "visibility_range": ("0.97 - 1.00", "published dark-subtracted visibilities"),
    },
    "scaling": {
        "product_floor": (0.97, "published claim: F*P above 0.97 through d=7"),
    },
}


def measured_beamsplitter_example() -> np.ndarray:
    """Example measured two-mode transformation (gauge-fixed moduli/phases)."""
    return np.array([
        [np.sqrt(0.4871), np.sqrt(0.4869)],
        [np.sqrt(0.4866), np.sqrt(0.4871) * np.exp(1j * 3.1400)],
    ])


def measured_tritter_example() -> np.ndarray:
    """Example measured three-mode transformation (gauge-fixed moduli/phases)."""
    return np.array([
        [np.sqrt(0.3261), np.sqrt(0.3126), np.sqrt(0.3062)],
        [np.sqrt(0.3183), np.sqrt(0.3290) * np.exp(1j * 2.0925),
         np.sqrt(0.3339) * np.exp(1j * 4.1775)],
        [np.sqrt(0.3202), np.sqrt(0.3476) * np.exp(1j * 4.1365),
         np.sqrt(0.3256) * np.exp(1j * 2.0425)],
    ])
