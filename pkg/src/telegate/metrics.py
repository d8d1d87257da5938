"""Figures of merit: state fidelity, logarithmic negativity, CHSH values,
and Poisson-bootstrap error bars for anything estimated from counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, TYPE_CHECKING

import numpy as np

from .states import (
    DensityMatrix,
    Observable,
    PureState,
    analyzer_observable,
    expectation,
    kron,
    trace_norm,
)

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .experiment import CountTable

TSIRELSON = 2.0 * np.sqrt(2.0)

#: Sign variant under which each analyzer Bell state reaches |S| = 2 sqrt 2
#: at the standard angles, with the sign of the extremal value. Derived from
#: the conditional swap states (see tests); the +/- pattern for the phi
#: states matches the reported signed experimental values.
CHSH_VARIANT_FOR_BELL = {"phi+": "+", "psi+": "-", "phi-": "-", "psi-": "+"}
CHSH_SIGN_FOR_BELL = {"phi+": -1.0, "psi+": +1.0, "phi-": -1.0, "psi-": +1.0}


def fidelity_pure(rho: DensityMatrix, target: PureState, correction: np.ndarray | None = None) -> float:
    """<chi| U rho U^dag |chi>, the overlap with a pure target state."""
    if rho.dim != target.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {target.dim}")
    mat = rho.entries
    if correction is not None:
        mat = correction @ mat @ correction.conj().T
    val = float(np.real(target.amplitudes.conj() @ mat @ target.amplitudes))
    return min(max(val, 0.0), 1.0)


def partial_transpose(rho: DensityMatrix, subsystem: int = 1) -> np.ndarray:
    """Transpose one qubit of a two-qubit state (entanglement witness)."""
    if rho.dim != 4:
        raise ValueError("partial transpose implemented for two qubits")
    t = rho.entries.reshape(2, 2, 2, 2)
    if subsystem == 0:
        t = np.transpose(t, (2, 1, 0, 3))
    elif subsystem == 1:
        t = np.transpose(t, (0, 3, 2, 1))
    else:
        raise ValueError("subsystem must be 0 or 1")
    return t.reshape(4, 4)


def log_negativity(rho: DensityMatrix) -> float:
    """log2 of the trace norm of the partial transpose.

    Zero for separable two-qubit states, one for maximally entangled ones.
    """
    value = float(np.log2(trace_norm(partial_transpose(rho))))
    return max(value, 0.0) if value > -1e-10 else value


@dataclass(frozen=True)
class ChshSpec:
    """Analyzer angles (degrees) and sign variant for the CHSH combination.

    The first mode is measured at ``mode_a_angles`` and the second at
    ``mode_d_angles``; defaults are the standard quadruple 0, -22.5, -45,
    -67.5. Variant "+" weighs the (secondary, primary) correlator with plus,
    variant "-" flips the two secondary-angle terms.
    """

    mode_a_angles: tuple[float, float] = (0.0, -45.0)
    mode_d_angles: tuple[float, float] = (-22.5, -67.5)
    variant: str = "+"

    def __post_init__(self):
        if self.variant not in ("+", "-"):
            raise ValueError(f"variant must be '+' or '-', got {self.variant!r}")


def chsh_correlators(rho: DensityMatrix, spec: ChshSpec = ChshSpec()) -> np.ndarray:
    """E[i, j] for mode-a angle i and mode-d angle j."""
    e = np.empty((2, 2))
    for i, ta in enumerate(spec.mode_a_angles):
        for j, td in enumerate(spec.mode_d_angles):
            obs = kron(analyzer_observable(ta, "a"), analyzer_observable(td, "d"))
            e[i, j] = expectation(rho, Observable(obs.entries, rho.labels))
    return e


def chsh_from_correlators(e: np.ndarray, variant: str) -> float:
    sign = 1.0 if variant == "+" else -1.0
    return float(sign * e[1, 0] - sign * e[1, 1] + e[0, 0] + e[0, 1])


def chsh(rho: DensityMatrix, spec: ChshSpec = ChshSpec()) -> float:
    """Signed CHSH value; callers compare |S| against 2 (classical bound)."""
    return chsh_from_correlators(chsh_correlators(rho, spec), spec.variant)


def chsh_best(rho: DensityMatrix, spec: ChshSpec = ChshSpec()) -> tuple[str, float]:
    """(variant, signed S) of the variant with the larger |S|."""
    e = chsh_correlators(rho, spec)
    plus = chsh_from_correlators(e, "+")
    minus = chsh_from_correlators(e, "-")
    return ("+", plus) if abs(plus) >= abs(minus) else ("-", minus)


def bootstrap_error(counts: "CountTable", estimator: Callable, n_resamples: int = 200,
                    seed: int = 0) -> tuple[float, float]:
    """Parametric Poisson bootstrap of any count-table estimator.

    Each raw count c is resampled as Poisson(c), the efficiency correction
    is re-applied, and the estimator re-run; the spread of the resampled
    values is the error bar. Resamples that fail are skipped, but more than
    10% failures aborts. Deterministic for a given seed.
    """
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples")
    value = float(estimator(counts))
    seeds = np.random.SeedSequence(seed).spawn(n_resamples)
    samples = []
    failures = 0
    for child in seeds:
        rng = np.random.default_rng(child)
        try:
            samples.append(float(estimator(counts.resample(rng))))
        except Exception:
            failures += 1
    if failures > 0.1 * n_resamples:
        raise RuntimeError(f"{failures}/{n_resamples} bootstrap resamples failed")
    stderr = float(np.std(samples, ddof=1)) if len(samples) > 1 else 0.0
    return value, stderr
