"""Single-shot projective phonon measurement with imperfect detection.

A pi pulse at the n-th sideband followed by fluorescence detection implements
the two-outcome POVM  E_bright = g 1 + eta |n><n|,  E_dark = 1 - E_bright.
Dark outcomes update the state with the square-root (minimally disturbing)
instrument, which reduces to the ideal projector complement 1 - |n><n| at
eta = 1, g = 0.  Bright outcomes destroy the motional state (fluorescence);
the identified Fock number is recorded so the state can be re-prepared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import FockState


class MeasurementError(ValueError):
    pass


@dataclass
class ShotRecord:
    target_n: int
    outcome: str  # "bright" | "dark"
    p_bright: float
    seed: int | None = None


def _check_params(state: FockState, target_n: int, eta: float, g: float) -> None:
    if not (0 <= eta <= 1 and g >= 0 and g + eta <= 1 + 1e-12):
        raise MeasurementError(f"need 0 <= eta <= 1, g >= 0, g + eta <= 1; got eta={eta}, g={g}")
    if not 0 <= target_n < state.dim:
        raise MeasurementError(f"target_n={target_n} outside state dimension {state.dim}")


def single_shot(
    state: FockState,
    target_n: int,
    eta: float,
    g: float,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    reprepare: bool = False,
) -> tuple[ShotRecord, FockState | None]:
    """One interrogation of Fock level ``target_n``.

    Returns the outcome record and the post-measurement state: the dark-updated
    state, None for a destroyed bright outcome, or |target_n> when
    ``reprepare`` is set.
    """
    _check_params(state, target_n, eta, g)
    if rng is None:
        rng = np.random.default_rng(seed)
    p_n = float(state.populations()[target_n])
    p_bright = min(g + eta * p_n, 1.0)
    bright = bool(rng.random() < p_bright)
    record = ShotRecord(target_n=target_n, outcome="bright" if bright else "dark", p_bright=p_bright, seed=seed)
    if bright:
        if reprepare:
            vec = np.zeros(state.dim, dtype=complex)
            vec[target_n] = 1.0
            return record, FockState(vec)
        return record, None
    p_dark = 1.0 - p_bright
    if p_dark <= 0:
        raise MeasurementError(
            f"dark outcome impossible: state is exactly |{target_n}> with perfect detection"
        )
    # sqrt(E_dark) is diagonal in the Fock basis.
    m_diag = np.full(state.dim, np.sqrt(1.0 - g))
    m_diag[target_n] = np.sqrt(max(1.0 - g - eta, 0.0))
    if state.is_pure:
        psi = m_diag * state.data
        return record, FockState(psi / np.linalg.norm(psi))
    rho = (m_diag[:, None] * state.data) * m_diag[None, :]
    return record, FockState(rho / np.trace(rho).real)


def repeated_interrogation(
    state: FockState,
    schedule: list[int],
    eta: float,
    g: float,
    seed: int,
    reprepare: bool = False,
) -> tuple[list[ShotRecord], FockState | None, int | None]:
    """Apply single shots along a target schedule; a bright outcome terminates
    the run with the identified Fock number.

    Returns (records, final state or None, identified n or None).  A single RNG
    stream seeded once drives the whole sequence, so identical seeds give
    identical outcome sequences.
    """
    rng = np.random.default_rng(seed)
    records: list[ShotRecord] = []
    current: FockState | None = state
    for n in schedule:
        record, current = single_shot(current, n, eta, g, rng=rng, reprepare=reprepare)
        records.append(record)
        if record.outcome == "bright":
            return records, current, n
    return records, current, None
