"""Coupled-mode dynamics: H/hbar = Da n_a + ((delta+Da)/2) n_b + xi (a^dag b^2 + a b^dag^2).

The rotating frame removes omega_a - Da from mode a and half of it from mode b,
so the coupling term is static.  With the default frame offset Da = 0 the zero
of energy sits at the bare |0_a, 0_b> state.

The coupling conserves N = 2 n_a + n_b, so the Hamiltonian is block diagonal in
manifolds of fixed N; dressed-state energies are computed per manifold and
assigned to bare labels by maximal eigenvector overlap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .fock import FockCutoff, FockState, annihilation_op, basis_index, eigh, number_op, propagator_from_eigh
from .trap import TWO_PI, TrapConfig, detune_to, mode_frequencies


class DynamicsError(ValueError):
    pass


class AssignmentError(DynamicsError):
    """Dressed-to-bare assignment failed: max overlap < 0.5 (delta too close to resonance)."""


@dataclass(frozen=True)
class CoupledModeParams:
    delta: float  # rad/s
    xi: float     # rad/s
    cutoff: FockCutoff

    def __post_init__(self):
        if self.xi < 0:
            raise DynamicsError("xi must be >= 0")


def build_hamiltonian(p: CoupledModeParams, frame_offset: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian (angular-frequency units, i.e. H/hbar).

    ``frame_offset`` is the residual axial detuning Da; the radial mode carries
    (delta + Da)/2 so that the trilinear coupling stays time independent.
    """
    cutoff = p.cutoff
    a = annihilation_op(cutoff, "a")
    b = annihilation_op(cutoff, "b")
    n_a = number_op(cutoff, "a")
    n_b = number_op(cutoff, "b")
    coupling = a.conj().T @ b @ b
    H = frame_offset * n_a + 0.5 * (p.delta + frame_offset) * n_b + p.xi * (coupling + coupling.conj().T)
    return H


def conserved_charge(cutoff: FockCutoff) -> np.ndarray:
    """The conserved quantity N = 2 a^dag a + b^dag b (diagonal)."""
    return 2 * number_op(cutoff, "a") + number_op(cutoff, "b")


def manifold_states(N: int, n_a_cap: int | None = None) -> list[tuple[int, int]]:
    """Bare states (n_a, n_b) with 2 n_a + n_b = N, ordered by increasing n_a."""
    states = [(n_a, N - 2 * n_a) for n_a in range(N // 2 + 1)]
    if n_a_cap is not None:
        states = [s for s in states if s[0] <= n_a_cap]
    return states


def manifold_block(delta: float, xi: float, N: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Exact Hamiltonian block of the manifold N (frame offset 0), plus its basis labels.

    Manifolds are finite, so no truncation enters here.  Diagonal entries are
    (delta/2) n_b; the coupling links (n_a, n_b) <-> (n_a+1, n_b-2) with matrix
    element xi sqrt((n_a+1) n_b (n_b-1)).
    """
    states = manifold_states(N)
    m = len(states)
    H = np.zeros((m, m))
    for i, (n_a, n_b) in enumerate(states):
        H[i, i] = 0.5 * delta * n_b
        if n_b >= 2:
            j = i + 1  # (n_a + 1, n_b - 2)
            if j < m:
                H[i, j] = H[j, i] = xi * np.sqrt((n_a + 1) * n_b * (n_b - 1))
    return H, states


@lru_cache(maxsize=4096)
def _manifold_dressed_energies(delta: float, xi: float, N: int) -> dict[tuple[int, int], float]:
    """Dressed eigenvalues of manifold N labeled by the bare state each branch is
    adiabatically connected to.

    The coupling is ramped from 0 to xi; at each step eigenvectors are matched
    to the tracked ones by maximal overlap (a permutation via the assignment
    problem).  A step whose best overlap drops below 0.5 is bisected; failure at
    the minimal step means the branches cannot be told apart, i.e. delta is too
    small for a dispersive labeling.
    """
    D, states = manifold_block(delta, 1.0, N)
    C = D - np.diag(np.diag(D))     # coupling part at unit xi
    D = np.diag(np.diag(D))
    tracked = np.eye(len(states))   # bare basis at xi = 0
    s = 0.0
    step = 0.5
    vals = np.diag(D).copy()
    while s < 1.0:
        trial = min(s + step, 1.0)
        new_vals, vecs = np.linalg.eigh(D + trial * xi * C)
        overlap = np.abs(tracked.T @ vecs) ** 2
        row, col = linear_sum_assignment(-overlap)
        worst = overlap[row, col].min()
        if worst < 0.5:
            if step < 1e-6:
                bad = states[int(row[np.argmin(overlap[row, col])])]
                raise AssignmentError(
                    f"cannot assign dressed state near bare |{bad[0]}_a, {bad[1]}_b> "
                    f"(manifold N={N}): continuation overlap {worst:.3f} < 0.5; "
                    f"delta/2pi = {delta / TWO_PI:.1f} Hz is too small for the dispersive regime"
                )
            step /= 2
            continue
        perm = np.empty_like(col)
        perm[row] = col
        tracked = vecs[:, perm]
        vals = new_vals[perm]
        s = trial
        step = min(2 * step, 1.0 - s if s < 1.0 else step)
        if step == 0.0:
            break
    return {state: float(v) for state, v in zip(states, vals)}


def dressed_energy(delta: float, xi: float, n_a: int, n_b: int) -> float:
    """Eigenvalue of the dressed state adiabatically connected to bare |n_a, n_b>,
    within its N = 2 n_a + n_b manifold."""
    return _manifold_dressed_energies(delta, xi, 2 * n_a + n_b)[(n_a, n_b)]


def sideband_offset(delta: float, xi: float, n_b: int) -> float:
    """Exact axial-sideband frequency for radial occupation n_b, relative to the
    bare (uncoupled) sideband: [E(1, n_b) - E(0, n_b)] dressed, frame offset 0."""
    return dressed_energy(delta, xi, 1, n_b) - dressed_energy(delta, xi, 0, n_b)


@dataclass
class ShiftTable:
    """Axial sideband shifts vs radial phonon number, relative to the n_b = 0 peak."""

    n_b: np.ndarray
    shift_exact: np.ndarray         # rad/s
    shift_perturbative: np.ndarray  # rad/s, -4 xi^2 n_b / delta

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="\n") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n_b", "shift_exact_hz", "shift_perturbative_hz"])
            for n, se, sp in zip(self.n_b, self.shift_exact, self.shift_perturbative):
                w.writerow([int(n), f"{se / TWO_PI:.12g}", f"{sp / TWO_PI:.12g}"])


def dispersive_shift_table(p: CoupledModeParams, n_b_max_report: int) -> ShiftTable:
    """Sideband shift vs n_b from exact manifold diagonalization, plus the
    second-order law -4 xi^2 n_b / delta (both referenced to n_b = 0)."""
    if p.delta == 0:
        raise DynamicsError("dispersive shifts require delta != 0")
    ref = sideband_offset(p.delta, p.xi, 0)
    n_vals = np.arange(n_b_max_report + 1)
    exact = np.array([sideband_offset(p.delta, p.xi, int(n)) - ref for n in n_vals])
    pert = -4.0 * p.xi**2 * n_vals / p.delta
    return ShiftTable(n_b=n_vals, shift_exact=exact, shift_perturbative=pert)


@dataclass
class CrossingMap:
    """Eigenenergy branches vs two-mode detuning, with axial-excitation weights."""

    delta_grid: np.ndarray       # rad/s
    branch_energies: np.ndarray  # (grid, branch), rad/s, ascending per row
    branch_weights: np.ndarray   # (grid, branch), summed |<n_a >= 1|eigvec>|^2

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="\n") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["delta_hz", "branch_index", "energy_hz", "axial_weight"])
            for i, d in enumerate(self.delta_grid):
                for j in range(self.branch_energies.shape[1]):
                    w.writerow(
                        [
                            f"{d / TWO_PI:.12g}",
                            j,
                            f"{self.branch_energies[i, j] / TWO_PI:.12g}",
                            f"{self.branch_weights[i, j]:.12g}",
                        ]
                    )


def crossing_map(cfg: TrapConfig, delta_grid: np.ndarray, manifold_N_max: int) -> CrossingMap:
    """Eigenenergies of all manifolds N <= manifold_N_max across a detuning sweep.

    xi is recomputed at each grid point from the detuned trap config (it varies
    weakly through omega_b).  Rows of the result are independent; computing them
    in any order gives identical output.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    n_branches = sum(N // 2 + 1 for N in range(manifold_N_max + 1))
    energies = np.empty((delta_grid.size, n_branches))
    weights = np.empty_like(energies)
    for i, d in enumerate(delta_grid):
        modes = mode_frequencies(detune_to(cfg, d))
        evals = []
        wts = []
        for N in range(manifold_N_max + 1):
            H, states = manifold_block(d, modes.xi, N)
            vals, vecs = np.linalg.eigh(H)
            axial = np.array([s[0] >= 1 for s in states], dtype=float)
            evals.extend(vals)
            wts.extend(axial @ np.abs(vecs) ** 2)
        order = np.argsort(evals, kind="stable")
        energies[i] = np.asarray(evals)[order]
        weights[i] = np.asarray(wts)[order]
    return CrossingMap(delta_grid=delta_grid, branch_energies=energies, branch_weights=weights)


def exchange_trace(
    p: CoupledModeParams,
    initial: FockState,
    t_grid: np.ndarray,
    track: list[tuple[int, int]] | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """Populations of selected bare states along a time grid (default |1,0>, |0,2>)."""
    if track is None:
        track = [(1, 0), (0, 2)]
    initial.validate()
    H = build_hamiltonian(p)
    vals, vecs = eigh(H)
    idx = {s: basis_index(s[0], s[1], p.cutoff) for s in track}
    out = {s: np.empty(len(t_grid)) for s in track}
    psi0 = vecs.conj().T @ initial.data if initial.is_pure else None
    for k, t in enumerate(t_grid):
        if initial.is_pure:
            psi = vecs @ (np.exp(-1j * vals * t) * psi0)
            for s, i in idx.items():
                out[s][k] = abs(psi[i]) ** 2
        else:
            U = propagator_from_eigh(vals, vecs, t)
            rho = U @ initial.data @ U.conj().T
            for s, i in idx.items():
                out[s][k] = rho[i, i].real
    return out
