"""Linear-optics primitives acting on coherent-state superpositions.

All beam splitters are balanced (50:50). Acting on coherent amplitudes the
splitter is the linear map ``(u, v) -> ((u + v)/sqrt2, (u - v)/sqrt2)``, so a
superposition transforms term by term with unchanged coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    DEFAULT_TOL,
    CoherentSuperposition,
    DecoherenceError,
    DegenerateStateError,
    ShapeError,
    ToleranceConfig,
    _close_matrix,
    canonicalize,
    norm_squared,
)

SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class SelectionOutcome:
    """Kept branch of a post-selection (unnormalized) and its probability."""

    state: CoherentSuperposition
    probability: float


def _fresh_labels(state: CoherentSuperposition, new: Sequence[str], replacing: Sequence[str]) -> None:
    if len(set(new)) != len(new):
        raise ShapeError(f"output labels must be distinct, got {tuple(new)}")
    others = set(state.mode_labels) - set(replacing)
    clash = others.intersection(new)
    if clash:
        raise ShapeError(f"output labels already in use: {sorted(clash)}")


def beam_splitter(
    state: CoherentSuperposition,
    mode_i: str,
    mode_j: str,
    out_labels: tuple[str, str] | None = None,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> CoherentSuperposition:
    """Balanced beam splitter on two modes.

    The ``(u + v)/sqrt2`` output goes to ``mode_i``'s slot and ``(u - v)/sqrt2``
    to ``mode_j``'s. ``out_labels`` renames the two output ports in place
    (e.g. ``d, e -> d1, e1``); by default the labels are kept.
    """
    if mode_i == mode_j:
        raise ShapeError("beam splitter needs two distinct modes")
    i, j = state.index(mode_i), state.index(mode_j)
    labels = list(state.mode_labels)
    if out_labels is not None:
        _fresh_labels(state, out_labels, (mode_i, mode_j))
        labels[i], labels[j] = out_labels
    amps = np.array(state.amplitudes)
    u, v = amps[:, i].copy(), amps[:, j].copy()
    amps[:, i] = (u + v) * SQRT1_2
    amps[:, j] = (u - v) * SQRT1_2
    return canonicalize(CoherentSuperposition(labels, state.coefficients, amps), tol)


def beam_splitter_with_vacuum(
    state: CoherentSuperposition,
    mode: str,
    new_label_1: str,
    new_label_2: str,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> CoherentSuperposition:
    """Split ``mode`` on a balanced splitter whose other port is vacuum.

    Each amplitude ``u`` becomes ``(u/sqrt2, u/sqrt2)`` on the two new modes,
    which take the place of ``mode`` in the register.
    """
    k = state.index(mode)
    _fresh_labels(state, (new_label_1, new_label_2), (mode,))
    labels = list(state.mode_labels)
    labels[k : k + 1] = [new_label_1, new_label_2]
    amps = state.amplitudes
    half = amps[:, k : k + 1] * SQRT1_2
    new_amps = np.concatenate([amps[:, :k], half, half, amps[:, k + 1 :]], axis=1)
    return canonicalize(CoherentSuperposition(labels, state.coefficients, new_amps), tol)


def swap_modes(state: CoherentSuperposition, mode_i: str, mode_j: str) -> CoherentSuperposition:
    """Exchange the register positions of two modes (labels travel with their amplitudes)."""
    i, j = state.index(mode_i), state.index(mode_j)
    order = list(range(state.n_modes))
    order[i], order[j] = order[j], order[i]
    labels = [state.mode_labels[k] for k in order]
    return CoherentSuperposition(labels, state.coefficients, state.amplitudes[:, order])


def drop_modes(state: CoherentSuperposition, modes: Iterable[str]) -> CoherentSuperposition:
    """Remove columns from the register without touching coefficients."""
    drop = {state.index(m) for m in modes}
    keep = [k for k in range(state.n_modes) if k not in drop]
    labels = [state.mode_labels[k] for k in keep]
    return CoherentSuperposition(labels, state.coefficients, state.amplitudes[:, keep])


def _vacuum_threshold(state: CoherentSuperposition, tol: ToleranceConfig) -> float:
    scale = float(np.max(np.abs(state.amplitudes))) if state.amplitudes.size else 0.0
    return tol.amp_merge_tol * max(1.0, scale)


def select_vacuum_branch(
    state: CoherentSuperposition,
    modes: Sequence[str],
    tol: ToleranceConfig = DEFAULT_TOL,
) -> SelectionOutcome:
    """Idealized "no photon" post-selection on ``modes``.

    Keeps exactly the terms whose amplitude is zero in every listed mode and
    removes those modes from the register. The probability is the kept
    branch's norm^2 over the input's norm^2; overlap between kept and
    discarded branches is deliberately not folded in.
    """
    if isinstance(modes, str):
        modes = [modes]
    cols = [state.index(m) for m in modes]
    total = norm_squared(state)
    if total <= tol.coeff_zero_tol:
        raise DegenerateStateError("post-selection on a zero-norm state")
    thr = _vacuum_threshold(state, tol)
    mask = np.all(np.abs(state.amplitudes[:, cols]) <= thr, axis=1)
    kept = CoherentSuperposition(state.mode_labels, state.coefficients[mask], state.amplitudes[mask])
    probability = norm_squared(kept) / total
    kept = canonicalize(drop_modes(kept, modes), tol)
    return SelectionOutcome(kept, float(max(probability, 0.0)))


def project_vacuum(
    state: CoherentSuperposition,
    mode: str,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> SelectionOutcome:
    """Physical projection of one mode onto the vacuum ``|0><0|``."""
    k = state.index(mode)
    total = norm_squared(state)
    if total <= tol.coeff_zero_tol:
        raise DegenerateStateError("vacuum projection of a zero-norm state")
    weights = np.exp(-0.5 * np.abs(state.amplitudes[:, k]) ** 2)
    projected = CoherentSuperposition(state.mode_labels, state.coefficients * weights, state.amplitudes)
    result = canonicalize(drop_modes(projected, [mode]), tol)
    return SelectionOutcome(result, float(norm_squared(result) / total))


def discard_correlated_mode(
    state: CoherentSuperposition,
    mode: str,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> CoherentSuperposition:
    """Detect ``mode`` without resolving its amplitude sign, and drop it.

    This is a pure-state map only when the discarded amplitude is fixed by the
    amplitudes of the remaining modes; otherwise ``DecoherenceError``.
    """
    k = state.index(mode)
    rest = [m for m in range(state.n_modes) if m != k]
    same_rest = _close_matrix(state.amplitudes[:, rest], tol.amp_merge_tol)
    same_here = _close_matrix(state.amplitudes[:, [k]], tol.amp_merge_tol)
    bad = np.argwhere(same_rest & ~same_here)
    if len(bad):
        j, l = bad[0]
        raise DecoherenceError(
            f"mode {mode!r} takes amplitudes {state.amplitudes[j, k]:.6g} and "
            f"{state.amplitudes[l, k]:.6g} on the same pattern of the remaining modes"
        )
    return canonicalize(drop_modes(state, [mode]), tol)
