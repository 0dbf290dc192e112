"""Exact algebra for finite superpositions of multimode coherent states.

A state is a list of branch terms. Each term carries a complex coefficient and
one complex coherent amplitude per mode, so a term is the product ket
``c |u_0>|u_1>...|u_{M-1}>``. Coherent states are not orthogonal, so every
norm, overlap and fidelity goes through the Gram contraction

    <s|t> = sum_jk conj(c_j) d_k prod_m <u_jm|v_km>

with the single-mode kernel ``<u|v> = exp(-|u|^2/2 - |v|^2/2 + conj(u) v)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class CoherentStateError(Exception):
    """Base class for errors raised by the state engine."""


class InvalidArgumentError(CoherentStateError, ValueError):
    """A scalar argument is non-finite or otherwise unusable."""


class ShapeError(CoherentStateError, ValueError):
    """Mode registers do not line up (count mismatch, unknown or duplicate label)."""


class DegenerateStateError(CoherentStateError, ArithmeticError):
    """An operation needs a state (or parameter set) with nonzero norm."""


class DecoherenceError(CoherentStateError):
    """Discarding a mode would not be a pure-state map."""


@dataclass(frozen=True)
class ToleranceConfig:
    amp_merge_tol: float = 1e-9
    coeff_zero_tol: float = 1e-12

    def __post_init__(self):
        for name in ("amp_merge_tol", "coeff_zero_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be finite and > 0, got {value!r}")


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class BranchTerm:
    """One product ket: a coefficient and one coherent amplitude per mode."""

    coefficient: complex
    amplitudes: tuple[complex, ...]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class CoherentSuperposition:
    """Finite superposition of product coherent states over a labelled register.

    Instances are immutable. Coefficients live in a ``(T,)`` complex array and
    amplitudes in a ``(T, M)`` complex array; both are read-only views.

    Args:
        mode_labels: Unique mode names, in register order.
        coefficients: Complex coefficient per term.
        amplitudes: Complex amplitude per term and mode.
    """

    __slots__ = ("_labels", "_coeffs", "_amps")

    def __init__(self, mode_labels: Sequence[str], coefficients, amplitudes):
        labels = tuple(str(label) for label in mode_labels)
        if len(set(labels)) != len(labels):
            raise ShapeError(f"mode labels must be unique, got {labels}")
        coeffs = np.array(coefficients, dtype=complex).reshape(-1)
        amps = np.array(amplitudes, dtype=complex).reshape(len(coeffs), len(labels))
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(amps))):
            raise InvalidArgumentError("coefficients and amplitudes must be finite")
        self._labels = labels
        self._coeffs = _frozen(coeffs)
        self._amps = _frozen(amps)

    @classmethod
    def from_terms(cls, mode_labels: Sequence[str], terms: Iterable) -> CoherentSuperposition:
        """Build from ``BranchTerm`` objects or ``(coefficient, amplitudes)`` pairs."""
        labels = tuple(mode_labels)
        coeffs, amps = [], []
        for term in terms:
            if isinstance(term, BranchTerm):
                coeff, vec = term.coefficient, term.amplitudes
            else:
                coeff, vec = term
            vec = tuple(vec)
            if len(vec) != len(labels):
                raise ShapeError(
                    f"term has {len(vec)} amplitudes but the register has {len(labels)} modes"
                )
            coeffs.append(coeff)
            amps.append(vec)
        return cls(labels, coeffs, np.array(amps, dtype=complex).reshape(len(coeffs), len(labels)))

    @classmethod
    def unit(cls) -> CoherentSuperposition:
        """The zero-mode state with a single unit term (identity for tensor_product)."""
        return cls((), [1.0], np.zeros((1, 0)))

    @classmethod
    def vacuum(cls, label: str) -> CoherentSuperposition:
        return cls((label,), [1.0], [[0.0]])

    @property
    def mode_labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps

    @property
    def n_modes(self) -> int:
        return len(self._labels)

    @property
    def n_terms(self) -> int:
        return len(self._coeffs)

    @property
    def terms(self) -> tuple[BranchTerm, ...]:
        return tuple(
            BranchTerm(complex(c), tuple(complex(a) for a in row))
            for c, row in zip(self._coeffs, self._amps)
        )

    def __len__(self) -> int:
        return self.n_terms

    def index(self, label: str) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise ShapeError(f"unknown mode label {label!r}; register is {self._labels}") from None

    def scaled(self, factor: complex) -> CoherentSuperposition:
        return CoherentSuperposition(self._labels, self._coeffs * factor, self._amps)

    def relabeled(self, mode_labels: Sequence[str]) -> CoherentSuperposition:
        if len(mode_labels) != self.n_modes:
            raise ShapeError(f"need {self.n_modes} labels, got {len(mode_labels)}")
        return CoherentSuperposition(mode_labels, self._coeffs, self._amps)

    def __repr__(self) -> str:
        return (
            f"CoherentSuperposition(modes={list(self._labels)}, "
            f"terms={self.n_terms})"
        )

    def pretty(self, alpha: float | None = None, digits: int = 6) -> str:
        """Human-readable ket expansion; amplitudes shown in units of ``alpha`` if given."""
        if self.n_terms == 0:
            return "0"
        lines = []
        for c, row in zip(self._coeffs, self._amps):
            kets = "".join(
                f"|{_fmt_amp(a, alpha, digits)}>_{label}" for a, label in zip(row, self._labels)
            )
            lines.append(f"({_fmt_complex(c, digits)}) {kets}")
        return "\n".join(lines)


def _fmt_complex(z: complex, digits: int) -> str:
    if abs(z.imag) < 10 ** (-digits):
        return f"{z.real:.{digits}g}"
    return f"{z.real:.{digits}g}{z.imag:+.{digits}g}j"


def _fmt_amp(a: complex, alpha: float | None, digits: int) -> str:
    if alpha:
        ratio = a / alpha
        for value, name in ((0, "0"), (1, "a"), (-1, "-a"), (math.sqrt(2), "√2a"), (-math.sqrt(2), "-√2a")):
            if abs(ratio - value) < 1e-9:
                return name
    return _fmt_complex(a, digits)


def _check_finite(*values: complex) -> None:
    for v in values:
        if not cmath.isfinite(v):
            raise InvalidArgumentError(f"non-finite amplitude {v!r}")


def mode_overlap(u: complex, v: complex) -> complex:
    """Overlap ``<u|v>`` of two single-mode coherent states."""
    _check_finite(u, v)
    u, v = complex(u), complex(v)
    return cmath.exp(-0.5 * abs(u) ** 2 - 0.5 * abs(v) ** 2 + u.conjugate() * v)


def _require_same_modes(lhs: CoherentSuperposition, rhs: CoherentSuperposition) -> None:
    if lhs.n_modes != rhs.n_modes:
        raise ShapeError(f"mode count mismatch: {lhs.n_modes} vs {rhs.n_modes}")


def gram_matrix(lhs: CoherentSuperposition, rhs: CoherentSuperposition) -> np.ndarray:
    """Matrix of term overlaps ``G[j, k] = prod_m <u_jm|v_km>`` (coefficients excluded)."""
    _require_same_modes(lhs, rhs)
    u, v = lhs.amplitudes, rhs.amplitudes
    # sum_m of the per-mode kernel exponents, as one matrix product
    exponent = (
        -0.5 * np.sum(np.abs(u) ** 2, axis=1)[:, None]
        - 0.5 * np.sum(np.abs(v) ** 2, axis=1)[None, :]
        + np.conj(u) @ v.T
    )
    return np.exp(exponent)


def inner_product(lhs: CoherentSuperposition, rhs: CoherentSuperposition) -> complex:
    """``<lhs|rhs>``, conjugate-linear in ``lhs``. Modes are matched by position."""
    _require_same_modes(lhs, rhs)
    if lhs.n_terms == 0 or rhs.n_terms == 0:
        return 0j
    return complex(np.conj(lhs.coefficients) @ gram_matrix(lhs, rhs) @ rhs.coefficients)


def norm_squared(state: CoherentSuperposition) -> float:
    return inner_product(state, state).real


def normalize(state: CoherentSuperposition, tol: ToleranceConfig = DEFAULT_TOL) -> CoherentSuperposition:
    n2 = norm_squared(state)
    if n2 <= tol.coeff_zero_tol:
        raise DegenerateStateError(f"cannot normalize a state with norm^2 = {n2:.3g}")
    return state.scaled(1.0 / math.sqrt(n2))


def _close_matrix(amps: np.ndarray, tol: float) -> np.ndarray:
    if amps.shape[1] == 0:
        return np.ones((len(amps), len(amps)), dtype=bool)
    diff = np.abs(amps[:, None, :] - amps[None, :, :])
    return np.all(diff <= tol, axis=-1)


def _sort_order(amps: np.ndarray, tol: float) -> np.ndarray:
    # Quantize to the merge grid so float noise below tol cannot reorder terms.
    if amps.shape[1] == 0 or len(amps) < 2:
        return np.arange(len(amps))
    keys = []
    for m in reversed(range(amps.shape[1])):
        keys.append(np.rint(amps[:, m].imag / tol))
        keys.append(np.rint(amps[:, m].real / tol))
    return np.lexsort(keys)


def canonicalize(state: CoherentSuperposition, tol: ToleranceConfig = DEFAULT_TOL) -> CoherentSuperposition:
    """Merge terms with matching amplitude vectors, drop ~zero terms, sort.

    Two terms merge when every amplitude component agrees within
    ``tol.amp_merge_tol``; the first term of a group keeps its amplitudes and
    receives the summed coefficient. Surviving terms are sorted
    lexicographically by their ``(re, im)`` amplitude components.
    """
    coeffs, amps = state.coefficients, state.amplitudes
    n = len(coeffs)
    if n == 0:
        return state
    close = _close_matrix(amps, tol.amp_merge_tol)
    if np.count_nonzero(close) == n:
        keep = np.abs(coeffs) > tol.coeff_zero_tol
        new_amps, new_coeffs = amps[keep], coeffs[keep]
    else:
        assigned = np.zeros(n, dtype=bool)
        keep_rows, keep_coeffs = [], []
        for i in range(n):
            if assigned[i]:
                continue
            group = close[i] & ~assigned
            assigned |= group
            total = coeffs[group].sum()
            if abs(total) > tol.coeff_zero_tol:
                keep_rows.append(i)
                keep_coeffs.append(total)
        new_amps = amps[keep_rows]
        new_coeffs = np.array(keep_coeffs, dtype=complex)
    order = _sort_order(new_amps, tol.amp_merge_tol)
    return CoherentSuperposition(state.mode_labels, new_coeffs[order], new_amps[order])


def tensor_product(s1: CoherentSuperposition, s2: CoherentSuperposition, tol: ToleranceConfig = DEFAULT_TOL) -> CoherentSuperposition:
    """Product state on the concatenated register ``s1.modes + s2.modes``."""
    clash = set(s1.mode_labels) & set(s2.mode_labels)
    if clash:
        raise ShapeError(f"duplicate mode labels in tensor product: {sorted(clash)}")
    t1, t2 = s1.n_terms, s2.n_terms
    coeffs = np.outer(s1.coefficients, s2.coefficients).reshape(-1)
    amps = np.concatenate(
        [
            np.repeat(s1.amplitudes, t2, axis=0),
            np.tile(s2.amplitudes, (t1, 1)),
        ],
        axis=1,
    )
    product = CoherentSuperposition(s1.mode_labels + s2.mode_labels, coeffs, amps)
    return canonicalize(product, tol)


def fidelity(state: CoherentSuperposition, target: CoherentSuperposition) -> float:
    """``|<target|state>|^2 / (<target|target> <state|state>)``."""
    n_state = norm_squared(state)
    n_target = norm_squared(target)
    if n_state <= 0 or n_target <= 0:
        raise DegenerateStateError("fidelity needs two states with nonzero norm")
    return abs(inner_product(target, state)) ** 2 / (n_state * n_target)
