"""Entanglement concentration for four-mode cluster-type entangled coherent states.

Two linear-optics pipelines turn a partially entangled cluster-type state into
the maximally entangled one:

* ECP1 mixes mode ``d`` with a single-mode ancilla ``beta|a> + gamma|-a>`` on a
  beam splitter and post-selects vacuum in one output port.
* ECP2 uses a two-mode ancilla on ``(e, f)`` and a single-mode ancilla on
  ``g``, three beam splitters and a triple vacuum post-selection.

Both finish by splitting the sqrt2-amplified modes on vacuum-port splitters
and detecting one output of each without resolving the sign.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from .core import (
    CoherentSuperposition,
    DegenerateStateError,
    InvalidArgumentError,
    canonicalize,
    fidelity,
    norm_squared,
    tensor_product,
)
from .optics import (
    beam_splitter,
    beam_splitter_with_vacuum,
    discard_correlated_mode,
    select_vacuum_branch,
    swap_modes,
)

CLUSTER_LABELS = ("a", "b", "c", "d")

# Amplitude pattern (in units of alpha) and sign of the four cluster terms.
CLUSTER_PATTERN = (
    ((1, 1, 1, 1), 1),
    ((-1, -1, 1, 1), 1),
    ((1, 1, -1, -1), 1),
    ((-1, -1, -1, -1), -1),
)


def _real(name: str, value) -> float:
    if isinstance(value, complex):
        if value.imag != 0:
            raise InvalidArgumentError(f"{name} must be real, got {value!r}")
        value = value.real
    value = float(value)
    if not math.isfinite(value):
        raise InvalidArgumentError(f"{name} must be finite, got {value!r}")
    return value


def _alpha(value) -> float:
    value = _real("alpha", value)
    if value <= 0:
        raise InvalidArgumentError(f"alpha must be > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class Ecp1Params:
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))
        object.__setattr__(self, "beta", _real("beta", self.beta))
        object.__setattr__(self, "gamma", _real("gamma", self.gamma))
        if self.beta == 0 and self.gamma == 0:
            raise DegenerateStateError("beta and gamma cannot both be zero")

    @classmethod
    def from_beta(cls, alpha: float, beta: float) -> Ecp1Params:
        """``gamma = +sqrt(1 - beta^2)``, the convention used for beta sweeps."""
        if not -1.0 <= beta <= 1.0:
            raise InvalidArgumentError(f"beta must lie in [-1, 1] to derive gamma, got {beta!r}")
        return cls(alpha, beta, math.sqrt(max(0.0, 1.0 - beta * beta)))


@dataclass(frozen=True)
class ThetaParams:
    theta1: float
    theta2: float
    theta3: float


def theta_to_coefficients(t: ThetaParams) -> tuple[float, float, float, float]:
    """Hyperspherical angles to ``(beta, gamma, delta, eta)`` with unit sum of squares."""
    s3 = math.sin(t.theta3)
    s2 = math.sin(t.theta2)
    return (
        math.cos(t.theta3),
        s3 * math.cos(t.theta2),
        s3 * s2 * math.cos(t.theta1),
        s3 * s2 * math.sin(t.theta1),
    )


@dataclass(frozen=True)
class Ecp2Params:
    alpha: float
    beta: float
    gamma: float
    delta: float
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _alpha(self.alpha))
        for name in ("beta", "gamma", "delta", "eta"):
            object.__setattr__(self, name, _real(name, getattr(self, name)))
        if not any(self.coefficients):
            raise DegenerateStateError("at least one of beta, gamma, delta, eta must be nonzero")

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.beta, self.gamma, self.delta, self.eta)

    @classmethod
    def from_theta(cls, alpha: float, t: ThetaParams) -> Ecp2Params:
        return cls(alpha, *theta_to_coefficients(t))


# ---------------------------------------------------------------------------
# normalization constants


def _inv_sqrt(radicand: float, name: str) -> float:
    if not radicand > 0:
        raise DegenerateStateError(f"{name}: non-positive radicand {radicand!r}")
    return radicand ** -0.5


def n1(p: Ecp1Params) -> float:
    b, g = p.beta, p.gamma
    return _inv_sqrt(2 * b * b + 2 * g * g + 2 * math.exp(-4 * p.alpha**2) * (b * b - g * g), "N1")


def n2(p: Ecp1Params) -> float:
    b, g = p.beta, p.gamma
    return _inv_sqrt(b * b + g * g + 2 * b * g * math.exp(-2 * p.alpha**2), "N2")


def n3(q: Ecp2Params) -> float:
    b, g, d, e = q.coefficients
    x4 = math.exp(-4 * q.alpha**2)
    x8 = math.exp(-8 * q.alpha**2)
    radicand = (
        b * b + g * g + d * d + e * e
        + 2 * (b * g + b * d - g * e - d * e) * x4
        + 2 * (d * g - e * b) * x8
    )
    return _inv_sqrt(radicand, "N3")


def n4(q: Ecp2Params) -> float:
    b, g, d, e = q.coefficients
    x2 = math.exp(-2 * q.alpha**2)
    x4 = math.exp(-4 * q.alpha**2)
    radicand = (
        b * b + g * g + d * d + e * e
        + 2 * (b * g + b * d + e * g + d * e) * x2
        + 2 * (d * g + e * b) * x4
    )
    return _inv_sqrt(radicand, "N4")


def _n5_radicand(q: Ecp2Params) -> float:
    b, g, d, e = q.coefficients
    return (b * g) ** 2 + (d * e) ** 2 + 2 * b * g * d * e * math.exp(-2 * q.alpha**2)


def n5(q: Ecp2Params) -> float:
    return _inv_sqrt(_n5_radicand(q), "N5")


def formula_p_ecp1(p: Ecp1Params) -> float:
    """Closed-form success probability ``4 |N1 N2 beta gamma|^2``."""
    return 4 * (n1(p) * n2(p) * p.beta * p.gamma) ** 2


def formula_p_ecp2(q: Ecp2Params) -> float:
    """Closed-form success probability ``4 |N3 N4 N5 beta gamma delta eta|^2``.

    When ``beta gamma delta eta = 0`` the value is 0, including the corner
    where the ``g`` ancilla itself vanishes and N5 is undefined.
    """
    b, g, d, e = q.coefficients
    prod = b * g * d * e
    if prod == 0:
        return 0.0
    return 4 * (n3(q) * n4(q)) ** 2 * prod * prod / _n5_radicand(q)


# ---------------------------------------------------------------------------
# state builders


def _build(labels: Sequence[str], alpha: float, terms, scale: float = 1.0) -> CoherentSuperposition:
    raw = CoherentSuperposition.from_terms(
        labels,
        [(scale * c, [m * alpha for m in mults]) for mults, c in terms],
    )
    return canonicalize(raw)


def _labels(labels: Sequence[str], n: int) -> tuple[str, ...]:
    labels = tuple(labels)
    if len(labels) != n:
        raise InvalidArgumentError(f"expected {n} mode labels, got {labels}")
    return labels


def build_target_mes(alpha: float, labels: Sequence[str] = CLUSTER_LABELS) -> CoherentSuperposition:
    """The maximally entangled cluster-type state with its nominal 1/2 prefactor."""
    alpha = _alpha(alpha)
    return _build(_labels(labels, 4), alpha, [(m, 0.5 * s) for m, s in CLUSTER_PATTERN])


def build_partial_ecp1(p: Ecp1Params, labels: Sequence[str] = CLUSTER_LABELS, normalized: bool = True) -> CoherentSuperposition:
    weights = (p.beta, p.beta, p.gamma, p.gamma)
    terms = [(m, w * s) for (m, s), w in zip(CLUSTER_PATTERN, weights)]
    return _build(_labels(labels, 4), p.alpha, terms, n1(p) if normalized else 1.0)


def build_ancilla_single(p: Ecp1Params, labels: Sequence[str] = ("e",), normalized: bool = True) -> CoherentSuperposition:
    terms = [((1,), p.beta), ((-1,), p.gamma)]
    return _build(_labels(labels, 1), p.alpha, terms, n2(p) if normalized else 1.0)


def build_partial_ecp2(q: Ecp2Params, labels: Sequence[str] = CLUSTER_LABELS, normalized: bool = True) -> CoherentSuperposition:
    terms = [(m, w * s) for (m, s), w in zip(CLUSTER_PATTERN, q.coefficients)]
    return _build(_labels(labels, 4), q.alpha, terms, n3(q) if normalized else 1.0)


def build_ancilla_two_mode(q: Ecp2Params, labels: Sequence[str] = ("e", "f"), normalized: bool = True) -> CoherentSuperposition:
    b, g, d, e = q.coefficients
    terms = [((1, 1), b), ((1, -1), g), ((-1, 1), d), ((-1, -1), e)]
    return _build(_labels(labels, 2), q.alpha, terms, n4(q) if normalized else 1.0)


def build_ancilla_g(q: Ecp2Params, labels: Sequence[str] = ("g",), normalized: bool = True) -> CoherentSuperposition:
    b, g, d, e = q.coefficients
    terms = [((1,), b * g), ((-1,), d * e)]
    return _build(_labels(labels, 1), q.alpha, terms, n5(q) if normalized else 1.0)


# ---------------------------------------------------------------------------
# pipelines


@dataclass(frozen=True)
class StageRecord:
    name: str
    term_count: int
    norm_squared: float
    mode_labels: tuple[str, ...]
    state: CoherentSuperposition = field(repr=False, compare=False)

    @classmethod
    def of(cls, name: str, state: CoherentSuperposition) -> StageRecord:
        return cls(name, state.n_terms, norm_squared(state), state.mode_labels, state)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "term_count": self.term_count,
            "norm_squared": self.norm_squared,
            "mode_labels": list(self.mode_labels),
        }


@dataclass(frozen=True)
class ProtocolReport:
    protocol: str
    params: Ecp1Params | Ecp2Params
    stages: tuple[StageRecord, ...]
    p_exact: float
    p_formula: float
    final_fidelity: float
    final_state: CoherentSuperposition = field(repr=False, compare=False)

    def stage(self, name: str) -> StageRecord:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def term_counts(self) -> tuple[int, ...]:
        return tuple(s.term_count for s in self.stages)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "version": __version__,
            "params": {k: getattr(self.params, k) for k in self.params.__dataclass_fields__},
            "stages": [s.to_dict() for s in self.stages],
            "p_exact": self.p_exact,
            "p_formula": self.p_formula,
            "final_fidelity": self.final_fidelity,
            "final_state": state_to_dict(self.final_state),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def summary(self) -> str:
        lines = [f"protocol: {self.protocol}"]
        for k in self.params.__dataclass_fields__:
            lines.append(f"  {k} = {getattr(self.params, k):.17g}")
        lines.append("stages:")
        for s in self.stages:
            lines.append(
                f"  {s.name:<28} terms={s.term_count:<3} norm^2={s.norm_squared:.12g} "
                f"modes={','.join(s.mode_labels)}"
            )
        lines.append(f"p_exact        = {self.p_exact:.17g}")
        lines.append(f"p_formula      = {self.p_formula:.17g}")
        lines.append(f"final_fidelity = {self.final_fidelity:.17g}")
        return "\n".join(lines)


def state_to_dict(state: CoherentSuperposition) -> dict:
    return {
        "mode_labels": list(state.mode_labels),
        "terms": [
            {
                "coefficient": [c.real, c.imag],
                "amplitudes": [[a.real, a.imag] for a in row],
            }
            for c, row in zip(state.coefficients.tolist(), state.amplitudes.tolist())
        ],
    }


def cluster_fidelity(state: CoherentSuperposition, alpha: float) -> float:
    """Fidelity with the cluster pattern laid on ``state``'s own four modes (0 for an empty branch)."""
    if state.n_terms == 0:
        return 0.0
    return fidelity(state, build_target_mes(alpha, state.mode_labels))


def _record(stages: list | None, name: str, state: CoherentSuperposition) -> None:
    if stages is not None:
        stages.append(StageRecord.of(name, state))


def _ecp1_front(p: Ecp1Params, stages: list | None):
    state = tensor_product(build_partial_ecp1(p), build_ancilla_single(p))
    _record(stages, "combined", state)
    state = beam_splitter(state, "d", "e", ("d1", "e1"))
    _record(stages, "bs1", state)
    return select_vacuum_branch(state, ["d1"])


def _ecp2_front(q: Ecp2Params, stages: list | None):
    state = tensor_product(
        tensor_product(build_partial_ecp2(q), build_ancilla_two_mode(q)),
        build_ancilla_g(q),
    )
    _record(stages, "combined", state)
    state = beam_splitter(state, "a", "f", ("a1", "f1"))
    state = beam_splitter(state, "c", "e", ("c1", "e1"))
    state = beam_splitter(state, "d", "g", ("d1", "g1"))
    _record(stages, "bs1_bs2_bs3", state)
    return select_vacuum_branch(state, ["a1", "d1", "e1"])


def run_ecp1(p: Ecp1Params) -> ProtocolReport:
    stages = []
    selected = _ecp1_front(p, stages)
    state = selected.state
    stages.append(StageRecord.of("postselect_d1", state))
    state = beam_splitter_with_vacuum(state, "e1", "e2", "e3")
    stages.append(StageRecord.of("bs2", state))
    state = discard_correlated_mode(state, "e3")
    stages.append(StageRecord.of("detect_e3", state))
    return ProtocolReport(
        protocol="ecp1",
        params=p,
        stages=tuple(stages),
        p_exact=selected.probability,
        p_formula=formula_p_ecp1(p),
        final_fidelity=cluster_fidelity(state, p.alpha),
        final_state=state,
    )


def run_ecp2(q: Ecp2Params) -> ProtocolReport:
    stages = []
    selected = _ecp2_front(q, stages)
    state = selected.state
    stages.append(StageRecord.of("postselect_a1_d1_e1", state))
    state = swap_modes(state, "c1", "f1")
    stages.append(StageRecord.of("swap_c1_f1", state))
    for mode in ("f1", "c1", "g1"):
        stem = mode[0]
        state = beam_splitter_with_vacuum(state, mode, f"{stem}2", f"{stem}3")
    stages.append(StageRecord.of("bs4_bs5_bs6", state))
    for mode in ("f2", "c2", "g2"):
        state = discard_correlated_mode(state, mode)
    stages.append(StageRecord.of("detect_f2_c2_g2", state))
    return ProtocolReport(
        protocol="ecp2",
        params=q,
        stages=tuple(stages),
        p_exact=selected.probability,
        p_formula=formula_p_ecp2(q),
        final_fidelity=cluster_fidelity(state, q.alpha),
        final_state=state,
    )


def p_exact_ecp1(p: Ecp1Params) -> float:
    """Probability of the vacuum post-selection, without the detection stages."""
    return _ecp1_front(p, None).probability


def p_exact_ecp2(q: Ecp2Params) -> float:
    """Probability of the triple vacuum post-selection.

    Returns 0 when ``beta gamma = delta eta = 0``: the ``g`` ancilla cannot be
    prepared there and the success probability vanishes in every limit.
    """
    b, g, d, e = q.coefficients
    if b * g == 0 and d * e == 0:
        return 0.0
    return _ecp2_front(q, None).probability
