"""Self-check suite: closed forms against the exact Gram engine.

Each check returns the largest deviation it observed and whether that stayed
within its tolerance. ``run_checks`` is what ``coherent-ecp validate`` runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import protocols
from .core import CoherentSuperposition, canonicalize, norm_squared
from .optics import beam_splitter, swap_modes


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_deviation: float
    tolerance: float
    samples: int

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name:<34} max_dev={self.max_deviation:.3e} "
            f"tol={self.tolerance:.0e} n={self.samples}"
        )


def random_ecp1(rng: np.random.Generator, alpha_range=(0.2, 3.0)) -> protocols.Ecp1Params:
    return protocols.Ecp1Params(rng.uniform(*alpha_range), *rng.uniform(-1, 1, size=2))


def random_ecp2(rng: np.random.Generator, alpha_range=(0.2, 3.0)) -> protocols.Ecp2Params:
    return protocols.Ecp2Params(rng.uniform(*alpha_range), *rng.uniform(-1, 1, size=4))


def random_state(rng: np.random.Generator, n_modes: int, n_terms: int, scale: float = 1.5) -> CoherentSuperposition:
    labels = [f"m{k}" for k in range(n_modes)]
    coeffs = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    amps = scale * (rng.normal(size=(n_terms, n_modes)) + 1j * rng.normal(size=(n_terms, n_modes)))
    return CoherentSuperposition(labels, coeffs, amps)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _normalization_check(name, draw, build, constant, rng, n) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        params = draw(rng)
        gram = norm_squared(build(params, normalized=False))
        worst = max(worst, _rel(gram, constant(params) ** -2))
    return CheckResult(f"{name} normalization vs Gram", worst, 1e-12, n)


def check_normalizations(rng: np.random.Generator, n: int = 100) -> list[CheckResult]:
    return [
        _normalization_check("N1", random_ecp1, protocols.build_partial_ecp1, protocols.n1, rng, n),
        _normalization_check("N2", random_ecp1, protocols.build_ancilla_single, protocols.n2, rng, n),
        _normalization_check("N3", random_ecp2, protocols.build_partial_ecp2, protocols.n3, rng, n),
        _normalization_check("N4", random_ecp2, protocols.build_ancilla_two_mode, protocols.n4, rng, n),
        _normalization_check("N5", random_ecp2, protocols.build_ancilla_g, protocols.n5, rng, n),
    ]


def check_protocols(rng: np.random.Generator, n: int = 200) -> list[CheckResult]:
    results = []
    for name, draw, run in (
        ("ECP1", random_ecp1, protocols.run_ecp1),
        ("ECP2", random_ecp2, protocols.run_ecp2),
    ):
        worst_p = worst_f = 0.0
        for _ in range(n):
            report = run(draw(rng, (0.3, 3.0)))
            worst_p = max(worst_p, _rel(report.p_exact, report.p_formula))
            worst_f = max(worst_f, abs(report.final_fidelity - 1.0))
        results.append(CheckResult(f"{name} p_exact vs closed form", worst_p, 1e-9, n))
        results.append(CheckResult(f"{name} final fidelity", worst_f, 1e-10, n))
    return results


def check_unitarity(rng: np.random.Generator, n: int = 200) -> list[CheckResult]:
    worst_bs = worst_swap = worst_canon = 0.0
    for _ in range(n):
        state = random_state(rng, int(rng.integers(2, 7)), int(rng.integers(1, 17)))
        i, j = rng.choice(state.n_modes, size=2, replace=False)
        li, lj = state.mode_labels[i], state.mode_labels[j]
        before = norm_squared(state)
        worst_bs = max(worst_bs, abs(norm_squared(beam_splitter(state, li, lj)) - before) / before)
        worst_swap = max(worst_swap, abs(norm_squared(swap_modes(state, li, lj)) - before) / before)
        once = canonicalize(state)
        twice = canonicalize(once)
        same = once.n_terms == twice.n_terms and np.array_equal(once.amplitudes, twice.amplitudes)
        worst_canon = max(
            worst_canon,
            0.0 if same else math.inf,
            float(np.max(np.abs(once.coefficients - twice.coefficients), initial=0.0)) if same else 0.0,
        )
    return [
        CheckResult("beam splitter preserves norm^2", worst_bs, 1e-12, n),
        CheckResult("swap preserves norm^2", worst_swap, 1e-12, n),
        CheckResult("canonicalize idempotent", worst_canon, 0.0, n),
    ]


CHECKS: tuple[Callable[[np.random.Generator], list[CheckResult]], ...] = (
    check_normalizations,
    check_protocols,
    check_unitarity,
)


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    for check in CHECKS:
        results.extend(check(rng))
    return results
