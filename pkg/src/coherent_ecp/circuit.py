"""Line-oriented circuit language for coherent-state linear optics.

One statement per line, whitespace-separated tokens, ``#`` starts a comment::

    alpha 2
    modes a b c d e
    prep_ecp1_input 0.7071067811865476 0.7071067811865476 on a b c d
    prep_ecp1_anc 0.7071067811865476 0.7071067811865476 on e
    bs d e -> d1 e1
    selectvac d1
    assert_terms 4
    bsvac e1 -> e2 e3
    discard e3
    report ecp1

``modes`` declares labels. A preparation (or a block of consecutive ``term``
lines, which covers every label of the latest ``modes`` line) moves declared
labels into the evolving state. The operations after that act on labels that
are in the state. Labels are checked while parsing, so a program that parses
only fails at run time on degenerate states, decoherent discards and
assertions.
"""

from __future__ import annotations

import math
import re
from importlib import resources
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .core import (
    CoherentStateError,
    CoherentSuperposition,
    DegenerateStateError,
    norm_squared,
    normalize,
    tensor_product,
)
from .optics import (
    beam_splitter,
    beam_splitter_with_vacuum,
    discard_correlated_mode,
    project_vacuum,
    select_vacuum_branch,
    swap_modes,
)
from . import protocols


class ParseError(Exception):
    """First syntax or label error in a circuit source, with a 1-based location."""

    def __init__(self, line: int, column: int, message: str, token: str = ""):
        self.line = line
        self.column = column
        self.message = message
        self.token = token
        super().__init__(f"{line}:{column}: {message}" + (f" (at {token!r})" if token else ""))


class CircuitRuntimeError(Exception):
    """An engine error raised while executing a statement."""

    def __init__(self, line: int, error: Exception):
        self.line = line
        self.error = error
        super().__init__(f"line {line}: {type(error).__name__}: {error}")

    @property
    def degenerate(self) -> bool:
        return isinstance(self.error, DegenerateStateError)


# ---------------------------------------------------------------------------
# statements

def _lineno():
    return field(default=0, compare=False)


@dataclass(frozen=True)
class DeclareModes:
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class Term:
    coeff_re: float
    coeff_im: float
    multipliers: tuple[str, ...]
    line: int = _lineno()

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(_mult_value(tok) for tok in self.multipliers)


@dataclass(frozen=True)
class PrepareEcp1Input:
    beta: float
    gamma: float
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class PrepareEcp1Ancilla:
    beta: float
    gamma: float
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class PrepareEcp2Input:
    beta: float
    gamma: float
    delta: float
    eta: float
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class PrepareEcp2TwoMode:
    beta: float
    gamma: float
    delta: float
    eta: float
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class PrepareEcp2G:
    beta: float
    gamma: float
    delta: float
    eta: float
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class Bs:
    mode_i: str
    mode_j: str
    out_i: str
    out_j: str
    line: int = _lineno()


@dataclass(frozen=True)
class BsVac:
    mode: str
    new_1: str
    new_2: str
    line: int = _lineno()


@dataclass(frozen=True)
class Swap:
    mode_i: str
    mode_j: str
    line: int = _lineno()


@dataclass(frozen=True)
class SelectVac:
    labels: tuple[str, ...]
    line: int = _lineno()


@dataclass(frozen=True)
class ProjVac:
    label: str
    line: int = _lineno()


@dataclass(frozen=True)
class Discard:
    label: str
    line: int = _lineno()


@dataclass(frozen=True)
class Normalize:
    line: int = _lineno()


@dataclass(frozen=True)
class AssertTerms:
    count: int
    line: int = _lineno()


@dataclass(frozen=True)
class AssertProbGe:
    threshold: float
    line: int = _lineno()


@dataclass(frozen=True)
class Report:
    target: str = "none"
    line: int = _lineno()


Statement = Union[
    DeclareModes, Term, PrepareEcp1Input, PrepareEcp1Ancilla, PrepareEcp2Input,
    PrepareEcp2TwoMode, PrepareEcp2G, Bs, BsVac, Swap, SelectVac, ProjVac,
    Discard, Normalize, AssertTerms, AssertProbGe, Report,
]

_PREP_KEYWORDS = {
    "prep_ecp1_input": (PrepareEcp1Input, 2, 4),
    "prep_ecp1_anc": (PrepareEcp1Ancilla, 2, 1),
    "prep_ecp2_input": (PrepareEcp2Input, 4, 4),
    "prep_ecp2_twomode": (PrepareEcp2TwoMode, 4, 2),
    "prep_ecp2_g": (PrepareEcp2G, 4, 1),
}
_PREP_NAMES = {cls: kw for kw, (cls, _, _) in _PREP_KEYWORDS.items()}
REPORT_TARGETS = ("ecp1", "ecp2", "none")


@dataclass(frozen=True)
class CircuitProgram:
    alpha: Optional[float]
    statements: tuple[Statement, ...]
    source_name: str = field(default="<string>", compare=False)


# ---------------------------------------------------------------------------
# parsing

_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\Z")
_KEYWORDS = {
    "alpha", "modes", "term", "bs", "bsvac", "swap", "selectvac", "projvac",
    "discard", "normalize", "assert_terms", "assert_prob_ge", "report", "on",
    *_PREP_KEYWORDS,
}


def _mult_value(token: str) -> float:
    if token == "sqrt2":
        return math.sqrt(2.0)
    if token == "-sqrt2":
        return -math.sqrt(2.0)
    return float(token)


@dataclass
class _Tok:
    text: str
    col: int


class _Line:
    """Cursor over the tokens of one source line."""

    def __init__(self, lineno: int, raw: str):
        self.lineno = lineno
        self.raw = raw
        code = raw.split("#", 1)[0]
        self.toks = [_Tok(m.group(), m.start() + 1) for m in re.finditer(r"\S+", code)]
        self.pos = 1
        self.end_col = len(code.rstrip()) + 1

    def fail(self, message: str, tok: _Tok | None = None) -> ParseError:
        if tok is None:
            return ParseError(self.lineno, max(self.end_col, 1), message)
        return ParseError(self.lineno, tok.col, message, tok.text)

    def next(self, what: str) -> _Tok:
        if self.pos >= len(self.toks):
            raise self.fail(f"expected {what}")
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def more(self) -> bool:
        return self.pos < len(self.toks)

    def done(self) -> None:
        if self.more():
            raise self.fail("unexpected token", self.toks[self.pos])

    def number(self, what: str) -> float:
        tok = self.next(what)
        if not _DECIMAL_RE.match(tok.text):
            raise self.fail(f"expected {what} (a decimal number)", tok)
        return float(tok.text)

    def integer(self, what: str) -> int:
        tok = self.next(what)
        if not re.fullmatch(r"\d+", tok.text):
            raise self.fail(f"expected {what} (a non-negative integer)", tok)
        return int(tok.text)

    def label(self) -> _Tok:
        tok = self.next("a mode label")
        if not _LABEL_RE.match(tok.text) or tok.text in _KEYWORDS:
            raise self.fail("invalid mode label", tok)
        return tok

    def labels_to_end(self, minimum: int = 1) -> list[_Tok]:
        out = []
        while self.more():
            out.append(self.label())
        if len(out) < minimum:
            raise self.fail("expected a mode label")
        return out

    def expect(self, word: str) -> None:
        tok = self.next(f"'{word}'")
        if tok.text != word:
            raise self.fail(f"expected '{word}'", tok)


class _Registry:
    """Label bookkeeping: declared ever, declared but unprepared, and in the state."""

    def __init__(self):
        self.declared: set[str] = set()
        self.pending: list[str] = []
        self.live: list[str] = []

    def declare(self, line: _Line, toks: list[_Tok], consumed: tuple[str, ...] = ()) -> None:
        seen = set()
        for tok in toks:
            name = tok.text
            if name in seen or (name in self.declared and name not in consumed):
                raise line.fail(f"duplicate declaration of mode {name!r}", tok)
            seen.add(name)
        self.declared.update(seen)

    def use_live(self, line: _Line, tok: _Tok) -> str:
        if tok.text not in self.live:
            if tok.text in self.pending:
                raise line.fail(f"mode {tok.text!r} is declared but not prepared yet", tok)
            raise line.fail(f"undeclared mode {tok.text!r}", tok)
        return tok.text

    def claim(self, line: _Line, toks: list[_Tok]) -> tuple[str, ...]:
        names = [t.text for t in toks]
        for tok in toks:
            if tok.text not in self.pending:
                if tok.text in self.live:
                    raise line.fail(f"mode {tok.text!r} is already prepared", tok)
                raise line.fail(f"undeclared mode {tok.text!r}", tok)
        if len(set(names)) != len(names):
            raise line.fail("a mode is listed twice", toks[0])
        for name in names:
            self.pending.remove(name)
        self.live.extend(names)
        return tuple(names)

    def replace(self, old: list[str], new: list[str]) -> None:
        for name in old:
            self.live.remove(name)
        self.live.extend(new)


def parse_circuit(source: str, source_name: str = "<string>") -> CircuitProgram:
    """Parse circuit text; raises ``ParseError`` at the first problem."""
    alpha: Optional[float] = None
    statements: list[Statement] = []
    reg = _Registry()
    term_modes: tuple[str, ...] | None = None
    term_block_open = False

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = _Line(lineno, raw)
        if not line.toks:
            continue
        head = line.toks[0]
        kw = head.text
        in_term_block = False

        if kw == "alpha":
            if alpha is not None:
                raise line.fail("alpha is already set", head)
            value_tok = line.toks[1] if len(line.toks) > 1 else None
            value = line.number("a value for alpha")
            if not (value > 0 and math.isfinite(value)):
                raise line.fail("alpha must be positive", value_tok)
            line.done()
            alpha = value
            continue

        if kw in ("term",) or kw in _PREP_KEYWORDS:
            if alpha is None:
                raise line.fail("alpha must be set before preparing states", head)

        if kw == "modes":
            toks = line.labels_to_end()
            reg.declare(line, toks)
            reg.pending.extend(t.text for t in toks)
            term_modes = tuple(t.text for t in toks)
            stmt = DeclareModes(term_modes, lineno)
        elif kw == "term":
            re_part = line.number("real part of the coefficient")
            im_part = line.number("imaginary part of the coefficient")
            line.expect(":")
            mults = []
            while line.more():
                tok = line.next("an amplitude multiplier")
                if tok.text not in ("sqrt2", "-sqrt2") and not _DECIMAL_RE.match(tok.text):
                    raise line.fail("expected an amplitude multiplier (decimal or sqrt2)", tok)
                mults.append(tok.text)
            if term_modes is None:
                raise line.fail("term needs a preceding 'modes' declaration", head)
            if len(mults) != len(term_modes):
                raise line.fail(
                    f"term has {len(mults)} multipliers but 'modes' declared {len(term_modes)}", head
                )
            if not term_block_open:
                reg.claim(line, [_Tok(m, head.col) for m in term_modes])
            in_term_block = True
            stmt = Term(re_part, im_part, tuple(mults), lineno)
        elif kw in _PREP_KEYWORDS:
            cls, n_coeffs, n_labels = _PREP_KEYWORDS[kw]
            coeffs = [line.number("a coefficient") for _ in range(n_coeffs)]
            line.expect("on")
            toks = line.labels_to_end()
            if len(toks) != n_labels:
                raise line.fail(f"{kw} acts on {n_labels} mode(s), got {len(toks)}", toks[0])
            stmt = cls(*coeffs, reg.claim(line, toks), lineno)
        elif kw == "bs":
            i, j = line.label(), line.label()
            line.expect("->")
            oi, oj = line.label(), line.label()
            line.done()
            names = [reg.use_live(line, i), reg.use_live(line, j)]
            if names[0] == names[1]:
                raise line.fail("beam splitter needs two distinct modes", j)
            reg.declare(line, [oi, oj], consumed=tuple(names))
            reg.replace(names, [oi.text, oj.text])
            stmt = Bs(i.text, j.text, oi.text, oj.text, lineno)
        elif kw == "bsvac":
            m = line.label()
            line.expect("->")
            n1, n2 = line.label(), line.label()
            line.done()
            name = reg.use_live(line, m)
            reg.declare(line, [n1, n2], consumed=(name,))
            reg.replace([name], [n1.text, n2.text])
            stmt = BsVac(m.text, n1.text, n2.text, lineno)
        elif kw == "swap":
            i, j = line.label(), line.label()
            line.done()
            reg.use_live(line, i)
            reg.use_live(line, j)
            stmt = Swap(i.text, j.text, lineno)
        elif kw == "selectvac":
            toks = line.labels_to_end()
            names = [reg.use_live(line, t) for t in toks]
            if len(set(names)) != len(names):
                raise line.fail("a mode is listed twice", toks[0])
            reg.replace(names, [])
            stmt = SelectVac(tuple(names), lineno)
        elif kw in ("projvac", "discard"):
            tok = line.label()
            line.done()
            reg.replace([reg.use_live(line, tok)], [])
            stmt = (ProjVac if kw == "projvac" else Discard)(tok.text, lineno)
        elif kw == "normalize":
            line.done()
            stmt = Normalize(lineno)
        elif kw == "assert_terms":
            stmt = AssertTerms(line.integer("a term count"), lineno)
            line.done()
        elif kw == "assert_prob_ge":
            stmt = AssertProbGe(line.number("a probability"), lineno)
            line.done()
        elif kw == "report":
            target = "none"
            if line.more():
                tok = line.next("a report target")
                if tok.text not in REPORT_TARGETS:
                    raise line.fail(f"report target must be one of {', '.join(REPORT_TARGETS)}", tok)
                target = tok.text
            line.done()
            stmt = Report(target, lineno)
        else:
            raise line.fail("unknown statement", head)

        term_block_open = in_term_block
        statements.append(stmt)

    return CircuitProgram(alpha, tuple(statements), source_name)


def bundled_program(name: str) -> CircuitProgram:
    """Parse one of the shipped programs, ``ecp1`` or ``ecp2``."""
    ref = resources.files(__package__).joinpath("programs", f"{name}.circ")
    return parse_circuit(ref.read_text(encoding="utf-8"), f"{name}.circ")


# ---------------------------------------------------------------------------
# formatting


def _num(x: float) -> str:
    return repr(float(x))


def format_statement(stmt: Statement) -> str:
    if isinstance(stmt, DeclareModes):
        return "modes " + " ".join(stmt.labels)
    if isinstance(stmt, Term):
        return f"term {_num(stmt.coeff_re)} {_num(stmt.coeff_im)} : " + " ".join(stmt.multipliers)
    if type(stmt) in _PREP_NAMES:
        coeffs = [stmt.beta, stmt.gamma]
        if hasattr(stmt, "delta"):
            coeffs += [stmt.delta, stmt.eta]
        return f"{_PREP_NAMES[type(stmt)]} {' '.join(map(_num, coeffs))} on {' '.join(stmt.labels)}"
    if isinstance(stmt, Bs):
        return f"bs {stmt.mode_i} {stmt.mode_j} -> {stmt.out_i} {stmt.out_j}"
    if isinstance(stmt, BsVac):
        return f"bsvac {stmt.mode} -> {stmt.new_1} {stmt.new_2}"
    if isinstance(stmt, Swap):
        return f"swap {stmt.mode_i} {stmt.mode_j}"
    if isinstance(stmt, SelectVac):
        return "selectvac " + " ".join(stmt.labels)
    if isinstance(stmt, ProjVac):
        return f"projvac {stmt.label}"
    if isinstance(stmt, Discard):
        return f"discard {stmt.label}"
    if isinstance(stmt, Normalize):
        return "normalize"
    if isinstance(stmt, AssertTerms):
        return f"assert_terms {stmt.count}"
    if isinstance(stmt, AssertProbGe):
        return f"assert_prob_ge {_num(stmt.threshold)}"
    if isinstance(stmt, Report):
        return "report" if stmt.target == "none" else f"report {stmt.target}"
    raise TypeError(f"not a statement: {stmt!r}")


def format_program(prog: CircuitProgram) -> str:
    """Canonical text for ``prog``; ``parse_circuit`` of the result equals ``prog``."""
    lines = [f"# {prog.source_name}"]
    if prog.alpha is not None:
        lines.append(f"alpha {_num(prog.alpha)}")
    lines.extend(format_statement(s) for s in prog.statements)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class StageLog:
    line: int
    statement: str
    term_count: int
    norm_squared: float
    mode_labels: tuple[str, ...]


@dataclass(frozen=True)
class Snapshot:
    line: int
    target: str
    term_count: int
    norm_squared: float
    mode_labels: tuple[str, ...]
    probability: float
    fidelity: Optional[float]


@dataclass(frozen=True)
class AssertionResult:
    line: int
    statement: str
    passed: bool
    observed: float


@dataclass
class ExecutionReport:
    source_name: str
    stages: list[StageLog] = field(default_factory=list)
    selections: list[tuple[int, float]] = field(default_factory=list)
    assertions: list[AssertionResult] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    final_state: CoherentSuperposition = field(default_factory=CoherentSuperposition.unit)
    failed_line: Optional[int] = None

    @property
    def probability(self) -> float:
        """Joint probability of every post-selection so far."""
        p = 1.0
        for _, q in self.selections:
            p *= q
        return p

    @property
    def ok(self) -> bool:
        return self.failed_line is None

    def summary(self) -> str:
        out = [f"circuit: {self.source_name}"]
        for s in self.stages:
            out.append(
                f"  line {s.line:>3}  {s.statement:<44} terms={s.term_count:<3} "
                f"norm^2={s.norm_squared:.12g}"
            )
        for line, p in self.selections:
            out.append(f"selection at line {line}: p = {p:.17g}")
        for a in self.assertions:
            status = "ok" if a.passed else "FAILED"
            out.append(f"assert at line {a.line}: {a.statement} -> {status} (observed {a.observed:.17g})")
        for snap in self.snapshots:
            fid = "n/a" if snap.fidelity is None else f"{snap.fidelity:.17g}"
            out.append(
                f"report at line {snap.line}: terms={snap.term_count} norm^2={snap.norm_squared:.12g} "
                f"probability={snap.probability:.17g} fidelity={fid} modes={','.join(snap.mode_labels)}"
            )
        if self.failed_line is not None:
            out.append(f"FAILED at line {self.failed_line}")
        return "\n".join(out)


def _prepare(stmt, alpha: float) -> CoherentSuperposition:
    if isinstance(stmt, PrepareEcp1Input):
        return protocols.build_partial_ecp1(protocols.Ecp1Params(alpha, stmt.beta, stmt.gamma), stmt.labels)
    if isinstance(stmt, PrepareEcp1Ancilla):
        return protocols.build_ancilla_single(protocols.Ecp1Params(alpha, stmt.beta, stmt.gamma), stmt.labels)
    q = protocols.Ecp2Params(alpha, stmt.beta, stmt.gamma, stmt.delta, stmt.eta)
    builder: Callable = {
        PrepareEcp2Input: protocols.build_partial_ecp2,
        PrepareEcp2TwoMode: protocols.build_ancilla_two_mode,
        PrepareEcp2G: protocols.build_ancilla_g,
    }[type(stmt)]
    return builder(q, stmt.labels)


def _term_block(terms: list[Term], labels: tuple[str, ...], alpha: float) -> CoherentSuperposition:
    return CoherentSuperposition.from_terms(
        labels,
        [(complex(t.coeff_re, t.coeff_im), [v * alpha for v in t.values]) for t in terms],
    )


def execute_circuit(prog: CircuitProgram) -> ExecutionReport:
    """Run ``prog`` on a single evolving state.

    A failed ``assert_*`` stops execution and is recorded in
    ``failed_line``; engine errors raise ``CircuitRuntimeError``.
    """
    report = ExecutionReport(prog.source_name)
    state = CoherentSuperposition.unit()
    alpha = prog.alpha
    term_labels: tuple[str, ...] = ()
    stmts = prog.statements
    k = 0
    while k < len(stmts):
        stmt = stmts[k]
        text = format_statement(stmt)
        try:
            if isinstance(stmt, DeclareModes):
                term_labels = stmt.labels
                k += 1
                continue
            if isinstance(stmt, Term):
                block = []
                while k < len(stmts) and isinstance(stmts[k], Term):
                    block.append(stmts[k])
                    k += 1
                state = tensor_product(state, _term_block(block, term_labels, alpha))
                text = f"term x{len(block)} on {' '.join(term_labels)}"
                k -= 1
            elif type(stmt) in _PREP_NAMES:
                state = tensor_product(state, _prepare(stmt, alpha))
            elif isinstance(stmt, Bs):
                state = beam_splitter(state, stmt.mode_i, stmt.mode_j, (stmt.out_i, stmt.out_j))
            elif isinstance(stmt, BsVac):
                state = beam_splitter_with_vacuum(state, stmt.mode, stmt.new_1, stmt.new_2)
            elif isinstance(stmt, Swap):
                state = swap_modes(state, stmt.mode_i, stmt.mode_j)
            elif isinstance(stmt, (SelectVac, ProjVac)):
                if isinstance(stmt, SelectVac):
                    outcome = select_vacuum_branch(state, list(stmt.labels))
                else:
                    outcome = project_vacuum(state, stmt.label)
                state = outcome.state
                report.selections.append((stmt.line, outcome.probability))
            elif isinstance(stmt, Discard):
                state = discard_correlated_mode(state, stmt.label)
            elif isinstance(stmt, Normalize):
                state = normalize(state)
            elif isinstance(stmt, (AssertTerms, AssertProbGe)):
                if isinstance(stmt, AssertTerms):
                    observed = float(state.n_terms)
                    passed = state.n_terms == stmt.count
                else:
                    observed = report.probability
                    passed = observed >= stmt.threshold
                report.assertions.append(AssertionResult(stmt.line, text, passed, observed))
                if not passed:
                    report.failed_line = stmt.line
                    break
                k += 1
                continue
            elif isinstance(stmt, Report):
                fid = None
                if stmt.target != "none" and state.n_terms and state.n_modes == 4:
                    fid = protocols.cluster_fidelity(state, alpha)
                elif stmt.target != "none":
                    fid = 0.0
                report.snapshots.append(
                    Snapshot(stmt.line, stmt.target, state.n_terms, norm_squared(state),
                             state.mode_labels, report.probability, fid)
                )
                k += 1
                continue
        except CoherentStateError as err:
            raise CircuitRuntimeError(stmt.line, err) from err
        report.stages.append(
            StageLog(stmt.line, text, state.n_terms, norm_squared(state), state.mode_labels)
        )
        k += 1
    report.final_state = state
    return report
