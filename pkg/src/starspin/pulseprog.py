"""Pulse-program DSL: parsing, printing, expansion, builtin sequences.

Grammar (one statement per line, ``#`` starts a comment, angles in degrees,
times in milliseconds)::

    pulse <target> <phi_deg> <theta_deg>
    zrot <target> <theta_deg>
    delay <ms>
    decouple none|selective|full
    repeat <n> { ... }
    acquire <points> <dwell_ms>

Targets are ``CC`` (center carbon), ``CS`` (both side carbons, collective)
and ``ALL`` (center plus sides).  A repeat block may sit on one line or span
several; nesting is limited to 8.  Every program contains exactly one
``acquire`` and it must be the last statement.

Angles are stored internally in radians and times in seconds.  Parsing never
raises on bad input: it reports every problem as a spanned diagnostic and
keeps going, so one run shows all the mistakes in a file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

from .noise import DecouplingMode

DEG2RAD = math.pi / 180.0
RAD2DEG = 180.0 / math.pi
MAX_REPEAT_DEPTH = 8

TARGETS = ("CC", "CS", "ALL")


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_col: int


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    message: str
    span: Span

    def format(self, filename: str = "<program>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.severity}: {self.message}"


class ProgramError(ValueError):
    """Raised by the strict entry points; carries the full diagnostic list."""

    def __init__(self, diagnostics: list[ParseDiagnostic], filename: str = "<program>"):
        self.diagnostics = diagnostics
        super().__init__("\n".join(d.format(filename) for d in diagnostics))


# --------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class Pulse:
    target: str
    phi: float
    theta: float
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class VirtualZ:
    target: str
    theta: float
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Delay:
    seconds: float
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Decouple:
    mode: DecouplingMode
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Acquire:
    points: int
    dwell_s: float
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple["Event", ...]
    span: Span | None = field(default=None, compare=False, repr=False)


Event = Union[Pulse, VirtualZ, Delay, Decouple, Acquire, Repeat]


@dataclass(frozen=True)
class PulseProgram:
    events: tuple[Event, ...]

    def validate(self) -> list[ParseDiagnostic]:
        """Structural checks for programmatically built programs."""
        diags: list[ParseDiagnostic] = []
        nowhere = Span(0, 0, 0)

        def walk(events: Iterable[Event], depth: int, top: bool) -> None:
            if depth > MAX_REPEAT_DEPTH:
                diags.append(_err(f"repeat nesting exceeds {MAX_REPEAT_DEPTH}", nowhere))
                return
            for ev in events:
                if isinstance(ev, Repeat):
                    if ev.count < 1:
                        diags.append(_err(f"repeat count must be >= 1, got {ev.count}", ev.span or nowhere))
                    walk(ev.body, depth + 1, False)
                elif isinstance(ev, Delay) and ev.seconds < 0:
                    diags.append(_err("negative delay", ev.span or nowhere))
                elif isinstance(ev, Acquire) and not top:
                    diags.append(_err("acquire may not sit inside a repeat block", ev.span or nowhere))

        walk(self.events, 1, True)
        acquires = [ev for ev in self.events if isinstance(ev, Acquire)]
        if len(acquires) != 1:
            diags.append(_err(f"program needs exactly one acquire, found {len(acquires)}", nowhere))
        elif not isinstance(self.events[-1], Acquire):
            diags.append(_err("acquire must be the last statement", nowhere))
        return diags

    @property
    def acquire(self) -> Acquire:
        last = self.events[-1]
        if not isinstance(last, Acquire):
            raise ValueError("program has no trailing acquire")
        return last


def _err(message: str, span: Span) -> ParseDiagnostic:
    return ParseDiagnostic("error", message, span)


# --------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # word | lbrace | rbrace | newline | eof
    text: str
    span: Span


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        col = 0
        length = len(line)
        while col < length:
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            if ch in "{}":
                kind = "lbrace" if ch == "{" else "rbrace"
                tokens.append(_Token(kind, ch, Span(lineno, col + 1, col + 2)))
                col += 1
                continue
            start = col
            while col < length and not line[col].isspace() and line[col] not in "{}":
                col += 1
            tokens.append(_Token("word", line[start:col], Span(lineno, start + 1, col + 1)))
        tokens.append(_Token("newline", "", Span(lineno, length + 1, length + 1)))
    end_line = len(lines) if lines else 1
    tokens.append(_Token("eof", "", Span(end_line, 1, 1)))
    return tokens


# --------------------------------------------------------------------------
# parser


@dataclass
class ParseResult:
    program: PulseProgram | None
    diagnostics: list[ParseDiagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None and not any(d.severity == "error" for d in self.diagnostics)


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[ParseDiagnostic] = []

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, span: Span) -> None:
        self.diagnostics.append(_err(message, span))

    def skip_newlines(self) -> None:
        while self.peek().kind == "newline":
            self.advance()

    def sync_to_line_end(self) -> None:
        while self.peek().kind not in ("newline", "eof", "rbrace"):
            self.advance()

    def arg(self, what: str, keyword: _Token) -> _Token | None:
        tok = self.peek()
        if tok.kind != "word":
            self.error(f"expected {what} after '{keyword.text}'", tok.span if tok.kind != "eof" else keyword.span)
            return None
        return self.advance()

    def number(self, what: str, keyword: _Token) -> tuple[float, _Token] | None:
        tok = self.arg(what, keyword)
        if tok is None:
            return None
        try:
            return float(tok.text), tok
        except ValueError:
            self.error(f"malformed number {tok.text!r} for {what}", tok.span)
            return None

    def integer(self, what: str, keyword: _Token) -> tuple[int, _Token] | None:
        tok = self.arg(what, keyword)
        if tok is None:
            return None
        try:
            value = int(tok.text)
        except ValueError:
            self.error(f"malformed integer {tok.text!r} for {what}", tok.span)
            return None
        return value, tok

    def target(self, keyword: _Token) -> str | None:
        tok = self.arg("target (CC, CS or ALL)", keyword)
        if tok is None:
            return None
        name = tok.text.upper()
        if name not in TARGETS:
            self.error(f"unknown target {tok.text!r}; expected CC, CS or ALL", tok.span)
            return None
        return name

    def end_statement(self) -> None:
        tok = self.peek()
        if tok.kind == "word":
            self.error(f"unexpected trailing token {tok.text!r}", tok.span)
            self.sync_to_line_end()

    def statements(self, depth: int) -> list[Event]:
        events: list[Event] = []
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok.kind in ("eof", "rbrace"):
                return events
            if tok.kind == "lbrace":
                self.error("unexpected '{'", tok.span)
                self.advance()
                continue
            ev = self.statement(self.advance(), depth)
            if ev is not None:
                events.append(ev)

    def statement(self, keyword: _Token, depth: int) -> Event | None:
        word = keyword.text.lower()
        if word == "pulse":
            tgt = self.target(keyword)
            phi = self.number("phase angle in degrees", keyword)
            theta = self.number("rotation angle in degrees", keyword)
            self.end_statement()
            if tgt is None or phi is None or theta is None:
                return None
            return Pulse(tgt, phi[0] * DEG2RAD, theta[0] * DEG2RAD, keyword.span)
        if word == "zrot":
            tgt = self.target(keyword)
            theta = self.number("rotation angle in degrees", keyword)
            self.end_statement()
            if tgt is None or theta is None:
                return None
            return VirtualZ(tgt, theta[0] * DEG2RAD, keyword.span)
        if word == "delay":
            ms = self.number("duration in ms", keyword)
            self.end_statement()
            if ms is None:
                return None
            if ms[0] < 0:
                self.error(f"delay must be non-negative, got {ms[0]:g} ms", ms[1].span)
                return None
            return Delay(ms[0] * 1e-3, keyword.span)
        if word == "decouple":
            tok = self.arg("decoupling mode", keyword)
            self.end_statement()
            if tok is None:
                return None
            try:
                mode = DecouplingMode.parse(tok.text.lower())
            except ValueError:
                self.error(f"unknown decoupling mode {tok.text!r}; expected none, selective or full", tok.span)
                return None
            return Decouple(mode, keyword.span)
        if word == "acquire":
            points = self.integer("number of points", keyword)
            dwell = self.number("dwell time in ms", keyword)
            self.end_statement()
            if points is None or dwell is None:
                return None
            if points[0] < 2:
                self.error(f"acquire needs at least 2 points, got {points[0]}", points[1].span)
                return None
            if dwell[0] <= 0:
                self.error(f"dwell must be positive, got {dwell[0]:g} ms", dwell[1].span)
                return None
            return Acquire(points[0], dwell[0] * 1e-3, keyword.span)
        if word == "repeat":
            return self.repeat(keyword, depth)
        self.error(f"unknown keyword {keyword.text!r}", keyword.span)
        self.sync_to_line_end()
        return None

    def repeat(self, keyword: _Token, depth: int) -> Event | None:
        count = self.integer("repeat count", keyword)
        if count is None:
            self.sync_to_line_end()
            return None
        if count[0] < 1:
            self.error(f"repeat count must be >= 1, got {count[0]}", count[1].span)
        if depth + 1 > MAX_REPEAT_DEPTH:
            self.error(f"repeat nesting exceeds {MAX_REPEAT_DEPTH}", keyword.span)
        brace = self.peek()
        if brace.kind != "lbrace":
            self.error("expected '{' to open the repeat body", brace.span if brace.kind != "eof" else keyword.span)
            self.sync_to_line_end()
            return None
        self.advance()
        body = self.statements(depth + 1)
        closer = self.peek()
        if closer.kind != "rbrace":
            self.error("unclosed '{': repeat body runs to end of input", closer.span)
            return None
        self.advance()
        if count[0] < 1 or depth + 1 > MAX_REPEAT_DEPTH:
            return None
        return Repeat(count[0], tuple(body), keyword.span)


def parse(text: str) -> ParseResult:
    """Parse DSL text; collect every diagnostic instead of stopping early."""
    parser = _Parser(_tokenize(text))
    events = parser.statements(depth=0)
    trailing = parser.peek()
    if trailing.kind == "rbrace":
        parser.error("unmatched '}'", trailing.span)
        parser.advance()
        events.extend(parser.statements(depth=0))

    eof_span = parser.tokens[-1].span

    def nested_acquires(evs: Iterable[Event]) -> None:
        for ev in evs:
            if isinstance(ev, Repeat):
                for sub in ev.body:
                    if isinstance(sub, Acquire):
                        parser.error("acquire may not sit inside a repeat block", sub.span or eof_span)
                nested_acquires(ev.body)

    nested_acquires(events)
    acquires = [(i, ev) for i, ev in enumerate(events) if isinstance(ev, Acquire)]
    if not acquires:
        parser.error("program is missing its acquire statement", eof_span)
    else:
        for i, ev in acquires[1:]:
            parser.error("duplicate acquire statement", ev.span or eof_span)
        if len(acquires) == 1 and acquires[0][0] != len(events) - 1:
            after = events[acquires[0][0] + 1]
            parser.error("statements after acquire", getattr(after, "span", None) or eof_span)

    if any(d.severity == "error" for d in parser.diagnostics):
        return ParseResult(None, parser.diagnostics)
    return ParseResult(PulseProgram(tuple(events)), parser.diagnostics)


def parse_program(text: str, filename: str = "<program>") -> PulseProgram:
    """Strict variant: return the program or raise ProgramError."""
    result = parse(text)
    if not result.ok:
        errors = [d for d in result.diagnostics if d.severity == "error"]
        raise ProgramError(errors, filename)
    assert result.program is not None
    return result.program


# --------------------------------------------------------------------------
# printing


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _fmt_scaled(value: float, to_unit: float, from_unit: float) -> str:
    """Render ``value`` in display units so that parsing reproduces it.

    Parsing computes fl(text * from_unit); the nominal display value can be
    one ulp off, so probe its neighbours and pick the one that round-trips
    to the exact stored double.
    """
    shown = value * to_unit
    for cand in (
        shown,
        math.nextafter(shown, math.inf),
        math.nextafter(shown, -math.inf),
    ):
        if cand * from_unit == value:
            return _fmt(cand)
    return _fmt(shown)


def _fmt_angle(rad: float) -> str:
    return _fmt_scaled(rad, RAD2DEG, DEG2RAD)


def _fmt_ms(seconds: float) -> str:
    return _fmt_scaled(seconds, 1e3, 1e-3)


def _print_event(ev: Event, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if isinstance(ev, Pulse):
        out.append(f"{pad}pulse {ev.target} {_fmt_angle(ev.phi)} {_fmt_angle(ev.theta)}")
    elif isinstance(ev, VirtualZ):
        out.append(f"{pad}zrot {ev.target} {_fmt_angle(ev.theta)}")
    elif isinstance(ev, Delay):
        out.append(f"{pad}delay {_fmt_ms(ev.seconds)}")
    elif isinstance(ev, Decouple):
        out.append(f"{pad}decouple {ev.mode.value}")
    elif isinstance(ev, Acquire):
        out.append(f"{pad}acquire {ev.points} {_fmt_ms(ev.dwell_s)}")
    elif isinstance(ev, Repeat):
        out.append(f"{pad}repeat {ev.count} {{")
        for sub in ev.body:
            _print_event(sub, indent + 1, out)
        out.append(f"{pad}}}")
    else:
        raise TypeError(f"unknown event {ev!r}")


def print_program(prog: PulseProgram) -> str:
    out: list[str] = []
    for ev in prog.events:
        _print_event(ev, 0, out)
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# expansion


TARGET_GROUPS = {"CC": ("CC",), "CS": ("CS",), "ALL": ("CC", "CS")}


@dataclass(frozen=True)
class ExpandedProgram:
    """Flat event list: repeats unrolled, virtual-Z folded into pulse phases.

    Residual frame angles are emitted as trailing ``VirtualZ`` events just
    before the acquire, so the expanded program implements exactly the same
    unitary as the original.  ``duration_s`` is the summed delay time up to
    the acquire.
    """

    events: tuple[Event, ...]
    duration_s: float

    @property
    def acquire(self) -> Acquire:
        last = self.events[-1]
        if not isinstance(last, Acquire):
            raise ValueError("expanded program has no trailing acquire")
        return last


def _flatten(events: Iterable[Event]) -> Iterator[Event]:
    for ev in events:
        if isinstance(ev, Repeat):
            for _ in range(ev.count):
                yield from _flatten(ev.body)
        else:
            yield ev


def expand(prog: PulseProgram) -> ExpandedProgram:
    frame = {"CC": 0.0, "CS": 0.0}
    out: list[Event] = []
    duration = 0.0
    tail: list[Event] = []

    def residual_zrots() -> list[Event]:
        zz = []
        for group in ("CC", "CS"):
            a = math.remainder(frame[group], 2.0 * math.pi)
            if abs(a) > 0.0:
                zz.append(VirtualZ(group, a))
        return zz

    for ev in _flatten(prog.events):
        if isinstance(ev, VirtualZ):
            for group in TARGET_GROUPS[ev.target]:
                frame[group] += ev.theta
        elif isinstance(ev, Pulse):
            groups = TARGET_GROUPS[ev.target]
            if len(groups) == 2 and not math.isclose(frame["CC"], frame["CS"], abs_tol=1e-15):
                for group in groups:
                    out.append(Pulse(group, ev.phi - frame[group], ev.theta, ev.span))
            else:
                out.append(Pulse(ev.target, ev.phi - frame[groups[0]], ev.theta, ev.span))
        elif isinstance(ev, Delay):
            duration += ev.seconds
            out.append(ev)
        elif isinstance(ev, Acquire):
            tail = residual_zrots() + [ev]
        else:
            out.append(ev)
    return ExpandedProgram(tuple(out + tail), duration)


# --------------------------------------------------------------------------
# builtin sequences


def _cnot_events(t_entangle_s: float) -> list[Event]:
    # Entangler: side-spin y-rotation, coupling delay, side-spin x-rotation,
    # then virtual z corrections.  Global phase is dropped.
    return [
        Pulse("CS", math.pi / 2.0, math.pi / 2.0),
        Delay(t_entangle_s),
        Pulse("CS", 0.0, math.pi / 2.0),
        VirtualZ("CS", -math.pi / 2.0),
        VirtualZ("CC", -math.pi / 2.0),
    ]


def _xy8_cycle(cycle_s: float) -> list[Event]:
    x = Pulse("ALL", 0.0, math.pi)
    y = Pulse("ALL", math.pi / 2.0, math.pi)
    gap = cycle_s / 8.0
    seq: list[Event] = [Delay(gap / 2.0)]
    for i, p in enumerate((x, y, x, y, y, x, y, x)):
        if i:
            seq.append(Delay(gap))
        seq.append(p)
    seq.append(Delay(gap / 2.0))
    return seq


def builtin_sequence(
    name: str,
    *,
    t_entangle_s: float,
    theta: float = 0.0,
    tau_s: float = 3.4e-3,
    cycle_s: float = 3.44e-3,
    cycles: int = 8,
    points: int = 4096,
    dwell_s: float = 1e-3,
    sense_decouple: DecouplingMode | str | None = None,
) -> PulseProgram:
    """Shipped measurement sequences.

    field_on_cc   phase rotation theta on the center spin before the
                  entangler; every spectral peak acquires theta.
    field_on_cs   phase rotation theta on the side spins inside the
                  entangled interval; side peaks acquire +-2 theta.  The
                  rotation sits after the refocusing pulse so the acquired
                  phase adds with the conventional sign.
    xy8_sense     like field_on_cs but the sensing interval is ``cycles``
                  XY-8 trains (pattern X Y X Y Y X Y X, evenly spaced pi
                  pulses on center and sides together); total sensing time
                  is cycles * cycle_s.

    ``t_entangle_s`` is the coupling delay of the entangler, see
    hamiltonian.entangling_delay.  When ``sense_decouple`` is given, the
    sequence keeps every proton decoupled except during the sensing window,
    where it switches to that mode: the sensor spins are exposed to the
    controlled environment only while they hold the entangled coherence.
    Without it the program carries no decoupling directives and the run
    configuration decides the (constant) mode.
    """
    gate = sense_decouple is not None
    if gate:
        sense_mode = DecouplingMode.parse(sense_decouple)
    events: list[Event] = []
    if gate:
        events.append(Decouple(DecouplingMode.FULL))
    events.append(Pulse("CC", -math.pi / 2.0, math.pi / 2.0))
    if name == "field_on_cc":
        events.append(VirtualZ("CC", theta))
        interval: list[Event] = [Delay(tau_s / 2.0), Pulse("CS", 0.0, math.pi), Delay(tau_s / 2.0)]
        field: list[Event] = []
    elif name == "field_on_cs":
        interval = [Delay(tau_s / 2.0), Pulse("CS", 0.0, math.pi), Delay(tau_s / 2.0)]
        field = [VirtualZ("CS", theta)]
    elif name == "xy8_sense":
        if cycles < 1:
            raise ValueError("xy8_sense needs at least one cycle")
        interval = [Repeat(cycles, tuple(_xy8_cycle(cycle_s)))]
        field = [VirtualZ("CS", theta)]
    else:
        raise ValueError(
            f"unknown sequence {name!r}; expected field_on_cc, field_on_cs or xy8_sense"
        )
    events += _cnot_events(t_entangle_s)
    if gate:
        events.append(Decouple(sense_mode))
    events += interval
    if gate:
        events.append(Decouple(DecouplingMode.FULL))
    events += field
    events += _cnot_events(t_entangle_s)
    events.append(Acquire(points, dwell_s))
    return PulseProgram(tuple(events))
