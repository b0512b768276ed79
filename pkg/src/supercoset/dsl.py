"""Model files: a small declarative language for supergroups, subgroups, actions and tasks.

Example::

    supergroup GL11 {
      even a, b; odd alpha, beta;
      identity a=1, b=1;
      mul a = a1*a2 + alpha1*beta2;
      ...
    }
    subgroup H of GL11 { ideal a-1, beta; }
    action Std of GL11 on { even y; odd eta; mu y = a*y + alpha*eta; mu eta = beta*y + b*eta; }

Expressions use ``+``, ``-``, ``*``, parentheses and integer, rational
(``3/2``) or imaginary (``2i``) literals.  In ``mul`` right-hand sides the
suffixes ``1`` and ``2`` name the two factors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .superalg import ONE, ChartSignature, Product, Scalar, SuperPolynomial


class ModelError(ValueError):
    """Diagnostic with a source location."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Model


@dataclass(frozen=True)
class GroupDecl:
    name: str
    even: tuple[str, ...]
    odd: tuple[str, ...]
    identity: tuple[tuple[str, Scalar], ...]
    mul: tuple[tuple[str, SuperPolynomial], ...]

    @property
    def chart(self) -> ChartSignature:
        return ChartSignature(self.even, self.odd)


@dataclass(frozen=True)
class SubgroupDecl:
    name: str
    group: str
    ideal: tuple[SuperPolynomial, ...]


@dataclass(frozen=True)
class ActionDecl:
    name: str
    group: str
    even: tuple[str, ...]
    odd: tuple[str, ...]
    mu: tuple[tuple[str, SuperPolynomial], ...]

    @property
    def space(self) -> ChartSignature:
        return ChartSignature(self.even, self.odd)


@dataclass(frozen=True)
class PointDecl:
    name: str
    group: str
    values: tuple[tuple[str, Scalar], ...]


@dataclass(frozen=True)
class TaskDecl:
    """Defaults for the atlas-level commands."""

    name: str
    subgroup: str | None = None
    action: str | None = None
    order: int | None = None
    point: tuple[tuple[str, Scalar], ...] = ()
    reps: tuple[str, ...] = ()
    overlaps: tuple[tuple[int, int, tuple[tuple[str, Scalar], ...]], ...] = ()
    triples: tuple[tuple[int, int, int, tuple[tuple[str, Scalar], ...]], ...] = ()
    samples: tuple[tuple[int, int, str, tuple[tuple[str, Scalar], ...]], ...] = ()


Decl = GroupDecl | SubgroupDecl | ActionDecl | PointDecl | TaskDecl


@dataclass
class ModelFile:
    declarations: list = field(default_factory=list)
    locations: dict = field(default_factory=dict, compare=False, repr=False)

    def _of(self, kind):
        return {d.name: d for d in self.declarations if isinstance(d, kind)}

    @property
    def groups(self) -> dict[str, GroupDecl]:
        return self._of(GroupDecl)

    @property
    def subgroups(self) -> dict[str, SubgroupDecl]:
        return self._of(SubgroupDecl)

    @property
    def actions(self) -> dict[str, ActionDecl]:
        return self._of(ActionDecl)

    @property
    def points(self) -> dict[str, PointDecl]:
        return self._of(PointDecl)

    @property
    def tasks(self) -> dict[str, TaskDecl]:
        return self._of(TaskDecl)

    def names(self) -> set[str]:
        return {d.name for d in self.declarations}


# ---------------------------------------------------------------------------
# Lexer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+i?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<arrow>->)
  | (?P<punct>[{};,=+\-*/()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    out = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ModelError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.model = ModelFile()

    # token helpers ------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None) -> ModelError:
        t = tok or self.tok
        return ModelError(message, t.line, t.column)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "name", "arrow")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {got!r}")
        return self.next()

    def name(self) -> Token:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def integer(self) -> int:
        t = self.tok
        if t.kind != "number" or t.text.endswith("i"):
            raise self.error(f"expected an integer, found {t.text or 'end of input'!r}")
        self.next()
        return int(t.text)

    def name_list(self) -> list[Token]:
        out = [self.name()]
        while self.at(","):
            self.next()
            out.append(self.name())
        return out

    # top level ------------------------------------------------------------
    def parse(self) -> ModelFile:
        while self.tok.kind != "eof":
            kw = self.name()
            if kw.text == "supergroup":
                decl, at = self.group()
            elif kw.text == "subgroup":
                decl, at = self.subgroup()
            elif kw.text == "action":
                decl, at = self.action()
            elif kw.text == "point":
                decl, at = self.point()
            elif kw.text == "task":
                decl, at = self.task()
            else:
                raise self.error(f"unknown declaration {kw.text!r}", kw)
            if decl.name in self.model.names():
                raise self.error(f"duplicate declaration {decl.name!r}", at)
            self.model.declarations.append(decl)
            self.model.locations[decl.name] = (at.line, at.column)
        return self.model

    def _coords(self, even: list[Token], odd: list[Token]):
        seen = set()
        for t in even + odd:
            if t.text in seen:
                raise self.error(f"duplicate coordinate {t.text!r}", t)
            seen.add(t.text)
        return tuple(t.text for t in even), tuple(t.text for t in odd)

    def group(self):
        at = self.name()
        self.expect("{")
        even, odd, ident, laws = [], [], [], []
        while not self.at("}"):
            kw = self.name()
            if kw.text == "even":
                even += self.name_list()
            elif kw.text == "odd":
                odd += self.name_list()
            elif kw.text == "identity":
                ident.append(self.assignments())
            elif kw.text == "mul":
                tgt = self.name()
                self.expect("=")
                laws.append((tgt, self.tok, self.expr_tokens()))
            else:
                raise self.error(f"unknown supergroup statement {kw.text!r}", kw)
            self.expect(";")
        self.expect("}")
        ev, od = self._coords(even, odd)
        chart = ChartSignature(ev, od)
        prod = Product((chart, chart), ("1", "2")).signature
        idp = {}
        for block in ident:
            for t, v in block:
                if t.text not in ev:
                    raise self.error(f"identity value for unknown even coordinate {t.text!r}", t)
                idp[t.text] = v
        mul = {}
        for tgt, start, toks in laws:
            if tgt.text not in chart.names:
                raise self.error(f"mul for unknown coordinate {tgt.text!r}", tgt)
            if tgt.text in mul:
                raise self.error(f"duplicate mul for {tgt.text!r}", tgt)
            mul[tgt.text] = self.typed(toks, prod, chart.parity_of(tgt.text), tgt, start)
        for n in chart.names:
            if n not in mul:
                raise self.error(f"supergroup {at.text} has no mul for {n!r}", at)
        identity = tuple((n, idp.get(n, Scalar(0))) for n in ev)
        return GroupDecl(at.text, ev, od, identity, tuple((n, mul[n]) for n in chart.names)), at

    def _group_ref(self) -> Token:
        t = self.name()
        if t.text not in self.model.groups:
            raise self.error(f"unknown supergroup {t.text!r}", t)
        return t

    def subgroup(self):
        at = self.name()
        self.expect("of")
        g = self._group_ref()
        chart = self.model.groups[g.text].chart
        self.expect("{")
        gens = []
        while not self.at("}"):
            kw = self.name()
            if kw.text != "ideal":
                raise self.error(f"unknown subgroup statement {kw.text!r}", kw)
            while True:
                start = self.tok
                f = self.expression(chart)
                if f.parity() is None:
                    raise self.error("ideal generator mixes parities", start)
                gens.append(f)
                if not self.at(","):
                    break
                self.next()
            self.expect(";")
        self.expect("}")
        return SubgroupDecl(at.text, g.text, tuple(gens)), at

    def action(self):
        at = self.name()
        self.expect("of")
        g = self._group_ref()
        self.expect("on")
        self.expect("{")
        gchart = self.model.groups[g.text].chart
        even, odd, laws = [], [], []
        while not self.at("}"):
            kw = self.name()
            if kw.text == "even":
                even += self.name_list()
            elif kw.text == "odd":
                odd += self.name_list()
            elif kw.text == "mu":
                tgt = self.name()
                self.expect("=")
                laws.append((tgt, self.tok, self.expr_tokens()))
            else:
                raise self.error(f"unknown action statement {kw.text!r}", kw)
            self.expect(";")
        self.expect("}")
        ev, od = self._coords(even, odd)
        for t in even + odd:
            if t.text in gchart.names:
                raise self.error(f"space coordinate {t.text!r} clashes with a group coordinate", t)
        space = ChartSignature(ev, od)
        prod = Product((gchart, space), ("", "")).signature
        mu = {}
        for tgt, start, toks in laws:
            if tgt.text not in space.names:
                raise self.error(f"mu for unknown coordinate {tgt.text!r}", tgt)
            if tgt.text in mu:
                raise self.error(f"duplicate mu for {tgt.text!r}", tgt)
            mu[tgt.text] = self.typed(toks, prod, space.parity_of(tgt.text), tgt, start)
        for n in space.names:
            if n not in mu:
                raise self.error(f"action {at.text} has no mu for {n!r}", at)
        return ActionDecl(at.text, g.text, ev, od, tuple((n, mu[n]) for n in space.names)), at

    def point(self):
        at = self.name()
        self.expect("of")
        g = self._group_ref()
        chart = self.model.groups[g.text].chart
        self.expect("=")
        vals = {}
        for t, v in self.assignments():
            if t.text not in chart.even:
                raise self.error(f"point value for unknown even coordinate {t.text!r}", t)
            vals[t.text] = v
        self.expect(";")
        return PointDecl(at.text, g.text, tuple(sorted(vals.items(), key=lambda kv: chart.even.index(kv[0])))), at

    def task(self):
        at = self.name()
        self.expect("{")
        kw_args: dict = {"overlaps": [], "triples": [], "samples": [], "reps": []}
        while not self.at("}"):
            kw = self.name()
            if kw.text == "subgroup":
                t = self.name()
                if t.text not in self.model.subgroups:
                    raise self.error(f"unknown subgroup {t.text!r}", t)
                kw_args["subgroup"] = t.text
            elif kw.text == "action":
                t = self.name()
                if t.text not in self.model.actions:
                    raise self.error(f"unknown action {t.text!r}", t)
                kw_args["action"] = t.text
            elif kw.text == "order":
                kw_args["order"] = self.integer()
            elif kw.text == "point":
                kw_args["point"] = tuple((t.text, v) for t, v in self.assignments())
            elif kw.text == "reps":
                for t in self.name_list():
                    if t.text != "e" and t.text not in self.model.points:
                        raise self.error(f"unknown point {t.text!r}", t)
                    kw_args["reps"].append(t.text)
            elif kw.text == "overlap":
                i, j = self.integer(), self.integer()
                self.expect("at")
                kw_args["overlaps"].append((i, j, self.point_values()))
            elif kw.text == "triple":
                i, j, k = self.integer(), self.integer(), self.integer()
                self.expect("at")
                kw_args["triples"].append((i, j, k, self.point_values()))
            elif kw.text == "sample":
                i, j = self.integer(), self.integer()
                self.expect("by")
                t = self.name()
                if t.text != "e" and t.text not in self.model.points:
                    raise self.error(f"unknown point {t.text!r}", t)
                self.expect("at")
                kw_args["samples"].append((i, j, t.text, self.point_values()))
            else:
                raise self.error(f"unknown task statement {kw.text!r}", kw)
            self.expect(";")
        self.expect("}")
        for k in ("overlaps", "triples", "samples", "reps"):
            kw_args[k] = tuple(kw_args[k])
        return TaskDecl(at.text, **kw_args), at

    # values and expressions --------------------------------------------------
    def point_values(self) -> tuple[tuple[str, Scalar], ...]:
        return tuple((t.text, v) for t, v in self.assignments())

    def assignments(self) -> list[tuple[Token, Scalar]]:
        out = []
        while True:
            t = self.name()
            self.expect("=")
            v = self.expression(ChartSignature(()))
            out.append((t, v.constant_term()))
            if not self.at(","):
                return out
            self.next()

    def expr_tokens(self) -> list[Token]:
        """Tokens up to the terminating ``;`` (parsed once the chart is known)."""
        out = []
        depth = 0
        while not (self.at(";") and depth == 0):
            if self.tok.kind == "eof" or (self.at("}") and depth == 0):
                raise self.error("expected ';' after expression")
            if self.at("("):
                depth += 1
            elif self.at(")"):
                depth -= 1
            out.append(self.next())
        return out

    def typed(self, toks: list[Token], sig: ChartSignature, parity: int, tgt: Token, start: Token) -> SuperPolynomial:
        if not toks:
            raise self.error("empty expression", start)
        sub = _Parser.__new__(_Parser)
        sub.toks = toks + [Token("eof", "", toks[-1].line, toks[-1].column + len(toks[-1].text))]
        sub.i = 0
        sub.model = self.model
        f = sub.expression(sig)
        if sub.tok.kind != "eof":
            raise sub.error(f"unexpected {sub.tok.text!r} in expression")
        if not f.has_parity(parity):
            text = " ".join(t.text for t in toks)
            kind = "odd" if parity else "even"
            raise self.error(f"parity mismatch: {kind} coordinate {tgt.text!r} assigned {text!r}", start)
        return f

    def expression(self, sig: ChartSignature) -> SuperPolynomial:
        sign = ONE
        if self.at("-") or self.at("+"):
            sign = -ONE if self.next().text == "-" else ONE
        f = self.term(sig) * sign
        while self.at("+") or self.at("-"):
            op = self.next().text
            g = self.term(sig)
            f = f + g if op == "+" else f - g
        return f

    def term(self, sig: ChartSignature) -> SuperPolynomial:
        f = self.factor(sig)
        while self.at("*"):
            self.next()
            f = f * self.factor(sig)
        if self.tok.kind in ("name", "number") or self.at("("):
            raise self.error("juxtaposition is not allowed; use '*'")
        return f

    def factor(self, sig: ChartSignature) -> SuperPolynomial:
        t = self.tok
        if t.kind == "number":
            self.next()
            value = Scalar(0, int(t.text[:-1])) if t.text.endswith("i") else Scalar(int(t.text))
            if self.at("/"):
                self.next()
                d = self.tok
                if d.kind != "number" or d.text.endswith("i") or int(d.text) == 0:
                    raise self.error("expected a nonzero integer denominator")
                self.next()
                value = value / Scalar(int(d.text))
            return SuperPolynomial.constant(sig, value)
        if t.kind == "name":
            self.next()
            if t.text not in sig.names:
                raise self.error(f"unknown identifier {t.text!r}", t)
            return SuperPolynomial.coordinate(sig, t.text)
        if self.at("("):
            self.next()
            f = self.expression(sig)
            self.expect(")")
            return f
        if self.at("-"):
            self.next()
            return -self.factor(sig)
        raise self.error(f"expected an expression, found {t.text or 'end of input'!r}")


def parse_model(text: str) -> ModelFile:
    """Parse a model document; raises :class:`ModelError` with a location."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printing


def _scalar_text(c: Scalar) -> str:
    def q(x):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    re_, im_ = c.fraction_pair()
    if not im_:
        return q(re_)
    imag = f"{q(abs(im_))}i" if abs(im_).denominator == 1 else f"{abs(im_).numerator}i/{abs(im_).denominator}"
    if not re_:
        return ("-" if im_ < 0 else "") + imag
    return f"({q(re_)}{'-' if im_ < 0 else '+'}{imag})"


def format_expression(f: SuperPolynomial) -> str:
    """Compact DSL text of a polynomial in absolute coordinates (signature centered at zero).

    Terms are written from the highest degree down, so ``a - 1`` reads ``a-1``.
    """
    sig = f.signature
    if any(sig.center):
        raise ValueError("expressions are printed in absolute coordinates")
    parts = []
    for exps, odd, c in reversed(list(f.terms())):
        factors = []
        for name, e in zip(sig.even, exps):
            factors += [name] * e
        factors += [sig.odd[j] for j in odd]
        neg = False
        re_, im_ = c.fraction_pair()
        if not im_ and re_ < 0:
            neg, c = True, -c
        cs = _scalar_text(c)
        if not factors:
            body = cs
        elif c == ONE:
            body = "*".join(factors)
        else:
            body = cs + "*" + "*".join(factors)
        parts.append(("-" if neg else "+", body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, b in parts[1:]:
        out += s + b
    return out


def _assign_text(values) -> str:
    return ", ".join(f"{n}={_scalar_text(v)}" for n, v in values)


def pretty_print(model: ModelFile) -> str:
    """Canonical text of a model; ``parse_model`` inverts it."""
    out = []
    for d in model.declarations:
        if isinstance(d, GroupDecl):
            lines = [f"supergroup {d.name} {{"]
            lines.append(f"  even {', '.join(d.even)};" if d.even else None)
            lines.append(f"  odd {', '.join(d.odd)};" if d.odd else None)
            lines.append(f"  identity {_assign_text(d.identity)};" if d.identity else None)
            lines += [f"  mul {n} = {format_expression(f)};" for n, f in d.mul]
            lines.append("}")
        elif isinstance(d, SubgroupDecl):
            gens = ", ".join(format_expression(g) for g in d.ideal)
            lines = [f"subgroup {d.name} of {d.group} {{", f"  ideal {gens};" if gens else None, "}"]
        elif isinstance(d, ActionDecl):
            lines = [f"action {d.name} of {d.group} on {{"]
            lines.append(f"  even {', '.join(d.even)};" if d.even else None)
            lines.append(f"  odd {', '.join(d.odd)};" if d.odd else None)
            lines += [f"  mu {n} = {format_expression(f)};" for n, f in d.mu]
            lines.append("}")
        elif isinstance(d, PointDecl):
            lines = [f"point {d.name} of {d.group} = {_assign_text(d.values)};"]
        else:
            lines = [f"task {d.name} {{"]
            if d.subgroup:
                lines.append(f"  subgroup {d.subgroup};")
            if d.action:
                lines.append(f"  action {d.action};")
            if d.order is not None:
                lines.append(f"  order {d.order};")
            if d.point:
                lines.append(f"  point {_assign_text(d.point)};")
            if d.reps:
                lines.append(f"  reps {', '.join(d.reps)};")
            lines += [f"  overlap {i} {j} at {_assign_text(p)};" for i, j, p in d.overlaps]
            lines += [f"  triple {i} {j} {k} at {_assign_text(p)};" for i, j, k, p in d.triples]
            lines += [f"  sample {i} {j} by {g} at {_assign_text(p)};" for i, j, g, p in d.samples]
            lines.append("}")
        out.append("\n".join(l for l in lines if l is not None))
    return "\n\n".join(out) + ("\n" if out else "")


def iter_corpus() -> Iterator[tuple[str, str]]:
    """``(stem, text)`` for every bundled model file."""
    from importlib import resources

    root = resources.files("supercoset") / "corpus"
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".sc"):
            yield entry.name[:-3], entry.read_text(encoding="utf-8")
