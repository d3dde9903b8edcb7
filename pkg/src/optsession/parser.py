"""Parser for the .ost surface syntax.

One SourceFile per file: a sequence of named declarations

    global NAME = <global type>
    local  NAME = <local type>
    process NAME = <process>
    gamma  NAME = <entries>
    delta  NAME = <entries>

Line comments start with --.  The grammar is LL with one-token lookahead
except for the optional-block tail, which is disambiguated by scanning for
'<-' behind the first parenthesized group.  Trailing end/0 may be omitted.
The first error aborts with line/column and the expected tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    GBranch, GCall, GChoice, GCom, GDecl, GEnd, GOptBlock, GPar, GRec, GVar,
    G_END, GlobalType, Kind, KindProtocol, KindRole, KindVal, L_END, LBranch,
    LCall, LChoice, LEnd, LEnt, LGet, LOpt, LPar, LRec, LReq, LSend, LVar,
    Label, LocalType, Name, P_END, PBranch, PChoice, PDecl, PEnd, PEnt, PGet,
    PIn, POpt, POptEnd, POut, PPar, PRec, PRes, PReq, PSend, PVar, Param,
    ProcVar, Process, Role, SyntaxConstraintError, TypeVar,
)

KEYWORDS = {
    "end", "opt", "optend", "call", "ent", "req", "let", "in", "mu", "rec",
    "choice", "or", "get", "send", "new", "wrt", "invite", "to", "from", "nu",
    "global", "local", "process", "gamma", "delta", "protocol", "OV",
}

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+|--[^\n]*)
      | (?P<arrow>->)
      | (?P<larrow><-)
      | (?P<ident>%?[A-Za-z0-9_][A-Za-z0-9_']*)
      | (?P<punct>[(){}\[\]<>,;:.|=$~])
    """,
    re.VERBOSE,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Optional[list[str]] = None):
        loc = f"line {line}, col {col}"
        exp = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{loc}: {message}{exp}")
        self.line = line
        self.col = col
        self.expected = expected or []


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'kw', punctuation/arrow literal, 'eof'
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        if m.lastgroup == "ws":
            pass
        elif m.lastgroup == "ident":
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
        else:
            tokens.append(Token(text, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# source-file model


@dataclass(frozen=True)
class GammaEntry:
    kind: str  # 'value' | 'chan' | 'session' | 'protocol'
    name: Name
    value_kind: Optional[Kind] = None
    chan_type: Optional[LocalType] = None
    chan_role: Optional[Role] = None
    session_type: Optional[GlobalType] = None
    proto_internal: tuple[Role, ...] = ()
    proto_args: tuple[Param, ...] = ()
    proto_external: tuple[Role, ...] = ()
    proto_body: Optional[GlobalType] = None


@dataclass(frozen=True)
class DeltaEntry:
    kind: str  # 'endpoint' | 'returnkinds'
    session: Optional[Name] = None
    role: Optional[Role] = None
    mode: str = "plain"  # 'plain' | 'external' | 'internal'
    local_type: Optional[LocalType] = None
    return_kinds: tuple[Kind, ...] = ()


@dataclass
class SourceFile:
    globals: dict[str, GlobalType] = field(default_factory=dict)
    locals: dict[str, LocalType] = field(default_factory=dict)
    processes: dict[str, Process] = field(default_factory=dict)
    gammas: dict[str, list[GammaEntry]] = field(default_factory=dict)
    deltas: dict[str, list[DeltaEntry]] = field(default_factory=dict)

    def lookup_global(self, name: str) -> GlobalType:
        if name not in self.globals:
            raise KeyError(f"no global type named {name!r}")
        return self.globals[name]

    def lookup_process(self, name: str) -> Process:
        if name not in self.processes:
            raise KeyError(f"no process named {name!r}")
        return self.processes[name]


# ---------------------------------------------------------------------------
# parser core


class _Parser:
    def __init__(self, src: str, source: Optional[SourceFile] = None):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.source = source or SourceFile()

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if self.at(kind, text):
            return self.next()
        t = self.peek()
        want = text or kind
        raise ParseError(f"found {t.text!r}", t.line, t.col, expected=[want])

    def fail(self, message: str, expected: Optional[list[str]] = None):
        t = self.peek()
        raise ParseError(message, t.line, t.col, expected=expected)

    def guard(self, build):
        """Run an AST constructor, converting invariant errors to ParseError."""
        t = self.peek()
        try:
            return build()
        except SyntaxConstraintError as e:
            raise ParseError(str(e), t.line, t.col) from e

    # -- small pieces

    def ident(self) -> str:
        return self.expect("ident").text

    def name(self) -> Name:
        return Name(self.ident())

    def role(self) -> Role:
        return Role(self.ident())

    def label(self) -> Label:
        return Label(self.ident())

    def name_list(self, closers: tuple[str, ...]) -> tuple[Name, ...]:
        out = []
        if self.peek().kind not in closers:
            out.append(self.name())
            while self.accept(","):
                out.append(self.name())
        return tuple(out)

    def role_list(self, closers: tuple[str, ...]) -> tuple[Role, ...]:
        out = []
        if self.peek().kind not in closers:
            out.append(self.role())
            while self.accept(","):
                out.append(self.role())
        return tuple(out)

    def kind(self) -> Kind:
        t = self.expect("ident")
        if t.text == "role":
            return KindRole()
        if t.text == "proto":
            return KindProtocol()
        return KindVal(t.text)

    def param(self) -> Param:
        n = self.name()
        self.expect(":")
        return (n, self.kind())

    def param_list(self, closers: tuple[str, ...]) -> tuple[Param, ...]:
        out = []
        if self.peek().kind not in closers:
            out.append(self.param())
            while self.accept(","):
                out.append(self.param())
        return tuple(out)

    # ------------------------------------------------------------------
    # global types

    def global_type(self) -> GlobalType:
        left = self.gseq()
        while self.accept("|"):
            right = self.gseq()
            left = GPar(left, right) if not isinstance(left, GPar) else GPar(left, right)
        return left

    def gseq(self) -> GlobalType:
        return self.gprim()

    def _gcont(self) -> GlobalType:
        # optional '. continuation'; stops before '|' and closers
        if self.accept("."):
            return self.gseq()
        return G_END

    def gprim(self) -> GlobalType:
        t = self.peek()
        if self.accept("kw", "end"):
            return G_END
        if self.accept("("):
            g = self.global_type()
            self.expect(")")
            return g
        if self.accept("kw", "mu"):
            v = TypeVar(self.ident())
            self.expect(".")
            return self.guard(lambda: GRec(v, self.gseq()))
        if self.accept("kw", "opt"):
            self.expect("<")
            parts = [self.gopt_participant()]
            while self.accept(";"):
                parts.append(self.gopt_participant())
            self.expect(">")
            self.expect("{")
            body = self.global_type()
            self.expect("}")
            cont = self._gcont()
            return self.guard(lambda: GOptBlock(tuple(parts), body, cont))
        if self.accept("kw", "let"):
            proto = self.name()
            self.expect("<")
            internal = self.role_list((";",))
            self.expect(";")
            args = self.param_list((";",))
            self.expect(";")
            external = self.role_list((">",))
            self.expect(">")
            self.expect("=")
            self.expect("{")
            body = self.global_type()
            self.expect("}")
            self.expect("kw", "in")
            cont = self.global_type()
            return GDecl(proto, internal, args, external, body, cont)
        if self.accept("kw", "call"):
            caller = self.role()
            self.expect(":")
            proto = self.name()
            self.expect("<")
            roles = self.role_list((";",))
            self.expect(";")
            args = self.name_list((">",))
            self.expect(">")
            return GCall(caller, proto, roles, args, self._gcont())
        if self.accept("kw", "choice"):
            self.expect("[")
            chooser = self.role()
            self.expect("]")
            self.expect("{")
            left = self.global_type()
            self.expect("}")
            self.expect("kw", "or")
            self.expect("{")
            right = self.global_type()
            self.expect("}")
            return GChoice(left, chooser, right)
        if t.kind == "ident":
            ident = self.ident()
            if self.accept("->"):
                receiver = self.role()
                self.expect(":")
                branches = self.gbranches()
                return self.guard(lambda: GCom(Role(ident), receiver, branches))
            return GVar(TypeVar(ident))
        self.fail(f"found {t.text!r}", expected=["a global type"])

    def gopt_participant(self) -> tuple[Role, tuple[Param, ...]]:
        r = self.role()
        defaults = []
        while self.accept(","):
            defaults.append(self.param())
        return (r, tuple(defaults))

    def gbranches(self) -> tuple[GBranch, ...]:
        if self.accept("{"):
            branches = [self.gbranch()]
            while self.accept(","):
                branches.append(self.gbranch())
            self.expect("}")
            return tuple(branches)
        return (self.gbranch(),)

    def gbranch(self) -> GBranch:
        lab = self.label()
        self.expect("(")
        ps = self.param_list((")",))
        self.expect(")")
        return GBranch(lab, ps, self._gcont())

    # ------------------------------------------------------------------
    # local types

    def local_type(self) -> LocalType:
        left = self.lseq()
        while self.accept("|"):
            left = LPar(left, self.lseq())
        return left

    def lseq(self) -> LocalType:
        return self.lprim()

    def _lcont(self) -> LocalType:
        if self.accept("."):
            return self.lseq()
        return L_END

    def lprim(self) -> LocalType:
        t = self.peek()
        if self.accept("kw", "end"):
            return L_END
        if self.accept("("):
            out = self.local_type()
            self.expect(")")
            return out
        if self.accept("kw", "mu"):
            v = TypeVar(self.ident())
            self.expect(".")
            return self.guard(lambda: LRec(v, self.lseq()))
        if self.accept("kw", "get"):
            role = self.role()
            return self.guard(lambda: LGet(role, self.lbranches()))
        if self.accept("kw", "send"):
            role = self.role()
            return self.guard(lambda: LSend(role, self.lbranches()))
        if self.accept("kw", "opt"):
            self.expect("<")
            parts = self.role_list((";",))
            self.expect(";")
            binder = self.param_list((">",))
            self.expect(">")
            self.expect("{")
            body = self.local_type()
            self.expect("}")
            cont = self._lcont()
            return self.guard(lambda: LOpt(parts, body, binder, cont))
        if self.accept("kw", "call"):
            proto = self.name()
            self.expect("{")
            gbody = self.global_type()
            self.expect("}")
            self.expect("<")
            argv = self.name_list((";",))
            self.expect(";")
            argb = self.param_list((";",))
            self.expect(";")
            ext = self.role_list((">",))
            self.expect(">")
            return LCall(proto, gbody, argv, argb, ext, self._lcont())
        if self.accept("kw", "ent"):
            proto = self.name()
            self.expect("[")
            as_role = self.role()
            self.expect("]")
            self.expect("<")
            args = self.name_list((">",))
            self.expect(">")
            self.expect("kw", "from")
            inviter = self.role()
            return LEnt(proto, as_role, args, inviter, self._lcont())
        if self.accept("kw", "req"):
            proto = self.name()
            self.expect("[")
            for_role = self.role()
            self.expect("]")
            self.expect("<")
            args = self.name_list((">",))
            self.expect(">")
            self.expect("kw", "to")
            invitee = self.role()
            return LReq(proto, for_role, args, invitee, self._lcont())
        if self.accept("kw", "choice"):
            self.expect("{")
            left = self.local_type()
            self.expect("}")
            self.expect("kw", "or")
            self.expect("{")
            right = self.local_type()
            self.expect("}")
            return LChoice(left, right)
        if t.kind == "ident":
            return LVar(TypeVar(self.ident()))
        self.fail(f"found {t.text!r}", expected=["a local type"])

    def lbranches(self) -> tuple[LBranch, ...]:
        if self.accept("{"):
            branches = [self.lbranch()]
            while self.accept(","):
                branches.append(self.lbranch())
            self.expect("}")
            return tuple(branches)
        return (self.lbranch(),)

    def lbranch(self) -> LBranch:
        lab = self.label()
        self.expect("(")
        ps = self.param_list((")",))
        self.expect(")")
        return LBranch(lab, ps, self._lcont())

    # ------------------------------------------------------------------
    # processes

    def process(self) -> Process:
        left = self.pseq()
        while self.accept("|"):
            left = PPar(left, self.pseq())
        return left

    def pseq(self) -> Process:
        return self.pprim()

    def _pcont(self) -> Process:
        if self.accept("."):
            return self.pseq()
        return P_END

    def pprim(self) -> Process:
        t = self.peek()
        if self.at("ident", "0"):
            self.next()
            return P_END
        if self.accept("("):
            out = self.process()
            self.expect(")")
            return out
        if self.accept("kw", "rec"):
            v = ProcVar(self.ident())
            self.expect(".")
            return self.guard(lambda: PRec(v, self.pseq()))
        if self.accept("kw", "nu"):
            binder = self.name()
            self.expect(".")
            return PRes(binder, self.pseq())
        if self.accept("kw", "get"):
            session = self.name()
            self.expect("[")
            sender = self.role()
            self.expect("->")
            receiver = self.role()
            self.expect("]")
            return self.guard(lambda: PGet(session, sender, receiver, self.pbranches()))
        if self.accept("kw", "send"):
            session = self.name()
            self.expect("[")
            sender = self.role()
            self.expect("->")
            receiver = self.role()
            self.expect("]")
            lab = self.label()
            self.expect("<")
            payload = self.name_list((">",))
            self.expect(">")
            return PSend(session, sender, receiver, lab, payload, self._pcont())
        if self.accept("kw", "opt"):
            return self.popt()
        if self.accept("kw", "optend"):
            owner = self.role()
            self.expect("<")
            values = self.name_list((">",))
            self.expect(">")
            return POptEnd(owner, values)
        if self.accept("kw", "new"):
            k = self.name()
            self.expect("kw", "wrt")
            parent = self.name()
            self.expect("<")
            args = self.name_list((">",))
            self.expect(">")
            chans: tuple[Name, ...] = ()
            ext: tuple[Role, ...] = ()
            if self.accept("kw", "invite"):
                self.expect("(")
                chans = self.name_list((";",))
                self.expect(";")
                ext = self.role_list((")",))
                self.expect(")")
            cont = self._pcont()
            return self.guard(lambda: PDecl(k, parent, args, chans, ext, cont))
        if self.accept("kw", "ent"):
            session = self.name()
            self.expect("[")
            inviter = self.role()
            self.expect("->")
            invitee = self.role()
            self.expect(":")
            as_role = self.role()
            self.expect("]")
            self.expect("(")
            binder = self.name()
            self.expect(")")
            return PEnt(session, inviter, invitee, as_role, binder, self._pcont())
        if self.accept("kw", "req"):
            session = self.name()
            self.expect("[")
            inviter = self.role()
            self.expect("->")
            invitee = self.role()
            self.expect(":")
            as_role = self.role()
            self.expect("]")
            self.expect("<")
            sub = self.name()
            self.expect(">")
            return PReq(session, inviter, invitee, as_role, sub, self._pcont())
        if self.accept("kw", "choice"):
            self.expect("{")
            left = self.process()
            self.expect("}")
            self.expect("kw", "or")
            self.expect("{")
            right = self.process()
            self.expect("}")
            return PChoice(left, right)
        if t.kind == "ident":
            ident = self.ident()
            if self.accept("("):
                binders = self.name_list((")",))
                self.expect(")")
                return PIn(Name(ident), binders, self._pcont())
            if self.accept("<"):
                payload = self.name_list((">",))
                self.expect(">")
                return POut(Name(ident), payload, self._pcont())
            return PVar(ProcVar(ident))
        self.fail(f"found {t.text!r}", expected=["a process"])

    def pbranches(self) -> tuple[PBranch, ...]:
        if self.accept("{"):
            branches = [self.pbranch()]
            while self.accept(","):
                branches.append(self.pbranch())
            self.expect("}")
            return tuple(branches)
        return (self.pbranch(),)

    def pbranch(self) -> PBranch:
        lab = self.label()
        self.expect("(")
        binders = self.name_list((")",))
        self.expect(")")
        return PBranch(lab, binders, self._pcont())

    def popt(self) -> Process:
        self.expect("[")
        owner = self.role()
        self.expect(";")
        parts = self.role_list(("]",))
        self.expect("]")
        self.expect("{")
        body = self.process()
        self.expect("}")
        binders: tuple[Name, ...] = ()
        defaults: tuple[Name, ...] = ()
        cont: Process = P_END
        if self.at("("):
            if self._group_is_binder_list():
                self.expect("(")
                binders = self.name_list((")",))
                self.expect(")")
                self.expect("<-")
                if binders:
                    self.expect("(")
                    defaults = self.name_list((")",))
                    self.expect(")")
                if self.at("("):
                    self.expect("(")
                    cont = self.process()
                    self.expect(")")
            else:
                self.expect("(")
                cont = self.process()
                self.expect(")")
        return self.guard(lambda: POpt(owner, parts, body, binders, defaults, cont))

    def _group_is_binder_list(self) -> bool:
        # peek past the balanced '( ... )' group: '<-' means it was binders
        depth = 0
        i = self.pos
        while i < len(self.tokens):
            k = self.tokens[i].kind
            if k == "(":
                depth += 1
            elif k == ")":
                depth -= 1
                if depth == 0:
                    return self.tokens[i + 1].kind == "<-" if i + 1 < len(self.tokens) else False
            elif k == "eof":
                return False
            i += 1
        return False

    # ------------------------------------------------------------------
    # declarations

    def source_file(self) -> SourceFile:
        while not self.at("eof"):
            t = self.peek()
            if self.accept("kw", "global"):
                name = self.ident()
                self._unique(name)
                self.expect("=")
                self.source.globals[name] = self.global_type()
            elif self.accept("kw", "local"):
                name = self.ident()
                self._unique(name)
                self.expect("=")
                self.source.locals[name] = self.local_type()
            elif self.accept("kw", "process"):
                name = self.ident()
                self._unique(name)
                self.expect("=")
                self.source.processes[name] = self.process()
            elif self.accept("kw", "gamma"):
                name = self.ident()
                self._unique(name)
                self.expect("=")
                self.source.gammas[name] = self.gamma_entries()
            elif self.accept("kw", "delta"):
                name = self.ident()
                self._unique(name)
                self.expect("=")
                self.source.deltas[name] = self.delta_entries()
            else:
                self.fail(f"found {t.text!r}",
                          expected=["global", "local", "process", "gamma", "delta"])
        return self.source

    def _unique(self, name: str):
        s = self.source
        if any(name in d for d in (s.globals, s.locals, s.processes, s.gammas, s.deltas)):
            self.fail(f"duplicate declaration name {name!r}")

    def _gref(self) -> GlobalType:
        if self.accept("$"):
            name = self.ident()
            if name not in self.source.globals:
                self.fail(f"reference to undeclared global type {name!r}")
            return self.source.globals[name]
        self.expect("{")
        g = self.global_type()
        self.expect("}")
        return g

    def _lref(self) -> LocalType:
        if self.accept("$"):
            name = self.ident()
            if name not in self.source.locals:
                self.fail(f"reference to undeclared local type {name!r}")
            return self.source.locals[name]
        self.expect("{")
        t = self.local_type()
        self.expect("}")
        return t

    def gamma_entries(self) -> list[GammaEntry]:
        entries = [self.gamma_entry()]
        while self.accept(","):
            entries.append(self.gamma_entry())
        return entries

    def gamma_entry(self) -> GammaEntry:
        n = self.name()
        self.expect(":")
        if self.at("<"):
            self.expect("<")
            t = self._lref()
            self.expect(">")
            self.expect("[")
            r = self.role()
            self.expect("]")
            return GammaEntry("chan", n, chan_type=t, chan_role=r)
        if self.accept("kw", "protocol"):
            self.expect("<")
            internal = self.role_list((";",))
            self.expect(";")
            args = self.param_list((";",))
            self.expect(";")
            external = self.role_list((">",))
            self.expect(">")
            self.expect("=")
            body = self._gref()
            return GammaEntry("protocol", n, proto_internal=internal, proto_args=args,
                              proto_external=external, proto_body=body)
        if self.at("$") or self.at("{"):
            return GammaEntry("session", n, session_type=self._gref())
        return GammaEntry("value", n, value_kind=self.kind())

    def delta_entries(self) -> list[DeltaEntry]:
        entries = [self.delta_entry()]
        while self.accept(","):
            entries.append(self.delta_entry())
        return entries

    def delta_entry(self) -> DeltaEntry:
        if self.accept("<"):
            session = self.name()
            self.expect(">")
            mode = "external"
        elif self.accept("~"):
            session = self.name()
            mode = "internal"
        else:
            ident = self.ident()
            if self.at(":"):
                # role : OV(kinds)
                self.expect(":")
                self.expect("kw", "OV")
                self.expect("(")
                kinds = []
                if not self.at(")"):
                    kinds.append(self.kind())
                    while self.accept(","):
                        kinds.append(self.kind())
                self.expect(")")
                return DeltaEntry("returnkinds", role=Role(ident), return_kinds=tuple(kinds))
            session = Name(ident)
            mode = "plain"
        self.expect("[")
        r = self.role()
        self.expect("]")
        self.expect(":")
        return DeltaEntry("endpoint", session=session, role=r, mode=mode,
                          local_type=self._lref())


# ---------------------------------------------------------------------------
# entry points


def parse_global(src: str) -> GlobalType:
    p = _Parser(src)
    g = p.global_type()
    p.expect("eof")
    return g


def parse_local(src: str) -> LocalType:
    p = _Parser(src)
    t = p.local_type()
    p.expect("eof")
    return t


def parse_process(src: str) -> Process:
    p = _Parser(src)
    out = p.process()
    p.expect("eof")
    return out


def parse_source(src: str) -> SourceFile:
    return _Parser(src).source_file()


def parse_file(path) -> SourceFile:
    with open(path, encoding="utf-8") as fh:
        return parse_source(fh.read())
