"""Abstract syntax for global types, local types, and processes.

Identifiers live in disjoint namespaces (Name, Role, Label, ProcVar,
TypeVar); the wrapper classes keep them apart by construction.  All AST
nodes are immutable, hashable dataclasses, so terms can be shared freely
across threads and used as dictionary keys.

Vectors (participants, payloads, defaults) are ordered tuples.  Where the
calculus compares role vectors as sets (the paper's dotted equality) we
provide `role_set_eq` instead of reordering the AST.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union


class SyntaxConstraintError(ValueError):
    """An AST invariant was violated (distinct labels, owner membership, ...)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


# ---------------------------------------------------------------------------
# identifiers


@dataclass(frozen=True, slots=True)
class Name:
    id: str

    def __post_init__(self):
        if not self.id:
            raise SyntaxConstraintError("empty-name", "names must be non-empty")
        object.__setattr__(self, "id", sys.intern(self.id))

    def __repr__(self):
        return f"Name({self.id})"


@dataclass(frozen=True, slots=True)
class Role:
    id: str

    def __post_init__(self):
        if not self.id:
            raise SyntaxConstraintError("empty-role", "roles must be non-empty")
        object.__setattr__(self, "id", sys.intern(self.id))

    def __repr__(self):
        return f"Role({self.id})"


@dataclass(frozen=True, slots=True)
class Label:
    id: str

    def __post_init__(self):
        if not self.id:
            raise SyntaxConstraintError("empty-label", "labels must be non-empty")
        object.__setattr__(self, "id", sys.intern(self.id))

    def __repr__(self):
        return f"Label({self.id})"


@dataclass(frozen=True, slots=True)
class ProcVar:
    id: str

    def __repr__(self):
        return f"ProcVar({self.id})"


@dataclass(frozen=True, slots=True)
class TypeVar:
    id: str

    def __repr__(self):
        return f"TypeVar({self.id})"


# ---------------------------------------------------------------------------
# kinds


@dataclass(frozen=True, slots=True)
class KindRole:
    pass


@dataclass(frozen=True, slots=True)
class KindVal:
    sort: str


@dataclass(frozen=True, slots=True)
class KindProtocol:
    pass


@dataclass(frozen=True, slots=True)
class KindArrow:
    args: tuple["Kind", ...]
    result: "Kind"


Kind = Union[KindRole, KindVal, KindProtocol, KindArrow]

#: (name, kind) pairs used for typed parameter vectors
Param = tuple[Name, Kind]


def params(*pairs: tuple[str, str]) -> tuple[Param, ...]:
    """Shorthand: params(("v", "V")) -> ((Name v, KindVal V),)."""
    return tuple((Name(n), KindVal(s)) for n, s in pairs)


# ---------------------------------------------------------------------------
# global types


@dataclass(frozen=True, slots=True)
class GBranch:
    label: Label
    params: tuple[Param, ...]
    cont: "GlobalType"


@dataclass(frozen=True, slots=True)
class GCom:
    sender: Role
    receiver: Role
    branches: tuple[GBranch, ...]

    def __post_init__(self):
        if not self.branches:
            raise SyntaxConstraintError("com-empty", "communication needs a branch")
        labels = [b.label for b in self.branches]
        if len(set(labels)) != len(labels):
            raise SyntaxConstraintError("com-labels", "branch labels must be distinct")


@dataclass(frozen=True, slots=True)
class GOptBlock:
    #: per-participant (role, default-value vector); roles pairwise distinct
    participants: tuple[tuple[Role, tuple[Param, ...]], ...]
    body: "GlobalType"
    cont: "GlobalType"

    def __post_init__(self):
        if not self.participants:
            raise SyntaxConstraintError("opt-empty", "optional block needs participants")
        roles = [r for r, _ in self.participants]
        if len(set(roles)) != len(roles):
            raise SyntaxConstraintError("opt-roles-distinct", "optional block roles must be distinct")

    @property
    def roles(self) -> tuple[Role, ...]:
        return tuple(r for r, _ in self.participants)


@dataclass(frozen=True, slots=True)
class GDecl:
    proto: Name
    internal_roles: tuple[Role, ...]
    args: tuple[Param, ...]
    external_roles: tuple[Role, ...]
    body: "GlobalType"
    cont: "GlobalType"


@dataclass(frozen=True, slots=True)
class GCall:
    caller: Role
    proto: Name
    roles: tuple[Role, ...]
    args: tuple[Name, ...]
    cont: "GlobalType"


@dataclass(frozen=True, slots=True)
class GChoice:
    left: "GlobalType"
    chooser: Role
    right: "GlobalType"


@dataclass(frozen=True, slots=True)
class GPar:
    left: "GlobalType"
    right: "GlobalType"


@dataclass(frozen=True, slots=True)
class GRec:
    var: TypeVar
    body: "GlobalType"

    def __post_init__(self):
        if not _gtype_contractive(self.body, self.var):
            raise SyntaxConstraintError("rec-contractive", f"unguarded {self.var.id} in rec body")


@dataclass(frozen=True, slots=True)
class GVar:
    var: TypeVar


@dataclass(frozen=True, slots=True)
class GEnd:
    pass


GlobalType = Union[GCom, GOptBlock, GDecl, GCall, GChoice, GPar, GRec, GVar, GEnd]

G_END = GEnd()


def _gtype_contractive(g: GlobalType, var: TypeVar) -> bool:
    # var must not be reachable through Par/Choice/Rec positions alone
    match g:
        case GVar(v):
            return v != var
        case GPar(l, r):
            return _gtype_contractive(l, var) and _gtype_contractive(r, var)
        case GChoice(l, _, r):
            return _gtype_contractive(l, var) and _gtype_contractive(r, var)
        case GRec(v, body):
            return v == var or _gtype_contractive(body, var)
        case _:
            return True


# ---------------------------------------------------------------------------
# local types


@dataclass(frozen=True, slots=True)
class LBranch:
    label: Label
    params: tuple[Param, ...]
    cont: "LocalType"


@dataclass(frozen=True, slots=True)
class LGet:
    source: Role
    branches: tuple[LBranch, ...]

    def __post_init__(self):
        _check_lbranches(self.branches)


@dataclass(frozen=True, slots=True)
class LSend:
    target: Role
    branches: tuple[LBranch, ...]

    def __post_init__(self):
        _check_lbranches(self.branches)


@dataclass(frozen=True, slots=True)
class LOpt:
    participants: tuple[Role, ...]
    body: "LocalType"
    binder: tuple[Param, ...]
    cont: "LocalType"

    def __post_init__(self):
        if len(set(self.participants)) != len(self.participants):
            raise SyntaxConstraintError("opt-roles-distinct", "optional block roles must be distinct")


@dataclass(frozen=True, slots=True)
class LCall:
    proto: Name
    body: GlobalType
    arg_vals: tuple[Name, ...]
    arg_binders: tuple[Param, ...]
    external_roles: tuple[Role, ...]
    cont: "LocalType"


@dataclass(frozen=True, slots=True)
class LEnt:
    proto: Name
    as_role: Role
    args: tuple[Name, ...]
    inviter: Role
    cont: "LocalType"


@dataclass(frozen=True, slots=True)
class LReq:
    proto: Name
    for_role: Role
    args: tuple[Name, ...]
    invitee: Role
    cont: "LocalType"


@dataclass(frozen=True, slots=True)
class LChoice:
    left: "LocalType"
    right: "LocalType"


@dataclass(frozen=True, slots=True)
class LPar:
    left: "LocalType"
    right: "LocalType"


@dataclass(frozen=True, slots=True)
class LRec:
    var: TypeVar
    body: "LocalType"

    def __post_init__(self):
        if not _ltype_contractive(self.body, self.var):
            raise SyntaxConstraintError("rec-contractive", f"unguarded {self.var.id} in rec body")


@dataclass(frozen=True, slots=True)
class LVar:
    var: TypeVar


@dataclass(frozen=True, slots=True)
class LEnd:
    pass


LocalType = Union[LGet, LSend, LOpt, LCall, LEnt, LReq, LChoice, LPar, LRec, LVar, LEnd]

L_END = LEnd()


def _check_lbranches(branches: tuple[LBranch, ...]):
    if not branches:
        raise SyntaxConstraintError("com-empty", "communication needs a branch")
    labels = [b.label for b in branches]
    if len(set(labels)) != len(labels):
        raise SyntaxConstraintError("com-labels", "branch labels must be distinct")


def _ltype_contractive(t: LocalType, var: TypeVar) -> bool:
    match t:
        case LVar(v):
            return v != var
        case LPar(l, r) | LChoice(l, r):
            return _ltype_contractive(l, var) and _ltype_contractive(r, var)
        case LRec(v, body):
            return v == var or _ltype_contractive(body, var)
        case _:
            return True


# ---------------------------------------------------------------------------
# processes


@dataclass(frozen=True, slots=True)
class PBranch:
    label: Label
    binders: tuple[Name, ...]
    cont: "Process"


@dataclass(frozen=True, slots=True)
class PIn:
    chan: Name
    binders: tuple[Name, ...]
    cont: "Process"


@dataclass(frozen=True, slots=True)
class POut:
    chan: Name
    payload: tuple[Name, ...]
    cont: "Process"


@dataclass(frozen=True, slots=True)
class PGet:
    session: Name
    sender: Role
    receiver: Role
    branches: tuple[PBranch, ...]

    def __post_init__(self):
        if not self.branches:
            raise SyntaxConstraintError("com-empty", "branching input needs a branch")
        labels = [b.label for b in self.branches]
        if len(set(labels)) != len(labels):
            raise SyntaxConstraintError("com-labels", "branch labels must be distinct")


@dataclass(frozen=True, slots=True)
class PSend:
    session: Name
    sender: Role
    receiver: Role
    label: Label
    payload: tuple[Name, ...]
    cont: "Process"


@dataclass(frozen=True, slots=True)
class POpt:
    owner: Role
    participants: tuple[Role, ...]
    body: "Process"
    binders: tuple[Name, ...]
    defaults: tuple[Name, ...]
    cont: "Process"

    def __post_init__(self):
        if self.owner not in self.participants:
            raise SyntaxConstraintError(
                "opt-owner", f"owner {self.owner.id} must be one of the block participants"
            )
        if len(set(self.participants)) != len(self.participants):
            raise SyntaxConstraintError("opt-roles-distinct", "optional block roles must be distinct")
        if len(self.binders) != len(self.defaults):
            raise SyntaxConstraintError(
                "opt-arity", "binder and default vectors must have equal length"
            )


@dataclass(frozen=True, slots=True)
class POptEnd:
    owner: Role
    values: tuple[Name, ...]


@dataclass(frozen=True, slots=True)
class PDecl:
    """Creation of a sub-session `new_session` of the parent session `parent`."""

    new_session: Name
    parent: Name
    args: tuple[Name, ...]
    invitation_chans: tuple[Name, ...]
    external_roles: tuple[Role, ...]
    cont: "Process"

    def __post_init__(self):
        if len(self.invitation_chans) != len(self.external_roles):
            raise SyntaxConstraintError(
                "decl-arity", "one invitation channel per external role"
            )


@dataclass(frozen=True, slots=True)
class PEnt:
    session: Name
    inviter: Role
    invitee: Role
    as_role: Role
    binder: Name
    cont: "Process"


@dataclass(frozen=True, slots=True)
class PReq:
    session: Name
    inviter: Role
    invitee: Role
    as_role: Role
    sub_session: Name
    cont: "Process"


@dataclass(frozen=True, slots=True)
class PRes:
    binder: Name
    body: "Process"


@dataclass(frozen=True, slots=True)
class PChoice:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class PPar:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class PRec:
    var: ProcVar
    body: "Process"

    def __post_init__(self):
        if not _proc_contractive(self.body, self.var):
            raise SyntaxConstraintError("rec-contractive", f"unguarded {self.var.id} in rec body")


@dataclass(frozen=True, slots=True)
class PVar:
    var: ProcVar


@dataclass(frozen=True, slots=True)
class PEnd:
    pass


Process = Union[
    PIn, POut, PGet, PSend, POpt, POptEnd, PDecl, PEnt, PReq,
    PRes, PChoice, PPar, PRec, PVar, PEnd,
]

P_END = PEnd()


def _proc_contractive(p: Process, var: ProcVar) -> bool:
    match p:
        case PVar(v):
            return v != var
        case PPar(l, r) | PChoice(l, r):
            return _proc_contractive(l, var) and _proc_contractive(r, var)
        case PRes(_, body):
            return _proc_contractive(body, var)
        case PRec(v, body):
            return v == var or _proc_contractive(body, var)
        case _:
            return True


# ---------------------------------------------------------------------------
# sequencing helpers (the paper's big-circle / big-parallel abbreviations)


def gseq(blocks: list, last: GlobalType = G_END) -> GlobalType:
    """Sequentially compose prefix-shaped global types given as builders.

    Each element is a callable cont -> GlobalType.
    """
    out = last
    for mk in reversed(blocks):
        out = mk(out)
    return out


def gpar(items: list[GlobalType]) -> GlobalType:
    if not items:
        return G_END
    out = items[-1]
    for g in reversed(items[:-1]):
        out = GPar(g, out)
    return out


def lpar(items: list[LocalType]) -> LocalType:
    if not items:
        return L_END
    out = items[-1]
    for t in reversed(items[:-1]):
        out = LPar(t, out)
    return out


def ppar(items: list[Process]) -> Process:
    if not items:
        return P_END
    out = items[-1]
    for p in reversed(items[:-1]):
        out = PPar(p, out)
    return out


def role_set_eq(a: tuple[Role, ...], b: tuple[Role, ...]) -> bool:
    """The paper's dotted equality: same roles, order irrelevant."""
    return set(a) == set(b)


# ---------------------------------------------------------------------------
# free names and substitution for processes


def free_names(p: Process) -> set[Name]:
    """Names of p not bound by an In/Get/Opt/Ent/Res binder in scope."""
    match p:
        case PEnd() | PVar(_):
            return set()
        case PIn(chan, binders, cont):
            return {chan} | (free_names(cont) - set(binders))
        case POut(chan, payload, cont):
            return {chan} | set(payload) | free_names(cont)
        case PGet(session, _, _, branches):
            out = {session}
            for b in branches:
                out |= free_names(b.cont) - set(b.binders)
            return out
        case PSend(session, _, _, _, payload, cont):
            return {session} | set(payload) | free_names(cont)
        case POpt(_, _, body, binders, defaults, cont):
            return free_names(body) | set(defaults) | (free_names(cont) - set(binders))
        case POptEnd(_, values):
            return set(values)
        case PDecl(new_session, parent, args, chans, _, cont):
            return {new_session, parent} | set(args) | set(chans) | free_names(cont)
        case PEnt(session, _, _, _, binder, cont):
            return {session} | (free_names(cont) - {binder})
        case PReq(session, _, _, _, sub, cont):
            return {session, sub} | free_names(cont)
        case PRes(binder, body):
            return free_names(body) - {binder}
        case PChoice(l, r) | PPar(l, r):
            return free_names(l) | free_names(r)
        case PRec(_, body):
            return free_names(body)
    raise TypeError(f"not a process: {p!r}")


def fresh_name(base: Name, avoid: set[Name]) -> Name:
    """First primed variant of base not in avoid; deterministic."""
    stem = base.id.rstrip("'0123456789") or base.id
    i = 1
    cand = Name(stem + "'")
    while cand in avoid:
        i += 1
        cand = Name(f"{stem}'{i}")
    return cand


def _subst_name(n: Name, subst: dict[Name, Name]) -> Name:
    return subst.get(n, n)


def _subst_names(ns: tuple[Name, ...], subst: dict[Name, Name]) -> tuple[Name, ...]:
    return tuple(subst.get(n, n) for n in ns)


def substitute(p: Process, subst: dict[Name, Name]) -> Process:
    """Capture-avoiding simultaneous substitution of free names.

    Bound names are renamed (with fresh_name) when they would capture an
    incoming name.
    """
    subst = {k: v for k, v in subst.items() if k != v}
    if not subst:
        return p
    return _subst(p, subst)


def _rename_binders(
    binders: tuple[Name, ...], body_terms: list[Process], subst: dict[Name, Name]
) -> tuple[tuple[Name, ...], dict[Name, Name]]:
    """Drop shadowed entries; alpha-rename binders that would capture."""
    live = {k: v for k, v in subst.items() if k not in binders}
    incoming = set(live.values())
    if not live or not (incoming & set(binders)):
        return binders, live
    avoid = incoming | set(binders)
    for t in body_terms:
        avoid |= free_names(t)
    renames: dict[Name, Name] = {}
    new_binders = []
    for b in binders:
        if b in incoming:
            nb = fresh_name(b, avoid)
            avoid.add(nb)
            renames[b] = nb
            new_binders.append(nb)
        else:
            new_binders.append(b)
    return tuple(new_binders), {**live, **renames}


def _subst(p: Process, s: dict[Name, Name]) -> Process:
    match p:
        case PEnd() | PVar(_):
            return p
        case PIn(chan, binders, cont):
            nb, s2 = _rename_binders(binders, [cont], s)
            return PIn(_subst_name(chan, s), nb, _subst(cont, s2) if s2 else cont)
        case POut(chan, payload, cont):
            return POut(_subst_name(chan, s), _subst_names(payload, s), _subst(cont, s))
        case PGet(session, r1, r2, branches):
            new_branches = []
            for b in branches:
                nb, s2 = _rename_binders(b.binders, [b.cont], s)
                new_branches.append(PBranch(b.label, nb, _subst(b.cont, s2) if s2 else b.cont))
            return PGet(_subst_name(session, s), r1, r2, tuple(new_branches))
        case PSend(session, r1, r2, label, payload, cont):
            return PSend(_subst_name(session, s), r1, r2, label, _subst_names(payload, s), _subst(cont, s))
        case POpt(owner, parts, body, binders, defaults, cont):
            nb, s2 = _rename_binders(binders, [cont], s)
            return POpt(owner, parts, _subst(body, s), nb,
                        _subst_names(defaults, s), _subst(cont, s2) if s2 else cont)
        case POptEnd(owner, values):
            return POptEnd(owner, _subst_names(values, s))
        case PDecl(k, parent, args, chans, ext, cont):
            return PDecl(_subst_name(k, s), _subst_name(parent, s), _subst_names(args, s),
                         _subst_names(chans, s), ext, _subst(cont, s))
        case PEnt(session, r1, r2, r3, binder, cont):
            nb, s2 = _rename_binders((binder,), [cont], s)
            return PEnt(_subst_name(session, s), r1, r2, r3, nb[0], _subst(cont, s2) if s2 else cont)
        case PReq(session, r1, r2, r3, sub, cont):
            return PReq(_subst_name(session, s), r1, r2, r3, _subst_name(sub, s), _subst(cont, s))
        case PRes(binder, body):
            nb, s2 = _rename_binders((binder,), [body], s)
            return PRes(nb[0], _subst(body, s2) if s2 else body)
        case PChoice(l, r):
            return PChoice(_subst(l, s), _subst(r, s))
        case PPar(l, r):
            return PPar(_subst(l, s), _subst(r, s))
        case PRec(v, body):
            return PRec(v, _subst(body, s))
    raise TypeError(f"not a process: {p!r}")


def unfold_rec(p: PRec) -> Process:
    """One step of rec X.P == P{rec X.P / X}."""
    return _subst_procvar(p.body, p.var, p)


def _subst_procvar(p: Process, var: ProcVar, rep: Process) -> Process:
    match p:
        case PVar(v):
            return rep if v == var else p
        case PEnd() | POptEnd(_, _):
            return p
        case PRec(v, body):
            if v == var:
                return p
            return PRec(v, _subst_procvar(body, var, rep))
        case PIn(chan, binders, cont):
            return PIn(chan, binders, _subst_procvar(cont, var, rep))
        case POut(chan, payload, cont):
            return POut(chan, payload, _subst_procvar(cont, var, rep))
        case PGet(session, r1, r2, branches):
            return PGet(session, r1, r2, tuple(
                PBranch(b.label, b.binders, _subst_procvar(b.cont, var, rep)) for b in branches))
        case PSend(session, r1, r2, label, payload, cont):
            return PSend(session, r1, r2, label, payload, _subst_procvar(cont, var, rep))
        case POpt(owner, parts, body, binders, defaults, cont):
            return POpt(owner, parts, _subst_procvar(body, var, rep), binders, defaults,
                        _subst_procvar(cont, var, rep))
        case PDecl(k, parent, args, chans, ext, cont):
            return PDecl(k, parent, args, chans, ext, _subst_procvar(cont, var, rep))
        case PEnt(session, r1, r2, r3, binder, cont):
            return PEnt(session, r1, r2, r3, binder, _subst_procvar(cont, var, rep))
        case PReq(session, r1, r2, r3, sub, cont):
            return PReq(session, r1, r2, r3, sub, _subst_procvar(cont, var, rep))
        case PRes(binder, body):
            return PRes(binder, _subst_procvar(body, var, rep))
        case PChoice(l, r):
            return PChoice(_subst_procvar(l, var, rep), _subst_procvar(r, var, rep))
        case PPar(l, r):
            return PPar(_subst_procvar(l, var, rep), _subst_procvar(r, var, rep))
    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# alpha equivalence


def alpha_eq(p: Process, q: Process) -> bool:
    """True iff p and q differ only in the choice of bound names."""
    return _alpha(p, q, {}, {}, 0)


def _alpha(p, q, envp: dict, envq: dict, depth: int) -> bool:
    if type(p) is not type(q):
        return False

    def name_eq(a: Name, b: Name) -> bool:
        da, db = envp.get(a), envq.get(b)
        if da is None and db is None:
            return a == b
        return da == db

    def names_eq(xs, ys):
        return len(xs) == len(ys) and all(name_eq(a, b) for a, b in zip(xs, ys))

    def bind(xs, ys, k):
        if len(xs) != len(ys):
            return False
        ep, eq, d = dict(envp), dict(envq), depth
        for a, b in zip(xs, ys):
            ep[a] = d
            eq[b] = d
            d += 1
        return k(ep, eq, d)

    match p:
        case PEnd():
            return True
        case PVar(v):
            return v == q.var
        case PIn(chan, binders, cont):
            return name_eq(chan, q.chan) and bind(
                binders, q.binders, lambda ep, eq, d: _alpha(cont, q.cont, ep, eq, d))
        case POut(chan, payload, cont):
            return name_eq(chan, q.chan) and names_eq(payload, q.payload) and _alpha(
                cont, q.cont, envp, envq, depth)
        case PGet(session, r1, r2, branches):
            if not (name_eq(session, q.session) and r1 == q.sender and r2 == q.receiver
                    and len(branches) == len(q.branches)):
                return False
            for b1, b2 in zip(branches, q.branches):
                if b1.label != b2.label:
                    return False
                if not bind(b1.binders, b2.binders,
                            lambda ep, eq, d, b1=b1, b2=b2: _alpha(b1.cont, b2.cont, ep, eq, d)):
                    return False
            return True
        case PSend(session, r1, r2, label, payload, cont):
            return (name_eq(session, q.session) and r1 == q.sender and r2 == q.receiver
                    and label == q.label and names_eq(payload, q.payload)
                    and _alpha(cont, q.cont, envp, envq, depth))
        case POpt(owner, parts, body, binders, defaults, cont):
            return (owner == q.owner and parts == q.participants
                    and names_eq(defaults, q.defaults)
                    and _alpha(body, q.body, envp, envq, depth)
                    and bind(binders, q.binders,
                             lambda ep, eq, d: _alpha(cont, q.cont, ep, eq, d)))
        case POptEnd(owner, values):
            return owner == q.owner and names_eq(values, q.values)
        case PDecl(k, parent, args, chans, ext, cont):
            return (name_eq(k, q.new_session) and name_eq(parent, q.parent)
                    and names_eq(args, q.args) and names_eq(chans, q.invitation_chans)
                    and ext == q.external_roles and _alpha(cont, q.cont, envp, envq, depth))
        case PEnt(session, r1, r2, r3, binder, cont):
            return (name_eq(session, q.session) and (r1, r2, r3) == (q.inviter, q.invitee, q.as_role)
                    and bind((binder,), (q.binder,),
                             lambda ep, eq, d: _alpha(cont, q.cont, ep, eq, d)))
        case PReq(session, r1, r2, r3, sub, cont):
            return (name_eq(session, q.session) and (r1, r2, r3) == (q.inviter, q.invitee, q.as_role)
                    and name_eq(sub, q.sub_session) and _alpha(cont, q.cont, envp, envq, depth))
        case PRes(binder, body):
            return bind((binder,), (q.binder,),
                        lambda ep, eq, d: _alpha(body, q.body, ep, eq, d))
        case PChoice(l, r) | PPar(l, r):
            return _alpha(l, q.left, envp, envq, depth) and _alpha(r, q.right, envp, envq, depth)
        case PRec(v, body):
            # process variables live in their own namespace; compare literally
            return v == q.var and _alpha(body, q.body, envp, envq, depth)
    raise TypeError(f"not a process: {p!r}")


# ---------------------------------------------------------------------------
# type-level helpers (substitution of value names, alpha on rec binders)


def gsubst_names(g: GlobalType, subst: dict[Name, Name]) -> GlobalType:
    """Replace name occurrences in a global type (types bind names loosely)."""
    if not subst:
        return g

    def sp(ps: tuple[Param, ...]) -> tuple[Param, ...]:
        return tuple((subst.get(n, n), k) for n, k in ps)

    match g:
        case GEnd() | GVar(_):
            return g
        case GCom(s, r, branches):
            return GCom(s, r, tuple(
                GBranch(b.label, sp(b.params), gsubst_names(b.cont, subst)) for b in branches))
        case GOptBlock(parts, body, cont):
            return GOptBlock(tuple((r, sp(d)) for r, d in parts),
                             gsubst_names(body, subst), gsubst_names(cont, subst))
        case GDecl(proto, ir, args, er, body, cont):
            return GDecl(proto, ir, sp(args), er, gsubst_names(body, subst),
                         gsubst_names(cont, subst))
        case GCall(caller, proto, roles, args, cont):
            return GCall(caller, proto, roles, _subst_names(args, subst),
                         gsubst_names(cont, subst))
        case GChoice(l, chooser, r):
            return GChoice(gsubst_names(l, subst), chooser, gsubst_names(r, subst))
        case GPar(l, r):
            return GPar(gsubst_names(l, subst), gsubst_names(r, subst))
        case GRec(v, body):
            return GRec(v, gsubst_names(body, subst))
    raise TypeError(f"not a global type: {g!r}")


def free_roles(g: GlobalType) -> set[Role]:
    """Roles free in g; a Decl's formal roles are local to its body."""
    match g:
        case GEnd() | GVar(_):
            return set()
        case GCom(s, r, branches):
            out = {s, r}
            for b in branches:
                out |= free_roles(b.cont)
            return out
        case GOptBlock(parts, body, cont):
            return {r for r, _ in parts} | free_roles(body) | free_roles(cont)
        case GDecl(_, ir, _, er, body, cont):
            return (free_roles(body) - set(ir) - set(er)) | free_roles(cont)
        case GCall(caller, _, roles, _, cont):
            return {caller} | set(roles) | free_roles(cont)
        case GChoice(l, chooser, r):
            return {chooser} | free_roles(l) | free_roles(r)
        case GPar(l, r):
            return free_roles(l) | free_roles(r)
        case GRec(_, body):
            return free_roles(body)
    raise TypeError(f"not a global type: {g!r}")


def gtype_alpha_eq(a: GlobalType, b: GlobalType) -> bool:
    """Structural equality up to renaming of recursion variables."""
    return _type_alpha(a, b, {}, {}, is_global=True)


def ltype_alpha_eq(a: LocalType, b: LocalType) -> bool:
    return _type_alpha(a, b, {}, {}, is_global=False)


def _type_alpha(a, b, enva: dict, envb: dict, is_global: bool) -> bool:
    if type(a) is not type(b):
        return False

    def tv_eq(x: TypeVar, y: TypeVar):
        da, db = enva.get(x), envb.get(y)
        if da is None and db is None:
            return x == y
        return da == db

    if is_global:
        match a:
            case GEnd():
                return True
            case GVar(v):
                return tv_eq(v, b.var)
            case GRec(v, body):
                d = len(enva)
                return _type_alpha(body, b.body, {**enva, v: d}, {**envb, b.var: d}, True)
            case GCom(s, r, branches):
                return (s, r) == (b.sender, b.receiver) and len(branches) == len(b.branches) and all(
                    x.label == y.label and x.params == y.params
                    and _type_alpha(x.cont, y.cont, enva, envb, True)
                    for x, y in zip(branches, b.branches))
            case GOptBlock(parts, body, cont):
                return (parts == b.participants
                        and _type_alpha(body, b.body, enva, envb, True)
                        and _type_alpha(cont, b.cont, enva, envb, True))
            case GDecl(proto, ir, args, er, body, cont):
                return ((proto, ir, args, er) == (b.proto, b.internal_roles, b.args, b.external_roles)
                        and _type_alpha(body, b.body, enva, envb, True)
                        and _type_alpha(cont, b.cont, enva, envb, True))
            case GCall(caller, proto, roles, args, cont):
                return ((caller, proto, roles, args) == (b.caller, b.proto, b.roles, b.args)
                        and _type_alpha(cont, b.cont, enva, envb, True))
            case GChoice(l, chooser, r):
                return chooser == b.chooser and _type_alpha(l, b.left, enva, envb, True) \
                    and _type_alpha(r, b.right, enva, envb, True)
            case GPar(l, r):
                return _type_alpha(l, b.left, enva, envb, True) and _type_alpha(r, b.right, enva, envb, True)
    else:
        match a:
            case LEnd():
                return True
            case LVar(v):
                return tv_eq(v, b.var)
            case LRec(v, body):
                d = len(enva)
                return _type_alpha(body, b.body, {**enva, v: d}, {**envb, b.var: d}, False)
            case LGet(role, branches):
                return role == b.source and _lbranches_alpha(branches, b.branches, enva, envb)
            case LSend(role, branches):
                return role == b.target and _lbranches_alpha(branches, b.branches, enva, envb)
            case LOpt(parts, body, binder, cont):
                return (parts == b.participants and binder == b.binder
                        and _type_alpha(body, b.body, enva, envb, False)
                        and _type_alpha(cont, b.cont, enva, envb, False))
            case LCall(proto, gbody, argv, argb, ext, cont):
                return ((proto, argv, argb, ext) == (b.proto, b.arg_vals, b.arg_binders, b.external_roles)
                        and gtype_alpha_eq(gbody, b.body)
                        and _type_alpha(cont, b.cont, enva, envb, False))
            case LEnt(proto, as_role, args, inviter, cont):
                return ((proto, as_role, args, inviter) == (b.proto, b.as_role, b.args, b.inviter)
                        and _type_alpha(cont, b.cont, enva, envb, False))
            case LReq(proto, for_role, args, invitee, cont):
                return ((proto, for_role, args, invitee) == (b.proto, b.for_role, b.args, b.invitee)
                        and _type_alpha(cont, b.cont, enva, envb, False))
            case LChoice(l, r) | LPar(l, r):
                return _type_alpha(l, b.left, enva, envb, False) and _type_alpha(r, b.right, enva, envb, False)
    raise TypeError(f"not a type: {a!r}")


def _lbranches_alpha(xs, ys, enva, envb) -> bool:
    return len(xs) == len(ys) and all(
        x.label == y.label and x.params == y.params and _type_alpha(x.cont, y.cont, enva, envb, False)
        for x, y in zip(xs, ys))
