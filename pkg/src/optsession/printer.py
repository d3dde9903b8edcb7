"""Canonical pretty-printer for the .ost surface syntax.

print/parse round-trip: parse(print(x)) is alpha-equal to x for every
global type, local type, and process.  Trailing end/0 continuations are
emitted explicitly; an optional block with no computed values is printed
in the abbreviated no-value form opt[...]{ body }(cont).

'.' binds tighter than '|', so a parallel composition in continuation
position is parenthesized.
"""

from __future__ import annotations

from .syntax import (
    GCall, GChoice, GCom, GDecl, GEnd, GOptBlock, GPar, GRec, GVar,
    GlobalType, Kind, KindArrow, KindProtocol, KindRole, KindVal,
    LBranch, LCall, LChoice, LEnd, LEnt, LGet, LOpt, LPar, LRec, LReq, LSend,
    LVar, LocalType, POptEnd, PChoice, PDecl, PEnd, PEnt, PGet,
    PIn, POpt, POut, PPar, PRec, PRes, PReq, PSend, PVar, Param, Process,
)


def print_term(ast) -> str:
    """Print a global type, local type, or process."""
    if isinstance(ast, (GCom, GOptBlock, GDecl, GCall, GChoice, GPar, GRec, GVar, GEnd)):
        return print_global(ast)
    if isinstance(ast, (LGet, LSend, LOpt, LCall, LEnt, LReq, LChoice, LPar, LRec, LVar, LEnd)):
        return print_local(ast)
    return print_process(ast)


def print_kind(k: Kind) -> str:
    match k:
        case KindVal(sort):
            return sort
        case KindRole():
            return "role"
        case KindProtocol():
            return "proto"
        case KindArrow(args, result):
            return "(" + " x ".join(print_kind(a) for a in args) + ") -> " + print_kind(result)
    raise TypeError(f"not a kind: {k!r}")


def _params(ps: tuple[Param, ...]) -> str:
    return ", ".join(f"{n.id}:{print_kind(k)}" for n, k in ps)


def _names(ns) -> str:
    return ", ".join(n.id for n in ns)


def _roles(rs) -> str:
    return ", ".join(r.id for r in rs)


# ---------------------------------------------------------------------------
# global types


def print_global(g: GlobalType) -> str:
    return _pg(g)


def _pg_cont(g: GlobalType) -> str:
    # continuation after '.': stops at '|', so parallel must be grouped
    return f"({_pg(g)})" if isinstance(g, GPar) else _pg(g)


def _pg(g: GlobalType) -> str:
    match g:
        case GEnd():
            return "end"
        case GVar(v):
            return v.id
        case GRec(v, body):
            return f"mu {v.id}. {_pg_cont(body)}"
        case GCom(s, r, branches):
            if len(branches) == 1:
                b = branches[0]
                return f"{s.id} -> {r.id} : {b.label.id}({_params(b.params)}). {_pg_cont(b.cont)}"
            bs = ", ".join(
                f"{b.label.id}({_params(b.params)}). {_pg_cont(b.cont)}" for b in branches)
            return f"{s.id} -> {r.id} : {{ {bs} }}"
        case GOptBlock(parts, body, cont):
            ps = "; ".join(
                r.id + (f", {_params(d)}" if d else "") for r, d in parts)
            return f"opt<{ps}>{{ {_pg(body)} }}. {_pg_cont(cont)}"
        case GDecl(proto, ir, args, er, body, cont):
            return (f"let {proto.id}<{_roles(ir)}; {_params(args)}; {_roles(er)}> = "
                    f"{{ {_pg(body)} }} in {_pg(cont)}")
        case GCall(caller, proto, roles, args, cont):
            return f"call {caller.id}: {proto.id}<{_roles(roles)}; {_names(args)}>. {_pg_cont(cont)}"
        case GChoice(l, chooser, r):
            return f"choice[{chooser.id}]{{ {_pg(l)} }}or{{ {_pg(r)} }}"
        case GPar(l, r):
            ls = _pg(l)
            if isinstance(l, GPar):
                ls = f"({ls})"
            return f"{ls} | {_pg(r)}"
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# local types


def print_local(t: LocalType) -> str:
    return _pl(t)


def _pl_cont(t: LocalType) -> str:
    return f"({_pl(t)})" if isinstance(t, LPar) else _pl(t)


def _lbranches(branches: tuple[LBranch, ...]) -> str:
    if len(branches) == 1:
        b = branches[0]
        return f"{b.label.id}({_params(b.params)}). {_pl_cont(b.cont)}"
    bs = ", ".join(f"{b.label.id}({_params(b.params)}). {_pl_cont(b.cont)}" for b in branches)
    return f"{{ {bs} }}"


def _pl(t: LocalType) -> str:
    match t:
        case LEnd():
            return "end"
        case LVar(v):
            return v.id
        case LRec(v, body):
            return f"mu {v.id}. {_pl_cont(body)}"
        case LGet(role, branches):
            return f"get {role.id} {_lbranches(branches)}"
        case LSend(role, branches):
            return f"send {role.id} {_lbranches(branches)}"
        case LOpt(parts, body, binder, cont):
            return f"opt<{_roles(parts)}; {_params(binder)}>{{ {_pl(body)} }}. {_pl_cont(cont)}"
        case LCall(proto, gbody, argv, argb, ext, cont):
            return (f"call {proto.id}{{ {_pg(gbody)} }}<{_names(argv)}; {_params(argb)}; "
                    f"{_roles(ext)}>. {_pl_cont(cont)}")
        case LEnt(proto, as_role, args, inviter, cont):
            return f"ent {proto.id}[{as_role.id}]<{_names(args)}> from {inviter.id}. {_pl_cont(cont)}"
        case LReq(proto, for_role, args, invitee, cont):
            return f"req {proto.id}[{for_role.id}]<{_names(args)}> to {invitee.id}. {_pl_cont(cont)}"
        case LChoice(l, r):
            return f"choice{{ {_pl(l)} }}or{{ {_pl(r)} }}"
        case LPar(l, r):
            ls = _pl(l)
            if isinstance(l, LPar):
                ls = f"({ls})"
            return f"{ls} | {_pl(r)}"
    raise TypeError(f"not a local type: {t!r}")


# ---------------------------------------------------------------------------
# processes


def print_process(p: Process) -> str:
    return _pp(p)


def _pp_cont(p: Process) -> str:
    return f"({_pp(p)})" if isinstance(p, PPar) else _pp(p)


def _pp(p: Process) -> str:
    match p:
        case PEnd():
            return "0"
        case PVar(v):
            return v.id
        case PRec(v, body):
            return f"rec {v.id}. {_pp_cont(body)}"
        case PIn(chan, binders, cont):
            return f"{chan.id}({_names(binders)}). {_pp_cont(cont)}"
        case POut(chan, payload, cont):
            return f"{chan.id}<{_names(payload)}>. {_pp_cont(cont)}"
        case PGet(session, r1, r2, branches):
            if len(branches) == 1:
                b = branches[0]
                bs = f"{b.label.id}({_names(b.binders)}). {_pp_cont(b.cont)}"
            else:
                bs = "{ " + ", ".join(
                    f"{b.label.id}({_names(b.binders)}). {_pp_cont(b.cont)}" for b in branches) + " }"
            return f"get {session.id}[{r1.id} -> {r2.id}] {bs}"
        case PSend(session, r1, r2, label, payload, cont):
            return f"send {session.id}[{r1.id} -> {r2.id}] {label.id}<{_names(payload)}>. {_pp_cont(cont)}"
        case POpt(owner, parts, body, binders, defaults, cont):
            head = f"opt[{owner.id}; {_roles(parts)}]{{ {_pp(body)} }}"
            if binders:
                return f"{head}({_names(binders)})<- ({_names(defaults)})({_pp(cont)})"
            return f"{head}({_pp(cont)})"
        case POptEnd(owner, values):
            return f"optend {owner.id}<{_names(values)}>"
        case PDecl(k, parent, args, chans, ext, cont):
            inv = f" invite ({_names(chans)}; {_roles(ext)})" if chans else ""
            return f"new {k.id} wrt {parent.id}<{_names(args)}>{inv}. {_pp_cont(cont)}"
        case PEnt(session, r1, r2, r3, binder, cont):
            return f"ent {session.id}[{r1.id} -> {r2.id} : {r3.id}]({binder.id}). {_pp_cont(cont)}"
        case PReq(session, r1, r2, r3, sub, cont):
            return f"req {session.id}[{r1.id} -> {r2.id} : {r3.id}]<{sub.id}>. {_pp_cont(cont)}"
        case PRes(binder, body):
            return f"nu {binder.id}. {_pp_cont(body)}"
        case PChoice(l, r):
            return f"choice{{ {_pp(l)} }}or{{ {_pp(r)} }}"
        case PPar(l, r):
            ls = _pp(l)
            if isinstance(l, PPar):
                ls = f"({ls})"
            return f"{ls} | {_pp(r)}"
    raise TypeError(f"not a process: {p!r}")
