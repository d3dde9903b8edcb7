"""Restriction of global types to a role and projection onto local types.

Projection is defined with respect to a protocol environment that maps
protocol identifiers (declared by let) to their signature and body.  The
environment is extended functionally; declarations scope lexically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .syntax import (
    GBranch, GCall, GChoice, GCom, GDecl, GEnd, GOptBlock, GPar, GRec, GVar,
    GlobalType, LBranch, LCall, LChoice, LEnd, LEnt, LGet, LOpt, LPar, LRec,
    LReq, LSend, LVar, L_END, LocalType, Name, Param, Role, free_roles,
    gsubst_names,
)


class UnknownProtocolError(KeyError):
    pass


class NonProjectableError(ValueError):
    pass


@dataclass(frozen=True)
class ProtocolEntry:
    internal_roles: tuple[Role, ...]
    args: tuple[Param, ...]
    external_roles: tuple[Role, ...]
    body: GlobalType


@dataclass(frozen=True)
class ProtocolEnv:
    entries: dict = field(default_factory=dict)

    def extend(self, proto: Name, entry: ProtocolEntry) -> "ProtocolEnv":
        return ProtocolEnv({**self.entries, proto: entry})

    def lookup(self, proto: Name) -> ProtocolEntry:
        if proto not in self.entries:
            raise UnknownProtocolError(f"protocol {proto.id} is not declared")
        return self.entries[proto]


EMPTY_PROTOCOLS = ProtocolEnv()


# ---------------------------------------------------------------------------
# restriction


def restrict(g: GlobalType, role: Role) -> GlobalType:
    """Prune a global type to the parts relevant for one role.

    Declarations are kept with their body untouched; calls are kept iff the
    role is the caller or invited; a communication is kept iff the role is
    an endpoint (otherwise the first branch continuation is restricted); an
    optional block is kept iff the role participates.
    """
    match g:
        case GEnd() | GVar(_):
            return g
        case GDecl(proto, internal, args, external, body, cont):
            return GDecl(proto, internal, args, external, body, restrict(cont, role))
        case GCall(caller, proto, roles, args, cont):
            if role == caller or role in roles:
                return GCall(caller, proto, roles, args, restrict(cont, role))
            return restrict(cont, role)
        case GCom(sender, receiver, branches):
            if role in (sender, receiver):
                return GCom(sender, receiver, tuple(
                    GBranch(b.label, b.params, restrict(b.cont, role))
                    for b in branches))
            return restrict(branches[0].cont, role)
        case GOptBlock(parts, body, cont):
            if role in (r for r, _ in parts):
                return GOptBlock(parts, restrict(body, role), restrict(cont, role))
            return restrict(cont, role)
        case GChoice(l, chooser, r):
            return GChoice(restrict(l, role), chooser, restrict(r, role))
        case GPar(l, r):
            return GPar(restrict(l, role), restrict(r, role))
        case GRec(v, body):
            return GRec(v, restrict(body, role))
    raise TypeError(f"not a global type: {g!r}")


# ---------------------------------------------------------------------------
# projection


def project(g: GlobalType, env: ProtocolEnv, role: Role) -> LocalType:
    """Project a global type onto one role's local type."""
    match g:
        case GEnd():
            return L_END
        case GVar(v):
            return LVar(v)
        case GRec(v, body):
            return LRec(v, project(body, env, role))
        case GDecl(proto, internal, args, external, body, cont):
            entry = ProtocolEntry(internal, args, external, body)
            return project(cont, env.extend(proto, entry), role)
        case GCall(caller, proto, roles, args, cont):
            return _project_call(g, env, role)
        case GCom(sender, receiver, branches):
            if role == sender:
                return LSend(receiver, tuple(
                    LBranch(b.label, b.params, project(b.cont, env, role))
                    for b in branches))
            if role == receiver:
                return LGet(sender, tuple(
                    LBranch(b.label, b.params, project(b.cont, env, role))
                    for b in branches))
            # bystander: branch agreement is enforced by well-formedness
            return project(branches[0].cont, env, role)
        case GOptBlock(parts, body, cont):
            for r, defaults in parts:
                if r == role:
                    roles = tuple(x for x, _ in parts)
                    if defaults:
                        return LOpt(roles, project(body, env, role), defaults,
                                    project(cont, env, role))
                    block = LOpt(roles, project(body, env, role), (), L_END)
                    rest = project(cont, env, role)
                    # trailing parallel end is dropped for canonical output
                    if isinstance(rest, LEnd):
                        return block
                    return LPar(block, rest)
            return project(cont, env, role)
        case GChoice(l, chooser, r):
            if role == chooser:
                return LChoice(project(l, env, role), project(r, env, role))
            return project(l, env, role)
        case GPar(l, r):
            in_l = role in free_roles(l)
            in_r = role in free_roles(r)
            if in_l and in_r:
                raise NonProjectableError(
                    f"role {role.id} occurs in both parallel components")
            if in_l:
                return project(l, env, role)
            if in_r:
                return project(r, env, role)
            return L_END
    raise TypeError(f"not a global type: {g!r}")


def _project_call(g: GCall, env: ProtocolEnv, role: Role) -> LocalType:
    entry = env.lookup(g.proto)
    internal, formals = entry.internal_roles, entry.args
    if len(g.roles) != len(internal):
        raise NonProjectableError(
            f"call of {g.proto.id} invites {len(g.roles)} roles, "
            f"protocol declares {len(internal)}")
    formal_params = tuple((n, k) for n, k in formals)
    reqs = [
        LReq(g.proto, internal[i], g.args, g.roles[i], L_END)
        for i in range(len(internal))
    ]

    def invited_as() -> Optional[Role]:
        for i, r in enumerate(g.roles):
            if r == role:
                return internal[i]
        return None

    played = invited_as()
    if role == g.caller:
        call = lambda cont: LCall(g.proto, entry.body, g.args, formal_params,
                                  entry.external_roles, cont)
        tail = project(g.cont, env, role)
        if played is not None:
            ent = LEnt(g.proto, played, g.args, g.caller, L_END)
            return call(_lpar(reqs + [ent, tail]))
        return call(_lpar(reqs + [tail]))
    if played is not None:
        return LEnt(g.proto, played, g.args, g.caller, project(g.cont, env, role))
    return project(g.cont, env, role)


def _lpar(items: list[LocalType]) -> LocalType:
    items = [t for t in items if not isinstance(t, LEnd)]
    if not items:
        return L_END
    out = items[-1]
    for t in reversed(items[:-1]):
        out = LPar(t, out)
    return out


def project_all(g: GlobalType, env: ProtocolEnv = EMPTY_PROTOCOLS) -> dict[Role, LocalType]:
    """Project onto every free role of g."""
    return {r: project(g, env, r) for r in sorted(free_roles(g), key=lambda x: x.id)}


def instantiated_projection(entry: ProtocolEntry, actuals: tuple[Name, ...],
                            role: Role, env: ProtocolEnv = EMPTY_PROTOCOLS) -> LocalType:
    """Project a protocol body with actual arguments substituted for formals."""
    if len(actuals) != len(entry.args):
        raise NonProjectableError(
            f"protocol expects {len(entry.args)} arguments, got {len(actuals)}")
    subst = {formal: actual for (formal, _), actual in zip(entry.args, actuals)}
    return project(gsubst_names(entry.body, subst), env, role)
