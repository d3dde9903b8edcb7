"""Environments and the typing judgement Gamma |- P |> Delta.

The checker is algorithmic and syntax-directed: exactly one rule applies
per constructor except choice.  Session-environment splitting for parallel
composition (and for the body/continuation of an optional block) is
computed from the subjects each component uses; when a single endpoint
carries a parallel local type the components are distributed by matching
their head actions, falling back to a bounded enumeration.

Restricted channels get their type by deferred resolution: the first use
of the bound name (an invitation output or a sub-session creation) fixes
the entry, mirroring the back-tracking the declarative rule allows.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

from .printer import print_global, print_local, print_process
from .projection import (
    EMPTY_PROTOCOLS, ProtocolEntry, ProtocolEnv, project,
)
from .syntax import (
    GlobalType, Kind, LChoice, LEnd, LEnt, LGet, LOpt, LPar, LRec, LReq,
    LSend, LVar, LCall, L_END, LocalType, Name, POptEnd, PBranch, PChoice,
    PDecl, PEnd, PEnt, PGet, PIn, POpt, POut, PPar, PRec, PRes, PReq, PSend,
    PVar, Process, Role, fresh_name, free_names, gsubst_names, gtype_alpha_eq,
    ltype_alpha_eq, role_set_eq, substitute, unfold_rec,
)

PLAIN = "plain"
EXTERNAL = "external"
INTERNAL = "internal"


@dataclass(frozen=True, slots=True)
class Endpoint:
    session: Name
    role: Role
    mode: str = PLAIN

    def render(self) -> str:
        if self.mode == EXTERNAL:
            return f"<{self.session.id}>[{self.role.id}]"
        if self.mode == INTERNAL:
            return f"~{self.session.id}[{self.role.id}]"
        return f"{self.session.id}[{self.role.id}]"


class TypeCheckError(Exception):
    def __init__(self, rule: str, location: str, expected: str, found: str):
        super().__init__(f"rule {rule} at {location or '/'}: expected {expected}, found {found}")
        self.rule = rule
        self.location = location
        self.expected = expected
        self.found = found

    def as_dict(self) -> dict:
        return {"rule": self.rule, "location": self.location,
                "expected": self.expected, "found": self.found}


class MergeError(Exception):
    pass


class DuplicateReturnKindsError(MergeError):
    pass


class SplitError(Exception):
    pass


class SplitAmbiguousError(SplitError):
    pass


class SplitImpossibleError(SplitError):
    pass


# ---------------------------------------------------------------------------
# local-type canonical form (types are identified up to parallel
# commutativity/associativity with end as unit of parallel assignments)


def ltype_canon(t: LocalType) -> LocalType:
    match t:
        case LEnd() | LVar(_):
            return t
        case LPar(_, _):
            comps = []
            for c in ltype_components(t):
                comps.append(c)
            comps.sort(key=print_local)
            return _renest(comps)
        case LChoice(l, r):
            a, b = sorted((ltype_canon(l), ltype_canon(r)), key=print_local)
            return LChoice(a, b)
        case LGet(role, branches):
            return LGet(role, tuple(
                type(b)(b.label, b.params, ltype_canon(b.cont)) for b in branches))
        case LSend(role, branches):
            return LSend(role, tuple(
                type(b)(b.label, b.params, ltype_canon(b.cont)) for b in branches))
        case LOpt(parts, body, binder, cont):
            return LOpt(parts, ltype_canon(body), binder, ltype_canon(cont))
        case LCall(proto, g, argv, argb, ext, cont):
            return LCall(proto, g, argv, argb, ext, ltype_canon(cont))
        case LEnt(proto, as_role, args, inviter, cont):
            return LEnt(proto, as_role, args, inviter, ltype_canon(cont))
        case LReq(proto, for_role, args, invitee, cont):
            return LReq(proto, for_role, args, invitee, ltype_canon(cont))
        case LRec(v, body):
            return LRec(v, ltype_canon(body))
    raise TypeError(f"not a local type: {t!r}")


def ltype_components(t: LocalType) -> list[LocalType]:
    """Flattened canonical parallel components; end units dropped."""
    match t:
        case LEnd():
            return []
        case LPar(l, r):
            return ltype_components(l) + ltype_components(r)
        case _:
            c = ltype_canon(t)
            return [] if isinstance(c, LEnd) else [c]


def _renest(comps: list[LocalType]) -> LocalType:
    if not comps:
        return L_END
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = LPar(c, out)
    return out


def ltype_eq(a: LocalType, b: LocalType) -> bool:
    return ltype_canon(a) == ltype_canon(b)


def is_end(t: LocalType) -> bool:
    return isinstance(ltype_canon(t), LEnd)


# ---------------------------------------------------------------------------
# environments


@dataclass(frozen=True)
class SessionEnv:
    assignments: dict = field(default_factory=dict)
    return_kinds: Optional[tuple[Role, tuple[Kind, ...]]] = None

    def add(self, ep: Endpoint, t: LocalType) -> "SessionEnv":
        t = ltype_canon(t)
        if isinstance(t, LEnd):
            return self
        if ep in self.assignments:
            raise MergeError(f"duplicate assignment for {ep.render()}")
        if any(e.session == ep.session and e.role == ep.role for e in self.assignments):
            raise MergeError(f"second assignment for pair {ep.session.id}[{ep.role.id}]")
        return SessionEnv({**self.assignments, ep: t}, self.return_kinds)

    def set(self, ep: Endpoint, t: LocalType) -> "SessionEnv":
        out = dict(self.assignments)
        out.pop(ep, None)
        t = ltype_canon(t)
        if not isinstance(t, LEnd):
            out[ep] = t
        return SessionEnv(out, self.return_kinds)

    def remove(self, ep: Endpoint) -> "SessionEnv":
        out = dict(self.assignments)
        out.pop(ep, None)
        return SessionEnv(out, self.return_kinds)

    def with_return_kinds(self, rk: Optional[tuple[Role, tuple[Kind, ...]]]) -> "SessionEnv":
        return SessionEnv(dict(self.assignments), rk)

    def get(self, ep: Endpoint) -> Optional[LocalType]:
        return self.assignments.get(ep)

    def lookup_pair(self, session: Name, role: Role) -> Optional[tuple[Endpoint, LocalType]]:
        for ep, t in self.assignments.items():
            if ep.session == session and ep.role == role:
                return ep, t
        return None

    @property
    def closed(self) -> bool:
        return self.return_kinds is None

    def is_empty(self) -> bool:
        return not self.assignments and self.return_kinds is None

    def canon_key(self) -> tuple:
        items = sorted(
            ((ep.session.id, ep.role.id, ep.mode, print_local(ltype_canon(t)))
             for ep, t in self.assignments.items()))
        rk = None
        if self.return_kinds is not None:
            r, kinds = self.return_kinds
            rk = (r.id, tuple(repr(k) for k in kinds))
        return (tuple(items), rk)

    def render(self) -> str:
        parts = [f"{ep.render()}: {print_local(t)}"
                 for ep, t in sorted(self.assignments.items(),
                                     key=lambda kv: kv[0].render())]
        if self.return_kinds is not None:
            r, kinds = self.return_kinds
            parts.append(f"{r.id}: OV({', '.join(map(repr, kinds))})")
        return "{" + ", ".join(parts) + "}"


def env_eq(a: SessionEnv, b: SessionEnv) -> bool:
    return a.canon_key() == b.canon_key()


EMPTY_DELTA = SessionEnv()


def merge_env(d1: SessionEnv, d2: SessionEnv) -> SessionEnv:
    """The paper's tensor: unit, commutative, parallel fusion at shared endpoints."""
    if d1.return_kinds is not None and d2.return_kinds is not None:
        raise DuplicateReturnKindsError(
            "both environments carry a return-value declaration")
    assignments = dict(d1.assignments)
    pair_index = {(ep.session, ep.role): ep for ep in assignments}
    for ep, t in d2.assignments.items():
        other = pair_index.get((ep.session, ep.role))
        if other is None:
            assignments[ep] = t
            pair_index[(ep.session, ep.role)] = ep
        elif other.mode == ep.mode:
            assignments[other] = ltype_canon(LPar(assignments[other], t))
        else:
            raise MergeError(
                f"cannot merge {ep.render()} with {other.render()}: modes differ")
    return SessionEnv(assignments, d1.return_kinds or d2.return_kinds)


@dataclass(frozen=True)
class GlobalEnv:
    """Shared channels, protocols, session channels, and value kinds."""

    shared_chans: dict = field(default_factory=dict)   # Name -> (LocalType, Role)
    protocols: dict = field(default_factory=dict)      # Name -> ProtocolEntry
    sessions: dict = field(default_factory=dict)       # Name -> GlobalType
    values: dict = field(default_factory=dict)         # Name -> Kind

    def __post_init__(self):
        ids = [n for n in itertools.chain(
            self.shared_chans, self.protocols, self.sessions, self.values)]
        if len(set(ids)) != len(ids):
            raise MergeError("global environment binds an identifier twice")

    def protocol_env(self) -> ProtocolEnv:
        return ProtocolEnv(dict(self.protocols))


EMPTY_GAMMA = GlobalEnv()


# ---------------------------------------------------------------------------
# conversion from parsed source entries


def gamma_from_entries(entries) -> GlobalEnv:
    shared, protocols, sessions, values = {}, {}, {}, {}
    for e in entries:
        if e.kind == "value":
            values[e.name] = e.value_kind
        elif e.kind == "chan":
            shared[e.name] = (e.chan_type, e.chan_role)
        elif e.kind == "session":
            sessions[e.name] = e.session_type
        elif e.kind == "protocol":
            protocols[e.name] = ProtocolEntry(
                e.proto_internal, e.proto_args, e.proto_external, e.proto_body)
    return GlobalEnv(shared, protocols, sessions, values)


def delta_from_entries(entries) -> SessionEnv:
    out = EMPTY_DELTA
    for e in entries:
        if e.kind == "endpoint":
            out = out.add(Endpoint(e.session, e.role, e.mode), e.local_type)
        else:
            if out.return_kinds is not None:
                raise DuplicateReturnKindsError("two return-value declarations")
            out = out.with_return_kinds((e.role, e.return_kinds))
    return out


# ---------------------------------------------------------------------------
# head variants: resolve internal choice (S2) and unfold recursion on demand


def head_variants(t: LocalType, depth: int = 8) -> Iterator[LocalType]:
    if depth <= 0:
        return
    match t:
        case LChoice(l, r):
            yield from head_variants(l, depth - 1)
            yield from head_variants(r, depth - 1)
        case LRec(v, body):
            yield from head_variants(_lsubst_var(body, v, t), depth - 1)
        case _:
            yield t


def _lsubst_var(t: LocalType, var, rep: LocalType) -> LocalType:
    match t:
        case LVar(v):
            return rep if v == var else t
        case LEnd():
            return t
        case LGet(role, branches):
            return LGet(role, tuple(
                type(b)(b.label, b.params, _lsubst_var(b.cont, var, rep)) for b in branches))
        case LSend(role, branches):
            return LSend(role, tuple(
                type(b)(b.label, b.params, _lsubst_var(b.cont, var, rep)) for b in branches))
        case LOpt(parts, body, binder, cont):
            return LOpt(parts, _lsubst_var(body, var, rep), binder, _lsubst_var(cont, var, rep))
        case LCall(proto, g, argv, argb, ext, cont):
            return LCall(proto, g, argv, argb, ext, _lsubst_var(cont, var, rep))
        case LEnt(proto, as_role, args, inviter, cont):
            return LEnt(proto, as_role, args, inviter, _lsubst_var(cont, var, rep))
        case LReq(proto, for_role, args, invitee, cont):
            return LReq(proto, for_role, args, invitee, _lsubst_var(cont, var, rep))
        case LChoice(l, r):
            return LChoice(_lsubst_var(l, var, rep), _lsubst_var(r, var, rep))
        case LPar(l, r):
            return LPar(_lsubst_var(l, var, rep), _lsubst_var(r, var, rep))
        case LRec(v, body):
            return t if v == var else LRec(v, _lsubst_var(body, var, rep))
    raise TypeError(f"not a local type: {t!r}")


# ---------------------------------------------------------------------------
# subject analysis for environment splitting


ANY_ROLE = None


def _subjects(p: Process, gamma: GlobalEnv, slots: dict) -> tuple[set, set]:
    """(endpoint claims, return-value owner claims) of a process.

    Claims are (session, role, mode) with role possibly ANY_ROLE.  Claims on
    names bound inside p are excluded; return-value claims satisfied by an
    enclosing optional block are excluded.
    """
    claims: set = set()
    rks: set = set()
    _collect_subjects(p, gamma, slots, claims, rks)
    return claims, rks


def _drop_sessions(claims: set, names: set) -> set:
    return {c for c in claims if c[0] not in names}


def _collect_subjects(p: Process, gamma: GlobalEnv, slots, claims: set, rks: set):
    match p:
        case PEnd() | PVar(_):
            return
        case PIn(_, binders, cont):
            sub_c, sub_r = _subjects(cont, gamma, slots)
            claims |= _drop_sessions(sub_c, set(binders))
            rks |= sub_r
        case POut(chan, payload, cont):
            entry = gamma.shared_chans.get(chan)
            if entry is None and chan in slots and slots[chan].chan is not None:
                entry = slots[chan].chan
            role = entry[1] if entry else ANY_ROLE
            for s in payload:
                claims.add((s, role, EXTERNAL))
            _collect_subjects(cont, gamma, slots, claims, rks)
        case PGet(session, _, receiver, branches):
            claims.add((session, receiver, PLAIN))
            for b in branches:
                sub_c, sub_r = _subjects(b.cont, gamma, slots)
                claims |= _drop_sessions(sub_c, set(b.binders))
                rks |= sub_r
        case PSend(session, sender, _, _, _, cont):
            claims.add((session, sender, PLAIN))
            _collect_subjects(cont, gamma, slots, claims, rks)
        case POpt(owner, _, body, binders, _, cont):
            body_c, body_r = _subjects(body, gamma, slots)
            claims |= body_c
            rks |= body_r - {owner}
            _collect_subjects(cont, gamma, slots, claims, rks)
        case POptEnd(owner, _):
            rks.add(owner)
        case PDecl(k, parent, _, _, _, cont):
            claims.add((parent, ANY_ROLE, PLAIN))
            sub_c, sub_r = _subjects(cont, gamma, slots)
            claims |= _drop_sessions(sub_c, {k})
            rks |= sub_r
        case PEnt(session, _, invitee, _, binder, cont):
            claims.add((session, invitee, PLAIN))
            sub_c, sub_r = _subjects(cont, gamma, slots)
            claims |= _drop_sessions(sub_c, {binder})
            rks |= sub_r
        case PReq(session, inviter, _, as_role, sub, cont):
            claims.add((session, inviter, PLAIN))
            claims.add((sub, as_role, INTERNAL))
            _collect_subjects(cont, gamma, slots, claims, rks)
        case PRes(binder, body):
            sub_c, sub_r = _subjects(body, gamma, slots)
            claims |= _drop_sessions(sub_c, {binder})
            rks |= sub_r
        case PChoice(l, r) | PPar(l, r):
            _collect_subjects(l, gamma, slots, claims, rks)
            _collect_subjects(r, gamma, slots, claims, rks)
        case PRec(_, body):
            _collect_subjects(body, gamma, slots, claims, rks)


def _claims_endpoint(claims: set, ep: Endpoint) -> bool:
    for s, r, m in claims:
        if s != ep.session:
            continue
        if m != ep.mode and not (m == PLAIN and r is ANY_ROLE):
            continue
        if r is ANY_ROLE or r == ep.role:
            return True
    return False


def _head_signatures(p: Process, gamma: GlobalEnv, slots, ep: Endpoint) -> list:
    """Signatures of unguarded atoms of p acting on endpoint ep."""
    sigs = []

    def walk(q: Process):
        match q:
            case PPar(l, r) | PChoice(l, r):
                walk(l)
                walk(r)
            case PRes(_, body):
                walk(body)
            case PRec(_, _):
                walk(unfold_rec(q))
            case PSend(session, sender, receiver, label, _, _):
                if session == ep.session and sender == ep.role:
                    sigs.append(("send", receiver, frozenset({label})))
            case PGet(session, sender, receiver, branches):
                if session == ep.session and receiver == ep.role:
                    sigs.append(("get", sender, frozenset(b.label for b in branches)))
            case POpt(owner, parts, body, _, _, _):
                if owner == ep.role:
                    inner = _head_signatures(body, gamma, slots, ep)
                    sigs.append(("opt", frozenset(parts), frozenset(inner)))
                walk(body)
            case PEnt(session, inviter, invitee, as_role, _, _):
                if session == ep.session and invitee == ep.role:
                    sigs.append(("ent", as_role, inviter))
            case PReq(session, inviter, invitee, as_role, _, _):
                if session == ep.session and inviter == ep.role:
                    sigs.append(("req", as_role, invitee))
            case PDecl(_, parent, _, _, _, _):
                if parent == ep.session:
                    sigs.append(("call",))
            case _:
                return

    walk(p)
    return sigs


def _component_signature(t: LocalType) -> Optional[tuple]:
    match t:
        case LSend(role, branches):
            return ("send", role, frozenset(b.label for b in branches))
        case LGet(role, branches):
            return ("get", role, frozenset(b.label for b in branches))
        case LOpt(parts, body, _, _):
            inner = _component_signature(body)
            return ("opt", frozenset(parts), frozenset([inner] if inner else []))
        case LEnt(_, as_role, _, inviter, _):
            return ("ent", as_role, inviter)
        case LReq(_, for_role, _, invitee, _):
            return ("req", for_role, invitee)
        case LCall(_, _, _, _, _, _):
            return ("call",)
        case LRec(_, _) | LChoice(_, _) | LVar(_):
            return None
    return None


def _sig_matches(comp_sig, head_sigs) -> bool:
    if comp_sig is None:
        return False
    if comp_sig[0] == "opt":
        for h in head_sigs:
            if h[0] == "opt" and h[1] == comp_sig[1]:
                if not comp_sig[2] or comp_sig[2] & set(h[2]) or not h[2]:
                    return True
        return False
    return comp_sig in head_sigs


def candidate_splits(p1: Process, p2: Process, delta: SessionEnv,
                     gamma: GlobalEnv, slots: dict,
                     limit: int = 64) -> Iterator[tuple[SessionEnv, SessionEnv]]:
    """Splits of delta for Pa, best usage-directed guess first."""
    c1, rk1 = _subjects(p1, gamma, slots)
    c2, rk2 = _subjects(p2, gamma, slots)
    fixed1: list[tuple[Endpoint, LocalType]] = []
    fixed2: list[tuple[Endpoint, LocalType]] = []
    shared: list[tuple[Endpoint, list[LocalType]]] = []
    for ep, t in delta.assignments.items():
        m1, m2 = _claims_endpoint(c1, ep), _claims_endpoint(c2, ep)
        if m1 and not m2:
            fixed1.append((ep, t))
        elif m2 and not m1:
            fixed2.append((ep, t))
        elif m1 and m2:
            shared.append((ep, ltype_components(t)))
        else:
            # claimed by neither; a non-end assignment cannot be discharged
            return
    rk_sides: list[Optional[int]]
    if delta.return_kinds is None:
        rk_sides = [None]
    else:
        owner = delta.return_kinds[0]
        want1, want2 = owner in rk1, owner in rk2
        if want1 and not want2:
            rk_sides = [1]
        elif want2 and not want1:
            rk_sides = [2]
        else:
            rk_sides = [1, 2]

    def component_orders(ep: Endpoint, comps: list[LocalType]) -> Iterator[tuple]:
        h1 = _head_signatures(p1, gamma, slots, ep)
        h2 = _head_signatures(p2, gamma, slots, ep)
        guess = []
        undecided = []
        for i, comp in enumerate(comps):
            sig = _component_signature(comp)
            in1, in2 = _sig_matches(sig, h1), _sig_matches(sig, h2)
            if in1 and not in2:
                guess.append(1)
            elif in2 and not in1:
                guess.append(2)
            else:
                guess.append(0)
                undecided.append(i)
        options = [guess]
        if undecided:
            for combo in itertools.product((1, 2), repeat=len(undecided)):
                assignment = list(guess)
                for idx, side in zip(undecided, combo):
                    assignment[idx] = side
                options.append(assignment)
        seen = set()
        for assignment in options:
            if 0 in assignment:
                continue
            key = tuple(assignment)
            if key in seen:
                continue
            seen.add(key)
            yield key

    shared_iters = [list(component_orders(ep, comps)) for ep, comps in shared]
    if any(not it for it in shared_iters) and shared:
        return

    count = 0
    for rk_side in rk_sides:
        for combo in itertools.product(*shared_iters) if shared else [()]:
            if count >= limit:
                return
            count += 1
            d1 = SessionEnv()
            d2 = SessionEnv()
            try:
                for ep, t in fixed1:
                    d1 = d1.add(ep, t)
                for ep, t in fixed2:
                    d2 = d2.add(ep, t)
                for (ep, comps), assignment in zip(shared, combo):
                    left = [c for c, side in zip(comps, assignment) if side == 1]
                    right = [c for c, side in zip(comps, assignment) if side == 2]
                    if left:
                        d1 = d1.add(ep, _renest(left))
                    if right:
                        d2 = d2.add(ep, _renest(right))
            except MergeError:
                continue
            if rk_side == 1:
                d1 = d1.with_return_kinds(delta.return_kinds)
            elif rk_side == 2:
                d2 = d2.with_return_kinds(delta.return_kinds)
            yield d1, d2


def split_delta(p1: Process, p2: Process, delta: SessionEnv,
                gamma: GlobalEnv = EMPTY_GAMMA) -> tuple[SessionEnv, SessionEnv]:
    """The unique usage-directed split of delta between p1 and p2.

    Raises SplitAmbiguousError when an assignment is claimed by neither side
    or a shared parallel component cannot be attributed, and
    SplitImpossibleError when both sides need the same non-parallel
    assignment.
    """
    c1, _ = _subjects(p1, gamma, {})
    c2, _ = _subjects(p2, gamma, {})
    for ep, t in delta.assignments.items():
        m1, m2 = _claims_endpoint(c1, ep), _claims_endpoint(c2, ep)
        if not m1 and not m2:
            raise SplitAmbiguousError(
                f"assignment {ep.render()} is used by neither component")
        if m1 and m2 and len(ltype_components(t)) < 2:
            raise SplitImpossibleError(
                f"both components need the non-parallel assignment {ep.render()}")
    gen = candidate_splits(p1, p2, delta, gamma, {}, limit=1)
    for d1, d2 in gen:
        return d1, d2
    raise SplitAmbiguousError("no usage-directed split found")


# ---------------------------------------------------------------------------
# the checker


@dataclass
class _Slot:
    """Type of a restricted channel, resolved at first use."""
    name: Name
    chan: Optional[tuple[LocalType, Role]] = None
    session: Optional[GlobalType] = None


@dataclass
class _Ctx:
    gamma: GlobalEnv
    subsessions: bool
    slots: dict = field(default_factory=dict)
    valkinds: dict = field(default_factory=dict)
    assumed: set = field(default_factory=set)
    path: str = ""

    def sub(self, step: str) -> "_Ctx":
        return replace(self, path=f"{self.path}/{step}")

    def with_valkinds(self, extra: dict) -> "_Ctx":
        return replace(self, valkinds={**self.valkinds, **extra})

    def with_slot(self, slot: _Slot) -> "_Ctx":
        return replace(self, slots={**self.slots, slot.name: slot})


def typecheck(gamma: GlobalEnv, p: Process, delta: SessionEnv,
              subsessions: bool = True) -> None:
    """Check Gamma |- P |> Delta; raise TypeCheckError on failure.

    delta must be closed (no pending return-value declaration) at top level.
    """
    if not delta.closed:
        raise TypeCheckError("env", "", "a closed session environment",
                             "a pending return-value declaration")
    ctx = _Ctx(gamma=gamma, subsessions=subsessions)
    _check(p, delta, ctx)


def typechecks(gamma: GlobalEnv, p: Process, delta: SessionEnv,
               subsessions: bool = True) -> bool:
    try:
        typecheck(gamma, p, delta, subsessions)
        return True
    except TypeCheckError:
        return False


def _kind_of_value(name: Name, ctx: _Ctx) -> Optional[Kind]:
    if name in ctx.valkinds:
        return ctx.valkinds[name]
    return ctx.gamma.values.get(name)


def _check_value_kinds(names, kinds, ctx: _Ctx, rule: str, binding: bool):
    if len(names) != len(kinds):
        raise TypeCheckError(rule, ctx.path, f"{len(kinds)} values", f"{len(names)}")
    for n, k in zip(names, kinds):
        declared = _kind_of_value(n, ctx)
        if declared is None:
            if binding:
                continue
            raise TypeCheckError(rule, ctx.path, f"a value of kind {k}",
                                 f"{n.id} with no declared kind")
        if declared != k:
            raise TypeCheckError(rule, ctx.path, f"{n.id} of kind {k}",
                                 f"kind {declared}")


def _chan_type(chan: Name, ctx: _Ctx) -> Optional[tuple[LocalType, Role]]:
    if chan in ctx.gamma.shared_chans:
        return ctx.gamma.shared_chans[chan]
    slot = ctx.slots.get(chan)
    if slot is not None:
        return slot.chan
    return None


def _fresh_against(base: Name, delta: SessionEnv, ctx: _Ctx, term: Process) -> Name:
    avoid = {ep.session for ep in delta.assignments}
    avoid |= set(ctx.gamma.shared_chans) | set(ctx.gamma.sessions) | set(ctx.slots)
    avoid |= free_names(term)
    return fresh_name(base, avoid)


def _needs_rename(binder: Name, delta: SessionEnv, ctx: _Ctx) -> bool:
    return (any(ep.session == binder for ep in delta.assignments)
            or binder in ctx.gamma.shared_chans or binder in ctx.gamma.sessions
            or binder in ctx.slots)


def _check(p: Process, delta: SessionEnv, ctx: _Ctx) -> None:
    match p:
        case PEnd():
            if not delta.is_empty():
                raise TypeCheckError("N", ctx.path, "an empty session environment",
                                     delta.render())
            return

        case POptEnd(owner, values):
            if delta.assignments or delta.return_kinds is None:
                raise TypeCheckError(
                    "OptE", ctx.path,
                    "exactly the pending return-value declaration", delta.render())
            rk_owner, kinds = delta.return_kinds
            if rk_owner != owner:
                raise TypeCheckError("OptE", ctx.path, f"owner {rk_owner.id}", owner.id)
            _check_value_kinds(values, kinds, ctx, "OptE", binding=False)
            return

        case PIn(chan, binders, cont):
            if len(binders) != 1:
                raise TypeCheckError("I", ctx.path, "a single session binder",
                                     f"{len(binders)} binders")
            entry = _chan_type(chan, ctx)
            if entry is None:
                raise TypeCheckError("I", ctx.path,
                                     f"a typed shared channel {chan.id}",
                                     "an unknown channel")
            t, role = entry
            x = binders[0]
            body = cont
            if _needs_rename(x, delta, ctx):
                nx = _fresh_against(x, delta, ctx, cont)
                body = substitute(cont, {x: nx})
                x = nx
            _check(body, delta.add(Endpoint(x, role, PLAIN), t), ctx.sub("in"))
            return

        case POut(chan, payload, cont):
            if len(payload) != 1:
                raise TypeCheckError("O", ctx.path, "a single session channel",
                                     f"{len(payload)} names")
            s = payload[0]
            found = None
            for ep, t in delta.assignments.items():
                if ep.session == s and ep.mode == EXTERNAL:
                    found = (ep, t)
                    break
            if found is None:
                raise TypeCheckError("O", ctx.path,
                                     f"an external invitation <{s.id}>[r]",
                                     delta.render())
            ep, t = found
            entry = _chan_type(chan, ctx)
            if entry is None:
                slot = ctx.slots.get(chan)
                if slot is None:
                    raise TypeCheckError("O", ctx.path,
                                         f"a typed shared channel {chan.id}",
                                         "an unknown channel")
                slot.chan = (t, ep.role)
            else:
                T, role = entry
                if role != ep.role or not ltype_eq(T, t):
                    raise TypeCheckError(
                        "O", ctx.path,
                        f"invitation for {role.id} with type {print_local(T)}",
                        f"{ep.render()}: {print_local(t)}")
            _check(cont, delta.remove(ep), ctx.sub("out"))
            return

        case PSend(session, sender, receiver, label, payload, cont):
            found = delta.lookup_pair(session, sender)
            if found is None or found[0].mode != PLAIN:
                raise TypeCheckError("S", ctx.path,
                                     f"a session type at {session.id}[{sender.id}]",
                                     delta.render())
            ep, t0 = found
            last: Optional[TypeCheckError] = None
            for t in head_variants(t0):
                if not (isinstance(t, LSend) and t.target == receiver):
                    last = last or TypeCheckError(
                        "S", ctx.path, f"send to {receiver.id}", print_local(t))
                    continue
                branch = next((b for b in t.branches if b.label == label), None)
                if branch is None:
                    last = last or TypeCheckError(
                        "S", ctx.path, f"a branch labelled {label.id}", print_local(t))
                    continue
                try:
                    _check_value_kinds(payload, [k for _, k in branch.params],
                                       ctx, "S", binding=False)
                    _check(cont, delta.set(ep, branch.cont), ctx.sub("send"))
                    return
                except TypeCheckError as e:
                    last = e
            raise last or TypeCheckError("S", ctx.path, "a matching send type",
                                         print_local(t0))

        case PGet(session, sender, receiver, branches):
            found = delta.lookup_pair(session, receiver)
            if found is None or found[0].mode != PLAIN:
                raise TypeCheckError("C", ctx.path,
                                     f"a session type at {session.id}[{receiver.id}]",
                                     delta.render())
            ep, t0 = found
            last = None
            for t in head_variants(t0):
                if not (isinstance(t, LGet) and t.source == sender):
                    last = last or TypeCheckError(
                        "C", ctx.path, f"get from {sender.id}", print_local(t))
                    continue
                if {b.label for b in t.branches} != {b.label for b in branches}:
                    last = last or TypeCheckError(
                        "C", ctx.path, "matching branch labels", print_local(t))
                    continue
                by_label = {b.label: b for b in branches}
                try:
                    for tb in t.branches:
                        pb = by_label[tb.label]
                        kinds = [k for _, k in tb.params]
                        _check_value_kinds(pb.binders, kinds, ctx, "C", binding=True)
                        inner = ctx.with_valkinds(
                            dict(zip(pb.binders, kinds))).sub(f"get.{tb.label.id}")
                        _check(pb.cont, delta.set(ep, tb.cont), inner)
                    return
                except TypeCheckError as e:
                    last = e
            raise last or TypeCheckError("C", ctx.path, "a matching get type",
                                         print_local(t0))

        case POpt(owner, parts, body, binders, defaults, cont):
            candidates = []
            for ep, t0 in delta.assignments.items():
                if ep.role != owner or ep.mode != PLAIN:
                    continue
                for t in head_variants(t0):
                    if isinstance(t, LOpt) and role_set_eq(t.participants, parts):
                        candidates.append((ep, t))
            if not candidates:
                raise TypeCheckError(
                    "Opt", ctx.path,
                    f"an optional-block type for owner {owner.id} with participants "
                    f"{{{', '.join(r.id for r in parts)}}}",
                    delta.render())
            last = None
            for ep, t in candidates:
                kinds = [k for _, k in t.binder]
                try:
                    _check_value_kinds(binders, kinds, ctx, "Opt", binding=True)
                    _check_value_kinds(defaults, kinds, ctx, "Opt", binding=False)
                except TypeCheckError as e:
                    last = e
                    continue
                rest = delta.remove(ep)
                for d_body, d_cont in _opt_splits(body, cont, rest, ctx):
                    if d_body.return_kinds is not None:
                        continue  # nested blocks cannot pass through return values
                    body_env = d_body.add(ep, t.body).with_return_kinds(
                        (owner, tuple(kinds)))
                    cont_env = d_cont.add(ep, t.cont)
                    cbinders, ccont = binders, cont
                    renames = {}
                    for b in binders:
                        if _needs_rename(b, cont_env, ctx):
                            renames[b] = _fresh_against(b, cont_env, ctx, cont)
                    if renames:
                        ccont = substitute(cont, renames)
                        cbinders = tuple(renames.get(b, b) for b in binders)
                    try:
                        _check(body, body_env, ctx.sub("opt.body"))
                        _check(ccont, cont_env,
                               ctx.with_valkinds(dict(zip(cbinders, kinds))).sub("opt.cont"))
                        return
                    except TypeCheckError as e:
                        last = e
            raise last or TypeCheckError("Opt", ctx.path,
                                         "a derivable optional block", delta.render())

        case PPar(left, right):
            last = None
            found_split = False
            for d1, d2 in candidate_splits(left, right, delta, ctx.gamma, ctx.slots):
                found_split = True
                try:
                    _check(left, d1, ctx.sub("par.l"))
                    _check(right, d2, ctx.sub("par.r"))
                    return
                except TypeCheckError as e:
                    last = e
            if last is not None:
                raise last
            if not found_split:
                raise TypeCheckError("Pa", ctx.path,
                                     "a session environment split matching both sides",
                                     delta.render())
            return

        case PChoice(left, right):
            last = None
            for ep, t0 in delta.assignments.items():
                base = t0
                if isinstance(base, LRec):
                    base = next(head_variants(base))
                if not isinstance(base, LChoice):
                    continue
                for t1, t2 in ((base.left, base.right), (base.right, base.left)):
                    try:
                        _check(left, delta.set(ep, t1), ctx.sub("choice.l"))
                        _check(right, delta.set(ep, t2), ctx.sub("choice.r"))
                        return
                    except TypeCheckError as e:
                        last = e
            raise last or TypeCheckError("S1", ctx.path,
                                         "an internal-choice session type",
                                         delta.render())

        case PRes(binder, body):
            x, b = binder, body
            if _needs_rename(x, delta, ctx):
                nx = _fresh_against(x, delta, ctx, body)
                b = substitute(body, {x: nx})
                x = nx
            _check(b, delta, ctx.with_slot(_Slot(x)).sub("res"))
            return

        case PDecl(_, _, _, _, _, _):
            _check_decl(p, delta, ctx)
            return

        case PEnt(session, inviter, invitee, as_role, binder, cont):
            if not ctx.subsessions:
                raise TypeCheckError("J", ctx.path, "no sub-session primitives",
                                     "ent (plain system)")
            found = delta.lookup_pair(session, invitee)
            if found is None or found[0].mode != PLAIN:
                raise TypeCheckError("J", ctx.path,
                                     f"a session type at {session.id}[{invitee.id}]",
                                     delta.render())
            ep, t0 = found
            last = None
            for t in head_variants(t0):
                if not (isinstance(t, LEnt) and t.as_role == as_role
                        and t.inviter == inviter):
                    last = last or TypeCheckError(
                        "J", ctx.path,
                        f"ent as {as_role.id} from {inviter.id}", print_local(t))
                    continue
                proto = ctx.gamma.protocols.get(t.proto)
                if proto is None:
                    raise TypeCheckError("J", ctx.path,
                                         f"protocol {t.proto.id} in the global environment",
                                         "no declaration")
                t3 = _instantiated_proj(proto, t.args, as_role, ctx, "J")
                x, body = binder, cont
                if _needs_rename(x, delta, ctx):
                    nx = _fresh_against(x, delta, ctx, cont)
                    body = substitute(cont, {x: nx})
                    x = nx
                try:
                    env = delta.set(ep, t.cont).add(Endpoint(x, as_role, PLAIN), t3)
                    _check(body, env, ctx.sub("ent"))
                    return
                except TypeCheckError as e:
                    last = e
            raise last or TypeCheckError("J", ctx.path, "a matching ent type",
                                         print_local(t0))

        case PReq(session, inviter, invitee, as_role, sub, cont):
            if not ctx.subsessions:
                raise TypeCheckError("P", ctx.path, "no sub-session primitives",
                                     "req (plain system)")
            found = delta.lookup_pair(session, inviter)
            if found is None or found[0].mode != PLAIN:
                raise TypeCheckError("P", ctx.path,
                                     f"a session type at {session.id}[{inviter.id}]",
                                     delta.render())
            ep, t0 = found
            last = None
            for t in head_variants(t0):
                if not (isinstance(t, LReq) and t.for_role == as_role
                        and t.invitee == invitee):
                    last = last or TypeCheckError(
                        "P", ctx.path,
                        f"req for {as_role.id} to {invitee.id}", print_local(t))
                    continue
                proto = ctx.gamma.protocols.get(t.proto)
                if proto is None:
                    raise TypeCheckError("P", ctx.path,
                                         f"protocol {t.proto.id} in the global environment",
                                         "no declaration")
                inv = delta.lookup_pair(sub, as_role)
                if inv is None or inv[0].mode != INTERNAL:
                    last = last or TypeCheckError(
                        "P", ctx.path,
                        f"an internal invitation ~{sub.id}[{as_role.id}]",
                        delta.render())
                    continue
                inv_ep, t3 = inv
                expected = _instantiated_proj(proto, t.args, as_role, ctx, "P")
                if not ltype_eq(expected, t3):
                    last = last or TypeCheckError(
                        "P", ctx.path, print_local(expected), print_local(t3))
                    continue
                try:
                    _check(cont, delta.set(ep, t.cont).remove(inv_ep), ctx.sub("req"))
                    return
                except TypeCheckError as e:
                    last = e
            raise last or TypeCheckError("P", ctx.path, "a matching req type",
                                         print_local(t0))

        case PRec(_, _):
            key = (print_process(p), delta.canon_key())
            if key in ctx.assumed:
                return
            ctx.assumed.add(key)
            _check(unfold_rec(p), delta, ctx.sub("rec"))
            return

        case PVar(v):
            raise TypeCheckError("rec", ctx.path, "a guarded process variable", v.id)

    raise TypeCheckError("?", ctx.path, "a typable construct", print_process(p))


def _opt_splits(body: Process, cont: Process, rest: SessionEnv,
                ctx: _Ctx) -> Iterator[tuple[SessionEnv, SessionEnv]]:
    if rest.is_empty():
        yield rest, rest
        return
    yield from candidate_splits(body, cont, rest, ctx.gamma, ctx.slots)


def _instantiated_proj(entry: ProtocolEntry, actuals, role: Role, ctx: _Ctx,
                       rule: str) -> LocalType:
    if len(actuals) != len(entry.args):
        raise TypeCheckError(rule, ctx.path,
                             f"{len(entry.args)} protocol arguments",
                             f"{len(actuals)}")
    subst = {formal: actual for (formal, _), actual in zip(entry.args, actuals)}
    return project(gsubst_names(entry.body, subst), EMPTY_PROTOCOLS, role)


def _check_decl(p: PDecl, delta: SessionEnv, ctx: _Ctx) -> None:
    if not ctx.subsessions:
        raise TypeCheckError("New", ctx.path, "no sub-session primitives",
                             "sub-session creation (plain system)")
    k, parent = p.new_session, p.parent
    last = None
    for ep, t0 in delta.assignments.items():
        if ep.session != parent or ep.mode != PLAIN:
            continue
        for t in head_variants(t0):
            if not isinstance(t, LCall):
                continue
            proto = ctx.gamma.protocols.get(t.proto)
            if proto is None:
                raise TypeCheckError("New", ctx.path,
                                     f"protocol {t.proto.id} in the global environment",
                                     "no declaration")
            try:
                if t.arg_vals != p.args:
                    raise TypeCheckError("New", ctx.path,
                                         f"arguments {[a.id for a in t.arg_vals]}",
                                         f"{[a.id for a in p.args]}")
                if t.external_roles != p.external_roles:
                    raise TypeCheckError("New", ctx.path,
                                         "matching external roles",
                                         f"{[r.id for r in p.external_roles]}")
                if not gtype_alpha_eq(t.body, proto.body):
                    raise TypeCheckError("New", ctx.path,
                                         "the declared protocol body",
                                         print_global(t.body))
                if t.arg_binders != proto.args:
                    raise TypeCheckError("New", ctx.path,
                                         "the declared protocol parameters",
                                         "mismatching call type")
                _check_value_kinds(p.args, [kk for _, kk in proto.args], ctx,
                                   "New", binding=False)
                inst = gsubst_names(
                    proto.body,
                    {formal: actual for (formal, _), actual in zip(proto.args, p.args)})
                declared = ctx.gamma.sessions.get(k)
                if declared is None and k in ctx.slots:
                    slot = ctx.slots[k]
                    if slot.session is None:
                        slot.session = inst
                    declared = slot.session
                if declared is None:
                    raise TypeCheckError("New", ctx.path,
                                         f"a global type for session {k.id}",
                                         "no declaration")
                if not gtype_alpha_eq(declared, inst):
                    raise TypeCheckError("New", ctx.path,
                                         print_global(inst), print_global(declared))
                env = delta.set(ep, t.cont)
                for r in proto.internal_roles:
                    env = env.add(Endpoint(k, r, INTERNAL),
                                  project(inst, EMPTY_PROTOCOLS, r))
                for i, r in enumerate(t.external_roles):
                    texp = project(inst, EMPTY_PROTOCOLS, r)
                    chan = p.invitation_chans[i]
                    centry = _chan_type(chan, ctx)
                    if centry is None:
                        slot = ctx.slots.get(chan)
                        if slot is None:
                            raise TypeCheckError("New", ctx.path,
                                                 f"a typed invitation channel {chan.id}",
                                                 "an unknown channel")
                        slot.chan = (texp, r)
                    else:
                        ct, cr = centry
                        if cr != r or not ltype_eq(ct, texp):
                            raise TypeCheckError("New", ctx.path,
                                                 f"invitation channel for {r.id}",
                                                 f"{chan.id} typed for {cr.id}")
                    env = env.add(Endpoint(k, r, EXTERNAL), texp)
                _check(p.cont, env, ctx.sub("new"))
                return
            except TypeCheckError as e:
                last = e
    raise last or TypeCheckError("New", ctx.path,
                                 f"a call type on session {parent.id}",
                                 delta.render())


# ---------------------------------------------------------------------------
# initial environments from a global type


def build_initial_env(g: GlobalType, roles: list[Role],
                      invitation_chans: list[Name],
                      session: Name = Name("s"),
                      values: Optional[dict] = None) -> tuple[GlobalEnv, SessionEnv]:
    """Gamma and Delta for a system started over shared invitation channels.

    Gamma maps each channel to the projection of g onto its role, the
    session channel to g, and carries the protocol declarations g opens
    with; Delta holds one external-invitation endpoint per role.
    """
    from .syntax import GDecl

    if len(roles) != len(invitation_chans):
        raise ValueError("one invitation channel per role")
    protocols = {}
    peel = g
    while isinstance(peel, GDecl):
        protocols[peel.proto] = ProtocolEntry(
            peel.internal_roles, peel.args, peel.external_roles, peel.body)
        peel = peel.cont
    shared = {}
    delta = EMPTY_DELTA
    for chan, role in zip(invitation_chans, roles):
        t = project(g, EMPTY_PROTOCOLS, role)
        shared[chan] = (t, role)
        delta = delta.add(Endpoint(session, role, EXTERNAL), t)
    gamma = GlobalEnv(shared, protocols, {session: g}, dict(values or {}))
    return gamma, delta
