"""Session-environment reduction and the coherence predicates.

Environments evolve alongside process reductions: paired send/get types
communicate, external invitations are lifted to plain endpoints, call
types expand into open invitations, and optional-block types step inside
(one block), communicate pairwise (two blocks), drop to their continuation
on failure, or complete once the body is exhausted.

Coherence is checked by reverse projection: a session environment is
coherent when it is exactly a tuple of projections of well-formed global
types with no open invitations.  With provenance (the generating global
types) the check is exact; otherwise a bounded structural reconstruction
is attempted for communication, optional-block, and end forms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .printer import print_local
from .projection import EMPTY_PROTOCOLS, project
from .reduction import RedexStep
from .syntax import (
    GlobalType, LCall, LChoice, LEnd, LEnt, LGet, LOpt, LPar, LRec, LReq,
    LSend, LVar, LocalType, Name, Role, free_roles, gsubst_names,
    role_set_eq,
)
from .typecheck import (
    EXTERNAL, INTERNAL, PLAIN, Endpoint, GlobalEnv, SessionEnv, TypeCheckError,
    ltype_canon, ltype_components, _renest, typecheck,
)


class NoMatchingEnvStepError(Exception):
    pass


class SearchBudgetExceededError(Exception):
    pass


@dataclass(frozen=True)
class EnvStep:
    rule: str
    result: SessionEnv
    info: tuple[tuple[str, object], ...] = ()

    def info_dict(self) -> dict:
        return dict(self.info)

    def render(self) -> str:
        return f"({self.rule}) -> {self.result.render()}"


# ---------------------------------------------------------------------------
# atom view: every assignment split into parallel components


@dataclass(frozen=True)
class _Atom:
    uid: int
    ep: Endpoint
    comp: LocalType


def _atoms_of(d: SessionEnv, counter: Optional[itertools.count] = None) -> list[_Atom]:
    counter = counter or itertools.count()
    out = []
    for ep, t in sorted(d.assignments.items(), key=lambda kv: kv[0].render()):
        if ep.mode == PLAIN:
            for comp in ltype_components(t):
                out.append(_Atom(next(counter), ep, comp))
        else:
            # invitations are consumed wholesale, never split
            out.append(_Atom(next(counter), ep, ltype_canon(t)))
    return out


def _env_of(atoms: list[_Atom], rk) -> SessionEnv:
    grouped: dict[Endpoint, list[LocalType]] = {}
    for a in atoms:
        grouped.setdefault(a.ep, []).append(a.comp)
    env = SessionEnv()
    for ep, comps in grouped.items():
        comps = [c for c in comps if not isinstance(ltype_canon(c), LEnd)]
        if comps:
            env = env.add(ep, _renest(comps))
    return env.with_return_kinds(rk)


@dataclass(frozen=True)
class _AtomStep:
    rule: str
    removed: frozenset[int]
    added: tuple[_Atom, ...]
    modified: tuple[tuple[int, LocalType], ...]
    info: tuple[tuple[str, object], ...] = ()

    def touched(self) -> frozenset:
        return self.removed | frozenset(uid for uid, _ in self.modified)

    def apply(self, atoms: list[_Atom]) -> list[_Atom]:
        mods = dict(self.modified)
        out = []
        for a in atoms:
            if a.uid in self.removed:
                continue
            if a.uid in mods:
                c = ltype_canon(mods[a.uid])
                if isinstance(c, LEnd):
                    continue
                out.append(_Atom(a.uid, a.ep, c))
            else:
                out.append(a)
        out.extend(a for a in self.added
                   if not isinstance(ltype_canon(a.comp), LEnd))
        return out


def _branch_sorts(branches) -> dict:
    return {b.label: tuple(k for _, k in b.params) for b in branches}


def _atom_steps(atoms: list[_Atom], counter: itertools.count,
                fresh_session: Iterator[Name]) -> Iterator[_AtomStep]:
    # comS': dual send/get components on one session channel
    for a in atoms:
        if not isinstance(a.comp, LSend) or a.ep.mode != PLAIN:
            continue
        for b in atoms:
            if (b.ep.mode != PLAIN or b.ep.session != a.ep.session
                    or b.ep.role != a.comp.target
                    or not isinstance(b.comp, LGet)
                    or b.comp.source != a.ep.role):
                continue
            if _branch_sorts(a.comp.branches) != _branch_sorts(b.comp.branches):
                continue
            getb = {x.label: x for x in b.comp.branches}
            for br in a.comp.branches:
                yield _AtomStep(
                    "comS'", frozenset(), (),
                    ((a.uid, br.cont), (b.uid, getb[br.label].cont)),
                    (("session", a.ep.session.id), ("from", a.ep.role.id),
                     ("to", b.ep.role.id), ("label", br.label.id)))
    for a in atoms:
        # comC': lift an external invitation
        if a.ep.mode == EXTERNAL:
            yield _AtomStep(
                "comC'", frozenset({a.uid}),
                (_Atom(next(counter), Endpoint(a.ep.session, a.ep.role, PLAIN),
                       a.comp),),
                (),
                (("session", a.ep.session.id), ("role", a.ep.role.id)))
        if a.ep.mode != PLAIN:
            continue
        match a.comp:
            case LOpt(parts, body, binder, cont):
                yield _AtomStep(
                    "fail'", frozenset(), (), ((a.uid, cont),),
                    (("owner", a.ep.role.id),
                     ("roles", tuple(sorted(r.id for r in parts))),
                     ("binders", len(binder))))
                if isinstance(ltype_canon(body), LEnd):
                    yield _AtomStep(
                        "succ'", frozenset(), (), ((a.uid, cont),),
                        (("owner", a.ep.role.id),
                         ("roles", tuple(sorted(r.id for r in parts))),
                         ("binders", len(binder))))
                # opt'/optCom: steps inside the block interior(s)
                yield from _opt_wrapped(a, atoms, counter, fresh_session)
            case LCall(proto, g, argv, argb, ext, cont):
                inst = gsubst_names(
                    g, {formal: actual for (formal, _), actual in zip(argb, argv)})
                k = next(fresh_session)
                internal = sorted(free_roles(inst) - set(ext), key=lambda r: r.id)
                added = [_Atom(next(counter), Endpoint(k, r, INTERNAL),
                               project(inst, EMPTY_PROTOCOLS, r))
                         for r in internal]
                added += [_Atom(next(counter), Endpoint(k, r, EXTERNAL),
                                project(inst, EMPTY_PROTOCOLS, r))
                          for r in ext]
                yield _AtomStep(
                    "subs'", frozenset(), tuple(added), ((a.uid, cont),),
                    (("session", a.ep.session.id), ("proto", proto.id),
                     ("fresh", k.id)))
            case LChoice(left, right):
                for side, tag in ((left, "l"), (right, "r")):
                    inner_atoms = [x if x.uid != a.uid else _Atom(a.uid, a.ep, side)
                                   for x in atoms]
                    for st in _atom_steps(inner_atoms, counter, fresh_session):
                        if a.uid in st.touched():
                            yield _AtomStep(
                                "choice'", st.removed, st.added,
                                st.modified + (
                                    () if a.uid in dict(st.modified) or a.uid in st.removed
                                    else ((a.uid, side),)),
                                (("picked", tag),) + st.info)
            case LRec(_, _):
                unfolded = next(iter(_head_unfold(a.comp)))
                inner_atoms = [x if x.uid != a.uid else _Atom(a.uid, a.ep, unfolded)
                               for x in atoms]
                for st in _atom_steps(inner_atoms, counter, fresh_session):
                    if a.uid in st.touched():
                        yield st
    # join': a req component, a matching ent component, an internal invitation
    for a in atoms:
        if not (a.ep.mode == PLAIN and isinstance(a.comp, LReq)):
            continue
        for b in atoms:
            if not (b.ep.mode == PLAIN and isinstance(b.comp, LEnt)):
                continue
            if (a.ep.session != b.ep.session or a.comp.invitee != b.ep.role
                    or b.comp.inviter != a.ep.role
                    or a.comp.proto != b.comp.proto
                    or a.comp.for_role != b.comp.as_role):
                continue
            for inv in atoms:
                if (inv.ep.mode == INTERNAL and inv.ep.role == a.comp.for_role):
                    yield _AtomStep(
                        "join'", frozenset({inv.uid}),
                        (_Atom(next(counter),
                               Endpoint(inv.ep.session, inv.ep.role, PLAIN),
                               inv.comp),),
                        ((a.uid, a.comp.cont), (b.uid, b.comp.cont)),
                        (("session", a.ep.session.id),
                         ("inviter", a.ep.role.id), ("invitee", b.ep.role.id),
                         ("as", a.comp.for_role.id),
                         ("sub", inv.ep.session.id)))


def _head_unfold(t: LRec) -> Iterator[LocalType]:
    from .typecheck import _lsubst_var
    yield _lsubst_var(t.body, t.var, t)


def _opt_wrapped(a: _Atom, atoms: list[_Atom], counter: itertools.count,
                 fresh_session: Iterator[Name]) -> Iterator[_AtomStep]:
    opt: LOpt = a.comp
    body_atoms = [_Atom(next(counter), a.ep, c)
                  for c in ltype_components(opt.body)]
    if not body_atoms:
        return
    body_ids = frozenset(x.uid for x in body_atoms)
    inner = [x for x in atoms if x.uid != a.uid] + body_atoms
    for st in _atom_steps(inner, counter, fresh_session):
        if not (st.touched() & body_ids):
            continue
        mods = dict(st.modified)
        new_body = []
        for x in body_atoms:
            if x.uid in st.removed:
                continue
            new_body.append(mods.get(x.uid, x.comp))
        new_body = [c for c in new_body if not isinstance(ltype_canon(c), LEnd)]
        wrapped = LOpt(opt.participants, _renest(new_body), opt.binder, opt.cont)
        outer_removed = st.removed - body_ids
        outer_mods = tuple((uid, t) for uid, t in st.modified if uid not in body_ids)
        rule = "optCom" if st.rule in ("opt'", "optCom") else "opt'"
        yield _AtomStep(
            rule, outer_removed, st.added,
            outer_mods + ((a.uid, wrapped),),
            (("inner", st.rule),) + st.info)


def env_steps(d: SessionEnv) -> list[EnvStep]:
    """All single-rule session-environment reductions of d."""
    counter = itertools.count()
    atoms = _atoms_of(d, counter)
    fresh = (Name(f"k%{i}") for i in itertools.count())
    out = []
    seen = set()
    for st in _atom_steps(atoms, counter, fresh):
        env = _env_of(st.apply(atoms), d.return_kinds)
        key = (st.rule, env.canon_key(), st.info)
        if key in seen:
            continue
        seen.add(key)
        out.append(EnvStep(st.rule, env, st.info))
    return sorted(out, key=lambda s: (s.rule, s.info))


# ---------------------------------------------------------------------------
# the environment step matching a process step (subject reduction)


_RULE_MAP = {
    "comS": {"comS'"},
    "cSO": {"comS'"},
    "comC": {"comC'"},
    "cCO": {"comC'"},
    "subs": {"subs'"},
    "join": {"join'"},
    "jO": {"join'"},
    "fail": {"fail'"},
    "succ": {"succ'", "fail'"},
    "choice": {"choice'"},
}


def _base_rule(es: EnvStep) -> str:
    """The innermost rule of an (opt'/optCom-)wrapped environment step."""
    base = es.rule
    for key, value in es.info:
        if key == "inner" and base in ("opt'", "optCom"):
            base = value
    return base


def _rename_session(env: SessionEnv, old: Name, new: Name) -> SessionEnv:
    out = SessionEnv()
    for ep, t in env.assignments.items():
        s = new if ep.session == old else ep.session
        out = out.add(Endpoint(s, ep.role, ep.mode), t)
    return out.with_return_kinds(env.return_kinds)


def matching_env(gamma: GlobalEnv, p, delta: SessionEnv,
                 step: RedexStep) -> EnvStep:
    """The environment step corresponding to one process step.

    Candidates are the environment steps whose (inner) rule mirrors the
    process rule; the returned one is verified by re-checking the reduct,
    so a NoMatchingEnvStepError signals a subject-reduction violation.
    """
    allowed = _RULE_MAP.get(step.rule)
    if allowed is None:
        raise NoMatchingEnvStepError(f"unknown process rule {step.rule}")
    info = step.info_dict()
    candidates = [es for es in env_steps(delta)
                  if es.rule in allowed or _base_rule(es) in allowed]
    ordered = sorted(candidates, key=lambda es: _affinity(es, info), reverse=True)
    from .typecheck import MergeError
    for es in ordered:
        env = es.result
        if step.rule == "subs":
            fresh = es.info_dict().get("fresh")
            if fresh is not None and "session" in info:
                try:
                    env = _rename_session(env, Name(fresh), Name(info["session"]))
                except MergeError:
                    continue
                es = EnvStep(es.rule, env, es.info)
        try:
            typecheck(gamma, step.result, env)
            return es
        except TypeCheckError:
            continue
    raise NoMatchingEnvStepError(
        f"no environment step matches process step {step.render()} "
        f"from {delta.render()}")


def _affinity(es: EnvStep, info: dict) -> int:
    """Heuristic ordering: prefer candidates sharing metadata with the
    process step."""
    ei = es.info_dict()
    score = 0
    for key in ("session", "from", "to", "label", "owner", "inviter",
                "invitee", "as", "roles", "binders"):
        if key in info and ei.get(key) == info[key]:
            score += 1
    return score


# ---------------------------------------------------------------------------
# coherence


@dataclass
class CoherenceVerdict:
    level: str  # coherent | initiallyCoherent | weaklyCoherent | incoherent
    witnesses: list[str] = field(default_factory=list)

    def render(self) -> str:
        out = self.level
        if self.witnesses:
            out += "\n" + "\n".join(f"  - {w}" for w in self.witnesses)
        return out


def _session_groups(d: SessionEnv) -> dict[Name, dict[Role, LocalType]]:
    groups: dict[Name, dict[Role, LocalType]] = {}
    for ep, t in d.assignments.items():
        groups.setdefault(ep.session, {})[ep.role] = ltype_canon(t)
    return groups


def _is_coherent(d: SessionEnv, provenance: Optional[dict] = None,
                 budget: int = 4096) -> tuple[bool, list[str]]:
    witnesses = []
    if d.return_kinds is not None:
        witnesses.append("pending return-value declaration")
    invites = [ep.render() for ep in d.assignments if ep.mode != PLAIN]
    witnesses.extend(f"open invitation {x}" for x in invites)
    if witnesses:
        return False, witnesses
    for session, group in _session_groups(d).items():
        if provenance and session in provenance:
            g = provenance[session]
            expected = {}
            for r in sorted(free_roles(g), key=lambda x: x.id):
                t = ltype_canon(project(g, EMPTY_PROTOCOLS, r))
                if not isinstance(t, LEnd):
                    expected[r] = t
            if group == expected:
                continue
        counter = [budget]
        memo: dict = {}
        if not _reconstructible(group, counter, memo):
            if counter[0] <= 0:
                raise SearchBudgetExceededError(
                    f"reconstruction budget exhausted for session {session.id}")
            witnesses.append(
                f"session {session.id} is not a tuple of projections: "
                + ", ".join(f"{r.id}: {print_local(t)[:60]}"
                            for r, t in sorted(group.items(), key=lambda kv: kv[0].id)))
    return not witnesses, witnesses


def _group_key(group: dict[Role, LocalType]) -> tuple:
    return tuple(sorted((r.id, print_local(t)) for r, t in group.items()))


def _reconstructible(group: dict[Role, LocalType], counter: list[int],
                     memo: dict) -> bool:
    """Can this per-session group be obtained by projecting one global type?

    Bounded reverse projection over end, single communications, and
    optional blocks; parallel structure is handled через the component
    shapes the projection rules emit.
    """
    group = {r: ltype_canon(t) for r, t in group.items()
             if not isinstance(ltype_canon(t), LEnd)}
    if not group:
        return True
    key = _group_key(group)
    if key in memo:
        return memo[key]
    if counter[0] <= 0:
        return False
    counter[0] -= 1
    memo[key] = False
    result = False
    # communication head
    for r1, t1 in group.items():
        if not isinstance(t1, LSend):
            continue
        r2 = t1.target
        t2 = group.get(r2)
        if not (isinstance(t2, LGet) and t2.source == r1):
            continue
        if _branch_sorts(t1.branches) != _branch_sorts(t2.branches):
            continue
        getb = {b.label: b for b in t2.branches}
        ok = True
        for br in t1.branches:
            g2 = dict(group)
            g2[r1] = br.cont
            g2[r2] = getb[br.label].cont
            if not _reconstructible(g2, counter, memo):
                ok = False
                break
        if ok:
            result = True
            break
    # optional-block head
    if not result:
        result = _opt_head(group, counter, memo)
    memo[key] = result
    return result


def _opt_peelings(t: LocalType, roles: tuple[Role, ...]):
    """Ways to read t as 'participant of an optional block on roles':
    (body, cont) for the sequential shape, the parallel shape, and the
    bare-block shape."""
    if isinstance(t, LOpt) and role_set_eq(t.participants, roles):
        yield t.body, t.cont
    if isinstance(t, LPar):
        comps = ltype_components(t)
        for i, c in enumerate(comps):
            if (isinstance(c, LOpt) and role_set_eq(c.participants, roles)
                    and not c.binder and isinstance(ltype_canon(c.cont), LEnd)):
                rest = comps[:i] + comps[i + 1:]
                yield c.body, _renest(rest)


def _opt_head(group: dict[Role, LocalType], counter: list[int], memo: dict) -> bool:
    rolesets = set()
    for t in group.values():
        for c in ltype_components(t) or [t]:
            if isinstance(c, LOpt):
                rolesets.add(tuple(sorted(c.participants, key=lambda r: r.id)))
    for roles in rolesets:
        missing = [r for r in roles if r not in group]
        if missing:
            continue
        peelings = {r: list(_opt_peelings(group[r], roles)) for r in roles}
        if any(not p for p in peelings.values()):
            continue
        for combo in itertools.product(*(peelings[r] for r in roles)):
            bodies = {r: bc[0] for r, bc in zip(roles, combo)}
            conts = dict(group)
            for r, bc in zip(roles, combo):
                conts[r] = bc[1]
            if _reconstructible(bodies, counter, memo) and \
                    _reconstructible(conts, counter, memo):
                return True
    return False


def _opt_counterparts_ok(d: SessionEnv) -> list[str]:
    """Every optional-block occurrence needs matching occurrences for every
    other participant: occurrence counts per (session, role set) must agree
    across the block roles present in the environment."""
    counts: dict[tuple[Name, tuple[str, ...]], dict[Role, int]] = {}

    def count(t: LocalType, session: Name, role: Role):
        match t:
            case LOpt(parts, body, _, cont):
                key = (session, tuple(sorted(r.id for r in parts)))
                counts.setdefault(key, {}).setdefault(role, 0)
                counts[key][role] += 1
                count(body, session, role)
                count(cont, session, role)
            case LSend(_, branches) | LGet(_, branches):
                for b in branches:
                    count(b.cont, session, role)
            case LPar(l, r) | LChoice(l, r):
                count(l, session, role)
                count(r, session, role)
            case LCall(_, _, _, _, _, cont) | LEnt(_, _, _, _, cont) | \
                    LReq(_, _, _, _, cont):
                count(cont, session, role)
            case LRec(_, body):
                count(body, session, role)
            case _:
                pass

    for ep, t in d.assignments.items():
        count(ltype_canon(t), ep.session, ep.role)
    problems = []
    for (session, roles), per_role in counts.items():
        present = {r.id for r in per_role}
        tallies = {per_role[r] for r in per_role}
        expected = set(roles) & {ep.role.id for ep in d.assignments
                                 if ep.session == session}
        if len(tallies) > 1 or (expected - present):
            problems.append(
                f"unmatched optional blocks on {session.id} for roles "
                f"{{{', '.join(roles)}}}: "
                + ", ".join(f"{r.id}={per_role[r]}" for r in sorted(per_role, key=lambda x: x.id)))
    return problems


def classify_coherence(d: SessionEnv, provenance: Optional[dict] = None,
                       search_budget: Optional[int] = None) -> CoherenceVerdict:
    """coherent / initiallyCoherent / weaklyCoherent / incoherent.

    provenance maps session channels to the global types they were built
    from, making the coherence check exact for those sessions.  The weak-
    coherence search explores the environment-reduction closure up to
    search_budget steps deep (default: number of assignments + 16).
    """
    ok, witnesses = _is_coherent(d, provenance)
    if ok:
        return CoherenceVerdict("coherent")
    budget = search_budget if search_budget is not None else len(d.assignments) + 16
    weak, frontier_exhausted = _search_coherent(d, provenance, budget)
    if not weak:
        if frontier_exhausted:
            return CoherenceVerdict("incoherent", witnesses)
        raise SearchBudgetExceededError(
            "weak-coherence search inconclusive within budget")
    internal = [ep.render() for ep in d.assignments if ep.mode == INTERNAL]
    counterpart_problems = _opt_counterparts_ok(d)
    if not internal and not counterpart_problems:
        return CoherenceVerdict("initiallyCoherent", witnesses)
    return CoherenceVerdict(
        "weaklyCoherent",
        witnesses + [f"open internal invitation {x}" for x in internal]
        + counterpart_problems)


def _search_coherent(d: SessionEnv, provenance: Optional[dict],
                     depth_budget: int) -> tuple[bool, bool]:
    """(found a coherent successor, search space exhausted)."""
    seen = {d.canon_key()}
    frontier = [(d, 0)]
    exhausted = True
    while frontier:
        env, depth = frontier.pop()
        try:
            ok, _ = _is_coherent(env, provenance)
        except SearchBudgetExceededError:
            ok = False
        if ok:
            return True, True
        if depth >= depth_budget:
            exhausted = False
            continue
        for es in env_steps(env):
            key = es.result.canon_key()
            if key not in seen:
                seen.add(key)
                frontier.append((es.result, depth + 1))
    return False, exhausted


def env_potential(d: SessionEnv) -> int:
    """Strictly decreasing along environment reductions (except recursion
    unfolding): total type size plus invitation and pending-call weights."""

    def size(t: LocalType) -> int:
        match t:
            case LEnd() | LVar(_):
                return 0
            case LGet(_, branches) | LSend(_, branches):
                return 1 + sum(size(b.cont) for b in branches)
            case LOpt(_, body, _, cont):
                return 1 + size(body) + size(cont)
            case LCall(_, g, argv, argb, ext, cont):
                inst = gsubst_names(
                    g, {f: a for (f, _), a in zip(argb, argv)})
                weight = 2
                for r in free_roles(inst):
                    weight += 1 + size(project(inst, EMPTY_PROTOCOLS, r))
                return weight + size(cont)
            case LEnt(_, _, _, _, cont) | LReq(_, _, _, _, cont):
                return 1 + size(cont)
            case LChoice(l, r):
                return 1 + size(l) + size(r)
            case LPar(l, r):
                return size(l) + size(r)
            case LRec(_, body):
                return 1 + size(body)
        raise TypeError(f"not a local type: {t!r}")

    total = 0
    for ep, t in d.assignments.items():
        total += size(t)
        if ep.mode in (EXTERNAL, INTERNAL):
            total += 1
    return total
