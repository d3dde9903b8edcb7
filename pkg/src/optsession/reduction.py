"""Structural congruence, evaluation contexts, and the reduction relation.

Processes are identified up to structural congruence; canonicalize computes
a normal form used as state identity by the explorer: parallel compositions
are flattened and sorted, end units removed, restrictions hoisted to the
top of their region (scope extrusion), unused restrictions dropped, choice
arguments sorted, and bound names renamed positionally.  Recursion is never
unfolded by canonicalize; enabled_steps unfolds unguarded recursion on
demand, as the congruence rule allows.

Communication needs both partners in parallel inside one evaluation
context; evaluation contexts descend through parallel composition,
restriction, and optional-block bodies.  Cross-block communication
(rules cSO, cCO, jO) additionally requires each partner inside exactly one
optional block whose participant sets agree, reached without crossing a
restriction that binds a name of the redex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .printer import print_process
from .syntax import (
    Name, PBranch, PChoice, PDecl, PEnd, PEnt, PGet, PIn, POpt, POptEnd,
    POut, PPar, PRec, PRes, PReq, PSend, PVar, P_END, ProcVar, Process, Role,
    free_names, fresh_name, role_set_eq, substitute, unfold_rec,
)


class StaleStepError(Exception):
    pass


@dataclass(frozen=True)
class RedexStep:
    rule: str
    position: tuple[str, ...]
    result: Process
    subst: tuple[tuple[str, str], ...] = ()
    info: tuple[tuple[str, object], ...] = ()
    unfolds: int = 0
    source_key: str = ""

    def info_dict(self) -> dict:
        return dict(self.info)

    def render(self) -> str:
        where = " & ".join(self.position)
        extra = f" {dict(self.info)}" if self.info else ""
        return f"({self.rule}) at {where}{extra}"


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize(p: Process) -> Process:
    """Normal form modulo structural congruence.

    Names are preserved (clashing hoisted binders are renamed); ordering is
    nevertheless stable under renaming of bound names because sort keys
    anonymize them.  State identity additionally normalizes bound names:
    use canonical_key.
    """
    return _struct(p, frozenset())


def canonical_key(p: Process) -> str:
    """Identity of p modulo structural congruence and alpha renaming."""
    return print_process(_alpha_normalize(_struct(p, frozenset())))


def state_key(p_canonical: Process) -> str:
    """canonical_key for a term already in canonical form."""
    return print_process(_alpha_normalize(p_canonical))


def _struct(p: Process, anon: frozenset) -> Process:
    match p:
        case PPar(_, _) | PRes(_, _):
            binders, raw = _collect_region(p)
            scope = anon | frozenset(binders)
            comps = [c for c in (_struct(c, scope) for c in raw)
                     if not isinstance(c, PEnd)]
            used = set()
            for c in comps:
                used |= free_names(c)
            binders = [b for b in binders if b in used]
            keyed = sorted(
                ((_sort_key(c, scope), i, c) for i, c in enumerate(comps)),
                key=lambda t: (t[0], t[1]))
            comps = [c for _, _, c in keyed]
            body = _renest_par(comps)
            order = _binder_order(binders, comps)
            for b in reversed(order):
                body = PRes(b, body)
            return body
        case PEnd() | PVar(_) | POptEnd(_, _):
            return p
        case PIn(chan, binders, cont):
            return PIn(chan, binders, _struct(cont, anon))
        case POut(chan, payload, cont):
            return POut(chan, payload, _struct(cont, anon))
        case PGet(session, r1, r2, branches):
            return PGet(session, r1, r2, tuple(
                PBranch(b.label, b.binders, _struct(b.cont, anon)) for b in branches))
        case PSend(session, r1, r2, label, payload, cont):
            return PSend(session, r1, r2, label, payload, _struct(cont, anon))
        case POpt(owner, parts, body, binders, defaults, cont):
            return POpt(owner, parts, _struct(body, anon), binders, defaults,
                        _struct(cont, anon))
        case PDecl(k, parent, args, chans, ext, cont):
            return PDecl(k, parent, args, chans, ext, _struct(cont, anon))
        case PEnt(session, r1, r2, r3, binder, cont):
            return PEnt(session, r1, r2, r3, binder, _struct(cont, anon))
        case PReq(session, r1, r2, r3, sub, cont):
            return PReq(session, r1, r2, r3, sub, _struct(cont, anon))
        case PChoice(l, r):
            a = _struct(l, anon)
            b = _struct(r, anon)
            if _sort_key(b, anon) < _sort_key(a, anon):
                a, b = b, a
            return PChoice(a, b)
        case PRec(v, body):
            return PRec(v, _struct(body, anon))
    raise TypeError(f"not a process: {p!r}")


def _collect_region(p: Process) -> tuple[list[Name], list[Process]]:
    """Flatten nested parallel/restriction into hoisted binders and atoms.

    A hoisted binder widens its scope over sibling components; scope
    extrusion requires the name not to occur free there, so clashing
    binders are renamed first.
    """
    binders: list[Name] = []
    comps: list[Process] = []
    seen_free: set[Name] = free_names(p)

    def walk(q: Process):
        match q:
            case PEnd():
                return
            case PPar(l, r):
                walk(l)
                walk(r)
            case PRes(b, body):
                if b in binders or b in seen_free:
                    nb = fresh_name(b, set(binders) | seen_free | free_names(body))
                    body = substitute(body, {b: nb})
                    b = nb
                binders.append(b)
                walk(body)
            case _:
                comps.append(q)

    walk(p)
    return binders, comps


def _binder_order(binders: list[Name], comps: list[Process]) -> list[Name]:
    text = "\x00".join(print_process(c) for c in comps)
    def first_use(b: Name) -> int:
        i = text.find(b.id)
        return i if i >= 0 else len(text)
    return sorted(binders, key=lambda b: (first_use(b), b.id))


def _renest_par(comps: list[Process]) -> Process:
    if not comps:
        return P_END
    out = comps[-1]
    for c in reversed(comps[:-1]):
        out = PPar(c, out)
    return out


def _sort_key(p: Process, anon: frozenset) -> str:
    """Print with hoisted restriction names anonymized and internal bound
    names normalized, so ordering is stable under alpha renaming."""
    ren = {b: Name("%") for b in anon}
    return print_process(_alpha_normalize(_subst_blind(p, ren)))


def _subst_blind(p: Process, ren: dict) -> Process:
    """Rename free occurrences without capture avoidance (keys are binders
    hoisted above p, values are reserved spellings)."""
    if not ren:
        return p
    live = {k: v for k, v in ren.items()}

    def go(q: Process, ren: dict) -> Process:
        match q:
            case PEnd() | PVar(_):
                return q
            case PIn(chan, binders, cont):
                inner = {k: v for k, v in ren.items() if k not in binders}
                return PIn(ren.get(chan, chan), binders, go(cont, inner))
            case POut(chan, payload, cont):
                return POut(ren.get(chan, chan), tuple(ren.get(n, n) for n in payload),
                            go(cont, ren))
            case PGet(session, r1, r2, branches):
                return PGet(ren.get(session, session), r1, r2, tuple(
                    PBranch(b.label, b.binders,
                            go(b.cont, {k: v for k, v in ren.items() if k not in b.binders}))
                    for b in branches))
            case PSend(session, r1, r2, label, payload, cont):
                return PSend(ren.get(session, session), r1, r2, label,
                             tuple(ren.get(n, n) for n in payload), go(cont, ren))
            case POpt(owner, parts, body, binders, defaults, cont):
                inner = {k: v for k, v in ren.items() if k not in binders}
                return POpt(owner, parts, go(body, ren), binders,
                            tuple(ren.get(n, n) for n in defaults), go(cont, inner))
            case POptEnd(owner, values):
                return POptEnd(owner, tuple(ren.get(n, n) for n in values))
            case PDecl(k, parent, args, chans, ext, cont):
                return PDecl(ren.get(k, k), ren.get(parent, parent),
                             tuple(ren.get(n, n) for n in args),
                             tuple(ren.get(n, n) for n in chans), ext, go(cont, ren))
            case PEnt(session, r1, r2, r3, binder, cont):
                inner = {k: v for k, v in ren.items() if k != binder}
                return PEnt(ren.get(session, session), r1, r2, r3, binder,
                            go(cont, inner))
            case PReq(session, r1, r2, r3, sub, cont):
                return PReq(ren.get(session, session), r1, r2, r3,
                            ren.get(sub, sub), go(cont, ren))
            case PRes(binder, body):
                inner = {k: v for k, v in ren.items() if k != binder}
                return PRes(binder, go(body, inner))
            case PChoice(l, r):
                return PChoice(go(l, ren), go(r, ren))
            case PPar(l, r):
                return PPar(go(l, ren), go(r, ren))
            case PRec(v, body):
                return PRec(v, go(body, ren))
        raise TypeError(f"not a process: {q!r}")

    return go(p, live)


def _alpha_normalize(p: Process) -> Process:
    counter = itertools.count()
    pcounter = itertools.count()

    def go(q: Process, env: dict, penv: dict) -> Process:
        def r(n: Name) -> Name:
            return env.get(n, n)

        def rs(ns):
            return tuple(env.get(n, n) for n in ns)

        def bind(names, env):
            env = dict(env)
            out = []
            for n in names:
                nn = Name(f"%{next(counter)}")
                env[n] = nn
                out.append(nn)
            return tuple(out), env

        match q:
            case PEnd():
                return q
            case PVar(v):
                return PVar(penv.get(v, v))
            case PIn(chan, binders, cont):
                nb, env2 = bind(binders, env)
                return PIn(r(chan), nb, go(cont, env2, penv))
            case POut(chan, payload, cont):
                return POut(r(chan), rs(payload), go(cont, env, penv))
            case PGet(session, r1, r2, branches):
                out = []
                for b in branches:
                    nb, env2 = bind(b.binders, env)
                    out.append(PBranch(b.label, nb, go(b.cont, env2, penv)))
                return PGet(r(session), r1, r2, tuple(out))
            case PSend(session, r1, r2, label, payload, cont):
                return PSend(r(session), r1, r2, label, rs(payload), go(cont, env, penv))
            case POpt(owner, parts, body, binders, defaults, cont):
                nbody = go(body, env, penv)
                nb, env2 = bind(binders, env)
                return POpt(owner, parts, nbody, nb, rs(defaults), go(cont, env2, penv))
            case POptEnd(owner, values):
                return POptEnd(owner, rs(values))
            case PDecl(k, parent, args, chans, ext, cont):
                return PDecl(r(k), r(parent), rs(args), rs(chans), ext,
                             go(cont, env, penv))
            case PEnt(session, r1, r2, r3, binder, cont):
                nb, env2 = bind((binder,), env)
                return PEnt(r(session), r1, r2, r3, nb[0], go(cont, env2, penv))
            case PReq(session, r1, r2, r3, sub, cont):
                return PReq(r(session), r1, r2, r3, r(sub), go(cont, env, penv))
            case PRes(binder, body):
                nb, env2 = bind((binder,), env)
                return PRes(nb[0], go(body, env2, penv))
            case PChoice(l, rr):
                return PChoice(go(l, env, penv), go(rr, env, penv))
            case PPar(l, rr):
                return PPar(go(l, env, penv), go(rr, env, penv))
            case PRec(v, body):
                nv = ProcVar(f"%X{next(pcounter)}")
                return PRec(nv, go(body, env, {**penv, v: nv}))
        raise TypeError(f"not a process: {q!r}")

    return go(p, {}, {})


# ---------------------------------------------------------------------------
# regions: the part of a term reachable by evaluation contexts


@dataclass
class _Region:
    binders: list[Name]
    comps: list[Process]
    wrap: Callable[[list[Process]], Process]
    path: tuple[str, ...]
    frames: tuple[tuple[str, ...], ...] = ()
    unfolds: int = 0


def _take_region(p: Process, wrap: Callable[[Process], Process],
                 path: tuple[str, ...]) -> _Region:
    binders: list[Name] = []
    comps: list[Process] = []
    unfolds = 0

    def walk(q: Process):
        nonlocal unfolds
        match q:
            case PEnd():
                return
            case PPar(l, r):
                walk(l)
                walk(r)
            case PRes(b, body):
                binders.append(b)
                walk(body)
            case PRec(_, _):
                unfolds += 1
                walk(unfold_rec(q))
            case _:
                comps.append(q)

    walk(p)

    def rebuild(new_comps: list[Process]) -> Process:
        body = _renest_par([c for c in new_comps if not isinstance(c, PEnd)])
        for b in reversed(binders):
            body = PRes(b, body)
        return wrap(body)

    return _Region(binders, comps, rebuild, path, (), unfolds)


# ---------------------------------------------------------------------------
# enabled steps


def enabled_steps(p: Process) -> list[RedexStep]:
    """All single-rule reduction steps of p, up to structural congruence."""
    source = canonicalize(p)
    key = state_key(source)
    steps = []
    for step in _steps_of(source):
        steps.append(RedexStep(step.rule, step.position,
                               canonicalize(step.result), step.subst, step.info,
                               step.unfolds, key))
    # deterministic order, deduplicated by (rule, position)
    seen = set()
    out = []
    for s in sorted(steps, key=lambda s: (s.rule, s.position)):
        k = (s.rule, s.position, s.info)
        if k not in seen:
            seen.add(k)
            out.append(s)
    return out


@dataclass(frozen=True)
class _RawStep:
    rule: str
    position: tuple[str, ...]
    result: Process
    subst: tuple[tuple[str, str], ...] = ()
    info: tuple[tuple[str, object], ...] = ()
    unfolds: int = 0


def _steps_of(p: Process) -> Iterator[_RawStep]:
    regions = list(_regions(p))
    for region in regions:
        yield from _single_steps(region)
        yield from _pair_steps(region)
        yield from _cross_steps(region)


def _regions(p: Process) -> Iterator[_Region]:
    """The top region plus one region per reachable optional-block body."""
    top = _take_region(p, lambda body: body, ())
    queue = [top]
    while queue:
        region = queue.pop()
        yield region
        for i, comp in enumerate(region.comps):
            if isinstance(comp, POpt):
                queue.append(_opt_body_region(region, i))


def _opt_body_region(region: _Region, i: int) -> _Region:
    opt: POpt = region.comps[i]

    def wrap(body: Process) -> Process:
        comps = list(region.comps)
        comps[i] = POpt(opt.owner, opt.participants, body, opt.binders,
                        opt.defaults, opt.cont)
        return region.wrap(comps)

    path = region.path + (f"opt[{opt.owner.id}]@{i}",)
    inner = _take_region(opt.body, wrap, path)
    inner.frames = region.frames + (tuple(sorted(r.id for r in opt.participants)),)
    inner.unfolds += region.unfolds
    return inner


def _replace(region: _Region, updates: dict[int, Process]) -> Process:
    comps = list(region.comps)
    for i, q in updates.items():
        comps[i] = q
    return region.wrap(comps)


def _pos(region: _Region, i: int) -> str:
    return "/".join(region.path + (f"@{i}",))


def _subst_pairs(mapping: dict[Name, Name]) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((k.id, v.id) for k, v in mapping.items()))


def _within(region: _Region, *extra: tuple[str, ...]) -> tuple[tuple[str, object], ...]:
    frames = region.frames + tuple(extra)
    return (("within", frames),) if frames else ()


def _single_steps(region: _Region) -> Iterator[_RawStep]:
    for i, comp in enumerate(region.comps):
        match comp:
            case PDecl(k, parent, args, chans, ext, cont):
                invites = [POut(c, (k,), P_END) for c in chans]
                new = _renest_par([cont] + invites) if invites else cont
                yield _RawStep(
                    "subs", (_pos(region, i),), _replace(region, {i: new}),
                    info=(("session", k.id), ("parent", parent.id),
                          ("args", tuple(a.id for a in args))) + _within(region),
                    unfolds=region.unfolds)
            case POpt(owner, parts, body, binders, defaults, cont):
                mapping = dict(zip(binders, defaults))
                yield _RawStep(
                    "fail", (_pos(region, i),),
                    _replace(region, {i: substitute(cont, mapping)}),
                    subst=_subst_pairs(mapping),
                    info=(("owner", owner.id),
                          ("roles", tuple(sorted(r.id for r in parts))),
                          ("binders", len(binders)),
                          ("values", tuple(d.id for d in defaults))) + _within(region),
                    unfolds=region.unfolds)
                if isinstance(body, POptEnd) and body.owner == owner:
                    mapping = dict(zip(binders, body.values))
                    yield _RawStep(
                        "succ", (_pos(region, i),),
                        _replace(region, {i: substitute(cont, mapping)}),
                        subst=_subst_pairs(mapping),
                        info=(("owner", owner.id),
                              ("roles", tuple(sorted(r.id for r in parts))),
                              ("binders", len(binders)),
                              ("values", tuple(v.id for v in body.values))) + _within(region),
                        unfolds=region.unfolds)
            case PChoice(left, right):
                for side, tag in ((left, "l"), (right, "r")):
                    for inner in _steps_of(canonicalize(side)):
                        yield _RawStep(
                            "choice", (_pos(region, i) + f"/{tag}",) + inner.position,
                            _replace(region, {i: inner.result}),
                            subst=inner.subst,
                            info=(("picked", tag), ("inner", inner.rule)),
                            unfolds=region.unfolds + inner.unfolds)


def _pair_steps(region: _Region) -> Iterator[_RawStep]:
    comps = region.comps
    for i, a in enumerate(comps):
        for j, b in enumerate(comps):
            if i == j:
                continue
            match (a, b):
                case (PSend(ks, r1s, r2s, lab, payload, cont_s),
                      PGet(kg, r1g, r2g, branches)) if ks == kg and r1s == r1g and r2s == r2g:
                    branch = next((br for br in branches if br.label == lab), None)
                    if branch is None or len(branch.binders) != len(payload):
                        continue
                    mapping = dict(zip(branch.binders, payload))
                    yield _RawStep(
                        "comS", (_pos(region, i), _pos(region, j)),
                        _replace(region, {i: cont_s,
                                          j: substitute(branch.cont, mapping)}),
                        subst=_subst_pairs(mapping),
                        info=(("session", ks.id), ("from", r1s.id), ("to", r2s.id),
                              ("label", lab.id),
                              ("values", tuple(v.id for v in payload))) + _within(region),
                        unfolds=region.unfolds)
                case (POut(ca, payload, cont_o), PIn(cb, binders, cont_i)) if ca == cb \
                        and len(payload) == len(binders):
                    mapping = dict(zip(binders, payload))
                    yield _RawStep(
                        "comC", (_pos(region, i), _pos(region, j)),
                        _replace(region, {i: cont_o,
                                          j: substitute(cont_i, mapping)}),
                        subst=_subst_pairs(mapping),
                        info=(("chan", ca.id),
                              ("values", tuple(v.id for v in payload))) + _within(region),
                        unfolds=region.unfolds)
                case (PReq(ss, i1, i2, i3, k, cont_r), PEnt(se, e1, e2, e3, x, cont_e)) \
                        if ss == se and (i1, i2, i3) == (e1, e2, e3):
                    mapping = {x: k}
                    yield _RawStep(
                        "join", (_pos(region, i), _pos(region, j)),
                        _replace(region, {i: cont_r,
                                          j: substitute(cont_e, mapping)}),
                        subst=_subst_pairs(mapping),
                        info=(("session", ss.id), ("inviter", i1.id),
                              ("invitee", i2.id), ("as", i3.id),
                              ("sub", k.id)) + _within(region),
                        unfolds=region.unfolds)


# -- cross-block communication


@dataclass
class _BlockAction:
    frame: POpt
    owner: Role
    roles: tuple[Role, ...]
    atom: Process
    replace: Callable[[Process], Process]  # new action cont -> new component
    path: str


def _block_actions(comp: Process, replace_comp: Callable[[Process], Process],
                   path: str) -> list[_BlockAction]:
    """Actions inside optional blocks of comp reachable by E_R/E_O contexts."""
    out: list[_BlockAction] = []
    if not isinstance(comp, POpt):
        return out
    opt = comp

    def wrap_body(new_body: Process) -> Process:
        return replace_comp(POpt(opt.owner, opt.participants, new_body,
                                 opt.binders, opt.defaults, opt.cont))

    binders, atoms = _flatten_body(opt.body)

    def atom_replacer(idx: int) -> Callable[[Process], Process]:
        def rep(new_atom: Process) -> Process:
            new_atoms = list(atoms)
            new_atoms[idx] = new_atom
            body = _renest_par([a for a in new_atoms if not isinstance(a, PEnd)])
            for b in reversed(binders):
                body = PRes(b, body)
            return wrap_body(body)
        return rep

    for idx, atom in enumerate(atoms):
        # a restriction between the block and the atom blocks the context
        # unless it can be narrowed away from the atom
        if any(b in free_names(atom) for b in binders):
            continue
        if isinstance(atom, (PSend, PGet, POut, PIn, PReq, PEnt)):
            out.append(_BlockAction(opt, opt.owner, opt.participants, atom,
                                    atom_replacer(idx), f"{path}/opt@{idx}"))
        if isinstance(atom, POpt):
            out.extend(_block_actions(atom, atom_replacer(idx), f"{path}/opt@{idx}"))
    return out


def _flatten_body(p: Process) -> tuple[list[Name], list[Process]]:
    binders: list[Name] = []
    atoms: list[Process] = []

    def walk(q: Process):
        match q:
            case PEnd():
                return
            case PPar(l, r):
                walk(l)
                walk(r)
            case PRes(b, body):
                binders.append(b)
                walk(body)
            case PRec(_, _):
                walk(unfold_rec(q))
            case _:
                atoms.append(q)

    walk(p)
    return binders, atoms


def _owners_admissible(send_role: Role, recv_role: Role,
                       c: _BlockAction, c2: _BlockAction) -> bool:
    # the displayed owner conditions apply whenever the communicating roles
    # are block participants; communications of a nested sub-session carry
    # sub-protocol roles instead, for which distinct owners suffice
    if send_role in c.roles and c.owner != send_role:
        return False
    if recv_role in c2.roles and c2.owner != recv_role:
        return False
    return c.owner != c2.owner


def _cross_steps(region: _Region) -> Iterator[_RawStep]:
    comps = region.comps
    actions = [
        _block_actions(comp, lambda q: q, _pos(region, i))
        for i, comp in enumerate(comps)
    ]

    for i, acts_i in enumerate(actions):
        for j, acts_j in enumerate(actions):
            if i == j:
                continue
            for ca in acts_i:
                for cb in acts_j:
                    if ca.frame is cb.frame:
                        continue
                    if not role_set_eq(ca.roles, cb.roles):
                        continue
                    yield from _match_cross(region, i, j, ca, cb)


def _match_cross(region: _Region, i: int, j: int,
                 ca: _BlockAction, cb: _BlockAction) -> Iterator[_RawStep]:
    match (ca.atom, cb.atom):
        case (PSend(ks, r1s, r2s, lab, payload, cont_s),
              PGet(kg, r1g, r2g, branches)) if ks == kg and r1s == r1g and r2s == r2g:
            if not _owners_admissible(r1s, r2s, ca, cb):
                return
            branch = next((br for br in branches if br.label == lab), None)
            if branch is None or len(branch.binders) != len(payload):
                return
            mapping = dict(zip(branch.binders, payload))
            yield _RawStep(
                "cSO", (ca.path, cb.path),
                _replace(region, {i: ca.replace(cont_s),
                                  j: cb.replace(substitute(branch.cont, mapping))}),
                subst=_subst_pairs(mapping),
                info=(("session", ks.id), ("from", r1s.id), ("to", r2s.id),
                      ("label", lab.id), ("values", tuple(v.id for v in payload)))
                     + _within(region, tuple(sorted(r.id for r in ca.roles))),
                unfolds=region.unfolds)
        case (POut(caout, payload, cont_o), PIn(cain, binders, cont_i)) \
                if caout == cain and len(payload) == len(binders):
            mapping = dict(zip(binders, payload))
            yield _RawStep(
                "cCO", (ca.path, cb.path),
                _replace(region, {i: ca.replace(cont_o),
                                  j: cb.replace(substitute(cont_i, mapping))}),
                subst=_subst_pairs(mapping),
                info=(("chan", caout.id), ("values", tuple(v.id for v in payload)))
                     + _within(region, tuple(sorted(r.id for r in ca.roles))),
                unfolds=region.unfolds)
        case (PReq(ss, i1, i2, i3, k, cont_r), PEnt(se, e1, e2, e3, x, cont_e)) \
                if ss == se and (i1, i2, i3) == (e1, e2, e3):
            if ca.owner != i1 or cb.owner != i2:
                return
            mapping = {x: k}
            yield _RawStep(
                "jO", (ca.path, cb.path),
                _replace(region, {i: ca.replace(cont_r),
                                  j: cb.replace(substitute(cont_e, mapping))}),
                subst=_subst_pairs(mapping),
                info=(("session", ss.id), ("inviter", i1.id),
                      ("invitee", i2.id), ("as", i3.id), ("sub", k.id))
                     + _within(region, tuple(sorted(r.id for r in ca.roles))),
                unfolds=region.unfolds)


# ---------------------------------------------------------------------------
# applying steps


def apply_step(p: Process, step: RedexStep) -> Process:
    """Replay a step; the step must have been generated for p (up to alpha)."""
    if canonical_key(p) != step.source_key:
        raise StaleStepError(f"step {step.render()} does not match the process")
    return step.result
