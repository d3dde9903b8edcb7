"""Generators for the rotating-coordinator fixtures and the unreliable link.

Each fixture bundles the global type, per-role projections, the process
implementation, the typing environments, and (where applicable) a replay
script: the canonical decomposition of the execution narrated for n = 3
into atomic steps, usable with the Scripted failure policy.

Conventions: participant i's value after round j is v_i_j, with
v_i_i = v_i_(i-1) (the coordinator does not update its own value) and
v_i_0 instantiated with the initial values, by default 0 for participant 1
and 1 for the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .projection import EMPTY_PROTOCOLS, ProtocolEnv, ProtocolEntry, project
from .syntax import (
    GBranch, GCall, GCom, GDecl, GOptBlock, G_END, GlobalType, KindVal, Label,
    LocalType, Name, P_END, PBranch, PDecl, PEnd, PEnt, PGet, PIn, POpt,
    POptEnd, POut, PPar, PRes, PReq, PSend, Process, Role,
)
from .typecheck import GlobalEnv, SessionEnv, build_initial_env
from .wellformed import KindEnv

V = KindVal("V")
LAB_C = Label("c")
LAB_BC = Label("bc")


@dataclass
class Fixture:
    name: str
    global_type: GlobalType
    per_role_locals: dict[Role, LocalType]
    process: Process
    gamma: GlobalEnv
    delta: SessionEnv
    kind_env: KindEnv
    roles: list[Role]
    notes: str = ""
    scripts: dict[str, list[dict]] = field(default_factory=dict)


def _role(i: int) -> Role:
    return Role(f"p{i}")


def _chan(i: int) -> Name:
    return Name(f"a{i}")


S = Name("s")


def _value_names(n: int, init: tuple[str, ...]) -> dict[tuple[int, int], Name]:
    """v[i, j] with the aliasing conventions applied."""
    v: dict[tuple[int, int], Name] = {}
    for i in range(1, n + 1):
        for j in range(0, n + 1):
            jj = j - 1 if j == i else j
            if jj == 0:
                v[(i, j)] = Name(init[i - 1])
            else:
                v[(i, j)] = Name(f"v_{i}_{jj}")
    return v


def _default_init(n: int) -> tuple[str, ...]:
    return ("0",) + ("1",) * (n - 1)


def _kind_env(n: int, v: dict, extra_roles=(), protos=None) -> KindEnv:
    env = KindEnv()
    from .syntax import KindRole
    for i in range(1, n + 1):
        env = env.bind(_role(i), KindRole())
    for r in extra_roles:
        env = env.bind(r, KindRole())
    for name in set(v.values()):
        env = env.bind(name, V)
    for pname, kind in (protos or {}).items():
        env = env.bind(pname, kind)
    return env


def _values_gamma(v: dict) -> dict[Name, KindVal]:
    return {name: V for name in set(v.values())}


# ---------------------------------------------------------------------------
# unreliable link


def gul(src: Role, v_src: Name, trg: Role, v_trg: Name, cont: GlobalType,
        label: Label = LAB_C) -> GlobalType:
    """A single communication covered by an optional block; the sender needs
    no default value, the receiver falls back to v_trg."""
    return GOptBlock(
        ((src, ()), (trg, ((v_trg, V),))),
        GCom(src, trg, (GBranch(label, ((v_src, V),), G_END),)),
        cont)


def gen_unreliable_link(src: Role = Role("p1"), value: Name = Name("v1"),
                        trg: Role = Role("p2"), default: Name = Name("v2")) -> Fixture:
    if src == trg:
        raise ValueError("source and target must differ")
    g = gul(src, value, trg, default, G_END)
    x, y = Name("x"), Name("y")
    sender = POpt(src, (src, trg),
                  PSend(S, src, trg, LAB_C, (value,), POptEnd(src, ())),
                  (), (), P_END)
    receiver = POpt(trg, (src, trg),
                    PGet(S, src, trg, (PBranch(LAB_C, (x,), POptEnd(trg, (x,))),)),
                    (y,), (default,), P_END)
    process = PPar(sender, receiver)
    locals_ = {r: project(g, EMPTY_PROTOCOLS, r) for r in (src, trg)}
    delta = SessionEnv()
    from .typecheck import Endpoint
    for r in (src, trg):
        delta = delta.add(Endpoint(S, r), locals_[r])
    gamma = GlobalEnv(values={value: V, default: V}, sessions={S: g})
    kinds = KindEnv().bind(value, V).bind(default, V)
    from .syntax import KindRole
    kinds = kinds.bind(src, KindRole()).bind(trg, KindRole())
    return Fixture(
        name="unreliable-link",
        global_type=g,
        per_role_locals=locals_,
        process=process,
        gamma=gamma,
        delta=delta,
        kind_env=kinds,
        roles=[src, trg],
        notes="single message over an unreliable link; the exhaustive graph "
              "has two outcomes: value delivered or default used",
    )


# ---------------------------------------------------------------------------
# rotating coordinators, flat


def gen_rc_global(n: int, init: Optional[tuple[str, ...]] = None) -> GlobalType:
    if n < 2:
        raise ValueError("need at least two participants")
    v = _value_names(n, init or _default_init(n))
    g: GlobalType = G_END
    rounds = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if j != i]
    for i, j in reversed(rounds):
        g = gul(_role(i), v[(i, i - 1)], _role(j), v[(j, i - 1)], g)
    return g


def gen_rc_process(n: int, init: Optional[tuple[str, ...]] = None) -> Process:
    v = _value_names(n, init or _default_init(n))

    def recv_block(i: int, j: int, cont: Process) -> Process:
        # participant i receives in round j; on failure keeps its old value
        getter = PGet(S, _role(j), _role(i),
                      (PBranch(LAB_C, (v[(j, j - 1)],),
                               POptEnd(_role(i), (v[(j, j - 1)],))),))
        return POpt(_role(i), (_role(i), _role(j)), getter,
                    (v[(i, j)],), (v[(i, j - 1)],), cont)

    def send_block(i: int, j: int) -> Process:
        sender = PSend(S, _role(i), _role(j), LAB_C, (v[(i, i - 1)],),
                       POptEnd(_role(i), ()))
        return POpt(_role(i), (_role(i), _role(j)), sender, (), (), P_END)

    def participant(i: int) -> Process:
        tail: Process = P_END
        for j in range(n, i, -1):
            tail = recv_block(i, j, tail)
        par = tail
        for j in range(n, 0, -1):
            if j != i:
                par = PPar(send_block(i, j), par)
        body = par
        for j in range(i - 1, 0, -1):
            body = recv_block(i, j, body)
        return body

    out: Process = P_END
    for i in range(n, 0, -1):
        unit = PPar(POut(_chan(i), (S,), P_END), PIn(_chan(i), (S,), participant(i)))
        out = unit if isinstance(out, PEnd) else PPar(unit, out)
    return out


def gen_rc(n: int, init: Optional[tuple[str, ...]] = None) -> Fixture:
    init = init or _default_init(n)
    g = gen_rc_global(n, init)
    process = gen_rc_process(n, init)
    roles = [_role(i) for i in range(1, n + 1)]
    chans = [_chan(i) for i in range(1, n + 1)]
    v = _value_names(n, init)
    gamma, delta = build_initial_env(g, roles, chans, S, _values_gamma(v))
    locals_ = {r: project(g, EMPTY_PROTOCOLS, r) for r in roles}
    fixture = Fixture(
        name=f"rc-{n}",
        global_type=g,
        per_role_locals=locals_,
        process=process,
        gamma=gamma,
        delta=delta,
        kind_env=_kind_env(n, v),
        roles=roles,
        notes=f"rotating coordinators over unreliable links, {n} participants; "
              f"initial values {init}",
    )
    if n == 3:
        fixture.scripts["crash-p1"] = rc3_crash_script()
    return fixture


def rc3_crash_script() -> list[dict]:
    """Participant 1 crashes in round 1 after delivering its value to
    participant 3; 18 atomic steps ending at 0 with p2 = p3 = 1.

    Decomposition: 3 session initialisations; delivery p1->p3 (communication
    plus two block completions); five failures (p1's remaining three blocks,
    p2's round-1 block, p2's block towards p1); delivery p2->p3; round 3
    delivery p3->p2 plus p3's failure towards p1.
    """
    return [
        {"rule": "comC", "chan": "a1"},
        {"rule": "comC", "chan": "a2"},
        {"rule": "comC", "chan": "a3"},
        # p1 delivers 0 to p3
        {"rule": "cSO", "from": "p1", "to": "p3"},
        {"rule": "succ", "owner": "p1", "roles": ["p1", "p3"]},
        {"rule": "succ", "owner": "p3", "roles": ["p1", "p3"]},
        # p1 crashes: its remaining blocks fail
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p2"], "binders": 0},
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p2"], "binders": 1},
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p3"], "binders": 1},
        # p2 cannot receive from p1; its round-1 block and its block towards
        # the crashed p1 fail
        {"rule": "fail", "owner": "p2", "roles": ["p1", "p2"], "binders": 1},
        {"rule": "fail", "owner": "p2", "roles": ["p1", "p2"], "binders": 0},
        # p2 delivers 1 to p3
        {"rule": "cSO", "from": "p2", "to": "p3"},
        {"rule": "succ", "owner": "p2", "roles": ["p2", "p3"]},
        {"rule": "succ", "owner": "p3", "roles": ["p2", "p3"]},
        # round 3: p3 delivers 1 to p2 and abandons its block towards p1
        {"rule": "cSO", "from": "p3", "to": "p2"},
        {"rule": "succ", "owner": "p3", "roles": ["p2", "p3"]},
        {"rule": "succ", "owner": "p2", "roles": ["p2", "p3"]},
        {"rule": "fail", "owner": "p3", "roles": ["p1", "p3"], "binders": 0},
    ]


# ---------------------------------------------------------------------------
# rotating coordinators with one sub-session per round


SRC = Role("src")
PROTO_R = Name("R")


def _trg(m: int) -> Role:
    return Role(f"trg{m}")


def _round_roles(n: int, leader: int) -> list[Role]:
    """Internal roles (src, trg1..trg_{n-1}) are played by the reordering
    (p_leader, p_1, .., p_{leader-1}, p_{leader+1}, .., p_n)."""
    return [_role(leader)] + [_role(j) for j in range(1, n + 1) if j != leader]


def _target_role(n: int, leader: int, participant: int) -> Role:
    # position of the participant among the round's targets
    return _trg(participant) if participant < leader else _trg(participant - 1)


def gen_rc_subsessions_global(n: int, init: Optional[tuple[str, ...]] = None) -> GlobalType:
    if n < 2:
        raise ValueError("need at least two participants")
    v = _value_names(n, init or _default_init(n))
    v_src = Name("v_src")
    round_body: GlobalType = G_END
    for m in range(n - 1, 0, -1):
        round_body = gul(SRC, v_src, _trg(m), v_src, round_body)
    calls: GlobalType = G_END
    for i in range(n, 0, -1):
        calls = GCall(_role(i), PROTO_R, tuple(_round_roles(n, i)),
                      (v[(i, i - 1)],), calls)
    internal = (SRC,) + tuple(_trg(m) for m in range(1, n))
    return GDecl(PROTO_R, internal, ((v_src, V),), (), round_body, calls)


def gen_rc_subsessions_process(n: int, init: Optional[tuple[str, ...]] = None) -> Process:
    v = _value_names(n, init or _default_init(n))
    x, y, z = Name("x"), Name("y"), Name("z")

    def recv_round(i: int, j: int, cont: Process) -> Process:
        rho = _target_role(n, j, i)
        getter = PGet(x, SRC, rho, (PBranch(LAB_C, (y,), POptEnd(rho, (y,))),))
        block = POpt(rho, (rho, SRC), getter, (v[(i, j)],), (v[(i, j - 1)],), cont)
        return PEnt(S, _role(j), _role(i), rho, x, block)

    def own_round(i: int, tail: Process) -> Process:
        k = Name(f"k{i}")
        invited = [j for j in range(1, n + 1) if j != i]
        sends: Process = P_END
        for m in range(n - 1, 0, -1):
            sender = PSend(z, SRC, _trg(m), LAB_C, (v[(i, i - 1)],),
                           POptEnd(SRC, ()))
            block = POpt(SRC, (SRC, _trg(m)), sender, (), (), P_END)
            sends = block if isinstance(sends, PEnd) else PPar(block, sends)
        body = PEnt(S, _role(i), _role(i), SRC, z, sends)
        reqs: Process = body
        for m in range(n - 1, 0, -1):
            reqs = PPar(PReq(S, _role(i), _role(invited[m - 1]), _trg(m), k, P_END), reqs)
        reqs = PPar(PReq(S, _role(i), _role(i), SRC, k, P_END), reqs)
        inner = PPar(reqs, tail) if not isinstance(tail, PEnd) else reqs
        return PRes(k, PDecl(k, S, (v[(i, i - 1)],), (), (), inner))

    def participant(i: int) -> Process:
        tail: Process = P_END
        for j in range(n, i, -1):
            tail = recv_round(i, j, tail)
        body = own_round(i, tail)
        for j in range(i - 1, 0, -1):
            body = recv_round(i, j, body)
        return body

    out: Process = P_END
    for i in range(n, 0, -1):
        unit = PPar(POut(_chan(i), (S,), P_END), PIn(_chan(i), (S,), participant(i)))
        out = unit if isinstance(out, PEnd) else PPar(unit, out)
    return out


def gen_rc_subsessions(n: int, init: Optional[tuple[str, ...]] = None) -> Fixture:
    init = init or _default_init(n)
    g = gen_rc_subsessions_global(n, init)
    process = gen_rc_subsessions_process(n, init)
    roles = [_role(i) for i in range(1, n + 1)]
    chans = [_chan(i) for i in range(1, n + 1)]
    v = _value_names(n, init)
    values = _values_gamma(v)
    values[Name("v_src")] = V
    gamma, delta = build_initial_env(g, roles, chans, S, values)
    locals_ = {r: project(g, EMPTY_PROTOCOLS, r) for r in roles}
    from .syntax import KindArrow, KindProtocol, KindRole
    proto_kind = KindArrow(tuple([KindRole()] * n) + (V,), KindProtocol())
    fixture = Fixture(
        name=f"rc-subsessions-{n}",
        global_type=g,
        per_role_locals=locals_,
        process=process,
        gamma=gamma,
        delta=delta,
        kind_env=_kind_env(n, v, extra_roles=[SRC] + [_trg(m) for m in range(1, n)],
                           protos={PROTO_R: proto_kind}),
        roles=roles,
        notes=f"one sub-session per round, {n} participants; the tail "
              "acceptances are guarded by the round's sub-session creation "
              "so that the process checks against its projection",
    )
    if n == 3:
        fixture.scripts["crash-p1"] = rc3_subsessions_script()
    return fixture


def rc3_subsessions_script() -> list[dict]:
    """The crash-of-p1 execution mapped onto the sub-session variant: 30
    atomic steps ending at 0 with p2 = p3 = 1."""
    return [
        {"rule": "comC", "chan": "a1"},
        {"rule": "comC", "chan": "a2"},
        {"rule": "comC", "chan": "a3"},
        # round 1: p1 creates the sub-session and all three join
        {"rule": "subs", "parent": "s"},
        {"rule": "join", "inviter": "p1", "invitee": "p1", "as": "src"},
        {"rule": "join", "inviter": "p1", "invitee": "p2", "as": "trg1"},
        {"rule": "join", "inviter": "p1", "invitee": "p3", "as": "trg2"},
        # p1 delivers 0 to p3
        {"rule": "cSO", "from": "src", "to": "trg2"},
        {"rule": "succ", "owner": "src", "roles": ["src", "trg2"]},
        {"rule": "succ", "owner": "trg2", "roles": ["src", "trg2"]},
        # p1 crashes: its unguarded block towards p2 fails, and p2 gives up
        # on round 1
        {"rule": "fail", "owner": "src", "roles": ["src", "trg1"], "binders": 0},
        {"rule": "fail", "owner": "trg1", "roles": ["src", "trg1"], "binders": 1},
        # round 2: p2 creates the sub-session; p1 fails its round-2 block
        {"rule": "subs", "parent": "s"},
        {"rule": "join", "inviter": "p2", "invitee": "p2", "as": "src"},
        {"rule": "join", "inviter": "p2", "invitee": "p1", "as": "trg1"},
        {"rule": "join", "inviter": "p2", "invitee": "p3", "as": "trg2"},
        {"rule": "fail", "owner": "trg1", "roles": ["src", "trg1"], "binders": 1},
        # p2 cannot deliver to the crashed p1
        {"rule": "fail", "owner": "src", "roles": ["src", "trg1"], "binders": 0},
        # p2 delivers 1 to p3
        {"rule": "cSO", "from": "src", "to": "trg2"},
        {"rule": "succ", "owner": "src", "roles": ["src", "trg2"]},
        {"rule": "succ", "owner": "trg2", "roles": ["src", "trg2"]},
        # round 3: p3 creates the sub-session; p1 fails its last block
        {"rule": "subs", "parent": "s"},
        {"rule": "join", "inviter": "p3", "invitee": "p3", "as": "src"},
        {"rule": "join", "inviter": "p3", "invitee": "p1", "as": "trg1"},
        {"rule": "join", "inviter": "p3", "invitee": "p2", "as": "trg2"},
        {"rule": "fail", "owner": "trg1", "roles": ["src", "trg1"], "binders": 1},
        {"rule": "fail", "owner": "src", "roles": ["src", "trg1"], "binders": 0},
        # p3 delivers 1 to p2
        {"rule": "cSO", "from": "src", "to": "trg2"},
        {"rule": "succ", "owner": "src", "roles": ["src", "trg2"]},
        {"rule": "succ", "owner": "trg2", "roles": ["src", "trg2"]},
    ]


# ---------------------------------------------------------------------------
# rotating coordinators with a sub-session inside every optional block


PROTO_C = Name("C")
TRG = Role("trg")


def gen_rc_nested_opt_global(n: int, init: Optional[tuple[str, ...]] = None) -> GlobalType:
    if n < 2:
        raise ValueError("need at least two participants")
    v = _value_names(n, init or _default_init(n))
    val = Name("val")
    body = GCom(SRC, TRG, (GBranch(LAB_BC, ((val, V),), G_END),))
    rounds: GlobalType = G_END
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if j != i]
    for i, j in reversed(pairs):
        call = GCall(_role(i), PROTO_C, (_role(i), _role(j)), (v[(i, i - 1)],), G_END)
        rounds = GOptBlock(
            ((_role(i), ()), (_role(j), ((v[(j, i - 1)], V),))), call, rounds)
    return GDecl(PROTO_C, (SRC, TRG), ((val, V),), (), body, rounds)


def gen_rc_nested_opt_process(n: int, init: Optional[tuple[str, ...]] = None) -> Process:
    v = _value_names(n, init or _default_init(n))
    x, y, z = Name("x"), Name("y"), Name("z")

    def recv_block(i: int, j: int, cont: Process) -> Process:
        getter = PGet(x, SRC, TRG, (PBranch(LAB_BC, (y,), POptEnd(_role(i), (y,))),))
        ent = PEnt(S, _role(j), _role(i), TRG, x, getter)
        return POpt(_role(i), (_role(i), _role(j)), ent,
                    (v[(i, j)],), (v[(i, j - 1)],), cont)

    def call_block(i: int, j: int) -> Process:
        k = Name(f"k{i}_{j}")
        send = PSend(z, SRC, TRG, LAB_BC, (v[(i, i - 1)],), POptEnd(_role(i), ()))
        inner = PPar(
            PReq(S, _role(i), _role(i), SRC, k, P_END),
            PPar(PReq(S, _role(i), _role(j), TRG, k, P_END),
                 PEnt(S, _role(i), _role(i), SRC, z, send)))
        decl = PDecl(k, S, (v[(i, i - 1)],), (), (), inner)
        return PRes(k, POpt(_role(i), (_role(i), _role(j)), decl, (), (), P_END))

    def participant(i: int) -> Process:
        tail: Process = P_END
        for j in range(n, i, -1):
            tail = recv_block(i, j, tail)
        par = tail
        for j in range(n, 0, -1):
            if j != i:
                par = PPar(call_block(i, j), par)
        body = par
        for j in range(i - 1, 0, -1):
            body = recv_block(i, j, body)
        return body

    out: Process = P_END
    for i in range(n, 0, -1):
        unit = PPar(POut(_chan(i), (S,), P_END), PIn(_chan(i), (S,), participant(i)))
        out = unit if isinstance(out, PEnd) else PPar(unit, out)
    return out


def gen_rc_nested_opt(n: int, init: Optional[tuple[str, ...]] = None) -> Fixture:
    init = init or _default_init(n)
    g = gen_rc_nested_opt_global(n, init)
    process = gen_rc_nested_opt_process(n, init)
    roles = [_role(i) for i in range(1, n + 1)]
    chans = [_chan(i) for i in range(1, n + 1)]
    v = _value_names(n, init)
    values = _values_gamma(v)
    values[Name("val")] = V
    gamma, delta = build_initial_env(g, roles, chans, S, values)
    locals_ = {r: project(g, EMPTY_PROTOCOLS, r) for r in roles}
    from .syntax import KindArrow, KindProtocol, KindRole
    proto_kind = KindArrow((KindRole(), KindRole(), V), KindProtocol())
    fixture = Fixture(
        name=f"rc-nested-opt-{n}",
        global_type=g,
        per_role_locals=locals_,
        process=process,
        gamma=gamma,
        delta=delta,
        kind_env=_kind_env(n, v, extra_roles=[SRC, TRG], protos={PROTO_C: proto_kind}),
        roles=roles,
        notes=f"every broadcast message is a sub-session call inside an "
              f"optional block, {n} participants",
    )
    if n == 3:
        fixture.scripts["crash-p1"] = rc3_nested_opt_script()
    return fixture


def rc3_nested_opt_script() -> list[dict]:
    """The crash-of-p1 execution for sub-sessions within optional blocks:
    28 atomic steps ending at 0 with both survivors holding 1."""
    return [
        {"rule": "comC", "chan": "a1"},
        {"rule": "comC", "chan": "a2"},
        {"rule": "comC", "chan": "a3"},
        # p1 starts both of its sub-sessions (inside their optional blocks)
        {"rule": "subs", "within": ["p1", "p2"]},
        {"rule": "subs", "within": ["p1", "p3"]},
        # p1 joins its own session towards p3, p3 joins
        {"rule": "join", "inviter": "p1", "invitee": "p1", "as": "src",
         "within": ["p1", "p3"]},
        {"rule": "jO", "inviter": "p1", "invitee": "p3", "as": "trg"},
        # the value 0 is delivered to p3, both blocks complete
        {"rule": "cSO", "from": "src", "to": "trg"},
        {"rule": "succ", "owner": "p1", "roles": ["p1", "p3"]},
        {"rule": "succ", "owner": "p3", "roles": ["p1", "p3"]},
        # p1 crashes: block towards p2 fails, p2 gives up on round 1, and
        # p1's remaining two receive blocks fail
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p2"], "binders": 0},
        {"rule": "fail", "owner": "p2", "roles": ["p1", "p2"], "binders": 1},
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p2"], "binders": 1},
        {"rule": "fail", "owner": "p1", "roles": ["p1", "p3"], "binders": 1},
        # round 2: p2 abandons the sub-session towards p1 and completes the
        # one with p3
        {"rule": "fail", "owner": "p2", "roles": ["p1", "p2"], "binders": 0},
        {"rule": "subs", "within": ["p2", "p3"]},
        {"rule": "join", "inviter": "p2", "invitee": "p2", "as": "src"},
        {"rule": "jO", "inviter": "p2", "invitee": "p3", "as": "trg"},
        {"rule": "cSO", "from": "src", "to": "trg"},
        {"rule": "succ", "owner": "p2", "roles": ["p2", "p3"]},
        {"rule": "succ", "owner": "p3", "roles": ["p2", "p3"]},
        # round 3: symmetric, p3 towards p2, abandoning p1
        {"rule": "fail", "owner": "p3", "roles": ["p1", "p3"], "binders": 0},
        {"rule": "subs", "within": ["p2", "p3"]},
        {"rule": "join", "inviter": "p3", "invitee": "p3", "as": "src"},
        {"rule": "jO", "inviter": "p3", "invitee": "p2", "as": "trg"},
        {"rule": "cSO", "from": "src", "to": "trg"},
        {"rule": "succ", "owner": "p3", "roles": ["p2", "p3"]},
        {"rule": "succ", "owner": "p2", "roles": ["p2", "p3"]},
    ]


def shipped_fixtures() -> list[Fixture]:
    """The fixtures every acceptance property runs against."""
    return [
        gen_unreliable_link(),
        gen_rc(2),
        gen_rc(3),
        gen_rc_subsessions(3),
        gen_rc_nested_opt(3),
    ]
