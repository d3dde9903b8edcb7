"""Well-formedness of global types: kinding, projectability, linearity.

Violations are collected as data (WfReport), never raised.  The linearity
check is deliberately conservative: inside a parallel composition the two
components must not contain communications with an identical
(sender, receiver, label) triple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    GCall, GChoice, GCom, GDecl, GEnd, GOptBlock, GPar, GRec, GVar,
    GlobalType, Kind, KindArrow, KindProtocol, KindRole, KindVal, Label, Name,
    Role, free_roles, gtype_alpha_eq,
)
from .projection import restrict


@dataclass
class KindEnv:
    """Kind bindings for names, roles, and protocol identifiers."""

    bindings: dict = field(default_factory=dict)

    def bind(self, ident, kind: Kind) -> "KindEnv":
        if ident in self.bindings and self.bindings[ident] != kind:
            raise ValueError(f"conflicting kind binding for {ident}")
        out = KindEnv(dict(self.bindings))
        out.bindings[ident] = kind
        return out

    def get(self, ident):
        return self.bindings.get(ident)


@dataclass
class WfReport:
    violations: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, location: str, message: str):
        self.violations.append((rule, location, message))

    def extend(self, other: "WfReport"):
        self.violations.extend(other.violations)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"rule": r, "location": l, "message": m} for r, l, m in self.violations
            ],
        }

    def render(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"[{r}] at {l}: {m}" for r, l, m in self.violations)


# ---------------------------------------------------------------------------
# kinding


def check_kinding(g: GlobalType, env: KindEnv) -> WfReport:
    """Every payload must carry a value kind, every protocol an arrow kind.

    Role slots hold Role identifiers by construction of the AST; the check
    still reports role/value names whose declared kinds conflict with use.
    """
    report = WfReport()
    _kind_walk(g, env, report, "", {})
    return report


def _is_val(k: Kind) -> bool:
    return isinstance(k, KindVal)


def _check_params(ps, env: KindEnv, report: WfReport, loc: str):
    for n, k in ps:
        if not _is_val(k):
            report.add("kind-payload", loc, f"payload {n.id} has non-value kind")
        declared = env.get(n)
        if declared is not None and _is_val(k) and declared != k:
            report.add("kind-conflict", loc, f"{n.id} declared {declared} but used as {k}")


def _kind_walk(g: GlobalType, env: KindEnv, report: WfReport, loc: str, protos: dict):
    match g:
        case GEnd() | GVar(_):
            return
        case GCom(_, _, branches):
            for i, b in enumerate(branches):
                here = f"{loc}/com.{b.label.id}"
                _check_params(b.params, env, report, here)
                _kind_walk(b.cont, env, report, here, protos)
        case GOptBlock(parts, body, cont):
            for r, defaults in parts:
                _check_params(defaults, env, report, f"{loc}/opt[{r.id}]")
            _kind_walk(body, env, report, f"{loc}/opt.body", protos)
            _kind_walk(cont, env, report, f"{loc}/opt.cont", protos)
        case GDecl(proto, internal, args, external, body, cont):
            here = f"{loc}/let.{proto.id}"
            _check_params(args, env, report, here)
            sig = KindArrow(
                tuple([KindRole()] * len(internal)) + tuple(k for _, k in args),
                KindProtocol(),
            )
            declared = env.get(proto)
            if declared is not None and declared != sig:
                report.add("kind-proto", here, f"protocol {proto.id} kind mismatch")
            protos = {**protos, proto: (internal, args, external)}
            _kind_walk(body, env, report, f"{here}.body", protos)
            _kind_walk(cont, env, report, f"{here}.cont", protos)
        case GCall(caller, proto, roles, args, cont):
            here = f"{loc}/call.{proto.id}"
            if proto not in protos:
                declared = env.get(proto)
                if not isinstance(declared, KindArrow) or declared.result != KindProtocol():
                    report.add("kind-proto", here,
                               f"call of {proto.id} which is not a declared protocol")
                    _kind_walk(cont, env, report, here, protos)
                    return
                n_roles = sum(1 for a in declared.args if isinstance(a, KindRole))
                arg_kinds = [a for a in declared.args if not isinstance(a, KindRole)]
            else:
                internal, sig_args, _ = protos[proto]
                n_roles = len(internal)
                arg_kinds = [k for _, k in sig_args]
            if len(roles) != n_roles:
                report.add("kind-arity", here,
                           f"{proto.id} expects {n_roles} roles, got {len(roles)}")
            if len(args) != len(arg_kinds):
                report.add("kind-arity", here,
                           f"{proto.id} expects {len(arg_kinds)} arguments, got {len(args)}")
            else:
                for a, k in zip(args, arg_kinds):
                    declared = env.get(a)
                    if declared is not None and declared != k:
                        report.add("kind-conflict", here,
                                   f"argument {a.id} has kind {declared}, expected {k}")
            _kind_walk(cont, env, report, here, protos)
        case GChoice(l, _, r) | GPar(l, r):
            _kind_walk(l, env, report, f"{loc}/left", protos)
            _kind_walk(r, env, report, f"{loc}/right", protos)
        case GRec(_, body):
            _kind_walk(body, env, report, f"{loc}/rec", protos)


# ---------------------------------------------------------------------------
# projectability


def check_projectable(g: GlobalType) -> WfReport:
    report = WfReport()
    _proj_walk(g, report, "")
    return report


def _proj_walk(g: GlobalType, report: WfReport, loc: str):
    match g:
        case GEnd() | GVar(_):
            return
        case GCom(s, r, branches):
            if len(branches) > 1:
                bystanders = free_roles(g) - {s, r}
                for role in sorted(bystanders, key=lambda x: x.id):
                    first = restrict(branches[0].cont, role)
                    for b in branches[1:]:
                        if not gtype_alpha_eq(first, restrict(b.cont, role)):
                            report.add(
                                "proj-com-agree", f"{loc}/com",
                                f"branches disagree when restricted to bystander {role.id}")
                            break
            for b in branches:
                _proj_walk(b.cont, report, f"{loc}/com.{b.label.id}")
        case GChoice(l, chooser, r):
            others = (free_roles(l) | free_roles(r)) - {chooser}
            for role in sorted(others, key=lambda x: x.id):
                if not gtype_alpha_eq(restrict(l, role), restrict(r, role)):
                    report.add("proj-choice-agree", f"{loc}/choice",
                               f"choice branches disagree for role {role.id}")
            _proj_walk(l, report, f"{loc}/choice.left")
            _proj_walk(r, report, f"{loc}/choice.right")
        case GPar(l, r):
            shared = free_roles(l) & free_roles(r)
            if shared:
                names = ", ".join(sorted(x.id for x in shared))
                report.add("proj-par-disjoint", f"{loc}/par",
                           f"parallel components share roles: {names}")
            _proj_walk(l, report, f"{loc}/par.left")
            _proj_walk(r, report, f"{loc}/par.right")
        case GOptBlock(parts, body, cont):
            allowed = {r for r, _ in parts}
            stray = free_roles(body) - allowed
            if stray:
                names = ", ".join(sorted(x.id for x in stray))
                report.add("proj-opt-roles", f"{loc}/opt",
                           f"roles in block body are not participants: {names}")
            _proj_walk(body, report, f"{loc}/opt.body")
            _proj_walk(cont, report, f"{loc}/opt.cont")
        case GDecl(proto, internal, _, external, body, cont):
            allowed = set(internal) | set(external)
            stray = free_roles(body) - allowed
            if stray:
                names = ", ".join(sorted(x.id for x in stray))
                report.add("proj-decl-roles", f"{loc}/let.{proto.id}",
                           f"roles in protocol body are not declared: {names}")
            _proj_walk(body, report, f"{loc}/let.{proto.id}.body")
            _proj_walk(cont, report, f"{loc}/let.{proto.id}.cont")
        case GCall(_, _, _, _, cont):
            _proj_walk(cont, report, f"{loc}/call")
        case GRec(_, body):
            _proj_walk(body, report, f"{loc}/rec")


# ---------------------------------------------------------------------------
# linearity (conservative)


def check_linearity(g: GlobalType) -> WfReport:
    report = WfReport()
    _lin_walk(g, report, "")
    return report


def _com_triples(g: GlobalType) -> set[tuple[Role, Role, Label]]:
    match g:
        case GEnd() | GVar(_):
            return set()
        case GCom(s, r, branches):
            out = {(s, r, b.label) for b in branches}
            for b in branches:
                out |= _com_triples(b.cont)
            return out
        case GOptBlock(_, body, cont):
            return _com_triples(body) | _com_triples(cont)
        case GDecl(_, _, _, _, body, cont):
            return _com_triples(body) | _com_triples(cont)
        case GCall(_, _, _, _, cont):
            return _com_triples(cont)
        case GChoice(l, _, r) | GPar(l, r):
            return _com_triples(l) | _com_triples(r)
        case GRec(_, body):
            return _com_triples(body)
    raise TypeError(f"not a global type: {g!r}")


def _lin_walk(g: GlobalType, report: WfReport, loc: str):
    match g:
        case GEnd() | GVar(_):
            return
        case GPar(l, r):
            shared = _com_triples(l) & _com_triples(r)
            for s, rr, lab in sorted(shared, key=lambda t: (t[0].id, t[1].id, t[2].id)):
                report.add("linearity", f"{loc}/par",
                           f"both components communicate {s.id} -> {rr.id} : {lab.id}")
            _lin_walk(l, report, f"{loc}/par.left")
            _lin_walk(r, report, f"{loc}/par.right")
        case GCom(_, _, branches):
            for b in branches:
                _lin_walk(b.cont, report, f"{loc}/com.{b.label.id}")
        case GOptBlock(_, body, cont):
            _lin_walk(body, report, f"{loc}/opt.body")
            _lin_walk(cont, report, f"{loc}/opt.cont")
        case GDecl(_, _, _, _, body, cont):
            _lin_walk(body, report, f"{loc}/let.body")
            _lin_walk(cont, report, f"{loc}/let.cont")
        case GCall(_, _, _, _, cont):
            _lin_walk(cont, report, f"{loc}/call")
        case GChoice(l, _, r):
            _lin_walk(l, report, f"{loc}/choice.left")
            _lin_walk(r, report, f"{loc}/choice.right")
        case GRec(_, body):
            _lin_walk(body, report, f"{loc}/rec")


def well_formed(g: GlobalType, env: KindEnv) -> WfReport:
    """Kinding, projectability, and the conservative linearity check."""
    report = check_kinding(g, env)
    report.extend(check_projectable(g))
    report.extend(check_linearity(g))
    return report
