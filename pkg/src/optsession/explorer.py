"""Trace execution under failure policies and exhaustive exploration.

run() drives a single seeded execution: non-failure steps are chosen
uniformly, failures are injected per policy.  explore() builds the full
reduction graph over canonical states and reports whether every maximal
path terminates at the empty process (completion despite arbitrary
failures), whether non-terminated stuck states exist (progress), and
whether a path without any failure reaches the end (reliance).

State identity is the canonical form modulo structural congruence.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .envreduction import matching_env
from .printer import print_process
from .reduction import RedexStep, canonical_key, canonicalize, enabled_steps, state_key
from .syntax import PEnd, Process
from .typecheck import GlobalEnv, SessionEnv, typecheck, TypeCheckError


class ScriptError(Exception):
    pass


class BudgetExceededError(Exception):
    pass


# ---------------------------------------------------------------------------
# failure policies


@dataclass(frozen=True)
class NeverFail:
    pass


@dataclass(frozen=True)
class AlwaysOffer:
    """Adversarial: failure steps compete uniformly with the rest."""


@dataclass(frozen=True)
class Probabilistic:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("probability must lie in [0, 1]")


@dataclass(frozen=True)
class Scripted:
    """A full schedule: one selector per step (see match_selector)."""
    selectors: tuple[dict, ...]

    @staticmethod
    def from_file(path) -> "Scripted":
        with open(path, encoding="utf-8") as fh:
            return Scripted(tuple(json.load(fh)))


FailurePolicy = NeverFail | AlwaysOffer | Probabilistic | Scripted


def match_selector(selector: dict, step: RedexStep) -> bool:
    """Selectors pick a step by rule name plus metadata keys.

    Supported keys: rule; chan/session/from/to/label/owner/inviter/
    invitee/as/sub/parent (matched exactly against the step info); roles
    and values (lists); binders (int); within (one enclosing block's
    participant list).
    """
    info = step.info_dict()
    if selector.get("rule") != step.rule:
        return False
    for key in ("chan", "session", "from", "to", "label", "owner",
                "inviter", "invitee", "as", "sub", "parent"):
        if key in selector and info.get(key) != selector[key]:
            return False
    if "binders" in selector and info.get("binders") != selector["binders"]:
        return False
    if "roles" in selector and tuple(sorted(selector["roles"])) != info.get("roles"):
        return False
    if "values" in selector and tuple(selector["values"]) != info.get("values"):
        return False
    if "within" in selector:
        want = tuple(sorted(selector["within"]))
        if want not in info.get("within", ()):
            return False
    return True


# ---------------------------------------------------------------------------
# traces


@dataclass
class Trace:
    initial: Process
    steps: list[RedexStep]
    final: Process
    verdict: str  # terminated | stuck | budget-exceeded
    final_values: dict[str, tuple[str, ...]] = field(default_factory=dict)
    env_trace: Optional[list] = None

    def as_dict(self) -> dict:
        return {
            "initial": print_process(self.initial),
            "steps": [
                {"rule": s.rule, "position": list(s.position),
                 "substitution": dict(s.subst), "info": dict(s.info)}
                for s in self.steps
            ],
            "final": print_process(self.final),
            "verdict": self.verdict,
            "finalValues": {k: list(v) for k, v in self.final_values.items()},
        }


def _record_values(values: dict, step: RedexStep):
    if step.rule in ("succ", "fail"):
        info = step.info_dict()
        if info.get("binders"):
            values[info["owner"]] = info["values"]


def run(p: Process, policy: FailurePolicy = AlwaysOffer(), seed: int = 0,
        budget: int = 10_000,
        env: Optional[tuple[GlobalEnv, SessionEnv]] = None) -> Trace:
    """Execute one schedule; the verdict is terminated, stuck, or
    budget-exceeded.  With env given, the matching session-environment
    trace is recorded alongside (and typability re-checked each step)."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    rng = random.Random(seed)
    fail_rng = random.Random(policy.seed) if isinstance(policy, Probabilistic) else None
    state = canonicalize(p)
    initial = state
    steps_taken: list[RedexStep] = []
    values: dict[str, tuple[str, ...]] = {}
    env_trace = [] if env is not None else None
    delta = env[1] if env is not None else None
    script_pos = 0

    def advance(step: RedexStep):
        nonlocal state, delta
        if env is not None:
            env_step = matching_env(env[0], state, delta, step)
            env_trace.append(env_step)
            delta = env_step.result
        steps_taken.append(step)
        _record_values(values, step)
        state = step.result

    while len(steps_taken) < budget:
        if isinstance(state, PEnd):
            return Trace(initial, steps_taken, state, "terminated", values, env_trace)
        steps = enabled_steps(state)
        if not steps:
            return Trace(initial, steps_taken, state, "stuck", values, env_trace)
        if isinstance(policy, Scripted):
            if script_pos >= len(policy.selectors):
                return Trace(initial, steps_taken, state, "stuck", values, env_trace)
            sel = policy.selectors[script_pos]
            matches = [s for s in steps if match_selector(sel, s)]
            if len(matches) != 1:
                raise ScriptError(
                    f"selector {sel} matched {len(matches)} steps at step "
                    f"{script_pos}; state: {print_process(state)}")
            script_pos += 1
            advance(matches[0])
            continue
        fails = [s for s in steps if s.rule == "fail"]
        rest = [s for s in steps if s.rule != "fail"]
        if isinstance(policy, NeverFail):
            if not rest:
                return Trace(initial, steps_taken, state, "stuck", values, env_trace)
            advance(rng.choice(rest))
            continue
        if isinstance(policy, Probabilistic):
            fired = False
            for s in list(fails):
                if len(steps_taken) >= budget:
                    break
                if fail_rng.random() < policy.p:
                    # positions shift after each failure; re-locate by metadata
                    current = [c for c in enabled_steps(state)
                               if c.rule == "fail" and c.info == s.info]
                    if current:
                        advance(current[0])
                        fired = True
            if fired:
                continue
            if not rest:
                # all that is left is failing blocks
                advance(rng.choice(fails))
                continue
            advance(rng.choice(rest))
            continue
        # AlwaysOffer
        advance(rng.choice(steps))
    return Trace(initial, steps_taken, state, "budget-exceeded", values, env_trace)


# ---------------------------------------------------------------------------
# exhaustive exploration


@dataclass
class ReductionGraph:
    states: dict[str, int]
    initial: int
    edges: list[tuple[int, RedexStep, int]]
    terminals: set[int]
    end_state: Optional[int]
    complete: bool
    unfold_budget: int
    truncated_states: int = 0

    @property
    def all_terminals_end(self) -> bool:
        return self.complete and all(t == self.end_state for t in self.terminals)

    def stuck_states(self) -> set[int]:
        return {t for t in self.terminals if t != self.end_state}

    def reliance_path_exists(self) -> bool:
        """Some execution without any failure resolves every block (ends
        at the empty process)."""
        if self.end_state is None:
            return False
        succ: dict[int, list[int]] = {}
        for a, step, b in self.edges:
            if step.rule != "fail":
                succ.setdefault(a, []).append(b)
        seen = {self.initial}
        frontier = [self.initial]
        while frontier:
            x = frontier.pop()
            if x == self.end_state:
                return True
            for y in succ.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return False

    def report(self) -> dict:
        return {
            "states": len(self.states),
            "edges": len(self.edges),
            "terminals": len(self.terminals),
            "complete": self.complete,
            "allTerminalsEnd": self.all_terminals_end if self.complete else None,
            "stuckStates": len(self.stuck_states()),
            "reliancePathExists": self.reliance_path_exists(),
            "truncatedStates": self.truncated_states,
            "verdict": "complete" if self.complete else "inconclusive",
        }


def explore(p: Process, include_fail: bool = True, unfold_budget: int = 0,
            max_states: int = 2_000_000,
            on_state: Optional[Callable[[Process], None]] = None) -> ReductionGraph:
    """Breadth-first closure of the reduction relation over canonical states.

    include_fail=False explores the never-fail subgraph.  Recursion
    unfolding along any path is bounded by unfold_budget; exceeding it (or
    max_states) yields an incomplete graph marked inconclusive.
    """
    start = canonicalize(p)
    start_key = state_key(start)
    states = {start_key: 0}
    proc_of = [start]
    unfold_depth = [0]
    edges: list[tuple[int, RedexStep, int]] = []
    terminals: set[int] = set()
    end_state: Optional[int] = None
    complete = True
    truncated = 0
    if isinstance(start, PEnd):
        end_state = 0
    frontier = [0]
    while frontier:
        new_frontier: list[int] = []
        for sid in frontier:
            proc = proc_of[sid]
            if on_state is not None:
                on_state(proc)
            steps = enabled_steps(proc)
            if not include_fail:
                steps = [s for s in steps if s.rule != "fail"]
            if not steps:
                terminals.add(sid)
                continue
            for step in steps:
                depth = unfold_depth[sid] + step.unfolds
                if depth > unfold_budget:
                    complete = False
                    truncated += 1
                    continue
                key = state_key(step.result)
                nid = states.get(key)
                if nid is None:
                    if len(states) >= max_states:
                        complete = False
                        truncated += 1
                        continue
                    nid = len(proc_of)
                    states[key] = nid
                    proc_of.append(step.result)
                    unfold_depth.append(depth)
                    if isinstance(step.result, PEnd):
                        end_state = nid
                    new_frontier.append(nid)
                else:
                    if depth < unfold_depth[nid]:
                        unfold_depth[nid] = depth
                edges.append((sid, step, nid))
        frontier = new_frontier
    return ReductionGraph(states, 0, edges, terminals, end_state, complete,
                          unfold_budget, truncated)


def reliance_search(p: Process, max_states: int = 500_000) -> bool:
    """Directed search for a failure-free path to the empty process."""
    start = canonicalize(p)
    seen = {state_key(start)}
    frontier = [start]
    while frontier:
        proc = frontier.pop()
        if isinstance(proc, PEnd):
            return True
        for step in enabled_steps(proc):
            if step.rule == "fail":
                continue
            key = state_key(step.result)
            if key in seen:
                continue
            if len(seen) >= max_states:
                raise BudgetExceededError("reliance search budget exhausted")
            seen.add(key)
            frontier.append(step.result)
    return False


# ---------------------------------------------------------------------------
# subject-reduction property runs


@dataclass
class SubjectReductionReport:
    walks: int
    steps_checked: int
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_subject_reduction(gamma: GlobalEnv, p: Process, delta: SessionEnv,
                            samples: int = 50, depth: int = 12,
                            seed: int = 0) -> SubjectReductionReport:
    """Random walks re-deriving the session environment at every step.

    Every walk starts at the (well-typed) initial state; after each process
    step a matching environment step is computed and typability re-checked.
    Violations are collected, not raised.
    """
    typecheck(gamma, p, delta)
    rng = random.Random(seed)
    violations: list[dict] = []
    checked = 0
    for walk in range(samples):
        state = canonicalize(p)
        env = delta
        trail: list[str] = []
        for _ in range(depth):
            if isinstance(state, PEnd):
                break
            steps = enabled_steps(state)
            if not steps:
                break
            step = rng.choice(steps)
            trail.append(step.render())
            try:
                env_step = matching_env(gamma, state, env, step)
            except Exception as e:  # noqa: BLE001 - reported as a violation
                violations.append({
                    "walk": walk, "trail": list(trail),
                    "state": print_process(state), "error": str(e),
                })
                break
            env = env_step.result
            state = step.result
            checked += 1
    return SubjectReductionReport(samples, checked, violations)
