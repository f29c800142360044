"""Hierarchical task planning over a DAG plus bounded state-transition trees.

A validated decomposition plan compiles to a directed acyclic graph of state
and action nodes (sequential by subtask id unless dependency annotations say
otherwise). From any symbolic state the planner expands an at-most-five-layer
state-transition tree against a declared transition model, scores each state
on goal proximity / transition possibility / safety / resource efficiency,
and selects the next action by discounted expected-value backup.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import CycleDetected, EmptyActionSet, SchemaViolation, UnknownAction

MAX_TREE_DEPTH = 5
DISCOUNT = 0.9
DEFAULT_SCORE_WEIGHTS = (0.5, 0.2, 0.2, 0.1)  # goal, transition, safety, resource
NOOP_ACTION = "noop"

_PROB_TOL = 1e-9


# ---------------------------------------------------------------------------
# state-transition trees
# ---------------------------------------------------------------------------

@dataclass
class StateNode:
    state: str
    score: float
    is_goal: bool
    transitions: list = field(default_factory=list)  # list[Transition]

    def to_doc(self) -> dict:
        return {
            "state": self.state,
            "score": self.score,
            "is_goal": self.is_goal,
            "transitions": [t.to_doc() for t in self.transitions],
        }


@dataclass
class Transition:
    action: str
    probability: float
    next_state: StateNode

    def to_doc(self) -> dict:
        return {
            "action": self.action,
            "probability": self.probability,
            "next_state": self.next_state.to_doc(),
        }


@dataclass
class StateTree:
    root: StateNode

    def to_doc(self) -> dict:
        return {"next_state": self.root.to_doc()}


@dataclass
class ActionChoice:
    selected_action: str
    reason: str

    def to_doc(self) -> dict:
        return {"selected_action": self.selected_action, "reason": self.reason}


def _node_problems(doc, where: str, layer: int, vocab, problems: list) -> None:
    if not isinstance(doc, dict):
        problems.append(f"{where}: expected a state node document")
        return
    required = {"state", "score", "is_goal", "transitions"}
    missing = required - set(doc)
    extra = set(doc) - required
    for name in sorted(missing):
        problems.append(f"{where}.{name}: missing required field")
    for name in sorted(extra):
        problems.append(f"{where}.{name}: unknown field")
    if missing:
        return
    if not isinstance(doc["state"], str) or not doc["state"]:
        problems.append(f"{where}.state: expected a non-empty string")
    score = doc["score"]
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        problems.append(f"{where}.score: expected a number")
    elif not 0.0 <= score <= 1.0:
        problems.append(f"{where}.score: {score} outside the 0-1 range")
    if not isinstance(doc["is_goal"], bool):
        problems.append(f"{where}.is_goal: expected a boolean")
    transitions = doc["transitions"]
    if not isinstance(transitions, list):
        problems.append(f"{where}.transitions: expected a list")
        return
    if doc.get("is_goal") is True and transitions:
        problems.append(f"{where}.transitions: goal states must have an empty "
                        "transitions array")
        return
    if transitions and layer >= MAX_TREE_DEPTH:
        problems.append(f"{where}.transitions: tree exceeds {MAX_TREE_DEPTH} "
                        "state layers")
        return
    total = 0.0
    for i, tr in enumerate(transitions):
        sub = f"{where}.transitions[{i}]"
        if not isinstance(tr, dict):
            problems.append(f"{sub}: expected a transition document")
            continue
        t_missing = {"action", "probability", "next_state"} - set(tr)
        t_extra = set(tr) - {"action", "probability", "next_state"}
        for name in sorted(t_missing):
            problems.append(f"{sub}.{name}: missing required field")
        for name in sorted(t_extra):
            problems.append(f"{sub}.{name}: unknown field")
        if t_missing:
            continue
        action = tr["action"]
        if not isinstance(action, str) or not action:
            problems.append(f"{sub}.action: expected a non-empty string")
        elif vocab is not None and action not in vocab:
            problems.append(f"{sub}.action: {action!r} not in available_actions")
        prob = tr["probability"]
        if not isinstance(prob, (int, float)) or isinstance(prob, bool):
            problems.append(f"{sub}.probability: expected a number")
        elif not 0.0 <= prob <= 1.0:
            problems.append(f"{sub}.probability: {prob} outside the 0-1 range")
        else:
            total += prob
        _node_problems(tr["next_state"], f"{sub}.next_state", layer + 1, vocab,
                       problems)
    if transitions and total > 1.0 + _PROB_TOL:
        problems.append(f"{where}.transitions: sibling probabilities sum to "
                        f"{total}, above 1")
    if transitions and total <= 0.0:
        problems.append(f"{where}.transitions: sibling probabilities sum to 0")


def state_tree_problems(doc, action_vocab: Optional[Iterable[str]] = None) -> list:
    """Violations of the state-tree contract; empty list when valid.

    Accepts either the wrapped form ``{"next_state": node}`` or a bare node.
    """
    vocab = set(action_vocab) if action_vocab is not None else None
    if isinstance(doc, dict) and set(doc) == {"next_state"}:
        doc = doc["next_state"]
    problems: list = []
    _node_problems(doc, "next_state", 1, vocab, problems)
    return problems


def _build_node(doc: dict) -> StateNode:
    transitions = doc["transitions"]
    total = sum(tr["probability"] for tr in transitions)
    node = StateNode(state=doc["state"], score=float(doc["score"]),
                     is_goal=bool(doc["is_goal"]))
    for tr in transitions:
        # sum <= 1 accepted on input, renormalized to 1 here
        prob = float(tr["probability"]) / total
        node.transitions.append(
            Transition(tr["action"], prob, _build_node(tr["next_state"])))
    return node


def validate_state_tree(document,
                        action_vocab: Optional[Iterable[str]] = None) -> StateTree:
    """Parse and check a state-tree document, renormalizing probabilities.

    Raises SchemaViolation enumerating every violation found.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except ValueError as exc:
            raise SchemaViolation(f"tree: malformed JSON ({exc})") from None
    problems = state_tree_problems(document, action_vocab)
    if problems:
        raise SchemaViolation(problems)
    if isinstance(document, dict) and set(document) == {"next_state"}:
        document = document["next_state"]
    return StateTree(root=_build_node(document))


# ---------------------------------------------------------------------------
# state scoring
# ---------------------------------------------------------------------------

def _clamp01(value: float) -> float:
    return 0.0 if value < 0.0 else 1.0 if value > 1.0 else value


def score_state(state, goal, safety_flags: Sequence[str] = (),
                resource_cost: float = 0.0, *,
                goal_proximity: Optional[float] = None,
                transition_possibility: float = 1.0,
                weights: Sequence[float] = DEFAULT_SCORE_WEIGHTS) -> float:
    """Weighted 0-1 score over the four planning criteria.

    ``goal_proximity`` defaults to exact-match (1.0 when state equals goal,
    else 0.0); graded callers pass their own. Raised safety flags zero the
    safety factor. ``resource_cost`` of 0 means full efficiency.
    """
    if goal_proximity is None:
        goal_proximity = 1.0 if state == goal else 0.0
    factors = (
        _clamp01(goal_proximity),
        _clamp01(transition_possibility),
        0.0 if safety_flags else 1.0,
        _clamp01(1.0 - resource_cost),
    )
    raw = math.fsum(w * f for w, f in zip(weights, factors))
    return _clamp01(raw)


# ---------------------------------------------------------------------------
# declared transition models and tree generation
# ---------------------------------------------------------------------------

@dataclass
class TransitionModel:
    """A scenario's declared symbolic dynamics, consumed by the tree generator.

    ``transitions`` maps a state label to (action, probability, next state)
    outcome triples; probabilities are per action and sum to 1 within one
    action. ``proximity`` grades distance to goal in [0, 1].
    """

    transitions: Mapping[str, Sequence[tuple]]
    goal_states: frozenset
    proximity: Mapping[str, float] = field(default_factory=dict)
    unsafe_states: frozenset = frozenset()
    step_cost: float = 0.1

    def is_goal(self, state: str) -> bool:
        return state in self.goal_states

    def proximity_of(self, state: str) -> float:
        if state in self.proximity:
            return self.proximity[state]
        return 1.0 if self.is_goal(state) else 0.0


def hop_proximity(transitions: Mapping[str, Sequence[tuple]],
                  goal_states: Iterable[str]) -> dict:
    """Proximity grading 1/(1+d) where d is hop distance to the nearest goal."""
    reverse: dict = {}
    states = set(transitions)
    for state, outs in transitions.items():
        for _, _, nxt in outs:
            states.add(nxt)
            reverse.setdefault(nxt, set()).add(state)
    dist = {g: 0 for g in goal_states}
    frontier = deque(goal_states)
    while frontier:
        state = frontier.popleft()
        for prev in reverse.get(state, ()):
            if prev not in dist:
                dist[prev] = dist[state] + 1
                frontier.append(prev)
    return {s: 1.0 / (1.0 + dist[s]) if s in dist else 0.0 for s in states}


def generate_state_tree(task_desc: str, current_state: str,
                        available_actions: Sequence[str],
                        observations=None, htn=None, *,
                        model: Optional[TransitionModel] = None,
                        backend=None,
                        max_depth: int = MAX_TREE_DEPTH,
                        exclude_actions: Iterable[str] = ()) -> StateTree:
    """Expand the reachable state tree from ``current_state``.

    Expansion uses the scenario's declared transition model, or a completion
    backend returning a tree document. Unsafe branches and unavailable
    actions are pruned before scoring; the returned tree always passes
    :func:`validate_state_tree`.
    """
    if not available_actions:
        raise EmptyActionSet(f"no actions available for {task_desc!r}")
    if backend is not None:
        text = backend.complete("state_tree", {
            "task_description": task_desc,
            "current_state": current_state,
            "available_actions": list(available_actions),
            "observations": observations,
            "htn": htn,
        })
        return validate_state_tree(text, available_actions)
    if model is None:
        raise EmptyActionSet("neither a transition model nor a backend was given")

    usable = [a for a in available_actions if a not in set(exclude_actions)]
    if not usable:
        raise EmptyActionSet(f"all actions excluded for {task_desc!r}")
    max_depth = min(max_depth, MAX_TREE_DEPTH)

    def expand(state: str, layer: int, inbound_prob: float) -> StateNode:
        is_goal = model.is_goal(state)
        node = StateNode(
            state=state,
            score=score_state(
                state, None,
                safety_flags=("unsafe",) if state in model.unsafe_states else (),
                resource_cost=(layer - 1) * model.step_cost,
                goal_proximity=model.proximity_of(state),
                transition_possibility=inbound_prob,
            ),
            is_goal=is_goal,
        )
        if is_goal or layer >= max_depth:
            return node
        outcomes = [(a, p, nxt) for (a, p, nxt) in model.transitions.get(state, ())
                    if a in usable and nxt not in model.unsafe_states]
        if not outcomes:
            return node
        # joint branch probability under a uniform prior over candidate actions,
        # so siblings across actions still sum to 1
        n_actions = len({a for a, _, _ in outcomes})
        for action, prob, nxt in outcomes:
            branch_p = prob / n_actions
            node.transitions.append(
                Transition(action, branch_p, expand(nxt, layer + 1, prob)))
        return node

    root = expand(current_state, 1, 1.0)
    tree_doc = {"next_state": root.to_doc()}
    return validate_state_tree(tree_doc, available_actions)


# ---------------------------------------------------------------------------
# action selection (discounted expected-value backup)
# ---------------------------------------------------------------------------

def subtree_value(node: StateNode, gamma: float = DISCOUNT) -> float:
    """V(node) = score for leaves/goals, else score + gamma * E[V(child)]."""
    if node.is_goal or not node.transitions:
        return node.score
    expected = sum(t.probability * subtree_value(t.next_state, gamma)
                   for t in node.transitions)
    return node.score + gamma * expected


def select_action(tree: StateTree, available_actions: Sequence[str],
                  gamma: float = DISCOUNT) -> ActionChoice:
    """Pick the root action with the highest expected subtree value.

    Ties break toward the lexicographically smallest action name. A goal
    root yields the no-op sentinel (exempt from the vocabulary check).
    """
    root = tree.root
    if root.is_goal:
        return ActionChoice(NOOP_ACTION,
                            "root state satisfies the goal; no action required")
    if not root.transitions:
        raise EmptyActionSet(f"root state {root.state!r} has no transitions")
    values: dict = {}
    for tr in root.transitions:
        q = tr.probability * subtree_value(tr.next_state, gamma)
        values[tr.action] = values.get(tr.action, 0.0) + q
    best = max(values.values())
    selected = min(a for a, v in values.items() if v == best)
    if selected not in available_actions:
        raise SchemaViolation(
            f"selected_action: {selected!r} not in available_actions")
    return ActionChoice(
        selected,
        f"highest expected value {best:.6f} under discounted backup "
        f"(gamma={gamma})")


def validate_action_choice(document, available_actions: Sequence[str]) -> ActionChoice:
    """Parse a selector output document; the action must be available."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except ValueError as exc:
            raise SchemaViolation(f"choice: malformed JSON ({exc})") from None
    problems: list = []
    if not isinstance(document, dict):
        raise SchemaViolation("choice: expected a document")
    for name in sorted({"selected_action", "reason"} - set(document)):
        problems.append(f"{name}: missing required field")
    for name in sorted(set(document) - {"selected_action", "reason"}):
        problems.append(f"{name}: unknown field")
    if not problems:
        action = document["selected_action"]
        if not isinstance(action, str) or not action:
            problems.append("selected_action: expected a non-empty string")
        elif action != NOOP_ACTION and action not in available_actions:
            problems.append(f"selected_action: {action!r} not in available_actions")
        if not isinstance(document["reason"], str) or not document["reason"]:
            problems.append("reason: expected a non-empty string")
    if problems:
        raise SchemaViolation(problems)
    return ActionChoice(document["selected_action"], document["reason"])


# ---------------------------------------------------------------------------
# HTN DAG compilation
# ---------------------------------------------------------------------------

START_STATE = "start_state"


@dataclass(frozen=True)
class DagNode:
    node_id: str
    kind: str  # "state" | "action"
    label: str


@dataclass
class HtnDag:
    nodes: dict            # node_id -> DagNode
    edges: list            # (src_id, dst_id)
    root: str
    execution_order: list  # action node ids in a valid topological order

    def action_labels(self) -> list:
        return [self.nodes[nid].label for nid in self.execution_order]

    def executable_actions(self, completed: Iterable[str]) -> list:
        """Action nodes whose predecessor states are all reached.

        A state is reached when it is the root or its producing action is in
        ``completed`` (action node ids).
        """
        done = set(completed)
        produced_by = {dst: src for (src, dst) in self.edges
                       if self.nodes[src].kind == "action"}
        reached = {self.root}
        for nid, node in self.nodes.items():
            if node.kind == "state" and produced_by.get(nid) in done:
                reached.add(nid)
        preds: dict = {}
        for src, dst in self.edges:
            preds.setdefault(dst, []).append(src)
        out = []
        for nid in self.execution_order:
            if nid in done:
                continue
            if all(p in reached for p in preds.get(nid, [])):
                out.append(self.nodes[nid])
        return out


def _toposort(order_ids: list, deps: dict) -> list:
    indegree = {sid: len(deps[sid]) for sid in order_ids}
    out_edges: dict = {sid: [] for sid in order_ids}
    for sid in order_ids:
        for dep in deps[sid]:
            out_edges[dep].append(sid)
    ready = deque(sid for sid in order_ids if indegree[sid] == 0)
    result = []
    while ready:
        sid = ready.popleft()
        result.append(sid)
        for nxt in out_edges[sid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if len(result) != len(order_ids):
        stuck = sorted(sid for sid in order_ids if indegree[sid] > 0)
        raise CycleDetected(f"dependency cycle through {stuck}")
    return result


def build_htn_dag(plan: Mapping, action_vocab: Optional[Iterable[str]] = None) -> HtnDag:
    """Compile a validated decomposition plan into a state/action DAG.

    Subtasks chain sequentially by subtask id unless they carry explicit
    ``depends_on`` annotations. Each subtask becomes one action node between
    two state nodes; the root state is ``start_state``.
    """
    subtasks = sorted(plan["subtasks"], key=lambda s: s["subtask_id"])
    vocab = set(action_vocab) if action_vocab is not None else None
    ids = [s["subtask_id"] for s in subtasks]
    by_id = {s["subtask_id"]: s for s in subtasks}

    deps: dict = {}
    for i, subtask in enumerate(subtasks):
        sid = subtask["subtask_id"]
        if "depends_on" in subtask:
            for dep in subtask["depends_on"]:
                if dep not in by_id:
                    raise SchemaViolation(
                        f"depends_on: {dep!r} is not a subtask in this plan")
            deps[sid] = list(subtask["depends_on"])
        else:
            deps[sid] = [ids[i - 1]] if i > 0 else []
    order = _toposort(ids, deps)

    nodes = {"s0": DagNode("s0", "state", START_STATE)}
    edges: list = []
    execution_order: list = []
    for sid in order:
        subtask = by_id[sid]
        label = subtask.get("action", subtask["task_description"])
        if vocab is not None and label not in vocab:
            raise UnknownAction(f"{label!r} is not in the action vocabulary")
        action_id = f"a:{sid}"
        state_id = f"s:{sid}"
        nodes[action_id] = DagNode(action_id, "action", label)
        nodes[state_id] = DagNode(state_id, "state", f"{sid}_done")
        sources = [f"s:{dep}" for dep in deps[sid]] or ["s0"]
        for src in sources:
            edges.append((src, action_id))
        edges.append((action_id, state_id))
        execution_order.append(action_id)
    return HtnDag(nodes=nodes, edges=edges, root="s0",
                  execution_order=execution_order)
