"""Cortical processing units and the role-playing contract layer.

The numeric layer realizes the collective-coordination recurrence (own
candidate plus connectivity-weighted neighbour outputs), multimodal fusion,
an attention-style semantic blend, frontier-driven action proposal, and the
plan/semantic-state comparison that triggers replans. Numeric maps are fixed
deterministic realizations (hash embedders, convex blends); correctness
claims target the composition laws, not learned behaviour.

The contract layer parses and validates the leader / worker / provider JSON
documents emitted by a pluggable completion backend.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import (DimensionMismatch, NoExecutableNode, SchemaViolation,
                     UnknownModality, UnknownWorker)
from .protocol import (PayloadKind, collaboration_decision_problems,
                       decomposition_plan_problems, validate_schema)

EMBED_DIM = 16
INSPECT_THRESHOLD = 0.5


# ---------------------------------------------------------------------------
# deterministic embeddings
# ---------------------------------------------------------------------------

class HashEmbedder:
    """Deterministic document -> unit vector, stable across runs and hosts."""

    def __init__(self, dim: int = EMBED_DIM, namespace: str = ""):
        self.dim = dim
        self.namespace = namespace

    def embed(self, doc) -> np.ndarray:
        text = json.dumps(doc, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False, default=str)
        digest = hashlib.sha256(
            (self.namespace + "\x1f" + text).encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        vector = rng.standard_normal(self.dim)
        return vector / np.linalg.norm(vector)


# ---------------------------------------------------------------------------
# collective coordination (output recurrence over the connectivity matrix)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AgentOutput:
    vector: np.ndarray
    produced_at: int
    agent_id: str

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=float)
        object.__setattr__(self, "vector", vector)
        if not np.all(np.isfinite(vector)):
            raise ValueError(f"output of {self.agent_id} must be finite")


class ConnectivityMatrix:
    """Sparse block matrix F[i][j]: maps agent j's output into agent i's space.

    Diagonal blocks are forbidden; absent blocks are zero.
    """

    def __init__(self):
        self._blocks: dict = {}

    def connect(self, dst: str, src: str, block) -> "ConnectivityMatrix":
        if dst == src:
            raise ValueError("diagonal blocks are not allowed")
        self._blocks[(dst, src)] = np.asarray(block, dtype=float)
        return self

    def block(self, dst: str, src: str):
        return self._blocks.get((dst, src))

    def edges_into(self, dst: str) -> list:
        return [src for (d, src) in self._blocks if d == dst]


def combine_outputs(own: AgentOutput, neighbors: Mapping[str, AgentOutput],
                    connectivity: ConnectivityMatrix) -> AgentOutput:
    """own + sum of F[i][j] @ o_{t-1}^j over connected neighbours j."""
    total = own.vector.copy()
    for src in connectivity.edges_into(own.agent_id):
        if src not in neighbors:
            continue
        block = connectivity.block(own.agent_id, src)
        previous = neighbors[src].vector
        if block.shape[1] != previous.shape[0] or block.shape[0] != total.shape[0]:
            raise DimensionMismatch(
                f"block {own.agent_id}<-{src} is {block.shape}, outputs are "
                f"{total.shape[0]} and {previous.shape[0]}")
        total = total + block @ previous
    return AgentOutput(total, own.produced_at, own.agent_id)


@dataclass
class AgentContext:
    external_input: np.ndarray
    internal_state: np.ndarray
    shared_memory: np.ndarray
    prior_semantic: np.ndarray


# ---------------------------------------------------------------------------
# perception: multimodal fusion
# ---------------------------------------------------------------------------

def fuse_observations(observations: Mapping[str, object],
                      embedders: Mapping[str, HashEmbedder],
                      weights: Optional[Mapping[str, np.ndarray]] = None,
                      backbone: Optional[Callable] = None) -> np.ndarray:
    """z = backbone(sum_m W_m @ embed_m(obs_m)); identity defaults throughout."""
    total = None
    for modality in sorted(observations):
        if modality not in embedders:
            raise UnknownModality(f"no embedder registered for {modality!r}")
        embedded = embedders[modality].embed(observations[modality])
        if weights is not None and modality in weights:
            embedded = np.asarray(weights[modality], dtype=float) @ embedded
        total = embedded if total is None else total + embedded
    if total is None:
        raise UnknownModality("no observations to fuse")
    return backbone(total) if backbone is not None else total


# ---------------------------------------------------------------------------
# semantic interpretation: fixed-weight attention blend
# ---------------------------------------------------------------------------

def interpret_context(z_t, m_t, h_prev, return_weights: bool = False):
    """Convex attention-style blend of features, memory and prior semantics.

    Weights are a softmax over dot products with the mean query, so they sum
    to 1; equal inputs are a fixed point and zero inputs stay zero.
    """
    inputs = [np.asarray(v, dtype=float) for v in (z_t, m_t, h_prev)]
    dim = inputs[0].shape
    if any(v.shape != dim for v in inputs):
        raise DimensionMismatch(
            f"semantic inputs disagree: {[v.shape for v in inputs]}")
    query = sum(inputs) / 3.0
    scores = np.array([float(v @ query) / np.sqrt(inputs[0].shape[0])
                       for v in inputs])
    scores = scores - scores.max()
    weights = np.exp(scores)
    weights = weights / weights.sum()
    blended = sum(w * v for w, v in zip(weights, inputs))
    if return_weights:
        return blended, weights
    return blended


# ---------------------------------------------------------------------------
# inspection: plan / semantic-state comparison
# ---------------------------------------------------------------------------

class InspectionVerdict(str, Enum):
    CONTINUE = "Continue"
    REPLAN = "Replan"


def inspect_alignment(plan_vec, semantic_vec,
                      threshold: float = INSPECT_THRESHOLD):
    """c = plan - semantic (common prefix dims); Replan iff max |c| > threshold."""
    plan_vec = np.asarray(plan_vec, dtype=float)
    semantic_vec = np.asarray(semantic_vec, dtype=float)
    if plan_vec.ndim != 1 or semantic_vec.ndim != 1:
        raise DimensionMismatch("inspection inputs must be vectors")
    common = min(plan_vec.shape[0], semantic_vec.shape[0])
    if common == 0:
        raise DimensionMismatch("inspection inputs must be non-empty")
    monitoring = plan_vec[:common] - semantic_vec[:common]
    verdict = (InspectionVerdict.REPLAN
               if np.max(np.abs(monitoring)) > threshold
               else InspectionVerdict.CONTINUE)
    return monitoring, verdict


# ---------------------------------------------------------------------------
# manipulation: frontier-driven action proposal with continuity
# ---------------------------------------------------------------------------

class ManipulationUnit:
    """Proposes the next executable plan node and repeats it until feedback."""

    def __init__(self):
        self.current: Optional[str] = None       # action node id in flight
        self.completed: set = set()

    def act(self, dag) -> str:
        """Action label to execute now; sticky until complete() is called."""
        if self.current is not None:
            return dag.nodes[self.current].label
        frontier = dag.executable_actions(self.completed)
        if not frontier:
            raise NoExecutableNode("plan frontier is empty")
        self.current = frontier[0].node_id
        return frontier[0].label

    def complete(self, success: bool) -> None:
        if self.current is None:
            return
        if success:
            self.completed.add(self.current)
        self.current = None

    def reset(self) -> None:
        self.current = None
        self.completed = set()


# ---------------------------------------------------------------------------
# role contracts over a completion backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionPlan:
    difficulty: str
    subtasks: tuple

    @classmethod
    def from_doc(cls, doc: Mapping) -> "DecompositionPlan":
        problems = decomposition_plan_problems(dict(doc))
        if problems:
            raise SchemaViolation(problems)
        return cls(doc["difficulty"], tuple(dict(s) for s in doc["subtasks"]))

    def to_doc(self) -> dict:
        return {"difficulty": self.difficulty,
                "subtasks": [dict(s) for s in self.subtasks]}


@dataclass(frozen=True)
class CollaborationDecision:
    collaboration_required: bool
    requirement: tuple

    @classmethod
    def from_doc(cls, doc: Mapping) -> "CollaborationDecision":
        problems = collaboration_decision_problems(dict(doc))
        if problems:
            raise SchemaViolation(problems)
        return cls(doc["collaboration_required"],
                   tuple(dict(r) for r in doc["requirement"]))


@dataclass(frozen=True)
class ProviderResponse:
    response: str


def _parse_json(text: str, what: str) -> dict:
    try:
        return json.loads(text)
    except ValueError as exc:
        raise SchemaViolation(f"{what}: backend returned malformed JSON ({exc})") \
            from None


def plan_mission(mission: str, backend,
                 embedder: Optional[HashEmbedder] = None):
    """Leader decomposition: numeric plan vector plus the validated plan.

    The plan document is checked against the leader contract before anything
    downstream sees it; difficulty drives the pathway routing.
    """
    text = backend.complete("leader", mission)
    doc = _parse_json(text, "plan")
    plan = DecompositionPlan.from_doc(doc)
    embedder = embedder if embedder is not None else HashEmbedder(namespace="plan")
    return embedder.embed(plan.to_doc()), plan


def worker_reflect(subtask: Mapping, colleague_db: Mapping, backend
                   ) -> CollaborationDecision:
    """Self-reflection on a subtask: parsed, contract-valid, colleagues known."""
    text = backend.complete("worker", subtask["task_description"])
    decision = CollaborationDecision.from_doc(_parse_json(text, "decision"))
    for request in decision.requirement:
        if request["worker_id"] not in colleague_db:
            raise UnknownWorker(
                f"{request['worker_id']!r} is not in the colleague database")
    return decision


def provider_execute(request: Mapping, backend) -> ProviderResponse:
    """Execute a colleague-requested subtask and certify the result."""
    text = backend.complete("provider", request["request_detail"])
    doc = _parse_json(text, "response")
    validate_schema(PayloadKind.AGENT_RESPONSE, doc)
    if "response" not in doc:
        raise SchemaViolation("response: provider output missing response field")
    return ProviderResponse(doc["response"])
