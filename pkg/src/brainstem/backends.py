"""Completion backends: a deterministic scripted table and a remote adapter.

Every agent role talks text-in/text-out. The scripted backend maps
(role, scenario key) to canned contract-conformant documents so whole runs
are reproducible without any model in the loop; the remote adapter posts the
rendered prompt to a completion endpoint with bounded retries.
"""

from __future__ import annotations

import json
import time
import urllib.error
import urllib.request
from typing import Mapping, Optional

from .errors import BackendError

MAX_RETRIES = 3


def _plan(difficulty, *subtasks):
    return {"difficulty": difficulty, "subtasks": list(subtasks)}


def _subtask(sid, worker, desc, focus, action=None, depends_on=None):
    doc = {"subtask_id": sid, "assigned_worker": worker,
           "task_description": desc, "focus": focus}
    if action is not None:
        doc["action"] = action
    if depends_on is not None:
        doc["depends_on"] = depends_on
    return doc


LEADER_PLANS = {
    "walk to the desk": _plan("low"),
    "fetch an apple on the desk": _plan(
        "medium",
        _subtask("ST1", "Worker_3", "fetch the apple from the desk",
                 ["grasping", "reach planning", "care"])),
    "make a chicken sandwich in the kitchen": _plan(
        "high",
        _subtask("ST1", "Worker_1", "gather sandwich ingredients from the fridge",
                 ["perception", "retrieval", "inventory"]),
        _subtask("ST2", "Worker_3", "assemble the sandwich on the counter",
                 ["manipulation", "sequencing", "hygiene"], depends_on=["ST1"]),
        _subtask("ST3", "Worker_5", "plate and deliver the sandwich",
                 ["delivery", "presentation", "timing"], depends_on=["ST2"])),
    # benchmark missions
    "grab cube from cabinet": _plan(
        "medium",
        _subtask("ST1", "Worker_3", "open the cabinet and retrieve the cube",
                 ["localization", "grasping", "containers"],
                 action="retrieve cube")),
    "grab the blue cube": _plan(
        "medium",
        _subtask("ST1", "Worker_3", "identify and grasp the blue cube",
                 ["color discrimination", "grasping", "precision"],
                 action="pick blue cube")),
    "lift blue cube": _plan(
        "low",
        _subtask("ST1", "Worker_3", "lift the cube held in the gripper",
                 ["vertical motion", "stability", "grip force"],
                 action="lift held cube")),
    "try and plug the right charger": _plan(
        "medium",
        _subtask("ST1", "Worker_3", "find and plug the matching charger",
                 ["fine manipulation", "port matching", "retry"],
                 action="plug charger")),
    "find and fetch the apple": _plan(
        "high",
        _subtask("ST1", "Worker_2", "explore and locate the apple",
                 ["exploration", "object detection", "mapping"],
                 action="locate apple"),
        _subtask("ST2", "Worker_3", "fetch the apple",
                 ["approach", "grasping", "delivery"],
                 action="fetch apple", depends_on=["ST1"])),
    "fetch the apple (occlusion)": _plan(
        "high",
        _subtask("ST1", "Worker_4", "expose the occluded apple",
                 ["scene understanding", "viewpoints", "occlusion"],
                 action="locate apple"),
        _subtask("ST2", "Worker_3", "fetch the apple",
                 ["approach", "grasping", "care"],
                 action="fetch apple", depends_on=["ST1"])),
    "fetch the apple (dynamic deletion)": _plan(
        "high",
        _subtask("ST1", "Worker_2", "explore and locate the apple",
                 ["exploration", "object detection", "vigilance"],
                 action="locate apple"),
        _subtask("ST2", "Worker_3", "fetch the apple",
                 ["approach", "grasping", "monitoring"],
                 action="fetch apple", depends_on=["ST1"])),
}

WORKER_REFLECTIONS = {
    "Compile the quarterly sales report": {
        "collaboration_required": True,
        "requirement": [
            {"request_id": "0001", "worker_id": "Worker_1",
             "request_detail": "Validate the accuracy of sales growth metrics "
                               "in the dataset."},
            {"request_id": "0002", "worker_id": "Worker_2",
             "request_detail": "Conduct volatility analysis on the companies "
                               "in the dataset."},
        ],
    },
    "fetch the apple": {
        "collaboration_required": True,
        "requirement": [
            {"request_id": "0001", "worker_id": "Worker_1",
             "request_detail": "Confirm the detected object is the target "
                               "apple before the grasp."},
        ],
    },
}

PROVIDER_RESPONSES = {
    "Verify statistical significance (p<0.05) in dataset A/B groups":
        "Statistical analysis reveals a significant difference between groups "
        "A and B (p=0.032 < 0.05), with group A showing a higher mean value "
        "of 42.7 compared to group B's 38.1",
}

SELF_SUFFICIENT = {"collaboration_required": False, "requirement": []}


class ScriptedBackend:
    """Deterministic (role, key) -> canned response table.

    Unknown leader missions fall back to a generic single-subtask medium plan
    (no concrete action annotation, which pushes the runtime onto the
    selector-only out-of-distribution path). Unknown worker keys reflect as
    self-sufficient; unknown provider keys return a deterministic completion
    note. Set ``strict=True`` to turn missing entries into BackendError.
    """

    def __init__(self, table: Optional[Mapping] = None, strict: bool = False):
        self._table = {
            "leader": dict(LEADER_PLANS),
            "worker": dict(WORKER_REFLECTIONS),
            "provider": dict(PROVIDER_RESPONSES),
        }
        if table:
            for role, entries in table.items():
                self._table.setdefault(role, {}).update(entries)
        self.strict = strict

    @classmethod
    def from_config(cls, path: str, strict: bool = False) -> "ScriptedBackend":
        with open(path, "r", encoding="utf-8") as handle:
            return cls(json.load(handle), strict=strict)

    def complete(self, role: str, key) -> str:
        if isinstance(key, Mapping):
            key = key.get("mission") or key.get("task_description") or \
                json.dumps(key, sort_keys=True)
        entries = self._table.get(role, {})
        if key in entries:
            value = entries[key]
        elif self.strict:
            raise BackendError(f"no scripted entry for ({role!r}, {key!r})")
        elif role == "leader":
            value = _plan("medium", {
                "subtask_id": "ST1",
                "assigned_worker": "Worker_1",
                "task_description": str(key),
                "focus": ["perception", "navigation", "manipulation"],
            })
        elif role == "worker":
            value = SELF_SUFFICIENT
        elif role == "provider":
            value = {"response": f"Completed analysis for request: {key}. "
                                 "Findings consistent with expectations."}
        else:
            raise BackendError(f"no scripted entry for ({role!r}, {key!r})")
        if role == "provider" and isinstance(value, str):
            value = {"response": value}
        return json.dumps(value, sort_keys=True)


class RemoteBackend:
    """Posts prompts to a text completion endpoint; retries then raises."""

    def __init__(self, url: str, token: Optional[str] = None,
                 model: Optional[str] = None, timeout: float = 10.0,
                 retries: int = MAX_RETRIES, backoff: float = 0.2):
        self.url = url
        self.token = token
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    @classmethod
    def from_env(cls, environ: Mapping) -> "RemoteBackend":
        url = environ.get("BRAINSTEM_BACKEND_URL")
        if not url:
            raise BackendError("BRAINSTEM_BACKEND_URL is not set")
        return cls(
            url=url,
            token=environ.get("BRAINSTEM_BACKEND_TOKEN"),
            model=environ.get("BRAINSTEM_BACKEND_MODEL"),
            timeout=float(environ.get("BRAINSTEM_BACKEND_TIMEOUT", "10")),
        )

    def complete(self, role: str, key) -> str:
        body = json.dumps({"role": role, "prompt": str(key),
                           "model": self.model}).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_error = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            request = urllib.request.Request(self.url, data=body,
                                             headers=headers)
            try:
                with urllib.request.urlopen(request,
                                            timeout=self.timeout) as reply:
                    return reply.read().decode("utf-8")
            except (urllib.error.URLError, OSError, ValueError) as exc:
                last_error = exc
        raise BackendError(f"remote backend failed after {self.retries} "
                           f"attempts: {last_error}")
