"""Deterministic symbolic manipulation world for the eight benchmark tasks.

No physics: contact failures are stochastic action outcomes, time is virtual
(100 ticks per virtual second), and perturbations are scheduled events. Each
scenario declares its true action rules (preconditions, effects, success
probabilities, durations), a symbolic transition model for the planner, goal
predicates, and the macro vocabulary used by scripted decomposition plans.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional

from .agents import HashEmbedder
from .errors import UnknownAction, UnknownTask
from .planner import TransitionModel, hop_proximity

TICKS_PER_SECOND = 100
DELETION_TICK = 60 * TICKS_PER_SECOND  # "dynamic deletion" fires at 60 s

_OBS_EMBEDDER = HashEmbedder(namespace="observation")


@dataclass
class ObjectState:
    kind: str
    color: str = ""
    location: str = ""
    container: Optional[str] = None
    occluded: bool = False
    present: bool = True


@dataclass
class WorldState:
    objects: dict
    containers: dict = field(default_factory=dict)   # id -> {"open": bool}
    gripper: dict = field(default_factory=lambda: {"holding": None,
                                                   "location": "home"})
    viewpoint: str = "front"
    marks: set = field(default_factory=set)
    tick: int = 0
    fired_events: set = field(default_factory=set)

    def clone(self) -> "WorldState":
        return WorldState(
            objects={k: replace(v) for k, v in self.objects.items()},
            containers={k: dict(v) for k, v in self.containers.items()},
            gripper=dict(self.gripper),
            viewpoint=self.viewpoint,
            marks=set(self.marks),
            tick=self.tick,
            fired_events=set(self.fired_events),
        )

    def holding(self) -> Optional[str]:
        return self.gripper["holding"]


@dataclass(frozen=True)
class Observation:
    visible_objects: tuple
    containers: dict
    gripper: dict
    tick: int
    symbol: str

    @property
    def embedding(self):
        return _OBS_EMBEDDER.embed({
            "visible": [o["id"] for o in self.visible_objects],
            "gripper": self.gripper.get("holding"),
            "symbol": self.symbol,
        })


@dataclass(frozen=True)
class ScheduledEvent:
    tick: int
    kind: str
    params: dict


@dataclass
class ActionRule:
    duration_mean: float
    duration_std: float
    precondition: Callable          # world -> None (ok) or str (failure reason)
    effect: Callable                # world -> None, mutates in place
    success_prob: Callable          # world -> float in [0, 1]


@dataclass
class ScenarioSpec:
    task_id: int
    category: str
    mission: str
    goal: dict
    action_vocab: tuple
    rules: Mapping[str, ActionRule]
    model: TransitionModel
    symbol_of: Callable             # world -> model state label
    scheduled_events: tuple = ()
    macros: Mapping[str, frozenset] = field(default_factory=dict)
    macro_vocab: tuple = ()
    reactive_script: tuple = ()
    reactive_slowdown: float = 1.3
    timeout_ticks: int = 8000
    seed: int = 0

    def observation_alphabet(self) -> list:
        states = set(self.model.transitions)
        for outs in self.model.transitions.values():
            for _, _, nxt in outs:
                states.add(nxt)
        states |= set(self.model.goal_states)
        return sorted(states)


# ---------------------------------------------------------------------------
# world mechanics
# ---------------------------------------------------------------------------

def _fire_event(world: WorldState, event: ScheduledEvent) -> Optional[dict]:
    if event.kind == "delete_object":
        object_id = event.params["object_id"]
        target = world.objects.get(object_id)
        if target is None or not target.present:
            return None
        if event.params.get("unless_held") and world.holding() == object_id:
            return None
        target.present = False
        if world.holding() == object_id:
            world.gripper["holding"] = None
        return {"event": "delete_object", "object_id": object_id,
                "tick": event.tick}
    raise ValueError(f"unknown event kind {event.kind!r}")


def advance_clock(scenario: ScenarioSpec, world: WorldState,
                  to_tick: int) -> list:
    """Move the world clock forward, firing due events exactly once."""
    fired = []
    for index, event in enumerate(scenario.scheduled_events):
        if index in world.fired_events or event.tick > to_tick:
            continue
        world.fired_events.add(index)
        record = _fire_event(world, event)
        if record is not None:
            fired.append(record)
    world.tick = max(world.tick, to_tick)
    return fired


def sample_duration(rule: ActionRule, rng: random.Random,
                    slowdown: float = 1.0) -> int:
    mean = rule.duration_mean * slowdown
    raw = rng.gauss(mean, rule.duration_std)
    return max(1, int(round(max(raw, 0.5 * mean))))


def resolve_action(scenario: ScenarioSpec, world: WorldState, action: str,
                   rng: random.Random) -> dict:
    """Apply an action at the current tick; returns the feedback record.

    Precondition failures leave the world unchanged and report failure
    rather than raising; unknown actions are caller errors.
    """
    if action not in scenario.rules:
        raise UnknownAction(f"{action!r} is not in the action vocabulary")
    rule = scenario.rules[action]
    reason = rule.precondition(world)
    if reason is not None:
        return {"action": action, "success": False, "error": reason,
                "tick": world.tick}
    if rng.random() < rule.success_prob(world):
        rule.effect(world)
        return {"action": action, "success": True, "tick": world.tick}
    return {"action": action, "success": False, "error": "execution failed",
            "tick": world.tick}


def step(scenario: ScenarioSpec, world: WorldState, action: str,
         rng: random.Random):
    """(world', observation, events): one whole action, clock included.

    Samples the action duration, advances the clock (events due in the span
    fire before the effect lands), then resolves the action.
    """
    world = world.clone()
    duration = sample_duration(scenario.rules[action], rng) \
        if action in scenario.rules else 1
    events = advance_clock(scenario, world, world.tick + duration)
    feedback = resolve_action(scenario, world, action, rng)
    events.append(feedback)
    return world, observe(scenario, world), events


def observe(scenario: ScenarioSpec, world: WorldState) -> Observation:
    """What the agents see: never occluded or deleted objects."""
    visible = tuple(
        {"id": object_id, "kind": obj.kind, "color": obj.color,
         "location": obj.location, "container": obj.container}
        for object_id, obj in sorted(world.objects.items())
        if obj.present and not obj.occluded
    )
    return Observation(
        visible_objects=visible,
        containers={k: dict(v) for k, v in world.containers.items()},
        gripper=dict(world.gripper),
        tick=world.tick,
        symbol=scenario.symbol_of(world),
    )


def check_success(world: WorldState, goal: dict) -> bool:
    if goal["type"] == "holding":
        return world.holding() == goal["object"]
    if goal["type"] == "mark":
        return goal["mark"] in world.marks
    if goal["type"] == "at":
        obj = world.objects.get(goal["object"])
        return (obj is not None and obj.present
                and obj.location == goal["location"])
    raise ValueError(f"unknown goal type {goal['type']!r}")


def viewpoint_change(scenario: ScenarioSpec, world: WorldState,
                     direction: str) -> WorldState:
    """Recompute occlusion for a new viewpoint; positions never change."""
    world = world.clone()
    world.viewpoint = direction
    reveal = getattr(scenario, "_reveal_map", {})
    for object_id, revealing in reveal.items():
        obj = world.objects.get(object_id)
        if obj is not None:
            obj.occluded = direction != revealing
    return world


# ---------------------------------------------------------------------------
# scenario helpers
# ---------------------------------------------------------------------------

def _ok(world):
    return None


def _always(_world):
    return 1.0


def _prob(p):
    return lambda _world: p


def _model(transitions, goals, unsafe=()):
    goals = frozenset(goals)
    return TransitionModel(
        transitions=transitions,
        goal_states=goals,
        proximity=hop_proximity(transitions, goals),
        unsafe_states=frozenset(unsafe),
    )


# ---------------------------------------------------------------------------
# the eight tasks
# ---------------------------------------------------------------------------

def _task_1(seed: int):
    world = WorldState(
        objects={"cube_1": ObjectState("cube", "red", "cabinet_shelf",
                                       container="cabinet_1")},
        containers={"cabinet_1": {"open": False}},
    )

    def pre_grasp(w):
        if not w.containers["cabinet_1"]["open"]:
            return "cabinet is closed"
        return None

    def do_open(w):
        w.containers["cabinet_1"]["open"] = True

    def do_grasp(w):
        w.gripper["holding"] = "cube_1"
        w.objects["cube_1"].location = "gripper"
        w.objects["cube_1"].container = None

    rules = {
        "open cabinet": ActionRule(300, 30, lambda w: None if not
                                   w.containers["cabinet_1"]["open"] else
                                   "cabinet already open", do_open, _always),
        "grasp cube": ActionRule(250, 25, pre_grasp, do_grasp, _prob(0.93)),
    }
    model = _model({
        "start": [("open cabinet", 1.0, "cabinet_open")],
        "cabinet_open": [("grasp cube", 0.93, "holding_cube"),
                         ("grasp cube", 0.07, "cabinet_open")],
    }, {"holding_cube"})

    def symbol(w):
        if w.holding() == "cube_1":
            return "holding_cube"
        return "cabinet_open" if w.containers["cabinet_1"]["open"] else "start"

    return ScenarioSpec(
        task_id=1, category="physical", mission="grab cube from cabinet",
        goal={"type": "holding", "object": "cube_1"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"retrieve cube": frozenset({"holding_cube"})},
        macro_vocab=("retrieve cube",),
        reactive_script=("open cabinet", "grasp cube"),
        timeout_ticks=4000, seed=seed,
    ), world


def _task_2(seed: int):
    world = WorldState(objects={
        "cube_blue": ObjectState("cube", "blue", "table"),
        "cube_red": ObjectState("cube", "red", "table"),
        "cube_green": ObjectState("cube", "green", "table"),
    })

    def grasp(color):
        def effect(w):
            w.gripper["holding"] = f"cube_{color}"
            w.objects[f"cube_{color}"].location = "gripper"
        return effect

    def pre_free(w):
        return None if w.holding() is None else "gripper is occupied"

    def do_release(w):
        held = w.holding()
        if held:
            w.objects[held].location = "table"
        w.gripper["holding"] = None

    rules = {
        "grasp blue cube": ActionRule(350, 35, pre_free, grasp("blue"),
                                      _prob(0.9)),
        "grasp red cube": ActionRule(350, 35, pre_free, grasp("red"), _always),
        "grasp green cube": ActionRule(350, 35, pre_free, grasp("green"),
                                       _always),
        "release": ActionRule(150, 15, lambda w: None if w.holding() else
                              "nothing held", do_release, _always),
    }
    model = _model({
        "start": [("grasp blue cube", 0.9, "holding_blue"),
                  ("grasp blue cube", 0.1, "start"),
                  ("grasp red cube", 1.0, "holding_wrong"),
                  ("grasp green cube", 1.0, "holding_wrong")],
        "holding_wrong": [("release", 1.0, "start")],
    }, {"holding_blue"})

    def symbol(w):
        held = w.holding()
        if held == "cube_blue":
            return "holding_blue"
        return "holding_wrong" if held else "start"

    return ScenarioSpec(
        task_id=2, category="visual", mission="grab the blue cube",
        goal={"type": "holding", "object": "cube_blue"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"pick blue cube": frozenset({"holding_blue"})},
        macro_vocab=("pick blue cube",),
        reactive_script=("grasp blue cube",),
        timeout_ticks=6000, seed=seed,
    ), world


def _task_3(seed: int):
    world = WorldState(
        objects={"cube_blue": ObjectState("cube", "blue", "gripper")},
        gripper={"holding": "cube_blue", "location": "table"},
    )

    def do_lift(w):
        w.marks.add("lifted")
        w.objects["cube_blue"].location = "lifted"

    rules = {
        "lift": ActionRule(200, 20, lambda w: None if w.holding() ==
                           "cube_blue" else "blue cube not in gripper",
                           do_lift, _prob(0.97)),
    }
    model = _model({
        "holding": [("lift", 0.97, "lifted"), ("lift", 0.03, "holding")],
    }, {"lifted"})

    def symbol(w):
        return "lifted" if "lifted" in w.marks else "holding"

    return ScenarioSpec(
        task_id=3, category="semantic", mission="lift blue cube",
        goal={"type": "mark", "mark": "lifted"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"lift held cube": frozenset({"lifted"})},
        macro_vocab=("lift held cube",),
        reactive_script=("lift",),
        timeout_ticks=3000, seed=seed,
    ), world


def _task_4(seed: int):
    # the visually obvious port is never the right one; only feedback-driven
    # correction finds the match
    correct = f"port_{2 + random.Random(seed).randint(0, 1)}"
    world = WorldState(
        objects={"charger_1": ObjectState("charger", "black", "gripper")},
        gripper={"holding": "charger_1", "location": "ports"},
    )

    def plug(port):
        def effect(w):
            w.marks.add("plugged")
            w.objects["charger_1"].container = port
            w.objects["charger_1"].location = port
            w.gripper["holding"] = None

        def prob(w):
            return 0.95 if port == correct else 0.0

        return ActionRule(300, 30, lambda w: None if w.holding() ==
                          "charger_1" else "charger not in gripper",
                          effect, prob)

    rules = {f"plug {p}": plug(p) for p in ("port_1", "port_2", "port_3")}
    third = 1.0 / 3.0
    model = _model({
        "at_ports": [(f"plug {p}", third, "charger_plugged")
                     for p in ("port_1", "port_2", "port_3")] +
                    [(f"plug {p}", 1.0 - third, "at_ports")
                     for p in ("port_1", "port_2", "port_3")],
    }, {"charger_plugged"})

    def symbol(w):
        return "charger_plugged" if "plugged" in w.marks else "at_ports"

    return ScenarioSpec(
        task_id=4, category="correction", mission="try and plug the right charger",
        goal={"type": "mark", "mark": "plugged"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"plug charger": frozenset({"charger_plugged"})},
        macro_vocab=("plug charger",),
        reactive_script=("plug port_1",),
        timeout_ticks=6000, seed=seed,
    ), world


def _task_5(seed: int):
    world = WorldState(objects={
        "book_hp": ObjectState("book", "mixed", "shelf"),
        "book_other": ObjectState("book", "green", "shelf"),
        "vase_1": ObjectState("vase", "white", "shelf"),
    })

    def do_search(w):
        w.marks.add("located")

    def do_grasp(w):
        w.gripper["holding"] = "book_hp"
        w.objects["book_hp"].location = "gripper"

    rules = {
        "search shelf": ActionRule(600, 60, _ok, do_search, _always),
        "grasp book": ActionRule(450, 45, lambda w: None if "located" in
                                 w.marks else "book not located yet",
                                 do_grasp, _prob(0.6)),
        "nudge objects": ActionRule(300, 30, _ok, lambda w: None, _always),
    }
    model = _model({
        "start": [("search shelf", 1.0, "book_located")],
        "book_located": [("grasp book", 0.6, "holding_book"),
                         ("grasp book", 0.4, "book_located"),
                         ("nudge objects", 1.0, "book_located")],
    }, {"holding_book"})

    def symbol(w):
        if w.holding() == "book_hp":
            return "holding_book"
        return "book_located" if "located" in w.marks else "start"

    return ScenarioSpec(
        task_id=5, category="ood", mission="grab the harry potter book",
        goal={"type": "holding", "object": "book_hp"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={}, macro_vocab=(),  # no scripted plan covers this mission
        reactive_script=("grasp book",),  # never searches: stays blind
        timeout_ticks=8000, seed=seed,
    ), world


def _apple_fetch_rules(durations, grasp_p):
    (explore_d, explore_s), (approach_d, approach_s), (look_d, look_s), \
        (grasp_d, grasp_s) = durations

    def do_explore(w):
        w.marks.add("located")

    def do_approach(w):
        w.marks.add("near")
        w.gripper["location"] = "near_apple"

    def do_look(w):
        w.marks.add("in_view")
        if "apple_1" in w.objects:
            w.objects["apple_1"].occluded = False

    def pre_grasp(w):
        apple = w.objects.get("apple_1")
        if apple is None or not apple.present:
            return "apple is not there"
        if apple.occluded:
            return "apple is not visible"
        if "near" not in w.marks:
            return "not close enough"
        return None

    def do_grasp(w):
        w.gripper["holding"] = "apple_1"
        w.objects["apple_1"].location = "gripper"

    return {
        "explore room": ActionRule(explore_d, explore_s, _ok,
                                   do_explore, _always),
        "approach apple": ActionRule(approach_d, approach_s,
                                     lambda w: None if "located" in w.marks
                                     else "apple not located",
                                     do_approach, _always),
        "look closely": ActionRule(look_d, look_s,
                                   lambda w: None if "near" in w.marks
                                   else "too far to inspect",
                                   do_look, _always),
        "grasp apple": ActionRule(grasp_d, grasp_s, pre_grasp,
                                  do_grasp, _prob(grasp_p)),
    }


def _task_6(seed: int):
    world = WorldState(objects={
        "apple_1": ObjectState("apple", "red", "far_room", occluded=True),
    })
    rules = _apple_fetch_rules(((1500, 90), (800, 64), (400, 40), (500, 45)),
                               grasp_p=0.9)

    def do_deliver(w):
        w.gripper["holding"] = None
        w.objects["apple_1"].location = "delivery_zone"

    rules["deliver apple"] = ActionRule(
        600, 60, lambda w: None if w.holding() == "apple_1"
        else "apple not in gripper", do_deliver, _always)
    model = _model({
        "searching": [("explore room", 1.0, "apple_located")],
        "apple_located": [("approach apple", 1.0, "near_apple")],
        "near_apple": [("look closely", 1.0, "apple_in_view")],
        "apple_in_view": [("grasp apple", 0.9, "holding_apple"),
                          ("grasp apple", 0.1, "apple_in_view")],
        "holding_apple": [("deliver apple", 1.0, "delivered")],
    }, {"delivered"})

    def symbol(w):
        if w.objects["apple_1"].location == "delivery_zone":
            return "delivered"
        if w.holding() == "apple_1":
            return "holding_apple"
        if "in_view" in w.marks:
            return "apple_in_view"
        if "near" in w.marks:
            return "near_apple"
        return "apple_located" if "located" in w.marks else "searching"

    return ScenarioSpec(
        task_id=6, category="multimodal", mission="find and fetch the apple",
        goal={"type": "at", "object": "apple_1", "location": "delivery_zone"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"locate apple": frozenset({"apple_located", "near_apple",
                                           "apple_in_view", "holding_apple",
                                           "delivered"}),
                "fetch apple": frozenset({"delivered"})},
        macro_vocab=("locate apple", "fetch apple"),
        reactive_script=("explore room", "approach apple", "look closely",
                         "grasp apple", "deliver apple"),
        timeout_ticks=8000, seed=seed,
    ), world


def _task_7(seed: int):
    world = WorldState(objects={
        "apple_1": ObjectState("apple", "red", "shelf", occluded=True),
        "box_1": ObjectState("box", "brown", "shelf"),
    })

    def do_approach(w):
        w.marks.add("at_shelf")
        w.marks.add("near")
        w.gripper["location"] = "shelf"

    def look(direction):
        def effect(w):
            w.viewpoint = direction
            w.objects["apple_1"].occluded = direction != "left"
        return effect

    def pre_grasp(w):
        apple = w.objects["apple_1"]
        if apple.occluded:
            return "apple is occluded"
        if not apple.present:
            return "apple is not there"
        return None

    def do_grasp(w):
        w.gripper["holding"] = "apple_1"
        w.objects["apple_1"].location = "gripper"

    rules = {
        "approach shelf": ActionRule(800, 64, _ok, do_approach, _always),
        "look from left": ActionRule(400, 40, lambda w: None if "at_shelf" in
                                     w.marks else "not at the shelf",
                                     look("left"), _always),
        "look from right": ActionRule(400, 40, lambda w: None if "at_shelf" in
                                      w.marks else "not at the shelf",
                                      look("right"), _always),
        "grasp apple": ActionRule(500, 45, pre_grasp, do_grasp, _prob(0.9)),
    }
    model = _model({
        "searching": [("approach shelf", 1.0, "at_shelf")],
        "at_shelf": [("look from left", 1.0, "apple_visible"),
                     ("look from right", 1.0, "at_shelf")],
        "apple_visible": [("grasp apple", 0.9, "holding_apple"),
                          ("grasp apple", 0.1, "apple_visible")],
    }, {"holding_apple"})

    def symbol(w):
        if w.holding() == "apple_1":
            return "holding_apple"
        if not w.objects["apple_1"].occluded:
            return "apple_visible"
        return "at_shelf" if "at_shelf" in w.marks else "searching"

    spec = ScenarioSpec(
        task_id=7, category="long-horizon1", mission="fetch the apple (occlusion)",
        goal={"type": "holding", "object": "apple_1"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        macros={"locate apple": frozenset({"apple_visible", "holding_apple"}),
                "fetch apple": frozenset({"holding_apple"})},
        macro_vocab=("locate apple", "fetch apple"),
        reactive_script=("approach shelf", "look from left", "grasp apple"),
        timeout_ticks=8000, seed=seed,
    )
    spec._reveal_map = {"apple_1": "left"}
    return spec, world


def _task_8(seed: int):
    world = WorldState(objects={
        "apple_1": ObjectState("apple", "red", "far_room", occluded=True),
    })
    # nominal completion 6400 ticks (64 virtual s, sigma ~262) racing the
    # 60 s deletion: only the fast tail beats the perturbation window
    rules = _apple_fetch_rules(((3000, 190), (1500, 128), (1000, 100),
                                (900, 82)), grasp_p=0.95)
    model = _model({
        "searching": [("explore room", 1.0, "apple_located")],
        "apple_located": [("approach apple", 1.0, "near_apple")],
        "near_apple": [("look closely", 1.0, "apple_in_view")],
        "apple_in_view": [("grasp apple", 0.95, "holding_apple"),
                          ("grasp apple", 0.05, "apple_in_view")],
        "apple_missing": [],  # dead end: replanning must abort
    }, {"holding_apple"})

    def symbol(w):
        apple = w.objects["apple_1"]
        if w.holding() == "apple_1":
            return "holding_apple"
        if not apple.present:
            return "apple_missing"
        if "in_view" in w.marks:
            return "apple_in_view"
        if "near" in w.marks:
            return "near_apple"
        return "apple_located" if "located" in w.marks else "searching"

    return ScenarioSpec(
        task_id=8, category="long-horizon2",
        mission="fetch the apple (dynamic deletion)",
        goal={"type": "holding", "object": "apple_1"},
        action_vocab=tuple(rules), rules=rules, model=model, symbol_of=symbol,
        scheduled_events=(ScheduledEvent(DELETION_TICK, "delete_object",
                                         {"object_id": "apple_1",
                                          "unless_held": True}),),
        macros={"locate apple": frozenset({"apple_in_view", "holding_apple"}),
                "fetch apple": frozenset({"holding_apple"})},
        macro_vocab=("locate apple", "fetch apple"),
        reactive_script=("explore room", "approach apple", "look closely",
                         "grasp apple"),
        timeout_ticks=9000, seed=seed,
    ), world


_TASKS = {1: _task_1, 2: _task_2, 3: _task_3, 4: _task_4,
          5: _task_5, 6: _task_6, 7: _task_7, 8: _task_8}

TASK_IDS = tuple(sorted(_TASKS))


def load_scenario(task_id: int, seed: int = 0):
    """Deterministic (ScenarioSpec, WorldState) for a benchmark task."""
    if task_id not in _TASKS:
        raise UnknownTask(f"task_id must be 1..8, got {task_id}")
    return _TASKS[task_id](seed)


def scenario_doc(scenario: ScenarioSpec, world: WorldState) -> dict:
    """Plain structured record of a loaded scenario.

    Scenario identity is (task_id, seed); this document is the declarative
    view written next to episode logs.
    """
    import dataclasses

    return {
        "task_id": scenario.task_id,
        "seed": scenario.seed,
        "mission": scenario.mission,
        "goal": scenario.goal,
        "objects": {k: dataclasses.asdict(v)
                    for k, v in sorted(world.objects.items())},
        "containers": {k: dict(v) for k, v in world.containers.items()},
        "events": [{"tick": e.tick, "kind": e.kind, "params": e.params}
                   for e in scenario.scheduled_events],
        "transitions": {s: [list(t) for t in outs]
                        for s, outs in scenario.model.transitions.items()},
        "action_vocab": list(scenario.action_vocab),
        "timeout_ticks": scenario.timeout_ticks,
    }


def write_scenario_file(path: str, scenario: ScenarioSpec,
                        world: WorldState) -> None:
    import json

    with open(path, "w", encoding="utf-8") as sink:
        json.dump(scenario_doc(scenario, world), sink, indent=2,
                  sort_keys=True)
