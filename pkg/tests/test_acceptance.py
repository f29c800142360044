"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion. Every expected value here is either a standard reference value,
computed by an independent oracle implemented in this file / support.py, or
shipped fixture data.
"""

import functools
import math
import random
import time

import numpy as np

from brainstem.bus import MessageBus
from brainstem.episode import EpisodeConfig, Outcome
from brainstem.errors import ChecksumMismatch, ParseError, SchemaViolation
from brainstem.estimator import BeliefState, em_reestimate, forward_filter, \
    random_params
from brainstem.harness import BenchConfig, aggregate, reference_aggregates, \
    run_bench
from brainstem.memory import MemoryState, memory_update, tanh_consolidation
from brainstem.pipeline import RateConfig, run_scheduler
from brainstem.planner import select_action, validate_state_tree
from brainstem.protocol import (Importance, LogIdAllocator, compute_checksum,
                                decode_envelope, serialize_envelope)
from brainstem.reactive import ReactiveController, ReactiveGains
from brainstem.registry import AgentDescriptor, AgentRegistry, Role
from support import (crc32_oracle, enumerated_beliefs, quick_envelope,
                     random_envelope, random_tree_doc, tree_action_values_oracle)

from test_planner import _mutate  # the invariant-violating tree mutator


def criterion(number, text):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] criterion {number}: {text}")
                raise
            print(f"[PASS] criterion {number}: {text}")
            return result
        return wrapper
    return decorate


# -- 1. protocol integrity ------------------------------------------------------

@criterion(1, "10k envelopes round-trip bit-exactly; 10k single-bit "
              "corruptions detected; < 10 s")
def test_protocol_integrity():
    rng = random.Random(20250811)
    allocator = LogIdAllocator()
    started = time.monotonic()
    detected = 0
    for _ in range(10_000):
        envelope = random_envelope(rng, allocator)
        wire = serialize_envelope(envelope)
        decoded = decode_envelope(wire)
        assert decoded == envelope
        assert serialize_envelope(decoded) == wire  # bit-exact
        flipped = bytearray(wire)
        position = rng.randrange(len(flipped))
        flipped[position] ^= 1 << rng.randrange(8)
        try:
            decode_envelope(bytes(flipped))
        except (ChecksumMismatch, ParseError):
            detected += 1
    elapsed = time.monotonic() - started
    assert detected == 10_000
    assert elapsed < 10.0, f"protocol run took {elapsed:.1f}s"


# -- 2. CRC conformance -----------------------------------------------------------

@criterion(2, "CRC-32 check value cbf43926 vs table oracle; empty -> 00000000")
def test_crc_conformance():
    assert compute_checksum(b"123456789") == "cbf43926"
    assert crc32_oracle(b"123456789") == "cbf43926"
    assert compute_checksum(b"") == "00000000"
    rng = random.Random(99)
    for _ in range(500):
        blob = bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 128)))
        assert compute_checksum(blob) == crc32_oracle(blob)


# -- 3. priority bus --------------------------------------------------------------

@criterion(3, "1000 randomized schedules: strict priority, FIFO, no "
              "loss/duplication across reinitializations")
def test_priority_bus_schedules():
    rng = random.Random(7)
    allocator = LogIdAllocator()
    levels = [Importance.HIGH, Importance.MEDIUM, Importance.LOW]
    for _ in range(1000):
        registry = AgentRegistry()
        bus = MessageBus(is_registered=registry.is_registered)
        registry.bind_bus(bus)
        registry.register_agent(AgentDescriptor("Leader_1", Role.LEADER))
        registry.register_agent(AgentDescriptor("Worker_1", Role.WORKER,
                                                ("nav",)))
        bus.subscribe("Worker_1", set(levels))
        published = {level: [] for level in levels}
        pending = {level: 0 for level in levels}
        level_of = {}
        delivered = []
        failed = False

        def take():
            got = bus.next_message("Worker_1")
            if got is None:
                return False
            level = level_of[got.log_id]
            # strict priority: nothing higher may still be queued
            for higher in levels[:levels.index(level)]:
                assert pending[higher] == 0, "priority inversion"
            pending[level] -= 1
            delivered.append(got.log_id)
            return True

        for _step in range(40):
            move = rng.random()
            if move < 0.5:
                level = rng.choice(levels)
                envelope = quick_envelope("Leader_1", level, allocator)
                bus.publish(envelope)
                published[level].append(envelope.log_id)
                pending[level] += 1
                level_of[envelope.log_id] = level
            elif move < 0.8 and not failed:
                take()
            elif move < 0.9 and not failed:
                registry.mark_failed("Worker_1")
                failed = True
            elif failed:
                registry.reinitialize("Worker_1")
                bus.subscribe("Worker_1", set(levels))
                failed = False
        if failed:
            registry.reinitialize("Worker_1")
            bus.subscribe("Worker_1", set(levels))
        while take():
            pass
        # exactly-once delivery of everything published
        assert sorted(delivered) == sorted(level_of)
        assert len(set(delivered)) == len(delivered)
        # FIFO within each channel
        for level in levels:
            per_channel = [i for i in delivered if level_of[i] is level]
            assert per_channel == published[level]


# -- 4. memory decay ---------------------------------------------------------------

@criterion(4, "decay law exact to 1e-12 over 1000 steps; 50-step runs match "
              "the unrolled oracle to 1e-12")
def test_memory_decay():
    alpha = 0.013
    state = MemoryState(np.array([1.0, -2.0, 0.25, 3.5]), alpha)
    base = np.linalg.norm(state.vector)
    for t in range(1, 1001):
        state = memory_update(state, np.zeros(4), np.zeros(4))
        assert abs(np.linalg.norm(state.vector)
                   - (1 - alpha) ** t * base) <= 1e-12

    dim = 16
    rng = np.random.default_rng(404)
    for trial in range(10):
        consolidate = tanh_consolidation(dim, dim, dim, seed=trial)
        weights = consolidate.weights.tolist()
        bias = consolidate.bias.tolist()
        a = float(rng.uniform(0.05, 0.9))
        state = MemoryState(rng.standard_normal(dim), a)
        oracle = list(state.vector)
        for _ in range(50):
            s = rng.standard_normal(dim)
            z = rng.standard_normal(dim)
            state = memory_update(state, s, z, consolidate)
            stacked = list(s) + list(z) + oracle
            oracle = [(1 - a) * oracle[i] + math.tanh(
                sum(w * x for w, x in zip(weights[i], stacked)) + bias[i])
                for i in range(dim)]
            assert max(abs(p - q) for p, q in zip(state.vector, oracle)) <= 1e-12


# -- 5. planner optimality ----------------------------------------------------------

@criterion(5, "select_action == brute-force argmax on 100 random trees; "
              "1000 invariant-violating mutations all rejected")
def test_planner_optimality_and_validation():
    rng = random.Random(1234)
    vocab = ["advance", "grasp", "look", "retract", "a", "x"]
    agreements = 0
    for _ in range(100):
        tree = validate_state_tree(random_tree_doc(rng), vocab)
        oracle = tree_action_values_oracle(tree)
        best = min(a for a, v in oracle.items() if v == max(oracle.values()))
        if select_action(tree, vocab).selected_action == best:
            agreements += 1
    assert agreements == 100

    false_accepts = 0
    for _ in range(1000):
        doc = random_tree_doc(rng)
        validate_state_tree(doc, vocab)
        mutated, _kind = _mutate(doc, rng)
        try:
            validate_state_tree(mutated, vocab)
            false_accepts += 1
        except SchemaViolation:
            pass
    assert false_accepts == 0


# -- 6. DBN filter and EM -------------------------------------------------------------

@criterion(6, "filter matches path enumeration (200 instances, <= 1e-10); "
              "EM log-likelihood non-decreasing on 50 datasets")
def test_dbn_filter_and_em():
    rng = np.random.default_rng(777)
    for _ in range(200):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(2, 4))
        steps = int(rng.integers(1, 6))
        actions = ["a", "b"]
        params = random_params(n, m, actions, rng)
        episode = [(actions[int(rng.integers(0, 2))], int(rng.integers(0, m)))
                   for _ in range(steps)]
        oracle = enumerated_beliefs(episode, params)
        belief = BeliefState.uniform(n)
        for (action, obs), expected in zip(episode, oracle):
            belief = forward_filter(belief, action, obs, params)
            assert np.max(np.abs(belief.distribution - expected)) <= 1e-10

    for trial in range(50):
        gen = np.random.default_rng(trial)
        n, m = int(gen.integers(2, 4)), int(gen.integers(2, 4))
        actions = ["a", "b"]
        init = random_params(n, m, actions, gen)
        episodes = [
            [(actions[int(gen.integers(0, 2))], int(gen.integers(0, m)))
             for _ in range(int(gen.integers(3, 8)))]
            for _ in range(3)
        ]
        logliks = em_reestimate(episodes, init, iters=10).log_likelihoods
        for before, after in zip(logliks, logliks[1:]):
            assert after >= before - 1e-9


# -- 7. scheduler ratios ---------------------------------------------------------------

@criterion(7, "200k ticks fire 200000/200/2; reactive gap stays 1 under "
              "injected deliberative latency; < 30 s")
def test_scheduler_ratios():
    started = time.monotonic()

    def slow_deliberative(tick):
        return 50_000, lambda t: None  # half a deliberative period of latency

    trace = run_scheduler(RateConfig(), 200_000,
                          on_deliberative=slow_deliberative)
    elapsed = time.monotonic() - started
    assert trace.count("reactive") == 200_000
    assert trace.count("memory") == 200
    assert trace.count("deliberative") == 2
    assert trace.max_reactive_gap() == 1
    assert elapsed < 30.0, f"scheduler run took {elapsed:.1f}s"


# -- 8. aggregation fixtures --------------------------------------------------------------

@criterion(8, "every self-consistent reference Avg cell reproduced exactly; "
              "the four inconsistent cells pinned to their recomputed means")
def test_aggregation_fixtures():
    records = reference_aggregates()
    assert len(records) == 40
    reproduced = {}
    for record in records:
        avg, _std = aggregate(record["values"], expected_n=8)
        reproduced[(record["model"], record["category"])] = avg
        if record["consistent"]:
            # printed to one decimal or integer precision: the raw arrays are
            # eighths, so the mean is exact and must match the print verbatim
            assert avg == record["printed_avg"], record
        else:
            assert avg != record["printed_avg"], record
    # spot values named in the release checklist
    assert reproduced[("ours", "long-horizon1")] == 76.5
    assert reproduced[("rdt", "visual")] == 74.5
    assert reproduced[("dp_vla", "long-horizon2")] == 38.5
    assert reproduced[("octo", "semantic")] == 79
    # the printed 84.8 cell cannot be derived from its own raw array
    # ([80,88,88,88,88,80,80,88] has mean 85.0); raw data wins
    assert reproduced[("octo", "physical")] == 85.0
    inconsistent = {(r["model"], r["category"]) for r in records
                    if not r["consistent"]}
    assert inconsistent == {("dp_vla", "physical"), ("octo", "physical"),
                            ("ours", "correction"), ("ours", "long-horizon2")}


# -- 9. end-to-end qualitative pattern -------------------------------------------------------

@criterion(9, "full >= 80% on tasks 1-3 over 50 seeds; reactive-only 0% on "
              "tasks 4 and 8; full > 0% on task 8 with timely abort")
def test_end_to_end_pattern():
    started = time.monotonic()
    full = run_bench(BenchConfig(tasks=(1, 2, 3), mode="full",
                                 trials_per_eval=25, evals=2, base_seed=0))
    for task_id in (1, 2, 3):
        row = full.row_for(task_id)
        assert row.avg >= 80.0, f"task {task_id} success {row.avg}%"

    reactive = run_bench(BenchConfig(tasks=(4, 8), mode="reactive_only",
                                     trials_per_eval=25, evals=2, base_seed=0))
    for task_id in (4, 8):
        row = reactive.row_for(task_id)
        assert row.avg == 0.0, f"reactive-only task {task_id}: {row.avg}%"

    deletion = run_bench(BenchConfig(tasks=(8,), mode="full",
                                     trials_per_eval=25, evals=2, base_seed=0))
    row = deletion.row_for(8)
    assert row.avg > 0.0, "full configuration never beat the deletion window"
    config = EpisodeConfig()
    for trial in deletion.trials:
        if trial.outcome is not Outcome.SUCCESS:
            # the perturbation is handled: a clean abort within one
            # deliberative period of the 60 s deletion, never a silent timeout
            assert trial.outcome is Outcome.HANDLED_ABORT, trial
            assert trial.ticks_elapsed <= 6000 + config.deliberative_period
    elapsed = time.monotonic() - started
    assert elapsed < 120.0, f"end-to-end block took {elapsed:.1f}s"


# -- 10. reactive controller ------------------------------------------------------------------

@criterion(10, "u(zeta)-u(0) == zeta*(pd + sigma*var) to 1e-12 on 1000 "
               "inputs; outputs always clamped")
def test_controller_path_decomposition():
    rng = np.random.default_rng(31337)
    for _ in range(1000):
        zeta = float(rng.uniform(0, 1))
        sigma = float(rng.uniform(0, 1))
        kp = float(rng.uniform(0, 1))
        kd = float(rng.uniform(0, 0.5))
        steps = int(rng.integers(1, 5))
        # inputs bounded so the +/-u_max clamp stays inactive on this path
        states = [rng.standard_normal(4) * 0.2 for _ in range(steps)]
        errors = [rng.standard_normal(4) * 0.1 for _ in range(steps)]

        def policy(s, a, l):
            return 0.2 * np.tanh(s)

        def stream(z):
            gains = ReactiveGains(zeta=z, sigma=sigma, kp=kp, kd=kd, u_max=1.0)
            controller = ReactiveController(4, gains, policy)
            return [controller.step(s, None, np.zeros(4), e)
                    for s, e in zip(states, errors)]

        probe = ReactiveController(
            4, ReactiveGains(zeta=1.0, sigma=sigma, kp=kp, kd=kd, u_max=1e9))
        corrections = [probe.step(s, None, np.zeros(4), e)
                       for s, e in zip(states, errors)]
        for u_z, u_0, corr in zip(stream(zeta), stream(0.0), corrections):
            assert np.max(np.abs((u_z - u_0) - zeta * corr)) <= 1e-12
            assert np.all(np.abs(u_z) <= 1.0)

    # clamp holds for violent inputs too
    gains = ReactiveGains(zeta=4.0, sigma=3.0, kp=6.0, kd=1.0, u_max=1.0)
    controller = ReactiveController(4, gains,
                                    policy=lambda s, a, l: 20.0 * s)
    for _ in range(200):
        u = controller.step(rng.standard_normal(4) * 10, None, np.zeros(4),
                            rng.standard_normal(4) * 10)
        assert np.all(np.abs(u) <= 1.0)
