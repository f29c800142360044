"""Desk-scale brain-emulated multi-agent orchestration runtime.

Priority message bus, expertise-routed agent collective, DAG-based
hierarchical planning with bounded state trees, decaying episodic memory,
a discrete Bayesian state estimator, multi-rate virtual-clock scheduling,
a reactive controller, and a symbolic manipulation benchmark.
"""

__version__ = "0.1.0"
