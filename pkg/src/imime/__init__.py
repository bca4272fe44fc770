"""iMime: a desk-scale closed loop of vision-based attention estimation, a
mime-style behavior engine, and model-based reinforcement learning that
adapts routine selection to a (simulated) viewer."""

__version__ = "0.1.0"
