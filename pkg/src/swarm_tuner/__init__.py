"""Radio-map UAV trajectory optimization with an agentic hyper-parameter tuner."""

__version__ = "0.1.0"
