"""UAV/MEC task offloading simulator and RL experiment harness."""

__version__ = "0.1.0"
