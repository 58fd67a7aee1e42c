"""Socially-aware shared-control navigation stack.

A deterministic 2D simulator and planning pipeline: preference-field
global planning over a layered costmap, scan-based pedestrian perception
with egg-shaped social areas, a shared-control receding-horizon local
planner with dynamic barrier constraints, a scenario harness, and a live
bridge service for human-in-the-loop teleoperation.
"""

__version__ = "0.1.0"
