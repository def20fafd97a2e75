"""Real-time fast marching tree planning with an RRT* baseline and a benchmark harness."""

from .geometry import (Config, DynamicObstacle, RobotState, StaticObstacle, World, WorldBounds,
                       free_space_measure, point_free, segment_free)
from .planner import Path, PathKind, PlannerParams, RTFMTPlanner
from .rtrrt import RtRrtParams, RTRRTPlanner
from .sampling import SamplerParams, neighborhood_radius, sample_free
from .tree import NodeStatus, PlanTree

__all__ = [
    "Config", "DynamicObstacle", "RobotState", "StaticObstacle", "World", "WorldBounds",
    "free_space_measure", "point_free", "segment_free", "Path", "PathKind", "PlannerParams",
    "RTFMTPlanner", "RtRrtParams", "RTRRTPlanner", "SamplerParams", "neighborhood_radius",
    "sample_free", "NodeStatus", "PlanTree",
]
