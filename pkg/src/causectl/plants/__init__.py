from .base import Plant
from .grid import GridConfig, GridRobot, arena_8x7, blocks, robot_label, robot_step
from .traffic import Edge, TrafficConfig, TrafficNetwork, five_link, traffic_flow, traffic_label, traffic_step

__all__ = [
    "Edge", "GridConfig", "GridRobot", "Plant", "TrafficConfig", "TrafficNetwork", "arena_8x7",
    "blocks", "five_link", "robot_label", "robot_step", "traffic_flow", "traffic_label", "traffic_step",
]
