"""Geometry-only online multi-object tracking with occlusion handling."""

from .geometry import BoundingBox, covered_percent, extend_box, extended_iou, intersection_area, iou
from .metrics import EvalReport, evaluate
from .tracker import FrameOutput, Track, Tracker, TrackerConfig, TrackStatus

__all__ = [
    "BoundingBox",
    "EvalReport",
    "FrameOutput",
    "Track",
    "TrackStatus",
    "Tracker",
    "TrackerConfig",
    "covered_percent",
    "evaluate",
    "extend_box",
    "extended_iou",
    "intersection_area",
    "iou",
]

__version__ = "0.1.0"
