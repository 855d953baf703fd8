"""Continuous-state labelling, the controller-selection map, disturbance
schedules and the event-driven closed-loop simulator."""

from ctxctl.runtime.scenario import EffectRule, GuardedRegion, Scenario
from ctxctl.runtime.labeling import LabelMap
from ctxctl.runtime.policy import HybridPolicy, NoMatchingEdge, NotWinning
from ctxctl.runtime.schedule import DisturbanceSchedule
from ctxctl.runtime.simulate import EventStorm, SimTrace, monitor_trace, simulate

__all__ = [
    "EffectRule", "GuardedRegion", "Scenario", "LabelMap",
    "HybridPolicy", "NoMatchingEdge", "NotWinning",
    "DisturbanceSchedule", "EventStorm", "SimTrace", "monitor_trace", "simulate",
]
