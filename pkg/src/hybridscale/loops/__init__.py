"""The three auto-scaling loops: proactive (PIC), responsive (RSC) and reactive (RIC)."""

from .pic import PicConfig, PicDecision, pic_step
from .ric import (
    NONE,
    SCALE_IN,
    SCALE_OUT,
    ReactiveLoop,
    RicPolicy,
    RicSignal,
    RicState,
    ric_observe,
    ric_react,
)
from .rsc import RscConfig, SplitDecision, rsc_schedule, rsc_split, rsc_step, split_for_capacity

__all__ = [
    "NONE", "SCALE_IN", "SCALE_OUT",
    "PicConfig", "PicDecision", "pic_step",
    "ReactiveLoop", "RicPolicy", "RicSignal", "RicState", "ric_observe", "ric_react",
    "RscConfig", "SplitDecision", "rsc_schedule", "rsc_split", "rsc_step", "split_for_capacity",
]
