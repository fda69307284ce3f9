"""Pulses, fronts and delay-induced Hopf bifurcations in delayed neural fields."""

from .kernel import DelayModel, GaussianPulse, KernelParams, NoInput, SigmoidFront
from .hopf import BifurcationCurve, HopfPoint
from .pulse_existence import PulseSolution, solve_halfwidth
from .front_analysis import FrontSolution, build_monotonous_front, build_three_crossing_front

__version__ = "0.1.0"

__all__ = [
    "DelayModel", "GaussianPulse", "KernelParams", "NoInput", "SigmoidFront", "BifurcationCurve", "HopfPoint",
    "PulseSolution", "solve_halfwidth", "FrontSolution", "build_monotonous_front", "build_three_crossing_front",
]
