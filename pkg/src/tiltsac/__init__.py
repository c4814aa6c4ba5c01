"""Transition-mode attitude control simulator for a tiltrotor UAV."""

__version__ = "0.1.0"
