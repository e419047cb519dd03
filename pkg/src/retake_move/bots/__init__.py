"""Bots: learned and rule-based movement with shared aim/fire execution."""

from .controllers import (
    ARCHETYPES,
    Controller,
    MLMoveController,
    RandomWalkController,
    RuleMoveController,
    ScriptedExpertController,
)
from .execution import AimState, ExecutionModule, burst_length, spring_damper_step
from .match import BOT_KINDS, BotConfig, BotConfigError, build_controllers, play_round, round_seed, run_round
from .navigation import PathFollower, PathPlanner, astar

__all__ = [
    "ARCHETYPES", "AimState", "BOT_KINDS", "BotConfig", "BotConfigError", "Controller", "ExecutionModule",
    "MLMoveController", "PathFollower", "PathPlanner", "RandomWalkController", "RuleMoveController",
    "ScriptedExpertController", "astar", "build_controllers", "burst_length", "play_round", "round_seed",
    "run_round", "spring_damper_step",
]
