"""Retakes simulator: map geometry, kinematics, combat, and round logs."""

from .geometry import MapError, MapGeometry, Region, Wall, default_map_path, load_map, parse_map
from .logs import LogFormatError, RoundLog, Snapshot, read_log, read_logs, write_log
from .moves import NUM_MOVES, STILL, MoveCommand, command_velocity, decode_move, encode_move
from .sim import DEFENSE_ELIMINATED, DEFUSED, EXPLOSION, OFFENSE_ELIMINATED, OUTCOMES, World, WorldConfig, visible
from .spawn import InitialConditions, sample_initial_conditions
from .state import DEFENSE, OFFENSE, ActionCommand, GameEvent, MapState, PlayerState

__all__ = [
    "ActionCommand", "DEFENSE", "DEFENSE_ELIMINATED", "DEFUSED", "EXPLOSION", "GameEvent", "InitialConditions",
    "LogFormatError", "MapError", "MapGeometry", "MapState", "MoveCommand", "NUM_MOVES", "OFFENSE",
    "OFFENSE_ELIMINATED", "OUTCOMES", "PlayerState", "Region", "RoundLog", "STILL", "Snapshot", "Wall", "World",
    "WorldConfig", "command_velocity", "decode_move", "default_map_path", "encode_move", "load_map", "parse_map",
    "read_log", "read_logs", "sample_initial_conditions", "visible", "write_log",
]
