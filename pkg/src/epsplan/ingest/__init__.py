"""Task ingestion: native grounded JSON and a typed-STRIPS PDDL subset."""

from .native import ParsedTask, emit_native, parse_native, parse_native_file
from .pddl import (
    GroundActionDef,
    LiftedTask,
    ground,
    ground_task,
    parse_pddl_subset,
    parse_pddl_files,
)

__all__ = [
    "ParsedTask",
    "emit_native",
    "parse_native",
    "parse_native_file",
    "GroundActionDef",
    "LiftedTask",
    "ground",
    "ground_task",
    "parse_pddl_subset",
    "parse_pddl_files",
]
