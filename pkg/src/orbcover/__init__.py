"""Optimal satellite constellation design over discrete orbital slots."""
from __future__ import annotations

from . import formulations, geometry, metrics, model_ir, scenario, visibility
from .formulations import CoverageData, build
from .scenario import FormulationSpec, Kind, load_scenario

__version__ = "0.1.0"

__all__ = [
    "CoverageData", "FormulationSpec", "Kind", "build", "formulations", "geometry", "load_scenario", "metrics",
    "model_ir", "scenario", "visibility",
]
