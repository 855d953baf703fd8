"""End-to-end pipeline driver, artifact persistence, the CLI and the live
steering service."""

from ctxctl.service.scenario_io import load_scenario, parse_scenario_toml
from ctxctl.service.artifacts import PipelineArtifacts, run_synthesis, save_artifacts, load_artifacts

__all__ = [
    "load_scenario", "parse_scenario_toml",
    "PipelineArtifacts", "run_synthesis", "save_artifacts", "load_artifacts",
]
