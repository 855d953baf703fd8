"""The certified interfaces between the logical and continuous layers:
cRWA extraction, the merged game, the control graph with its persistent
live-groups, and the final product game."""

from ctxctl.pipeline.crwa import CrwaEntry, ExtractedCrwas, extract_crwas
from ctxctl.pipeline.merge import MergedGame, merge_game
from ctxctl.pipeline.controlgraph import (
    CatalogEntry,
    ControlGraph,
    ControllerCatalog,
    build_control_graph,
    build_live_groups,
)
from ctxctl.pipeline.product import FinalGame, product_final_game

__all__ = [
    "CrwaEntry", "ExtractedCrwas", "extract_crwas",
    "MergedGame", "merge_game",
    "CatalogEntry", "ControlGraph", "ControllerCatalog",
    "build_control_graph", "build_live_groups",
    "FinalGame", "product_final_game",
]
