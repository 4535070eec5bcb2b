from stillpos.simnode.node import Block, SimNode, UtxoEntry
from stillpos.simnode.scenario import ScenarioError, ScenarioRunner, parse_script

__all__ = [
    "SimNode",
    "Block",
    "UtxoEntry",
    "ScenarioRunner",
    "ScenarioError",
    "parse_script",
]
