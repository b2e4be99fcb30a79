"""Analog realization of a reduced explicit policy."""
from .adder import AdderDesign, AdderInput, synth_adder
from .comparator import (ComparatorDesign, divider_gains, row_alpha, separator_alpha,
                         share_comparators, side_conductances, synth_comparator)
from .interpret import DeviationReport, NetlistError, NetlistInterpreter, explain_deviations
from .logic import LogicNetwork, minimize, minimize_logic, logic_for_policy, render
from .netlist import (Component, DanglingNode, Netlist, Synthesis, SynthesisSettings,
                      synthesize)
from .series import E24, E96, round_to_series

__all__ = [
    "AdderDesign", "AdderInput", "synth_adder", "ComparatorDesign", "divider_gains",
    "row_alpha", "separator_alpha", "share_comparators", "side_conductances",
    "synth_comparator", "DeviationReport", "explain_deviations", "NetlistError",
    "NetlistInterpreter", "LogicNetwork", "minimize",
    "minimize_logic", "logic_for_policy", "render", "Component", "DanglingNode", "Netlist",
    "Synthesis", "SynthesisSettings", "synthesize", "E24", "E96", "round_to_series",
]
