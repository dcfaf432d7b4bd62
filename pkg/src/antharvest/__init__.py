"""Deterministic simulator for RF-energy-harvesting sensor networks.

Link-budget math, measured harvest curves, battery accounting, ant-based
routing with a min-hop baseline, and a discrete-event engine that ties
them together. See the README for the CLI and configuration schema.
"""

from .energy import Battery, ConsumptionProfile, RadioState
from .harvester import (HarvestCurve, HarvestSource, Knot, NoHarvestError,
                        default_curves, harvest_at, load_curves, recharge_time)
from .rflink import (AntennaGain, LinkBudget, dbi_to_linear, directional_power_density,
                     friis_received_power, gain_from_intensities,
                     isotropic_power_density, linear_to_dbi, wavelength)
from .routing import (AntParams, AntRecord, BackwardAnt, DataPacket, ForwardAnt,
                      MinHopRouter, NodeState, ProtocolKind, RoutingTable,
                      apply_backward_update, compute_deposit, min_hop_route,
                      reassemble, select_next_hop, split_payload, visibility)
from .sim import (ComparisonResult, MetricsTimeline, Sample, Scenario, Simulation,
                  Topology, compare_protocols, generate_topology, run)

__version__ = "0.1.0"

__all__ = [
    "AntParams", "AntRecord", "AntennaGain", "BackwardAnt", "Battery",
    "ComparisonResult", "ConsumptionProfile", "DataPacket", "ForwardAnt",
    "HarvestCurve", "HarvestSource", "Knot", "LinkBudget", "MetricsTimeline",
    "MinHopRouter", "NoHarvestError", "NodeState", "ProtocolKind", "RadioState",
    "RoutingTable", "Sample", "Scenario", "Simulation", "Topology",
    "apply_backward_update", "compare_protocols", "compute_deposit",
    "dbi_to_linear", "default_curves", "directional_power_density",
    "friis_received_power", "gain_from_intensities", "generate_topology",
    "harvest_at", "isotropic_power_density", "linear_to_dbi", "load_curves",
    "min_hop_route", "reassemble", "recharge_time", "run", "select_next_hop",
    "split_payload", "visibility", "wavelength",
]
