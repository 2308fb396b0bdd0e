"""Continuous-time random-loop Monte Carlo for Heisenberg-type spin systems.

Crosses and double bars of a marked Poisson process on graph edges tie site
lines into loops; weighted loop ensembles reproduce quantum partition and
correlation functions, which a dense exact-diagonalization oracle verifies
at desk scale.
"""

from .estimators import (PairEventProbs, SamplerConfig, correlation_plain,
                         correlation_tilde, macroscopic_fraction,
                         nematic_tilde, one_point_value, pair_event_probs,
                         pair_event_probs_multi, spin_spin_tilde)
from .events import (EventList, Event, insert_event, remove_event,
                     sample_events)
from .lattice import Graph, build_graph, chain, from_edges, torus
from .loops import LoopDecomposition, PairEvent, build_loops, classify_pair
from .measure import (EstimateWithError, WeightSpec, direct_estimate,
                      loop_weight, metropolis_estimate)
from .oracle import (count_compatible_configs, gibbs_from_events, hamiltonian,
                     pair_operator, partition_function, spin_matrices,
                     thermal_two_point)

__all__ = [
    "Event", "EventList", "EstimateWithError", "Graph", "LoopDecomposition",
    "PairEvent", "PairEventProbs", "SamplerConfig", "WeightSpec",
    "build_graph", "build_loops", "chain", "classify_pair",
    "correlation_plain", "correlation_tilde", "count_compatible_configs",
    "direct_estimate", "from_edges", "gibbs_from_events", "hamiltonian",
    "insert_event", "loop_weight", "macroscopic_fraction",
    "metropolis_estimate", "nematic_tilde", "one_point_value",
    "pair_event_probs", "pair_event_probs_multi", "pair_operator",
    "partition_function", "remove_event", "sample_events", "spin_matrices",
    "spin_spin_tilde", "thermal_two_point", "torus",
]

__version__ = "0.1.0"
