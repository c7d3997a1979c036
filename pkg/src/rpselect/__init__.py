"""Delay- and delay-variation-constrained rendezvous point selection."""

from ._accel import backend
from .graph import EdgeAttr, Graph, GraphError, Path, delay_table_from, shortest_delay_path
from .metrics import (FitnessWeights, MulticastGroup, MulticastTree, QosBounds, TreeEvaluation,
                      UnreachableMember, auto_bounds, build_shared_tree, end_to_end_delays,
                      evaluate, tree_cost, tree_edge_cost)
from .selectors import (ALGORITHMS, SelectionResult, VnsConfig, neighborhood, run_selector,
                        select_akc, select_ddvca, select_random, select_tabu, select_vns)
from .topology import WaxmanParams, largest_connected_component, sample_group, waxman_generate

__version__ = "0.1.0"
