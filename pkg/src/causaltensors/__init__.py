"""Causal structure inference for time series via stochastic channel tensors.

The package estimates, per directed pair of symbol streams, the
row-stochastic transition tensor of the communication channel selected by
the destination's own past.  A small algebra on these tensors (cascading,
context averaging, Bayes inversion, joint-parent contraction) separates
direct from relayed or common-source associations, and a pipeline built on
top of it scans delays, tests significance against time-shift surrogates
and assembles a delayed causal hypergraph.
"""

__version__ = "0.1.0"

from .alphabet import (Encoder, EmbeddedRecord, EmbeddedRecords,
                       EmbeddingSpec, PairEmbeddedRecords, SymbolSeries,
                       embed, embed_pair, encode, fit_encoder, pack_words,
                       unpack_word)
from .capacity import CapacityResult, approx_capacity, blahut_arimoto
from .dynamics import (NOISE_GENERATOR_ID, OU_BENCHMARK_NOISE, OuCoefficients,
                       OuConfig, ou_benchmark_coefficients,
                       UlamConfig, simulate_ou, simulate_ulam)
from .errors import (CausalTensorsError, DegenerateData, InsufficientData,
                     InvalidInput, NumericalError, ShapeError,
                     SingularChannel)
from .estimation import (EstimationReport, JointCounts, count_joint,
                         count_joint_pair, interaction_from_counts,
                         joint_pmf, tensor_from_counts)
from .inference import (CausalHypergraph, DirectionKind, DirectionResult,
                        EdgeCandidate, Hyperedge, PipelineConfig,
                        PipelineResult, PruneRecord, ScanResult,
                        SignificanceResult, TriadEstimate, TriadStructure,
                        TriadVerdict, build_hypergraph,
                        calibrate_triad_tols, classify_triad,
                        classify_triad_estimated, delay_consistency,
                        direction_test, estimate_triad, graph_to_dot,
                        graph_to_json_dict, prune, run_pipeline, scan_delays,
                        significance_scan,
                        significance_test)
from .information import (DpiResult, TeResult, dpi_check,
                          expected_indirect_te, mutual_information,
                          transfer_entropy, transfer_entropy_plugin)
from .tensors import (AveragedTensor, CausalTensor, Degeneracy,
                      InteractionTensor, Pmf, apply, average_tensor, cascade,
                      classify_degeneracy, contract_interaction, dagger,
                      tensor_from_json, tensor_to_json)

__all__ = [name for name in dir() if not name.startswith("_")]
