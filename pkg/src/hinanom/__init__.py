"""Query-based anomaly ranking in heterogeneous information networks."""

__version__ = "0.1.0"

from .graph import HinGraph, NetworkSchema, load_graph, nodes_of_type, schema_of, write_graph  # noqa: E402
from .metapath import CountMatrix, MetaPath, count_matrix, enumerate_metapaths, symmetric_closure  # noqa: E402
from .tensor import (CpFactors, SparseTensor3, build_network_tensor, cp_als, fit, hadamard,  # noqa: E402
                     khatri_rao, project_mode1, slice_rows, unfold_mode1)
from .qanet import AnomalyQuery, QanetParams, RankedList, anomaly_scores, kmeans, run_query  # noqa: E402
from .baselines import cossim, netout, pathsim  # noqa: E402
from .synth import SynthConfig, generate_network, generate_query, inject_anomalies  # noqa: E402
from .evaluation import ExperimentConfig, lift_index, run_experiment  # noqa: E402
