"""orthomem: manifold-constrained linear recurrent memory and its measurement kit.

The package has three layers:

* numerics -- :mod:`orthomem.linalg` (oracle-grade dense routines),
  :mod:`orthomem.state` (gated update + orthogonal projection),
  :mod:`orthomem.features` (polarity-aware feature enhancement);
* measurement -- :mod:`orthomem.diagnostics` (spectral trajectory reports),
  :mod:`orthomem.metrics` (overlap/boundary/area metrics);
* plumbing -- :mod:`orthomem.engine` (stream generation and variant runs),
  :mod:`orthomem.io` (OST1 tensors, configs), :mod:`orthomem.cli`.
"""

from .diagnostics import StepDiagnostics, TrajectoryReport, step_diagnostics, summarize
from .engine import (
    GateSchedule,
    RunResult,
    StreamSpec,
    Variant,
    VariantConfig,
    generate_stream,
    recall,
    run,
    run_many,
)
from .errors import ConfigError, FormatError, RankDeficientError, UndefinedMetricError
from .features import (
    BranchWeights,
    branch,
    decompose,
    enhance,
    fuse,
    load_branch_weights,
    local_field,
    random_branch_weights,
    save_branch_weights,
)
from .io import read_ost1, write_ost1
from .linalg import SvdResult, frobenius_norm, matmul, polar_factor, svd
from .metrics import (
    EfStats,
    dice,
    ef_area,
    ef_stats,
    hd95,
    load_pgm,
    temporal_matching_error,
)
from .state import (
    FAST_COEFFS,
    STRICT_COEFFS,
    GateParams,
    NsConfig,
    StateMatrix,
    euclidean_update,
    ns_config,
    ns_step,
    orthogonalize,
    prescale,
    random_orthogonal_state,
    step,
    surrogate_gradient,
    zero_state,
)

__version__ = "0.1.0"
