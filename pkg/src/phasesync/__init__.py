"""Phase synchronization between time series.

Windowed metrics (phase locking value, circular-circular correlation,
toroidal circular correlation), instantaneous metrics (phase coherence,
cosine of the relative phase), Monte-Carlo simulation studies and k-means
clustering of pairwise synchronization tensors into recurring states.
"""

__version__ = "0.1.0"

from .circular import circular_mean, order_function, wrap_positive, wrap_signed
from .exceptions import PhaseSyncError
from .psmetrics import (
    Metric,
    PsSeries,
    PsTensor,
    WindowSpec,
    circ_circ_window,
    crp,
    csw_window,
    pairwise_tensor,
    phase_coherence,
    phase_difference,
    plv_window,
    prewhiten_ar1,
    sliding_apply,
    toroidal_window,
)
from .signals import (
    AnalyticSignal,
    BandSpec,
    PhaseMatrix,
    RoiDataset,
    analytic_signal,
    design_butterworth_bandpass,
    extract_phases,
    filtfilt,
)
from .simharness import SimConfig, SimId, run_simulation, summarize
from .states import davies_bouldin, kmeans, run_state_pipeline
from .surrogates import cpp_surrogate, make_rng, segment_cycles
