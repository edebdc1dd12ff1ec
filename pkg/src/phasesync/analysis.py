"""Per-subject pairwise tensors for recorded data."""

from .psmetrics import ALL_METRICS, Metric, pairwise_tensor
from .signals import DEFAULT_BAND, analytic_signal, bandpass, PhaseMatrix

DEFAULT_WINDOW = 28


def subject_tensors(data, metrics=ALL_METRICS, window=DEFAULT_WINDOW, band=DEFAULT_BAND):
    """All requested metric tensors for one :class:`RoiDataset`.

    Phase metrics use the phases of the band-passed data; ``CSW`` and
    ``PW_CSW`` use the band-passed data itself (``PW_CSW`` prewhitens it
    first).  Returns ``{metric: PsTensor}``.
    """
    narrow = bandpass(data, band)
    phases = PhaseMatrix(analytic_signal(narrow).phase, data.tr_seconds, list(data.region_labels))
    out = {}
    for metric in metrics:
        metric = Metric(metric)
        w = window if metric.windowed else None
        if metric.uses_phase:
            out[metric] = pairwise_tensor(phases, metric, w)
        else:
            out[metric] = pairwise_tensor(narrow, metric, w, data.tr_seconds, list(data.region_labels))
    return out
