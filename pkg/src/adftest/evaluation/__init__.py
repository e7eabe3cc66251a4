from .kpi import (
    COMFORT_EDGES,
    COMFORT_LABELS,
    DYNAMIC_FIELDS,
    SCORE_FIELDS,
    CriticalRadius,
    KpiRefs,
    KpiVector,
    TemplateAggregate,
    aggregate_by_template,
    comfort_class,
    comfort_rms,
    compute_kpis,
    critical_radius,
    kpi_radius_trend,
    normalize_kpi,
    spearman,
)
from .signals import Signals, bandpass, derivative, derive_signals, design_bandpass, rms, zero_phase

__all__ = [
    "COMFORT_EDGES", "COMFORT_LABELS", "DYNAMIC_FIELDS", "SCORE_FIELDS", "CriticalRadius", "KpiRefs", "KpiVector",
    "Signals", "TemplateAggregate", "aggregate_by_template", "bandpass", "comfort_class", "comfort_rms",
    "compute_kpis", "critical_radius", "derivative", "derive_signals", "design_bandpass", "kpi_radius_trend",
    "normalize_kpi", "rms", "spearman", "zero_phase",
]
