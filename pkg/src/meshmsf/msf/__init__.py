from .boruvka import coarsen, ensure_loops, select_min_incident
from .driver import MsfResult, RunStats, connected_components, ingest, msf, run_msf, side_for
from .labeling import (
    ContractionMap,
    adopt_singletons,
    build_directed_forest,
    label_trees,
    resolve_greatest_ancestors,
    unwind_labels,
)
