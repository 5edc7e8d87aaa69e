from .body import (
    RIG_NAMES,
    BodyModel,
    TrunkProfile,
    build_mesh,
    girth_multiplier,
    ground_truth_measurements,
    sample_surface,
)
from .bundle import (
    bundle_name,
    export_model,
    generate_dataset,
    import_model,
    iter_bundles,
    load_model,
)
from .demographics import (
    AGE_GROUPS,
    BodyParams,
    DemographicTable,
    Gender,
    GroupStats,
    load_demographic_table,
    sample_params,
    sample_population,
    truncated_normal,
)

__all__ = (
    "AGE_GROUPS",
    "RIG_NAMES",
    "BodyModel",
    "BodyParams",
    "DemographicTable",
    "Gender",
    "GroupStats",
    "TrunkProfile",
    "build_mesh",
    "bundle_name",
    "export_model",
    "generate_dataset",
    "girth_multiplier",
    "ground_truth_measurements",
    "import_model",
    "iter_bundles",
    "load_demographic_table",
    "load_model",
    "sample_params",
    "sample_population",
    "sample_surface",
    "truncated_normal",
)
