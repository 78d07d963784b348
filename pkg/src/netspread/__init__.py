"""Cross-country flow-network spread analytics toolkit."""

__version__ = "0.1.0"

from .centrality import (
    CentralityVector,
    betweenness,
    closeness,
    clustering,
    compute_all,
    degree,
    eccentricity,
    eccentricity_from_reference,
    strength,
)
from .charts import errorbar_chart, scatter_with_layers
from .curvefit import (
    ALL_FAMILIES,
    CurveFamily,
    FitRanking,
    FitResult,
    best_fit,
    fit,
    get_family,
    group_mean,
    predict,
)
from .errors import (
    AnalysisError,
    DegenerateDataError,
    DisconnectedGraphError,
    EmissionError,
    FitDomainError,
    IngestionError,
    NetspreadError,
    SingularDesignError,
    StageCutError,
)
from .geo import emit_choropleth
from .inference import (
    BoxStats,
    MeanDiffResult,
    Quadrant,
    TTestBattery,
    box_stats,
    mean_diff_ci,
    min_max_standardize,
    quadrant_classify,
    stage_ttest_battery,
)
from .kde import (
    DensityCurve,
    StageCut,
    find_stage_cut,
    gaussian_kernel_density,
    kde_estimate,
    mass_between,
    silverman_bandwidth,
)
from .model import (
    FlowEdge,
    FlowNetwork,
    NodeRecord,
    VariablesTable,
    parse_edge_list,
    parse_nodes,
    parse_table,
    parse_variables,
    web_mercator,
)
from .pipeline import (
    RunConfig,
    StageAssignment,
    assign_stages,
    report_for_dir,
    run_pipeline,
)
