"""Simulation of isotropic Gaussian random fields on graphs with Euclidean edges.

The field's covariance is a function of the resistance metric.  The package
provides the metric-graph data model, analytic resistance distances, a catalog
of valid correlation models, three linear-cost simulation algorithms
(spectral, Poisson dilution, germ dilution), and the statistical validation
battery (variograms, madograms, Student tests, Shapiro-Wilk normality
experiments).
"""

__version__ = "0.1.0"

from .errors import (
    FactorizationError,
    GraphFieldsError,
    GraphFormatError,
    GraphValidationError,
    ModelError,
    PointError,
    QuadratureError,
    SimulationError,
    StatsError,
)
from .graphs import (
    Edge,
    EdgePoint,
    MetricGraph,
    PointSet,
    Vertex,
    VertexPoint,
    canonical_point,
    discretize,
    load_graph,
    load_points,
    split_edge,
    validate_graph,
)
from .covmodels import (
    CovarianceModel,
    CovOracleConfig,
    cov_oracle,
    cov_value,
    dilution_eval,
    model_spec,
    parse_model,
    sample_spectral,
    transitive_covariogram,
)
from .resistance import (
    AuxFieldRealization,
    LaplacianSystem,
    ResistanceMatrix,
    build_laplacian,
    resistance_distance,
    resistance_matrix,
    simulate_aux_field,
    vertex_covariance_form,
)
from .simulate import (
    CauchyGerm,
    RealizationSet,
    SimConfig,
    read_realizations,
    rng_substream,
    simulate,
    simulate_germ_dilution,
    simulate_poisson_dilution,
    simulate_spectral,
    write_realizations,
)
from .stats import (
    NormalityReport,
    TTestReport,
    VariogramEstimate,
    empirical_semimadogram,
    empirical_semivariogram,
    normality_experiment,
    shapiro_wilk,
    theoretical_curves,
    variogram_ttest,
)
from ._backend import BACKEND, available_backends
