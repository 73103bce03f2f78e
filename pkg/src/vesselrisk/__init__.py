"""Long-term vessel incident-risk feature selection.

Event-history ingestion, candidate-factor extraction, risk labeling,
SMOTE-Tomek rebalancing, a from-scratch random forest with per-class SHAP
importance, correlation-aware rank filtering, and cross-validated
key-factor selection — plus a synthetic-fleet generator with planted
ground truth for end-to-end verification.
"""

from .errors import (CoverageError, DataError, InvariantError, ParseError,
                     UsageError, VesselRiskError)
from .events import (EventStore, IncidentRecord, DeficiencyRecord, DetentionRecord,
                     SailingDay, MembershipInterval, FlagDemeritRecord, VesselProfile,
                     load_store)
from .factors import (DecaySchedule, SeverityWeights, LabelThresholds, FactorDescriptor,
                      FactorCatalog, FactorEvaluator, LabeledDataset, build_catalog,
                      assemble_dataset, decayed_cumulative, severity_sum, grade_label,
                      fleet_size)
from .forest import ForestConfig, RandomForestModel, fit, gini_impurity
from .shap_values import (ShapMatrix, ImportanceRank, tree_shap, shap_matrix,
                          brute_force_shapley, aggregate_importance, category_aggregate)
from .filtering import (CorrelationMatrix, FilterConfig, FilterResult, pearson,
                        correlation_matrix, sliding_filter, replay_trace)
from .resample import ResampleConfig, ResampledDataset, smote, smote_tomek, tomek_links
from .selection import (CVConfig, GridSpec, MetricSet, TopNResult, GridSearchResult,
                        stratified_kfold, compute_metrics, evaluate_cv, top_n_selection,
                        conventional_baseline, grid_search)
from .synth import SynthConfig, GroundTruth, generate, default_datestamps
from .pipeline import PipelineConfig, SelectionResult, rank_factors, run_selection

__version__ = "1.0.0"
