"""Core module for sunnpest - frontend-agnostic engine."""

from .bundle import FORMAT_VERSION, ModelBundle, TrainingMetadata, load_bundle, save_bundle, train_bundle
from .climate import (
    CLIMATE_COLUMNS,
    DEFAULT_MAX_GAP,
    SENSOR_FIELDS,
    GapReport,
    GapSpan,
    RawClimateRecord,
    StationMeta,
    Violation,
    frame_to_records,
    interpolate_gaps,
    parse_climate_csv,
    records_to_frame,
    sanitize_records,
    serialize_climate_csv,
    validate_record,
)
from .diagnostics import Diagnostic
from .errors import (
    BundleError,
    BundleVersionError,
    ClimateFormatError,
    EmptyDatasetError,
    FeatureArityError,
    InputError,
    InsufficientHistoryError,
    LabelFormatError,
    SunnPestError,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    Interval,
    ci_mean,
    ci_proportion,
    cross_validate_classifier,
    cross_validate_regressor,
    kfold_assign,
    pearson_r,
    t_quantile,
    z_quantile,
)
from .features import (
    ACCUMULATED_FIELDS,
    FEATURE_SETS,
    Dataset,
    FeatureSetSpec,
    LabeledInstance,
    LabelRecord,
    NymphStageRatios,
    Phase,
    SeasonClock,
    accumulate_season,
    build_dataset,
    counts_to_ratios,
    drop_incomplete_days,
    feature_set,
    parse_labels_csv,
)
from .forecast import DailyForecast, WarningRule, WarningStatus, forecast_corpus, forecast_station, warning_decision
from .pipeline import Corpus, StationSeries, corpus_dataset, load_corpus
from .synthetic import SynthConfig, SynthSeason, generate_seasons, nymph_ratio_oracle, phase_oracle
from .trees import (
    ForestModel,
    RatioPredictor,
    SplitChoice,
    TrainParams,
    TreeModel,
    best_split,
    entropy_impurity,
    gini_impurity,
    mae_criterion,
    predict_phase,
    predict_ratios,
    train_forest,
    train_ratio_predictor,
    train_tree,
)

__all__ = [
    # Climate ingest
    'CLIMATE_COLUMNS',
    'DEFAULT_MAX_GAP',
    'SENSOR_FIELDS',
    'StationMeta',
    'RawClimateRecord',
    'Violation',
    'GapSpan',
    'GapReport',
    'parse_climate_csv',
    'serialize_climate_csv',
    'validate_record',
    'sanitize_records',
    'records_to_frame',
    'frame_to_records',
    'interpolate_gaps',
    'Diagnostic',
    # Features
    'ACCUMULATED_FIELDS',
    'FEATURE_SETS',
    'Phase',
    'SeasonClock',
    'NymphStageRatios',
    'FeatureSetSpec',
    'LabelRecord',
    'LabeledInstance',
    'Dataset',
    'feature_set',
    'drop_incomplete_days',
    'accumulate_season',
    'counts_to_ratios',
    'parse_labels_csv',
    'build_dataset',
    # Trees
    'TrainParams',
    'SplitChoice',
    'TreeModel',
    'ForestModel',
    'RatioPredictor',
    'gini_impurity',
    'entropy_impurity',
    'mae_criterion',
    'best_split',
    'train_tree',
    'train_forest',
    'train_ratio_predictor',
    'predict_phase',
    'predict_ratios',
    # Evaluation
    'ConfusionMatrix',
    'Interval',
    'EvalReport',
    'kfold_assign',
    'cross_validate_classifier',
    'cross_validate_regressor',
    'ci_proportion',
    'ci_mean',
    'pearson_r',
    'z_quantile',
    't_quantile',
    # Synthetic data
    'SynthConfig',
    'SynthSeason',
    'phase_oracle',
    'nymph_ratio_oracle',
    'generate_seasons',
    # Pipeline, bundle, forecasts
    'StationSeries',
    'Corpus',
    'load_corpus',
    'corpus_dataset',
    'FORMAT_VERSION',
    'ModelBundle',
    'TrainingMetadata',
    'train_bundle',
    'save_bundle',
    'load_bundle',
    'WarningRule',
    'WarningStatus',
    'DailyForecast',
    'warning_decision',
    'forecast_station',
    'forecast_corpus',
    # Errors
    'SunnPestError',
    'InputError',
    'ClimateFormatError',
    'LabelFormatError',
    'EmptyDatasetError',
    'InsufficientHistoryError',
    'FeatureArityError',
    'BundleError',
    'BundleVersionError',
]
