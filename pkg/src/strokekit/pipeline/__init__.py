from .advice import DEFAULT_REGIONS, DEFAULT_RULES, OptimalRegion, fire_rules, generate_advice, load_rules
from .analysis import (
    LOW_CONFIDENCE,
    ModelBundle,
    analyze_segment,
    analyze_session,
    classify_stroke,
    estimate_impact,
    load_bundle,
    rate_stroke,
    save_bundle,
)
from .augment import augment_corpus, augment_segment
from .ratings import RatingNormalization, normalize_ratings
from .training import FeatureTable, build_table, fit_classifier, fit_impact, fit_raters, train_bundle, train_task
