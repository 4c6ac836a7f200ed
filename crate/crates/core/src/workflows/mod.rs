//! End-to-end analyses: synthetic data, recognition, rates and bottlenecks,
//! rate-linked features, posture variation and re-timing of the reference.

mod practice;
mod recognition;
mod synth;
mod timing;
mod variation;

pub use practice::{best_practice, percentile, BestPractice, PracticeLevel, PracticeOptions};
pub use recognition::{
    class_table, classify_1nn, distance_matrix, matrix_csv, reference_posture, split_train_test, tsrvfs, ClassTable,
    Classification, Prediction,
};
pub use synth::{class_templates, synthesize_dataset, ClassSpec, DatasetSpec};
pub use timing::{
    aligned_sequence, find_bottleneck, find_bottleneck_printed, pooled_mean, rate_analysis, restandardize,
    window_argmin, BottleneckMode, BottleneckReport, RateRecord, Restandardized, DEFAULT_WINDOW,
};
pub use variation::{default_s_values, motion_variation, VariationReport};
