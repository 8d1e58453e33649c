//! Agreement, correlation, bucketing, threshold and timing statistics over
//! completed annotation decisions.

pub mod agreement;
pub mod buckets;
pub mod correlation;
pub mod ingest;
pub mod records;
pub mod report;
pub mod timing;

pub use agreement::{
    chance_agreement, cohen_kappa, confusion, observed_agreement, to_binary, Binary,
    ConfusionMatrix2x2,
};
pub use buckets::{
    bucket_index, bucketed_correlation, bucketize, threshold_estimate, BucketStat,
    ThresholdEstimate,
};
pub use correlation::{average_ranks, pearson, spearman, Correlation};
pub use ingest::{ingest_sheet, SheetIngest};
pub use records::DecisionRecord;
pub use report::{analyze, Report};
pub use timing::{batch_times, parse_batch_minutes, timing_summary, AnnotatorTiming, BatchTime};
