//! Ingestion, cleaning, metrics, synthetic data and end-to-end runs.

mod clean;
mod ingest;
mod metrics;
mod output;
mod run;
mod synth;

pub use clean::{clean_series, median_mad, split_index, split_train_test, CleanConfig};
pub use ingest::{
    format_time, load_adjacency, load_station_csv, write_adjacency, write_station_csv, CsvSchema, GapReport,
    RawSeries,
};
pub use metrics::{aggregate_components, compute_metrics, MetricsReport};
pub use synth::{daily_profile, synth_traffic, SynthConfig, SAMPLES_PER_DAY};
pub use run::{
    run_on_stations, run_pipeline, ComponentReport, PipelineConfig, PipelineReport, VanillaConfig, FULL, GWO_LSTM,
    VANILLA_LSTM,
};
pub use output::{read_imfs_csv, write_components_csv, write_imfs_csv, write_predictions_csv};
