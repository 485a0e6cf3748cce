//! Config-driven experiments.
//!
//! A JSON [`ExperimentConfig`] names one experiment kind and its grids. [`run`]
//! evaluates it in parallel and writes `<stem>.csv`, `<stem>.jsonl` and a
//! `manifest.json` (config hash, versions, master seed, file digests).
//! Every task draws from its own substream of the master seed, so output
//! bytes do not depend on the thread count. [`plotdata`] converts result
//! directories into gnuplot series.

mod config;
mod plot;
mod run;

pub use config::{
    CorpusParams, ExperimentConfig, ExperimentKind, ExperimentSpec, GalleryParams, LearnParams, StrategicParams,
    SupGapParams, CONFIG_VERSION,
};
pub use plot::{plotdata, PlotReport};
pub use run::{
    corpus_rows, gallery_rows, learn_model, learn_rows, run, run_file, strategic_rows, sup_gap_rows, FileEntry,
    GalleryRow, Manifest, RunOptions, RunReport, StrategicRow, SupGapRow, GALLERY_MATCH_TOL, RESULT_FORMAT_VERSION,
};
