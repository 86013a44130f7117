//! Evaluation tooling: the distance-threshold baseline, confusion metrics,
//! dataset CSV I/O, synthetic data and the simulated-expert loop.

mod baseline;
mod dataset;
mod hitl;
mod metrics;
mod synth;

pub use baseline::{detect_baseline, detect_baseline_set, train_baseline, BaselineModel};
pub use dataset::{ingest_csv, parse_csv, write_csv};
pub use hitl::{simulate_hitl, HitlReport};
pub use metrics::{evaluate, ConfusionMatrix, EvalReport};
pub use synth::{base_waveform, generate_synthetic, AnomalyKind, SynthConfig};
