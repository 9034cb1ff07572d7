//! Experiments on top of the dynamics: speed measurement, lemma verification,
//! parameter sweeps, configuration files and their outputs.

pub mod config;
pub mod io;
pub mod run;
pub mod speed;
pub mod sweep;
pub mod verify;

pub use config::{load_config, load_model, parse_config, parse_model, Command, RunSpec};
pub use io::{read_checkpoint, write_atomic, write_checkpoint, Checkpoint};
pub use run::{execute, resolve_rho, run_config, ExitStatus};
pub use speed::{measure_speed, measure_speed_from, measure_speed_with, SpeedEstimate, SpeedSettings};
pub use sweep::{bound_report, sweep, BoundReport, SweepOptions, SweepResult, SweepRow};
pub use verify::{verify_lemmas, verify_lemmas_from, LemmaReport, VerifySettings};
