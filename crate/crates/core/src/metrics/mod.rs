//! Fleet evaluation, efficiency scores and the yawn alert rule.

mod alert;
mod efficiency;
mod eval;

pub use alert::{alert_threshold, yawn_alert, AlertEvent};
pub use efficiency::{inference_efficiency, training_efficiency, ProfileRecord};
pub use eval::{accuracy, bam, evaluate_fleet, ClientEval, EvalReport, TierSummary};
