use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A drowsiness alert raised on a run of consecutive yawn frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertEvent {
    /// 1-based index of the frame that crossed the threshold.
    pub frame: usize,
    /// Length of the yawn run at that frame.
    pub run_length: usize,
}

/// Consecutive-frame threshold: two seconds of video, `ceil(fps × 2)`.
pub fn alert_threshold(fps: f64) -> Result<usize> {
    if fps <= 0.0 || !fps.is_finite() {
        return Err(Error::field("fps", "fps must be > 0"));
    }
    Ok((fps * 2.0).ceil() as usize)
}

/// Fires once per yawn run, on the first frame where the run length strictly
/// exceeds the threshold. A non-yawn frame resets the run.
pub fn yawn_alert(predictions: &[bool], fps: f64) -> Result<Vec<AlertEvent>> {
    let threshold = alert_threshold(fps)?;
    let mut events = Vec::new();
    let mut run = 0;
    for (i, &yawn) in predictions.iter().enumerate() {
        if yawn {
            run += 1;
            if run == threshold + 1 {
                events.push(AlertEvent {
                    frame: i + 1,
                    run_length: run,
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_fps_rounds_threshold_up() {
        assert_eq!(alert_threshold(7.3).unwrap(), 15);
        assert_eq!(alert_threshold(10.0).unwrap(), 20);
        assert!(alert_threshold(0.0).is_err());
    }

    #[test]
    fn one_alert_per_run() {
        let mut frames = vec![true; 50];
        frames.push(false);
        frames.extend(vec![true; 25]);
        let events = yawn_alert(&frames, 10.0).unwrap();
        assert_eq!(
            events,
            vec![
                AlertEvent { frame: 21, run_length: 21 },
                AlertEvent { frame: 72, run_length: 21 }
            ]
        );
    }
}
