use crate::error::ScoreError;
use crate::model::Timestamp;

/// Linear decay of the distance between two dates, clipped at the window.
///
/// `max(0, 1 - |release - artifact| / window)` with the distance in
/// fractional days.
pub fn time_score(release_date: Timestamp, artifact_date: Timestamp, window_days: u32) -> f64 {
    let window = f64::from(window_days.max(1));
    let distance = release_date.days_since(artifact_date).abs();
    (1.0 - distance / window).max(0.0)
}

/// `alpha * text + (1 - alpha) * time`.
pub fn fuse(text_score: f64, time_score: f64, alpha: f64) -> Result<f64, ScoreError> {
    for (name, v) in [("text_score", text_score), ("time_score", time_score), ("alpha", alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(ScoreError::Domain(format!("{name} = {v}")));
        }
    }
    Ok(alpha * text_score + (1.0 - alpha) * time_score)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(d: f64) -> Timestamp {
        Timestamp::from_unix(1_700_000_000 + (d * 86_400.0) as i64)
    }

    #[test]
    fn time_score_examples() {
        assert_eq!(time_score(day(0.0), day(0.0), 30), 1.0);
        assert_eq!(time_score(day(30.0), day(0.0), 30), 0.0);
        assert_eq!(time_score(day(15.0), day(0.0), 30), 0.5);
        assert_eq!(time_score(day(0.0), day(45.0), 30), 0.0);
        assert_eq!(time_score(day(0.0), day(0.5), 1), 0.5);
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse(1.0, 1.0, 0.7).unwrap(), 1.0);
        assert!((fuse(1.0, 0.0, 0.7).unwrap() - 0.7).abs() < 1e-12);
        assert!((fuse(0.0, 0.5, 0.7).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn fuse_rejects_out_of_range() {
        assert!(fuse(1.1, 0.0, 0.7).is_err());
        assert!(fuse(0.0, -0.1, 0.7).is_err());
        assert!(fuse(0.0, 0.0, 1.5).is_err());
        assert!(fuse(f64::NAN, 0.0, 0.5).is_err());
    }
}
