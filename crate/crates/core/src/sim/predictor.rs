//! Traffic predictors used at decision instants.

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// Reads the pre-generated trace: predictions are exact.
    Oracle,
    /// Expects arrivals at the mean rate.
    Mean,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::Oracle => "oracle",
            PredictorKind::Mean => "mean",
        }
    }
}

impl std::str::FromStr for PredictorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(PredictorKind::Oracle),
            "mean" => Ok(PredictorKind::Mean),
            other => Err(format!(
                "unknown predictor `{other}` (expected oracle or mean)"
            )),
        }
    }
}

/// What a predictor may look at: the arrival rate and, when the trace was
/// generated up front, the arrivals still to come.
#[derive(Debug, Clone, Copy)]
pub struct Outlook<'a> {
    pub lambda: f64,
    /// Future arrivals in time order, or `None` for live sources.
    pub upcoming: Option<&'a [f64]>,
}

impl PredictorKind {
    /// Predicted number of arrivals over `(now, now + window]`.
    pub fn predict(self, o: &Outlook<'_>, now: f64, window: f64) -> Result<f64, SimError> {
        if window <= 0.0 {
            return Ok(0.0);
        }
        match self {
            PredictorKind::Mean => Ok(o.lambda * window),
            PredictorKind::Oracle => {
                let up = o.upcoming.ok_or(SimError::OracleUnavailable)?;
                let lo = up.partition_point(|&t| t <= now);
                let hi = up.partition_point(|&t| t <= now + window);
                Ok((hi - lo) as f64)
            }
        }
    }

    /// Predicted time until `need` more packets have arrived; infinite when
    /// the prediction never gets there.
    pub fn fill_time(self, o: &Outlook<'_>, now: f64, need: u32) -> Result<f64, SimError> {
        if need == 0 {
            return Ok(0.0);
        }
        match self {
            PredictorKind::Mean => Ok(if o.lambda > 0.0 {
                f64::from(need) / o.lambda
            } else {
                f64::INFINITY
            }),
            PredictorKind::Oracle => {
                let up = o.upcoming.ok_or(SimError::OracleUnavailable)?;
                let first = up.partition_point(|&t| t <= now);
                Ok(up
                    .get(first + need as usize - 1)
                    .map_or(f64::INFINITY, |&t| t - now))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_window_predicts_nothing() {
        let o = Outlook {
            lambda: 1e4,
            upcoming: Some(&[0.1, 0.2]),
        };
        assert_eq!(PredictorKind::Oracle.predict(&o, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(PredictorKind::Mean.predict(&o, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_is_rate_times_window() {
        let o = Outlook {
            lambda: 1e4,
            upcoming: None,
        };
        assert!((PredictorKind::Mean.predict(&o, 3.0, 1e-3).unwrap() - 10.0).abs() < 1e-12);
        assert!((PredictorKind::Mean.fill_time(&o, 3.0, 5).unwrap() - 5e-4).abs() < 1e-18);
    }

    #[test]
    fn oracle_reads_the_trace() {
        let trace = [0.5, 1.0, 1.5, 2.5];
        let o = Outlook {
            lambda: 1.0,
            upcoming: Some(&trace),
        };
        assert_eq!(PredictorKind::Oracle.predict(&o, 0.9, 1.0).unwrap(), 2.0);
        assert_eq!(PredictorKind::Oracle.fill_time(&o, 1.0, 2).unwrap(), 1.5);
        assert_eq!(
            PredictorKind::Oracle.fill_time(&o, 1.0, 3).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn oracle_needs_a_trace() {
        let o = Outlook {
            lambda: 1.0,
            upcoming: None,
        };
        assert_eq!(
            PredictorKind::Oracle.fill_time(&o, 0.0, 1),
            Err(SimError::OracleUnavailable)
        );
    }
}
