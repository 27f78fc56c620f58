use serde::{Deserialize, Serialize};

use super::{CompoundRecord, DataError};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// ADMET windows. Every bound applies only when the record carries the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub mw: Interval,
    pub logp: Interval,
    pub logs: Interval,
    /// Strict upper bound.
    pub logherg_below: f64,
    pub metab: Interval,
    pub ro5_max: u32,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            mw: Interval { lo: 130.0, hi: 725.0 },
            logp: Interval { lo: -2.0, hi: 6.5 },
            logs: Interval { lo: -6.5, hi: 0.5 },
            logherg_below: -5.0,
            metab: Interval { lo: 1.0, hi: 8.0 },
            ro5_max: 1,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        for (name, iv) in [("mw", self.mw), ("logp", self.logp), ("logs", self.logs), ("metab", self.metab)] {
            if !(iv.lo <= iv.hi) {
                return Err(DataError::Bounds(format!("{name}: {} > {}", iv.lo, iv.hi)));
            }
        }
        if !self.logherg_below.is_finite() {
            return Err(DataError::Bounds("logherg_below must be finite".into()));
        }
        Ok(())
    }

    /// Overrides one bound by key (`mw_min`, `mw_max`, ..., `logherg_below`,
    /// `ro5_max`). Returns false for keys it does not own. Bounds are not
    /// cross-checked here, since a pair may pass through an inverted state
    /// while being set; call [`FilterSpec::validate`] afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, DataError> {
        if !self.entries().iter().any(|(k, _)| *k == key) {
            return Ok(false);
        }
        let v: f64 = value.trim().parse().map_err(|_| DataError::Bounds(format!("{key}: bad value {value:?}")))?;
        match key {
            "mw_min" => self.mw.lo = v,
            "mw_max" => self.mw.hi = v,
            "logp_min" => self.logp.lo = v,
            "logp_max" => self.logp.hi = v,
            "logs_min" => self.logs.lo = v,
            "logs_max" => self.logs.hi = v,
            "logherg_below" => self.logherg_below = v,
            "metab_min" => self.metab.lo = v,
            "metab_max" => self.metab.hi = v,
            "ro5_max" if v >= 0.0 && v.fract() == 0.0 => self.ro5_max = v as u32,
            "ro5_max" => return Err(DataError::Bounds(format!("ro5_max must be a count, got {value}"))),
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("mw_min", self.mw.lo.to_string()),
            ("mw_max", self.mw.hi.to_string()),
            ("logp_min", self.logp.lo.to_string()),
            ("logp_max", self.logp.hi.to_string()),
            ("logs_min", self.logs.lo.to_string()),
            ("logs_max", self.logs.hi.to_string()),
            ("logherg_below", self.logherg_below.to_string()),
            ("metab_min", self.metab.lo.to_string()),
            ("metab_max", self.metab.hi.to_string()),
            ("ro5_max", self.ro5_max.to_string()),
        ]
    }

    /// Every violated bound, empty when the record passes.
    pub fn violations(&self, r: &CompoundRecord) -> Vec<String> {
        let mut out = Vec::new();
        let mut window = |name: &str, v: Option<f64>, iv: Interval| {
            if let Some(v) = v {
                if !iv.contains(v) {
                    out.push(format!("{name} {v} outside [{}, {}]", iv.lo, iv.hi));
                }
            }
        };
        window("MW", r.mw, self.mw);
        window("logPo_w", r.logp, self.logp);
        window("logS", r.logs, self.logs);
        window("metab", r.metab.map(f64::from), self.metab);
        if let Some(h) = r.logherg {
            if h >= self.logherg_below {
                out.push(format!("logHERG {h} not below {}", self.logherg_below));
            }
        }
        if let Some(n) = r.ro5_violations {
            if n > self.ro5_max {
                out.push(format!("ro5_violations {n} above {}", self.ro5_max));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub passed: Vec<CompoundRecord>,
    pub failed: Vec<(CompoundRecord, Vec<String>)>,
}

/// Splits `records` by `spec`, preserving input order on both sides.
pub fn admet_filter(records: &[CompoundRecord], spec: &FilterSpec) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for r in records {
        let v = spec.violations(r);
        if v.is_empty() {
            out.passed.push(r.clone());
        } else {
            out.failed.push((r.clone(), v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Library;

    fn rec(mw: f64, logp: f64, logs: f64, logherg: f64, metab: u32, ro5: u32) -> CompoundRecord {
        CompoundRecord {
            id: "x".into(),
            smiles: "C".into(),
            library: Library::Other,
            mw: Some(mw),
            logp: Some(logp),
            logs: Some(logs),
            logherg: Some(logherg),
            metab: Some(metab),
            ro5_violations: Some(ro5),
            dock: Default::default(),
            line: 2,
        }
    }

    #[test]
    fn mean_profile_passes() {
        let s = FilterSpec::default();
        assert!(s.violations(&rec(366.68, 3.39, -4.59, -6.0, 4, 0)).is_empty());
    }

    #[test]
    fn named_failures() {
        let s = FilterSpec::default();
        let v = s.violations(&rec(129.0, 3.0, -4.0, -6.0, 4, 0));
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("MW"));
        let v = s.violations(&rec(300.0, 3.0, -4.0, -4.5, 4, 0));
        assert!(v[0].starts_with("logHERG"));
        // the hERG bound is strict
        assert_eq!(s.violations(&rec(300.0, 3.0, -4.0, -5.0, 4, 0)).len(), 1);
        assert_eq!(s.violations(&rec(100.0, 7.0, 1.0, 0.0, 0, 2)).len(), 6);
    }

    #[test]
    fn overrides_are_checked() {
        let mut s = FilterSpec::default();
        assert!(s.set("mw_max", "500").unwrap());
        assert_eq!(s.mw.hi, 500.0);
        assert!(!s.set("colour", "1").unwrap());
        assert!(!s.set("fusion_mode", "concat").unwrap());
        assert!(s.set("mw_min", "x").is_err());
        s.set("mw_min", "900").unwrap();
        assert!(s.validate().is_err());
    }
}
