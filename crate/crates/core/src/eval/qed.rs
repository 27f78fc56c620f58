use std::sync::OnceLock;

use crate::chem::Descriptors;

use super::EvalError;

const PARAMS_V1: &str = include_str!("../../data/qed_lite_v1.tsv");

pub const QED_PROPERTIES: [&str; 6] = ["mw", "logp", "hbd", "hba", "rot_bonds", "aromatic_rings"];

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Window {
    lo: f64,
    lo_width: f64,
    hi: f64,
    hi_width: f64,
    /// Raw maximum, so that the rescaled desirability peaks at 1.
    peak_value: f64,
    peak_at: f64,
}

impl Window {
    fn raw(&self, x: f64) -> f64 {
        logistic((x - self.lo) / self.lo_width) * logistic((self.hi - x) / self.hi_width)
    }

    fn new(lo: f64, lo_width: f64, hi: f64, hi_width: f64) -> Window {
        let mut w = Window { lo, lo_width, hi, hi_width, peak_value: 1.0, peak_at: lo };
        // the product is unimodal; a fine scan then golden-section refinement
        let (a, b) = (lo - 10.0 * lo_width, hi + 10.0 * hi_width);
        let steps = 4000;
        let mut best = a;
        for i in 0..=steps {
            let x = a + (b - a) * i as f64 / steps as f64;
            if w.raw(x) > w.raw(best) {
                best = x;
            }
        }
        let h = (b - a) / steps as f64;
        let (mut l, mut r) = (best - h, best + h);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = r - g * (r - l);
            let m2 = l + g * (r - l);
            if w.raw(m1) < w.raw(m2) {
                l = m1;
            } else {
                r = m2;
            }
        }
        w.peak_at = (l + r) / 2.0;
        w.peak_value = w.raw(w.peak_at);
        w
    }
}

/// Six-property logistic desirability model; a simplified QED variant
/// without structural alerts.
#[derive(Debug, Clone, PartialEq)]
pub struct QedLite {
    windows: [Window; 6],
}

impl QedLite {
    /// Parses the tab-separated parameter table (`property lo lo_width hi hi_width`).
    pub fn from_tsv(text: &str) -> Result<QedLite, EvalError> {
        let mut found: [Option<Window>; 6] = [None; 6];
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(EvalError::Parameters(format!("expected 5 columns in {line:?}")));
            }
            let idx = QED_PROPERTIES
                .iter()
                .position(|p| *p == cols[0])
                .ok_or_else(|| EvalError::Parameters(format!("unknown property {:?}", cols[0])))?;
            let v: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| EvalError::Parameters(format!("bad number {c:?}"))))
                .collect::<Result<_, _>>()?;
            if !(v[1] > 0.0 && v[3] > 0.0 && v[0] < v[2]) {
                return Err(EvalError::Parameters(format!("degenerate window for {}", cols[0])));
            }
            found[idx] = Some(Window::new(v[0], v[1], v[2], v[3]));
        }
        let mut windows = [Window::new(0.0, 1.0, 1.0, 1.0); 6];
        for (i, w) in found.iter().enumerate() {
            windows[i] = w.ok_or_else(|| EvalError::Parameters(format!("missing {}", QED_PROPERTIES[i])))?;
        }
        Ok(QedLite { windows })
    }

    /// The shipped parameter set.
    pub fn v1() -> &'static QedLite {
        static V1: OnceLock<QedLite> = OnceLock::new();
        V1.get_or_init(|| QedLite::from_tsv(PARAMS_V1).expect("bundled parameters parse"))
    }

    /// Property value where the desirability of property `i` peaks.
    pub fn peak(&self, i: usize) -> f64 {
        self.windows[i].peak_at
    }

    pub fn desirability(&self, i: usize, x: f64) -> f64 {
        let w = &self.windows[i];
        (w.raw(x) / w.peak_value).min(1.0)
    }

    /// Geometric mean of the six desirabilities over raw property values in
    /// [`QED_PROPERTIES`] order.
    pub fn score_values(&self, values: [f64; 6]) -> f64 {
        let prod: f64 = values.iter().enumerate().map(|(i, x)| self.desirability(i, *x)).product();
        prod.powf(1.0 / 6.0)
    }

    pub fn score(&self, d: &Descriptors) -> f64 {
        self.score_values([
            d.mw,
            d.logp,
            d.hbd as f64,
            d.hba as f64,
            d.rot_bonds as f64,
            d.aromatic_rings as f64,
        ])
    }
}

/// Score with the shipped parameters, in [0, 1].
pub fn qed_lite(d: &Descriptors) -> f64 {
    QedLite::v1().score(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_scores_one() {
        let q = QedLite::v1();
        let peaks: [f64; 6] = std::array::from_fn(|i| q.peak(i));
        assert!((q.score_values(peaks) - 1.0).abs() < 0.01);
        for i in 0..6 {
            assert!(q.desirability(i, peaks[i] + 0.5) <= 1.0);
        }
    }

    #[test]
    fn heavy_tail_goes_to_zero() {
        let q = QedLite::v1();
        let mut v: [f64; 6] = std::array::from_fn(|i| q.peak(i));
        let mut last = 1.0;
        for mw in [600.0, 1000.0, 5000.0, 1e5] {
            v[0] = mw;
            let s = q.score_values(v);
            assert!(s < last);
            last = s;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn bad_tables() {
        assert!(QedLite::from_tsv("mw\t1\t1\t2\t1\n").is_err());
        assert!(QedLite::from_tsv("colour\t1\t1\t2\t1\n").is_err());
    }
}
