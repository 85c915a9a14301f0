use serde::{Deserialize, Serialize};

use super::features::FeatureVector;
use super::TraceError;

/// Per-feature standardization fitted on a training set.
///
/// Features with zero spread use a unit divisor, so the training value maps to
/// 0 and a later deviation passes through unscaled instead of producing NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub schema: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Fits on feature vectors that share one schema.
    pub fn fit(data: &[FeatureVector]) -> Result<Self, TraceError> {
        let first = data.first().ok_or(TraceError::EmptyDataset)?;
        for v in data {
            if v.schema != first.schema {
                return Err(TraceError::SchemaMismatch {
                    expected: first.schema.join(","),
                    found: v.schema.join(","),
                });
            }
        }
        let rows: Vec<&[f64]> = data.iter().map(|v| v.values.as_slice()).collect();
        let mut s = Self::fit_rows(&rows)?;
        s.schema = first.schema.iter().map(|n| n.to_string()).collect();
        Ok(s)
    }

    /// Fits on raw rows of equal width; the schema is left empty.
    pub fn fit_rows(rows: &[&[f64]]) -> Result<Self, TraceError> {
        let width = rows.first().ok_or(TraceError::EmptyDataset)?.len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(TraceError::SchemaMismatch { expected: format!("{width} columns"), found: "ragged rows".into() });
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for r in rows {
            for (m, x) in means.iter_mut().zip(r.iter()) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; width];
        for r in rows {
            for ((s, x), m) in stds.iter_mut().zip(r.iter()).zip(&means) {
                *s += (x - m) * (x - m);
            }
        }
        stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Ok(Scaler { schema: Vec::new(), means, stds })
    }

    /// Single-column scaler for a time series.
    pub fn fit_series(series: &[f64]) -> Result<Self, TraceError> {
        let rows: Vec<&[f64]> = series.iter().map(std::slice::from_ref).collect();
        Self::fit_rows(&rows)
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    fn divisor(std: f64) -> f64 {
        if std > 0.0 {
            std
        } else {
            1.0
        }
    }

    pub fn scale(&self, v: &FeatureVector) -> Result<FeatureVector, TraceError> {
        self.check(v)?;
        Ok(FeatureVector::new(self.scale_values(&v.values), v.schema))
    }

    /// Scales raw values; the caller guarantees the width.
    pub fn scale_values(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / Self::divisor(*s))
            .collect()
    }

    pub fn scale_value(&self, column: usize, x: f64) -> f64 {
        (x - self.means[column]) / Self::divisor(self.stds[column])
    }

    pub fn inverse(&self, v: &FeatureVector) -> Result<FeatureVector, TraceError> {
        self.check(v)?;
        let values = v
            .values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| x * Self::divisor(*s) + m)
            .collect();
        Ok(FeatureVector::new(values, v.schema))
    }

    fn check(&self, v: &FeatureVector) -> Result<(), TraceError> {
        let named = !self.schema.is_empty();
        if v.len() != self.width() || (named && !self.schema.iter().zip(v.schema.iter()).all(|(a, b)| a == b)) {
            return Err(TraceError::SchemaMismatch { expected: self.schema.join(","), found: v.schema.join(",") });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &[&str] = &["x"];

    fn fv(x: f64) -> FeatureVector {
        FeatureVector::new(vec![x], ONE)
    }

    #[test]
    fn two_point_fit() {
        let s = Scaler::fit(&[fv(0.0), fv(2.0)]).unwrap();
        assert_eq!(s.means, vec![1.0]);
        assert_eq!(s.stds, vec![1.0]);
        assert_eq!(s.scale(&fv(2.0)).unwrap().values, vec![1.0]);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let s = Scaler::fit(&[fv(5.0), fv(5.0)]).unwrap();
        assert_eq!(s.scale(&fv(5.0)).unwrap().values, vec![0.0]);
        assert!(s.scale(&fv(6.0)).unwrap().values[0].is_finite());
    }

    #[test]
    fn schema_mismatch() {
        const TWO: &[&str] = &["a", "b"];
        let s = Scaler::fit(&[fv(1.0)]).unwrap();
        assert!(s.scale(&FeatureVector::new(vec![1.0, 2.0], TWO)).is_err());
        assert!(Scaler::fit(&[fv(1.0), FeatureVector::new(vec![1.0, 2.0], TWO)]).is_err());
        assert!(matches!(Scaler::fit(&[]), Err(TraceError::EmptyDataset)));
    }
}
