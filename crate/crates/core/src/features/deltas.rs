use super::{FeatureKind, FeatureMatrix, STATIC_DIM};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Regression deltas over ±`window` frames with edge replication.
fn regression(values: &Matrix, window: usize) -> Matrix {
    let (n, d) = (values.rows(), values.cols());
    let norm = 2.0 * (1..=window).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = Matrix::zeros(n, d);
    if n == 0 {
        return out;
    }
    let clamp = |t: isize| t.clamp(0, n as isize - 1) as usize;
    for t in 0..n {
        for k in 1..=window {
            let ahead = values.row(clamp(t as isize + k as isize));
            let behind = values.row(clamp(t as isize - k as isize));
            for (j, o) in out.row_mut(t).iter_mut().enumerate() {
                *o += k as f64 * (ahead[j] - behind[j]);
            }
        }
        for o in out.row_mut(t) {
            *o /= norm;
        }
    }
    debug_assert_eq!(out.cols(), d);
    out
}

/// Appends Δ and ΔΔ to 13-dim static features: `(static, Δ, ΔΔ)`.
pub fn add_deltas(statics: &FeatureMatrix, window: usize) -> Result<FeatureMatrix> {
    if statics.is_dynamic() || statics.dim() != STATIC_DIM || statics.kind() == FeatureKind::Combo {
        return Err(Error::InvalidArgument(alloc::format!(
            "deltas apply to 13-dim static front-ends, got {}-dim {}{}",
            statics.dim(),
            statics.kind(),
            if statics.is_dynamic() { " with deltas" } else { "" }
        )));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("delta window must be positive".into()));
    }
    let base = statics.values();
    let delta = regression(base, window);
    let accel = regression(&delta, window);
    let rows = (0..base.rows()).map(|t| {
        let mut r = alloc::vec::Vec::with_capacity(3 * STATIC_DIM);
        r.extend_from_slice(base.row(t));
        r.extend_from_slice(delta.row(t));
        r.extend_from_slice(accel.row(t));
        r
    });
    FeatureMatrix::new(Matrix::from_rows(3 * STATIC_DIM, rows)?, statics.kind(), true, statics.frame_rate())
}

/// Frame-wise concatenation of two 13-dim static matrices.
pub fn concat_static(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    for m in [a, b] {
        if m.dim() != STATIC_DIM || m.is_dynamic() {
            return Err(Error::DimensionMismatch { expected: STATIC_DIM, actual: m.dim() });
        }
    }
    if a.n_frames() != b.n_frames() {
        return Err(Error::FrameCountMismatch { left: a.n_frames(), right: b.n_frames() });
    }
    if a.frame_rate() != b.frame_rate() {
        return Err(Error::InvalidArgument("frame rates differ".into()));
    }
    let rows = (0..a.n_frames()).map(|t| {
        let mut r = alloc::vec::Vec::with_capacity(2 * STATIC_DIM);
        r.extend_from_slice(a.row(t));
        r.extend_from_slice(b.row(t));
        r
    });
    FeatureMatrix::new(Matrix::from_rows(2 * STATIC_DIM, rows)?, FeatureKind::Combo, false, a.frame_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn fm(rows: Vec<[f64; 13]>, kind: FeatureKind) -> FeatureMatrix {
        FeatureMatrix::new(Matrix::from_rows(13, rows).unwrap(), kind, false, 100.0).unwrap()
    }

    #[test]
    fn constant_features_have_zero_deltas() {
        let m = fm(alloc::vec![[1.5; 13]; 7], FeatureKind::Gfcc);
        let d = add_deltas(&m, 2).unwrap();
        assert_eq!(d.dim(), 39);
        assert!(d.is_dynamic());
        for t in 0..7 {
            assert!(d.row(t)[13..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn ramp_has_unit_slope() {
        let a = 0.7;
        let rows = (0..12).map(|t| [a * t as f64; 13]).collect();
        let d = add_deltas(&fm(rows, FeatureKind::Mfcc), 2).unwrap();
        for t in 2..10 {
            for j in 0..13 {
                assert!((d.row(t)[13 + j] - a).abs() < 1e-12);
            }
        }
        // Delta is constant on frames 2..10, so ΔΔ vanishes two frames further in.
        for t in 4..8 {
            for j in 0..13 {
                assert!(d.row(t)[26 + j].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn short_input_replicates_edges() {
        let d = add_deltas(&fm(alloc::vec![[1.0; 13], [2.0; 13]], FeatureKind::Plp), 2).unwrap();
        assert_eq!(d.n_frames(), 2);
        // Neighbours clamp: (1·(2-1) + 2·(2-1)) / 10 for both frames.
        assert!((d.row(0)[13] - 0.3).abs() < 1e-12);
        assert!((d.row(1)[13] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn delta_preconditions() {
        let m = fm(alloc::vec![[0.0; 13]; 3], FeatureKind::Mfcc);
        let d = add_deltas(&m, 2).unwrap();
        assert!(add_deltas(&d, 2).is_err());
        let lsf = FeatureMatrix::new(Matrix::zeros(3, 10), FeatureKind::Lsf, false, 100.0).unwrap();
        assert!(add_deltas(&lsf, 2).is_err());
    }

    #[test]
    fn concatenation() {
        let a = fm((0..4).map(|t| [t as f64; 13]).collect(), FeatureKind::Gfcc);
        let b = fm((0..4).map(|t| [-(t as f64); 13]).collect(), FeatureKind::Pncc);
        let c = concat_static(&a, &b).unwrap();
        assert_eq!(c.dim(), 26);
        assert_eq!(c.kind(), FeatureKind::Combo);
        let aa = concat_static(&a, &a).unwrap();
        for t in 0..4 {
            assert_eq!(&aa.row(t)[..13], a.row(t));
            assert_eq!(&aa.row(t)[13..], a.row(t));
        }
        let short = fm(alloc::vec![[0.0; 13]; 3], FeatureKind::Pncc);
        assert_eq!(concat_static(&a, &short), Err(Error::FrameCountMismatch { left: 4, right: 3 }));
    }
}
