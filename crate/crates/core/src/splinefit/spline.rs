//! Restricted (natural) cubic spline knots and basis.

use serde::{Deserialize, Serialize};

use crate::stats::quantile_sorted;

/// Standard knot quantiles for 3..=6 knots.
pub fn knot_quantiles(k: usize) -> Option<&'static [f64]> {
    match k {
        3 => Some(&[0.10, 0.50, 0.90]),
        4 => Some(&[0.05, 0.35, 0.65, 0.95]),
        5 => Some(&[0.05, 0.275, 0.50, 0.725, 0.95]),
        6 => Some(&[0.05, 0.23, 0.41, 0.59, 0.77, 0.95]),
        _ => None,
    }
}

pub const MAX_KNOTS: usize = 6;

/// Strictly increasing knot locations, 3 to 6 of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnotSet(Vec<f64>);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid knot set {0:?}: need 3..=6 strictly increasing finite values")]
pub struct InvalidKnots(pub Vec<f64>);

impl TryFrom<Vec<f64>> for KnotSet {
    type Error = InvalidKnots;

    fn try_from(knots: Vec<f64>) -> Result<Self, Self::Error> {
        let ok = (3..=MAX_KNOTS).contains(&knots.len())
            && knots.iter().all(|k| k.is_finite())
            && knots.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(KnotSet(knots))
        } else {
            Err(InvalidKnots(knots))
        }
    }
}

impl From<KnotSet> for Vec<f64> {
    fn from(k: KnotSet) -> Self {
        k.0
    }
}

impl KnotSet {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of regression terms the basis produces (k − 1).
    pub fn terms(&self) -> usize {
        self.0.len() - 1
    }
}

/// Knot placement result: either a usable knot set or a fall back to a single linear term.
#[derive(Debug, Clone, PartialEq)]
pub enum KnotChoice {
    Spline(KnotSet),
    Linear,
}

/// Places `d + 1` knots at the standard quantiles of `x`, dropping to fewer knots while
/// quantiles coincide, and to a linear term when fewer than three distinct knots remain.
/// Requests above five degrees of freedom are capped at six knots.
pub fn rcs_knots(x: &[f64], dof: usize) -> KnotChoice {
    if dof < 2 || x.is_empty() {
        return KnotChoice::Linear;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut k = (dof + 1).min(MAX_KNOTS);
    while k >= 3 {
        let probs = knot_quantiles(k).expect("k in 3..=6");
        let knots: Vec<f64> = probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect();
        if let Ok(set) = KnotSet::try_from(knots) {
            return KnotChoice::Spline(set);
        }
        k -= 1;
    }
    KnotChoice::Linear
}

fn cube_pos(u: f64) -> f64 {
    if u > 0.0 {
        u * u * u
    } else {
        0.0
    }
}

/// Basis `[x, s_1(x), …, s_{k−2}(x)]` normalized by `(t_k − t_1)²`.
pub fn rcs_basis(x: f64, knots: &KnotSet) -> Vec<f64> {
    let t = knots.as_slice();
    let k = t.len();
    let mut out = Vec::with_capacity(k - 1);
    out.push(x);
    rcs_nonlinear_into(x, t, &mut out);
    out
}

pub(crate) fn rcs_nonlinear_into(x: f64, t: &[f64], out: &mut Vec<f64>) {
    let k = t.len();
    let (t_last, t_prev) = (t[k - 1], t[k - 2]);
    let span = t_last - t_prev;
    let norm = (t_last - t[0]) * (t_last - t[0]);
    let tail_prev = cube_pos(x - t_prev);
    let tail_last = cube_pos(x - t_last);
    for &tj in &t[..k - 2] {
        let v = cube_pos(x - tj) - tail_prev * (t_last - tj) / span + tail_last * (t_prev - tj) / span;
        out.push(v / norm);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knots(v: &[f64]) -> KnotSet {
        KnotSet::try_from(v.to_vec()).unwrap()
    }

    #[test]
    fn uniform_grid_knots_follow_quantiles() {
        let x: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        match rcs_knots(&x, 3) {
            KnotChoice::Spline(k) => {
                for (got, want) in k.as_slice().iter().zip([0.05, 0.35, 0.65, 0.95]) {
                    assert!((got - want).abs() < 1e-12);
                }
            }
            KnotChoice::Linear => panic!("expected knots"),
        }
        match rcs_knots(&x, 2) {
            KnotChoice::Spline(k) => assert_eq!(k.len(), 3),
            KnotChoice::Linear => panic!("expected knots"),
        }
    }

    #[test]
    fn mostly_zero_column_falls_back_to_linear() {
        let mut x = vec![0.0; 950];
        x.extend((1..=50).map(|i| i as f64));
        assert_eq!(rcs_knots(&x, 3), KnotChoice::Linear);
    }

    #[test]
    fn coinciding_quantiles_drop_a_knot() {
        // Five knots collapse, four do not.
        let mut x = vec![0.0; 30];
        x.extend((1..=70).map(|i| i as f64));
        match rcs_knots(&x, 4) {
            KnotChoice::Spline(k) => assert!(k.len() <= 4),
            KnotChoice::Linear => panic!("expected knots"),
        }
    }

    #[test]
    fn left_of_first_knot_is_linear_only() {
        let b = rcs_basis(-1.0, &knots(&[0.0, 1.0, 2.0, 3.0]));
        assert_eq!(b, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn invalid_knot_sets_rejected() {
        assert!(KnotSet::try_from(vec![0.0, 1.0]).is_err());
        assert!(KnotSet::try_from(vec![0.0, 1.0, 1.0]).is_err());
        assert!(KnotSet::try_from(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).is_err());
    }
}
