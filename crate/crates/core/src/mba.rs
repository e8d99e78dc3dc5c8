//! Revenue of a mixed bundling auction as a function of its discount `c`.
//!
//! For a fixed profile let `W` be the best welfare over allocations where no
//! bidder holds every item, `G = max_k v_k([m])`, and for each bidder `i`
//! let `A_i` (resp. `B_i`) be the best welfare of the others over allocations
//! without (resp. with) a grand-bundle winner. Then
//!
//! ```text
//! rev(c) = sum_i max(A_i, B_i + c) - n max(W, G + c) + (G if G + c > W else W)
//! ```
//!
//! Each `max(A_i, B_i + c)` bends at `c_i = A_i - B_i`; the last term jumps
//! down at `c* = W - G`. The curve is left-continuous, so the value at `c*`
//! is the left limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::welfare;
use crate::error::{domain, validation, Result};
use crate::sampling::SampleSet;
use crate::valuation::{AllocationSpace, Bundle, ValuationProfile};

/// Linear piece `slope * c + intercept` on `(start, end]`; the first piece also
/// covers `c = 0`. `end = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
}

impl Segment {
    pub fn value(&self, c: f64) -> f64 {
        self.slope * c + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbaCurve {
    pub n: usize,
    /// `c_i` per bidder; values `<= 0` mean the grand branch is active from 0.
    pub bidder_breakpoints: Vec<f64>,
    /// `W - G`; only a discontinuity when positive.
    pub c_star: f64,
    pub segments: Vec<Segment>,
    /// Revenue at `c*` (equal to the left limit), when `c* > 0`.
    pub value_at_cstar: Option<f64>,
    /// Limit of the revenue as `c` decreases to `c*`, when `c* > 0`.
    pub right_limit_at_cstar: Option<f64>,
}

struct Terms {
    w: f64,
    g: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Terms {
    fn collect(profile: &ValuationProfile) -> Result<Terms> {
        let (n, m) = (profile.n(), profile.m());
        let space = AllocationSpace::shared(n, m)?;
        let mut w = f64::NEG_INFINITY;
        let mut a = vec![f64::NEG_INFINITY; n];
        let mut values = vec![0.0; n];
        for o in 0..space.len() {
            if space.grand_to_bidder(o) {
                continue;
            }
            let bundles = space.bundles(o);
            for (i, v) in values.iter_mut().enumerate() {
                *v = profile.value(i, Bundle(bundles[i + 1]));
            }
            w = w.max(welfare(&values, None));
            for (i, ai) in a.iter_mut().enumerate() {
                *ai = ai.max(welfare(&values, Some(i)));
            }
        }
        let grand = Bundle::grand(m);
        let grand_values: Vec<f64> = (0..n).map(|k| profile.value(k, grand)).collect();
        let g = grand_values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let b = (0..n)
            .map(|i| {
                grand_values
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .fold(0.0, |acc: f64, (_, v)| acc.max(*v))
            })
            .collect();
        Ok(Terms { w, g, a, b })
    }

    /// Linear form of the segment containing the interior point `probe`.
    fn piece(&self, probe: f64) -> (f64, f64) {
        let n = self.a.len() as f64;
        let (mut slope, mut intercept) = (0.0, 0.0);
        for (ai, bi) in self.a.iter().zip(&self.b) {
            if bi + probe > *ai {
                slope += 1.0;
                intercept += bi;
            } else {
                intercept += ai;
            }
        }
        if self.g + probe > self.w {
            slope -= n;
            intercept -= (n - 1.0) * self.g;
        } else {
            intercept -= (n - 1.0) * self.w;
        }
        (slope, intercept)
    }
}

/// Builds the closed-form revenue curve of `profile` over `c >= 0`.
pub fn build_mba_curve(profile: &ValuationProfile) -> Result<MbaCurve> {
    let terms = Terms::collect(profile)?;
    let bidder_breakpoints: Vec<f64> = terms.a.iter().zip(&terms.b).map(|(a, b)| a - b).collect();
    let c_star = terms.w - terms.g;

    let mut cuts: Vec<f64> = bidder_breakpoints
        .iter()
        .copied()
        .chain(std::iter::once(c_star))
        .filter(|&x| x > 0.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut segments = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0.0;
    for k in 0..=cuts.len() {
        let end = cuts.get(k).copied();
        let probe = match end {
            Some(e) => 0.5 * (start + e),
            None => start + 1.0,
        };
        let (slope, intercept) = terms.piece(probe);
        segments.push(Segment {
            start,
            end,
            slope,
            intercept,
        });
        if let Some(e) = end {
            start = e;
        }
    }

    let mut curve = MbaCurve {
        n: profile.n(),
        bidder_breakpoints,
        c_star,
        segments,
        value_at_cstar: None,
        right_limit_at_cstar: None,
    };
    if c_star > 0.0 {
        curve.value_at_cstar = Some(curve.value(c_star));
        let after = curve
            .segments
            .iter()
            .find(|s| s.start == c_star)
            .expect("c* starts a segment");
        curve.right_limit_at_cstar = Some(after.value(c_star));
    }
    Ok(curve)
}

impl MbaCurve {
    /// Active breakpoints in `(0, inf)`, sorted, including `c*` when positive.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().filter_map(|s| s.end).collect()
    }

    fn value(&self, c: f64) -> f64 {
        let k = self
            .segments
            .partition_point(|s| s.end.is_some_and(|e| e < c));
        self.segments[k].value(c)
    }

    /// Revenue at discount `c`.
    pub fn eval(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(domain(format!("discount must be finite and >= 0, got {c}")));
        }
        Ok(self.value(c))
    }
}

/// Convenience wrapper for [`MbaCurve::eval`].
pub fn eval_mba_curve(curve: &MbaCurve, c: f64) -> Result<f64> {
    curve.eval(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbaOptimum {
    pub c_best: f64,
    pub avg_revenue: f64,
    /// False when the best value is only approached from the left of a breakpoint.
    pub attained: bool,
}

fn mean_at(curves: &[MbaCurve], c: f64) -> f64 {
    curves.iter().fold(0.0, |acc, k| acc + k.value(c)) / curves.len() as f64
}

/// Exact maximizer of average MBA revenue over `c in [0, c_max]`.
pub fn optimize_mba(sample: &SampleSet, c_max: f64) -> Result<MbaOptimum> {
    if sample.is_empty() {
        return Err(validation("sample must be nonempty"));
    }
    if !(c_max >= 0.0 && c_max.is_finite()) {
        return Err(domain(format!(
            "c_max must be finite and >= 0, got {c_max}"
        )));
    }
    let curves = sample
        .profiles
        .par_iter()
        .map(build_mba_curve)
        .collect::<Result<Vec<_>>>()?;

    let mut breaks: Vec<f64> = curves
        .iter()
        .flat_map(|k| k.breakpoints())
        .filter(|&b| b <= c_max)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut exact = vec![0.0, c_max];
    exact.extend(&breaks);
    exact.sort_by(f64::total_cmp);
    exact.dedup();

    let mut best = MbaOptimum {
        c_best: 0.0,
        avg_revenue: f64::NEG_INFINITY,
        attained: true,
    };
    for &c in &exact {
        let v = mean_at(&curves, c);
        if v > best.avg_revenue {
            best.c_best = c;
            best.avg_revenue = v;
        }
    }
    let margin = 1e-12 * best.avg_revenue.abs().max(1.0);
    for &bp in &breaks {
        let c = bp - 1e-9f64.max(1e-9 * bp);
        if c < 0.0 {
            continue;
        }
        let v = mean_at(&curves, c);
        if v > best.avg_revenue + margin {
            best = MbaOptimum {
                c_best: c,
                avg_revenue: v,
                attained: false,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{revenue, AuctionParams};

    fn v1() -> ValuationProfile {
        ValuationProfile::dense(vec![vec![0.0, 3.0, 3.0, 3.0]; 2]).unwrap()
    }

    fn v2() -> ValuationProfile {
        ValuationProfile::dense(vec![vec![0.0, 3.0, 3.0, 4.0]; 2]).unwrap()
    }

    fn engine(p: &ValuationProfile, c: f64) -> f64 {
        revenue(&AuctionParams::Mba { c }, p).unwrap()
    }

    #[test]
    fn shatter_first_profile() {
        let k = build_mba_curve(&v1()).unwrap();
        assert_eq!(k.c_star, 3.0);
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
        assert_eq!(k.eval(1.5).unwrap(), 3.0);
        assert_eq!(k.eval(3.0).unwrap(), 6.0);
        assert_eq!(k.eval(10.0).unwrap(), 3.0);
        assert_eq!(k.value_at_cstar, Some(6.0));
        assert_eq!(k.right_limit_at_cstar, Some(3.0));
        for i in 0..=1000 {
            let c = i as f64 * 0.01;
            assert!(
                (k.eval(c).unwrap() - engine(&v1(), c)).abs() <= 1e-9,
                "c = {c}"
            );
        }
    }

    #[test]
    fn shatter_second_profile() {
        let k = build_mba_curve(&v2()).unwrap();
        assert_eq!(k.c_star, 2.0);
        assert_eq!(k.eval(0.0).unwrap(), 2.0);
        assert_eq!(k.eval(1.5).unwrap(), 5.0);
        assert_eq!(k.eval(2.0).unwrap(), 6.0);
        assert_eq!(k.eval(2.5).unwrap(), 4.0);
        assert_eq!(engine(&v2(), 2.0), 6.0);
    }

    #[test]
    fn zero_profile_is_flat() {
        let z = ValuationProfile::zeros(2, 2).unwrap();
        let k = build_mba_curve(&z).unwrap();
        assert!(k.breakpoints().is_empty());
        assert_eq!(k.segments.len(), 1);
        assert_eq!(k.eval(5.0).unwrap(), 0.0);
        assert!(k.eval(-1.0).is_err());
    }

    #[test]
    fn optimize_examples() {
        let one = SampleSet::new(0, vec![v1()]).unwrap();
        let r = optimize_mba(&one, 10.0).unwrap();
        assert_eq!((r.c_best, r.avg_revenue, r.attained), (3.0, 6.0, true));

        let two = SampleSet::new(0, vec![v2(), v2()]).unwrap();
        let r = optimize_mba(&two, 10.0).unwrap();
        assert_eq!((r.c_best, r.avg_revenue, r.attained), (2.0, 6.0, true));

        let zero = SampleSet::new(0, vec![ValuationProfile::zeros(2, 2).unwrap()]).unwrap();
        let r = optimize_mba(&zero, 10.0).unwrap();
        assert_eq!((r.c_best, r.avg_revenue), (0.0, 0.0));

        assert!(optimize_mba(&one, -1.0).is_err());
    }

    #[test]
    fn optimum_respects_c_max() {
        let one = SampleSet::new(0, vec![v1()]).unwrap();
        let r = optimize_mba(&one, 2.0).unwrap();
        assert_eq!((r.c_best, r.avg_revenue), (2.0, 4.0));
    }
}
