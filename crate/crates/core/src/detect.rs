//! Non-coherent DBPSK decision variables and the branch combiners.

use num_complex::Complex64;

/// The branch picked by the selection combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Direct,
    /// Zero-based relay index.
    Relay(usize),
}

/// Decision variables of one symbol interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionStats {
    pub zeta0: f64,
    pub zeta_relay: Vec<f64>,
    pub combined: f64,
    pub chosen_branch: Branch,
}

impl DecisionStats {
    /// Builds the statistics with the selection-combiner output filled in.
    pub fn selection(zeta0: f64, zeta_relay: Vec<f64>) -> Self {
        let (combined, chosen_branch) = sc_combine(zeta0, &zeta_relay);
        Self {
            zeta0,
            zeta_relay,
            combined,
            chosen_branch,
        }
    }
}

/// `Re{conj(y[k-1]) y[k]}`.
#[inline]
pub fn decision_variable(y_prev: Complex64, y_curr: Complex64) -> f64 {
    y_prev.re * y_curr.re + y_prev.im * y_curr.im
}

/// Returns the branch value of largest magnitude. Ties go to the direct
/// branch, then to the lower relay index.
#[inline]
pub fn sc_combine(zeta0: f64, zeta_relay: &[f64]) -> (f64, Branch) {
    let mut best = zeta0;
    let mut branch = Branch::Direct;
    for (l, &z) in zeta_relay.iter().enumerate() {
        if z.abs() > best.abs() {
            best = z;
            branch = Branch::Relay(l);
        }
    }
    (best, branch)
}

/// Fixed-weight combining: `ζ0/N0 + Σ ζ2l / (N0 (1 + A_l² σ2l²))`.
///
/// `relay_gain_var[l]` holds `A_l² σ2l²`. The multi-relay weights extend the
/// single-relay rule branch by branch.
#[inline]
pub fn semi_mrc_combine(zeta0: f64, zeta_relay: &[f64], n0: f64, relay_gain_var: &[f64]) -> f64 {
    debug_assert_eq!(zeta_relay.len(), relay_gain_var.len());
    zeta_relay
        .iter()
        .zip(relay_gain_var)
        .fold(zeta0 / n0, |acc, (&z, &g)| acc + z / (n0 * (1.0 + g)))
}

/// Sign decision with a zero output mapped to `+1`.
#[inline]
pub fn decide(combined: f64) -> f64 {
    if combined < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decision_variable_examples() {
        assert_eq!(decision_variable(c(1.0, 0.0), c(-1.0, 0.0)), -1.0);
        assert_eq!(decision_variable(c(1.0, 1.0), c(1.0, -1.0)), 0.0);
        assert_eq!(decision_variable(c(2.0, 0.0), c(3.0, 0.0)), 6.0);
    }

    #[test]
    fn selection_examples() {
        assert_eq!(sc_combine(-3.0, &[2.0]), (-3.0, Branch::Direct));
        assert_eq!(sc_combine(1.0, &[-5.0]), (-5.0, Branch::Relay(0)));
        assert_eq!(sc_combine(1.0, &[-2.0, 1.5]), (-2.0, Branch::Relay(0)));
        assert_eq!(sc_combine(0.7, &[]), (0.7, Branch::Direct));
        assert_eq!(sc_combine(-2.0, &[2.0]), (-2.0, Branch::Direct));
    }

    #[test]
    fn stats_record_selection() {
        let s = DecisionStats::selection(0.2, vec![0.1, -0.9, 0.4]);
        assert_eq!(s.combined, -0.9);
        assert_eq!(s.chosen_branch, Branch::Relay(1));
    }

    #[test]
    fn semi_mrc_examples() {
        assert_eq!(semi_mrc_combine(1.0, &[1.0], 1.0, &[1.0]), 1.5);
        assert_eq!(semi_mrc_combine(0.3, &[0.4], 1.0, &[0.0]), 0.7);
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(-0.3), -1.0);
        assert_eq!(decide(7.0), 1.0);
        assert_eq!(decide(0.0), 1.0);
    }

    proptest! {
        #[test]
        fn selection_is_scale_invariant(
            z0 in -10.0f64..10.0,
            zr in prop::collection::vec(-10.0f64..10.0, 1..4),
            scale in 1e-3f64..1e3,
        ) {
            let (v, b) = sc_combine(z0, &zr);
            let scaled: Vec<f64> = zr.iter().map(|z| z * scale).collect();
            let (vs, bs) = sc_combine(z0 * scale, &scaled);
            prop_assert_eq!(b, bs);
            prop_assert_eq!(decide(v), decide(vs));
            let all = std::iter::once(z0).chain(zr.iter().copied());
            for z in all {
                prop_assert!(v.abs() >= z.abs());
            }
        }

        #[test]
        fn decide_is_odd(x in prop::num::f64::NORMAL) {
            prop_assert_eq!(decide(-x), -decide(x));
        }

        #[test]
        fn semi_mrc_is_linear(
            z0 in -5.0f64..5.0,
            z2 in -5.0f64..5.0,
            g in 0.0f64..20.0,
            scale in 1e-3f64..1e3,
        ) {
            let a = semi_mrc_combine(z0, &[z2], 1.0, &[g]);
            let b = semi_mrc_combine(z0 * scale, &[z2 * scale], 1.0, &[g]);
            prop_assert!((b - a * scale).abs() <= 1e-9 * (1.0 + b.abs()));
            prop_assert_eq!(decide(a), decide(b));
        }
    }
}
