use std::fmt;

use super::{eta_bounds, Params, Thresholds};

/// `η` must exceed `1 + STRIP_MARGIN` before a strip point is declared an
/// existence point. The true threshold is not constructive; this margin is
/// a conservative stand-in.
pub const STRIP_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    ExistsMinimizer,
    NoMinimizer,
    IndeterminateStrip,
    StripExistsByContinuity,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictKind::ExistsMinimizer => "ExistsMinimizer",
            VerdictKind::NoMinimizer => "NoMinimizer",
            VerdictKind::IndeterminateStrip => "IndeterminateStrip",
            VerdictKind::StripExistsByContinuity => "StripExistsByContinuity",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The rule that decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// `a₁, a₂ ∈ (0, a*)` and `β < β_low`.
    SubcriticalBelowBetaLow,
    A1AboveCritical,
    A2AboveCritical,
    /// `β > β_high`.
    BetaAboveBetaHigh,
    /// Strip point with `a₁ ≠ a₂`, `|a₁ - a₂| <= 2β_low` and `η > 1 + margin`.
    StripEtaAboveMargin,
    /// Strip point no existence criterion decides.
    StripUndecided,
    /// An equality `a_i = a*` or `β = β_high` (or `β_low`) on the boundary.
    BoundaryEquality,
    /// Parameters outside every hypothesis, e.g. a vanishing coupling.
    OutsideHypotheses,
}

impl Rule {
    pub fn code(&self) -> &'static str {
        match self {
            Rule::SubcriticalBelowBetaLow => "subcritical-below-beta-low",
            Rule::A1AboveCritical => "a1-above-critical",
            Rule::A2AboveCritical => "a2-above-critical",
            Rule::BetaAboveBetaHigh => "beta-above-beta-high",
            Rule::StripEtaAboveMargin => "strip-eta-above-margin",
            Rule::StripUndecided => "strip-undecided",
            Rule::BoundaryEquality => "boundary-equality",
            Rule::OutsideHypotheses => "outside-hypotheses",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub rule: Rule,
    pub eta_estimate: Option<f64>,
}

/// Decides existence from the strict-inequality regions; equalities are
/// treated as undecided.
pub fn classify(p: &Params, t: &Thresholds, eta: Option<f64>) -> Verdict {
    let a = t.a_star;
    let eps = 1e-12 * a.max(1.0);
    let verdict = |kind, rule| Verdict {
        kind,
        rule,
        eta_estimate: eta,
    };

    if p.a1 > a + eps {
        return verdict(VerdictKind::NoMinimizer, Rule::A1AboveCritical);
    }
    if p.a2 > a + eps {
        return verdict(VerdictKind::NoMinimizer, Rule::A2AboveCritical);
    }
    if p.beta > t.beta_high + eps {
        return verdict(VerdictKind::NoMinimizer, Rule::BetaAboveBetaHigh);
    }
    let on_edge = |x: f64, y: f64| (x - y).abs() <= eps;
    if on_edge(p.a1, a) || on_edge(p.a2, a) || on_edge(p.beta, t.beta_high) {
        return verdict(VerdictKind::IndeterminateStrip, Rule::BoundaryEquality);
    }
    let inside = |x: f64| x > eps && x < a - eps;
    if !(inside(p.a1) && inside(p.a2)) {
        return verdict(VerdictKind::IndeterminateStrip, Rule::OutsideHypotheses);
    }
    // a₁, a₂ ∈ (0, a*) so β_low is real
    let bl = t.beta_low.unwrap_or(0.0);
    if p.beta < bl - eps {
        return verdict(VerdictKind::ExistsMinimizer, Rule::SubcriticalBelowBetaLow);
    }
    if on_edge(p.a1, p.a2) {
        // strip collapses to the single point β = β_low = β_high
        return verdict(VerdictKind::IndeterminateStrip, Rule::BoundaryEquality);
    }
    let condition = (p.a1 - p.a2).abs() <= 2.0 * bl + eps;
    match eta {
        Some(e) if condition && e > 1.0 + STRIP_MARGIN => {
            verdict(VerdictKind::StripExistsByContinuity, Rule::StripEtaAboveMargin)
        }
        _ => verdict(VerdictKind::IndeterminateStrip, Rule::StripUndecided),
    }
}

/// Flat record of a classification, one `key: value` per line.
#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRecord {
    pub params: Params,
    pub thresholds: Thresholds,
    pub eta_lower: Option<f64>,
    pub eta_upper: Option<f64>,
    pub verdict: Verdict,
}

impl VerdictRecord {
    pub const VERSION: &'static str = "hartree-verdict 1";

    pub fn new(params: Params, thresholds: Thresholds, verdict: Verdict) -> Self {
        let bounds = eta_bounds(&params, thresholds.a_star).ok();
        Self {
            params,
            thresholds,
            eta_lower: bounds.map(|b| b.0),
            eta_upper: bounds.map(|b| b.1),
            verdict,
        }
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_else(|| "undefined".into());
        vec![
            ("a1", format!("{:?}", self.params.a1)),
            ("a2", format!("{:?}", self.params.a2)),
            ("beta", format!("{:?}", self.params.beta)),
            ("m", format!("{:?}", self.params.m)),
            ("a_star", format!("{:?}", self.thresholds.a_star)),
            ("beta_low", opt(self.thresholds.beta_low)),
            ("beta_high", format!("{:?}", self.thresholds.beta_high)),
            ("eta_lower", opt(self.eta_lower)),
            ("eta_upper", opt(self.eta_upper)),
            ("eta_estimate", opt(self.verdict.eta_estimate)),
            ("verdict", self.verdict.kind.to_string()),
            ("rule", self.verdict.rule.to_string()),
        ]
    }
}

impl fmt::Display for VerdictRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", Self::VERSION)?;
        for (k, v) in self.entries() {
            writeln!(f, "{k}: {v}")?;
        }
        if self.verdict.rule == Rule::StripEtaAboveMargin {
            writeln!(f, "note: strip margin {STRIP_MARGIN} is a numerical stand-in")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::thresholds;
    use super::*;
    use proptest::prelude::*;

    const A: f64 = 2.69;

    fn run(x1: f64, x2: f64, beta: f64, eta: Option<f64>) -> Verdict {
        let t = thresholds(x1 * A, x2 * A, A).unwrap();
        classify(&Params::new(x1 * A, x2 * A, beta, 0.0).unwrap(), &t, eta)
    }

    #[test]
    fn existence_example() {
        let bl = thresholds(0.5 * A, 0.5 * A, A).unwrap().beta_low.unwrap();
        let v = run(0.5, 0.5, 0.3 * bl, None);
        assert_eq!(v.kind, VerdictKind::ExistsMinimizer);
        assert_eq!(v.rule, Rule::SubcriticalBelowBetaLow);
    }

    #[test]
    fn nonexistence_example() {
        for b in [-5.0, 0.0, 1.0, 10.0] {
            let v = run(1.2, 0.5, b, None);
            assert_eq!(v.kind, VerdictKind::NoMinimizer);
            assert_eq!(v.rule, Rule::A1AboveCritical);
        }
    }

    #[test]
    fn strip_with_eta_estimate() {
        let bl = thresholds(0.3 * A, 0.6 * A, A).unwrap().beta_low.unwrap();
        let v = run(0.3, 0.6, bl, Some(1.04));
        assert_eq!(v.kind, VerdictKind::StripExistsByContinuity);
        assert_eq!(run(0.3, 0.6, bl, Some(1.01)).kind, VerdictKind::IndeterminateStrip);
        assert_eq!(run(0.3, 0.6, bl, None).rule, Rule::StripUndecided);
    }

    #[test]
    fn boundaries_are_indeterminate() {
        assert_eq!(run(1.0, 0.5, 0.0, None).rule, Rule::BoundaryEquality);
        let a = 0.4 * A;
        let v = run(0.4, 0.4, A - a, Some(3.0));
        assert_eq!(v.kind, VerdictKind::IndeterminateStrip);
        assert_eq!(v.rule, Rule::BoundaryEquality);
        assert_eq!(run(0.0, 0.5, 0.0, None).rule, Rule::OutsideHypotheses);
    }

    #[test]
    fn record_lists_every_key() {
        let t = thresholds(1.0, 1.0, A).unwrap();
        let p = Params::new(1.0, 1.0, 0.2, 0.0).unwrap();
        let rec = VerdictRecord::new(p, t, classify(&p, &t, None));
        let text = rec.to_string();
        for key in [
            "a1",
            "a2",
            "beta",
            "m",
            "a_star",
            "beta_low",
            "beta_high",
            "eta_lower",
            "eta_upper",
            "eta_estimate",
            "verdict",
            "rule",
        ] {
            assert!(text.contains(&format!("\n{key}: ")), "{key}");
        }
    }

    proptest! {
        #[test]
        fn existence_is_monotone_in_beta(x1 in 0.01f64..0.99, x2 in 0.01f64..0.99, b1 in -3.0f64..3.0, b2 in -3.0f64..3.0) {
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            if run(x1, x2, hi, None).kind == VerdictKind::ExistsMinimizer {
                prop_assert_eq!(run(x1, x2, lo, None).kind, VerdictKind::ExistsMinimizer);
            }
        }

        #[test]
        fn never_decides_without_a_rule(x1 in 0.0f64..2.0, x2 in 0.0f64..2.0, b in -3.0f64..5.0) {
            let v = run(x1, x2, b, None);
            match v.kind {
                VerdictKind::ExistsMinimizer => prop_assert_eq!(v.rule, Rule::SubcriticalBelowBetaLow),
                VerdictKind::NoMinimizer => prop_assert!(matches!(v.rule, Rule::A1AboveCritical | Rule::A2AboveCritical | Rule::BetaAboveBetaHigh)),
                _ => {}
            }
        }
    }
}
