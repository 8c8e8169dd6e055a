//! Scalar sparsity penalties and the exact one-dimensional minimizer used by
//! each coordinate step.
//!
//! MCP:  `ρ(t) = λ|t| − t²/(2γ)` for `|t| ≤ γλ`, `γλ²/2` beyond.
//! SCAD: `λ|t|` for `|t| ≤ λ`, `(2γλ|t| − t² − λ²)/(2(γ−1))` up to `γλ`,
//!       `(γ+1)λ²/2` beyond.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlsError};

pub const DEFAULT_GAMMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Mcp,
    Scad,
    L1,
}

impl std::str::FromStr for PenaltyKind {
    type Err = SlsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcp" => Ok(PenaltyKind::Mcp),
            "scad" => Ok(PenaltyKind::Scad),
            "l1" | "lasso" => Ok(PenaltyKind::L1),
            other => Err(SlsError::param("penalty", format!("unknown penalty '{other}' (mcp, scad, l1)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kind: PenaltyKind,
    pub lambda1: f64,
    /// Concavity; ignored for `L1`.
    pub gamma: f64,
}

impl PenaltyConfig {
    pub fn new(kind: PenaltyKind, lambda1: f64, gamma: f64) -> Result<Self> {
        let cfg = PenaltyConfig { kind, lambda1, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mcp(lambda1: f64, gamma: f64) -> Result<Self> {
        Self::new(PenaltyKind::Mcp, lambda1, gamma)
    }

    pub fn scad(lambda1: f64, gamma: f64) -> Result<Self> {
        Self::new(PenaltyKind::Scad, lambda1, gamma)
    }

    pub fn l1(lambda1: f64) -> Result<Self> {
        Self::new(PenaltyKind::L1, lambda1, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0) || !self.lambda1.is_finite() {
            return Err(SlsError::param("lambda1", format!("must be finite and ≥ 0, got {}", self.lambda1)));
        }
        match self.kind {
            PenaltyKind::Mcp if !(self.gamma > 1.0) => Err(SlsError::param("gamma", format!("MCP needs γ > 1, got {}", self.gamma))),
            PenaltyKind::Scad if !(self.gamma > 2.0) => Err(SlsError::param("gamma", format!("SCAD needs γ > 2, got {}", self.gamma))),
            _ => Ok(()),
        }
    }

    pub fn with_lambda1(self, lambda1: f64) -> Self {
        PenaltyConfig { lambda1, ..self }
    }

    /// `ρ(|t|)`.
    pub fn value(&self, t: f64) -> f64 {
        let (l, g, a) = (self.lambda1, self.gamma, t.abs());
        match self.kind {
            PenaltyKind::L1 => l * a,
            PenaltyKind::Mcp => {
                if a < g * l {
                    l * a - a * a / (2.0 * g)
                } else {
                    0.5 * g * l * l
                }
            }
            PenaltyKind::Scad => {
                if a <= l {
                    l * a
                } else if a <= g * l {
                    (2.0 * g * l * a - a * a - l * l) / (2.0 * (g - 1.0))
                } else {
                    0.5 * (g + 1.0) * l * l
                }
            }
        }
    }

    /// `ρ̇(t)`; at `t = 0` returns `λ1`, the subgradient bound used by the KKT
    /// check.
    pub fn derivative(&self, t: f64) -> f64 {
        let (l, g, a) = (self.lambda1, self.gamma, t.abs());
        if t == 0.0 {
            return l;
        }
        let mag = match self.kind {
            PenaltyKind::L1 => l,
            PenaltyKind::Mcp => (l - a / g).max(0.0),
            PenaltyKind::Scad => {
                if a <= l {
                    l
                } else {
                    ((g * l - a) / (g - 1.0)).max(0.0)
                }
            }
        };
        mag * t.signum()
    }

    /// `argmin_b (v/2)b² − zb + ρ(|b|)`, exact.
    pub fn univariate_minimize(&self, z: f64, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(SlsError::param("v", format!("curvature must be positive, got {v}")));
        }
        Ok(self.solve(z, v))
    }

    /// Unchecked form of [`univariate_minimize`](Self::univariate_minimize)
    /// for the solver's inner loop (`v > 0` is guaranteed by the caller).
    #[inline]
    pub(crate) fn solve(&self, z: f64, v: f64) -> f64 {
        let l = self.lambda1;
        match self.kind {
            PenaltyKind::L1 => soft_threshold(z, l) / v,
            PenaltyKind::Mcp => {
                let g = self.gamma;
                let curv = v - 1.0 / g;
                if curv > 0.0 {
                    if z.abs() <= v * g * l {
                        soft_threshold(z, l) / curv
                    } else {
                        z / v
                    }
                } else {
                    self.best_candidate(z, v, &mcp_candidates(z, v, l, g))
                }
            }
            PenaltyKind::Scad => self.best_candidate(z, v, &scad_candidates(z, v, l, self.gamma)),
        }
    }

    fn objective(&self, b: f64, z: f64, v: f64) -> f64 {
        0.5 * v * b * b - z * b + self.value(b)
    }

    /// Lowest objective among `cands`; ties go to the smaller magnitude.
    fn best_candidate(&self, z: f64, v: f64, cands: &[f64]) -> f64 {
        let mut best = 0.0f64;
        let mut best_val = 0.0;
        for &b in cands {
            let val = self.objective(b, z, v);
            if val < best_val || (val == best_val && b.abs() < best.abs()) {
                best = b;
                best_val = val;
            }
        }
        best
    }
}

#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Minimizer of `(c/2)b² − wb` over `[lo, hi]` (`0 ≤ lo ≤ hi`), with concave or
/// flat pieces resolved at the endpoints.
fn quad_on_interval(c: f64, w: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    if c > 0.0 {
        out.push((w / c).clamp(lo, hi));
    } else {
        out.push(lo);
        if hi.is_finite() {
            out.push(hi);
        }
    }
}

// Candidates are built for b ≥ 0 with |z|, then mapped back to sgn(z).
fn mcp_candidates(z: f64, v: f64, l: f64, g: f64) -> Vec<f64> {
    let (s, az) = (z.signum(), z.abs());
    let mut c = vec![0.0];
    quad_on_interval(v - 1.0 / g, az - l, 0.0, g * l, &mut c);
    quad_on_interval(v, az, g * l, f64::INFINITY, &mut c);
    c.into_iter().map(|b| s * b).collect()
}

fn scad_candidates(z: f64, v: f64, l: f64, g: f64) -> Vec<f64> {
    let (s, az) = (z.signum(), z.abs());
    let mut c = vec![0.0];
    quad_on_interval(v, az - l, 0.0, l, &mut c);
    quad_on_interval(v - 1.0 / (g - 1.0), az - g * l / (g - 1.0), l, g * l, &mut c);
    quad_on_interval(v, az, g * l, f64::INFINITY, &mut c);
    c.into_iter().map(|b| s * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense grid search over [−10, 10] with the given step, then a finer pass
    /// around the best point.
    fn grid_min(cfg: &PenaltyConfig, z: f64, v: f64, step: f64) -> (f64, f64) {
        let f = |b: f64| 0.5 * v * b * b - z * b + cfg.value(b);
        let scan = |lo: f64, hi: f64, h: f64| {
            let m = ((hi - lo) / h).round() as i64;
            (0..=m).map(|i| lo + i as f64 * h).map(|b| (b, f(b))).fold((0.0, f(0.0)), |a, c| if c.1 < a.1 { c } else { a })
        };
        let (b0, _) = scan(-10.0, 10.0, step);
        scan(b0 - step, b0 + step, step * 1e-3)
    }

    #[test]
    fn mcp_values() {
        let cfg = PenaltyConfig::mcp(1.0, 3.0).unwrap();
        assert_eq!(cfg.value(0.0), 0.0);
        assert_eq!(cfg.value(5.0), 1.5);
        assert_eq!(cfg.value(1.5), 1.125);
        assert_eq!(cfg.value(3.0), 1.5);
        assert_eq!(cfg.value(-1.5), cfg.value(1.5));
    }

    #[test]
    fn mcp_derivatives() {
        let cfg = PenaltyConfig::mcp(1.0, 3.0).unwrap();
        assert!((cfg.derivative(0.5) - 5.0 / 6.0).abs() < 1e-15);
        assert!((cfg.derivative(-0.5) + 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(cfg.derivative(-5.0), 0.0);
        assert_eq!(cfg.derivative(0.0), 1.0);
        let zero = PenaltyConfig::mcp(0.0, 3.0).unwrap();
        for t in [-2.0, 0.0, 0.3] {
            assert_eq!(zero.derivative(t), 0.0);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for cfg in [PenaltyConfig::mcp(0.7, 2.5).unwrap(), PenaltyConfig::scad(0.7, 3.7).unwrap(), PenaltyConfig::l1(0.7).unwrap()] {
            for t in [-3.0, -1.2, -0.3, 0.2, 0.9, 1.5, 4.0] {
                let fd = (cfg.value(t + h) - cfg.value(t - h)) / (2.0 * h);
                assert!((fd - cfg.derivative(t)).abs() < 1e-6, "{cfg:?} at {t}");
            }
        }
    }

    #[test]
    fn univariate_examples_against_grid() {
        let cfg = PenaltyConfig::mcp(1.0, 3.0).unwrap();
        for (z, v, expect) in [(0.5, 1.0, 0.0), (2.0, 1.0, 1.5), (4.0, 1.0, 4.0), (2.0, 2.0, 0.6)] {
            let b = cfg.univariate_minimize(z, v).unwrap();
            assert!((b - expect).abs() < 1e-14, "z={z} v={v}: {b}");
            let (gb, _) = grid_min(&cfg, z, v, 1e-5);
            assert!((gb - expect).abs() < 1e-6, "grid {gb} vs {expect}");
        }
        assert!(cfg.univariate_minimize(1.0, 0.0).is_err());
    }

    #[test]
    fn nonconvex_univariate_case() {
        // v − 1/γ < 0: the soft-threshold branch does not apply
        let cfg = PenaltyConfig::mcp(1.0, 1.5).unwrap();
        for z in [0.3, 0.55, 0.6, 0.9, 1.4, -0.8] {
            let b = cfg.univariate_minimize(z, 0.5).unwrap();
            let f = |b: f64| 0.25 * b * b - z * b + cfg.value(b);
            let (_, gval) = grid_min(&cfg, z, 0.5, 1e-4);
            assert!(f(b) <= gval + 1e-9, "z={z}: b={b}");
        }
    }

    #[test]
    fn scad_three_branch_rule() {
        // with v = 1 the standard closed form applies
        let (l, a) = (1.0, 3.7);
        let cfg = PenaltyConfig::scad(l, a).unwrap();
        for z in [0.4f64, 1.5, 2.0, 2.8, 3.5, 5.0, -2.6] {
            let expect = if z.abs() <= 2.0 * l {
                soft_threshold(z, l)
            } else if z.abs() <= a * l {
                ((a - 1.0) * z - z.signum() * a * l) / (a - 2.0)
            } else {
                z
            };
            let b = cfg.univariate_minimize(z, 1.0).unwrap();
            assert!((b - expect).abs() < 1e-12, "z={z}: {b} vs {expect}");
        }
    }

    #[test]
    fn l1_is_large_gamma_limit() {
        let l1 = PenaltyConfig::l1(0.8).unwrap();
        let mcp = PenaltyConfig::mcp(0.8, 1e9).unwrap();
        for z in [-3.0, -0.5, 0.2, 0.9, 2.5, 40.0] {
            for v in [1.0, 1.7, 4.0] {
                let a = l1.univariate_minimize(z, v).unwrap();
                let b = mcp.univariate_minimize(z, v).unwrap();
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(PenaltyConfig::mcp(1.0, 1.0).is_err());
        assert!(PenaltyConfig::scad(1.0, 2.0).is_err());
        assert!(PenaltyConfig::mcp(-0.1, 3.0).is_err());
        assert!(PenaltyConfig::l1(0.0).is_ok());
        assert_eq!("SCAD".parse::<PenaltyKind>().unwrap(), PenaltyKind::Scad);
    }

    fn any_cfg() -> impl Strategy<Value = PenaltyConfig> {
        prop_oneof![
            (0.0f64..2.0, 1.05f64..6.0).prop_map(|(l, g)| PenaltyConfig::mcp(l, g).unwrap()),
            (0.0f64..2.0, 2.05f64..6.0).prop_map(|(l, g)| PenaltyConfig::scad(l, g).unwrap()),
            (0.0f64..2.0).prop_map(|l| PenaltyConfig::l1(l).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn penalty_even_monotone_and_flat(cfg in any_cfg(), t in 0.0f64..8.0, dt in 0.0f64..1.0) {
            prop_assert_eq!(cfg.value(t), cfg.value(-t));
            prop_assert!(cfg.value(t + dt) >= cfg.value(t) - 1e-15);
            if cfg.kind == PenaltyKind::Mcp {
                let knot = cfg.gamma * cfg.lambda1;
                prop_assert_eq!(cfg.value(knot), 0.5 * cfg.gamma * cfg.lambda1 * cfg.lambda1);
                prop_assert_eq!(cfg.value(knot + t), cfg.value(knot));
                // continuity at the knot
                prop_assert!((cfg.value(knot * (1.0 - 1e-12)) - cfg.value(knot)).abs() < 1e-9);
            }
        }

        #[test]
        fn univariate_is_odd_and_global(cfg in any_cfg(), z in -6.0f64..6.0, v in 0.3f64..4.0) {
            let b = cfg.univariate_minimize(z, v).unwrap();
            let bm = cfg.univariate_minimize(-z, v).unwrap();
            prop_assert_eq!(b, -bm);
            prop_assert!(b == 0.0 || b.signum() == z.signum());
            let f = |b: f64| 0.5 * v * b * b - z * b + cfg.value(b);
            let (_, gval) = grid_min(&cfg, z, v, 2e-3);
            prop_assert!(f(b) <= gval + 1e-8, "b={} f={} grid={}", b, f(b), gval);
        }
    }
}
