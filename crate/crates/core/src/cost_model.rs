//! Analytic inference-time and memory-requirement model.
//!
//! For a constant-rate recurrent reader processing `l` tokens in chunks
//! of `c` with `g` decoded tokens per step, total time is
//! `(1 + g*beta/c) * l * p_r`: linear in context length. The
//! self-attention one-step model is quadratic, `quad_a*l^2 + quad_b*l`,
//! with decoded tokens charged at end-of-context attention width.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{InferenceTrace, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Recurrent prefill seconds per token.
    pub p_r: f64,
    /// Decode-to-prefill cost ratio; decode costs `beta * p_r` per token.
    pub beta: f64,
    /// Tokens decoded per step.
    pub g: f64,
    /// Chunk size in tokens.
    pub c: f64,
    /// Context length in tokens.
    pub l: f64,
    /// Self-attention quadratic coefficient, seconds per token^2.
    pub quad_a: f64,
    /// Self-attention linear coefficient, seconds per token.
    pub quad_b: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum CostModelError {
    #[error("invalid cost params: {0}")]
    InvalidParams(String),
    #[error("trace is incompatible with this validation: {0}")]
    IncompatibleTrace(String),
}

impl CostParams {
    fn validate(&self) -> Result<(), CostModelError> {
        let fields = [
            ("p_r", self.p_r),
            ("beta", self.beta),
            ("g", self.g),
            ("c", self.c),
            ("l", self.l),
            ("quad_a", self.quad_a),
            ("quad_b", self.quad_b),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(CostModelError::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.c < 1.0 {
            return Err(CostModelError::InvalidParams(format!(
                "c must be >= 1, got {}",
                self.c
            )));
        }
        Ok(())
    }

    /// Copy of the params at a different context length.
    pub fn with_l(mut self, l: f64) -> Self {
        self.l = l;
        self
    }
}

/// Total time for chunked reading with persistent memory:
/// `(1 + g*beta/c) * l * p_r`.
pub fn time_recurrent_sr(params: &CostParams) -> Result<f64, CostModelError> {
    params.validate()?;
    Ok((1.0 + params.g * params.beta / params.c) * params.l * params.p_r)
}

/// Total time for self-attention one-step inference: quadratic prefill
/// plus `g` decode tokens charged at end-of-context width.
pub fn time_self_attn_os(params: &CostParams) -> Result<f64, CostModelError> {
    params.validate()?;
    let l = params.l;
    Ok(params.quad_a * l * l
        + params.quad_b * l
        + params.g * (params.quad_b + 2.0 * params.quad_a * l))
}

/// Smallest context length beyond which one-step self-attention stays
/// strictly slower than chunked recurrent reading; `None` when that
/// never happens.
pub fn crossover_length(params: &CostParams) -> Result<Option<f64>, CostModelError> {
    params.validate()?;
    // Difference D(l) = time_os(l) - time_sr(l) = a*l^2 + b*l + k.
    let a = params.quad_a;
    let b = params.quad_b + 2.0 * params.quad_a * params.g
        - (1.0 + params.g * params.beta / params.c) * params.p_r;
    let k = params.g * params.quad_b;

    if a > 0.0 {
        let disc = b * b - 4.0 * a * k;
        if disc <= 0.0 {
            // No real roots: D > 0 everywhere.
            return Ok(Some(0.0));
        }
        let root = (-b + disc.sqrt()) / (2.0 * a);
        return Ok(Some(root.max(0.0)));
    }
    // Linear difference.
    if b > 0.0 {
        return Ok(Some((-k / b).max(0.0)));
    }
    if b == 0.0 && k > 0.0 {
        return Ok(Some(0.0));
    }
    Ok(None)
}

/// Compare the analytic time against a simulated trace's virtual clock,
/// returning the relative error.
///
/// Valid only for smooth-reading traces from a constant-cost simulator
/// (occupancy-independent per-token cost) with constant per-step decode
/// length.
pub fn validate_against_trace(
    trace: &InferenceTrace,
    params: &CostParams,
) -> Result<f64, CostModelError> {
    params.validate()?;
    if trace.strategy != Strategy::Smooth {
        return Err(CostModelError::IncompatibleTrace(format!(
            "expected a smooth-reading trace, got {}",
            trace.strategy
        )));
    }
    if !(trace.virtual_time_seconds > 0.0) {
        return Err(CostModelError::IncompatibleTrace(
            "trace has no elapsed virtual time".into(),
        ));
    }
    let analytic = time_recurrent_sr(params)?;
    Ok((analytic - trace.virtual_time_seconds).abs() / trace.virtual_time_seconds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MrProfile {
    pub peak_mr_tokens: u64,
    pub per_step_bound_tokens: u64,
}

/// Per-step memory bound of each strategy: `l + g` for one-step, `3c`
/// for unsmooth reading (prior summary, chunk, new summary), `c + g`
/// for smooth reading (chunk plus decode).
pub fn mr_profile(strategy: Strategy, c: u64, l: u64, g: u64) -> MrProfile {
    let bound = match strategy {
        Strategy::OneStep => l + g,
        Strategy::Unsmooth => 3 * c,
        Strategy::Smooth => c + g,
    };
    MrProfile {
        peak_mr_tokens: bound,
        per_step_bound_tokens: bound,
    }
}

/// Fit `(quad_a, quad_b)` through two `(length, seconds)` readings of a
/// pure-prefill quadratic model. Returns `None` for degenerate inputs.
pub fn fit_quadratic_two_point(s1: (f64, f64), s2: (f64, f64)) -> Option<(f64, f64)> {
    let (l1, t1) = s1;
    let (l2, t2) = s2;
    let det = l1 * l1 * l2 - l2 * l2 * l1;
    if det == 0.0 {
        return None;
    }
    let a = (t1 * l2 - t2 * l1) / det;
    let b = (t2 * l1 * l1 - t1 * l2 * l2) / det;
    Some((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> CostParams {
        CostParams {
            p_r: 0.001,
            beta: 4.0,
            g: 100.0,
            c: 1000.0,
            l: 32_000.0,
            quad_a: 0.0,
            quad_b: 0.0,
        }
    }

    #[test]
    fn sr_time_matches_hand_value() {
        // (1 + 100*4/1000) * 32000 * 0.001 = 1.4 * 32 = 44.8
        let t = time_recurrent_sr(&base()).unwrap();
        assert!((t - 44.8).abs() < 1e-12);
        // Cross-check against the per-step sum n*c*p_r + n*g*d_r.
        let p = base();
        let n = p.l / p.c;
        let by_steps = n * p.c * p.p_r + n * p.g * p.beta * p.p_r;
        assert!((t - by_steps).abs() / t < 1e-12);
    }

    #[test]
    fn sr_time_reduces_to_prefill_when_g_zero() {
        let mut p = base();
        p.g = 0.0;
        let t = time_recurrent_sr(&p).unwrap();
        assert_eq!(t, p.l * p.p_r);
    }

    #[test]
    fn sr_time_is_exactly_linear() {
        let p = base();
        let t1 = time_recurrent_sr(&p).unwrap();
        let t2 = time_recurrent_sr(&p.with_l(p.l * 2.0)).unwrap();
        assert!((t2 / t1 - 2.0).abs() < 1e-12);
        for k in [0.5, 3.0, 7.25] {
            let tk = time_recurrent_sr(&p.with_l(p.l * k)).unwrap();
            assert!((tk - k * t1).abs() / tk.abs().max(1e-300) < 1e-12);
        }
    }

    #[test]
    fn sr_monotonicity() {
        let p = base();
        let t = time_recurrent_sr(&p).unwrap();
        let mut bigger_c = p;
        bigger_c.c *= 2.0;
        assert!(time_recurrent_sr(&bigger_c).unwrap() < t);
        for f in [
            |p: &mut CostParams| p.g *= 2.0,
            |p: &mut CostParams| p.beta *= 2.0,
            |p: &mut CostParams| p.p_r *= 2.0,
            |p: &mut CostParams| p.l *= 2.0,
        ] {
            let mut q = p;
            f(&mut q);
            assert!(time_recurrent_sr(&q).unwrap() > t);
        }
    }

    #[test]
    fn consistency_identity_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.gen_range(1..200) as f64;
            let c = rng.gen_range(1.0..5000.0f64);
            let p = CostParams {
                p_r: rng.gen_range(1e-6..1e-2),
                beta: rng.gen_range(0.0..10.0),
                g: rng.gen_range(0.0..500.0),
                c,
                l: n * c,
                quad_a: 0.0,
                quad_b: 0.0,
            };
            let closed = time_recurrent_sr(&p).unwrap();
            let by_steps = n * p.c * p.p_r + n * p.g * p.beta * p.p_r;
            assert!(
                (closed - by_steps).abs() / closed.abs().max(1e-300) < 1e-12,
                "closed={closed} steps={by_steps}"
            );
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = base();
        p.c = 0.0;
        assert!(matches!(
            time_recurrent_sr(&p),
            Err(CostModelError::InvalidParams(_))
        ));
        let mut p = base();
        p.p_r = -1.0;
        assert!(time_self_attn_os(&p).is_err());
    }

    #[test]
    fn os_time_degenerate_linear() {
        let mut p = base();
        p.quad_a = 0.0;
        p.quad_b = 0.002;
        let t = time_self_attn_os(&p).unwrap();
        assert!((t - (p.quad_b * (p.l + p.g))).abs() < 1e-12);
    }

    #[test]
    fn os_time_pure_quadratic_ratio_four() {
        let p = CostParams {
            p_r: 0.0,
            beta: 0.0,
            g: 0.0,
            c: 1.0,
            l: 1e6,
            quad_a: 1e-9,
            quad_b: 0.0,
        };
        let t1 = time_self_attn_os(&p).unwrap();
        let t2 = time_self_attn_os(&p.with_l(2e6)).unwrap();
        assert_eq!(t2 / t1, 4.0);
    }

    #[test]
    fn crossover_none_when_sr_always_slower() {
        // Equal linear terms, SR overhead factor > 1: the one-step model
        // never becomes the slower one.
        let p = CostParams {
            p_r: 0.001,
            beta: 4.0,
            g: 100.0,
            c: 1000.0,
            l: 1.0,
            quad_a: 0.0,
            quad_b: 0.001,
        };
        assert_eq!(crossover_length(&p).unwrap(), None);
    }

    #[test]
    fn crossover_matches_hand_solved_root() {
        // D(l) = 2e-6 l^2 - 3e-3 l + 1, roots 500 and 1000.
        let p = CostParams {
            p_r: 0.0134,
            beta: 0.0,
            g: 100.0,
            c: 1000.0,
            l: 1.0,
            quad_a: 2e-6,
            quad_b: 0.01,
        };
        let root = crossover_length(&p).unwrap().unwrap();
        assert!((root - 1000.0).abs() < 1e-6, "root {root}");
    }

    #[test]
    fn larger_chunks_move_crossover_earlier() {
        let mut p = CostParams {
            p_r: 1e-4,
            beta: 4.0,
            g: 100.0,
            c: 256.0,
            l: 1.0,
            quad_a: 1e-8,
            quad_b: 1e-4,
        };
        let mut last = f64::INFINITY;
        for c in [256.0, 512.0, 1024.0, 2048.0] {
            p.c = c;
            let root = crossover_length(&p).unwrap().unwrap();
            assert!(root <= last, "crossover should not grow with c");
            last = root;
        }
    }

    #[test]
    fn mr_profiles() {
        assert_eq!(
            mr_profile(Strategy::OneStep, 512, 32_768, 64).per_step_bound_tokens,
            32_832
        );
        assert_eq!(mr_profile(Strategy::Unsmooth, 512, 0, 64).per_step_bound_tokens, 1536);
        assert_eq!(mr_profile(Strategy::Smooth, 512, 0, 64).per_step_bound_tokens, 576);
    }

    #[test]
    fn two_point_fit_recovers_coefficients() {
        let (a, b) = (3e-9, 2e-5);
        let t = |l: f64| a * l * l + b * l;
        let fitted = fit_quadratic_two_point((1000.0, t(1000.0)), (4000.0, t(4000.0))).unwrap();
        assert!((fitted.0 - a).abs() / a < 1e-9);
        assert!((fitted.1 - b).abs() / b < 1e-9);
    }
}
