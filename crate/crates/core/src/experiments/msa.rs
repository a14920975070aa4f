//! Deterministic multiscale schedule: length scales, decay masses and
//! failure probability bounds, with the recursion inequalities taken as
//! equalities.

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};

/// Reading of `[x]_3`, the greatest multiple of 3 below `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BracketRule {
    /// Strictly below: `[27]_3 = 24`.
    #[default]
    Strict,
    /// At most `x`: `[27]_3 = 27`.
    NonStrict,
}

/// Values within a few ulps of an integer are treated as that integer, so
/// that e.g. `9^1.5` counts as exactly 27.
const INTEGER_SNAP: f64 = 8.0 * f64::EPSILON;

/// `[x]_3` for `x ≥ 0`; `None` when the result does not fit in `u128`.
pub fn bracket3(x: f64, rule: BracketRule) -> Option<u128> {
    if !x.is_finite() || x < 0.0 || x >= u128::MAX as f64 {
        return None;
    }
    let nearest = x.round();
    let x = if (x - nearest).abs() <= INTEGER_SNAP * x.max(1.0) { nearest } else { x };
    let k = (x / 3.0).floor() as u128;
    let exact = (k * 3) as f64 == x;
    match (rule, exact) {
        (BracketRule::Strict, true) => k.checked_sub(1).map(|k| k * 3),
        _ => Some(k * 3),
    }
}

/// Inputs of [`msa_schedule`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsaParams {
    pub l0: u128,
    pub zeta: f64,
    pub m0: f64,
    /// Failure bound exponent on the initial scale: `P ≤ l_0^{−q_0}`.
    pub q0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub xi: f64,
    pub d: usize,
    pub steps: usize,
    #[serde(default)]
    pub rule: BracketRule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsaSchedule {
    pub params: MsaParams,
    pub l: Vec<u128>,
    pub m: Vec<f64>,
    pub q: Vec<f64>,
    /// Failure bounds `p_j = l_j^{−q_j}`.
    pub p: Vec<f64>,
}

impl MsaSchedule {
    /// `m_j ≥ m_0/2` on every scale.
    pub fn mass_retained(&self) -> bool {
        self.m.iter().all(|&m| m >= self.params.m0 / 2.0)
    }

    /// `p_{j+1} ≤ p_j` on every step.
    pub fn probability_improves(&self) -> bool {
        self.p.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `l_{j+1} = [l_j^ζ]_3`,
/// `m_{j+1} = m_j(1 − 4l_j/l_{j+1}) − c_1/l_j − c_2 log(l_{j+1})/l_{j+1}`,
/// `p_{j+1} = c_3 (l_{j+1}/l_j)^{2d} p_j² + ½ l_{j+1}^{−ξ}`, `q_j = −log p_j / log l_j`.
pub fn msa_schedule(params: &MsaParams) -> Result<MsaSchedule> {
    let p = params;
    if !(p.zeta > 1.0 && p.zeta < 2.0) {
        return Err(precondition(format!("ζ must lie in ]1, 2[, got {}", p.zeta)));
    }
    if p.l0 < 3 || p.l0 % 3 != 0 {
        return Err(precondition(format!("l_0 must be a multiple of 3 and at least 3, got {}", p.l0)));
    }
    if !(p.m0 > 0.0) || !(p.q0 > 0.0) || !(p.xi > 0.0) {
        return Err(precondition("m_0, q_0 and ξ must be positive"));
    }
    if [p.c1, p.c2, p.c3].iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
        return Err(precondition("c_1, c_2, c_3 must be finite and nonnegative"));
    }
    if p.d == 0 {
        return Err(precondition("d must be positive"));
    }
    let mut l = vec![p.l0];
    let mut m = vec![p.m0];
    let mut prob = vec![(p.l0 as f64).powf(-p.q0)];
    let mut q = vec![p.q0];
    for j in 0..p.steps {
        let lj = l[j];
        let ljf = lj as f64;
        let next = bracket3(ljf.powf(p.zeta), p.rule)
            .ok_or_else(|| precondition(format!("scale l_{} overflows", j + 1)))?;
        if next <= lj {
            return Err(precondition(format!(
                "scales stop growing: l_{} = {next} <= l_{j} = {lj}; increase l_0 or ζ",
                j + 1
            )));
        }
        let nf = next as f64;
        let mj = m[j] * (1.0 - 4.0 * ljf / nf) - p.c1 / ljf - p.c2 * nf.ln() / nf;
        let pj = p.c3 * (nf / ljf).powi(2 * p.d as i32) * prob[j] * prob[j] + 0.5 * nf.powf(-p.xi);
        l.push(next);
        m.push(mj);
        prob.push(pj);
        q.push(-pj.ln() / nf.ln());
    }
    Ok(MsaSchedule {
        params: p.clone(),
        l,
        m,
        q,
        p: prob,
    })
}
