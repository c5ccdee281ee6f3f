//! Closed-form concentration and PAC-Bayes bounds.
//!
//! Every evaluator takes an explicit weight sum `W` of a certified stable
//! fractional partition. `phi` may be `+inf`, which propagates.

use crate::error::{Error, Result};
use crate::ext;
use crate::mixing::{phi_value, MixingProfile};
use serde::{Deserialize, Serialize};

fn check_n(n: f64) -> Result<()> {
    if n >= 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("n must be at least 1, got {n}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("delta must lie in (0,1), got {delta}")))
    }
}

fn check_w(w: f64) -> Result<()> {
    if w >= 1.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("weight sum must be at least 1, got {w}")))
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("phi must be non-negative, got {phi}")))
    }
}

fn check_kl(kl: f64) -> Result<()> {
    if kl >= 0.0 && !kl.is_nan() {
        Ok(())
    } else {
        Err(Error::param(format!("KL must be non-negative, got {kl}")))
    }
}

/// `phi + sqrt(range^2 * W / (2n) * ln(1/delta))`
pub fn concentration_bound(n: f64, delta: f64, range: f64, phi: f64, w: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta)?;
    check_w(w)?;
    check_phi(phi)?;
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::param(format!("range must be positive, got {range}")));
    }
    if phi.is_infinite() {
        return Ok(ext::INFINITE);
    }
    Ok(phi + (range * range * w / (2.0 * n) * (1.0 / delta).ln()).sqrt())
}

/// `exp(-(2n/W) (t - phi)^2 / range^2)` for `t > phi`.
pub fn tail_probability(n: f64, range: f64, w: f64, phi: f64, t: f64) -> Result<f64> {
    check_n(n)?;
    check_w(w)?;
    check_phi(phi)?;
    if !phi.is_finite() || !(t > phi) {
        return Err(Error::param(format!("tail needs t > phi (t={t}, phi={phi})")));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::param(format!("range must be positive, got {range}")));
    }
    let s = (t - phi) / range;
    Ok((-(2.0 * n / w) * s * s).exp())
}

/// Excess of the iid PAC-Bayes bound over the empirical loss.
pub fn pacbayes_bound_iid(n: f64, delta: f64, kl: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta)?;
    check_kl(kl)?;
    Ok(((3.0 * kl + 9.0) / n).sqrt() + ((1.0 / delta).ln() / (2.0 * n)).sqrt())
}

/// `phi + (sqrt(3 KL + 9) + sqrt(ln(1/delta) / 2)) * sqrt(W / n)`
pub fn pacbayes_bound_graph(n: f64, delta: f64, kl: f64, phi: f64, w: f64) -> Result<f64> {
    check_n(n)?;
    check_delta(delta)?;
    check_kl(kl)?;
    check_phi(phi)?;
    check_w(w)?;
    if phi.is_infinite() || kl.is_infinite() {
        return Ok(ext::INFINITE);
    }
    Ok(phi + ((3.0 * kl + 9.0).sqrt() + (0.5 * (1.0 / delta).ln()).sqrt()) * (w / n).sqrt())
}

/// `ceil(tau * ln(C n))` clamped to `[1, n]`.
pub fn tune_d_geometric(c: f64, tau: f64, n: u64) -> Result<u32> {
    if !(c > 0.0 && tau > 0.0) || n == 0 {
        return Err(Error::param("tune-d needs C > 0, tau > 0, n >= 1"));
    }
    let raw = (tau * (c * n as f64).ln()).ceil();
    let upper = n.min(u32::MAX as u64) as f64;
    Ok(raw.clamp(1.0, upper) as u32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub d: u32,
    #[serde(with = "ext")]
    pub phi: f64,
    pub weight_sum: f64,
    #[serde(with = "ext")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: String,
    pub n: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ext")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_sum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    /// `None` when every candidate `d` is infinite.
    #[serde(with = "opt_ext")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<BoundRow>,
}

mod opt_ext {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::ext")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

impl BoundReport {
    pub fn scalar(kind: &str, n: f64, delta: f64, value: f64) -> Self {
        BoundReport {
            kind: kind.to_string(),
            n,
            delta,
            range: None,
            kl: None,
            phi: None,
            weight_sum: None,
            d: None,
            value: Some(value),
            table: Vec::new(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_some_and(f64::is_finite)
    }
}

/// Minimizes the concentration bound over the candidate `d` values in
/// `weight_sums` (pairs of `d` and `W`). Infinite entries are skipped and ties
/// go to the smaller `d`. The minimum is taken as stated, without splitting
/// `delta` across candidates.
pub fn best_concentration_bound(
    n: f64,
    delta: f64,
    range: f64,
    profile: &MixingProfile,
    weight_sums: &[(u32, f64)],
) -> Result<BoundReport> {
    if weight_sums.is_empty() {
        return Err(Error::param("no candidate d values"));
    }
    let mut table = Vec::with_capacity(weight_sums.len());
    let mut best: Option<(u32, f64, f64, f64)> = None;
    let mut sorted = weight_sums.to_vec();
    sorted.sort_by_key(|&(d, _)| d);
    for (d, w) in sorted {
        let phi = phi_value(profile, d)?;
        let value = concentration_bound(n, delta, range, phi, w)?;
        table.push(BoundRow {
            d,
            phi,
            weight_sum: w,
            value,
        });
        if value.is_finite() && best.is_none_or(|b| value < b.3) {
            best = Some((d, phi, w, value));
        }
    }
    Ok(BoundReport {
        kind: "concentration".into(),
        n,
        delta,
        range: Some(range),
        kl: None,
        phi: best.map(|b| b.1),
        weight_sum: best.map(|b| b.2),
        d: best.map(|b| b.0),
        value: best.map(|b| b.3),
        table,
    })
}

/// Concave per-copy regret bounds `F(T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseBound {
    /// `c sqrt(T)`
    SqrtScaled { c: f64 },
    /// `KL / eta + eta T / 2`
    Ewa { kl: f64, eta: f64 },
    /// `sqrt(3 (3 + KL) T)`
    ParamFree { kl: f64 },
}

impl BaseBound {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BaseBound::SqrtScaled { c } => c * t.sqrt(),
            BaseBound::Ewa { kl, eta } => kl / eta + eta * t / 2.0,
            BaseBound::ParamFree { kl } => (3.0 * (3.0 + kl) * t).sqrt(),
        }
    }
}

/// `W * F(n / W)`
pub fn sheltered_regret_bound(w: f64, base: &BaseBound, n: f64) -> Result<f64> {
    check_w(w)?;
    check_n(n)?;
    match base {
        BaseBound::Ewa { eta, .. } if !(*eta > 0.0) => {
            return Err(Error::param("ewa bound needs eta > 0"));
        }
        BaseBound::Ewa { kl, .. } | BaseBound::ParamFree { kl } => check_kl(*kl)?,
        BaseBound::SqrtScaled { c } if !(*c >= 0.0) => return Err(Error::param("c must be non-negative")),
        BaseBound::SqrtScaled { .. } => {}
    }
    Ok(w * base.eval(n / w))
}
