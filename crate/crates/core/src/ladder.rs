//! Iteration exponent ladders in exact rational arithmetic.
//!
//! Two bootstrap families: the L^d-drift ladder `p_n = p_{n-1} + 2/(d-2)`,
//! `q_n = q_{n-1} + 2/d` starting from (d/(d-2), 1), and the boundedness
//! ladder `p_n = (d+2)(beta-2)/(d beta) (p_{n-1} + 2/(beta-2))` for
//! `beta > d + 2`, together with per-step exponent-identity audits and a
//! summable certificate for sup_n ||rho||_{p_n}.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::Config(format!("{v} is not a finite rational parameter")))
}

/// One audited identity: both sides as exact rationals plus the pass flag.
#[derive(Debug, Clone)]
pub struct AuditEntry {
    pub step: usize,
    pub name: &'static str,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub exact: bool,
}

impl AuditEntry {
    fn check(step: usize, name: &'static str, lhs: BigRational, rhs: BigRational) -> Self {
        let exact = lhs == rhs;
        AuditEntry {
            step,
            name,
            lhs,
            rhs,
            exact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundednessCertificate {
    /// Sum of (d+2)/(p_n d) ln(p_n^2 C1 + 1) over summed steps.
    pub partial_sum: f64,
    /// Closed-form geometric majorant of the remaining tail.
    pub tail_bound: f64,
    /// A1 exp(partial_sum + tail_bound): finite upper bound for sup_n A_n.
    pub sup_bound: f64,
    pub terms_summed: usize,
}

#[derive(Debug, Clone)]
pub struct LadderState {
    pub dim: usize,
    /// Integrability exponent ladder p_n (exact).
    pub p: Vec<BigRational>,
    /// Time exponent ladder q_n (drift ladder only).
    pub q: Vec<BigRational>,
    pub audits: Vec<AuditEntry>,
    pub certificate: Option<BoundednessCertificate>,
}

impl LadderState {
    pub fn all_audits_exact(&self) -> bool {
        self.audits.iter().all(|a| a.exact)
    }

    pub fn p_as_f64(&self) -> Vec<f64> {
        self.p.iter().map(|v| v.to_f64().unwrap()).collect()
    }

    pub fn strictly_increasing(&self) -> bool {
        self.p.windows(2).all(|w| w[1] > w[0]) && self.q.windows(2).all(|w| w[1] > w[0])
    }
}

/// Drift ladder for d > 2: (p_n, q_n) with the per-step audit that setting
/// s = d and k = q_n - 1 reproduces the previous rung exactly:
/// k s/(s-2) + 1 = p_{n-1} and k + (s-2)/s = q_{n-1}.
pub fn moser_ladder_drift(dim: usize, steps: usize) -> Result<LadderState> {
    if dim <= 2 {
        return Err(Error::Refused(format!(
            "exponent ladder requires d > 2 (d = {dim}); d <= 2 reduces to the d = 3 ladder"
        )));
    }
    if steps == 0 {
        return Err(Error::Config("need at least one ladder step".into()));
    }
    let d = dim as i64;
    let dp = rat(2, d - 2);
    let dq = rat(2, d);
    let mut p = vec![rat(d, d - 2)];
    let mut q = vec![rat(1, 1)];
    let mut audits = Vec::new();
    for n in 1..steps {
        let pn = &p[n - 1] + &dp;
        let qn = &q[n - 1] + &dq;
        // k = q_n - 1, s = d
        let k = &qn - BigRational::one();
        let s = rat(d, 1);
        let lhs_p = &k * &s / (&s - rat(2, 1)) + BigRational::one();
        audits.push(AuditEntry::check(
            n + 1,
            "k*s/(s-2)+1 = p_prev",
            lhs_p,
            p[n - 1].clone(),
        ));
        let lhs_q = &k + (&s - rat(2, 1)) / &s;
        audits.push(AuditEntry::check(
            n + 1,
            "k+(s-2)/s = q_prev",
            lhs_q,
            q[n - 1].clone(),
        ));
        p.push(pn);
        q.push(qn);
    }
    Ok(LadderState {
        dim,
        p,
        q,
        audits,
        certificate: None,
    })
}

/// Boundedness ladder for beta > d + 2, with per-step audits
/// (k = p_n d/(d+2) - 1 reproduces p_{n-1} and the exponent difference is
/// exactly -2/beta) and a finite certificate for sup_n A_n from the
/// log-increment bound ln A_n - ln A_{n-1} <= (d+2)/(p_n d) ln(p_n^2 C1 + 1).
pub fn moser_ladder_bounded(
    dim: usize,
    beta: f64,
    steps: usize,
    a1: f64,
    c1: f64,
) -> Result<LadderState> {
    if dim <= 2 {
        return Err(Error::Refused(format!(
            "exponent ladder requires d > 2 (d = {dim})"
        )));
    }
    if steps == 0 {
        return Err(Error::Config("need at least one ladder step".into()));
    }
    let beta_r = rat_from_f64(beta)?;
    let d = dim as i64;
    if beta_r <= rat(d + 2, 1) {
        return Err(Error::Refused(format!(
            "boundedness ladder requires beta > d + 2 = {}; got beta = {beta} (growth ratio would not exceed 1)",
            d + 2
        )));
    }
    if !(a1 > 0.0) || !(c1 > 0.0) {
        return Err(Error::Config(
            "certificate constants must be positive".into(),
        ));
    }
    let two = rat(2, 1);
    let ratio = rat(d + 2, d) * (&beta_r - &two) / &beta_r;
    debug_assert!(ratio > BigRational::one());
    debug_assert!(ratio <= rat(d, d - 2));
    let shift = &two / (&beta_r - &two);

    let mut p = vec![rat(d, d - 2)];
    let mut audits = Vec::new();
    for n in 1..steps {
        let pn = &ratio * (&p[n - 1] + &shift);
        // k = p_n d/(d+2) - 1
        let k = &pn * rat(d, d + 2) - BigRational::one();
        let lhs_p = &k * &beta_r / (&beta_r - &two) + BigRational::one();
        audits.push(AuditEntry::check(
            n + 1,
            "k*beta/(beta-2)+1 = p_prev",
            lhs_p,
            p[n - 1].clone(),
        ));
        let lhs_diff = &p[n - 1] * (&beta_r - &two) / &beta_r - &pn * rat(d, d + 2);
        audits.push(AuditEntry::check(
            n + 1,
            "exponent difference = -2/beta",
            lhs_diff,
            -(&two / &beta_r),
        ));
        p.push(pn);
    }

    let certificate = Some(certificate(dim, &beta_r, &ratio, &shift, &p, a1, c1)?);
    Ok(LadderState {
        dim,
        p,
        q: Vec::new(),
        audits,
        certificate,
    })
}

/// Sum the log-increment bound until the closed-form tail majorant drops
/// below 1e-12; the majorant uses p_n >= ratio^n below and
/// p_n <= P ratio^{n-1} above (P = p_1 + ratio*shift/(ratio-1)).
fn certificate(
    dim: usize,
    _beta: &BigRational,
    ratio: &BigRational,
    shift: &BigRational,
    p_prefix: &[BigRational],
    a1: f64,
    c1: f64,
) -> Result<BoundednessCertificate> {
    let d = dim as f64;
    let ratio_f = ratio.to_f64().unwrap();
    let shift_f = shift.to_f64().unwrap();
    let p1 = p_prefix[0].to_f64().unwrap();
    let x = 1.0 / ratio_f;
    let p_upper = p1 + ratio_f * shift_f / (ratio_f - 1.0);

    let term = |pn: f64| (d + 2.0) / (pn * d) * (pn * pn * c1 + 1.0).ln();
    // tail over n > m of (d+2)/d * x^n * (A + B n), from
    // ln(p_n^2 C1 + 1) <= ln(C1+1) + 2 ln max(1, p_n) and p_n <= P r^{n-1}
    let tail = |m: usize| -> f64 {
        let a = (c1 + 1.0).ln() + 2.0 * p_upper.max(1.0).ln();
        let b = 2.0 * ratio_f.ln();
        let m1 = (m + 1) as f64;
        let geo = x.powi((m + 1) as i32) / (1.0 - x);
        let lin = x.powi((m + 1) as i32) * (m1 * (1.0 - x) + x) / ((1.0 - x) * (1.0 - x));
        (d + 2.0) / d * (a * geo + b * lin)
    };

    let mut partial = 0.0;
    let mut pn = p1;
    let mut n = 1usize;
    loop {
        n += 1;
        pn = ratio_f * (pn + shift_f);
        partial += term(pn);
        let t = tail(n);
        if t < 1e-12 {
            return Ok(BoundednessCertificate {
                partial_sum: partial,
                tail_bound: t,
                sup_bound: a1 * (partial + t).exp(),
                terms_summed: n - 1,
            });
        }
        if n > 100_000 {
            return Err(Error::Solver(
                "certificate summation failed to converge".into(),
            ));
        }
    }
}

/// Exact-rational strict constant comparison c2 > 2 r K M used by the drift
/// condition audits (all operands converted exactly from their f64 bits).
pub fn strict_constant_check(c2: f64, r: f64, k: f64, m: f64) -> Result<bool> {
    let lhs = rat_from_f64(c2)?;
    let rhs = rat_from_f64(2.0)? * rat_from_f64(r)? * rat_from_f64(k)? * rat_from_f64(m)?;
    let _ = lhs.abs(); // rationals are exact; no rounding concerns
    Ok(lhs > rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn to_f(v: &BigRational) -> f64 {
        v.to_f64().unwrap()
    }

    #[test]
    fn drift_ladder_d3_first_four() {
        let l = moser_ladder_drift(3, 4).unwrap();
        let p: Vec<f64> = l.p_as_f64();
        assert_eq!(p, vec![3.0, 5.0, 7.0, 9.0]);
        let q: Vec<f64> = l.q.iter().map(to_f).collect();
        assert_eq!(q[0], 1.0);
        assert_eq!(l.q[1], rat(5, 3));
        assert_eq!(l.q[2], rat(7, 3));
        assert_eq!(l.q[3], rat(3, 1));
        assert!(l.all_audits_exact());
        assert!(l.strictly_increasing());
    }

    #[test]
    fn drift_ladder_d4() {
        let l = moser_ladder_drift(4, 2).unwrap();
        assert_eq!(l.p[0], rat(2, 1));
        assert_eq!(l.p[1], rat(3, 1));
        assert_eq!(l.q[0], rat(1, 1));
        assert_eq!(l.q[1], rat(3, 2));
        assert!(l.all_audits_exact());
    }

    #[test]
    fn drift_ladder_audit_d3_step2() {
        let l = moser_ladder_drift(3, 2).unwrap();
        // k = q_2 - 1 = 2/3, k*3/1 + 1 = 3 = p_1
        let audit = &l.audits[0];
        assert_eq!(audit.lhs, rat(3, 1));
        assert!(audit.exact);
    }

    #[test]
    fn drift_ladder_refuses_low_dimension() {
        assert!(moser_ladder_drift(2, 3).is_err());
        assert!(moser_ladder_drift(1, 3).is_err());
    }

    #[test]
    fn bounded_ladder_d3_beta6() {
        let l = moser_ladder_bounded(3, 6.0, 3, 1.0, 1.0).unwrap();
        // ratio = 5*4/18 = 10/9; p_1 = 3, p_2 = (10/9)(3 + 1/2) = 35/9
        assert_eq!(l.p[0], rat(3, 1));
        assert_eq!(l.p[1], rat(35, 9));
        assert!(l.all_audits_exact());
        // audit at n=2: k = (35/9)(3/5) - 1 = 4/3; k*6/4 + 1 = 3 = p_1
        let a = &l.audits[0];
        assert_eq!(a.lhs, rat(3, 1));
    }

    #[test]
    fn bounded_ladder_exact_for_twenty_steps() {
        for (d, beta) in [(3usize, 6.0), (3, 10.0), (4, 7.0)] {
            let l = moser_ladder_bounded(d, beta, 20, 1.0, 1.0).unwrap();
            assert_eq!(l.p.len(), 20);
            assert!(l.all_audits_exact(), "d={d} beta={beta}");
            assert!(l.strictly_increasing());
            let cert = l.certificate.as_ref().unwrap();
            assert!(cert.sup_bound.is_finite() && cert.sup_bound > 0.0);
            assert!(cert.tail_bound < 1e-12);
        }
    }

    #[test]
    fn bounded_ladder_refuses_small_beta() {
        assert!(moser_ladder_bounded(3, 5.0, 5, 1.0, 1.0).is_err());
        assert!(moser_ladder_bounded(3, 4.9, 5, 1.0, 1.0).is_err());
        // boundary: beta = d + 2 exactly is refused (ratio would be 1)
        assert!(moser_ladder_bounded(3, 5.0 + 0.0, 5, 1.0, 1.0).is_err());
    }

    #[test]
    fn certificate_value_reproducible_by_direct_summation() {
        let l = moser_ladder_bounded(3, 6.0, 5, 1.0, 1.0).unwrap();
        let cert = l.certificate.as_ref().unwrap();
        // independent direct summation oracle
        let mut pn = 3.0f64;
        let mut sum = 0.0;
        for _ in 1..cert.terms_summed + 1 {
            pn = (10.0 / 9.0) * (pn + 0.5);
            sum += 5.0 / (3.0 * pn) * (pn * pn + 1.0).ln();
        }
        assert_relative_eq!(cert.partial_sum, sum, epsilon = 1e-10);
        assert_relative_eq!(
            cert.sup_bound,
            (sum + cert.tail_bound).exp(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn strict_constant_check_exact() {
        // 1 > 2*2*0.2*1 = 0.8 true; 1 > 2*2*0.3*1 = 1.2 false
        assert!(strict_constant_check(1.0, 2.0, 0.2, 1.0).unwrap());
        assert!(!strict_constant_check(1.0, 2.0, 0.3, 1.0).unwrap());
        // equality is not strict
        assert!(!strict_constant_check(1.0, 2.0, 0.25, 1.0).unwrap());
    }
}
