use std::cell::Cell;

use super::kernel::Covariance;
use super::{fundamental_solution, LinearDdeParams};
use crate::error::{check_range, Error, Result};
use crate::quadrature::simpson_breaks;

/// Absolute tolerance of every quadrature in this module.
pub const QUAD_TOL: f64 = 1e-9;

/// Points in `r` where `r -> X(u - r - τ)` is not smooth: `u - τ - kτ`, `k ≥ 0`.
fn x_breaks(p: &LinearDdeParams, u: f64) -> Vec<f64> {
    let n = ((u + p.tau) / p.tau).floor().max(0.0) as usize;
    (0..=n).map(|k| u - p.tau - k as f64 * p.tau).collect()
}

/// Runs `f` inside a quadrature, stashing the first error it reports.
struct ErrSlot(Cell<Option<Error>>);

impl ErrSlot {
    fn new() -> Self {
        Self(Cell::new(None))
    }

    fn catch(&self, v: Result<f64>) -> f64 {
        v.unwrap_or_else(|e| {
            let prev = self.0.take();
            self.0.set(Some(prev.unwrap_or(e)));
            0.0
        })
    }

    fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// `R_t(s1, s2) = Cov(x(t + s1), x(t + s2))` for the linear equation started
/// from a centred Gaussian history with covariance `kernel`.
pub fn r_t(
    kernel: &dyn Covariance,
    p: &LinearDdeParams,
    t: f64,
    s1: f64,
    s2: f64,
) -> Result<f64> {
    p.check_horizon(t)?;
    let tau = p.tau;
    let in_window = |s: f64| s >= -tau * (1.0 + 1e-12) && s <= 1e-12 * tau;
    check_range("s1", s1, in_window(s1), "-tau <= s1 <= 0")?;
    check_range("s2", s2, in_window(s2), "-tau <= s2 <= 0")?;
    let (s1, s2) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
    let (u1, u2) = (t + s1, t + s2);
    let b = p.b;
    let x = |u: f64| fundamental_solution(p, u);
    let r0 = |r1: f64, r2: f64| kernel.eval(r1.clamp(-tau, 0.0), r2.clamp(-tau, 0.0));

    if u2 <= 0.0 {
        return Ok(r0(u1, u2));
    }
    let single_tol = QUAD_TOL / b.abs().max(1.0);

    // b ∫ X(u - r - τ) R₀(r, other) dr over the part of [-τ, 0] where X's
    // argument is non-negative
    let single = |u: f64, other: f64| -> Result<f64> {
        let hi = (u - tau).min(0.0);
        if b == 0.0 || hi <= -tau {
            return Ok(0.0);
        }
        let mut br = x_breaks(p, u);
        br.extend(kernel.breakpoints(other));
        let v = simpson_breaks(|r| x(u - r - tau) * r0(r, other), -tau, hi, &br, single_tol)?;
        Ok(b * v)
    };

    if u1 <= 0.0 {
        return Ok(x(u2) * r0(0.0, u1) + single(u2, u1)?);
    }

    let mut total = x(u1) * x(u2) * r0(0.0, 0.0) + x(u1) * single(u2, 0.0)? + x(u2) * single(u1, 0.0)?;

    let hi1 = (u1 - tau).min(0.0);
    let hi2 = (u2 - tau).min(0.0);
    if b != 0.0 && hi1 > -tau && hi2 > -tau {
        let double_tol = QUAD_TOL / (b * b).max(1.0);
        let inner_tol = 0.1 * double_tol / tau;
        let slot = ErrSlot::new();
        let xb2 = x_breaks(p, u2);
        let inner = |r1: f64| -> Result<f64> {
            let mut br = xb2.clone();
            br.extend(kernel.breakpoints(r1));
            simpson_breaks(|r2| x(u2 - r2 - tau) * r0(r1, r2), -tau, hi2, &br, inner_tol)
        };
        // a bilinear table makes the inner integral affine in r1 between
        // nodes, so it is only needed at the nodes
        let at_nodes = match kernel.affine_nodes() {
            Some(nodes) => {
                let vals = nodes.iter().map(|&r| inner(r)).collect::<Result<Vec<f64>>>()?;
                Some((nodes, vals))
            }
            None => None,
        };
        let inner = |r1: f64| -> Result<f64> {
            let Some((nodes, vals)) = &at_nodes else {
                return inner(r1);
            };
            let j = nodes.partition_point(|&n| n <= r1).clamp(1, nodes.len() - 1);
            let w = (r1 - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
            Ok((1.0 - w) * vals[j - 1] + w * vals[j])
        };
        let mut outer_br = x_breaks(p, u1);
        outer_br.extend(xb2.iter().copied());
        outer_br.push(hi2);
        outer_br.extend(kernel.breakpoints(f64::NAN));
        let v = simpson_breaks(
            |r1| x(u1 - r1 - tau) * slot.catch(inner(r1)),
            -tau,
            hi1,
            &outer_br,
            double_tol,
        );
        slot.check()?;
        total += b * b * v?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma2Point {
    pub t: f64,
    pub sigma2: f64,
    /// `R_t(-τ, 0)`.
    pub cross: f64,
    /// `|dσ²/dt - 2aσ² - 2b R_t(-τ, 0)|` with a finite-difference derivative.
    pub residual: f64,
}

/// `σ²(t) = e^{2at}(σ²(0) + 2b ∫₀ᵗ e^{-2as} R_s(-τ, 0) ds)` on `t = 0, dt, …, T`.
pub fn sigma2_curve(
    kernel: &dyn Covariance,
    p: &LinearDdeParams,
    t_end: f64,
    dt: f64,
) -> Result<Vec<Sigma2Point>> {
    check_range("dt", dt, dt > 0.0, "dt > 0")?;
    p.check_horizon(t_end)?;
    let n = (t_end / dt).round() as usize;
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "sigma2 curve needs at least two steps, got T = {t_end}, dt = {dt}"
        )));
    }
    let tau = p.tau;
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let cross = |s: f64| r_t(kernel, p, s, -tau, 0.0);
    let sigma0 = kernel.eval(0.0, 0.0);

    // R_s(-τ, 0) is smooth between multiples of τ, so composite Simpson on the
    // output grid (split at those multiples) is accurate far below QUAD_TOL.
    let g = |s: f64| -> Result<f64> { Ok((-2.0 * p.a * s).exp() * cross(s)?) };
    let simpson3 = |lo: f64, hi: f64, glo: f64, ghi: f64| -> Result<f64> {
        Ok((hi - lo) / 6.0 * (glo + 4.0 * g(0.5 * (lo + hi))? + ghi))
    };
    let mut crosses = Vec::with_capacity(n + 1);
    for &t in &ts {
        crosses.push(cross(t)?);
    }
    let gs: Vec<f64> = ts
        .iter()
        .zip(&crosses)
        .map(|(&t, &c)| (-2.0 * p.a * t).exp() * c)
        .collect();
    let mut sigma2 = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for i in 0..=n {
        if i > 0 && p.b != 0.0 {
            let (lo, hi) = (ts[i - 1], ts[i]);
            let kinks = kinks_in(tau, lo, hi);
            if kinks.is_empty() {
                acc += simpson3(lo, hi, gs[i - 1], gs[i])?;
            } else {
                let mut nodes = vec![(lo, gs[i - 1])];
                for k in kinks {
                    nodes.push((k, g(k)?));
                }
                nodes.push((hi, gs[i]));
                for w in nodes.windows(2) {
                    acc += simpson3(w[0].0, w[1].0, w[0].1, w[1].1)?;
                }
            }
        }
        sigma2.push((2.0 * p.a * ts[i]).exp() * (sigma0 + 2.0 * p.b * acc));
    }

    let kink_between = |lo: f64, hi: f64| !kinks_in(tau, lo, hi).is_empty();
    let is_kink = |t: f64| t > 0.0 && ((t / tau).round() * tau - t).abs() <= 1e-12 * tau.max(1.0);
    let forward = |i: usize| (-3.0 * sigma2[i] + 4.0 * sigma2[i + 1] - sigma2[i + 2]) / (2.0 * dt);
    let backward = |i: usize| (3.0 * sigma2[i] - 4.0 * sigma2[i - 1] + sigma2[i - 2]) / (2.0 * dt);
    let out = (0..=n)
        .map(|i| {
            let d = if i == 0 {
                forward(i)
            } else if i == n {
                backward(i)
            } else if is_kink(ts[i]) || kink_between(ts[i - 1], ts[i]) {
                if i + 2 <= n { forward(i) } else { backward(i) }
            } else if kink_between(ts[i], ts[i + 1]) {
                if i >= 2 { backward(i) } else { forward(i) }
            } else {
                (sigma2[i + 1] - sigma2[i - 1]) / (2.0 * dt)
            };
            Sigma2Point {
                t: ts[i],
                sigma2: sigma2[i],
                cross: crosses[i],
                residual: (d - 2.0 * p.a * sigma2[i] - 2.0 * p.b * crosses[i]).abs(),
            }
        })
        .collect();
    Ok(out)
}

/// Multiples of `tau` strictly inside `(lo, hi)`.
fn kinks_in(tau: f64, lo: f64, hi: f64) -> Vec<f64> {
    let first = (lo / tau).floor() as i64 + 1;
    (first..)
        .map(|k| k as f64 * tau)
        .take_while(|&k| k < hi)
        .filter(|&k| k > lo)
        .collect()
}

pub fn sigma2_csv(points: &[Sigma2Point]) -> String {
    let mut out = String::from("t,sigma2,residual\n");
    for p in points {
        out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", p.t, p.sigma2, p.residual));
    }
    out
}

/// `t,s1,s2,R` rows for `R_t` on an `n × n` grid over `[-τ, 0]²`.
pub fn r_slice_csv(kernel: &dyn Covariance, p: &LinearDdeParams, t: f64, n: usize) -> Result<String> {
    let mut out = String::from("t,s1,s2,R\n");
    let s = |i: usize| -p.tau + p.tau * i as f64 / (n.max(2) - 1) as f64;
    for i in 0..n.max(2) {
        for j in 0..n.max(2) {
            let r = r_t(kernel, p, t, s(i), s(j))?;
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", t, s(i), s(j), r));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerClosedForm {
    /// `R_t(-τ, 0)`.
    pub cross: f64,
    pub sigma2: f64,
}

/// `(e^z - 1 - z) / z²`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let mut term = 0.5;
        let mut sum = 0.0;
        for k in 0..20 {
            sum += term;
            term *= z / (k as f64 + 3.0);
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// `((e^z - 1)² - 2(e^z - 1 - z)) / z³ = Σ_{n ≥ 3} (2ⁿ - 4) z^{n-3} / n!`.
fn phi3(z: f64) -> f64 {
    if z.abs() < 0.1 {
        let mut sum = 0.0;
        let mut zpow = 1.0;
        let mut fact = 6.0;
        let mut two = 8.0;
        for n in 3..25 {
            sum += (two - 4.0) * zpow / fact;
            zpow *= z;
            fact *= (n + 1) as f64;
            two *= 2.0;
        }
        sum
    } else {
        let e = z.exp_m1();
        (e * e - 2.0 * (e - z)) / (z * z * z)
    }
}

/// Variance and lag covariance on `[0, τ]` for a Wiener history
/// (`R₀ = min(s1, s2) + τ`).
///
/// For `a ≠ 0` the removable singularities `(e^{at} - 1 - at)/a²` and its cubic
/// companion are evaluated through their Taylor series when `|at| < 0.1`, so
/// the formula is accurate uniformly as `a -> 0` and meets the `a = 0` form
/// continuously.
pub fn wiener_closed_form(p: &LinearDdeParams, t: f64) -> Result<WienerClosedForm> {
    p.validate()?;
    check_range("t", t, t >= 0.0 && t <= p.tau, "0 <= t <= tau")?;
    let (a, b, tau) = (p.a, p.b, p.tau);
    if a == 0.0 {
        return Ok(WienerClosedForm {
            cross: t + b * t * t / 2.0,
            sigma2: tau + b * t * t + b * b * t.powi(3) / 3.0,
        });
    }
    let z = a * t;
    let e = z.exp();
    // (b/a²)(e^{at} - 1 - at) = b t² φ₂(at)
    let q = b * t * t * phi2(z);
    Ok(WienerClosedForm {
        cross: e * t + q,
        // b²/(2a³)((e^{at} - 1)² - 2(e^{at} - 1 - at)) = b² t³ φ₃(at) / 2
        sigma2: e * e * tau + 2.0 * e * q + b * b * t.powi(3) * phi3(z) / 2.0,
    })
}

/// `S_t η_r(s)` for the Wiener factor `η_r = 1_{[r, 0]}` when `t + s ∈ [0, τ]`.
pub fn wiener_factor_image(p: &LinearDdeParams, t: f64, s: f64, r: f64) -> f64 {
    let w = (t + s - r - p.tau).max(0.0);
    if p.a == 0.0 {
        1.0 + p.b * w
    } else {
        (p.a * (t + s)).exp() + p.b / p.a * (p.a * w).exp_m1()
    }
}

/// `σ²(t) = ∫ (S_t η_r(0))² dr` for a Wiener history and `t ∈ [0, τ]`.
pub fn wiener_factorized_sigma2(p: &LinearDdeParams, t: f64) -> Result<f64> {
    check_range("t", t, t >= 0.0 && t <= p.tau, "0 <= t <= tau")?;
    simpson_breaks(
        |r| wiener_factor_image(p, t, 0.0, r).powi(2),
        -p.tau,
        0.0,
        &[t - p.tau],
        QUAD_TOL,
    )
}

/// `σ²(t) = ∫ (S_t η_r(0))² dr` for any `t ≥ 0`, with `S_t η_r(0)` computed
/// from the kernel's factor and the fundamental solution.
pub fn factorized_sigma2(kernel: &dyn Covariance, p: &LinearDdeParams, t: f64) -> Result<f64> {
    p.check_horizon(t)?;
    if kernel.factor(-p.tau, 0.0).is_none() {
        return Err(Error::InvalidGrid(format!(
            "kernel `{}` has no known factorization",
            kernel.name()
        )));
    }
    let tau = p.tau;
    let eta = |r: f64, s: f64| kernel.factor(r, s).unwrap_or(0.0);
    let xb = x_breaks(p, t);
    let hi = (t - tau).min(0.0);
    let slot = ErrSlot::new();
    let image = |r: f64| -> Result<f64> {
        let mut v = fundamental_solution(p, t) * eta(r, 0.0);
        if p.b != 0.0 && hi > -tau {
            let mut br = xb.clone();
            br.push(r);
            v += p.b
                * simpson_breaks(
                    |q| fundamental_solution(p, t - q - tau) * eta(r, q),
                    -tau,
                    hi,
                    &br,
                    0.1 * QUAD_TOL,
                )?;
        }
        Ok(v)
    };
    let mut br = xb.clone();
    br.push(hi);
    let v = simpson_breaks(|r| slot.catch(image(r)).powi(2), -tau, 0.0, &br, QUAD_TOL);
    slot.check()?;
    v
}

#[cfg(test)]
mod tests {
    use super::super::kernel::CovKernel;
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn series_match_direct_forms_at_switch() {
        for z in [0.0999999, -0.0999999] {
            let d2 = (f64::exp_m1(z) - z) / (z * z);
            assert!((phi2(z) - d2).abs() < 1e-13);
            let e = f64::exp_m1(z);
            let d3 = (e * e - 2.0 * (e - z)) / (z * z * z);
            assert!((phi3(z) - d3).abs() < 1e-11);
        }
    }

    #[test]
    fn wiener_closed_form_values() {
        let p = LinearDdeParams::new(0.0, -1.0, 1.0).unwrap();
        let w = wiener_closed_form(&p, 1.0).unwrap();
        assert!((w.cross - 0.5).abs() < 1e-15);
        assert!((w.sigma2 - 1.0 / 3.0).abs() < 1e-15);
        let z = wiener_closed_form(&LinearDdeParams::new(0.7, 2.0, 1.5).unwrap(), 0.0).unwrap();
        assert_eq!(z.cross, 0.0);
        assert!((z.sigma2 - 1.5).abs() < 1e-15);
        let g = wiener_closed_form(&LinearDdeParams::new(1.0, 0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((g.sigma2 - 1f64.exp().powi(2)).abs() < 1e-13);
        assert!(wiener_closed_form(&p, 1.1).is_err());
    }

    #[test]
    fn wiener_closed_form_continuous_in_a() {
        let at = |a: f64| wiener_closed_form(&LinearDdeParams::new(a, -1.0, 1.0).unwrap(), 0.8).unwrap();
        let (z, e) = (at(0.0), at(1e-9));
        assert!((z.sigma2 - e.sigma2).abs() < 1e-8);
        assert!((z.cross - e.cross).abs() < 1e-8);
    }

    #[test]
    fn brownian_regimes() {
        let tau = 1.0;
        let k = CovKernel::BrownianMinPlusTau { tau };
        let p = LinearDdeParams::new(0.0, -1.0, tau).unwrap();
        let (s1, s2) = (-0.8, -0.5);
        let r1 = r_t(&k, &p, 0.3, s1, s2).unwrap();
        assert!((r1 - (0.3 + s1 + tau)).abs() < 1e-14);
        let t = 0.6;
        let r2 = r_t(&k, &p, t, s1, s2).unwrap();
        let expect = t + s1 + tau + p.b / 2.0 * (t + s2).powi(2);
        assert!((r2 - expect).abs() < 1e-10, "{r2} vs {expect}");
        assert_eq!(r_t(&k, &p, t, s2, s1).unwrap(), r2);
    }

    #[test]
    fn cosine_is_invariant() {
        let p = LinearDdeParams::new(0.0, -1.0, FRAC_PI_2).unwrap();
        for &t in &[0.4, 1.3, 2.9, 5.0] {
            for &(s1, s2) in &[(-1.2, -0.1), (-0.3, 0.0), (-FRAC_PI_2, 0.0)] {
                let r = r_t(&CovKernel::Cosine, &p, t, s1, s2).unwrap();
                assert!((r - (s2 - s1).cos()).abs() < 1e-8, "t = {t}: {r}");
            }
        }
    }

    #[test]
    fn no_delay_coupling_gives_pure_growth() {
        let p = LinearDdeParams::new(0.3, 0.0, 1.0).unwrap();
        let k = CovKernel::BrownianMinPlusTau { tau: 1.0 };
        let c = sigma2_curve(&k, &p, 2.0, 0.01).unwrap();
        for pt in &c {
            assert_eq!(pt.sigma2, (0.6 * pt.t).exp() * 1.0);
        }
    }

    #[test]
    fn kinks_strictly_inside() {
        assert_eq!(kinks_in(1.0, 0.5, 2.5), vec![1.0, 2.0]);
        assert!(kinks_in(1.0, 1.0, 1.5).is_empty());
    }

    #[test]
    fn printed_wiener_factor_matches_closed_form() {
        for &(a, b) in &[(0.0, -1.0), (0.5, -1.0), (-1.0, 0.5)] {
            let p = LinearDdeParams::new(a, b, 1.0).unwrap();
            for &t in &[0.0, 0.4, 1.0] {
                let f = wiener_factorized_sigma2(&p, t).unwrap();
                let c = wiener_closed_form(&p, t).unwrap().sigma2;
                assert!((f - c).abs() < 1e-9, "({a}, {b}) t = {t}: {f} vs {c}");
            }
        }
    }
}
