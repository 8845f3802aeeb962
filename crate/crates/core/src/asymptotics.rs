//! Certified bounds on the growth constant of `E[c(T_n)]`.
//!
//! Trimming a uniform random tree from the leaves moves every pendant
//! subtree of size `k <= K` into a class; the class of a rooted shape on `k`
//! vertices has density `k · f_K(k)` and the untrimmed remainder has density
//! `h(K)`. The bounds are products of `g(T, v)^{f_K(k)}` over all rooted
//! shapes, times a correction for the remainder:
//!
//! * `lower = exp(Σ_k f_K(k) Σ_g x(k, g) ln g)`
//! * `upper1 = 2^h(K) · lower`
//! * `upper2 = ξ1 ξ2 ξ3 · lower`, using pendant sizes up to `K̂`
//! * `conj = m(K)^h(K) · lower`, conditional on `m(k)` decreasing
//!
//! Everything is evaluated in [`DirectedReal`] arithmetic, so printed lower
//! bounds are rounded down and printed upper bounds rounded up.

use std::fmt::Write as _;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::Integer;

use crate::census::{log_g_moment, multiplier, GCountTable};
use crate::directed::DirectedReal;
use crate::error::{Error, Result};

/// Largest pendant size summed by default in [`upper_bound_2`].
pub const DEFAULT_K_HAT: usize = 10_000;

/// Decimal places of the bounds table.
pub const TABLE_DECIMALS: u32 = 8;

pub const CSV_HEADER: &str = "K,lower,upper1,upper2,conj_upper,r_frac,multiplier";

fn binomial(n: usize, k: usize) -> Integer {
    Integer::from(Integer::binomial_u(n as u32, k as u32))
}

fn factorial(n: usize) -> Integer {
    Integer::from(Integer::factorial(n as u32))
}

/// `e^-k / k!`
fn poisson_weight(prec: u32, k: usize) -> DirectedReal {
    let ek = DirectedReal::from_i64(prec, -(k as i64)).exp();
    ek.div(&DirectedReal::from_integer(prec, &factorial(k)))
}

fn check_k(k_max: usize, k: usize) -> Result<()> {
    if k == 0 || k > k_max {
        Err(Error::invalid(format!("need 1 <= k <= K, got k = {k}, K = {k_max}")))
    } else {
        Ok(())
    }
}

/// `f_K(k) = e^-k/k! − Σ_{l=k+1}^{K} (l−k)^(l−k−1) C(l, l−k) e^-l/l!`.
pub fn f_closed(k_max: usize, k: usize, prec: u32) -> Result<DirectedReal> {
    check_k(k_max, k)?;
    let mut sum = DirectedReal::zero(prec);
    for l in k + 1..=k_max {
        let d = l - k;
        let coeff = Integer::from(d).pow(d as u32 - 1) * binomial(l, d);
        sum.add_assign(&poisson_weight(prec, l).mul_integer(&coeff));
    }
    Ok(&poisson_weight(prec, k) - &sum)
}

/// The same densities from the top-down recurrence
/// `f(k) = e^-k/k! − Σ_{l>k} (l−k)^(l−k) C(l, l−k) f(l)`; index `k - 1`.
pub fn f_recurrence_all(k_max: usize, prec: u32) -> Result<Vec<DirectedReal>> {
    if k_max == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let mut f: Vec<Option<DirectedReal>> = vec![None; k_max];
    for k in (1..=k_max).rev() {
        let mut sum = DirectedReal::zero(prec);
        for l in k + 1..=k_max {
            let d = l - k;
            let coeff = Integer::from(d).pow(d as u32) * binomial(l, d);
            sum.add_assign(&f[l - 1].as_ref().unwrap().mul_integer(&coeff));
        }
        f[k - 1] = Some(&poisson_weight(prec, k) - &sum);
    }
    Ok(f.into_iter().map(Option::unwrap).collect())
}

pub fn f_recurrence(k_max: usize, k: usize, prec: u32) -> Result<DirectedReal> {
    check_k(k_max, k)?;
    Ok(f_recurrence_all(k_max, prec)?.swap_remove(k - 1))
}

/// `h(K) = 1 − Σ_{k=1}^{K} k^(k−1) e^-k / k!`, the limiting fraction of untrimmed vertices.
pub fn h(k_max: usize, prec: u32) -> DirectedReal {
    let mut sum = DirectedReal::zero(prec);
    for k in 1..=k_max.max(1) {
        let count = Integer::from(k).pow(k as u32 - 1);
        sum.add_assign(&poisson_weight(prec, k).mul_integer(&count));
    }
    &DirectedReal::one(prec) - &sum
}

/// `f_K(1..=K)` and `h(K)`.
#[derive(Clone, Debug)]
pub struct DensityTable {
    k_max: usize,
    f: Vec<DirectedReal>,
    h: DirectedReal,
}

impl DensityTable {
    pub fn new(k_max: usize, prec: u32) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        let f = (1..=k_max).map(|k| f_closed(k_max, k, prec)).collect::<Result<_>>()?;
        Ok(DensityTable {
            k_max,
            f,
            h: h(k_max, prec),
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn f(&self, k: usize) -> &DirectedReal {
        &self.f[k - 1]
    }

    pub fn h(&self) -> &DirectedReal {
        &self.h
    }

    /// `Σ_k k^k f_K(k) + h(K)`, which is exactly 1.
    pub fn total_mass(&self) -> DirectedReal {
        let mut sum = self.h.clone();
        for k in 1..=self.k_max {
            sum.add_assign(&self.f(k).mul_integer(&Integer::from(k).pow(k as u32)));
        }
        sum
    }
}

/// `exp(Σ_k f_K(k) Σ_g x(k, g) ln g)`. The census may extend past `K`.
pub fn lower_bound(table: &GCountTable, density: &DensityTable) -> Result<DirectedReal> {
    let k_max = density.k_max();
    if table.k_max() < k_max {
        return Err(Error::invalid(format!(
            "census covers k <= {} but the densities need k <= {k_max}",
            table.k_max()
        )));
    }
    let prec = density.h().prec();
    let mut exponent = DirectedReal::zero(prec);
    for k in 1..=k_max {
        let moment = log_g_moment(table, k, prec)?;
        exponent.add_assign(&(density.f(k) * &moment));
    }
    Ok(exponent.exp())
}

/// `2^h(K) · lower`.
pub fn upper_bound_1(lower: &DirectedReal, h_k: &DirectedReal) -> DirectedReal {
    let two = DirectedReal::from_u64(lower.prec(), 2);
    &two.pow(h_k) * lower
}

/// `m(K)^h(K) · lower`.
pub fn conjectured_upper(lower: &DirectedReal, multiplier_k: &DirectedReal, h_k: &DirectedReal) -> DirectedReal {
    &multiplier_k.pow(h_k) * lower
}

/// Pendant-size sums for the `ξ` factors, precomputed once per `K̂`.
///
/// With `p_k = e^-k / k!`, the pendant trees of size `k` split into those
/// attached through a leaf, `k (k−1)^(k−2) p_k` per vertex, and the rest,
/// `(k^(k−1) − k (k−1)^(k−2)) p_k`. Each weight is evaluated as the exponential of
/// its logarithm, since `k^(k−1)` and `k!` overflow long before `K̂`.
#[derive(Clone, Debug)]
pub struct XiTail {
    k_hat: usize,
    ln_xi1: DirectedReal,
    // suffix[K] = Σ_{k=K+1}^{K̂} for K in 0..K̂
    ln_xi2_suffix: Vec<DirectedReal>,
    ln_xi3_suffix: Vec<DirectedReal>,
}

impl XiTail {
    pub fn new(k_hat: usize, prec: u32) -> Result<Self> {
        if k_hat < 2 {
            return Err(Error::invalid(format!("K̂ must be at least 2, got {k_hat}")));
        }
        let one = DirectedReal::one(prec);
        let ln = |v: u64| DirectedReal::from_u64(prec, v).ln();
        let mut ln_fact = DirectedReal::zero(prec);
        let mut h_sum = DirectedReal::zero(prec);
        let mut xi2_terms = vec![DirectedReal::zero(prec); k_hat + 1];
        let mut xi3_terms = vec![DirectedReal::zero(prec); k_hat + 1];
        for k in 1..=k_hat {
            let kk = k as u64;
            let ln_k = ln(kk);
            ln_fact.add_assign(&ln_k);
            let base = &DirectedReal::from_i64(prec, -(k as i64)) - &ln_fact;
            let all = (&(&ln_k * &DirectedReal::from_u64(prec, kk - 1)) + &base).exp();
            h_sum.add_assign(&all);
            if k == 1 {
                continue;
            }
            let leafy_ln = &(&ln_k + &(&ln(kk - 1) * &DirectedReal::from_u64(prec, kk - 2))) + &base;
            let leafy = leafy_ln.exp();
            let rest = &all - &leafy;
            let ratio2 = DirectedReal::from_ratio(prec, &Integer::from(1), &Integer::from(kk)).ln_1p();
            let ratio3 = DirectedReal::from_ratio(prec, &Integer::from(1), &Integer::from(2 * kk - 2)).ln_1p();
            xi2_terms[k] = &leafy * &ratio2;
            xi3_terms[k] = &rest * &ratio3;
        }
        let h_hat = &one - &h_sum;
        let ln_xi1 = &h_hat * &DirectedReal::from_ratio(prec, &Integer::from(1), &Integer::from(k_hat)).ln_1p();

        let mut ln_xi2_suffix = vec![DirectedReal::zero(prec); k_hat];
        let mut ln_xi3_suffix = vec![DirectedReal::zero(prec); k_hat];
        let mut s2 = DirectedReal::zero(prec);
        let mut s3 = DirectedReal::zero(prec);
        for k in (1..k_hat).rev() {
            s2.add_assign(&xi2_terms[k + 1]);
            s3.add_assign(&xi3_terms[k + 1]);
            ln_xi2_suffix[k] = s2.clone();
            ln_xi3_suffix[k] = s3.clone();
        }
        Ok(XiTail {
            k_hat,
            ln_xi1,
            ln_xi2_suffix,
            ln_xi3_suffix,
        })
    }

    pub fn k_hat(&self) -> usize {
        self.k_hat
    }

    /// `(ξ1, ξ2, ξ3)` for trimming parameter `K < K̂`.
    pub fn factors(&self, k_max: usize) -> Result<(DirectedReal, DirectedReal, DirectedReal)> {
        if k_max == 0 || k_max >= self.k_hat {
            return Err(Error::invalid(format!("need 1 <= K < K̂ = {}, got K = {k_max}", self.k_hat)));
        }
        Ok((
            self.ln_xi1.exp(),
            self.ln_xi2_suffix[k_max].exp(),
            self.ln_xi3_suffix[k_max].exp(),
        ))
    }

    /// `ln(ξ1 ξ2 ξ3)`.
    fn ln_product(&self, k_max: usize) -> Result<DirectedReal> {
        if k_max == 0 || k_max >= self.k_hat {
            return Err(Error::invalid(format!("need 1 <= K < K̂ = {}, got K = {k_max}", self.k_hat)));
        }
        Ok(&(&self.ln_xi1 + &self.ln_xi2_suffix[k_max]) + &self.ln_xi3_suffix[k_max])
    }
}

/// The four factors of the second upper bound.
#[derive(Clone, Debug)]
pub struct XiFactors {
    pub xi1: DirectedReal,
    pub xi2: DirectedReal,
    pub xi3: DirectedReal,
    pub xi4: DirectedReal,
}

pub fn xi_factors(table: &GCountTable, density: &DensityTable, tail: &XiTail) -> Result<XiFactors> {
    let (xi1, xi2, xi3) = tail.factors(density.k_max())?;
    Ok(XiFactors {
        xi1,
        xi2,
        xi3,
        xi4: lower_bound(table, density)?,
    })
}

/// `ξ1 ξ2 ξ3 ξ4` with pendant sizes up to `k_hat > K`.
pub fn upper_bound_2(table: &GCountTable, density: &DensityTable, k_hat: usize) -> Result<DirectedReal> {
    if k_hat <= density.k_max() {
        return Err(Error::invalid(format!("K̂ = {k_hat} must exceed K = {}", density.k_max())));
    }
    let tail = XiTail::new(k_hat, density.h().prec())?;
    upper_bound_2_with(table, density, &tail)
}

pub fn upper_bound_2_with(table: &GCountTable, density: &DensityTable, tail: &XiTail) -> Result<DirectedReal> {
    let lower = lower_bound(table, density)?;
    Ok(&tail.ln_product(density.k_max())?.exp() * &lower)
}

/// What stands in for the lower-bound factor `ξ4` of `upper2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LowerFactor {
    /// The certified enclosure of the lower bound.
    #[default]
    Enclosure,
    /// The lower bound truncated to the table's printed decimals, the way
    /// tables built from already printed values chain them. The result may
    /// sit up to about `10^-8` below the certified `upper2`.
    Printed,
}

/// One line of the bounds table.
#[derive(Clone, Debug)]
pub struct BoundsRow {
    pub k: usize,
    pub lower: DirectedReal,
    pub upper1: DirectedReal,
    pub upper2: DirectedReal,
    pub conj_upper: DirectedReal,
    pub r_frac: DirectedReal,
    pub multiplier: DirectedReal,
}

impl BoundsRow {
    pub fn compute(table: &GCountTable, k_max: usize, tail: &XiTail, prec: u32) -> Result<Self> {
        Self::compute_with(table, k_max, tail, prec, LowerFactor::Enclosure)
    }

    pub fn compute_with(
        table: &GCountTable,
        k_max: usize,
        tail: &XiTail,
        prec: u32,
        factor: LowerFactor,
    ) -> Result<Self> {
        let density = DensityTable::new(k_max, prec)?;
        let lower = lower_bound(table, &density)?;
        let m = multiplier(table, k_max, prec)?;
        let h = density.h().clone();
        let xi4 = match factor {
            LowerFactor::Enclosure => lower.clone(),
            LowerFactor::Printed => lower.floor_to_decimals(TABLE_DECIMALS),
        };
        Ok(BoundsRow {
            k: k_max,
            upper1: upper_bound_1(&lower, &h),
            upper2: &tail.ln_product(k_max)?.exp() * &xi4,
            conj_upper: conjectured_upper(&lower, &m, &h),
            lower,
            r_frac: h,
            multiplier: m,
        })
    }

    /// Printed cells: lower rounded down, the three upper bounds rounded up,
    /// `r_frac` and `multiplier` truncated.
    pub fn cells(&self, decimals: u32) -> [String; 7] {
        [
            self.k.to_string(),
            self.lower.format_down(decimals),
            self.upper1.format_up(decimals),
            self.upper2.format_up(decimals),
            self.conj_upper.format_up(decimals),
            self.r_frac.format_truncated(decimals),
            self.multiplier.format_truncated(decimals),
        ]
    }

    pub fn to_csv(&self) -> String {
        self.cells(TABLE_DECIMALS).join(",")
    }
}

/// Rows for `K = 1..=k_max`, computed in parallel with one shared tail.
pub fn bounds_table(table: &GCountTable, k_max: usize, k_hat: usize, prec: u32) -> Result<Vec<BoundsRow>> {
    bounds_table_with(table, k_max, k_hat, prec, LowerFactor::Enclosure)
}

pub fn bounds_table_with(
    table: &GCountTable,
    k_max: usize,
    k_hat: usize,
    prec: u32,
    factor: LowerFactor,
) -> Result<Vec<BoundsRow>> {
    if k_max == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if k_hat <= k_max {
        return Err(Error::invalid(format!("K̂ = {k_hat} must exceed K = {k_max}")));
    }
    let tail = XiTail::new(k_hat, prec)?;
    (1..=k_max)
        .into_par_iter()
        .map(|k| BoundsRow::compute_with(table, k, &tail, prec, factor))
        .collect()
}

pub fn render_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn render_markdown(rows: &[BoundsRow]) -> String {
    let mut out = String::from("| K | lower | upper 1 | upper 2 | conj. upper | \\|R\\|/n | multiplier |\n");
    out.push_str("|---:|---:|---:|---:|---:|---:|---:|\n");
    for row in rows {
        let _ = writeln!(out, "| {} |", row.cells(TABLE_DECIMALS).join(" | "));
    }
    out
}

/// Bounds that need no census.
#[derive(Clone, Debug)]
pub struct TrivialConstants {
    /// `2^(1/e)`, from the expected number of leaves.
    pub two_pow_inv_e: DirectedReal,
    /// `e^-1 − e^(1/e − 2)`
    pub beta_l: DirectedReal,
    /// `2^β̂_L ∏_{k>=2} (2^(k−1) + 1)^(e^-k/(k−1)!)`, from stars.
    pub beta: DirectedReal,
    /// `e^(1/e − 1) + e^(1/e − 2) − e^-1`
    pub beta_c: DirectedReal,
    /// `1 − e^(1/e − 1)`
    pub beta_r: DirectedReal,
    /// `2^β̂_R · β̂`
    pub alpha: DirectedReal,
}

/// Stop the star product once its certified log tail is below this.
const STAR_TAIL_TOLERANCE_LOG2: i32 = -80;

pub fn trivial_constants(prec: u32) -> TrivialConstants {
    let one = DirectedReal::one(prec);
    let e = DirectedReal::e(prec);
    let ln2 = DirectedReal::ln2(prec);
    let inv_e = one.div(&e);
    let two = DirectedReal::from_u64(prec, 2);
    let exp_i = |v: i64| DirectedReal::from_i64(prec, v).exp();
    let e_inv_e = inv_e.exp();

    let two_pow_inv_e = two.pow(&inv_e);
    let beta_l = &inv_e - &e_inv_e.div(&exp_i(2));
    let beta_c = &(&e_inv_e.div(&e) + &e_inv_e.div(&exp_i(2))) - &inv_e;
    let beta_r = &one - &e_inv_e.div(&e);

    // ln β̂ = β̂_L ln 2 + Σ_{k>=2} e^-k/(k−1)! · ln(2^(k−1) + 1). Each term is at
    // most t_k = k ln2 e^-k/(k−1)!, and t_{k+1}/t_k <= 1/2, so the tail after
    // k is at most 2 t_{k+1}.
    let mut ln_beta = &beta_l * &ln2;
    let tolerance = rug::Float::with_val(prec, rug::Float::i_exp(1, STAR_TAIL_TOLERANCE_LOG2));
    let mut k = 2usize;
    let tail_bound = loop {
        let weight = exp_i(-(k as i64)).div(&DirectedReal::from_integer(prec, &factorial(k - 1)));
        let pow = Integer::from(1) << (k as u32 - 1);
        let term = &weight * &DirectedReal::from_integer(prec, &(pow + 1u32)).ln();
        ln_beta.add_assign(&term);
        let next = k + 1;
        let t_next = &exp_i(-(next as i64))
            .div(&DirectedReal::from_integer(prec, &factorial(next - 1)))
            .mul_integer(&Integer::from(2 * next))
            * &ln2;
        if *t_next.hi() < tolerance {
            break t_next;
        }
        k += 1;
    };
    let zero = rug::Float::with_val(prec, 0);
    ln_beta.add_assign(&DirectedReal::from_endpoints(zero, tail_bound.hi().clone()));
    let beta = ln_beta.exp();
    let alpha = &two.pow(&beta_r) * &beta;
    TrivialConstants {
        two_pow_inv_e,
        beta_l,
        beta,
        beta_c,
        beta_r,
        alpha,
    }
}

/// Exact check of `2(b−1) b^(b−2) = Σ_{c=1}^{b−1} C(b,c) c^(c−1) (b−c)^(b−c−1)`
/// and of `(b−1) b^(b−1) = Σ_{c=1}^{b−1} C(b,c) c^c (b−c)^(b−c−1)`.
pub fn identity_check(b: usize) -> bool {
    assert!(b >= 2, "identity_check needs b >= 2");
    let bi = Integer::from(b);
    let pw = |base: usize, e: usize| Integer::from(base).pow(e as u32);
    let lhs1 = Integer::from(2 * (b - 1)) * pw(b, b - 2);
    let lhs2 = Integer::from(b - 1) * Integer::from(&bi).pow(b as u32 - 1);
    let mut rhs1 = Integer::new();
    let mut rhs2 = Integer::new();
    for c in 1..b {
        let shared = binomial(b, c) * pw(b - c, b - c - 1);
        rhs1 += &shared * pw(c, c - 1);
        rhs2 += shared * pw(c, c);
    }
    lhs1 == rhs1 && lhs2 == rhs2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::compute_tables;

    const P: u32 = 256;

    fn near(x: &DirectedReal, v: f64, tol: f64) -> bool {
        (x.mid_f64() - v).abs() <= tol
    }

    #[test]
    fn density_examples() {
        let e = std::f64::consts::E;
        assert!(near(&f_closed(1, 1, P).unwrap(), 1.0 / e, 1e-15));
        assert!(near(&f_closed(2, 1, P).unwrap(), 1.0 / e - 1.0 / (e * e), 1e-15));
        assert!(near(&f_closed(2, 2, P).unwrap(), 0.5 / (e * e), 1e-15));
        let f77 = f_closed(7, 7, P).unwrap();
        assert!(f77.encloses(&poisson_weight(P, 7)) && poisson_weight(P, 7).encloses(&f77));
        assert!(f_closed(3, 4, P).is_err());
        assert!(f_closed(3, 0, P).is_err());
        assert_eq!(f_recurrence(3, 3, P).unwrap(), poisson_weight(P, 3));
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for k_max in 1..=12 {
            let rec = f_recurrence_all(k_max, P).unwrap();
            for k in 1..=k_max {
                let closed = f_closed(k_max, k, P).unwrap();
                assert!(closed.overlaps(&rec[k - 1]), "K = {k_max}, k = {k}");
                assert!(closed.lo() >= &0);
            }
        }
    }

    #[test]
    fn mass_is_conserved() {
        for k_max in 1..=12 {
            let mass = DensityTable::new(k_max, P).unwrap().total_mass();
            assert!(mass.contains(&rug::Float::with_val(P, 1)), "K = {k_max}: {mass}");
            assert!(mass.width() < 1e-60);
        }
    }

    #[test]
    fn h_examples() {
        assert!(near(&h(1, P), 1.0 - (-1f64).exp(), 1e-15));
        assert!(h(2, P).truncates_to("0.49678527", 8));
        assert!(h(10, P).truncates_to("0.24551402", 8));
    }

    #[test]
    fn small_bounds() {
        let table = compute_tables(3).unwrap();
        let tail = XiTail::new(DEFAULT_K_HAT, P).unwrap();
        let r1 = BoundsRow::compute(&table, 1, &tail, P).unwrap();
        assert_eq!(r1.cells(8)[1..3], ["1.29045464".to_string(), "2.00000001".to_string()]);
        assert!(r1.upper1.truncates_to("2.00000000", 8));
        assert!(r1.conj_upper.truncates_to("2.00000000", 8));
        let r2 = BoundsRow::compute(&table, 2, &tail, P).unwrap();
        assert!(r2.lower.truncates_to("1.36324560", 8));
        assert!(r2.upper1.truncates_to("1.92362926", 8));
        let r3 = BoundsRow::compute(&table, 3, &tail, P).unwrap();
        assert!(r3.conj_upper.truncates_to("1.55596710", 8));
        assert!(BoundsRow::compute(&table, 4, &tail, P).is_err());
    }

    #[test]
    fn upper_bound_2_input_checks() {
        let table = compute_tables(3).unwrap();
        let density = DensityTable::new(3, P).unwrap();
        assert!(upper_bound_2(&table, &density, 3).is_err());
        let direct = upper_bound_2(&table, &density, 50).unwrap();
        let tail = XiTail::new(50, P).unwrap();
        assert_eq!(direct, upper_bound_2_with(&table, &density, &tail).unwrap());
        let small = compute_tables(2).unwrap();
        assert!(lower_bound(&small, &density).is_err());
    }

    #[test]
    fn upper_bound_2_examples() {
        let table = compute_tables(10).unwrap();
        let tail = XiTail::new(DEFAULT_K_HAT, P).unwrap();
        let row = |k, f| BoundsRow::compute_with(&table, k, &tail, P, f).unwrap();
        let certified4 = row(4, LowerFactor::Enclosure).upper2;
        assert!((certified4.mid_f64() - 1.43138632).abs() < 1e-8);
        let certified10 = row(10, LowerFactor::Enclosure).upper2;
        assert!(certified10.truncates_to("1.42502734", 8));
        for (k, printed) in [(1, "1.43208050"), (4, "1.43138632"), (10, "1.42502733")] {
            let chained = row(k, LowerFactor::Printed).upper2;
            assert!(chained.truncates_to(printed, 8), "K = {k}");
            let certified = row(k, LowerFactor::Enclosure).upper2;
            assert!(chained.hi() <= certified.lo());
        }
    }

    #[test]
    fn xi_factors_for_large_k() {
        let tail = XiTail::new(DEFAULT_K_HAT, P).unwrap();
        let (x1, x2, x3) = tail.factors(30).unwrap();
        assert!(x1.lt_f64(1.0000008) && x1.gt_f64(1.0));
        assert!(x2.lt_f64(1.0005917) && x2.gt_f64(1.0));
        assert!(x3.lt_f64(1.00049672) && x3.gt_f64(1.0));
        assert!(tail.factors(DEFAULT_K_HAT).is_err());
    }

    #[test]
    fn refinement_stays_inside() {
        let table = compute_tables(6).unwrap();
        let coarse = bounds_table(&table, 6, 200, 128).unwrap();
        let fine = bounds_table(&table, 6, 200, 256).unwrap();
        for (c, f) in coarse.iter().zip(&fine) {
            for (a, b) in [
                (&c.lower, &f.lower),
                (&c.upper1, &f.upper1),
                (&c.upper2, &f.upper2),
                (&c.conj_upper, &f.conj_upper),
                (&c.r_frac, &f.r_frac),
                (&c.multiplier, &f.multiplier),
            ] {
                assert!(a.encloses(b), "K = {}", c.k);
            }
        }
    }

    #[test]
    fn monotone_along_k_and_ordered() {
        let table = compute_tables(10).unwrap();
        let rows = bounds_table(&table, 10, 2_000, P).unwrap();
        for row in &rows {
            assert!(row.lower.hi() <= row.upper2.lo());
            assert!(row.lower.hi() <= row.conj_upper.lo());
            assert!(row.upper2.hi() <= row.upper1.lo() || row.k == 1);
            assert!(row.conj_upper.hi() <= row.upper1.lo() || row.k == 1);
        }
        for w in rows.windows(2) {
            assert!(w[0].lower.hi() <= w[1].lower.lo());
            assert!(w[0].upper1.lo() >= w[1].upper1.hi());
            assert!(w[0].upper2.lo() >= w[1].upper2.lo() || w[0].upper2.overlaps(&w[1].upper2));
            assert!(w[0].conj_upper.lo() >= w[1].conj_upper.hi());
            assert!(w[0].r_frac.lo() > w[1].r_frac.hi());
            assert!(w[0].multiplier.lo() > w[1].multiplier.hi());
        }
    }

    #[test]
    fn csv_and_markdown() {
        let table = compute_tables(2).unwrap();
        let rows = bounds_table(&table, 2, 100, P).unwrap();
        let csv = render_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("1,1.29045464,2.00000001,"));
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].ends_with(",0.63212055,2.00000000"));
        let md = render_markdown(&rows);
        assert_eq!(md.lines().count(), 4);
        assert!(md.lines().nth(2).unwrap().starts_with("| 1 | 1.29045464 |"));
    }

    #[test]
    fn trivial_constants_certify_thresholds() {
        let c = trivial_constants(P);
        assert!(c.two_pow_inv_e.gt_f64(1.29045));
        assert!(c.beta.gt_f64(1.37135));
        assert!(c.alpha.lt_f64(1.89756));
        assert!(near(&c.beta_l, 0.1724, 1e-4));
        assert!(near(&c.beta_c, 0.3591, 1e-4));
        assert!(near(&c.beta_r, 0.4685, 1e-4));
        let total = &(&c.beta_l + &c.beta_c) + &c.beta_r;
        assert!(total.contains(&rug::Float::with_val(P, 1)));
    }

    #[test]
    fn identities_hold() {
        assert!((2..=25).all(identity_check));
    }
}
