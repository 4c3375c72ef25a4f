//! Arrival as the fixed point of an ℓ1-contraction.
//!
//! Token mass `x_v ≥ 0` sitting on vertex `v` is split into `h0(x_v)` along
//! the even edge and `h1(x_v)` along the odd edge; [`one_step_update`] moves
//! all mass one step. Fixing terminals at their initial tokens gives the
//! projected map `g` on `V∖T`, and scaling by `λ < 1` makes it a contraction
//! whose unique fixed point determines the arrivals.
//!
//! On each unit interval `h0` and `h1` are affine, one of them constant:
//!
//! | `x` in          | `h0(x)` | `h1(x)`     |
//! |-----------------|---------|-------------|
//! | `[2k, 2k+1]`    | `x - k` | `k`         |
//! | `[2k+1, 2k+2]`  | `k + 1` | `x - k - 1` |
//!
//! Everything is exact. Rational iteration can pick up a factor of `λ`'s
//! denominator per step, so when denominators get too large
//! [`fixed_point_iterate`] switches to a dyadic grid and certifies the final
//! residual with exact rationals instead.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::flow::{check_flow, ArrivalVector, SwitchingFlow};
use crate::instance::{Instance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractionError {
    #[error("negative mass {0}")]
    Negative(BigRational),
    #[error("mass vector keyed on the wrong vertex set")]
    KeyMismatch,
    #[error("lambda must lie in [0, 1), got {0}")]
    LambdaOutOfRange(BigRational),
    #[error("delta must lie in (0, 1), got {0}")]
    DeltaOutOfRange(BigRational),
    #[error("eps must be positive, got {0}")]
    EpsOutOfRange(BigRational),
    #[error("iteration cap {0} exceeded")]
    IterationCap(u64),
    #[error("grid arithmetic overflowed at {0} bits")]
    GridOverflow(u32),
    #[error("accuracy insufficient at {vertex}: distance {distance} to nearest integer, margin {margin}")]
    AccuracyInsufficient {
        vertex: String,
        distance: BigRational,
        margin: BigRational,
    },
    #[error("error margin {0} is not below 1/2")]
    MarginTooLarge(BigRational),
    #[error("extracted arrivals sum to {got}, expected {expected}")]
    SumMismatch { got: BigUint, expected: BigUint },
    #[error("fixed point search failed: {0}")]
    Internal(String),
}

type Result<T> = std::result::Result<T, ContractionError>;

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn from_big(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

fn check_nonnegative(x: &BigRational) -> Result<()> {
    if x.is_negative() {
        Err(ContractionError::Negative(x.clone()))
    } else {
        Ok(())
    }
}

/// `min{x − ⌊x/2⌋, ⌈x/2⌉}`: the share sent along the even edge.
pub fn h0(x: &BigRational) -> Result<BigRational> {
    check_nonnegative(x)?;
    let half = x / rat(2);
    Ok((x - half.floor()).min(half.ceil()))
}

/// `max{⌊x/2⌋, x − ⌈x/2⌉}`: the share sent along the odd edge.
pub fn h1(x: &BigRational) -> Result<BigRational> {
    check_nonnegative(x)?;
    let half = x / rat(2);
    Ok(half.floor().max(x - half.ceil()))
}

/// Piecewise form of `(h0, h1)` for `x ≥ 0`.
fn split_mass(x: &BigRational) -> (BigRational, BigRational) {
    let m = x.floor().to_integer();
    let (k, r) = m.div_rem(&BigInt::from(2));
    let k = BigRational::from_integer(k);
    if r.is_zero() {
        (x - &k, k)
    } else {
        let k1 = k + rat(1);
        (k1.clone(), x - k1)
    }
}

/// Nonnegative exact token mass on a declared vertex subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassVector {
    domain: Vec<VertexId>,
    values: Vec<BigRational>,
}

impl MassVector {
    pub fn new(domain: Vec<VertexId>, values: Vec<BigRational>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(ContractionError::KeyMismatch);
        }
        values.iter().try_for_each(check_nonnegative)?;
        Ok(MassVector { domain, values })
    }

    pub fn zeros(domain: Vec<VertexId>) -> Self {
        let values = vec![BigRational::zero(); domain.len()];
        MassVector { domain, values }
    }

    pub fn constant(domain: Vec<VertexId>, c: BigRational) -> Result<Self> {
        let values = vec![c; domain.len()];
        MassVector::new(domain, values)
    }

    pub fn domain(&self) -> &[VertexId] {
        &self.domain
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn get(&self, v: VertexId) -> Option<&BigRational> {
        self.domain.iter().position(|&u| u == v).map(|i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &BigRational)> {
        self.domain.iter().copied().zip(&self.values)
    }

    pub fn l1_norm(&self) -> BigRational {
        self.values.iter().sum()
    }

    pub fn l1_distance(&self, other: &MassVector) -> Result<BigRational> {
        if self.domain != other.domain {
            return Err(ContractionError::KeyMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Coordinate-wise `≤` on a common domain.
    pub fn le(&self, other: &MassVector) -> bool {
        self.domain == other.domain && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|v| v.is_integer())
    }

    pub fn scale(&self, c: &BigRational) -> Result<MassVector> {
        MassVector::new(self.domain.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// `{"<vertex>": "p/q"}`.
    pub fn to_json_value(&self, instance: &Instance) -> Value {
        let mut map = Map::new();
        for (v, x) in self.iter() {
            map.insert(instance.name(v).to_string(), Value::String(ratio_string(x)));
        }
        Value::Object(map)
    }
}

/// `p/q` in lowest terms, `q` always present.
pub fn ratio_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn full_domain(instance: &Instance) -> Vec<VertexId> {
    (0..instance.n()).collect()
}

fn free_domain(instance: &Instance) -> Vec<VertexId> {
    instance.non_terminals().collect()
}

/// `f(x)_v = Σ_{s0(u)=v} h0(x_u) + Σ_{s1(u)=v} h1(x_u)` on all of `V`.
pub fn one_step_update(instance: &Instance, x: &MassVector) -> Result<MassVector> {
    if x.domain != full_domain(instance) {
        return Err(ContractionError::KeyMismatch);
    }
    Ok(MassVector {
        domain: x.domain.clone(),
        values: apply_f(instance, &x.values)?,
    })
}

fn apply_f(instance: &Instance, x: &[BigRational]) -> Result<Vec<BigRational>> {
    let mut out = vec![BigRational::zero(); instance.n()];
    for (u, xu) in x.iter().enumerate() {
        check_nonnegative(xu)?;
        let (even, odd) = split_mass(xu);
        out[instance.s0()[u]] += even;
        out[instance.s1()[u]] += odd;
    }
    Ok(out)
}

/// `x'`: `x` on `V∖T`, `t⁺_v` on terminals.
fn extend(instance: &Instance, x: &MassVector) -> Result<Vec<BigRational>> {
    if x.domain != free_domain(instance) {
        return Err(ContractionError::KeyMismatch);
    }
    let mut full: Vec<BigRational> = instance.token_vector().iter().map(from_big).collect();
    for (v, xv) in x.iter() {
        full[v] = xv.clone();
    }
    Ok(full)
}

fn restrict(domain: &[VertexId], full: &[BigRational]) -> MassVector {
    MassVector {
        domain: domain.to_vec(),
        values: domain.iter().map(|&v| full[v].clone()).collect(),
    }
}

/// `g(x) = f(x')` restricted to `V∖T`.
pub fn projected_update(instance: &Instance, x: &MassVector) -> Result<MassVector> {
    let image = apply_f(instance, &extend(instance, x)?)?;
    Ok(restrict(&x.domain, &image))
}

/// `λ·g` on `V∖T`.
#[derive(Clone, Debug)]
pub struct DiscountedUpdate<'a> {
    instance: &'a Instance,
    lambda: BigRational,
}

impl<'a> DiscountedUpdate<'a> {
    pub fn new(instance: &'a Instance, lambda: BigRational) -> Result<Self> {
        if lambda.is_negative() || lambda >= rat(1) {
            return Err(ContractionError::LambdaOutOfRange(lambda));
        }
        Ok(DiscountedUpdate { instance, lambda })
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }

    pub fn domain(&self) -> Vec<VertexId> {
        free_domain(self.instance)
    }

    pub fn apply(&self, x: &MassVector) -> Result<MassVector> {
        discounted_update(self, x)
    }

    /// `δ` for which this `λ` equals `1 − δ/(t⁺(1 + n·2ⁿ))`.
    pub fn effective_delta(&self) -> BigRational {
        (rat(1) - &self.lambda) * from_big(&lambda_scale(self.instance))
    }
}

pub fn discounted_update(u: &DiscountedUpdate, x: &MassVector) -> Result<MassVector> {
    projected_update(u.instance, x)?.scale(&u.lambda)
}

/// `t⁺(1 + n·2ⁿ)`.
fn lambda_scale(instance: &Instance) -> BigUint {
    let n = instance.n();
    instance.total_tokens() * ((BigUint::from(n) << n) + 1u32)
}

/// `1 − δ/(t⁺(1 + n·2ⁿ))`.
pub fn default_lambda(instance: &Instance, delta: &BigRational) -> Result<BigRational> {
    if !delta.is_positive() || delta >= &rat(1) {
        return Err(ContractionError::DeltaOutOfRange(delta.clone()));
    }
    Ok(rat(1) - delta / from_big(&lambda_scale(instance)))
}

/// `(1 − λ)/8`.
pub fn default_eps(lambda: &BigRational) -> BigRational {
    (rat(1) - lambda) / rat(8)
}

/// Denominator size at which [`Precision::Auto`] gives up on exact iteration.
pub const EXACT_DENOMINATOR_BITS: u64 = 1 << 10;

/// Arithmetic used by [`fixed_point_iterate_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    /// Exact rationals throughout.
    Exact,
    /// Floor-rounded multiples of `2^-bits` in 128-bit integers.
    Grid { bits: u32 },
    /// Exact while denominators stay below [`EXACT_DENOMINATOR_BITS`], then
    /// a grid with enough bits for the target accuracy if one fits 128 bits.
    #[default]
    Auto,
}

#[derive(Clone, Debug)]
pub struct IterateResult {
    pub x: MassVector,
    /// Number of map evaluations, including the one certifying the stop.
    pub iterations: u64,
    /// Exact `‖g^λ(x) − x‖₁`.
    pub residual: BigRational,
    /// Grid resolution used, if any.
    pub bits: Option<u32>,
}

/// Banach iteration from `x0` until `‖g^λ(x) − x‖₁ ≤ eps`.
pub fn fixed_point_iterate(
    u: &DiscountedUpdate,
    x0: &MassVector,
    eps: &BigRational,
) -> Result<IterateResult> {
    fixed_point_iterate_with(u, x0, eps, Precision::Auto)
}

pub fn fixed_point_iterate_with(
    u: &DiscountedUpdate,
    x0: &MassVector,
    eps: &BigRational,
    precision: Precision,
) -> Result<IterateResult> {
    if !eps.is_positive() {
        return Err(ContractionError::EpsOutOfRange(eps.clone()));
    }
    let first = u.apply(x0)?;
    let res0 = first.l1_distance(x0)?;
    if &res0 <= eps {
        return Ok(IterateResult {
            x: x0.clone(),
            iterations: 1,
            residual: res0,
            bits: None,
        });
    }
    let cap = iteration_cap(&u.lambda, &res0, eps);
    let bits = match precision {
        Precision::Exact => None,
        Precision::Grid { bits } => Some(bits),
        Precision::Auto => {
            if let Some(done) = exact_iterate(u, first.clone(), eps, cap, Some(EXACT_DENOMINATOR_BITS))? {
                return Ok(done);
            }
            GridMap::auto_bits(u, x0, eps)
        }
    };
    let Some(bits) = bits else {
        return exact_iterate(u, first, eps, cap, None).map(|r| r.expect("no bit limit"));
    };
    let grid = GridMap::new(u, bits)?;
    let (x, iterations) = grid.iterate(x0, eps, cap)?;
    let residual = u.apply(&x)?.l1_distance(&x)?;
    if &residual > eps {
        return Err(ContractionError::Internal(format!(
            "grid residual {} exceeds eps",
            ratio_string(&residual)
        )));
    }
    Ok(IterateResult {
        x,
        iterations,
        residual,
        bits: Some(bits),
    })
}

/// `⌈ln(res0/eps)/ln(1/λ)⌉ + ⌈ln 4/ln(1/λ)⌉ + 16`, saturating.
fn iteration_cap(lambda: &BigRational, res0: &BigRational, eps: &BigRational) -> u64 {
    let gap = (rat(1) - lambda).to_f64().unwrap_or(1.0);
    let rate = -(-gap).ln_1p();
    if rate <= 0.0 || !rate.is_finite() {
        return u64::MAX;
    }
    let ratio = (res0 / eps).to_f64().unwrap_or(f64::MAX).max(1.0);
    let steps = (ratio.ln() / rate).ceil() + (4f64.ln() / rate).ceil() + 16.0;
    if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps as u64
    }
}

/// Exact iteration; `None` once a denominator exceeds `bit_limit`.
fn exact_iterate(
    u: &DiscountedUpdate,
    first: MassVector,
    eps: &BigRational,
    cap: u64,
    bit_limit: Option<u64>,
) -> Result<Option<IterateResult>> {
    let mut x = first;
    let mut iterations = 1u64;
    loop {
        let next = u.apply(&x)?;
        iterations += 1;
        let residual = next.l1_distance(&x)?;
        if &residual <= eps {
            return Ok(Some(IterateResult {
                x,
                iterations,
                residual,
                bits: None,
            }));
        }
        if iterations >= cap {
            return Err(ContractionError::IterationCap(cap));
        }
        if let Some(limit) = bit_limit {
            if next.values.iter().any(|v| v.denom().bits() > limit) {
                return Ok(None);
            }
        }
        x = next;
    }
}

/// `g^λ` on the grid `2^-bits·ℕ`, rounding each coordinate down. The
/// rounded map is still monotone, so the orbit of `0` increases and stays
/// below the true fixed point.
struct GridMap {
    bits: u32,
    p: u128,
    q: u128,
    /// Terminal contributions per free vertex, already in grid units.
    constant: Vec<u128>,
    /// Local successor of each free vertex, `None` for a terminal.
    succ: Vec<[Option<usize>; 2]>,
    domain: Vec<VertexId>,
}

impl GridMap {
    /// Smallest `B` with `d·2^-B ≤ eps(1−λ)/4` if the iteration's sums fit
    /// 128 bits at that resolution.
    fn auto_bits(u: &DiscountedUpdate, x0: &MassVector, eps: &BigRational) -> Option<u32> {
        let d = x0.domain.len().max(1);
        let target = eps * (rat(1) - &u.lambda) / rat(4 * d as i64);
        let mut bits = 1u32;
        while rat(1) / BigRational::from_integer(BigInt::one() << bits) > target {
            bits += 1;
            if bits > 120 {
                return None;
            }
        }
        // Iterates never exceed max(‖x0‖₁, d·t⁺·2ⁿ); sums add t⁺.
        let inst = u.instance;
        let cap = from_big(&(inst.total_tokens() << inst.n())) * rat(d as i64);
        let mass = x0.l1_norm().max(cap) + from_big(inst.total_tokens()) + rat(1);
        let mass = mass.ceil().to_integer();
        let limit = (mass << bits) * u.lambda.numer().max(u.lambda.denom());
        (limit.bits() < 127).then_some(bits)
    }

    fn new(u: &DiscountedUpdate, bits: u32) -> Result<Self> {
        let overflow = || ContractionError::GridOverflow(bits);
        let inst = u.instance;
        let domain = free_domain(inst);
        let mut local = vec![None; inst.n()];
        for (i, &v) in domain.iter().enumerate() {
            local[v] = Some(i);
        }
        let mut constant = vec![0u128; domain.len()];
        for t in inst.terminals() {
            let m = inst.tokens(t);
            let halves = [m - (m >> 1u32), m >> 1u32];
            for (half, target) in halves.iter().zip([inst.s0()[t], inst.s1()[t]]) {
                if let Some(i) = local[target] {
                    let h = half.to_u128().ok_or_else(overflow)?;
                    constant[i] = constant[i].checked_add(h).ok_or_else(overflow)?;
                }
            }
        }
        for c in &mut constant {
            *c = c.checked_mul(1u128 << bits).ok_or_else(overflow)?;
        }
        let succ = domain
            .iter()
            .map(|&v| [local[inst.s0()[v]], local[inst.s1()[v]]])
            .collect();
        Ok(GridMap {
            bits,
            p: u.lambda.numer().to_u128().ok_or_else(overflow)?,
            q: u.lambda.denom().to_u128().ok_or_else(overflow)?,
            constant,
            succ,
            domain,
        })
    }

    fn step(&self, x: &[u128], out: &mut [u128]) -> Result<()> {
        let overflow = || ContractionError::GridOverflow(self.bits);
        out.copy_from_slice(&self.constant);
        for (i, &xi) in x.iter().enumerate() {
            let m = xi >> self.bits;
            let (even, odd) = if m.is_multiple_of(2) {
                let k = (m / 2) << self.bits;
                (xi - k, k)
            } else {
                let k1 = (m / 2 + 1) << self.bits;
                (k1, xi - k1)
            };
            for (share, target) in [(even, self.succ[i][0]), (odd, self.succ[i][1])] {
                if let Some(j) = target {
                    out[j] = out[j].checked_add(share).ok_or_else(overflow)?;
                }
            }
        }
        for s in out.iter_mut() {
            *s = s.checked_mul(self.p).ok_or_else(overflow)? / self.q;
        }
        Ok(())
    }

    fn to_grid(&self, x: &MassVector) -> Result<Vec<u128>> {
        x.values
            .iter()
            .map(|v| {
                ((v.numer() << self.bits) / v.denom())
                    .to_u128()
                    .ok_or(ContractionError::GridOverflow(self.bits))
            })
            .collect()
    }

    fn to_masses(&self, x: &[u128]) -> MassVector {
        let scale = BigInt::one() << self.bits;
        MassVector {
            domain: self.domain.clone(),
            values: x
                .iter()
                .map(|&v| BigRational::new(BigInt::from(v), scale.clone()))
                .collect(),
        }
    }

    /// Iterates until the grid step plus the worst-case rounding loss is at
    /// most `eps`, which bounds the true residual at the returned point.
    fn iterate(&self, x0: &MassVector, eps: &BigRational, cap: u64) -> Result<(MassVector, u64)> {
        let d = self.domain.len() as u128;
        let threshold = (eps * BigRational::from_integer(BigInt::one() << self.bits))
            .floor()
            .to_integer();
        let threshold = threshold.to_u128().unwrap_or(u128::MAX);
        let mut x = self.to_grid(x0)?;
        let mut next = vec![0u128; x.len()];
        let mut iterations = 0u64;
        loop {
            self.step(&x, &mut next)?;
            iterations += 1;
            let diff: u128 = x.iter().zip(&next).map(|(a, b)| a.abs_diff(*b)).sum();
            if diff.saturating_add(d) <= threshold {
                return Ok((self.to_masses(&x), iterations));
            }
            if iterations >= cap {
                return Err(ContractionError::IterationCap(cap));
            }
            std::mem::swap(&mut x, &mut next);
        }
    }
}

/// Undiscounted terminal inflows `f(x')_v`, `v ∈ T`, rounded to the nearest
/// integer. Refuses when a value is not within `eps/(1−λ) + δ` of an integer,
/// with `δ` the effective slack of `λ`.
pub fn extract_arrivals(
    instance: &Instance,
    u: &DiscountedUpdate,
    x: &MassVector,
    eps: &BigRational,
) -> Result<ArrivalVector> {
    let gap = rat(1) - &u.lambda;
    let margin = eps / &gap + u.effective_delta();
    if margin >= BigRational::new(BigInt::one(), BigInt::from(2)) {
        return Err(ContractionError::MarginTooLarge(margin));
    }
    let image = apply_f(instance, &extend(instance, x)?)?;
    let mut entries = Vec::new();
    for t in instance.terminals() {
        let value = &image[t];
        let nearest = value.round();
        let distance = (value - &nearest).abs();
        if distance >= margin {
            return Err(ContractionError::AccuracyInsufficient {
                vertex: instance.name(t).to_string(),
                distance,
                margin,
            });
        }
        let count = nearest
            .to_integer()
            .to_biguint()
            .ok_or_else(|| ContractionError::Internal("negative inflow".into()))?;
        entries.push((t, count));
    }
    let arrivals = ArrivalVector::new(entries);
    if &arrivals.total() != instance.total_tokens() {
        return Err(ContractionError::SumMismatch {
            got: arrivals.total(),
            expected: instance.total_tokens().clone(),
        });
    }
    Ok(arrivals)
}

/// `x ↦ min(g^λ(x·M)/M, 1)` with `M = t⁺·2ⁿ`, a self-map of the unit box.
pub fn capped_scaled_update<'a>(
    instance: &'a Instance,
    lambda: BigRational,
) -> Result<impl Fn(&MassVector) -> Result<MassVector> + 'a> {
    let u = DiscountedUpdate::new(instance, lambda)?;
    let m = from_big(&(instance.total_tokens() << instance.n()));
    Ok(move |x: &MassVector| {
        let image = u.apply(&x.scale(&m)?)?;
        let values = image.values.iter().map(|v| (v / &m).min(rat(1))).collect();
        MassVector::new(image.domain, values)
    })
}

/// Edge values `(h0(x'_u), h1(x'_u))` of the flow induced by `x` on `V∖T`.
pub fn induced_flow(
    instance: &Instance,
    x: &MassVector,
) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    Ok(extend(instance, x)?.iter().map(split_mass).unzip())
}

/// The induced flow as an integral switching flow, if every edge value is an
/// integer and the flow passes verification.
pub fn integral_flow(instance: &Instance, x: &MassVector) -> Result<Option<SwitchingFlow>> {
    let (even, odd) = induced_flow(instance, x)?;
    let to_int = |v: &BigRational| v.is_integer().then(|| v.to_integer().to_biguint()).flatten();
    let (Some(even), Some(odd)) = (
        even.iter().map(to_int).collect::<Option<Vec<_>>>(),
        odd.iter().map(to_int).collect::<Option<Vec<_>>>(),
    ) else {
        return Ok(None);
    };
    let flow = SwitchingFlow::from_vecs(even, odd);
    let report = check_flow(
        instance.s0(),
        instance.s1(),
        instance.terminal_mask(),
        instance.token_vector(),
        &flow,
    );
    Ok(report.valid().then_some(flow))
}

/// A directed cycle of non-terminals along edges with fractional induced
/// value, as a vertex sequence starting at its smallest member.
pub fn find_fractional_cycle(instance: &Instance, x: &MassVector) -> Result<Option<Vec<VertexId>>> {
    let (even, odd) = induced_flow(instance, x)?;
    let n = instance.n();
    let next: Vec<Vec<VertexId>> = (0..n)
        .map(|u| {
            if instance.is_terminal(u) {
                return Vec::new();
            }
            [(&even[u], instance.s0()[u]), (&odd[u], instance.s1()[u])]
                .into_iter()
                .filter(|(val, w)| !val.is_integer() && !instance.is_terminal(*w))
                .map(|(_, w)| w)
                .collect()
        })
        .collect();
    // Iterative DFS with colours; a grey successor closes a cycle.
    let mut colour = vec![0u8; n];
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(VertexId, usize)> = vec![(root, 0)];
        colour[root] = 1;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if let Some(&w) = next[v].get(*i) {
                *i += 1;
                match colour[w] {
                    0 => {
                        colour[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => {
                        let start = stack.iter().position(|&(u, _)| u == w).expect("grey is on stack");
                        let mut cycle: Vec<VertexId> = stack[start..].iter().map(|&(u, _)| u).collect();
                        let min = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
                        cycle.rotate_left(min);
                        return Ok(Some(cycle));
                    }
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    Ok(None)
}

/// `Σ_{v∈T} λ·f(x')_v`, the discounted terminal inflow at `x`.
pub fn discounted_terminal_inflow(u: &DiscountedUpdate, x: &MassVector) -> Result<BigRational> {
    let image = apply_f(u.instance, &extend(u.instance, x)?)?;
    Ok(u.instance.terminals().map(|t| &image[t] * &u.lambda).sum())
}

/// The exact fixed point of `g^λ`.
///
/// `g^λ` is affine on every box `m + [0,1]^d`, `m` integral. A grid iterate
/// brackets the fixed point within `1/16` in ℓ1; each box meeting the
/// bracket is solved as a linear system and accepted only if its solution
/// lies in the box, which proves it is the fixed point. Falls back to
/// [`fixed_point_by_path`] if no box can be bracketed.
pub fn exact_fixed_point(u: &DiscountedUpdate) -> Result<MassVector> {
    let domain = u.domain();
    if domain.is_empty() {
        return Ok(MassVector::zeros(domain));
    }
    let zero = MassVector::zeros(domain.clone());
    let eps = (rat(1) - &u.lambda) / rat(16);
    if let Some(bits) = GridMap::auto_bits(u, &zero, &eps) {
        let grid = GridMap::new(u, bits)?;
        let first = u.apply(&zero)?;
        let cap = iteration_cap(&u.lambda, &first.l1_distance(&zero)?.max(eps.clone()), &eps);
        let (low, _) = grid.iterate(&zero, &eps, cap)?;
        let reach = rat(1) / rat(16);
        let choices: Vec<Vec<BigInt>> = low
            .values
            .iter()
            .map(|x| {
                let lo = x.floor().to_integer();
                let hi = (x + &reach).floor().to_integer();
                if hi > lo {
                    vec![lo, hi]
                } else {
                    vec![lo]
                }
            })
            .collect();
        let count: usize = choices.iter().map(Vec::len).product();
        if count <= 1 << 12 {
            for pick in 0..count {
                let mut rest = pick;
                let floors: Vec<BigInt> = choices
                    .iter()
                    .map(|c| {
                        let m = c[rest % c.len()].clone();
                        rest /= c.len();
                        m
                    })
                    .collect();
                let p = solve_box(u, &domain, &floors)?;
                if in_box(&p, &floors) {
                    return certify(u, p);
                }
            }
        }
    }
    fixed_point_by_path(u)
}

/// Monotone path following from `0`: solve the affine map of the current box,
/// walk toward its fixed point until a coordinate reaches the box's upper
/// face, and repeat. Every visited point `x` satisfies `x ≤ g^λ(x)`, so the
/// walk never decreases a coordinate and ends at the fixed point.
pub fn fixed_point_by_path(u: &DiscountedUpdate) -> Result<MassVector> {
    let domain = u.domain();
    let mut x = vec![BigRational::zero(); domain.len()];
    loop {
        let floors: Vec<BigInt> = x.iter().map(|v| v.floor().to_integer()).collect();
        let p = solve_box(u, &domain, &floors)?;
        if in_box(&p, &floors) {
            return certify(u, p);
        }
        let mut step: Option<BigRational> = None;
        for ((pv, xv), m) in p.iter().zip(&x).zip(&floors) {
            if pv < xv {
                return Err(ContractionError::Internal("path moved downward".into()));
            }
            let top = BigRational::from_integer(m + 1);
            if pv > &top {
                let s = (&top - xv) / (pv - xv);
                step = Some(match step {
                    Some(t) if t <= s => t,
                    _ => s,
                });
            }
        }
        let s = step.ok_or_else(|| ContractionError::Internal("no exit face".into()))?;
        x = x
            .iter()
            .zip(&p)
            .map(|(xv, pv)| xv + (pv - xv) * &s)
            .collect();
    }
}

fn in_box(p: &[BigRational], floors: &[BigInt]) -> bool {
    p.iter().zip(floors).all(|(v, m)| {
        let m = BigRational::from_integer(m.clone());
        v >= &m && v <= &(m + rat(1))
    })
}

fn certify(u: &DiscountedUpdate, p: Vec<BigRational>) -> Result<MassVector> {
    let x = MassVector::new(u.domain(), p)?;
    if u.apply(&x)? != x {
        return Err(ContractionError::Internal("box solution is not a fixed point".into()));
    }
    Ok(x)
}

/// Solves `p = λ(A p + b)` for the affine form of `g` on the box `floors + [0,1]^d`.
fn solve_box(u: &DiscountedUpdate, domain: &[VertexId], floors: &[BigInt]) -> Result<Vec<BigRational>> {
    let inst = u.instance;
    let d = domain.len();
    let mut local = vec![None; inst.n()];
    for (i, &v) in domain.iter().enumerate() {
        local[v] = Some(i);
    }
    let mut a = vec![vec![BigRational::zero(); d]; d];
    let mut b = vec![BigRational::zero(); d];
    for t in inst.terminals() {
        let m = inst.tokens(t);
        for (half, target) in [(m - (m >> 1u32), inst.s0()[t]), (m >> 1u32, inst.s1()[t])] {
            if let Some(i) = local[target] {
                b[i] += from_big(&half);
            }
        }
    }
    for (j, &v) in domain.iter().enumerate() {
        let (k, r) = floors[j].div_rem(&BigInt::from(2));
        let k = BigRational::from_integer(k);
        // (slope edge, its constant, constant edge, its value)
        let (slope_to, slope_c, const_to, const_v) = if r.is_zero() {
            (inst.s0()[v], -k.clone(), inst.s1()[v], k)
        } else {
            let k1 = k + rat(1);
            (inst.s1()[v], -k1.clone(), inst.s0()[v], k1)
        };
        if let Some(i) = local[slope_to] {
            a[i][j] += rat(1);
            b[i] += slope_c;
        }
        if let Some(i) = local[const_to] {
            b[i] += const_v;
        }
    }
    // (I − λA) p = λ b
    let mut rows: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..d)
                .map(|j| {
                    let id = if i == j { rat(1) } else { rat(0) };
                    id - &u.lambda * &a[i][j]
                })
                .collect();
            row.push(&u.lambda * &b[i]);
            row
        })
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .find(|&r| !rows[r][col].is_zero())
            .ok_or_else(|| ContractionError::Internal("singular box system".into()))?;
        rows.swap(col, pivot);
        let head = rows[col][col].clone();
        for v in rows[col].iter_mut() {
            *v /= &head;
        }
        for r in 0..d {
            if r != col && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..=d {
                    let delta = &factor * &rows[col][c];
                    rows[r][c] -= delta;
                }
            }
        }
    }
    Ok(rows.into_iter().map(|mut row| row.pop().expect("augmented")).collect())
}

/// Tunables of [`solve_contraction`]. `lambda` overrides the value derived
/// from `delta`; `eps` defaults to `(1−λ)/8`.
#[derive(Clone, Debug)]
pub struct ContractionOptions {
    pub delta: BigRational,
    pub lambda: Option<BigRational>,
    pub eps: Option<BigRational>,
    pub precision: Precision,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        ContractionOptions {
            delta: BigRational::new(BigInt::one(), BigInt::from(4)),
            lambda: None,
            eps: None,
            precision: Precision::Auto,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContractionOutcome {
    pub arrivals: ArrivalVector,
    pub lambda: BigRational,
    pub delta: BigRational,
    pub eps: BigRational,
    pub iterations: u64,
    pub fixed_point: MassVector,
    /// Present only when the approximate fixed point induces a valid integral
    /// switching flow.
    pub flow: Option<SwitchingFlow>,
}

/// Iterates `g^λ` from `0` and extracts the arrivals.
pub fn solve_contraction(instance: &Instance, options: &ContractionOptions) -> Result<ContractionOutcome> {
    let lambda = match &options.lambda {
        Some(l) => l.clone(),
        None => default_lambda(instance, &options.delta)?,
    };
    let u = DiscountedUpdate::new(instance, lambda.clone())?;
    let delta = if options.lambda.is_some() {
        u.effective_delta()
    } else {
        options.delta.clone()
    };
    let eps = options.eps.clone().unwrap_or_else(|| default_eps(&lambda));
    let x0 = MassVector::zeros(u.domain());
    let result = fixed_point_iterate_with(&u, &x0, &eps, options.precision)?;
    let arrivals = extract_arrivals(instance, &u, &result.x, &eps)?;
    let flow = integral_flow(instance, &result.x)?;
    Ok(ContractionOutcome {
        arrivals,
        lambda,
        delta,
        eps,
        iterations: result.iterations,
        fixed_point: result.x,
        flow,
    })
}
