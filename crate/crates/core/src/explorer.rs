//! Parameter sweeps over channels and schemes, gated on unit fidelity, with
//! CSV and JSON output.

use std::fmt;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::SchmidtChannel;
use crate::numeric::{lit, log2_3, to_f64, Real};
use crate::resources::{
    blue_curve_channel, lower_bound_sum, resource_report, upper_bound_at_entropy, upper_bound_sum,
};
use crate::scheme::{
    admissible_range, solve_constraints, solve_for_theta2, solve_phases, special_case_params, SchemeError, SchemeParams,
    SpecialCase,
};
use crate::teleport::{run_teleport, InputQubit};

/// Which slice of parameter space a record belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Generic member of a channel's feasible family.
    Region,
    /// θ₂ = π/4 on channels with `a₁ = a₂`.
    Blue,
    /// θ₁ = π/4, θ₂ = 0 on channels with `a₁² = 1/2`.
    Green,
    /// Variant A basis on `a₀ = 0`.
    Degenerate,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Region => "region",
            Family::Blue => "blue",
            Family::Green => "green",
            Family::Degenerate => "degenerate",
        })
    }
}

/// One verified point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord<T> {
    pub a: [T; 3],
    pub theta: [T; 3],
    pub e_channel: T,
    pub e12: T,
    pub h12: T,
    pub sum: T,
    pub bound_lower: T,
    pub bound_upper: Option<T>,
    pub family: Family,
}

pub const SWEEP_HEADER: &str = "a0,a1,a2,theta1,theta2,theta3,e_channel,e12,h12,sum,bound_lower,bound_upper,family";

/// Formats with 17 significant digits.
pub fn format_number<T: Real>(x: T) -> String {
    format!("{:.16e}", to_f64(x))
}

impl<T: Real> SweepRecord<T> {
    pub fn csv_fields(&self) -> Vec<String> {
        let mut fields: Vec<String> = self.a.iter().chain(&self.theta).map(|&x| format_number(x)).collect();
        for x in [self.e_channel, self.e12, self.h12, self.sum, self.bound_lower] {
            fields.push(format_number(x));
        }
        fields.push(self.bound_upper.map(format_number).unwrap_or_default());
        fields.push(self.family.to_string());
        fields
    }
}

/// Records in grid order plus the number of grid points dropped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepOutput<T> {
    pub records: Vec<SweepRecord<T>>,
    pub skipped: usize,
}

impl<T: Real> SweepOutput<T> {
    fn collect(items: Vec<Option<SweepRecord<T>>>) -> Self {
        let skipped = items.iter().filter(|r| r.is_none()).count();
        Self {
            records: items.into_iter().flatten().collect(),
            skipped,
        }
    }

    fn extend(&mut self, other: Self) {
        self.records.extend(other.records);
        self.skipped += other.skipped;
    }

    /// Header, one row per record, then a `#skipped,N` footer.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record(SWEEP_HEADER.split(','))?;
        for r in &self.records {
            out.write_record(r.csv_fields())?;
        }
        out.write_record(["#skipped".to_owned(), self.skipped.to_string()])?;
        out.flush()
    }

    pub fn write_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(io::Error::other)
    }
}

/// Upper bound applies to channels whose largest coefficient is repeated.
fn upper_bound_for<T: Real>(ch: &SchmidtChannel<T>) -> Option<T> {
    let (c, _) = ch.canonicalize();
    let a = c.coefficients();
    let tol = lit::<T>(1e-9);
    if (a[0] - a[1]).abs() <= tol || (a[2] - a[1]).abs() <= tol {
        upper_bound_sum(a[1]).ok()
    } else {
        None
    }
}

/// Fidelity gate: a per-point Haar input must be teleported with fidelity 1 on
/// every branch and the outcome probabilities must sum to 1.
pub fn passes_fidelity_gate<T: Real>(ch: &SchmidtChannel<T>, params: &SchemeParams<T>, seed: u64, index: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let input = InputQubit::<T>::haar_random(&mut rng);
    let tol = lit::<T>(1e-10);
    match run_teleport(&input, ch, params) {
        Ok(r) => {
            let total = r.branches.iter().fold(T::zero(), |acc, b| acc + b.probability);
            r.min_fidelity >= T::one() - tol && (total - T::one()).abs() <= lit(1e-12)
        }
        Err(_) => false,
    }
}

/// Resources and bounds of one scheme, emitted only if the fidelity gate passes.
pub fn evaluate_point<T: Real>(
    ch: &SchmidtChannel<T>,
    params: &SchemeParams<T>,
    family: Family,
    seed: u64,
    index: u64,
) -> Option<SweepRecord<T>> {
    if !passes_fidelity_gate(ch, params, seed, index) {
        return None;
    }
    let report = resource_report(ch, params).ok()?;
    let bound_lower = lower_bound_sum(report.e_channel).ok()?;
    Some(SweepRecord {
        a: ch.coefficients(),
        theta: params.theta,
        e_channel: report.e_channel,
        e12: report.e12,
        h12: report.h12,
        sum: report.sum,
        bound_lower,
        bound_upper: upper_bound_for(ch),
        family,
    })
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * lit::<T>(i as f64) / lit::<T>((n - 1) as f64))
            .collect(),
    }
}

/// `n` schemes spread over the feasible family of one channel, in the family
/// `family`. Channels without a feasible family contribute `n` skipped points.
pub fn sweep_channel<T: Real>(ch: &SchmidtChannel<T>, n: usize, seed: u64, index_base: u64) -> SweepOutput<T> {
    let (canonical, _) = ch.canonicalize();
    let Some(range) = admissible_range(&canonical).filter(|_| ch.is_teleport_capable()) else {
        return SweepOutput {
            records: vec![],
            skipped: n,
        };
    };
    let items = range
        .theta2_grid(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, t2)| {
            let sol = solve_for_theta2(&canonical, t2).ok()?;
            evaluate_point(ch, &sol.params, Family::Region, seed, index_base + i as u64)
        })
        .collect();
    SweepOutput::collect(items)
}

fn sweep_channels<T: Real>(channels: Vec<Option<SchmidtChannel<T>>>, density: usize, seed: u64) -> SweepOutput<T> {
    let parts: Vec<SweepOutput<T>> = channels
        .into_par_iter()
        .enumerate()
        .map(|(i, ch)| match ch {
            Some(ch) => sweep_channel(&ch, density, seed, (i * density) as u64),
            None => SweepOutput {
                records: vec![],
                skipped: density,
            },
        })
        .collect();
    let mut out = SweepOutput {
        records: vec![],
        skipped: 0,
    };
    for p in parts {
        out.extend(p);
    }
    out
}

fn equal_pair_channel<T: Real>(w1: T) -> Option<SchmidtChannel<T>> {
    let w0 = (T::one() - lit::<T>(2.0) * w1).max(T::zero());
    SchmidtChannel::new(w0.sqrt(), w1.sqrt(), w1.sqrt()).ok()
}

fn half_channel<T: Real>(w2: T) -> Option<SchmidtChannel<T>> {
    let half = lit::<T>(0.5);
    let w0 = (half - w2).max(T::zero());
    SchmidtChannel::new(w0.sqrt(), half.sqrt(), w2.sqrt()).ok()
}

/// Channels `a₁ = a₂`, `a₁² ∈ [1/4, 1/2]`, each swept over its family, followed
/// by the θ₂ = π/4 rows with θ₃ ∈ [0, π/4].
pub fn sweep_case1<T: Real>(density: usize, seed: u64) -> SweepOutput<T> {
    let density = density.max(2);
    let channels = linspace(lit::<T>(0.25), lit(0.5), density)
        .into_iter()
        .map(equal_pair_channel)
        .collect();
    let mut out = sweep_channels(channels, density, seed);
    let base = (density * density) as u64;
    let blue = linspace(T::zero(), T::FRAC_PI_4(), density)
        .into_par_iter()
        .enumerate()
        .map(|(i, t3)| {
            let ch = blue_curve_channel(t3);
            let sol = solve_constraints(&ch, t3).ok()?;
            evaluate_point(&ch, &sol.params, Family::Blue, seed, base + i as u64)
        })
        .collect();
    out.extend(SweepOutput::collect(blue));
    out
}

/// Channel `(√(1/2 − a₂²), 1/√2, a₂)` with `a₂² = tan²θ₃ / 2`.
pub fn green_curve_channel<T: Real>(theta3: T) -> Option<SchmidtChannel<T>> {
    let t = theta3.tan();
    half_channel(t * t / lit(2.0))
}

/// θ₁ = π/4, θ₂ = 0 with phases closed for the matching channel.
pub fn green_curve_params<T: Real>(theta3: T) -> Result<(SchmidtChannel<T>, SchemeParams<T>), SchemeError> {
    let ch = green_curve_channel(theta3).ok_or(SchemeError::OutOfRange {
        name: "theta3",
        value: to_f64(theta3),
        lo: (1.0f64 / 3.0).sqrt().asin(),
        hi: std::f64::consts::FRAC_PI_4,
    })?;
    let mut params = SchemeParams::new([T::FRAC_PI_4(), T::zero(), theta3], [T::zero(); 2]);
    params.delta = solve_phases(&ch, &params.rotation())?;
    Ok((ch, params))
}

/// Channels `a₁² = 1/2`, `a₂² ∈ [0, 1/2]`, each swept over its family,
/// followed by the θ₁ = π/4, θ₂ = 0 rows with θ₃ ∈ [arcsin√(1/3), π/4].
pub fn sweep_case2<T: Real>(density: usize, seed: u64) -> SweepOutput<T> {
    let density = density.max(2);
    let channels = linspace(T::zero(), lit(0.5), density).into_iter().map(half_channel).collect();
    let mut out = sweep_channels(channels, density, seed);
    let base = (density * density) as u64;
    let lo = lit::<T>(1.0 / 3.0).sqrt().asin();
    let green = linspace(lo, T::FRAC_PI_4(), density)
        .into_par_iter()
        .enumerate()
        .map(|(i, t3)| {
            let (ch, params) = green_curve_params(t3).ok()?;
            evaluate_point(&ch, &params, Family::Green, seed, base + i as u64)
        })
        .collect();
    out.extend(SweepOutput::collect(green));
    out
}

/// Variant A schemes on `(0, 1/√2, 1/√2)` at the given θ₁ values.
pub fn sweep_degenerate<T: Real>(grid: &[T], seed: u64) -> Result<SweepOutput<T>, SchemeError> {
    let h = T::FRAC_1_SQRT_2();
    let ch = SchmidtChannel::new(T::zero(), h, h).expect("normalized");
    let params = grid
        .iter()
        .map(|&t| special_case_params(SpecialCase::A, t))
        .collect::<Result<Vec<_>, _>>()?;
    let items = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_point(&ch, p, Family::Degenerate, seed, i as u64))
        .collect();
    Ok(SweepOutput::collect(items))
}

/// One row of the bounds table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundRow<T> {
    pub e: T,
    pub lower: T,
    pub upper: Option<T>,
}

pub const BOUNDS_HEADER: &str = "E,lower,upper";

/// Lower and upper bounds at each channel entropy in `[1, log₂3]`; points
/// outside are dropped.
pub fn bounds_table<T: Real>(grid: &[T]) -> Vec<BoundRow<T>> {
    grid.par_iter()
        .filter_map(|&e| {
            let lower = lower_bound_sum(e).ok()?;
            Some(BoundRow {
                e,
                lower,
                upper: upper_bound_at_entropy(e).ok(),
            })
        })
        .collect()
}

/// `n` entropies evenly spaced over `[1, log₂3]`.
pub fn bounds_grid<T: Real>(n: usize) -> Vec<T> {
    linspace(T::one(), log2_3(), n)
}

pub fn write_bounds_csv<T: Real, W: Write>(rows: &[BoundRow<T>], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BOUNDS_HEADER.split(','))?;
    for r in rows {
        out.write_record([
            format_number(r.e),
            format_number(r.lower),
            r.upper.map(format_number).unwrap_or_default(),
        ])?;
    }
    out.flush()
}
