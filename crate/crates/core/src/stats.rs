//! Symmetry-count distributions, effect sizes and chi-square goodness of fit.
//!
//! Population moments are exact rationals; sample statistics are `f64`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("population standard deviation is zero")]
    DegeneratePopulation,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("observed value {0} falls in a category with zero expected probability")]
    EmptyCategory(u32),
    #[error("sample support {sample:?} differs from population support {population:?}")]
    SupportMismatch {
        sample: Vec<u32>,
        population: Vec<u32>,
    },
    #[error("goodness of fit needs at least two categories, got {0}")]
    TooFewCategories(usize),
}

/// Number of steps per symmetry count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram(BTreeMap<u32, u64>);

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = u32>>(values: I) -> Self {
        let mut h = Self::new();
        for v in values {
            h.add(v, 1);
        }
        h
    }

    pub fn from_pairs<I: IntoIterator<Item = (u32, u64)>>(pairs: I) -> Self {
        let mut h = Self::new();
        for (c, f) in pairs {
            h.add(c, f);
        }
        h
    }

    pub fn add(&mut self, category: u32, frequency: u64) {
        if frequency > 0 {
            *self.0.entry(category).or_insert(0) += frequency;
        }
    }

    pub fn get(&self, category: u32) -> u64 {
        self.0.get(&category).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn max_category(&self) -> Option<u32> {
        self.0.iter().rev().find(|(_, &f)| f > 0).map(|(&c, _)| c)
    }

    /// Categories with nonzero frequency, ascending.
    pub fn support(&self) -> Vec<u32> {
        self.0.iter().filter(|(_, &f)| f > 0).map(|(&c, _)| c).collect()
    }

    /// Nonzero `(category, frequency)` pairs, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.0.iter().filter(|(_, &f)| f > 0).map(|(&c, &f)| (c, f))
    }

    /// Frequencies for every category `0..=max`, zeros included.
    pub fn dense(&self) -> Vec<u64> {
        match self.max_category() {
            Some(max) => (0..=max).map(|c| self.get(c)).collect(),
            None => Vec::new(),
        }
    }

    /// Exact population moments (divisor = total).
    pub fn moments(&self) -> Moments {
        let total = self.total() as i64;
        if total == 0 {
            return Moments::zero();
        }
        let (s1, s2) = self.iter().fold((0i64, 0i64), |(s1, s2), (c, f)| {
            let (c, f) = (i64::from(c), f as i64);
            (s1 + c * f, s2 + c * c * f)
        });
        let mean = Rational::new(s1, total);
        let variance = Rational::new(s2, total) - mean * mean;
        Moments::from_exact(mean, variance)
    }

    /// Renders as CSV `symmetries,steps` over `0..=max`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symmetries,steps\n");
        for (c, f) in self.dense().into_iter().enumerate() {
            out.push_str(&format!("{c},{f}\n"));
        }
        out
    }
}

impl Serialize for Histogram {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let dense: BTreeMap<String, u64> = self
            .dense()
            .into_iter()
            .enumerate()
            .map(|(c, f)| (c.to_string(), f))
            .collect();
        // keys rendered numerically ordered: 0..=max never exceeds one digit
        // for n = 12, but sort explicitly for wider worlds
        let mut entries: Vec<_> = dense.into_iter().collect();
        entries.sort_by_key(|(k, _)| k.parse::<u32>().unwrap_or(u32::MAX));
        serializer.collect_map(entries)
    }
}

/// Mean and standard deviation with population divisor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: Rational,
    pub variance: Rational,
    pub sd: f64,
}

impl Moments {
    fn zero() -> Self {
        Moments {
            mean: Rational::zero(),
            variance: Rational::zero(),
            sd: 0.0,
        }
    }

    fn from_exact(mean: Rational, variance: Rational) -> Self {
        Moments {
            mean,
            variance,
            sd: ratio_to_f64(variance).sqrt(),
        }
    }

    pub fn mean_f64(&self) -> f64 {
        ratio_to_f64(self.mean)
    }
}

impl Serialize for Moments {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Moments", 4)?;
        s.serialize_field("mean", &self.mean_f64())?;
        s.serialize_field("mean_exact", &self.mean.to_string())?;
        s.serialize_field("variance_exact", &self.variance.to_string())?;
        s.serialize_field("sd", &self.sd)?;
        s.end()
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The reference distribution of symmetry counts in a world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSpec {
    pub histogram: Histogram,
    pub moments: Moments,
    pub support: Vec<u32>,
    #[serde(serialize_with = "serialize_ratios")]
    pub probabilities: Vec<Rational>,
}

fn serialize_ratios<S: serde::Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

impl PopulationSpec {
    pub fn from_histogram(histogram: &Histogram) -> Self {
        let total = histogram.total() as i64;
        let support = histogram.support();
        let probabilities = support
            .iter()
            .map(|&c| Rational::new(histogram.get(c) as i64, total.max(1)))
            .collect();
        PopulationSpec {
            histogram: histogram.clone(),
            moments: histogram.moments(),
            support,
            probabilities,
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean_f64()
    }

    pub fn sd(&self) -> f64 {
        self.moments.sd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdDivisor {
    /// Population divisor `n`.
    #[default]
    N,
    /// Bessel-corrected divisor `n − 1`.
    NMinus1,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub n: usize,
    pub support: Vec<u32>,
    /// Frequencies aligned with `support`.
    pub observed: Vec<u64>,
    /// Values outside the support (unattainable in the population).
    pub overflow: BTreeMap<u32, u64>,
    pub mean: f64,
    pub sd: f64,
    pub divisor: SdDivisor,
}

impl SampleSummary {
    pub fn has_overflow(&self) -> bool {
        !self.overflow.is_empty()
    }
}

pub fn sample_summary(
    counts: &[u32],
    support: &[u32],
    divisor: SdDivisor,
) -> Result<SampleSummary, StatsError> {
    if counts.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let n = counts.len();
    let mut observed = vec![0u64; support.len()];
    let mut overflow = BTreeMap::new();
    for &c in counts {
        match support.iter().position(|&s| s == c) {
            Some(i) => observed[i] += 1,
            None => *overflow.entry(c).or_insert(0) += 1,
        }
    }
    let mean = counts.iter().map(|&c| f64::from(c)).sum::<f64>() / n as f64;
    let ss: f64 = counts.iter().map(|&c| (f64::from(c) - mean).powi(2)).sum();
    let denom = match divisor {
        SdDivisor::N => n as f64,
        SdDivisor::NMinus1 => (n as f64 - 1.0).max(1.0),
    };
    Ok(SampleSummary {
        n,
        support: support.to_vec(),
        observed,
        overflow,
        mean,
        sd: (ss / denom).sqrt(),
        divisor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectSizeResult {
    pub d: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
    pub z: f64,
}

/// Two-sided standard normal quantile `z_{1−α/2}`.
pub fn normal_quantile_two_sided(alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// `d = (x̄ − μ)/σ` with interval `d ± z_{1−α/2}/√n`.
pub fn effect_size_from_moments(
    sample_mean: f64,
    n: usize,
    population_mean: f64,
    population_sd: f64,
    alpha: f64,
) -> Result<EffectSizeResult, StatsError> {
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    if population_sd <= 0.0 {
        return Err(StatsError::DegeneratePopulation);
    }
    let z = normal_quantile_two_sided(alpha)?;
    let d = (sample_mean - population_mean) / population_sd;
    let half_width = z / (n as f64).sqrt();
    Ok(EffectSizeResult {
        d,
        ci_low: d - half_width,
        ci_high: d + half_width,
        alpha,
        z,
    })
}

pub fn effect_size(
    sample: &SampleSummary,
    population: &PopulationSpec,
    alpha: f64,
) -> Result<EffectSizeResult, StatsError> {
    effect_size_from_moments(
        sample.mean,
        sample.n,
        population.mean(),
        population.sd(),
        alpha,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub yates: bool,
    /// Population categories pooled into each tested cell.
    pub categories: Vec<Vec<u32>>,
    pub expected: Vec<f64>,
    pub observed: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GofOptions {
    pub yates: bool,
    /// Pool adjacent categories until every expected count reaches this.
    pub merge_below: Option<f64>,
}

pub fn chi_square_gof(
    sample: &SampleSummary,
    population: &PopulationSpec,
    yates: bool,
) -> Result<ChiSquareResult, StatsError> {
    chi_square_gof_with(
        sample,
        population,
        GofOptions {
            yates,
            merge_below: None,
        },
    )
}

pub fn chi_square_gof_with(
    sample: &SampleSummary,
    population: &PopulationSpec,
    options: GofOptions,
) -> Result<ChiSquareResult, StatsError> {
    if sample.n == 0 {
        return Err(StatsError::EmptySample);
    }
    if let Some((&value, _)) = sample.overflow.iter().next() {
        return Err(StatsError::EmptyCategory(value));
    }
    if sample.support != population.support {
        return Err(StatsError::SupportMismatch {
            sample: sample.support.clone(),
            population: population.support.clone(),
        });
    }
    let n = sample.n as f64;
    let mut cells: Vec<(Vec<u32>, f64, u64)> = population
        .support
        .iter()
        .zip(&population.probabilities)
        .zip(&sample.observed)
        .map(|((&c, &p), &o)| (vec![c], n * ratio_to_f64(p), o))
        .collect();
    if let Some(min) = options.merge_below {
        cells = merge_cells(cells, min);
    }
    if cells.len() < 2 {
        return Err(StatsError::TooFewCategories(cells.len()));
    }
    let statistic = cells
        .iter()
        .map(|(_, e, o)| {
            let dev = (*o as f64 - e).abs();
            let dev = if options.yates { (dev - 0.5).max(0.0) } else { dev };
            dev * dev / e
        })
        .sum::<f64>();
    let df = cells.len() - 1;
    let (categories, rest): (Vec<_>, Vec<_>) = cells.into_iter().map(|(c, e, o)| (c, (e, o))).unzip();
    let (expected, observed) = rest.into_iter().unzip();
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df as u32),
        yates: options.yates,
        categories,
        expected,
        observed,
    })
}

fn merge_cells(cells: Vec<(Vec<u32>, f64, u64)>, min: f64) -> Vec<(Vec<u32>, f64, u64)> {
    let mut out: Vec<(Vec<u32>, f64, u64)> = Vec::new();
    let mut pending: Option<(Vec<u32>, f64, u64)> = None;
    for (cats, e, o) in cells {
        let cell = match pending.take() {
            Some((mut pc, pe, po)) => {
                pc.extend(cats);
                (pc, pe + e, po + o)
            }
            None => (cats, e, o),
        };
        if cell.1 >= min {
            out.push(cell);
        } else {
            pending = Some(cell);
        }
    }
    if let Some((cats, e, o)) = pending {
        match out.last_mut() {
            Some(last) => {
                last.0.extend(cats);
                last.1 += e;
                last.2 += o;
            }
            None => out.push((cats, e, o)),
        }
    }
    out
}

/// Upper tail `P(X ≥ x)` of the chi-square distribution with `df` degrees
/// of freedom, i.e. `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    assert!(df >= 1, "chi-square needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(f64::from(df) / 2.0, x / 2.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 1000;

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x)/Γ(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "shape must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * prefactor(a, x)
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    prefactor(a, x) * h
}
