//! Logical-error-rate sweeps over a depolarizing noise grid.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use symdec_codes::{CheckMatrix, PauliVector, Syndrome};

use crate::decoder::TransformerDecoder;
use crate::error::{check_len, CoreError, Result};
use crate::noise::NoiseModel;
use crate::seeding::{derived_rng, stream};

/// Threshold applied to decoder outputs before adjudication.
pub const DECISION_THRESHOLD: f64 = 0.5;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    LogicalFailure,
}

/// Thresholds `predicted` and checks whether the residual lies in the
/// stabilizer group. An unresolved syndrome counts as a failure.
pub fn adjudicate(code: &CheckMatrix, true_e: &PauliVector, predicted: &[f64]) -> Result<Outcome> {
    check_len(2 * code.n(), predicted.len())?;
    check_len(code.n(), true_e.n())?;
    let bits: Vec<u8> = predicted.iter().map(|&v| u8::from(v > DECISION_THRESHOLD)).collect();
    let correction = PauliVector::from_bits(&bits)?;
    let residual = true_e.mul(&correction)?;
    Ok(if code.is_in_stabilizer_group(&residual)? {
        Outcome::Success
    } else {
        Outcome::LogicalFailure
    })
}

/// Anything mapping syndromes to per-bit correction scores in `[0, 1]`.
pub trait SyndromeDecoder: Sync {
    fn id(&self) -> String;
    fn n(&self) -> usize;
    /// Row-major `syndromes.len() × 2n` predictions.
    fn decode_many(&self, syndromes: &[Syndrome]) -> Result<Vec<f64>>;
}

/// Applies no correction.
#[derive(Clone, Debug)]
pub struct ZeroDecoder {
    pub n: usize,
}

impl SyndromeDecoder for ZeroDecoder {
    fn id(&self) -> String {
        "zero".into()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn decode_many(&self, syndromes: &[Syndrome]) -> Result<Vec<f64>> {
        Ok(vec![0.0; syndromes.len() * 2 * self.n])
    }
}

/// A Transformer decoder with a display name for sweep outputs.
pub struct NamedTransformer<'a> {
    pub name: String,
    pub model: &'a TransformerDecoder,
}

impl SyndromeDecoder for NamedTransformer<'_> {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn n(&self) -> usize {
        self.model.n()
    }

    fn decode_many(&self, syndromes: &[Syndrome]) -> Result<Vec<f64>> {
        let m = self.model.seq_len();
        let mut x = Vec::with_capacity(syndromes.len() * m);
        for s in syndromes {
            check_len(m, s.len())?;
            x.extend((0..m).map(|i| if s.get(i) { 1.0f32 } else { 0.0 }));
        }
        if x.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.model.decode_batch(&x)?.into_iter().map(f64::from).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub decoder_id: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = failures as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if failures == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if failures == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Ten points 0.005, 0.010, …, 0.050.
pub fn desk_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 * 0.005).collect()
}

/// 491 points 0.001, 0.0011, …, 0.05.
pub fn full_grid() -> Vec<f64> {
    (10..=500).map(|k| k as f64 * 1e-4).collect()
}

/// The error drawn for trial `t` at grid index `pi`; shared by every
/// decoder swept with the same seed.
pub fn trial_error(n: usize, noise: &NoiseModel, seed: u64, pi: usize, t: u64) -> PauliVector {
    noise.sample_error(n, &mut derived_rng(seed, &[stream::SWEEP, pi as u64, t]))
}

const SWEEP_CHUNK: u64 = 1000;

/// Sweeps every decoder over the same error sample.
pub fn sweep_paired(
    code: &CheckMatrix,
    decoders: &[&dyn SyndromeDecoder],
    grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepResult>> {
    if trials == 0 {
        return Err(CoreError::Config("trials must be at least 1".into()));
    }
    for d in decoders {
        check_len(code.n(), d.n())?;
    }
    let n = code.n();
    let mut failures = vec![vec![0u64; grid.len()]; decoders.len()];
    for (pi, &p) in grid.iter().enumerate() {
        let noise = NoiseModel::new(p)?;
        let mut start = 0;
        while start < trials {
            let end = (start + SWEEP_CHUNK).min(trials);
            let errors: Vec<PauliVector> = (start..end)
                .into_par_iter()
                .map(|t| trial_error(n, &noise, seed, pi, t))
                .collect();
            let syndromes = errors.iter().map(|e| code.syndrome(e)).collect::<std::result::Result<Vec<_>, _>>()?;
            for (di, d) in decoders.iter().enumerate() {
                let pred = d.decode_many(&syndromes)?;
                check_len(errors.len() * 2 * n, pred.len())?;
                let fails = errors
                    .par_iter()
                    .zip(pred.par_chunks(2 * n))
                    .map(|(e, row)| adjudicate(code, e, row).map(|o| u64::from(o == Outcome::LogicalFailure)))
                    .collect::<Result<Vec<u64>>>()?;
                failures[di][pi] += fails.iter().sum::<u64>();
            }
            start = end;
        }
    }
    Ok(decoders
        .iter()
        .zip(failures)
        .map(|(d, fails)| SweepResult {
            decoder_id: d.id(),
            seed,
            points: grid
                .iter()
                .zip(fails)
                .map(|(&p, f)| {
                    let (ci_low, ci_high) = wilson_interval(f, trials);
                    SweepPoint { p, trials, failures: f, rate: f as f64 / trials as f64, ci_low, ci_high }
                })
                .collect(),
        })
        .collect())
}

pub fn sweep(code: &CheckMatrix, decoder: &dyn SyndromeDecoder, grid: &[f64], trials: u64, seed: u64) -> Result<SweepResult> {
    Ok(sweep_paired(code, &[decoder], grid, trials, seed)?.remove(0))
}

pub const SWEEP_CSV_HEADER: &str = "p,trials,failures,rate,ci_low,ci_high,decoder_id,seed";

/// Several sweeps in one CSV, one row per (decoder, p).
pub fn sweeps_to_csv(results: &[SweepResult]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in results {
        for pt in &r.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                pt.p, pt.trials, pt.failures, pt.rate, pt.ci_low, pt.ci_high, r.decoder_id, r.seed
            );
        }
    }
    out
}

/// Per-p difference `rate(b) − rate(a)` of two paired sweeps.
pub fn difference_csv(a: &SweepResult, b: &SweepResult) -> Result<String> {
    check_len(a.points.len(), b.points.len())?;
    let mut out = String::from("p,rate_a,rate_b,difference,decoder_a,decoder_b,seed\n");
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if pa.p != pb.p {
            return Err(CoreError::Config("paired sweeps use different grids".into()));
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            pa.p,
            pa.rate,
            pb.rate,
            pb.rate - pa.rate,
            a.decoder_id,
            b.decoder_id,
            a.seed
        );
    }
    Ok(out)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn svg_frame(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, SVG_W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, SVG_W / 2.0, SVG_H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{y_label}</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    );
    s
}

fn x_range(points: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = points.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p), b.max(p)));
    if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn map(v: f64, (lo, hi): (f64, f64), out_lo: f64, out_hi: f64) -> f64 {
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Logical error rate against p on a log-y axis. Zero rates are drawn at the
/// floor of the axis.
pub fn sweeps_to_svg(results: &[SweepResult], title: &str) -> String {
    let mut s = svg_frame(title, "physical error rate p", "logical error rate");
    let xs = x_range(results.iter().flat_map(|r| r.points.iter().map(|p| p.p)));
    let positive: Vec<f64> = results.iter().flat_map(|r| r.points.iter().map(|p| p.rate)).filter(|&r| r > 0.0).collect();
    let lo = positive.iter().cloned().fold(1.0, f64::min).log10().floor();
    let hi = positive.iter().cloned().fold(1e-300, f64::max).log10().ceil().max(lo + 1.0);
    let ys = (lo, hi);
    for k in lo as i32..=hi as i32 {
        let y = map(k as f64, ys, SVG_H - MARGIN, MARGIN);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{k}</text>"#, MARGIN - 5.0, y + 4.0);
    }
    for (i, r) in results.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = r
            .points
            .iter()
            .map(|p| {
                let ly = if p.rate > 0.0 { p.rate.log10().max(lo) } else { lo };
                format!(
                    "{:.2},{:.2}",
                    map(p.p, xs, MARGIN, SVG_W - MARGIN),
                    map(ly, ys, SVG_H - MARGIN, MARGIN)
                )
            })
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 * (i + 1) as f64,
            r.decoder_id
        );
    }
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">{}</text>"#, SVG_H - MARGIN + 15.0, xs.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, SVG_W - MARGIN, SVG_H - MARGIN + 15.0, xs.1);
    s.push_str("</svg>\n");
    s
}

/// Mean over repetitions of `rate(after) − rate(before)` with a shaded ±1σ
/// band. Each pair must come from the same seed.
pub fn difference_svg(pairs: &[(SweepResult, SweepResult)], title: &str) -> Result<String> {
    if pairs.is_empty() {
        return Err(CoreError::Config("no sweep pairs to plot".into()));
    }
    let grid: Vec<f64> = pairs[0].0.points.iter().map(|p| p.p).collect();
    let mut mean = vec![0.0; grid.len()];
    let mut sq = vec![0.0; grid.len()];
    for (a, b) in pairs {
        check_len(grid.len(), a.points.len())?;
        check_len(grid.len(), b.points.len())?;
        for (k, (pa, pb)) in a.points.iter().zip(&b.points).enumerate() {
            let d = pb.rate - pa.rate;
            mean[k] += d;
            sq[k] += d * d;
        }
    }
    let r = pairs.len() as f64;
    let sd: Vec<f64> = mean.iter().zip(&sq).map(|(m, s)| (s / r - (m / r).powi(2)).max(0.0).sqrt()).collect();
    let mean: Vec<f64> = mean.iter().map(|m| m / r).collect();
    let ext = mean.iter().zip(&sd).map(|(m, s)| m.abs() + s).fold(1e-6, f64::max);
    let xs = x_range(grid.iter().cloned());
    let ys = (-ext, ext);
    let mut s = svg_frame(title, "physical error rate p", "change in logical error rate");
    let px = |p: f64| map(p, xs, MARGIN, SVG_W - MARGIN);
    let py = |v: f64| map(v, ys, SVG_H - MARGIN, MARGIN);
    let upper = grid.iter().zip(mean.iter().zip(&sd)).map(|(&p, (m, d))| format!("{:.2},{:.2}", px(p), py(m + d)));
    let lower = grid.iter().zip(mean.iter().zip(&sd)).rev().map(|(&p, (m, d))| format!("{:.2},{:.2}", px(p), py(m - d)));
    let band: Vec<String> = upper.chain(lower).collect();
    let _ = writeln!(s, r##"<polygon fill="#1f77b4" fill-opacity="0.25" stroke="none" points="{}"/>"##, band.join(" "));
    let line: Vec<String> = grid.iter().zip(&mean).map(|(&p, m)| format!("{:.2},{:.2}", px(p), py(*m))).collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##, line.join(" "));
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        py(0.0),
        SVG_W - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{ext:.2e}</text>"#, MARGIN - 5.0, MARGIN + 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.2e}</text>"#, MARGIN - 5.0, SVG_H - MARGIN + 4.0, -ext);
    s.push_str("</svg>\n");
    Ok(s)
}
