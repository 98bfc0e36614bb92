//! Sample handling: validated unit-vector sets, the sufficient statistic
//! `rbar = ||sum x_i|| / n`, the full ML fit (mean direction plus
//! concentration), a vMF sampler for round-trip validation, and CSV/JSON
//! loading.

use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::solver::{solve_fixed_point, EstimationProblem, SolveResult, SolverOptions};

/// Accepted deviation of an input row's Euclidean norm from 1. Wide enough
/// for data serialized at float32 precision, tight enough to reject
/// genuinely non-spherical rows.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// `n` unit vectors in R^p, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    p: usize,
    data: Vec<f64>,
}

impl SampleSet {
    /// Build from rows, validating dimensions and norms. With
    /// `normalize = true` rows are rescaled to unit length instead of
    /// rejected; zero-norm rows are rejected either way. Row indices in
    /// errors are 1-based.
    pub fn from_rows(rows: Vec<Vec<f64>>, normalize: bool) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("sample set must contain at least one row".into()));
        }
        let p = rows[0].len();
        if p < 2 {
            return Err(Error::Domain(format!(
                "samples must have dimension p >= 2, first row has {p} columns"
            )));
        }
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            let idx = i + 1;
            if row.len() != p {
                return Err(Error::Parse {
                    row: idx,
                    message: format!("expected {p} columns, found {}", row.len()),
                });
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    row: idx,
                    message: format!("non-finite component {bad}"),
                });
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if normalize {
                if norm == 0.0 {
                    return Err(Error::Norm { row: idx, norm });
                }
                data.extend(row.iter().map(|v| v / norm));
            } else {
                if (norm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::Norm { row: idx, norm });
                }
                data.extend_from_slice(row);
            }
        }
        Ok(SampleSet { p, data })
    }

    pub fn dimension(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    /// One sample per line, components comma-separated, no header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.17}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Maximum-likelihood fit of a vMF distribution.
#[derive(Debug, Clone)]
pub struct MleFit {
    /// Unit mean direction.
    pub mu_hat: Vec<f64>,
    pub kappa_hat: f64,
    pub rbar: f64,
    pub n: usize,
    /// Convergence evidence from the concentration solve.
    pub solve: SolveResult,
}

/// Mean resultant length and mean direction:
/// `rbar = ||sum x_i|| / n`, `mu_hat = sum x_i / ||sum x_i||`.
///
/// Fails with a degenerate-data error when the resultant is exactly zero
/// (e.g. an antipodal pair), where the mean direction is undefined.
pub fn mean_resultant(s: &SampleSet) -> Result<(f64, Vec<f64>)> {
    let p = s.dimension();
    let mut sum = vec![0.0_f64; p];
    for row in s.rows() {
        for (acc, v) in sum.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::DegenerateData("zero resultant".into()));
    }
    // The triangle inequality caps the exact value at 1; rounding in the
    // accumulation may overshoot by an ulp.
    let rbar = (norm / s.n() as f64).min(1.0);
    let mu_hat: Vec<f64> = sum.iter().map(|v| v / norm).collect();
    Ok((rbar, mu_hat))
}

/// Full ML fit: mean direction from the resultant, concentration from the
/// fixed-point solver at order `nu = p/2` (always >= 1 here, so that path
/// is always legal).
pub fn fit_mle(s: &SampleSet, opts: SolverOptions) -> Result<MleFit> {
    let (rbar, mu_hat) = mean_resultant(s)?;
    if rbar >= 1.0 {
        return Err(Error::SaturatedData(
            "mean resultant length 1: all samples coincide, the ML concentration is unbounded"
                .into(),
        ));
    }
    let prob = EstimationProblem::from_dimension(s.dimension(), rbar)?;
    let solve = solve_fixed_point(prob, opts)?;
    Ok(MleFit {
        mu_hat,
        kappa_hat: solve.kappa_hat,
        rbar,
        n: s.n(),
        solve,
    })
}

/// Draw `n` pseudo-random unit vectors from vMF(mu, kappa) with the
/// tangent-normal decomposition: the cosine `w` of the angle to `mu` comes
/// from Wood's beta-envelope rejection sampler, the tangent direction is
/// uniform on the orthogonal sphere, and a Householder reflection carries
/// the north pole onto `mu`. Deterministic for a given seed.
pub fn sample_vmf(mu: &[f64], kappa: f64, n: usize, seed: u64) -> Result<SampleSet> {
    let p = mu.len();
    if p < 2 {
        return Err(Error::Domain(format!("mean direction must have dimension >= 2, got {p}")));
    }
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "mean direction must be a unit vector (norm within 1e-12 of 1), got norm {norm}"
        )));
    }
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Domain(format!("kappa must be positive and finite, got {kappa}")));
    }
    if n == 0 {
        return Err(Error::Domain("sample count must be at least 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = (p - 1) as f64;
    // Envelope parameters (stable form of b, no cancellation for large kappa).
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(m / 2.0, m / 2.0)
        .map_err(|e| Error::Domain(format!("beta envelope: {e}")))?;

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let w = loop {
            let z: f64 = beta.sample(&mut rng);
            let u: f64 = rng.random();
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        };

        // Uniform direction on the tangent sphere S^{p-2}.
        let mut v = vec![0.0_f64; p - 1];
        if p == 2 {
            v[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        } else {
            loop {
                let mut norm2 = 0.0;
                for vi in v.iter_mut() {
                    *vi = rng.sample(StandardNormal);
                    norm2 += *vi * *vi;
                }
                if norm2 > 1e-290 {
                    let inv = norm2.sqrt().recip();
                    for vi in v.iter_mut() {
                        *vi *= inv;
                    }
                    break;
                }
            }
        }

        // Sample in the frame where mu = e1, then reflect e1 onto mu.
        let sin_part = (1.0 - w * w).max(0.0).sqrt();
        let mut z = Vec::with_capacity(p);
        z.push(w);
        z.extend(v.iter().map(|vi| sin_part * vi));
        rows.push(reflect_e1_to(mu, &z));
    }
    SampleSet::from_rows(rows, false)
}

/// Householder reflection taking `e1` to `mu`, applied to `z`.
fn reflect_e1_to(mu: &[f64], z: &[f64]) -> Vec<f64> {
    let p = mu.len();
    // v = e1 - mu; H = I - 2 v v^T / |v|^2; |v|^2 = 2 (1 - mu[0]).
    let v0 = 1.0 - mu[0];
    if v0 < 1e-14 {
        return z.to_vec();
    }
    let mut v = Vec::with_capacity(p);
    v.push(v0);
    v.extend(mu[1..].iter().map(|m| -m));
    let scale = v.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / (1.0 - mu[0]);
    z.iter().zip(&v).map(|(zi, vi)| zi - scale * vi).collect()
}

/// Input formats accepted by [`load_samples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    /// One sample per line, `p` comma-separated floats, no header unless
    /// `skip_header` is set.
    Csv { skip_header: bool },
    /// A JSON array of arrays of numbers.
    Json,
}

/// Parse samples from a byte stream and validate them into a [`SampleSet`].
pub fn load_samples<R: Read>(source: R, format: SampleFormat, normalize: bool) -> Result<SampleSet> {
    let rows = match format {
        SampleFormat::Csv { skip_header } => parse_csv(source, skip_header)?,
        SampleFormat::Json => serde_json::from_reader::<_, Vec<Vec<f64>>>(source)
            .map_err(|e| Error::Parse { row: 0, message: format!("invalid JSON: {e}") })?,
    };
    SampleSet::from_rows(rows, normalize)
}

fn parse_csv<R: Read>(source: R, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let reader = BufReader::new(source);
    let mut rows = Vec::new();
    let mut data_row = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 && skip_header {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        data_row += 1;
        let row: Vec<f64> = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: data_row,
                    message: format!("not a number: {:?}", field.trim()),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(rows)
}
