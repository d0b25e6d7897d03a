//! Spectral diagnostics: energy levels against the field with finite-difference
//! derivatives, and non-adiabatic transition probabilities over a ramp.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ramp_propagator;
use crate::error::{OttoError, Result};
use crate::model::{field_at, ModelOperators, ModelParams, RampDirection};
use crate::qops::{degenerate_blocks, eigh, CMatrix, Spectrum};
use crate::scalar::Real;

/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Jump in `dE/dB` between adjacent derivative samples above which a level
/// is reported as non-analytic.
pub const KINK_JUMP: f64 = 0.5;

/// Which Hamiltonian to diagonalize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumTarget {
    /// `H_sys(B)` on the working pair (4 levels).
    #[default]
    SystemOnly,
    /// `H_tot(B)` on the register (16 levels).
    Total,
}

/// Location of a derivative discontinuity in one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Kink<R: Real> {
    pub level: usize,
    /// Midpoint of the two derivative samples straddling the jump.
    pub field: R,
    /// `d1` after minus `d1` before.
    pub jump: R,
}

/// Sorted levels on a field grid with central-difference derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SpectrumTable<R: Real> {
    pub target: SpectrumTarget,
    pub field_values: Vec<R>,
    /// `levels[k]` ascending at `field_values[k]`.
    pub levels: Vec<Vec<R>>,
    /// `dE/dB` at `field_values[1..n-1]`.
    pub d1: Vec<Vec<R>>,
    /// `d²E/dB²` at `field_values[2..n-2]`.
    pub d2: Vec<Vec<R>>,
    /// Derivative jumps larger than [`KINK_JUMP`].
    pub kinks: Vec<Kink<R>>,
}

fn central<R: Real>(x: &[R], y: &[Vec<R>]) -> (Vec<R>, Vec<Vec<R>>) {
    let xs = x[1..x.len() - 1].to_vec();
    let ys = (1..x.len() - 1)
        .map(|k| {
            let h = x[k + 1] - x[k - 1];
            y[k + 1]
                .iter()
                .zip(&y[k - 1])
                .map(|(a, b)| (*a - *b) / h)
                .collect()
        })
        .collect();
    (xs, ys)
}

impl<R: Real> SpectrumTable<R> {
    pub fn n_levels(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    /// Fields at which `d1` is sampled.
    pub fn d1_fields(&self) -> &[R] {
        &self.field_values[1..self.field_values.len() - 1]
    }

    /// Fields at which `d2` is sampled.
    pub fn d2_fields(&self) -> &[R] {
        &self.field_values[2..self.field_values.len() - 2]
    }

    /// Level `i` as a curve over the grid.
    pub fn level(&self, i: usize) -> Vec<R> {
        self.levels.iter().map(|l| l[i]).collect()
    }

    /// Smallest `E_j − E_i` over the grid.
    pub fn min_gap(&self, i: usize, j: usize) -> R {
        self.levels
            .iter()
            .map(|l| l[j] - l[i])
            .fold(R::infinity(), R::min)
    }

    /// Derivative jumps larger than `threshold`.
    pub fn kinks_with(&self, threshold: R) -> Vec<Kink<R>> {
        let f = self.d1_fields();
        let mut out = Vec::new();
        for level in 0..self.n_levels() {
            for k in 1..self.d1.len() {
                let jump = self.d1[k][level] - self.d1[k - 1][level];
                if jump.abs() > threshold {
                    out.push(Kink {
                        level,
                        field: (f[k] + f[k - 1]) * R::lit(0.5),
                        jump,
                    });
                }
            }
        }
        out
    }

    /// `B, E0.., dE0/dB.., d2E0/dB2..`; derivative cells are empty where the
    /// stencil does not fit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.n_levels();
        let mut header = vec!["B".to_string()];
        header.extend((0..n).map(|i| format!("E{i}")));
        header.extend((0..n).map(|i| format!("dE{i}/dB")));
        header.extend((0..n).map(|i| format!("d2E{i}/dB2")));
        let mut rows = Vec::with_capacity(self.field_values.len());
        for (k, (b, lv)) in self.field_values.iter().zip(&self.levels).enumerate() {
            let mut row = vec![b.as_f64().to_string()];
            row.extend(lv.iter().map(|e| e.as_f64().to_string()));
            let cells = |d: &[Vec<R>], offset: usize| -> Vec<String> {
                match k.checked_sub(offset).and_then(|i| d.get(i)) {
                    Some(v) => v.iter().map(|x| x.as_f64().to_string()).collect(),
                    None => vec![String::new(); n],
                }
            };
            row.extend(cells(&self.d1, 1));
            row.extend(cells(&self.d2, 2));
            rows.push(row);
        }
        write_rows(out, &header, &rows)
    }
}

fn write_rows<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| OttoError::arg(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| OttoError::arg(e.to_string()))
}

fn hamiltonian<R: Real>(ops: &ModelOperators<R>, b: R, target: SpectrumTarget) -> CMatrix<R> {
    match target {
        SpectrumTarget::SystemOnly => ops.h_sys(b),
        SpectrumTarget::Total => ops.h_tot(b),
    }
}

/// Eigenvalues on `grid` (strictly ascending, at least five points) with
/// first and second central differences.
pub fn spectrum_vs_field<R: Real>(
    params: &ModelParams<R>,
    grid: &[R],
    target: SpectrumTarget,
) -> Result<SpectrumTable<R>> {
    params.validate()?;
    if grid.len() < 5 {
        return Err(OttoError::arg(format!(
            "derivative stencils need at least 5 field values, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|b| !b.is_finite()) {
        return Err(OttoError::arg(
            "field grid must be finite and strictly ascending",
        ));
    }
    let ops = ModelOperators::new(params);
    let levels = grid
        .par_iter()
        .map(|&b| eigh(&hamiltonian(&ops, b, target)).map(|s| s.eigenvalues))
        .collect::<Result<Vec<_>>>()?;
    let (x1, d1) = central(grid, &levels);
    let (_, d2) = central(&x1, &d1);
    let mut table = SpectrumTable {
        target,
        field_values: grid.to_vec(),
        levels,
        d1,
        d2,
        kinks: Vec::new(),
    };
    table.kinks = table.kinks_with(R::lit(KINK_JUMP));
    Ok(table)
}

/// Hellmann–Feynman slopes `⟨ε_k|∂H/∂B|ε_k⟩` of the sorted levels at `b`.
pub fn level_slopes<R: Real>(
    params: &ModelParams<R>,
    b: R,
    target: SpectrumTarget,
) -> Result<Vec<R>> {
    let ops = ModelOperators::new(params);
    let dh = match target {
        SpectrumTarget::SystemOnly => ops.sys_field.clone(),
        SpectrumTarget::Total => ops.tot_field.clone(),
    };
    let spec = eigh(&hamiltonian(&ops, b, target))?;
    Ok((0..spec.dim())
        .map(|k| {
            let v = spec.vector(k);
            let w = dh.apply(&v);
            v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum()
        })
        .collect())
}

/// Which instantaneous levels a transition table reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSelection {
    /// The `k` lowest levels of the register.
    Lowest(usize),
    /// Explicit 0-based level indices.
    Indices(Vec<usize>),
}

impl Default for LevelSelection {
    fn default() -> Self {
        LevelSelection::Lowest(4)
    }
}

impl LevelSelection {
    pub fn resolve(&self, dim: usize) -> Result<Vec<usize>> {
        let idx: Vec<usize> = match self {
            LevelSelection::Lowest(k) => (0..*k).collect(),
            LevelSelection::Indices(v) => v.clone(),
        };
        if idx.is_empty() || idx.iter().any(|&i| i >= dim) {
            return Err(OttoError::arg(format!(
                "level selection must lie in 0..{dim}"
            )));
        }
        Ok(idx)
    }
}

/// Probabilities of ending a ramp in instantaneous level `j` having started
/// in level `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TransitionMatrix<R: Real> {
    pub tau: R,
    pub direction: RampDirection,
    /// Full `16 × 16` matrix, `p[i][j]`; doubly stochastic.
    pub p: Vec<Vec<R>>,
    /// Levels reported by [`TransitionMatrix::selected`].
    pub levels: Vec<usize>,
    /// Steps of the converged propagator.
    pub n_steps: usize,
}

impl<R: Real> TransitionMatrix<R> {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn get(&self, i: usize, j: usize) -> R {
        self.p[i][j]
    }

    pub fn row_sums(&self) -> Vec<R> {
        self.p.iter().map(|r| r.iter().copied().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<R> {
        (0..self.dim())
            .map(|j| self.p.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Sub-matrix on the selected levels.
    pub fn selected(&self) -> Vec<Vec<R>> {
        self.levels
            .iter()
            .map(|&i| self.levels.iter().map(|&j| self.p[i][j]).collect())
            .collect()
    }
}

/// `|⟨ε_j(end)|U|ε_i(start)⟩|²`, averaged over degenerate blocks on either
/// side so that the result does not depend on the choice of basis inside a
/// block.
pub fn transition_matrix<R: Real>(
    u: &CMatrix<R>,
    start: &Spectrum<R>,
    end: &Spectrum<R>,
) -> Vec<Vec<R>> {
    let m = end
        .eigenvectors
        .adjoint()
        .matmul(u)
        .matmul(&start.eigenvectors);
    let n = m.dim();
    let tol = R::tol(DEGENERACY_TOL);
    let from = degenerate_blocks(&start.eigenvalues, tol);
    let to = degenerate_blocks(&end.eigenvalues, tol);
    let mut p = vec![vec![R::zero(); n]; n];
    for bi in &from {
        for bj in &to {
            let mut total = R::zero();
            for i in bi.clone() {
                for j in bj.clone() {
                    total = total + m[(j, i)].norm_sqr();
                }
            }
            let each = total / R::lit((bi.len() * bj.len()) as f64);
            for i in bi.clone() {
                for j in bj.clone() {
                    p[i][j] = each;
                }
            }
        }
    }
    p
}

fn max_diff<R: Real>(a: &[Vec<R>], b: &[Vec<R>]) -> R {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (*x - *y).abs())
        .fold(R::zero(), R::max)
}

/// Transition probabilities over a ramp of duration `tau` on `H_tot`.
///
/// The ramp propagator is refined by step doubling from `params.n_steps`
/// until no probability changes by more than `params.refine_tol`.
pub fn transition_probabilities<R: Real>(
    params: &ModelParams<R>,
    tau: R,
    dir: RampDirection,
    levels: &LevelSelection,
) -> Result<TransitionMatrix<R>> {
    if !(tau > R::zero()) {
        return Err(OttoError::arg("tau must be positive"));
    }
    let mut p = params.clone();
    p.tau = tau;
    p.validate()?;
    let ops = ModelOperators::new(&p);
    let start = eigh(&ops.h_tot(field_at(R::zero(), &p, dir)?))?;
    let end = eigh(&ops.h_tot(field_at(tau, &p, dir)?))?;
    let levels = levels.resolve(start.dim())?;
    let mut n = p.n_steps;
    let mut coarse = transition_matrix(&ramp_propagator(&p, dir, n)?, &start, &end);
    loop {
        if 2 * n > p.max_steps {
            return Err(OttoError::integration(
                "transition",
                format!("probabilities not converged at {n} steps for tau = {tau}"),
            ));
        }
        n *= 2;
        let fine = transition_matrix(&ramp_propagator(&p, dir, n)?, &start, &end);
        if max_diff(&fine, &coarse) <= p.refine_tol {
            return Ok(TransitionMatrix {
                tau,
                direction: dir,
                p: fine,
                levels,
                n_steps: n,
            });
        }
        coarse = fine;
    }
}

/// [`transition_probabilities`] over several ramp durations, in parallel,
/// returned in input order.
pub fn transition_curve<R: Real>(
    params: &ModelParams<R>,
    taus: &[R],
    dir: RampDirection,
    levels: &LevelSelection,
) -> Result<Vec<TransitionMatrix<R>>> {
    taus.par_iter()
        .map(|&tau| transition_probabilities(params, tau, dir, levels))
        .collect()
}

/// `tau, P_i_j, ...` over the selected levels, one row per matrix.
pub fn write_transitions_csv<R: Real, W: Write>(
    mats: &[TransitionMatrix<R>],
    out: W,
) -> Result<()> {
    let levels = mats.first().map(|m| m.levels.clone()).unwrap_or_default();
    if mats.iter().any(|m| m.levels != levels) {
        return Err(OttoError::arg("transition tables select different levels"));
    }
    let mut header = vec!["tau".to_string()];
    for &i in &levels {
        for &j in &levels {
            header.push(format!("P_{i}_{j}"));
        }
    }
    let rows: Vec<Vec<String>> = mats
        .iter()
        .map(|m| {
            let mut row = vec![m.tau.as_f64().to_string()];
            row.extend(
                m.selected()
                    .iter()
                    .flatten()
                    .map(|x| x.as_f64().to_string()),
            );
            row
        })
        .collect();
    write_rows(out, &header, &rows)
}
