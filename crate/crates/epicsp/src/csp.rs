//! Timescale decomposition of the model dynamics at a single state.
//!
//! The Jacobian's right/left eigenvectors serve as the leading-order mode
//! basis. Each mode carries a timescale tau = 1/|lambda| and a class:
//! explosive (Re lambda > eps), dissipative (Re lambda < -eps) or neutral.
//! Three diagnostic indices quantify how transitions and variables relate
//! to the modes: the amplitude participation index (API), the timescale
//! participation index (TPI) and the pointer.

use nalgebra::{Complex, Matrix6, RowVector6, Vector6, SVD};
use thiserror::Error;

use crate::model::{RateVector, StoichiometricMatrix, N_TRANSITIONS};

pub type C64 = Complex<f64>;

#[derive(Debug, Error)]
pub enum CspError {
    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,
    #[error("eigenbasis is degenerate (condition {condition:.3e}); diagnostics unreliable")]
    Degenerate { condition: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Explosive,
    Dissipative,
    Neutral,
}

impl ModeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeClass::Explosive => "explosive",
            ModeClass::Dissipative => "dissipative",
            ModeClass::Neutral => "neutral",
        }
    }
}

/// Thresholds for the decomposition.
#[derive(Debug, Clone, Copy)]
pub struct CspConfig {
    /// Real-part threshold separating explosive/dissipative from neutral,
    /// 1/day. The default sits far below epidemiologically meaningful
    /// growth rates and only filters roundoff around conserved directions.
    pub eps_expl: f64,
    /// Condition-number threshold of the eigenvector matrix beyond which
    /// the basis is flagged degenerate.
    pub cond_threshold: f64,
}

impl Default for CspConfig {
    fn default() -> Self {
        Self { eps_expl: 1e-10, cond_threshold: 1e10 }
    }
}

/// Eigen-decomposition of a Jacobian with modes ordered by ascending
/// timescale (fastest first). Left vectors are the rows of the inverse of
/// the right-eigenvector matrix, so biorthonormality holds by construction
/// whenever the basis is well conditioned.
#[derive(Debug, Clone)]
pub struct EigenAnalysis {
    eigenvalues: [C64; 6],
    right: Matrix6<C64>,
    left: Matrix6<C64>,
    timescales: [f64; 6],
    classes: [ModeClass; 6],
    pair_partner: [Option<usize>; 6],
    condition: f64,
    degenerate: bool,
}

impl EigenAnalysis {
    pub fn eigenvalues(&self) -> &[C64; 6] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, n: usize) -> C64 {
        self.eigenvalues[n]
    }

    /// Right eigenvector (column basis vector) of mode n.
    pub fn alpha(&self, n: usize) -> Vector6<C64> {
        self.right.column(n).into_owned()
    }

    /// Left eigenvector (row basis vector) of mode n.
    pub fn beta(&self, n: usize) -> RowVector6<C64> {
        self.left.row(n).into_owned()
    }

    pub fn timescales(&self) -> &[f64; 6] {
        &self.timescales
    }

    pub fn timescale(&self, n: usize) -> f64 {
        self.timescales[n]
    }

    pub fn classes(&self) -> &[ModeClass; 6] {
        &self.classes
    }

    pub fn class(&self, n: usize) -> ModeClass {
        self.classes[n]
    }

    /// Conjugate-pair partner of mode n, when its eigenvalue is complex.
    pub fn pair_partner(&self, n: usize) -> Option<usize> {
        self.pair_partner[n]
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Mode indices classified explosive, fastest first.
    pub fn explosive_modes(&self) -> Vec<usize> {
        (0..6).filter(|&n| self.classes[n] == ModeClass::Explosive).collect()
    }

    pub fn fastest_explosive(&self) -> Option<usize> {
        self.explosive_modes().into_iter().next()
    }

    fn ensure_usable(&self) -> Result<(), CspError> {
        if self.degenerate {
            Err(CspError::Degenerate { condition: self.condition })
        } else {
            Ok(())
        }
    }

    /// Apply the scaling freedom alpha -> c alpha, beta -> beta / c with a
    /// real factor per mode. Conjugate pairs share the first member's
    /// factor so conjugacy is preserved. Verification helper: all three
    /// diagnostic indices must be unchanged under this map.
    pub fn rescaled(&self, factors: &[f64; 6]) -> EigenAnalysis {
        let mut out = self.clone();
        let mut applied = [false; 6];
        for n in 0..6 {
            if applied[n] {
                continue;
            }
            let c = factors[n];
            assert!(c != 0.0 && c.is_finite(), "rescale factor must be finite and nonzero");
            let members: Vec<usize> = match self.pair_partner[n] {
                Some(p) => vec![n, p],
                None => vec![n],
            };
            for &m in &members {
                let scaled_col = out.right.column(m) * C64::new(c, 0.0);
                out.right.set_column(m, &scaled_col);
                let scaled_row = out.left.row(m) / C64::new(c, 0.0);
                out.left.set_row(m, &scaled_row);
                applied[m] = true;
            }
        }
        out
    }
}

/// Decompose a Jacobian into eigen-modes.
///
/// Near-defective matrices are not an error: the analysis is returned with
/// the degenerate flag set and downstream diagnostics refuse to fabricate
/// values from it.
pub fn eigen_decompose(j: &Matrix6<f64>, cfg: &CspConfig) -> Result<EigenAnalysis, CspError> {
    if !j.iter().all(|x| x.is_finite()) {
        return Err(CspError::NonFiniteMatrix);
    }

    let eig = j.complex_eigenvalues();
    let mut order: Vec<usize> = (0..6).collect();
    // Ascending timescale = descending |lambda|; conjugate pairs stay
    // adjacent with the +Im member first.
    order.sort_by(|&a, &b| {
        eig[b]
            .norm()
            .total_cmp(&eig[a].norm())
            .then(eig[b].re.total_cmp(&eig[a].re))
            .then(eig[b].im.total_cmp(&eig[a].im))
    });
    let eigenvalues: [C64; 6] = std::array::from_fn(|n| eig[order[n]]);

    let scale = eigenvalues.iter().map(|l| l.norm()).fold(0.0f64, f64::max);
    let cluster_tol = 1e-8 * scale + 1e-300;
    let im_tol = 1e-12 * scale;

    let j_c = j.map(|x| C64::new(x, 0.0));
    let mut vectors: [Option<Vector6<C64>>; 6] = Default::default();
    let mut pair_partner: [Option<usize>; 6] = [None; 6];

    for n in 0..6 {
        if vectors[n].is_some() {
            continue;
        }
        let lam = eigenvalues[n];
        if lam.im < -im_tol {
            // A conjugate fill-in should already have handled this mode;
            // reaching here means its +Im partner was absorbed into a
            // cluster. Fall through and compute it directly.
        }
        // Members of the (numerically) coincident eigenvalue cluster.
        let members: Vec<usize> = (n..6)
            .filter(|&k| vectors[k].is_none() && (eigenvalues[k] - lam).norm() <= cluster_tol)
            .collect();
        let mean = members.iter().map(|&k| eigenvalues[k]).sum::<C64>() / C64::new(members.len() as f64, 0.0);
        let shifted = j_c - Matrix6::identity() * mean;
        let mut svd = SVD::new(shifted, false, true);
        svd.sort_by_singular_values();
        let v_t = svd.v_t.expect("SVD requested with right singular vectors");
        for (slot, &k) in members.iter().enumerate() {
            // Rows of v_t are conjugated right singular vectors; the
            // smallest singular values sit at the bottom after sorting.
            let row = v_t.row(5 - slot);
            let mut v = Vector6::from_fn(|i, _| row[i].conj());
            normalize_phase(&mut v);
            if eigenvalues[k].im.abs() <= im_tol {
                // Real eigenvalue of a real matrix: drop roundoff phase.
                let mut vr = v.map(|x| C64::new(x.re, 0.0));
                let norm = vr.norm();
                if norm > 0.0 {
                    vr /= C64::new(norm, 0.0);
                }
                v = vr;
            }
            vectors[k] = Some(v);
            // Conjugate fill-in for the pair partner.
            if eigenvalues[k].im > im_tol {
                let conj_lam = eigenvalues[k].conj();
                if let Some(p) = (0..6)
                    .find(|&p| vectors[p].is_none() && (eigenvalues[p] - conj_lam).norm() <= im_tol.max(cluster_tol))
                {
                    vectors[p] = Some(vectors[k].as_ref().unwrap().map(|x| x.conj()));
                    pair_partner[k] = Some(p);
                    pair_partner[p] = Some(k);
                }
            }
        }
    }

    let mut right = Matrix6::zeros();
    for n in 0..6 {
        right.set_column(n, vectors[n].as_ref().expect("every mode assigned"));
    }

    let sv = SVD::new(right, false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let (left, degenerate) = match right.try_inverse() {
        Some(inv) if condition <= cfg.cond_threshold => (inv, false),
        Some(inv) => (inv, true),
        None => (Matrix6::zeros(), true),
    };

    let timescales: [f64; 6] = std::array::from_fn(|n| {
        let m = eigenvalues[n].norm();
        if m > 0.0 {
            1.0 / m
        } else {
            f64::INFINITY
        }
    });
    let classes: [ModeClass; 6] = std::array::from_fn(|n| {
        let re = eigenvalues[n].re;
        if re > cfg.eps_expl {
            ModeClass::Explosive
        } else if re < -cfg.eps_expl {
            ModeClass::Dissipative
        } else {
            ModeClass::Neutral
        }
    });

    Ok(EigenAnalysis {
        eigenvalues,
        right,
        left,
        timescales,
        classes,
        pair_partner,
        condition,
        degenerate,
    })
}

fn normalize_phase(v: &mut Vector6<C64>) {
    let mut idx = 0;
    let mut best = 0.0;
    for i in 0..6 {
        let m = v[i].norm();
        if m > best {
            best = m;
            idx = i;
        }
    }
    if best > 0.0 {
        let phase = v[idx] / C64::new(best, 0.0);
        *v /= phase;
    }
}

/// Realified projection of transition k onto mode n: Re(beta^n . S_k) R^k.
/// Conjugate pair members share it exactly.
fn mode_terms(analysis: &EigenAnalysis, rates: &RateVector, stoich: &StoichiometricMatrix) -> [[f64; N_TRANSITIONS]; 6] {
    let mut t = [[0.0; N_TRANSITIONS]; 6];
    for n in 0..6 {
        let beta = analysis.beta(n);
        for k in 0..N_TRANSITIONS {
            let col = stoich.column(k + 1);
            let proj: C64 = (0..6).map(|i| beta[i] * C64::new(col[i], 0.0)).sum();
            t[n][k] = proj.re * rates.0[k];
        }
    }
    t
}

/// Mode amplitudes |f^n| = |beta^n . g| assembled from the per-transition
/// terms, with the basis sign convention (f^n >= 0) applied.
pub fn mode_amplitudes(
    analysis: &EigenAnalysis,
    rates: &RateVector,
    stoich: &StoichiometricMatrix,
) -> Result<[f64; 6], CspError> {
    analysis.ensure_usable()?;
    let t = mode_terms(analysis, rates, stoich);
    Ok(std::array::from_fn(|n| t[n].iter().sum::<f64>().abs()))
}

/// Amplitude participation index. Rows with zero denominator are all-zero
/// and flagged inactive (that is data, not an error).
#[derive(Debug, Clone, PartialEq)]
pub struct Api {
    pub values: [[f64; N_TRANSITIONS]; 6],
    pub inactive: [bool; 6],
}

pub fn compute_api(
    analysis: &EigenAnalysis,
    rates: &RateVector,
    stoich: &StoichiometricMatrix,
) -> Result<Api, CspError> {
    analysis.ensure_usable()?;
    let t = mode_terms(analysis, rates, stoich);
    let mut values = [[0.0; N_TRANSITIONS]; 6];
    let mut inactive = [false; 6];
    for n in 0..6 {
        let den: f64 = t[n].iter().map(|x| x.abs()).sum();
        if den == 0.0 {
            inactive[n] = true;
            continue;
        }
        // Sign convention: flip the basis pair so the amplitude is >= 0.
        let sign = if t[n].iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for k in 0..N_TRANSITIONS {
            values[n][k] = sign * t[n][k] / den;
        }
    }
    Ok(Api { values, inactive })
}

/// Timescale participation index together with the raw per-transition
/// eigenvalue contributions c_k^n (their sum per mode is Re(lambda_n)).
#[derive(Debug, Clone, PartialEq)]
pub struct Tpi {
    pub values: [[f64; N_TRANSITIONS]; 6],
    pub contributions: [[f64; N_TRANSITIONS]; 6],
}

pub fn compute_tpi(
    analysis: &EigenAnalysis,
    transition_terms: &[Matrix6<f64>; N_TRANSITIONS],
) -> Result<Tpi, CspError> {
    analysis.ensure_usable()?;
    let terms_c: Vec<Matrix6<C64>> =
        transition_terms.iter().map(|m| m.map(|x| C64::new(x, 0.0))).collect();
    let mut contributions = [[0.0; N_TRANSITIONS]; 6];
    let mut values = [[0.0; N_TRANSITIONS]; 6];
    for n in 0..6 {
        let alpha = analysis.alpha(n);
        let beta = analysis.beta(n);
        for k in 0..N_TRANSITIONS {
            let c = (beta * (terms_c[k] * alpha))[(0, 0)];
            contributions[n][k] = c.re;
        }
        let den: f64 = contributions[n].iter().map(|x| x.abs()).sum();
        if den > 0.0 {
            for k in 0..N_TRANSITIONS {
                values[n][k] = contributions[n][k] / den;
            }
        }
    }
    Ok(Tpi { values, contributions })
}

/// Pointer: D^m_i = alpha_m[i] beta^m[i], the association of variable i
/// with mode m. Rows sum to one by biorthonormality.
pub fn compute_pointer(analysis: &EigenAnalysis) -> Result<[[f64; 6]; 6], CspError> {
    analysis.ensure_usable()?;
    let mut d = [[0.0; 6]; 6];
    for m in 0..6 {
        let alpha = analysis.alpha(m);
        let beta = analysis.beta(m);
        for i in 0..6 {
            d[m][i] = (alpha[i] * beta[i]).re;
        }
    }
    Ok(d)
}

/// All CSP diagnostics at one state.
#[derive(Debug, Clone)]
pub struct CspDiagnostics {
    pub amplitudes: [f64; 6],
    pub api: Api,
    pub tpi: Tpi,
    pub pointer: [[f64; 6]; 6],
}

impl CspDiagnostics {
    pub fn compute(
        analysis: &EigenAnalysis,
        rates: &RateVector,
        stoich: &StoichiometricMatrix,
        transition_terms: &[Matrix6<f64>; N_TRANSITIONS],
    ) -> Result<Self, CspError> {
        Ok(Self {
            amplitudes: mode_amplitudes(analysis, rates, stoich)?,
            api: compute_api(analysis, rates, stoich)?,
            tpi: compute_tpi(analysis, transition_terms)?,
            pointer: compute_pointer(analysis)?,
        })
    }
}
