//! SEInsRD compartmental model: state, parameters, transition rates,
//! stoichiometry, vector field and analytic Jacobian.
//!
//! Compartments: susceptible (SP), exposed (EP), infected normally
//! symptomatic (INSP), infected severely symptomatic (ISSP), recovered (RP)
//! and deceased (IDP). Ten transition paths R1..R10 connect them; the
//! transmission terms use the frequency-dependent form (beta / TP).

use nalgebra::{Matrix6, RowVector6, SMatrix, Vector6};
use thiserror::Error;

/// Number of compartments.
pub const N_STATE: usize = 6;
/// Number of transition paths.
pub const N_TRANSITIONS: usize = 10;

/// Time derivative of the six compartments, persons/day.
pub type StateDerivative = Vector6<f64>;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("non-finite state component {component} = {value}")]
    NonFiniteState { component: &'static str, value: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Compartment populations in persons. Real-valued: the model is an ODE
/// system, not an agent count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub sp: f64,
    pub ep: f64,
    pub insp: f64,
    pub issp: f64,
    pub rp: f64,
    pub idp: f64,
}

pub const COMPARTMENT_NAMES: [&str; N_STATE] = ["sp", "ep", "insp", "issp", "rp", "idp"];

impl StateVector {
    pub fn zero() -> Self {
        Self { sp: 0.0, ep: 0.0, insp: 0.0, issp: 0.0, rp: 0.0, idp: 0.0 }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(self.sp, self.ep, self.insp, self.issp, self.rp, self.idp)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self { sp: v[0], ep: v[1], insp: v[2], issp: v[3], rp: v[4], idp: v[5] }
    }

    pub fn total(&self) -> f64 {
        self.sp + self.ep + self.insp + self.issp + self.rp + self.idp
    }

    /// Active cases: INSP + ISSP.
    pub fn active(&self) -> f64 {
        self.insp + self.issp
    }

    pub fn check_finite(&self) -> Result<(), ModelError> {
        let v = self.as_vector();
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(ModelError::NonFiniteState { component: COMPARTMENT_NAMES[i], value: x });
            }
        }
        Ok(())
    }
}

/// The nine model constants.
///
/// `aincp` and `aip` are the incubation and infectious periods in days
/// (sigma = 1/aincp, gamma = 1/aip). `ss` is the fraction of newly
/// infectious individuals that develop severe symptoms. `tp` is the total
/// population; the transmission ratios are divided by it (frequency
/// dependent form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Transmission ratio of normally infected, 1/day.
    pub beta_insp: f64,
    /// Transmission ratio of severely infected, 1/day.
    pub beta_issp: f64,
    /// Incubation period, days.
    pub aincp: f64,
    /// Infectious period, days.
    pub aip: f64,
    /// Fatality ratio of normally infected, 1/day.
    pub mu_insp: f64,
    /// Fatality ratio of severely infected, 1/day.
    pub mu_issp: f64,
    /// Physiological death ratio, 1/day.
    pub mu_tp: f64,
    /// Severe fraction, dimensionless in [0, 1].
    pub ss: f64,
    /// Total population, persons.
    pub tp: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("beta_insp", self.beta_insp),
            ("beta_issp", self.beta_issp),
            ("aincp", self.aincp),
            ("aip", self.aip),
            ("mu_insp", self.mu_insp),
            ("mu_issp", self.mu_issp),
            ("mu_tp", self.mu_tp),
            ("ss", self.ss),
            ("tp", self.tp),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} is not finite ({v})")));
            }
            if v < 0.0 {
                return Err(ModelError::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.ss > 1.0 {
            return Err(ModelError::InvalidParams(format!("ss must be <= 1, got {}", self.ss)));
        }
        if self.aincp <= 0.0 || self.aip <= 0.0 || self.tp <= 0.0 {
            return Err(ModelError::InvalidParams(
                "aincp, aip and tp must be strictly positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// The ten transition rates, persons/day. Non-negative for non-negative
/// states and valid parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateVector(pub [f64; N_TRANSITIONS]);

impl RateVector {
    /// Rate of path k, 1-based (R1..R10).
    pub fn rate(&self, k: usize) -> f64 {
        self.0[k - 1]
    }
}

/// Constant stoichiometric matrix of the ten transitions.
///
/// Column k holds the population changes of transition k+1. Columns 1 and 2
/// move one person SP -> EP, columns 4, 6, 7, 8, 9 are internal transfers,
/// and columns 3, 5, 10 remove one person (physiological death). Column 4
/// splits the newly infectious by the severe fraction, so its INSP/ISSP
/// entries are 1-ss and ss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoichiometricMatrix {
    m: SMatrix<f64, 6, 10>,
}

impl StoichiometricMatrix {
    pub fn new(ss: f64) -> Self {
        let mut m = SMatrix::<f64, 6, 10>::zeros();
        let cols: [[f64; 6]; 10] = [
            [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0],      // R1: SP -> EP (via INSP contact)
            [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0],      // R2: SP -> EP (via ISSP contact)
            [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0],      // R3: SP death
            [0.0, -1.0, 1.0 - ss, ss, 0.0, 0.0],  // R4: EP -> INSP/ISSP
            [0.0, -1.0, 0.0, 0.0, 0.0, 0.0],      // R5: EP death
            [0.0, 0.0, -1.0, 0.0, 1.0, 0.0],      // R6: INSP -> RP
            [0.0, 0.0, 0.0, -1.0, 1.0, 0.0],      // R7: ISSP -> RP
            [0.0, 0.0, -1.0, 0.0, 0.0, 1.0],      // R8: INSP -> IDP
            [0.0, 0.0, 0.0, -1.0, 0.0, 1.0],      // R9: ISSP -> IDP
            [0.0, 0.0, 0.0, 0.0, -1.0, 0.0],      // R10: RP death
        ];
        for (k, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, k)] = v;
            }
        }
        Self { m }
    }

    pub fn matrix(&self) -> &SMatrix<f64, 6, 10> {
        &self.m
    }

    /// Stoichiometric vector of path k, 1-based.
    pub fn column(&self, k: usize) -> Vector6<f64> {
        self.m.column(k - 1).into_owned()
    }
}

fn validate_inputs(state: &StateVector, params: &ModelParams) -> Result<(), ModelError> {
    state.check_finite()?;
    params.validate()
}

pub(crate) fn rates_unchecked(state: &StateVector, params: &ModelParams) -> RateVector {
    let p = params;
    let s = state;
    RateVector([
        p.beta_insp / p.tp * s.insp * s.sp,
        p.beta_issp / p.tp * s.issp * s.sp,
        p.mu_tp * s.sp,
        s.ep / p.aincp,
        p.mu_tp * s.ep,
        s.insp / p.aip,
        s.issp / p.aip,
        p.mu_insp * s.insp,
        p.mu_issp * s.issp,
        p.mu_tp * s.rp,
    ])
}

/// Evaluate the ten transition rates R1..R10 at a state.
pub fn compute_rates(state: &StateVector, params: &ModelParams) -> Result<RateVector, ModelError> {
    validate_inputs(state, params)?;
    Ok(rates_unchecked(state, params))
}

pub(crate) fn vector_field_unchecked(state: &StateVector, params: &ModelParams) -> StateDerivative {
    let stoich = StoichiometricMatrix::new(params.ss);
    let rates = rates_unchecked(state, params);
    stoich.m * SMatrix::<f64, 10, 1>::from_column_slice(&rates.0)
}

/// Right-hand side of the SEInsRD ODE system: g(y) = S * R(y).
pub fn vector_field(state: &StateVector, params: &ModelParams) -> Result<StateDerivative, ModelError> {
    validate_inputs(state, params)?;
    Ok(vector_field_unchecked(state, params))
}

/// Gradient rows of the ten rates with respect to the state.
pub fn rate_gradients(state: &StateVector, params: &ModelParams) -> Result<[RowVector6<f64>; 10], ModelError> {
    validate_inputs(state, params)?;
    Ok(rate_gradients_unchecked(state, params))
}

pub(crate) fn rate_gradients_unchecked(state: &StateVector, params: &ModelParams) -> [RowVector6<f64>; 10] {
    let p = params;
    let s = state;
    let bn = p.beta_insp / p.tp;
    let bs = p.beta_issp / p.tp;
    [
        RowVector6::new(bn * s.insp, 0.0, bn * s.sp, 0.0, 0.0, 0.0),
        RowVector6::new(bs * s.issp, 0.0, 0.0, bs * s.sp, 0.0, 0.0),
        RowVector6::new(p.mu_tp, 0.0, 0.0, 0.0, 0.0, 0.0),
        RowVector6::new(0.0, 1.0 / p.aincp, 0.0, 0.0, 0.0, 0.0),
        RowVector6::new(0.0, p.mu_tp, 0.0, 0.0, 0.0, 0.0),
        RowVector6::new(0.0, 0.0, 1.0 / p.aip, 0.0, 0.0, 0.0),
        RowVector6::new(0.0, 0.0, 0.0, 1.0 / p.aip, 0.0, 0.0),
        RowVector6::new(0.0, 0.0, p.mu_insp, 0.0, 0.0, 0.0),
        RowVector6::new(0.0, 0.0, 0.0, p.mu_issp, 0.0, 0.0),
        RowVector6::new(0.0, 0.0, 0.0, 0.0, p.mu_tp, 0.0),
    ]
}

/// Per-transition Jacobian terms grad(S_k R^k), one 6x6 matrix per path.
///
/// Their sum is the full Jacobian; the timescale participation index needs
/// them individually.
pub fn transition_jacobian_terms(
    state: &StateVector,
    params: &ModelParams,
) -> Result<[Matrix6<f64>; 10], ModelError> {
    validate_inputs(state, params)?;
    let stoich = StoichiometricMatrix::new(params.ss);
    let grads = rate_gradients_unchecked(state, params);
    let mut terms = [Matrix6::zeros(); 10];
    for k in 0..N_TRANSITIONS {
        terms[k] = stoich.column(k + 1) * grads[k];
    }
    Ok(terms)
}

/// Analytic Jacobian of the vector field, 1/day.
pub fn jacobian(state: &StateVector, params: &ModelParams) -> Result<Matrix6<f64>, ModelError> {
    validate_inputs(state, params)?;
    Ok(jacobian_unchecked(state, params))
}

pub(crate) fn jacobian_unchecked(state: &StateVector, params: &ModelParams) -> Matrix6<f64> {
    let stoich = StoichiometricMatrix::new(params.ss);
    let grads = rate_gradients_unchecked(state, params);
    let mut j = Matrix6::zeros();
    for k in 0..N_TRANSITIONS {
        j += stoich.column(k + 1) * grads[k];
    }
    j
}

/// Residual of the total-population balance: summing the six equations
/// gives d(total)/dt = -mu_tp (SP + EP + RP). Returns the absolute
/// deviation |sum(derivative) + mu_tp (sp + ep + rp)|.
pub fn equilibration_residual(
    state: &StateVector,
    derivative: &StateDerivative,
    params: &ModelParams,
) -> Result<f64, ModelError> {
    validate_inputs(state, params)?;
    let sum: f64 = derivative.iter().sum();
    Ok((sum + params.mu_tp * (state.sp + state.ep + state.rp)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params_basic() -> ModelParams {
        ModelParams {
            beta_insp: 0.5,
            beta_issp: 0.4,
            aincp: 5.1,
            aip: 14.0,
            mu_insp: 1e-4,
            mu_issp: 3e-3,
            mu_tp: 3.5e-5,
            ss: 0.1,
            tp: 1e7,
        }
    }

    #[test]
    fn all_zero_state_gives_zero_rates() {
        let r = compute_rates(&StateVector::zero(), &params_basic()).unwrap();
        assert!(r.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn disease_free_no_mortality_gives_zero_rates() {
        let p = ModelParams { mu_tp: 0.0, ..params_basic() };
        let state = StateVector { sp: p.tp, ..StateVector::zero() };
        let r = compute_rates(&state, &p).unwrap();
        assert!(r.0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hand_computed_transmission_rate() {
        // sp=1000, insp=10, beta_insp=0.5/day, tp=10000: R1 = 0.5 persons/day.
        let p = ModelParams {
            beta_insp: 0.5,
            beta_issp: 0.0,
            aincp: 5.0,
            aip: 10.0,
            mu_insp: 0.0,
            mu_issp: 0.0,
            mu_tp: 0.0,
            ss: 0.0,
            tp: 1e4,
        };
        let state = StateVector { sp: 1000.0, insp: 10.0, ..StateVector::zero() };
        let r = compute_rates(&state, &p).unwrap();
        assert_relative_eq!(r.rate(1), 0.5, max_relative = 1e-14);
        for k in 2..=10 {
            if k == 6 {
                continue; // insp/aip = 1.0 is active for this state
            }
            assert_eq!(r.rate(k), 0.0, "R{k}");
        }
        assert_relative_eq!(r.rate(6), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let state = StateVector { sp: f64::NAN, ..StateVector::zero() };
        assert!(compute_rates(&state, &params_basic()).is_err());
        let bad = ModelParams { beta_insp: f64::INFINITY, ..params_basic() };
        assert!(compute_rates(&StateVector::zero(), &bad).is_err());
        assert!(jacobian(&state, &params_basic()).is_err());
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ModelParams { ss: 1.5, ..params_basic() }.validate().is_err());
        assert!(ModelParams { aincp: 0.0, ..params_basic() }.validate().is_err());
        assert!(ModelParams { tp: -1.0, ..params_basic() }.validate().is_err());
    }

    #[test]
    fn disease_free_equilibrium_has_zero_derivative() {
        let p = ModelParams { mu_tp: 0.0, ..params_basic() };
        let state = StateVector { sp: p.tp, ..StateVector::zero() };
        let g = vector_field(&state, &p).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    /// Independent assembly oracle: the six right-hand sides written out
    /// longhand, straight from the model equations.
    fn vector_field_longhand(s: &StateVector, p: &ModelParams) -> [f64; 6] {
        let r1 = p.beta_insp / p.tp * s.insp * s.sp;
        let r2 = p.beta_issp / p.tp * s.issp * s.sp;
        let r3 = p.mu_tp * s.sp;
        let r4 = s.ep / p.aincp;
        let r5 = p.mu_tp * s.ep;
        let r6 = s.insp / p.aip;
        let r7 = s.issp / p.aip;
        let r8 = p.mu_insp * s.insp;
        let r9 = p.mu_issp * s.issp;
        let r10 = p.mu_tp * s.rp;
        [
            -r1 - r2 - r3,
            r1 + r2 - r4 - r5,
            (1.0 - p.ss) * r4 - r6 - r8,
            p.ss * r4 - r7 - r9,
            r6 + r7 - r10,
            r8 + r9,
        ]
    }

    #[test]
    fn vector_field_matches_longhand_assembly() {
        let p = params_basic();
        let state = StateVector { sp: 9.5e6, ep: 3e4, insp: 1.2e4, issp: 900.0, rp: 4e5, idp: 700.0 };
        let g = vector_field(&state, &p).unwrap();
        let expect = vector_field_longhand(&state, &p);
        for i in 0..6 {
            assert_relative_eq!(g[i], expect[i], max_relative = 1e-14);
        }
    }

    #[test]
    fn stoichiometric_column_sums() {
        let s = StoichiometricMatrix::new(0.37);
        let sums: Vec<f64> = (1..=10).map(|k| s.column(k).iter().sum()).collect();
        let expect = [0.0, 0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        for (k, (&got, &want)) in sums.iter().zip(expect.iter()).enumerate() {
            assert_relative_eq!(got, want, epsilon = 1e-15);
            let _ = k;
        }
        // SP -> EP transfer columns carry exactly -1 / +1.
        assert_eq!(s.column(1)[0], -1.0);
        assert_eq!(s.column(1)[1], 1.0);
    }

    #[test]
    fn jacobian_column_sums_follow_population_balance() {
        // d(sum g)/dy_j = -mu_tp for j in {sp, ep, rp}, 0 for the infected
        // and deceased columns.
        let p = params_basic();
        let state = StateVector { sp: 8e6, ep: 1e5, insp: 5e4, issp: 6e3, rp: 1.5e6, idp: 2e3 };
        let j = jacobian(&state, &p).unwrap();
        let expected = [-p.mu_tp, -p.mu_tp, 0.0, 0.0, -p.mu_tp, 0.0];
        for c in 0..6 {
            let sum: f64 = j.column(c).iter().sum();
            assert_relative_eq!(sum, expected[c], epsilon = 1e-12 * p.mu_tp.max(1e-12));
        }
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        let p = params_basic();
        // Deterministic pseudo-random admissible states.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let y = Vector6::from_fn(|_, _| next() * 2e6);
            let state = StateVector::from_vector(&y);
            let j = jacobian(&state, &p).unwrap();
            for col in 0..6 {
                let h = y[col].abs().max(1.0) * 1e-6;
                let mut yp = y;
                let mut ym = y;
                yp[col] += h;
                ym[col] -= h;
                let gp = vector_field(&StateVector::from_vector(&yp), &p).unwrap();
                let gm = vector_field(&StateVector::from_vector(&ym), &p).unwrap();
                let fd = (gp - gm) / (2.0 * h);
                for row in 0..6 {
                    let scale = j[(row, col)].abs().max(1e-9);
                    assert!(
                        (j[(row, col)] - fd[row]).abs() / scale < 1e-6,
                        "J[{row},{col}] analytic {} vs fd {}",
                        j[(row, col)],
                        fd[row]
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_is_sum_of_transition_terms() {
        let p = params_basic();
        let state = StateVector { sp: 7e6, ep: 2e5, insp: 9e4, issp: 1.1e4, rp: 2.5e6, idp: 8e3 };
        let j = jacobian(&state, &p).unwrap();
        let terms = transition_jacobian_terms(&state, &p).unwrap();
        let sum = terms.iter().fold(Matrix6::zeros(), |acc, t| acc + t);
        let scale = j.norm().max(1e-300);
        assert!((j - sum).norm() / scale < 1e-12);
    }

    #[test]
    fn jacobian_at_origin_is_linear_terms_only() {
        let p = params_basic();
        let j = jacobian(&StateVector::zero(), &p).unwrap();
        let sigma = 1.0 / p.aincp;
        let gamma = 1.0 / p.aip;
        let mut expect = Matrix6::zeros();
        expect[(0, 0)] = -p.mu_tp;
        expect[(1, 1)] = -sigma - p.mu_tp;
        expect[(2, 1)] = (1.0 - p.ss) * sigma;
        expect[(2, 2)] = -gamma - p.mu_insp;
        expect[(3, 1)] = p.ss * sigma;
        expect[(3, 3)] = -gamma - p.mu_issp;
        expect[(4, 2)] = gamma;
        expect[(4, 3)] = gamma;
        expect[(4, 4)] = -p.mu_tp;
        expect[(5, 2)] = p.mu_insp;
        expect[(5, 3)] = p.mu_issp;
        assert!((j - expect).norm() < 1e-14);
    }

    #[test]
    fn equilibration_residual_cases() {
        let p0 = ModelParams { mu_tp: 0.0, ..params_basic() };
        let state = StateVector { sp: 5e6, ep: 1e5, insp: 4e4, issp: 5e3, rp: 3e6, idp: 1e4 };
        let g = vector_field(&state, &p0).unwrap();
        assert!(equilibration_residual(&state, &g, &p0).unwrap() < 1e-9 * p0.tp);

        // Only RP populated with mu_tp > 0: sum of derivatives = -mu_tp * rp.
        let p = params_basic();
        let rp_only = StateVector { rp: 1e6, ..StateVector::zero() };
        let g = vector_field(&rp_only, &p).unwrap();
        let sum: f64 = g.iter().sum();
        assert_relative_eq!(sum, -p.mu_tp * rp_only.rp, max_relative = 1e-12);
        assert!(equilibration_residual(&rp_only, &g, &p).unwrap() < 1e-9 * p.tp);
    }

    proptest! {
        #[test]
        fn rates_non_negative_for_non_negative_states(
            sp in 0.0..1e7f64, ep in 0.0..1e6f64, insp in 0.0..1e6f64,
            issp in 0.0..1e5f64, rp in 0.0..1e7f64, idp in 0.0..1e5f64,
        ) {
            let state = StateVector { sp, ep, insp, issp, rp, idp };
            let r = compute_rates(&state, &params_basic()).unwrap();
            prop_assert!(r.0.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn population_balance_holds_for_all_states(
            sp in 0.0..1e7f64, ep in 0.0..1e6f64, insp in 0.0..1e6f64,
            issp in 0.0..1e5f64, rp in 0.0..1e7f64, idp in 0.0..1e5f64,
            mu_tp in 0.0..1e-2f64,
        ) {
            let p = ModelParams { mu_tp, ..params_basic() };
            let state = StateVector { sp, ep, insp, issp, rp, idp };
            let g = vector_field(&state, &p).unwrap();
            let res = equilibration_residual(&state, &g, &p).unwrap();
            prop_assert!(res < 1e-9 * p.tp, "residual {res}");
        }
    }
}
