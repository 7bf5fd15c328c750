//! Linear-Gaussian dynamics observed by a network of partial sensors, and a
//! seeded trajectory generator.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{check_observable, vech, HalfVec, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SensorSpec {
    pub node_id: usize,
    pub h: DMatrix<f64>,
    pub r: SymMatrix,
}

impl SensorSpec {
    pub fn new(node_id: usize, h: DMatrix<f64>, r: SymMatrix) -> Result<Self> {
        if h.nrows() == 0 || h.nrows() != r.dim() {
            return Err(Error::Dimension(format!(
                "sensor {node_id}: H is {}x{}, R is {}x{}",
                h.nrows(),
                h.ncols(),
                r.dim(),
                r.dim()
            )));
        }
        r.cholesky().map_err(|_| Error::NotPositiveDefinite(format!("measurement noise of sensor {node_id}")))?;
        Ok(Self { node_id, h, r })
    }
}

/// `Hᵀ R⁻¹ H` for one sensor.
pub fn information_contribution(h: &DMatrix<f64>, r: &SymMatrix) -> Result<SymMatrix> {
    let r_inv_h = r.cholesky()?.solve(h);
    SymMatrix::new(h.transpose() * r_inv_h)
}

/// `Hᵀ R⁻¹ y` for one sensor.
pub fn information_vector(h: &DMatrix<f64>, r: &SymMatrix, y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(h.transpose() * r.cholesky()?.solve(y))
}

/// How measurement matrices evolve over time.
#[derive(Debug, Clone)]
pub enum SensorSchedule {
    /// Every node keeps the `H_i` it was built with.
    Static,
    /// At each step every node picks one of `candidates` pseudo-randomly,
    /// keyed by `(seed, node, t)`. Noise covariances stay fixed.
    PerStepRandom { seed: u64, candidates: Vec<DMatrix<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorAssignment {
    /// First half of the nodes observe `x₁`, the rest `x₂`.
    StaticSplit,
    PerStepRandom {
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    f: DMatrix<f64>,
    q: SymMatrix,
    x0_mean: DVector<f64>,
    p0: SymMatrix,
    sensors: Vec<SensorSpec>,
    schedule: SensorSchedule,
}

impl StateSpaceModel {
    /// Validates shapes, SPD-ness of `Q` and `P0`, and observability of
    /// `(F, [H_1; …; H_N])` for the static sensors.
    pub fn new(
        f: DMatrix<f64>,
        q: SymMatrix,
        x0_mean: DVector<f64>,
        p0: SymMatrix,
        sensors: Vec<SensorSpec>,
        schedule: SensorSchedule,
    ) -> Result<Self> {
        let n = f.nrows();
        if !f.is_square() || q.dim() != n || p0.dim() != n || x0_mean.len() != n {
            return Err(Error::Dimension(format!("model of state dimension {n} has inconsistent operands")));
        }
        if sensors.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one sensor".into()));
        }
        for (i, s) in sensors.iter().enumerate() {
            if s.h.ncols() != n || s.node_id != i {
                return Err(Error::Dimension(format!("sensor {i} does not match state dimension {n} / node order")));
            }
        }
        if let SensorSchedule::PerStepRandom { candidates, .. } = &schedule {
            if candidates.is_empty() || candidates.iter().any(|h| h.ncols() != n || h.nrows() != sensors[0].r.dim()) {
                return Err(Error::Dimension("per-step sensor candidates do not match the model".into()));
            }
        }
        q.cholesky().map_err(|_| Error::NotPositiveDefinite("process noise Q".into()))?;
        p0.cholesky().map_err(|_| Error::NotPositiveDefinite("initial covariance P0".into()))?;

        let model = Self { f, q, x0_mean, p0, sensors, schedule };
        check_observable(&model.f, &model.stacked_h(0))?;
        Ok(model)
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_nodes(&self) -> usize {
        self.sensors.len()
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn x0_mean(&self) -> &DVector<f64> {
        &self.x0_mean
    }

    pub fn p0(&self) -> &SymMatrix {
        &self.p0
    }

    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    pub fn schedule(&self) -> &SensorSchedule {
        &self.schedule
    }

    pub fn is_time_varying(&self) -> bool {
        matches!(self.schedule, SensorSchedule::PerStepRandom { .. })
    }

    /// Measurement matrix node `node` uses at step `t`.
    pub fn measurement_matrix(&self, node: usize, t: usize) -> &DMatrix<f64> {
        match &self.schedule {
            SensorSchedule::Static => &self.sensors[node].h,
            SensorSchedule::PerStepRandom { seed, candidates } => {
                let key = splitmix64(seed ^ splitmix64(((node as u64) << 32) ^ t as u64));
                &candidates[(key % candidates.len() as u64) as usize]
            }
        }
    }

    pub fn noise_covariance(&self, node: usize) -> &SymMatrix {
        &self.sensors[node].r
    }

    pub fn sensor_at(&self, node: usize, t: usize) -> SensorSpec {
        SensorSpec { node_id: node, h: self.measurement_matrix(node, t).clone(), r: self.sensors[node].r.clone() }
    }

    /// `[H_1; …; H_N]` at step `t`.
    pub fn stacked_h(&self, t: usize) -> DMatrix<f64> {
        let rows: usize = (0..self.n_nodes()).map(|i| self.measurement_matrix(i, t).nrows()).sum();
        let mut h = DMatrix::zeros(rows, self.state_dim());
        let mut r0 = 0;
        for i in 0..self.n_nodes() {
            let hi = self.measurement_matrix(i, t);
            h.view_mut((r0, 0), hi.shape()).copy_from(hi);
            r0 += hi.nrows();
        }
        h
    }

    /// `blockdiag(R_1, …, R_N)`.
    pub fn stacked_r(&self) -> SymMatrix {
        let m: usize = self.sensors.iter().map(|s| s.r.dim()).sum();
        let mut r = DMatrix::zeros(m, m);
        let mut k = 0;
        for s in &self.sensors {
            let d = s.r.dim();
            r.view_mut((k, k), (d, d)).copy_from(s.r.as_matrix());
            k += d;
        }
        SymMatrix::new(r).expect("block diagonal of square blocks is square")
    }

    /// `vech(H_iᵀ R_i⁻¹ H_i)` at step `t`.
    pub fn local_information_vech(&self, node: usize, t: usize) -> Result<HalfVec> {
        Ok(vech(&information_contribution(self.measurement_matrix(node, t), &self.sensors[node].r)?))
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Constant-velocity target in the plane, state `[p_x, p_y, v_x, v_y]`.
///
/// `Q` is the discretized white-noise-acceleration covariance with spectral
/// density `q_intensity`. Every node measures one position coordinate with
/// variance `r_var`.
pub fn build_constant_velocity_model(
    dt: f64,
    q_intensity: f64,
    n_nodes: usize,
    assignment: SensorAssignment,
    r_var: f64,
) -> Result<StateSpaceModel> {
    if [dt, q_intensity, r_var].iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt, q_intensity and r_var must be positive (got {dt}, {q_intensity}, {r_var})"
        )));
    }
    if n_nodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n_nodes}")));
    }

    let mut f = DMatrix::identity(4, 4);
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;

    let (a, b, c) = (dt.powi(3) / 3.0, dt.powi(2) / 2.0, dt);
    #[rustfmt::skip]
    let q = DMatrix::from_row_slice(4, 4, &[
        a,   0.0, b,   0.0,
        0.0, a,   0.0, b,
        b,   0.0, c,   0.0,
        0.0, b,   0.0, c,
    ]) * q_intensity;

    let hx = DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]);
    let hy = DMatrix::from_row_slice(1, 4, &[0.0, 1.0, 0.0, 0.0]);
    let r = SymMatrix::new(DMatrix::from_element(1, 1, r_var))?;
    let sensors = (0..n_nodes)
        .map(|i| SensorSpec::new(i, if i < n_nodes / 2 { hx.clone() } else { hy.clone() }, r.clone()))
        .collect::<Result<Vec<_>>>()?;

    let schedule = match assignment {
        SensorAssignment::StaticSplit => SensorSchedule::Static,
        SensorAssignment::PerStepRandom { seed } => SensorSchedule::PerStepRandom { seed, candidates: vec![hx, hy] },
    };

    StateSpaceModel::new(
        f,
        SymMatrix::new(q)?,
        DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]),
        SymMatrix::identity(4),
        sensors,
        schedule,
    )
}

/// `Σ_i H_iᵀ R_i⁻¹ H_i` with the static sensors.
pub fn information_rate_target(model: &StateSpaceModel) -> Result<SymMatrix> {
    information_rate_target_at(model, 0)
}

pub fn information_rate_target_at(model: &StateSpaceModel, t: usize) -> Result<SymMatrix> {
    let n = model.state_dim();
    let mut acc = DMatrix::zeros(n, n);
    for i in 0..model.n_nodes() {
        acc += information_contribution(model.measurement_matrix(i, t), model.noise_covariance(i))?.as_matrix();
    }
    SymMatrix::new(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Stochastic,
    /// No initial-state, process or measurement noise; `x_t = F^t x0_mean`.
    NoiseFree,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `x_0 ..= x_T`.
    pub states: Vec<DVector<f64>>,
    /// `measurements[t][i]` is `y_{i,t}`, for the same `t` range as `states`.
    pub measurements: Vec<Vec<DVector<f64>>>,
    pub seed: u64,
}

impl Trajectory {
    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }
}

pub(crate) fn sample_gaussian(rng: &mut ChaCha8Rng, chol_lower: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_fn(chol_lower.nrows(), |_, _| StandardNormal.sample(rng));
    chol_lower * z
}

pub fn simulate_trajectory(model: &StateSpaceModel, n_steps: usize, seed: u64) -> Result<Trajectory> {
    simulate_trajectory_with(model, n_steps, seed, NoiseMode::Stochastic)
}

/// Draws `x_0 ~ N(x0_mean, P0)`, `x_{t+1} = F x_t + w_t`,
/// `y_{i,t} = H_i x_t + v_{i,t}`. Deterministic in `seed`.
pub fn simulate_trajectory_with(
    model: &StateSpaceModel,
    n_steps: usize,
    seed: u64,
    noise: NoiseMode,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p0_l = model.p0.cholesky()?.l();
    let q_l = model.q.cholesky()?.l();
    let r_l: Vec<DMatrix<f64>> = model.sensors.iter().map(|s| s.r.cholesky().map(|c| c.l())).collect::<Result<_>>()?;
    let noisy = noise == NoiseMode::Stochastic;

    let mut x = model.x0_mean.clone();
    if noisy {
        x += sample_gaussian(&mut rng, &p0_l);
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut measurements = Vec::with_capacity(n_steps + 1);
    for t in 0..=n_steps {
        let ys = (0..model.n_nodes())
            .map(|i| {
                let mut y = model.measurement_matrix(i, t) * &x;
                if noisy {
                    y += sample_gaussian(&mut rng, &r_l[i]);
                }
                y
            })
            .collect();
        measurements.push(ys);
        let mut next = &model.f * &x;
        if noisy {
            next += sample_gaussian(&mut rng, &q_l);
        }
        states.push(std::mem::replace(&mut x, next));
    }
    Ok(Trajectory { states, measurements, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{observability_rank, unvech};
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;

    #[test]
    fn cv_transition_matrix() {
        let m = build_constant_velocity_model(0.1, 1.0, 4, SensorAssignment::StaticSplit, 0.5).unwrap();
        let f = m.f();
        for r in 0..4 {
            assert_eq!(f[(r, r)], 1.0);
        }
        assert_eq!(f[(0, 2)], 0.1);
        assert_eq!(f[(1, 3)], 0.1);
        assert_eq!(f.iter().filter(|&&v| v != 0.0).count(), 6);
    }

    #[test]
    fn cv_rejects_degenerate_dt() {
        assert!(matches!(
            build_constant_velocity_model(0.0, 1.0, 4, SensorAssignment::StaticSplit, 0.5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(build_constant_velocity_model(0.1, 1.0, 1, SensorAssignment::StaticSplit, 0.5).is_err());
    }

    #[test]
    fn cv_static_split_four_nodes() {
        let m = build_constant_velocity_model(0.1, 1.0, 4, SensorAssignment::StaticSplit, 0.5).unwrap();
        let hx = dmatrix![1.0, 0.0, 0.0, 0.0];
        let hy = dmatrix![0.0, 1.0, 0.0, 0.0];
        assert_eq!(m.sensors()[0].h, hx);
        assert_eq!(m.sensors()[1].h, hx);
        assert_eq!(m.sensors()[2].h, hy);
        assert_eq!(m.sensors()[3].h, hy);
        assert_eq!(observability_rank(m.f(), &m.stacked_h(0)), 4);
    }

    #[test]
    fn cv_process_noise_is_white_noise_acceleration() {
        let m = build_constant_velocity_model(0.1, 2.0, 2, SensorAssignment::StaticSplit, 0.5).unwrap();
        let q = m.q();
        assert_abs_diff_eq!(q[(0, 0)], 2.0 * 1e-3 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[(0, 2)], 2.0 * 0.01 / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[(3, 3)], 2.0 * 0.1, epsilon = 1e-15);
        assert_eq!(q[(0, 1)], 0.0);
    }

    #[test]
    fn unobservable_model_is_rejected() {
        // only x₁ observed: x₂ and v₂ are invisible
        let f = DMatrix::identity(2, 2);
        let s = SensorSpec::new(0, dmatrix![1.0, 0.0], SymMatrix::identity(1)).unwrap();
        let r = StateSpaceModel::new(
            f,
            SymMatrix::identity(2),
            DVector::zeros(2),
            SymMatrix::identity(2),
            vec![s],
            SensorSchedule::Static,
        );
        assert!(matches!(r, Err(Error::Observability { rank: 1, n: 2 })));
    }

    #[test]
    fn sensor_requires_pd_noise() {
        let r = SensorSpec::new(0, dmatrix![1.0, 0.0], SymMatrix::zeros(1));
        assert!(matches!(r, Err(Error::NotPositiveDefinite(_))));
    }

    fn two_orthogonal_sensors() -> StateSpaceModel {
        let sensors = vec![
            SensorSpec::new(0, dmatrix![1.0, 0.0], SymMatrix::identity(1)).unwrap(),
            SensorSpec::new(1, dmatrix![0.0, 1.0], SymMatrix::identity(1)).unwrap(),
        ];
        StateSpaceModel::new(
            DMatrix::identity(2, 2),
            SymMatrix::identity(2),
            DVector::zeros(2),
            SymMatrix::identity(2),
            sensors,
            SensorSchedule::Static,
        )
        .unwrap()
    }

    #[test]
    fn information_rate_examples() {
        assert_eq!(information_rate_target(&two_orthogonal_sensors()).unwrap(), SymMatrix::identity(2));

        let m = build_constant_velocity_model(0.1, 1.0, 100, SensorAssignment::StaticSplit, 0.5).unwrap();
        let target = information_rate_target(&m).unwrap();
        let mut oracle = DMatrix::zeros(4, 4);
        for s in m.sensors() {
            oracle += s.h.transpose() * &s.h / 0.5;
        }
        assert_abs_diff_eq!(target.as_matrix(), &oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(
            target.as_matrix(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![100.0, 100.0, 0.0, 0.0])),
            epsilon = 1e-12
        );
    }

    #[test]
    fn information_rate_identical_sensors_scales_linearly() {
        let h = dmatrix![1.0, 2.0];
        let r = SymMatrix::new(dmatrix![0.25]).unwrap();
        let one = information_contribution(&h, &r).unwrap();
        let sensors = (0..5).map(|i| SensorSpec::new(i, h.clone(), r.clone()).unwrap()).collect();
        let m = StateSpaceModel::new(
            dmatrix![1.0, 1.0; 0.0, 1.0],
            SymMatrix::identity(2),
            DVector::zeros(2),
            SymMatrix::identity(2),
            sensors,
            SensorSchedule::Static,
        )
        .unwrap();
        assert_abs_diff_eq!(
            information_rate_target(&m).unwrap().as_matrix(),
            &(one.as_matrix() * 5.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn information_rate_matches_vech_space_sum() {
        let m = build_constant_velocity_model(0.1, 1.0, 7, SensorAssignment::StaticSplit, 0.3).unwrap();
        let mut acc = DVector::zeros(10);
        for i in 0..7 {
            acc += m.local_information_vech(i, 0).unwrap().as_vector();
        }
        let via_vech = unvech(&HalfVec::from_vector(acc).unwrap());
        assert_eq!(via_vech, information_rate_target(&m).unwrap());
    }

    #[test]
    fn noise_free_follows_dynamics_exactly() {
        let m = build_constant_velocity_model(0.1, 1.0, 4, SensorAssignment::StaticSplit, 0.5).unwrap();
        let traj = simulate_trajectory_with(&m, 30, 1, NoiseMode::NoiseFree).unwrap();
        let mut x = m.x0_mean().clone();
        for (t, s) in traj.states.iter().enumerate() {
            assert_eq!(s, &x, "t = {t}");
            for i in 0..4 {
                assert_eq!(traj.measurements[t][i], m.measurement_matrix(i, t) * &x);
            }
            x = m.f() * x;
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let m = build_constant_velocity_model(0.1, 1.0, 6, SensorAssignment::StaticSplit, 0.5).unwrap();
        let a = simulate_trajectory(&m, 50, 42).unwrap();
        let b = simulate_trajectory(&m, 50, 42).unwrap();
        assert_eq!(a.states, b.states);
        assert_eq!(a.measurements, b.measurements);
        let c = simulate_trajectory(&m, 50, 43).unwrap();
        assert_ne!(a.states, c.states);
        assert!(simulate_trajectory(&m, 0, 1).is_err());
    }

    fn scalar_model(f: f64, q: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            dmatrix![f],
            SymMatrix::new(dmatrix![q]).unwrap(),
            DVector::zeros(1),
            SymMatrix::identity(1),
            vec![SensorSpec::new(0, dmatrix![1.0], SymMatrix::identity(1)).unwrap()],
            SensorSchedule::Static,
        )
        .unwrap()
    }

    #[test]
    fn process_noise_variance_and_whiteness() {
        let (f, q) = (0.9, 2.5);
        let m = scalar_model(f, q);
        let steps = 100_000;
        let traj = simulate_trajectory(&m, steps, 2024).unwrap();
        let w: Vec<f64> = traj.states.windows(2).map(|p| p[1][0] - f * p[0][0]).collect();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - q).abs() < 0.03 * q, "sample variance {var}");

        let bound = 5.0 / n.sqrt();
        for lag in 1..=5 {
            let c: f64 = w.iter().zip(&w[lag..]).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / n;
            assert!((c / var).abs() < bound, "lag {lag}: autocorrelation {}", c / var);
        }
    }

    #[test]
    fn per_step_random_varies_and_is_deterministic() {
        let m = build_constant_velocity_model(0.1, 1.0, 10, SensorAssignment::PerStepRandom { seed: 3 }, 0.5).unwrap();
        assert!(m.is_time_varying());
        let picks: Vec<bool> = (0..200).map(|t| m.measurement_matrix(0, t)[(0, 0)] == 1.0).collect();
        let ones = picks.iter().filter(|&&b| b).count();
        assert!(ones > 60 && ones < 140, "{ones} of 200");
        let again: Vec<bool> = (0..200).map(|t| m.measurement_matrix(0, t)[(0, 0)] == 1.0).collect();
        assert_eq!(picks, again);
    }
}
