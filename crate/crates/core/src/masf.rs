//! Moving-average refinement of x₀ estimates, in data space or per Haar subband.
//!
//! Each sampling step produces an estimate x₀ᵗ of the clean sample. The
//! refiner keeps an exponential moving average of those estimates,
//!
//! ```text
//! x̄ᵗ = (1 − γ·w)∘xᵗ + γ·w∘x̄ᵗ⁺¹
//! ```
//!
//! where `w` is a per-cell adaptive weight. In the frequency stages the
//! average runs separately on the `ll, lh, hl, hh` subbands and the refined
//! estimate is rebuilt by the inverse transform, optionally scaling each
//! subband by a time-varying weight `β_f(t)` that favours low frequencies
//! early and high frequencies late.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::schedule::TimestepGrid;
use crate::wavelet::{dwt, idwt, Band, SubbandSet};

/// How the adaptive weight `w` is derived from the discrepancy `|x − x̄|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `w ≡ 1`: plain EMA with factor γ.
    Constant,
    /// `w = |x − x̄|`.
    Linear,
    /// `w = |x − x̄|²`.
    Quadratic,
}

impl WeightMode {
    pub const ALL: [WeightMode; 3] = [WeightMode::Constant, WeightMode::Linear, WeightMode::Quadratic];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "linear" => Ok(Self::Linear),
            "quadratic" => Ok(Self::Quadratic),
            other => Err(Error::Config(format!(
                "unknown weight mode {other:?} (expected constant, linear or quadratic)"
            ))),
        }
    }
}

/// Which parts of the refinement are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasfStage {
    /// EMA directly on the x₀ estimate; no wavelet transform, no β.
    DataSpaceOnly,
    /// Per-subband EMA with `β ≡ 1`.
    Frequency,
    /// Per-subband EMA with the dynamic `β_f(t)` weighting.
    FrequencyPlusWeighting,
}

impl MasfStage {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DataSpaceOnly => "data_space_only",
            Self::Frequency => "frequency",
            Self::FrequencyPlusWeighting => "frequency_plus_weighting",
        }
    }
}

impl std::str::FromStr for MasfStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data_space_only" => Ok(Self::DataSpaceOnly),
            "frequency" => Ok(Self::Frequency),
            "frequency_plus_weighting" => Ok(Self::FrequencyPlusWeighting),
            other => Err(Error::Config(format!(
                "unknown MASF stage {other:?} (expected data_space_only, frequency or frequency_plus_weighting)"
            ))),
        }
    }
}

/// Endpoints of the linear β ramps. `ll` uses the `ll_*` pair, the three
/// detail bands share the `hf_*` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWeights {
    pub ll_start: f64,
    pub ll_end: f64,
    pub hf_start: f64,
    pub hf_end: f64,
}

impl Default for FrequencyWeights {
    fn default() -> Self {
        Self {
            ll_start: 1.03,
            ll_end: 1.0,
            hf_start: 1.0,
            hf_end: 1.13,
        }
    }
}

impl FrequencyWeights {
    pub const UNIT: FrequencyWeights = FrequencyWeights {
        ll_start: 1.0,
        ll_end: 1.0,
        hf_start: 1.0,
        hf_end: 1.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MasfConfig {
    pub gamma: f64,
    pub weight_mode: WeightMode,
    pub betas: FrequencyWeights,
    pub stage: MasfStage,
}

impl Default for MasfConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            weight_mode: WeightMode::Linear,
            betas: FrequencyWeights::default(),
            stage: MasfStage::FrequencyPlusWeighting,
        }
    }
}

impl MasfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Parameter(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        let b = &self.betas;
        for (name, v) in [
            ("beta_ll_start", b.ll_start),
            ("beta_ll_end", b.ll_end),
            ("beta_hf_start", b.hf_start),
            ("beta_hf_end", b.hf_end),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Adaptive weight for the EMA, clamped to `[0, 1/γ]` so that `γ·w ≤ 1`.
pub fn adaptive_weight(x_cur: &Field, x_bar: &Field, mode: WeightMode, gamma: f64) -> Result<Field> {
    x_cur.ensure_same_shape(x_bar)?;
    let w = match mode {
        WeightMode::Constant => Field::ones(x_cur.shape()),
        WeightMode::Linear => x_cur.abs_diff(x_bar)?,
        WeightMode::Quadratic => x_cur.zip_map(x_bar, |a, b| (a - b) * (a - b))?,
    };
    if gamma > 0.0 {
        let cap = 1.0 / gamma;
        w.map(|v| v.min(cap))
    } else {
        Ok(w)
    }
}

/// `(1 − γ·w)∘x_cur + γ·w∘x_bar`.
pub fn ema_update(x_cur: &Field, x_bar: &Field, gamma: f64, w: &Field) -> Result<Field> {
    x_cur.ensure_same_shape(x_bar)?;
    x_cur.ensure_same_shape(w)?;
    let coef = w.map(|v| gamma * v)?;
    if let Some(bad) = coef.data().iter().find(|c| !(0.0..=1.0).contains(*c)) {
        return Err(Error::Invariant(format!(
            "EMA coefficient γ·w = {bad} outside [0, 1]"
        )));
    }
    x_cur.lerp(x_bar, &coef)
}

/// `(β_ll, β_hf)` at grid timestep `t`, interpolated linearly over grid progress.
///
/// Progress is `position / (nfe − 1)`, 0 at the first (noisiest) step and 1 at
/// the last. A single-step grid sits at progress 1.
pub fn beta_of(t: usize, grid: &TimestepGrid, betas: &FrequencyWeights) -> Result<(f64, f64)> {
    let pos = grid
        .position(t)
        .ok_or_else(|| Error::Parameter(format!("timestep {t} is not on the sampling grid")))?;
    let p = if grid.nfe() == 1 {
        1.0
    } else {
        pos as f64 / (grid.nfe() - 1) as f64
    };
    Ok((
        (1.0 - p) * betas.ll_start + p * betas.ll_end,
        (1.0 - p) * betas.hf_start + p * betas.hf_end,
    ))
}

#[derive(Debug, Clone, PartialEq)]
enum Average {
    Data(Field),
    Bands(SubbandSet),
}

/// Running average carried across the steps of one trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MasfState {
    average: Option<Average>,
}

impl MasfState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_initialized(&self) -> bool {
        self.average.is_some()
    }

    /// Per-subband averages, when running a frequency stage.
    pub fn bands(&self) -> Option<&SubbandSet> {
        match &self.average {
            Some(Average::Bands(s)) => Some(s),
            _ => None,
        }
    }

    /// Data-space average, when running [`MasfStage::DataSpaceOnly`].
    pub fn field(&self) -> Option<&Field> {
        match &self.average {
            Some(Average::Data(f)) => Some(f),
            _ => None,
        }
    }
}

/// Refines the x₀ estimate at grid timestep `t` and advances `state`.
///
/// The first call seeds the average with the current estimate. In the
/// frequency stages the β-scaled averages are used only for the output; the
/// state keeps the unscaled subbands. The reconstruction is evaluated as
/// `x0_est + IDWT(β∘x̄ − DWT(x0_est))`, which equals `IDWT(β∘x̄)` by linearity
/// and returns `x0_est` bit for bit when the average and β are inactive.
pub fn refine(
    x0_est: &Field,
    t: usize,
    grid: &TimestepGrid,
    state: &mut MasfState,
    cfg: &MasfConfig,
) -> Result<Field> {
    match cfg.stage {
        MasfStage::DataSpaceOnly => {
            let next = match &state.average {
                None => x0_est.clone(),
                Some(Average::Data(bar)) => {
                    let w = adaptive_weight(x0_est, bar, cfg.weight_mode, cfg.gamma)?;
                    ema_update(x0_est, bar, cfg.gamma, &w)?
                }
                Some(Average::Bands(_)) => {
                    return Err(Error::Parameter(
                        "state holds subband averages but stage is data_space_only".into(),
                    ))
                }
            };
            state.average = Some(Average::Data(next.clone()));
            Ok(next)
        }
        MasfStage::Frequency | MasfStage::FrequencyPlusWeighting => {
            let current = dwt(x0_est)?;
            let next = match &state.average {
                None => current.clone(),
                Some(Average::Bands(bar)) => current.try_zip(bar, |_, cur, bar| {
                    let w = adaptive_weight(cur, bar, cfg.weight_mode, cfg.gamma)?;
                    ema_update(cur, bar, cfg.gamma, &w)
                })?,
                Some(Average::Data(_)) => {
                    return Err(Error::Parameter(
                        "state holds a data-space average but stage is frequency-domain".into(),
                    ))
                }
            };
            let (beta_ll, beta_hf) = match cfg.stage {
                MasfStage::FrequencyPlusWeighting => beta_of(t, grid, &cfg.betas)?,
                _ => (1.0, 1.0),
            };
            let delta = next.try_zip(&current, |band, avg, cur| {
                let beta = if band.is_low() { beta_ll } else { beta_hf };
                avg.zip_map(cur, |a, c| beta * a - c)
            })?;
            let refined = x0_est.add(&idwt(&delta)?)?;
            state.average = Some(Average::Bands(next));
            Ok(refined)
        }
    }
}

/// Convenience wrapper owning the state for one trajectory.
#[derive(Debug, Clone)]
pub struct Refiner {
    cfg: MasfConfig,
    state: MasfState,
}

impl Refiner {
    pub fn new(cfg: MasfConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: MasfState::new(),
        })
    }

    pub fn refine(&mut self, x0_est: &Field, t: usize, grid: &TimestepGrid) -> Result<Field> {
        refine(x0_est, t, grid, &mut self.state, &self.cfg)
    }

    pub fn state(&self) -> &MasfState {
        &self.state
    }

    pub fn config(&self) -> &MasfConfig {
        &self.cfg
    }
}

/// Names of the subbands, for reporting.
pub fn band_names() -> [&'static str; 4] {
    Band::ALL.map(Band::name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Shape;
    use crate::schedule::{NoiseSchedule, ScheduleKind};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(nfe: usize) -> TimestepGrid {
        let s = NoiseSchedule::new(ScheduleKind::Linear, 1000).unwrap();
        TimestepGrid::uniform(&s, nfe).unwrap()
    }

    fn rand_fields(n: usize, shape: Shape, seed: u64) -> Vec<Field> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Field::standard_normal(shape, &mut rng)).collect()
    }

    fn cfg(gamma: f64, mode: WeightMode, betas: FrequencyWeights, stage: MasfStage) -> MasfConfig {
        MasfConfig {
            gamma,
            weight_mode: mode,
            betas,
            stage,
        }
    }

    #[test]
    fn constant_weight_is_ones() {
        let f = rand_fields(2, Shape::new(2, 4, 1).unwrap(), 1);
        let w = adaptive_weight(&f[0], &f[1], WeightMode::Constant, 0.5).unwrap();
        assert_eq!(w, Field::ones(f[0].shape()));
    }

    #[test]
    fn linear_weight_vanishes_without_discrepancy() {
        let f = rand_fields(1, Shape::new(2, 2, 3).unwrap(), 2);
        let w = adaptive_weight(&f[0], &f[0], WeightMode::Linear, 0.5).unwrap();
        assert!(w.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadratic_weight_is_square_of_linear() {
        let f = rand_fields(2, Shape::new(4, 4, 2).unwrap(), 3);
        let lin = adaptive_weight(&f[0], &f[1], WeightMode::Linear, 0.0).unwrap();
        let quad = adaptive_weight(&f[0], &f[1], WeightMode::Quadratic, 0.0).unwrap();
        let sq = lin.mul(&lin).unwrap();
        assert!(quad.max_abs_diff(&sq).unwrap() <= 1e-15);
    }

    #[test]
    fn weights_clamped_to_inverse_gamma() {
        let s = Shape::new(1, 2, 1).unwrap();
        let a = Field::new(s, vec![0.0, 0.0]).unwrap();
        let b = Field::new(s, vec![5.0, 0.1]).unwrap();
        let w = adaptive_weight(&a, &b, WeightMode::Quadratic, 0.5).unwrap();
        assert_eq!(w.data(), &[2.0, 0.1 * 0.1]);
    }

    #[test]
    fn ema_degenerate_and_midpoint() {
        let f = rand_fields(2, Shape::new(2, 2, 1).unwrap(), 4);
        let ones = Field::ones(f[0].shape());
        assert_eq!(ema_update(&f[0], &f[1], 0.0, &ones).unwrap(), f[0]);
        let s = f[0].shape();
        let mid = ema_update(&Field::zeros(s), &Field::ones(s), 0.5, &ones).unwrap();
        assert!(mid.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn ema_rejects_coefficients_above_one() {
        let s = Shape::new(1, 1, 1).unwrap();
        let w = Field::filled(s, 3.0).unwrap();
        let r = ema_update(&Field::zeros(s), &Field::ones(s), 0.5, &w);
        assert!(matches!(r, Err(Error::Invariant(_))));
    }

    #[test]
    fn ema_unrolls_to_geometric_sum() {
        let shape = Shape::new(2, 2, 1).unwrap();
        let init = rand_fields(1, shape, 5).pop().unwrap();
        let xs = rand_fields(5, shape, 6);
        let gamma = 0.35;
        let ones = Field::ones(shape);
        let mut bar = init.clone();
        for x in &xs {
            bar = ema_update(x, &bar, gamma, &ones).unwrap();
        }
        // x̄ after 5 updates = Σ_k (1−γ)γ^k x_{5−k} + γ⁵ x̄_init
        for i in 0..shape.len() {
            let mut expect = gamma.powi(5) * init.data()[i];
            for (k, x) in xs.iter().rev().enumerate() {
                expect += (1.0 - gamma) * gamma.powi(k as i32) * x.data()[i];
            }
            assert!((bar.data()[i] - expect).abs() <= 1e-14);
        }
    }

    #[test]
    fn beta_endpoints_and_midpoint() {
        let betas = FrequencyWeights::default();
        let g = grid(11);
        let steps = g.steps().to_vec();
        assert_eq!(beta_of(steps[0], &g, &betas).unwrap(), (1.03, 1.0));
        assert_eq!(beta_of(steps[10], &g, &betas).unwrap(), (1.0, 1.13));
        let (ll, hf) = beta_of(steps[5], &g, &betas).unwrap();
        assert!((ll - 1.015).abs() <= 1e-15);
        assert!((hf - 1.065).abs() <= 1e-15);
        // single-step grids use the end values
        let one = grid(1);
        assert_eq!(beta_of(1000, &one, &betas).unwrap(), (1.0, 1.13));
        assert!(beta_of(999, &g, &betas).is_err());
    }

    #[test]
    fn first_refine_with_unit_beta_is_identity() {
        let shape = Shape::new(4, 6, 3).unwrap();
        let x = rand_fields(1, shape, 7).pop().unwrap();
        let g = grid(10);
        for stage in [MasfStage::DataSpaceOnly, MasfStage::Frequency] {
            let mut st = MasfState::new();
            let c = cfg(0.5, WeightMode::Linear, FrequencyWeights::UNIT, stage);
            let out = refine(&x, g.steps()[0], &g, &mut st, &c).unwrap();
            assert_eq!(out, x);
            assert!(st.is_initialized());
        }
    }

    #[test]
    fn zero_gamma_returns_estimate_each_step() {
        let shape = Shape::new(4, 4, 2).unwrap();
        let xs = rand_fields(6, shape, 8);
        let g = grid(6);
        for stage in [MasfStage::DataSpaceOnly, MasfStage::Frequency, MasfStage::FrequencyPlusWeighting] {
            let c = cfg(0.0, WeightMode::Linear, FrequencyWeights::UNIT, stage);
            let mut st = MasfState::new();
            for (x, &t) in xs.iter().zip(g.steps()) {
                let out = refine(x, t, &g, &mut st, &c).unwrap();
                assert!(out.max_abs_diff(x).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn frequency_and_data_space_agree_with_constant_weight() {
        let shape = Shape::new(8, 6, 3).unwrap();
        let xs = rand_fields(25, shape, 9);
        let g = grid(25);
        let mut freq = Refiner::new(cfg(0.6, WeightMode::Constant, FrequencyWeights::UNIT, MasfStage::Frequency)).unwrap();
        let mut data = Refiner::new(cfg(0.6, WeightMode::Constant, FrequencyWeights::UNIT, MasfStage::DataSpaceOnly)).unwrap();
        for (x, &t) in xs.iter().zip(g.steps()) {
            let a = freq.refine(x, t, &g).unwrap();
            let b = data.refine(x, t, &g).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn odd_dimensions_rejected_in_frequency_stages() {
        let x = Field::zeros(Shape::new(3, 4, 1).unwrap());
        let g = grid(3);
        let mut st = MasfState::new();
        let c = MasfConfig::default();
        assert!(matches!(refine(&x, g.steps()[0], &g, &mut st, &c), Err(Error::Dimension(_))));
    }

    #[test]
    fn state_shape_is_fixed_after_first_step() {
        let g = grid(3);
        let mut st = MasfState::new();
        let c = MasfConfig::default();
        refine(&Field::zeros(Shape::new(4, 4, 1).unwrap()), g.steps()[0], &g, &mut st, &c).unwrap();
        let r = refine(&Field::zeros(Shape::new(2, 4, 1).unwrap()), g.steps()[1], &g, &mut st, &c);
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    #[test]
    fn three_steps_match_scalar_block_oracle() {
        let shape = Shape::new(4, 4, 1).unwrap();
        let xs = rand_fields(3, shape, 10);
        let g = grid(3);
        let c = cfg(0.5, WeightMode::Linear, FrequencyWeights::default(), MasfStage::FrequencyPlusWeighting);
        let mut refiner = Refiner::new(c).unwrap();
        let got: Vec<Field> = xs
            .iter()
            .zip(g.steps())
            .map(|(x, &t)| refiner.refine(x, t, &g).unwrap())
            .collect();

        // Independent scalar implementation: per 2×2 block, per subband.
        let betas = [(1.03, 1.0), (1.015, 1.065), (1.0, 1.13)];
        let mut bar: Vec<[f64; 4]> = Vec::new();
        for (step, x) in xs.iter().enumerate() {
            let mut out = vec![0.0; 16];
            for bi in 0..2 {
                for bj in 0..2 {
                    let a = x.get(2 * bi, 2 * bj, 0);
                    let b = x.get(2 * bi, 2 * bj + 1, 0);
                    let cc = x.get(2 * bi + 1, 2 * bj, 0);
                    let d = x.get(2 * bi + 1, 2 * bj + 1, 0);
                    let sub = [
                        (a + b + cc + d) / 2.0,
                        (a + b - cc - d) / 2.0,
                        (a - b + cc - d) / 2.0,
                        (a - b - cc + d) / 2.0,
                    ];
                    let k = bi * 2 + bj;
                    if step == 0 {
                        bar.push(sub);
                    } else {
                        for f in 0..4 {
                            let w = (sub[f] - bar[k][f]).abs().min(2.0);
                            bar[k][f] = (1.0 - 0.5 * w) * sub[f] + 0.5 * w * bar[k][f];
                        }
                    }
                    let (bl, bh) = betas[step];
                    let s = [bl * bar[k][0], bh * bar[k][1], bh * bar[k][2], bh * bar[k][3]];
                    let px = [
                        (s[0] + s[1] + s[2] + s[3]) / 2.0,
                        (s[0] + s[1] - s[2] - s[3]) / 2.0,
                        (s[0] - s[1] + s[2] - s[3]) / 2.0,
                        (s[0] - s[1] - s[2] + s[3]) / 2.0,
                    ];
                    out[(2 * bi) * 4 + 2 * bj] = px[0];
                    out[(2 * bi) * 4 + 2 * bj + 1] = px[1];
                    out[(2 * bi + 1) * 4 + 2 * bj] = px[2];
                    out[(2 * bi + 1) * 4 + 2 * bj + 1] = px[3];
                }
            }
            for (g, e) in got[step].data().iter().zip(&out) {
                assert!((g - e).abs() <= 1e-12, "step {step}: {g} vs {e}");
            }
        }
    }

    #[test]
    fn unit_betas_make_weighting_stage_match_frequency_stage() {
        let shape = Shape::new(6, 4, 2).unwrap();
        let xs = rand_fields(8, shape, 11);
        let g = grid(8);
        let mut a = Refiner::new(cfg(0.4, WeightMode::Linear, FrequencyWeights::UNIT, MasfStage::FrequencyPlusWeighting)).unwrap();
        let mut b = Refiner::new(cfg(0.4, WeightMode::Linear, FrequencyWeights::UNIT, MasfStage::Frequency)).unwrap();
        for (x, &t) in xs.iter().zip(g.steps()) {
            assert_eq!(a.refine(x, t, &g).unwrap(), b.refine(x, t, &g).unwrap());
        }
    }

    #[test]
    fn beta_scaling_not_written_back() {
        let shape = Shape::new(4, 4, 1).unwrap();
        let xs = rand_fields(4, shape, 12);
        let g = grid(4);
        let mut weighted = Refiner::new(cfg(0.5, WeightMode::Linear, FrequencyWeights::default(), MasfStage::FrequencyPlusWeighting)).unwrap();
        let mut plain = Refiner::new(cfg(0.5, WeightMode::Linear, FrequencyWeights::default(), MasfStage::Frequency)).unwrap();
        for (x, &t) in xs.iter().zip(g.steps()) {
            weighted.refine(x, t, &g).unwrap();
            plain.refine(x, t, &g).unwrap();
            assert_eq!(weighted.state().bands(), plain.state().bands());
        }
    }

    proptest! {
        #[test]
        fn hh_perturbation_stays_in_hh(seed in any::<u64>(), gamma in 0.0f64..=1.0, mode_ix in 0usize..3) {
            let shape = Shape::new(4, 6, 2).unwrap();
            let xs = rand_fields(5, shape, seed);
            let g = grid(5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let half = Shape::new(2, 3, 2).unwrap();
            let perturbed: Vec<Field> = xs
                .iter()
                .map(|x| {
                    let mut s = dwt(x).unwrap();
                    s.hh = s.hh.add(&Field::standard_normal(half, &mut rng)).unwrap();
                    idwt(&s).unwrap()
                })
                .collect();
            let c = cfg(gamma, WeightMode::ALL[mode_ix], FrequencyWeights::default(), MasfStage::FrequencyPlusWeighting);
            let mut a = Refiner::new(c).unwrap();
            let mut b = Refiner::new(c).unwrap();
            for ((x, y), &t) in xs.iter().zip(&perturbed).zip(g.steps()) {
                a.refine(x, t, &g).unwrap();
                b.refine(y, t, &g).unwrap();
                let (sa, sb) = (a.state().bands().unwrap(), b.state().bands().unwrap());
                for band in [Band::Ll, Band::Lh, Band::Hl] {
                    prop_assert!(sa.band(band).max_abs_diff(sb.band(band)).unwrap() <= 1e-12);
                }
            }
        }

        #[test]
        fn refined_cells_stay_between_estimate_and_average(seed in any::<u64>(), gamma in 0.0f64..=1.0, mode_ix in 0usize..3) {
            let shape = Shape::new(4, 4, 1).unwrap();
            let xs = rand_fields(6, shape, seed);
            let g = grid(6);
            let mode = WeightMode::ALL[mode_ix];
            let tol = 1e-12;

            // data space: pixel cells lie between x₀ᵗ and x̄ᵗ⁺¹
            let mut data = Refiner::new(cfg(gamma, mode, FrequencyWeights::UNIT, MasfStage::DataSpaceOnly)).unwrap();
            // frequency: subband cells lie between x_fᵗ and x̄_fᵗ⁺¹
            let mut freq = Refiner::new(cfg(gamma, mode, FrequencyWeights::UNIT, MasfStage::Frequency)).unwrap();
            for (x, &t) in xs.iter().zip(g.steps()) {
                let prev = data.state().field().cloned();
                let out = data.refine(x, t, &g).unwrap();
                if let Some(prev) = prev {
                    for i in 0..shape.len() {
                        let (lo, hi) = (x.data()[i].min(prev.data()[i]), x.data()[i].max(prev.data()[i]));
                        prop_assert!(out.data()[i] >= lo - tol && out.data()[i] <= hi + tol);
                    }
                }

                let prev = freq.state().bands().cloned();
                freq.refine(x, t, &g).unwrap();
                if let Some(prev) = prev {
                    let cur = dwt(x).unwrap();
                    let new = freq.state().bands().unwrap();
                    for band in Band::ALL {
                        let (c, p, n) = (cur.band(band).data(), prev.band(band).data(), new.band(band).data());
                        for i in 0..c.len() {
                            prop_assert!(n[i] >= c[i].min(p[i]) - tol && n[i] <= c[i].max(p[i]) + tol);
                        }
                    }
                }
            }
        }
    }
}
