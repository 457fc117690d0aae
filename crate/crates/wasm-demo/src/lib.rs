//! Browser bindings for three small demos: the oblivious monotone
//! partition, the sample-based k-modal flat decomposition, and the
//! modality-raising lift. Every export returns a JSON string.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use modal_probe::harness::instances::{random_band_pmf, random_kmodal, random_monotone};
use modal_probe::lowerbound::lift;
use modal_probe::{
    construct_flat_decomposition, flatness_error, flatten, modality, BirgeConfig,
    IntervalPartition, LbTransform, Monotonicity, Pmf, PmfSampler, Result,
};

/// Lifted distributions above this size are summarized, not returned.
pub const LIFT_DISPLAY_LIMIT: u64 = 1 << 16;

#[derive(Debug, Serialize)]
pub struct DecompositionView {
    pub mass: Vec<f64>,
    pub flattened: Vec<f64>,
    /// `[lo, hi]` pairs, 1-based.
    pub intervals: Vec<[usize; 2]>,
    pub flatness_error: f64,
    pub samples_drawn: u64,
    /// Per-interval verdicts of the k-modal construction; empty otherwise.
    pub verdicts: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct LiftView {
    pub input: Vec<f64>,
    pub c: usize,
    pub m: usize,
    pub r: usize,
    pub support: u64,
    pub lifted: Option<Vec<f64>>,
    pub modality: Option<usize>,
}

fn view(
    p: &Pmf,
    part: &IntervalPartition,
    samples_drawn: u64,
    verdicts: Vec<String>,
) -> Result<DecompositionView> {
    Ok(DecompositionView {
        mass: p.masses().to_vec(),
        flattened: flatten(p, part)?.into_masses(),
        intervals: part
            .intervals()
            .iter()
            .map(|iv| [iv.lo(), iv.hi()])
            .collect(),
        flatness_error: flatness_error(p, part)?,
        samples_drawn,
        verdicts,
    })
}

pub fn monotone_view(n: usize, eps: f64, seed: u64) -> Result<DecompositionView> {
    let p = random_monotone(
        n,
        Monotonicity::NonIncreasing,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )?;
    let part = BirgeConfig::default().partition(n, eps, Monotonicity::NonIncreasing)?;
    view(&p, &part, 0, Vec::new())
}

pub fn kmodal_view(n: usize, k: usize, eps: f64, seed: u64) -> Result<DecompositionView> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_kmodal(n, k, &mut rng)?;
    let mut src = PmfSampler::new(&p, rng);
    let d = construct_flat_decomposition(&mut src, n, eps, 0.1, k, &BirgeConfig::default())?;
    let verdicts = d
        .verdicts
        .iter()
        .map(|v| format!("{v:?}").to_lowercase())
        .collect();
    view(&p, &d.partition, d.samples_drawn, verdicts)
}

pub fn lift_view(n: usize, k: usize, seed: u64) -> Result<LiftView> {
    let (p_min, p_max) = (0.5 / n as f64, 1.5 / n as f64);
    let p = random_band_pmf(n, p_min, p_max, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let t = LbTransform::new(n, 0.5, p_min, p_max, k)?;
    let lifted = if t.support_size() <= LIFT_DISPLAY_LIMIT {
        Some(lift(&p, &t)?)
    } else {
        None
    };
    Ok(LiftView {
        input: p.masses().to_vec(),
        c: t.c(),
        m: t.m(),
        r: t.r(),
        support: t.support_size(),
        modality: lifted.as_ref().map(|g| modality(g).k),
        lifted: lifted.map(Pmf::into_masses),
    })
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsValue> {
    let value = value.map_err(|e| JsValue::from_str(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Random non-increasing distribution with its oblivious `eps`-flat partition.
#[wasm_bindgen]
pub fn monotone_demo(n: usize, eps: f64, seed: u64) -> std::result::Result<String, JsValue> {
    to_js(monotone_view(n, eps, seed))
}

#[wasm_bindgen]
pub fn kmodal_demo(
    n: usize,
    k: usize,
    eps: f64,
    seed: u64,
) -> std::result::Result<String, JsValue> {
    to_js(kmodal_view(n, k, eps, seed))
}

#[wasm_bindgen]
pub fn lift_demo(n: usize, k: usize, seed: u64) -> std::result::Result<String, JsValue> {
    to_js(lift_view(n, k, seed))
}
