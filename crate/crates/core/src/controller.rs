//! Enumerative receding-horizon switching.
//!
//! Each planning step enumerates input patterns over the horizon, rolls the
//! plant forward for every candidate with the inputs held at their current
//! values, and keeps the first slot of the best pattern. The default cascade
//! picks the switch pattern, then the PV routing, then the battery routing,
//! each with its own evaluation function; the joint mode searches every word
//! sequence against the switch objective.

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::plant::{
    word_is_feasible, BatteryRoute, ControlWord, PlantState, PvRoute, StepRecord, Switch,
};
use crate::powerflow::{couple_line_and_cable, CoupledFlow, ShootingOptions};
use crate::scenario::{Exogenous, Scenario, Weights};

/// Per-slot inputs over the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternVec {
    pub switch_seq: Vec<Switch>,
    pub pv_seq: Vec<PvRoute>,
    pub battery_seq: Vec<BatteryRoute>,
}

impl PatternVec {
    /// Assembles the words slot by slot; fails on a coupling violation.
    pub fn words(&self) -> Result<Vec<ControlWord>> {
        self.switch_seq
            .iter()
            .zip(&self.pv_seq)
            .zip(&self.battery_seq)
            .map(|((&s, &p), &b)| ControlWord::new(s, p, b))
            .collect()
    }

    pub fn from_words(words: &[ControlWord]) -> Self {
        Self {
            switch_seq: words.iter().map(|w| w.switch()).collect(),
            pv_seq: words.iter().map(|w| w.pv()).collect(),
            battery_seq: words.iter().map(|w| w.battery()).collect(),
        }
    }
}

impl fmt::Display for PatternVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ((s, p), b)) in self
            .switch_seq
            .iter()
            .zip(&self.pv_seq)
            .zip(&self.battery_seq)
            .enumerate()
        {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}{}{}", *s as u8, *p as u8, *b as u8)?;
        }
        Ok(())
    }
}

/// Switch digits in tie-break preference order: Off, then battery-fed,
/// then purchased.
pub const SWITCH_PREFERENCE: [Switch; 3] = [Switch::Off, Switch::Battery, Switch::Purchased];

/// All length-`n` sequences over `alphabet`, lexicographic with the first
/// slot most significant and `alphabet` giving the digit order.
pub fn sequences<T: Copy>(alphabet: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |&a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

/// Raw terms of the evaluation functions for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ScoreBreakdown {
    /// ∫∫Γ dx dt, W·min.
    pub p_loss: f64,
    /// Sum over slots of the largest line deviation |v_e − v_1|, V.
    pub v_fluc: f64,
    /// ∫∫h dx dt, mm·m·min.
    pub s_snow: f64,
    /// ∫m_cost dt, p.u.·min.
    pub m_cost: f64,
    /// ∫ζ dt while charging, min/(p.u.·h).
    pub b_stor1: f64,
    /// ∫ζ dt while discharging, min/(p.u.·h).
    pub b_stor2: f64,
}

impl ScoreBreakdown {
    /// Accumulates the terms from consecutive step records, `steps_per_slot`
    /// per slot. ζ uses the battery energy at the start of each step.
    pub fn from_records(records: &[StepRecord], steps_per_slot: usize, zeta_guard: f64) -> Self {
        let mut out = Self::default();
        for slot in records.chunks(steps_per_slot) {
            out.v_fluc += slot.iter().map(|r| r.max_vdev).fold(0.0, f64::max);
        }
        for r in records {
            let dt = r.dt_min;
            out.p_loss += r.p_loss;
            out.s_snow += r.s_snow;
            out.m_cost += r.m_cost;
            let zeta = 1.0 / r.battery_before.max(zeta_guard);
            if r.word.pv() == PvRoute::Battery {
                out.b_stor1 += zeta * dt;
            }
            if r.word.battery() != BatteryRoute::Idle {
                out.b_stor2 += zeta * dt;
            }
        }
        out
    }
}

/// J = w_loss P + w_fluc V + w_snow S + w_cost M.
pub fn score_j(s: &ScoreBreakdown, w: &Weights) -> f64 {
    w.w_loss * s.p_loss + w.w_fluc * s.v_fluc + w.w_snow * s.s_snow + w.w_cost * s.m_cost
}

/// J_pv = w_pvfluc V − w_stor1 B_stor1.
pub fn score_j_pv(s: &ScoreBreakdown, w: &Weights) -> f64 {
    w.w_pvfluc * s.v_fluc - w.w_stor1 * s.b_stor1
}

/// J_battery = w_batteryfluc V + w_stor2 B_stor2.
pub fn score_j_battery(s: &ScoreBreakdown, w: &Weights) -> f64 {
    w.w_batteryfluc * s.v_fluc + w.w_stor2 * s.b_stor2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    Switch,
    Pv,
    Battery,
    Joint,
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Switch => "switch",
            Stage::Pv => "pv",
            Stage::Battery => "battery",
            Stage::Joint => "joint",
        }
    }

    pub fn score(&self, s: &ScoreBreakdown, w: &Weights) -> f64 {
        match self {
            Stage::Switch | Stage::Joint => score_j(s, w),
            Stage::Pv => score_j_pv(s, w),
            Stage::Battery => score_j_battery(s, w),
        }
    }
}

/// One scored candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub k: usize,
    pub stage: Stage,
    pub pattern: PatternVec,
    pub score: f64,
    pub terms: ScoreBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SearchMode {
    #[default]
    Cascade,
    Joint,
}

/// Network solutions for the current inputs, one per control word. The
/// inputs are held constant over the horizon, so every rollout step under a
/// given word sees the same network state.
pub struct FlowCache {
    flows: HashMap<ControlWord, CoupledFlow>,
}

impl FlowCache {
    pub fn build(scenario: &Scenario, exo: &Exogenous, opts: &ShootingOptions) -> Result<Self> {
        let flows = ControlWord::all()
            .into_par_iter()
            .map(|w| couple_line_and_cable(&w, scenario, exo, opts).map(|f| (w, f)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(Self { flows })
    }

    pub fn get(&self, word: &ControlWord) -> &CoupledFlow {
        &self.flows[word]
    }
}

/// Rolls a copy of `plant` forward over the horizon. Returns `None` when a
/// word becomes infeasible (reserve floor) at the start of its slot.
pub fn rollout(
    plant: &PlantState,
    words: &[ControlWord],
    scenario: &Scenario,
    exo: &Exogenous,
    cache: &FlowCache,
) -> Option<Vec<StepRecord>> {
    let steps = scenario.numerics.steps_per_slot(&scenario.controller);
    let slot_h = scenario.controller.t_mini / 60.0;
    let mut state = plant.clone();
    let mut records = Vec::with_capacity(words.len() * steps);
    for w in words {
        if !word_is_feasible(
            w,
            &state.battery,
            &scenario.grid,
            &scenario.controller,
            slot_h,
        ) {
            return None;
        }
        let flow = cache.get(w);
        for _ in 0..steps {
            records.push(state.advance_with_flow(*w, scenario, exo, flow));
        }
    }
    Some(records)
}

/// Scores all patterns in order (parallel) and returns the first minimum in
/// enumeration order, plus every scored candidate.
fn evaluate_stage(
    k: usize,
    stage: Stage,
    patterns: Vec<PatternVec>,
    plant: &PlantState,
    scenario: &Scenario,
    exo: &Exogenous,
    cache: &FlowCache,
) -> (Option<usize>, Vec<Candidate>) {
    let steps = scenario.numerics.steps_per_slot(&scenario.controller);
    let guard = scenario.controller.zeta_guard;
    let weights = scenario.controller.weights;
    let scored: Vec<Option<Candidate>> = patterns
        .into_par_iter()
        .map(|pattern| {
            let words = pattern.words().ok()?;
            let records = rollout(plant, &words, scenario, exo, cache)?;
            let terms = ScoreBreakdown::from_records(&records, steps, guard);
            Some(Candidate {
                k,
                stage,
                score: stage.score(&terms, &weights),
                terms,
                pattern,
            })
        })
        .collect();
    let candidates: Vec<Candidate> = scored.into_iter().flatten().collect();
    let best = argmin_first(candidates.iter().map(|c| c.score));
    (best, candidates)
}

/// Index of the first strictly smallest value; NaN never wins.
pub fn argmin_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Outcome of one planning step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub word: ControlWord,
    pub pattern: PatternVec,
    pub candidates: Vec<Candidate>,
    /// Winning pattern of each stage, in stage order.
    pub stage_choices: Vec<(Stage, PatternVec)>,
    /// Number of rollouts attempted, including infeasible ones.
    pub rollouts: usize,
}

pub fn switch_stage_patterns(n: usize) -> Vec<PatternVec> {
    sequences(&SWITCH_PREFERENCE, n)
        .into_iter()
        .map(|s| PatternVec {
            pv_seq: vec![PvRoute::Line; n],
            battery_seq: s.iter().map(|&s| BatteryRoute::forced_by(s)).collect(),
            switch_seq: s,
        })
        .collect()
}

pub fn pv_stage_patterns(fixed: &PatternVec) -> Vec<PatternVec> {
    sequences(&PvRoute::ALL, fixed.switch_seq.len())
        .into_iter()
        .map(|pv| PatternVec {
            pv_seq: pv,
            ..fixed.clone()
        })
        .collect()
}

pub fn battery_stage_patterns(fixed: &PatternVec) -> Vec<PatternVec> {
    sequences(&BatteryRoute::ALL, fixed.switch_seq.len())
        .into_iter()
        .map(|b| PatternVec {
            battery_seq: b,
            ..fixed.clone()
        })
        .collect()
}

pub fn joint_patterns(n: usize) -> Vec<PatternVec> {
    let mut words = Vec::with_capacity(18);
    for s in SWITCH_PREFERENCE {
        for p in PvRoute::ALL {
            for b in BatteryRoute::ALL {
                words.push((s, p, b));
            }
        }
    }
    sequences(&words, n)
        .into_iter()
        .map(|seq| PatternVec {
            switch_seq: seq.iter().map(|t| t.0).collect(),
            pv_seq: seq.iter().map(|t| t.1).collect(),
            battery_seq: seq.iter().map(|t| t.2).collect(),
        })
        .collect()
}

/// Chooses the word for slot `k` from the plant state at its start.
pub fn plan_step(
    k: usize,
    plant: &PlantState,
    scenario: &Scenario,
    mode: SearchMode,
    opts: &ShootingOptions,
) -> Result<Plan> {
    let n = scenario.controller.horizon_slots();
    let exo = scenario.series.at(plant.t_min, &scenario.thermal);
    let cache = FlowCache::build(scenario, &exo, opts).map_err(|e| Error::Step {
        t_min: plant.t_min,
        source: Box::new(e),
    })?;
    let fallback = |candidates, rollouts| {
        log::warn!("slot {k}: no feasible candidate; switching everything off");
        Plan {
            word: ControlWord::OFF,
            pattern: PatternVec::from_words(&vec![ControlWord::OFF; n]),
            candidates,
            stage_choices: Vec::new(),
            rollouts,
        }
    };
    match mode {
        SearchMode::Joint => {
            let patterns = joint_patterns(n);
            let rollouts = patterns.len();
            let (best, cands) =
                evaluate_stage(k, Stage::Joint, patterns, plant, scenario, &exo, &cache);
            let Some(i) = best else {
                return Ok(fallback(cands, rollouts));
            };
            let pattern = cands[i].pattern.clone();
            Ok(Plan {
                word: pattern.words()?[0],
                stage_choices: vec![(Stage::Joint, pattern.clone())],
                pattern,
                candidates: cands,
                rollouts,
            })
        }
        SearchMode::Cascade => {
            let mut all = Vec::new();
            let mut rollouts = 0;
            let mut choices = Vec::new();
            let mut run = |stage, patterns: Vec<PatternVec>| {
                rollouts += patterns.len();
                let (best, cands) =
                    evaluate_stage(k, stage, patterns, plant, scenario, &exo, &cache);
                let chosen = best.map(|i| cands[i].pattern.clone());
                if let Some(p) = &chosen {
                    choices.push((stage, p.clone()));
                }
                all.extend(cands);
                chosen
            };
            let Some(a) = run(Stage::Switch, switch_stage_patterns(n)) else {
                return Ok(fallback(all, rollouts));
            };
            let b = run(Stage::Pv, pv_stage_patterns(&a)).unwrap_or(a);
            let c = run(Stage::Battery, battery_stage_patterns(&b)).unwrap_or(b);
            Ok(Plan {
                word: c.words()?[0],
                pattern: c,
                candidates: all,
                stage_choices: choices,
                rollouts,
            })
        }
    }
}

/// One applied slot of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotLog {
    pub k: usize,
    pub t_min: f64,
    pub word: ControlWord,
    pub pattern: PatternVec,
    pub plan_seconds: f64,
    /// Largest line deviation observed while the slot was applied, V.
    pub max_vdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub slots: Vec<SlotLog>,
    /// Every scored candidate, when requested.
    pub candidates: Vec<Candidate>,
    pub initial: PlantState,
    pub last: PlantState,
}

impl RunOutcome {
    pub fn v_fluc_total(&self) -> f64 {
        self.slots
            .iter()
            .map(|s| s.max_vdev)
            .fold(0.0, |acc, v| acc + v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub mode: SearchMode,
    pub keep_candidates: bool,
}

/// Alternates planning and plant advance for `duration_min` minutes. The
/// applied slots see the actual (interpolated) inputs at every step.
pub fn run_closed_loop(
    scenario: &Scenario,
    duration_min: f64,
    run: RunOptions,
    opts: &ShootingOptions,
) -> Result<RunOutcome> {
    let ctrl = &scenario.controller;
    let slots_f = duration_min / ctrl.t_mini;
    if duration_min < 0.0 || (slots_f - slots_f.round()).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "duration {duration_min} min is not a multiple of t_mini ({} min)",
            ctrl.t_mini
        )));
    }
    if duration_min > scenario.series.end_min() + 1e-9 {
        return Err(Error::Config(format!(
            "duration {duration_min} min exceeds the series window ({} min)",
            scenario.series.end_min()
        )));
    }
    let n_slots = slots_f.round() as usize;
    let steps = scenario.numerics.steps_per_slot(ctrl);
    let slot_h = ctrl.t_mini / 60.0;
    let initial = PlantState::initial(scenario);
    let mut plant = initial.clone();
    let mut records = Vec::with_capacity(n_slots * steps);
    let mut slots = Vec::with_capacity(n_slots);
    let mut candidates = Vec::new();
    for k in 0..n_slots {
        let started = Instant::now();
        let plan = plan_step(k, &plant, scenario, run.mode, opts)?;
        let plan_seconds = started.elapsed().as_secs_f64();
        let word = plan.word;
        if !word_is_feasible(&word, &plant.battery, &scenario.grid, ctrl, slot_h) {
            return Err(Error::InfeasibleWord(format!(
                "{word} selected at slot {k}"
            )));
        }
        log::info!(
            "slot {k}: applying {word} (planned {} in {plan_seconds:.2} s)",
            plan.pattern
        );
        let t_min = plant.t_min;
        let mut max_vdev: f64 = 0.0;
        for _ in 0..steps {
            let exo = scenario.series.at(plant.t_min, &scenario.thermal);
            let r = plant.advance(word, scenario, &exo, opts)?;
            max_vdev = max_vdev.max(r.max_vdev);
            records.push(r);
        }
        slots.push(SlotLog {
            k,
            t_min,
            word,
            pattern: plan.pattern,
            plan_seconds,
            max_vdev,
        });
        if run.keep_candidates {
            candidates.extend(plan.candidates);
        }
    }
    Ok(RunOutcome {
        records,
        slots,
        candidates,
        initial,
        last: plant,
    })
}
