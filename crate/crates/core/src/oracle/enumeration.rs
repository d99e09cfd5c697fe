//! Exhaustive per-stage enumeration, written independently of the
//! controller's pattern generator and argmin.

use serde::Serialize;

use crate::controller::{
    plan_step, rollout, score_j, FlowCache, PatternVec, ScoreBreakdown, SearchMode, Stage,
};
use crate::error::Result;
use crate::plant::{BatteryRoute, ControlWord, PlantState, PvRoute, Switch};
use crate::powerflow::ShootingOptions;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCheck {
    pub stage: Stage,
    pub cascade: PatternVec,
    pub exhaustive: PatternVec,
    pub cascade_score: f64,
    pub exhaustive_score: f64,
}

impl StageCheck {
    pub fn agrees(&self) -> bool {
        self.cascade == self.exhaustive
            && self.cascade_score.to_bits() == self.exhaustive_score.to_bits()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationReport {
    pub stages: Vec<StageCheck>,
    /// J of the cascade's final pattern.
    pub cascade_j: f64,
    /// Best J over every joint word sequence.
    pub joint_j: f64,
}

impl EnumerationReport {
    pub fn all_agree(&self) -> bool {
        self.stages.len() == 3 && self.stages.iter().all(StageCheck::agrees)
    }
}

fn switch_rank(s: Switch) -> u8 {
    match s {
        Switch::Off => 0,
        Switch::Battery => 1,
        Switch::Purchased => 2,
    }
}

/// Every length-`n` digit string in base `base`, in no particular order.
fn digit_strings(base: u8, n: usize) -> Vec<Vec<u8>> {
    let total = (base as usize).pow(n as u32);
    (0..total)
        .rev()
        .map(|mut code| {
            let mut d = vec![0u8; n];
            for slot in (0..n).rev() {
                d[slot] = (code % base as usize) as u8;
                code /= base as usize;
            }
            d
        })
        .collect()
}

struct Best {
    pattern: PatternVec,
    score: f64,
    key: Vec<u8>,
}

fn consider(best: &mut Option<Best>, pattern: PatternVec, score: f64, key: Vec<u8>) {
    let better = match best {
        None => true,
        Some(b) => score < b.score || (score == b.score && key < b.key),
    };
    if better {
        *best = Some(Best {
            pattern,
            score,
            key,
        });
    }
}

/// Compares the cascade at the plant's current state with a brute-force
/// search of each stage, and reports the joint optimum.
pub fn check_enumeration(
    scenario: &Scenario,
    plant: &PlantState,
    opts: &ShootingOptions,
) -> Result<EnumerationReport> {
    let n = scenario.controller.horizon_slots();
    let steps = scenario.numerics.steps_per_slot(&scenario.controller);
    let guard = scenario.controller.zeta_guard;
    let w = scenario.controller.weights;
    let exo = scenario.series.at(plant.t_min, &scenario.thermal);
    let cache = FlowCache::build(scenario, &exo, opts)?;
    let eval = |p: &PatternVec| -> Option<ScoreBreakdown> {
        let words = p.words().ok()?;
        let rec = rollout(plant, &words, scenario, &exo, &cache)?;
        Some(ScoreBreakdown::from_records(&rec, steps, guard))
    };

    let plan = plan_step(0, plant, scenario, SearchMode::Cascade, opts)?;
    let mut stages = Vec::new();

    let mut best_a = None;
    for d in digit_strings(3, n) {
        let sw: Vec<Switch> = d.iter().map(|&x| Switch::from_digit(x).unwrap()).collect();
        let p = PatternVec {
            pv_seq: vec![PvRoute::Line; n],
            battery_seq: sw.iter().map(|&s| BatteryRoute::forced_by(s)).collect(),
            switch_seq: sw.clone(),
        };
        if let Some(t) = eval(&p) {
            consider(
                &mut best_a,
                p,
                Stage::Switch.score(&t, &w),
                sw.iter().map(|&s| switch_rank(s)).collect(),
            );
        }
    }
    let Some(a) = best_a else {
        return Ok(empty(stages));
    };

    let mut best_b = None;
    for d in digit_strings(2, n) {
        let p = PatternVec {
            pv_seq: d.iter().map(|&x| PvRoute::from_digit(x).unwrap()).collect(),
            ..a.pattern.clone()
        };
        if let Some(t) = eval(&p) {
            consider(&mut best_b, p, Stage::Pv.score(&t, &w), d);
        }
    }
    let b = best_b.expect("the stage-A pattern itself is feasible");

    let mut best_c = None;
    for d in digit_strings(3, n) {
        let p = PatternVec {
            battery_seq: d
                .iter()
                .map(|&x| BatteryRoute::from_digit(x).unwrap())
                .collect(),
            ..b.pattern.clone()
        };
        if let Some(t) = eval(&p) {
            consider(&mut best_c, p, Stage::Battery.score(&t, &w), d);
        }
    }
    let c = best_c.expect("the stage-B pattern itself is feasible");

    for (stage, best) in [(Stage::Switch, &a), (Stage::Pv, &b), (Stage::Battery, &c)] {
        let Some((_, cascade)) = plan.stage_choices.iter().find(|(s, _)| *s == stage) else {
            continue;
        };
        let cascade_score = eval(cascade).map_or(f64::NAN, |t| stage.score(&t, &w));
        stages.push(StageCheck {
            stage,
            cascade: cascade.clone(),
            exhaustive: best.pattern.clone(),
            cascade_score,
            exhaustive_score: best.score,
        });
    }

    let cascade_j = eval(&plan.pattern).map_or(f64::NAN, |t| score_j(&t, &w));
    let mut joint_j = f64::INFINITY;
    let words = ControlWord::all();
    for d in digit_strings(words.len() as u8, n) {
        let seq: Vec<ControlWord> = d.iter().map(|&i| words[i as usize]).collect();
        if let Some(t) = eval(&PatternVec::from_words(&seq)) {
            joint_j = joint_j.min(score_j(&t, &w));
        }
    }
    Ok(EnumerationReport {
        stages,
        cascade_j,
        joint_j,
    })
}

fn empty(stages: Vec<StageCheck>) -> EnumerationReport {
    EnumerationReport {
        stages,
        cascade_j: f64::NAN,
        joint_j: f64::NAN,
    }
}
