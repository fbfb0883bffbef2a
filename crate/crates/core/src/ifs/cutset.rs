use std::collections::HashMap;

use super::map::{ConformalMap, Similarity};
use super::spec::IfsSpec;
use super::word::Word;
use crate::error::{domain, Error, Result};
use crate::measure::AtomicMeasure;

/// Default cap on the number of words a single expansion may produce.
pub const WORD_BUDGET: usize = 2_000_000;

// Relative slack on the stopping rule, so that e.g. 3^-12 · diam compares
// equal to a threshold of 3^-12 despite rounding in the ratio products.
const STOP_SLACK: f64 = 1e-9;

/// The section `W` of the word tree at a threshold: every word whose
/// cylinder diameter bound is at most the threshold while its parent's is
/// larger. The empty word is never included.
#[derive(Clone, Debug)]
pub struct CutSet {
    pub threshold: f64,
    /// Dyadic level `t` when the threshold is `2^-t`.
    pub level: Option<u32>,
    pub words: Vec<Word>,
}

impl CutSet {
    pub fn total_weight(&self) -> f64 {
        self.words.iter().map(Word::weight).sum()
    }

    /// No word is a prefix of another. Words are stored in lexicographic
    /// order, so comparing neighbours suffices.
    pub fn is_prefix_free(&self) -> bool {
        self.words.windows(2).all(|w| !w[0].is_prefix_of(&w[1]))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Clone, Copy)]
enum Stop {
    Threshold(f64),
    Depth(usize),
}

struct Leaf<'a> {
    symbols: &'a [usize],
    base: &'a Similarity,
    weight: f64,
    ratio: f64,
}

struct Walker<'s, F> {
    spec: &'s IfsSpec,
    stop: Stop,
    budget: usize,
    count: usize,
    symbols: Vec<usize>,
    visit: F,
}

impl<F: FnMut(Leaf<'_>)> Walker<'_, F> {
    fn run(&mut self) -> bool {
        let base = Similarity::identity(self.spec.maps()[0].base().dim());
        self.descend(&base, 1.0, 1.0)
    }

    fn is_leaf(&self, ratio: f64) -> bool {
        if self.symbols.is_empty() {
            return false;
        }
        match self.stop {
            Stop::Threshold(thr) => ratio * self.spec.diam_scale() <= thr * (1.0 + STOP_SLACK),
            Stop::Depth(k) => self.symbols.len() >= k,
        }
    }

    // Returns false once the budget is exhausted.
    fn descend(&mut self, base: &Similarity, weight: f64, ratio: f64) -> bool {
        if self.is_leaf(ratio) {
            self.count += 1;
            if self.count > self.budget {
                return false;
            }
            (self.visit)(Leaf {
                symbols: &self.symbols,
                base,
                weight,
                ratio,
            });
            return true;
        }
        for (i, map) in self.spec.maps().iter().enumerate() {
            let child = base.then_inner(map.base());
            self.symbols.push(i);
            let ok = self.descend(&child, weight * self.spec.probs()[i], ratio * map.ratio());
            self.symbols.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

fn walk(spec: &IfsSpec, stop: Stop, budget: usize, visit: impl FnMut(Leaf<'_>)) -> Option<usize> {
    let mut walker = Walker {
        spec,
        stop,
        budget,
        count: 0,
        symbols: Vec::new(),
        visit,
    };
    walker.run().then_some(walker.count)
}

fn fits(spec: &IfsSpec, stop: Stop, budget: usize) -> bool {
    walk(spec, stop, budget, |_| {}).is_some()
}

fn over_budget(spec: &IfsSpec, stop: Stop, budget: usize) -> Error {
    let fitting = match stop {
        Stop::Threshold(thr) => {
            let top = (1.0 / thr).log2().floor().max(0.0) as u32;
            (0..=top)
                .rev()
                .find(|&t| fits(spec, Stop::Threshold(2f64.powi(-(t as i32))), budget))
        }
        Stop::Depth(k) => (1..k as u32).rev().find(|&d| fits(spec, Stop::Depth(d as usize), budget)),
    };
    Error::Resource {
        what: format!("word expansion exceeds the budget of {budget} words"),
        fits: fitting,
    }
}

fn collect_words(spec: &IfsSpec, stop: Stop, budget: usize) -> Result<Vec<Word>> {
    let chart = spec.chart();
    let mut words = Vec::new();
    walk(spec, stop, budget, |leaf| {
        let map = match chart {
            None => ConformalMap::Similarity(leaf.base.clone()),
            Some(chart) => ConformalMap::Conjugated {
                base: leaf.base.clone(),
                chart,
            },
        };
        words.push(Word::from_parts(
            leaf.symbols.to_vec(),
            map,
            leaf.weight,
            leaf.ratio,
            leaf.ratio * spec.diam_scale(),
        ));
    })
    .ok_or_else(|| over_budget(spec, stop, budget))?;
    Ok(words)
}

/// `W_t`: the cut set at threshold `2^-t`.
pub fn cut_set(spec: &IfsSpec, t: u32, budget: usize) -> Result<CutSet> {
    let threshold = 2f64.powi(-(t as i32));
    let words = collect_words(spec, Stop::Threshold(threshold), budget)?;
    Ok(CutSet {
        threshold,
        level: Some(t),
        words,
    })
}

/// The cut set at an arbitrary threshold.
pub fn cut_set_at(spec: &IfsSpec, threshold: f64, budget: usize) -> Result<CutSet> {
    if !(threshold > 0.0) {
        return domain(format!("threshold must be positive, got {threshold}"));
    }
    let words = collect_words(spec, Stop::Threshold(threshold), budget)?;
    Ok(CutSet {
        threshold,
        level: None,
        words,
    })
}

/// All words of length `depth`.
pub fn words_of_length(spec: &IfsSpec, depth: usize, budget: usize) -> Result<Vec<Word>> {
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    collect_words(spec, Stop::Depth(depth), budget)
}

fn atoms_for(spec: &IfsSpec, stop: Stop, budget: usize, resolution: f64) -> Result<AtomicMeasure> {
    let chart = spec.chart();
    let anchor = match chart {
        Some(c) => c.forward_raw(spec.anchor()),
        None => spec.anchor().to_vec(),
    };
    let mut points: Vec<f64> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    // Overlapping systems can put several words on the same point.
    let mut seen: HashMap<Vec<u64>, usize, std::hash::BuildHasherDefault<std::collections::hash_map::DefaultHasher>> =
        HashMap::default();
    let n = spec.space().ambient_dim();
    walk(spec, stop, budget, |leaf| {
        let image = leaf.base.apply(&anchor);
        let pos = match chart {
            Some(c) => c.inverse_raw(&image),
            None => image,
        };
        let key: Vec<u64> = pos.iter().map(|c| (c + 0.0).to_bits()).collect();
        match seen.get(&key) {
            Some(&id) => masses[id] += leaf.weight,
            None => {
                seen.insert(key, masses.len());
                points.extend_from_slice(&pos);
                masses.push(leaf.weight);
            }
        }
    })
    .ok_or_else(|| over_budget(spec, stop, budget))?;
    debug_assert_eq!(points.len(), masses.len() * n);
    AtomicMeasure::new(spec.space().clone(), points, masses, resolution)
}

/// One atom `S_u(x₀)` of mass `p_u` per word of the cut set at `delta_atom`;
/// every atom is within `delta_atom` of every point of its cylinder.
pub fn attractor_atoms(spec: &IfsSpec, delta_atom: f64, budget: usize) -> Result<AtomicMeasure> {
    if !(delta_atom > 0.0) {
        return domain(format!("atom resolution must be positive, got {delta_atom}"));
    }
    atoms_for(spec, Stop::Threshold(delta_atom), budget, delta_atom)
}

/// One atom per word of length `depth`; the resolution is the largest
/// cylinder diameter bound at that depth.
pub fn attractor_atoms_depth(spec: &IfsSpec, depth: usize, budget: usize) -> Result<AtomicMeasure> {
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    let r_max = spec.maps().iter().map(ConformalMap::ratio).fold(0.0, f64::max);
    let resolution = r_max.powi(depth as i32) * spec.diam_scale();
    atoms_for(spec, Stop::Depth(depth), budget, resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;

    #[test]
    fn cantor_level_two_is_all_length_two_words() {
        let spec = systems::fair_cantor();
        let w = cut_set(&spec, 2, WORD_BUDGET).unwrap();
        assert_eq!(w.len(), 4);
        assert!(w.words.iter().all(|u| u.len() == 2));
    }

    #[test]
    fn level_zero_uses_root_convention() {
        let spec = systems::fair_cantor();
        let w = cut_set(&spec, 0, WORD_BUDGET).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.words.iter().all(|u| u.len() == 1));
    }

    #[test]
    fn equal_ratio_word_lengths_follow_closed_form() {
        let spec = systems::fair_cantor();
        for t in 0..=14u32 {
            let w = cut_set(&spec, t, WORD_BUDGET).unwrap();
            let want = ((t as f64) * 2f64.ln() / 3f64.ln()).ceil().max(1.0) as usize;
            assert!(w.words.iter().all(|u| u.len() == want), "t={t}");
        }
    }

    #[test]
    fn section_property_and_monotone_counts() {
        for spec in [systems::fair_cantor(), systems::biased_cantor(), systems::mixed_ratio()] {
            let mut last = 0;
            for t in 0..=12 {
                let w = cut_set(&spec, t, WORD_BUDGET).unwrap();
                assert!((w.total_weight() - 1.0).abs() < 1e-12);
                assert!(w.is_prefix_free());
                assert!(w.len() >= last);
                last = w.len();
                let thr = w.threshold * (1.0 + STOP_SLACK);
                for u in &w.words {
                    assert!(u.diam_bound() <= thr);
                    if u.len() > 1 {
                        let parent = Word::from_symbols(&spec, &u.symbols()[..u.len() - 1]).unwrap();
                        assert!(parent.diam_bound() > thr);
                    }
                }
            }
        }
    }

    #[test]
    fn refinement_aggregates_by_prefix() {
        let spec = systems::biased_cantor();
        let coarse = cut_set(&spec, 5, WORD_BUDGET).unwrap();
        let fine = cut_set(&spec, 6, WORD_BUDGET).unwrap();
        for u in &coarse.words {
            let sum: f64 = fine
                .words
                .iter()
                .filter(|v| u.is_prefix_of(v))
                .map(Word::weight)
                .sum();
            assert!((sum - u.weight()).abs() < 1e-12);
        }
    }

    #[test]
    fn atoms_at_cantor_resolutions() {
        let spec = systems::fair_cantor();
        let mu = attractor_atoms(&spec, 1.0 / 9.0, WORD_BUDGET).unwrap();
        assert_eq!(mu.len(), 4);
        assert!(mu.masses().iter().all(|&m| (m - 0.25).abs() < 1e-15));
        let mu = attractor_atoms(&spec, 1.0 / 3.0, WORD_BUDGET).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn biased_depth_two_masses() {
        let spec = systems::biased_cantor();
        let mu = attractor_atoms_depth(&spec, 2, WORD_BUDGET).unwrap();
        let mut m = mu.masses().to_vec();
        m.sort_by(f64::total_cmp);
        let want = [1.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 9.0 / 16.0];
        for (a, b) in m.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn depth_twelve_cantor_has_4096_atoms() {
        let spec = systems::fair_cantor();
        let mu = attractor_atoms_depth(&spec, 12, WORD_BUDGET).unwrap();
        assert_eq!(mu.len(), 4096);
        assert!((mu.total_mass() - 1.0).abs() < 1e-12);
        let by_resolution = attractor_atoms(&spec, 3f64.powi(-12), WORD_BUDGET).unwrap();
        assert_eq!(by_resolution.len(), 4096);
    }

    #[test]
    fn budget_overflow_reports_fitting_level() {
        let spec = systems::fair_cantor();
        match cut_set(&spec, 20, 1000) {
            Err(Error::Resource { fits: Some(t), .. }) => {
                assert!(cut_set(&spec, t, 1000).unwrap().len() <= 1000);
                assert!(cut_set(&spec, t + 1, 1000).is_err());
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_atoms_accumulate() {
        // Three half-ratio maps on [0, 1]: the words (1, 0) and (0, 2) both
        // send the anchor 0 to 1/4.
        let third = 1.0 / 3.0;
        let spec = IfsSpec::euclidean(
            vec![
                Similarity::scaling(0.5, vec![0.0]).unwrap(),
                Similarity::scaling(0.5, vec![0.25]).unwrap(),
                Similarity::scaling(0.5, vec![0.5]).unwrap(),
            ],
            vec![third, third, 1.0 - 2.0 * third],
            crate::geometry::Ball::new(vec![0.5], 0.5).unwrap(),
        )
        .unwrap();
        let mu = attractor_atoms_depth(&spec, 2, WORD_BUDGET).unwrap();
        assert_eq!(mu.len(), 7);
        assert!((mu.total_mass() - 1.0).abs() < 1e-15);
    }
}
