use super::map::ConformalMap;
use super::spec::IfsSpec;
use crate::error::{domain, Result};

/// A finite word over the alphabet `0..ℓ` with its cached composed map
/// `S_u = S_{u_1} ∘ ... ∘ S_{u_k}`, weight `p_u` and cylinder diameter bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    symbols: Vec<usize>,
    map: ConformalMap,
    weight: f64,
    ratio: f64,
    diam_bound: f64,
}

impl Word {
    /// The empty word; its cylinder is all of `K`.
    pub fn root(spec: &IfsSpec) -> Word {
        Word {
            symbols: Vec::new(),
            map: spec.maps()[0].identity_like(),
            weight: 1.0,
            ratio: 1.0,
            diam_bound: spec.diameter(),
        }
    }

    pub(crate) fn from_parts(
        symbols: Vec<usize>,
        map: ConformalMap,
        weight: f64,
        ratio: f64,
        diam_bound: f64,
    ) -> Word {
        Word {
            symbols,
            map,
            weight,
            ratio,
            diam_bound,
        }
    }

    /// Builds a word symbol by symbol.
    pub fn from_symbols(spec: &IfsSpec, symbols: &[usize]) -> Result<Word> {
        symbols
            .iter()
            .try_fold(Word::root(spec), |w, &i| w.compose(spec, i))
    }

    /// The word `u i`.
    pub fn compose(&self, spec: &IfsSpec, i: usize) -> Result<Word> {
        let Some(next) = spec.maps().get(i) else {
            return domain(format!("symbol {i} out of range 0..{}", spec.len()));
        };
        let mut symbols = self.symbols.clone();
        symbols.push(i);
        let ratio = self.ratio * next.ratio();
        Ok(Word {
            symbols,
            map: self.map.compose(next)?,
            weight: self.weight * spec.probs()[i],
            ratio,
            diam_bound: ratio * spec.diam_scale(),
        })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn map(&self) -> &ConformalMap {
        &self.map
    }

    /// `p_u`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Product of the base similarity ratios.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Upper bound on `diam(K_u)`, exact for Euclidean similarities.
    pub fn diam_bound(&self) -> f64 {
        self.diam_bound
    }

    /// `S_u(anchor)`, the representative point of the cylinder.
    pub fn representative(&self, spec: &IfsSpec) -> Vec<f64> {
        self.map.apply(spec.anchor())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.symbols.starts_with(&self.symbols)
    }
}
