//! Adaptive next-symbol predictors.
//!
//! The shipped model class is deliberately small: uniform, point-mass,
//! add-constant (Laplace) context models of fixed order, and finite Bayesian
//! mixtures of those. Everything is a value type; the size of the canonical
//! serialization stands in for the description length of the model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::Symbol;

/// Smallest probability any shipped predictor assigns, and the floor applied
/// to mixture weights after each posterior update.
pub const PROB_FLOOR: f64 = 1.0 / (1u64 << 40) as f64;

const SER_MAGIC: &[u8; 4] = b"CPRD";
const SER_VERSION: u8 = 1;
const MAX_TABLE_ENTRIES: usize = 1 << 24;

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("symbol {value} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { value: u16, alphabet: usize },
    #[error("alphabet mismatch: predictor has {expected} symbols, got {found}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("invalid predictor: {0}")]
    Invalid(String),
    #[error("cannot deserialize predictor: {0}")]
    Decode(String),
}

/// A strictly positive probability vector over an alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, PredictError> {
        if probs.is_empty() {
            return Err(PredictError::Invalid("empty distribution".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(PredictError::Invalid(format!("non-positive probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(PredictError::Invalid(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(alphabet: usize) -> Self {
        Self {
            probs: vec![1.0 / alphabet as f64; alphabet],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, s: Symbol) -> f64 {
        self.probs[s.value()]
    }

    /// Most probable symbol; ties go to the lowest index.
    pub fn argmax(&self) -> Symbol {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        Symbol(best as u16)
    }
}

/// Anything that can play the predictor role inside a compressor.
pub trait SequencePredictor: Clone + Send + Sync {
    fn alphabet(&self) -> usize;

    /// Distribution of the next symbol given everything observed so far.
    fn predict(&self, context: &[Symbol]) -> Result<Distribution, PredictError>;

    /// Probability of `observed` next; same value as `predict(context)` gives.
    fn prob(&self, observed: Symbol, context: &[Symbol]) -> Result<f64, PredictError> {
        let d = self.predict(context)?;
        check_symbol(observed, d.len())?;
        Ok(d.prob(observed))
    }

    /// Learn from `observed`, which followed `context`.
    fn update(&mut self, observed: Symbol, context: &[Symbol]) -> Result<(), PredictError>;

    /// Description length of the current model in bits.
    fn model_bits(&self) -> f64;
}

fn check_symbol(s: Symbol, alphabet: usize) -> Result<(), PredictError> {
    if s.value() < alphabet {
        Ok(())
    } else {
        Err(PredictError::SymbolOutOfRange {
            value: s.0,
            alphabet,
        })
    }
}

/// Count-based context model of fixed order with additive smoothing.
///
/// Contexts shorter than `order` are left-padded with symbol 0 so the count
/// table always has `alphabet^(order+1)` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Laplace {
    alphabet: usize,
    order: usize,
    smoothing: f64,
    counts: Vec<u64>,
}

impl Laplace {
    pub fn new(alphabet: usize, order: usize, smoothing: f64) -> Result<Self, PredictError> {
        if alphabet < 2 || alphabet > u16::MAX as usize {
            return Err(PredictError::Invalid(format!("alphabet {alphabet} out of range")));
        }
        if !(smoothing.is_finite() && smoothing > 0.0) {
            return Err(PredictError::Invalid(format!("smoothing must be > 0, got {smoothing}")));
        }
        let entries = (0..=order)
            .try_fold(1usize, |acc, _| acc.checked_mul(alphabet))
            .filter(|n| *n <= MAX_TABLE_ENTRIES)
            .ok_or_else(|| {
                PredictError::Invalid(format!("order {order} over {alphabet} symbols is too large"))
            })?;
        Ok(Self {
            alphabet,
            order,
            smoothing,
            counts: vec![0; entries],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    fn row(&self, context: &[Symbol]) -> Result<usize, PredictError> {
        let mut idx = 0usize;
        let start = context.len().saturating_sub(self.order);
        let pad = self.order - (context.len() - start);
        for _ in 0..pad {
            idx *= self.alphabet;
        }
        for &s in &context[start..] {
            check_symbol(s, self.alphabet)?;
            idx = idx * self.alphabet + s.value();
        }
        Ok(idx * self.alphabet)
    }

    /// Counts for the row selected by `context`.
    pub fn counts(&self, context: &[Symbol]) -> Result<&[u64], PredictError> {
        let r = self.row(context)?;
        Ok(&self.counts[r..r + self.alphabet])
    }

    fn dist_from_row(&self, row: usize) -> Distribution {
        let counts = &self.counts[row..row + self.alphabet];
        let total: u64 = counts.iter().sum();
        let denom = total as f64 + self.smoothing * self.alphabet as f64;
        Distribution {
            probs: counts
                .iter()
                .map(|&c| (c as f64 + self.smoothing) / denom)
                .collect(),
        }
    }

    fn prob_from_row(&self, row: usize, s: Symbol) -> f64 {
        let counts = &self.counts[row..row + self.alphabet];
        let total: u64 = counts.iter().sum();
        (counts[s.value()] as f64 + self.smoothing)
            / (total as f64 + self.smoothing * self.alphabet as f64)
    }
}

/// Finite Bayesian mixture `xi(q) = sum_i w_i mu_i(q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    alphabet: usize,
    components: Vec<Predictor>,
    prior: Vec<f64>,
    posterior: Vec<f64>,
}

impl Mixture {
    pub fn new(components: Vec<Predictor>, prior: Vec<f64>) -> Result<Self, PredictError> {
        if components.is_empty() || components.len() != prior.len() {
            return Err(PredictError::Invalid(
                "mixture needs one prior weight per component".into(),
            ));
        }
        let alphabet = components[0].alphabet();
        if let Some(c) = components.iter().find(|c| c.alphabet() != alphabet) {
            return Err(PredictError::AlphabetMismatch {
                expected: alphabet,
                found: c.alphabet(),
            });
        }
        if prior.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(PredictError::Invalid("prior weights must be positive".into()));
        }
        let sum: f64 = prior.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(PredictError::Invalid(format!("prior weights sum to {sum} > 1")));
        }
        let posterior = prior.iter().map(|w| w / sum).collect();
        Ok(Self {
            alphabet,
            components,
            prior,
            posterior,
        })
    }

    pub fn components(&self) -> &[Predictor] {
        &self.components
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predictor {
    Uniform { alphabet: usize },
    /// Puts all but `PROB_FLOOR` of each other symbol's mass on `symbol`.
    PointMass { alphabet: usize, symbol: u16 },
    Laplace(Laplace),
    Mixture(Mixture),
}

impl Predictor {
    pub fn uniform(alphabet: usize) -> Self {
        Predictor::Uniform { alphabet }
    }

    pub fn point_mass(alphabet: usize, symbol: Symbol) -> Self {
        Predictor::PointMass {
            alphabet,
            symbol: symbol.0,
        }
    }

    pub fn laplace(alphabet: usize, order: usize) -> Result<Self, PredictError> {
        Laplace::new(alphabet, order, 1.0).map(Predictor::Laplace)
    }

    pub fn mixture(components: Vec<Predictor>, prior: Vec<f64>) -> Result<Self, PredictError> {
        Mixture::new(components, prior).map(Predictor::Mixture)
    }

    pub fn alphabet(&self) -> usize {
        match self {
            Predictor::Uniform { alphabet } | Predictor::PointMass { alphabet, .. } => *alphabet,
            Predictor::Laplace(l) => l.alphabet,
            Predictor::Mixture(m) => m.alphabet,
        }
    }

    /// Eight times the byte length of the canonical serialization.
    pub fn model_bits(&self) -> f64 {
        8.0 * self.encoded_len() as f64
    }

    /// Same kind and shape, with all learned state discarded.
    pub fn fresh(&self) -> Self {
        match self {
            Predictor::Laplace(l) => Predictor::Laplace(Laplace {
                counts: vec![0; l.counts.len()],
                ..l.clone()
            }),
            Predictor::Mixture(m) => Predictor::Mixture(Mixture {
                alphabet: m.alphabet,
                components: m.components.iter().map(Predictor::fresh).collect(),
                prior: m.prior.clone(),
                posterior: {
                    let sum: f64 = m.prior.iter().sum();
                    m.prior.iter().map(|w| w / sum).collect()
                },
            }),
            other => other.clone(),
        }
    }

    fn prob_of(&self, observed: Symbol, context: &[Symbol]) -> Result<f64, PredictError> {
        match self {
            Predictor::Laplace(l) => {
                let row = l.row(context)?;
                Ok(l.prob_from_row(row, observed))
            }
            _ => Ok(self.predict(context)?.prob(observed)),
        }
    }

    /// Canonical little-endian serialization; equal predictors give equal bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_into(&mut out);
        out
    }

    pub fn encoded_len(&self) -> usize {
        8 + match self {
            Predictor::Uniform { .. } => 0,
            Predictor::PointMass { .. } => 2,
            Predictor::Laplace(l) => {
                let smoothing = if l.smoothing == 1.0 { 1 } else { 9 };
                1 + smoothing + l.counts.iter().map(|&c| varint_len(c)).sum::<usize>()
            }
            Predictor::Mixture(m) => {
                4 + 16 * m.components.len()
                    + m.components.iter().map(|c| 4 + c.encoded_len()).sum::<usize>()
            }
        }
    }

    fn write_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(SER_MAGIC);
        out.push(SER_VERSION);
        let kind = match self {
            Predictor::Uniform { .. } => 0u8,
            Predictor::PointMass { .. } => 1,
            Predictor::Laplace(_) => 2,
            Predictor::Mixture(_) => 3,
        };
        out.push(kind);
        out.extend_from_slice(&(self.alphabet() as u16).to_le_bytes());
        match self {
            Predictor::Uniform { .. } => {}
            Predictor::PointMass { symbol, .. } => out.extend_from_slice(&symbol.to_le_bytes()),
            Predictor::Laplace(l) => {
                out.push(l.order as u8);
                // Add-one smoothing is the common case and gets a one-byte tag.
                if l.smoothing == 1.0 {
                    out.push(0);
                } else {
                    out.push(1);
                    out.extend_from_slice(&l.smoothing.to_le_bytes());
                }
                for &c in &l.counts {
                    write_varint(out, c);
                }
            }
            Predictor::Mixture(m) => {
                out.extend_from_slice(&(m.components.len() as u32).to_le_bytes());
                for w in m.prior.iter().chain(&m.posterior) {
                    out.extend_from_slice(&w.to_le_bytes());
                }
                for c in &m.components {
                    out.extend_from_slice(&(c.encoded_len() as u32).to_le_bytes());
                    c.write_into(out);
                }
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PredictError> {
        let mut r = ByteReader { bytes, pos: 0 };
        let p = Self::read(&mut r)?;
        if r.pos != bytes.len() {
            return Err(PredictError::Decode(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(p)
    }

    fn read(r: &mut ByteReader<'_>) -> Result<Self, PredictError> {
        if r.take(4)? != SER_MAGIC {
            return Err(PredictError::Decode("bad magic".into()));
        }
        let version = r.u8()?;
        if version != SER_VERSION {
            return Err(PredictError::Decode(format!("unsupported version {version}")));
        }
        let kind = r.u8()?;
        let alphabet = r.u16()? as usize;
        match kind {
            0 => Ok(Predictor::Uniform { alphabet }),
            1 => {
                let symbol = r.u16()?;
                if symbol as usize >= alphabet {
                    return Err(PredictError::Decode("point-mass symbol out of range".into()));
                }
                Ok(Predictor::PointMass { alphabet, symbol })
            }
            2 => {
                let order = r.u8()? as usize;
                let smoothing = match r.u8()? {
                    0 => 1.0,
                    1 => match r.f64()? {
                        s if s == 1.0 => return Err(PredictError::Decode("non-canonical smoothing".into())),
                        s => s,
                    },
                    t => return Err(PredictError::Decode(format!("bad smoothing tag {t}"))),
                };
                let mut l = Laplace::new(alphabet, order, smoothing)
                    .map_err(|e| PredictError::Decode(e.to_string()))?;
                for c in l.counts.iter_mut() {
                    *c = r.varint()?;
                }
                Ok(Predictor::Laplace(l))
            }
            3 => {
                let n = r.u32()? as usize;
                let prior = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                let posterior = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                let mut components = Vec::with_capacity(n);
                for _ in 0..n {
                    let len = r.u32()? as usize;
                    let sub = r.take(len)?;
                    components.push(Predictor::from_bytes(sub)?);
                }
                let mut m =
                    Mixture::new(components, prior).map_err(|e| PredictError::Decode(e.to_string()))?;
                if m.alphabet != alphabet {
                    return Err(PredictError::Decode("mixture alphabet mismatch".into()));
                }
                m.posterior = posterior;
                Ok(Predictor::Mixture(m))
            }
            k => Err(PredictError::Decode(format!("unknown predictor kind {k}"))),
        }
    }
}

fn varint_len(v: u64) -> usize {
    let bits = 64 - v.leading_zeros() as usize;
    bits.max(1).div_ceil(7)
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PredictError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| PredictError::Decode("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, PredictError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, PredictError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, PredictError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    /// Unsigned LEB128; rejects overlong encodings so decoding stays canonical.
    fn varint(&mut self) -> Result<u64, PredictError> {
        let mut value = 0u64;
        for i in 0..10 {
            let b = self.u8()?;
            let chunk = u64::from(b & 0x7f);
            if i == 9 && chunk > 1 {
                return Err(PredictError::Decode("varint overflow".into()));
            }
            value |= chunk << (7 * i);
            if b & 0x80 == 0 {
                if i > 0 && b == 0 {
                    return Err(PredictError::Decode("overlong varint".into()));
                }
                return Ok(value);
            }
        }
        Err(PredictError::Decode("varint overflow".into()))
    }
    fn f64(&mut self) -> Result<f64, PredictError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl SequencePredictor for Predictor {
    fn alphabet(&self) -> usize {
        Predictor::alphabet(self)
    }

    fn prob(&self, observed: Symbol, context: &[Symbol]) -> Result<f64, PredictError> {
        check_symbol(observed, self.alphabet())?;
        self.prob_of(observed, context)
    }

    fn predict(&self, context: &[Symbol]) -> Result<Distribution, PredictError> {
        match self {
            Predictor::Uniform { alphabet } => {
                if let Some(&s) = context.last() {
                    check_symbol(s, *alphabet)?;
                }
                Ok(Distribution::uniform(*alphabet))
            }
            Predictor::PointMass { alphabet, symbol } => {
                if let Some(&s) = context.last() {
                    check_symbol(s, *alphabet)?;
                }
                let mut probs = vec![PROB_FLOOR; *alphabet];
                probs[*symbol as usize] = 1.0 - PROB_FLOOR * (*alphabet - 1) as f64;
                Ok(Distribution { probs })
            }
            Predictor::Laplace(l) => {
                let row = l.row(context)?;
                Ok(l.dist_from_row(row))
            }
            Predictor::Mixture(m) => {
                let mut probs = vec![0.0; m.alphabet];
                for (c, w) in m.components.iter().zip(&m.posterior) {
                    let d = c.predict(context)?;
                    for (acc, p) in probs.iter_mut().zip(d.probs()) {
                        *acc += w * p;
                    }
                }
                Ok(Distribution { probs })
            }
        }
    }

    fn update(&mut self, observed: Symbol, context: &[Symbol]) -> Result<(), PredictError> {
        check_symbol(observed, self.alphabet())?;
        match self {
            Predictor::Uniform { .. } | Predictor::PointMass { .. } => Ok(()),
            Predictor::Laplace(l) => {
                let row = l.row(context)?;
                l.counts[row + observed.value()] += 1;
                Ok(())
            }
            Predictor::Mixture(m) => {
                for (w, c) in m.posterior.iter_mut().zip(&m.components) {
                    *w *= c.prob_of(observed, context)?;
                }
                let sum: f64 = m.posterior.iter().sum();
                for w in m.posterior.iter_mut() {
                    *w = (*w / sum).max(PROB_FLOOR);
                }
                let sum: f64 = m.posterior.iter().sum();
                for w in m.posterior.iter_mut() {
                    *w /= sum;
                }
                for c in m.components.iter_mut() {
                    c.update(observed, context)?;
                }
                Ok(())
            }
        }
    }

    fn model_bits(&self) -> f64 {
        Predictor::model_bits(self)
    }
}

/// Ideal code length in bits of `seq` under `p` used in streaming mode
/// (predict, then learn, per symbol). `p` itself is left untouched.
pub fn sequence_log_loss<P: SequencePredictor>(p: &P, seq: &[Symbol]) -> Result<f64, PredictError> {
    let mut model = p.clone();
    let mut bits = 0.0;
    for i in 0..seq.len() {
        bits -= model.prob(seq[i], &seq[..i])?.log2();
        model.update(seq[i], &seq[..i])?;
    }
    Ok(bits)
}

/// Runs `p` through `seq` once, returning the trained predictor.
pub fn train<P: SequencePredictor>(p: &P, seq: &[Symbol]) -> Result<P, PredictError> {
    let mut model = p.clone();
    for i in 0..seq.len() {
        model.update(seq[i], &seq[..i])?;
    }
    Ok(model)
}

/// Declarative predictor description used in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictorSpec {
    Uniform,
    PointMass {
        symbol: u16,
    },
    Laplace {
        #[serde(default)]
        order: usize,
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    Mixture {
        components: Vec<PredictorSpec>,
        /// Prior weights; equal weights summing to 1 when omitted.
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

fn default_smoothing() -> f64 {
    1.0
}

impl PredictorSpec {
    pub fn build(&self, alphabet: usize) -> Result<Predictor, PredictError> {
        if alphabet < 2 {
            return Err(PredictError::Invalid(format!("alphabet {alphabet} < 2")));
        }
        match self {
            PredictorSpec::Uniform => Ok(Predictor::uniform(alphabet)),
            PredictorSpec::PointMass { symbol } => {
                check_symbol(Symbol(*symbol), alphabet)?;
                Ok(Predictor::point_mass(alphabet, Symbol(*symbol)))
            }
            PredictorSpec::Laplace { order, smoothing } => {
                Laplace::new(alphabet, *order, *smoothing).map(Predictor::Laplace)
            }
            PredictorSpec::Mixture {
                components,
                weights,
            } => {
                let comps = components
                    .iter()
                    .map(|c| c.build(alphabet))
                    .collect::<Result<Vec<_>, _>>()?;
                let weights = weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / comps.len().max(1) as f64; comps.len()]);
                Predictor::mixture(comps, weights)
            }
        }
    }
}
