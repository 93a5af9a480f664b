//! Predictors as lossless compressors.
//!
//! Two coders are provided: a 32-bit binary arithmetic coder driven by the
//! predictor's distributions, and the exception coder that stores only the
//! positions and values the predictor's best guess got wrong. `evaluate`
//! turns a predictor and a history into a two-part code length, optionally
//! charged with the log of its evaluation cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{History, Symbol};
use crate::prediction::{Distribution, PredictError, SequencePredictor};

const CODE_BITS: u32 = 32;
const TOP: u64 = (1 << CODE_BITS) - 1;
const HALF: u64 = 1 << (CODE_BITS - 1);
const FIRST_QUARTER: u64 = 1 << (CODE_BITS - 2);
const THIRD_QUARTER: u64 = 3 * FIRST_QUARTER;
/// Frequency total used to quantize distributions. Must stay below a quarter
/// of the code range so every symbol keeps a non-empty interval.
const FREQ_TOTAL: u64 = 1 << 29;

const FRAME_VERSION: u32 = 1;
const FRAME_MAX_SYMBOLS: usize = (1 << 20) - 1;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("code is truncated: {needed} bits needed, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("alphabet mismatch: compressor has {compressor} symbols, history has {history}")]
    AlphabetMismatch { compressor: usize, history: usize },
    #[error("time-weighted measure is undefined on an empty history")]
    EmptyHistory,
}

/// Packed bit sequence, most significant bit of each byte first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bitstring {
    bytes: Vec<u8>,
    len: usize,
}

impl Bitstring {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Self {
        assert!(len <= bytes.len() * 8 && bytes.len() == len.div_ceil(8));
        Self { bytes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.len % 8 == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.bytes[i / 8] & (0x80 >> (i % 8)) != 0)
    }

    /// Copy of the first `n` bits.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len);
        let mut bytes = self.bytes[..n.div_ceil(8)].to_vec();
        if n % 8 != 0 {
            *bytes.last_mut().unwrap() &= 0xFFu8 << (8 - n % 8);
        }
        Self { bytes, len: n }
    }
}

/// Integer frequencies for one distribution, summing exactly to `FREQ_TOTAL`.
fn quantize(d: &Distribution) -> Vec<u64> {
    let n = d.len() as u64;
    let spread = (FREQ_TOTAL - n) as f64;
    let mut freqs: Vec<u64> = d
        .probs()
        .iter()
        .map(|p| 1 + (p * spread).floor() as u64)
        .collect();
    let sum: u64 = freqs.iter().sum();
    freqs[d.argmax().value()] += FREQ_TOTAL - sum;
    freqs
}

fn cumulative(freqs: &[u64], s: usize) -> (u64, u64) {
    let lo: u64 = freqs[..s].iter().sum();
    (lo, lo + freqs[s])
}

struct Encoder {
    low: u64,
    high: u64,
    pending: u64,
    out: Bitstring,
}

impl Encoder {
    fn new() -> Self {
        Self {
            low: 0,
            high: TOP,
            pending: 0,
            out: Bitstring::new(),
        }
    }

    fn emit(&mut self, bit: bool) {
        self.out.push(bit);
        for _ in 0..self.pending {
            self.out.push(!bit);
        }
        self.pending = 0;
    }

    fn encode(&mut self, lo: u64, hi: u64) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi / FREQ_TOTAL - 1;
        self.low += range * lo / FREQ_TOTAL;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= FIRST_QUARTER && self.high < THIRD_QUARTER {
                self.pending += 1;
                self.low -= FIRST_QUARTER;
                self.high -= FIRST_QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    fn finish(mut self) -> Bitstring {
        self.pending += 1;
        let bit = self.low >= FIRST_QUARTER;
        self.emit(bit);
        self.out
    }
}

struct Decoder<'a> {
    code: &'a Bitstring,
    low: u64,
    high: u64,
    value: u64,
    read: usize,
    shifts: usize,
}

impl<'a> Decoder<'a> {
    fn new(code: &'a Bitstring) -> Self {
        let mut d = Self {
            code,
            low: 0,
            high: TOP,
            value: 0,
            read: 0,
            shifts: 0,
        };
        for _ in 0..CODE_BITS {
            d.value = (d.value << 1) | d.next_bit();
        }
        d
    }

    fn next_bit(&mut self) -> u64 {
        let b = self.code.get(self.read).unwrap_or(false) as u64;
        self.read += 1;
        b
    }

    fn decode(&mut self, freqs: &[u64]) -> usize {
        let range = self.high - self.low + 1;
        let scaled = ((self.value - self.low + 1) * FREQ_TOTAL - 1) / range;
        let mut cum = 0;
        let mut sym = freqs.len() - 1;
        for (i, f) in freqs.iter().enumerate() {
            if scaled < cum + f {
                sym = i;
                break;
            }
            cum += f;
        }
        let (lo, hi) = (cum, cum + freqs[sym]);
        self.high = self.low + range * hi / FREQ_TOTAL - 1;
        self.low += range * lo / FREQ_TOTAL;
        loop {
            if self.high < HALF {
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= FIRST_QUARTER && self.high < THIRD_QUARTER {
                self.low -= FIRST_QUARTER;
                self.high -= FIRST_QUARTER;
                self.value -= FIRST_QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.next_bit();
            self.shifts += 1;
        }
        sym
    }

    /// Bits the encoder must have produced for the path decoded so far.
    fn bits_needed(&self) -> usize {
        self.shifts + 2
    }
}

/// Arithmetic-codes `seq` with `p` in streaming mode.
pub fn encode<P: SequencePredictor>(p: &P, seq: &[Symbol]) -> Result<Bitstring, CodecError> {
    let mut model = p.clone();
    let mut enc = Encoder::new();
    for i in 0..seq.len() {
        let d = model.predict(&seq[..i])?;
        if seq[i].value() >= d.len() {
            return Err(PredictError::SymbolOutOfRange {
                value: seq[i].0,
                alphabet: d.len(),
            }
            .into());
        }
        let freqs = quantize(&d);
        let (lo, hi) = cumulative(&freqs, seq[i].value());
        enc.encode(lo, hi);
        model.update(seq[i], &seq[..i])?;
    }
    Ok(enc.finish())
}

/// Inverse of [`encode`]; `p` must be the same initial predictor.
pub fn decode<P: SequencePredictor>(p: &P, code: &Bitstring, n: usize) -> Result<Vec<Symbol>, CodecError> {
    let (out, needed) = decode_inner(p, code, n)?;
    if needed > code.len() {
        return Err(CodecError::Truncated {
            needed,
            available: code.len(),
        });
    }
    Ok(out)
}

fn decode_inner<P: SequencePredictor>(
    p: &P,
    code: &Bitstring,
    n: usize,
) -> Result<(Vec<Symbol>, usize), CodecError> {
    let mut model = p.clone();
    let mut dec = Decoder::new(code);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = model.predict(&out[..i])?;
        let s = Symbol(dec.decode(&quantize(&d)) as u16);
        model.update(s, &out[..i])?;
        out.push(s);
    }
    Ok((out, dec.bits_needed()))
}

/// Standalone encoded stream: a 4-byte little-endian header packing
/// version (4 bits), alphabet size minus one (8 bits) and symbol count
/// (20 bits), followed by the code bytes.
pub fn encode_framed<P: SequencePredictor>(p: &P, seq: &[Symbol]) -> Result<Vec<u8>, CodecError> {
    let alphabet = p.alphabet();
    if !(2..=256).contains(&alphabet) {
        return Err(CodecError::Frame(format!("alphabet {alphabet} does not fit the frame header")));
    }
    if seq.len() > FRAME_MAX_SYMBOLS {
        return Err(CodecError::Frame(format!("{} symbols exceed the frame limit", seq.len())));
    }
    let code = encode(p, seq)?;
    let header = (FRAME_VERSION << 28) | (((alphabet - 1) as u32) << 20) | seq.len() as u32;
    let mut out = header.to_le_bytes().to_vec();
    out.extend_from_slice(code.as_bytes());
    Ok(out)
}

pub fn decode_framed<P: SequencePredictor>(p: &P, bytes: &[u8]) -> Result<Vec<Symbol>, CodecError> {
    let header: [u8; 4] = bytes
        .get(..4)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| CodecError::Frame("missing header".into()))?;
    let header = u32::from_le_bytes(header);
    if header >> 28 != FRAME_VERSION {
        return Err(CodecError::Frame(format!("unsupported version {}", header >> 28)));
    }
    let alphabet = ((header >> 20) & 0xFF) as usize + 1;
    if alphabet != p.alphabet() {
        return Err(CodecError::Frame(format!(
            "stream alphabet {alphabet} does not match predictor alphabet {}",
            p.alphabet()
        )));
    }
    let n = (header & 0xF_FFFF) as usize;
    let payload = &bytes[4..];
    let code = Bitstring::from_bytes(payload.to_vec(), payload.len() * 8);
    let (out, needed) = decode_inner(p, &code, n)?;
    if needed > code.len() {
        return Err(CodecError::Truncated {
            needed,
            available: code.len(),
        });
    }
    if code.len() >= needed + 8 {
        return Err(CodecError::Frame("trailing bytes after code".into()));
    }
    Ok(out)
}

/// Which compressor performance measure to report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Code length only.
    #[default]
    #[serde(rename = "c_l")]
    Length,
    /// Code length plus `log2` of the evaluation cost.
    #[serde(rename = "c_l_tau")]
    LengthTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub data_bits: f64,
    pub model_bits: f64,
    pub total_bits: f64,
    /// Number of per-symbol predictor evaluations.
    pub eval_cost: u64,
    pub measure: Measure,
}

impl CompressionReport {
    pub fn from_parts(
        data_bits: f64,
        model_bits: f64,
        eval_cost: u64,
        measure: Measure,
    ) -> Result<Self, CodecError> {
        let total_bits = match measure {
            Measure::Length => model_bits + data_bits,
            Measure::LengthTime => {
                if eval_cost == 0 {
                    return Err(CodecError::EmptyHistory);
                }
                model_bits + data_bits + (eval_cost as f64).log2()
            }
        };
        Ok(Self {
            data_bits,
            model_bits,
            total_bits,
            eval_cost,
            measure,
        })
    }
}

/// Code length of a sequence together with the work spent producing it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeLength {
    pub bits: f64,
    pub eval_cost: u64,
}

/// A compressor whose performance can be measured on a symbol sequence.
///
/// Every [`SequencePredictor`] is one: its data bits are the ideal
/// arithmetic-code length of the sequence under streaming prediction, which
/// [`encode`] achieves to within a few bits.
pub trait Compressor {
    fn alphabet(&self) -> usize;
    fn model_bits(&self) -> f64;
    fn code_length(&self, seq: &[Symbol]) -> Result<CodeLength, CodecError>;
}

impl<P: SequencePredictor> Compressor for P {
    fn alphabet(&self) -> usize {
        SequencePredictor::alphabet(self)
    }

    fn model_bits(&self) -> f64 {
        SequencePredictor::model_bits(self)
    }

    fn code_length(&self, seq: &[Symbol]) -> Result<CodeLength, CodecError> {
        let mut model = self.clone();
        let mut bits = 0.0;
        for i in 0..seq.len() {
            bits -= model.prob(seq[i], &seq[..i])?.log2();
            model.update(seq[i], &seq[..i])?;
        }
        Ok(CodeLength {
            bits,
            eval_cost: seq.len() as u64,
        })
    }
}

/// Which part of the history a compressor is asked to explain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    #[default]
    Observations,
    /// Joint symbol `x * act_alphabet + y` per step.
    ObservationsAndActions,
}

impl Channel {
    pub fn alphabet(self, h: &History) -> usize {
        match self {
            Channel::Observations => h.obs_alphabet() as usize,
            Channel::ObservationsAndActions => h.obs_alphabet() as usize * h.act_alphabet() as usize,
        }
    }

    pub fn extract(self, h: &History) -> Vec<Symbol> {
        match self {
            Channel::Observations => h.observations(),
            Channel::ObservationsAndActions => {
                let act = h.act_alphabet();
                h.iter().map(|s| Symbol(s.x.0 * act + s.y.0)).collect()
            }
        }
    }
}

/// Compressor performance on the observation channel of `h`.
pub fn evaluate<C: Compressor>(c: &C, h: &History, measure: Measure) -> Result<CompressionReport, CodecError> {
    evaluate_channel(c, h, measure, Channel::Observations)
}

pub fn evaluate_channel<C: Compressor>(
    c: &C,
    h: &History,
    measure: Measure,
    channel: Channel,
) -> Result<CompressionReport, CodecError> {
    let alphabet = channel.alphabet(h);
    if c.alphabet() != alphabet {
        return Err(CodecError::AlphabetMismatch {
            compressor: c.alphabet(),
            history: alphabet,
        });
    }
    evaluate_sequence(c, &channel.extract(h), measure)
}

pub fn evaluate_sequence<C: Compressor>(
    c: &C,
    seq: &[Symbol],
    measure: Measure,
) -> Result<CompressionReport, CodecError> {
    if measure == Measure::LengthTime && seq.is_empty() {
        return Err(CodecError::EmptyHistory);
    }
    let len = c.code_length(seq)?;
    CompressionReport::from_parts(len.bits, c.model_bits(), len.eval_cost, measure)
}

/// Positions and true values of every symbol the predictor's best guess missed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionCode {
    pub len: usize,
    pub exceptions: Vec<(usize, Symbol)>,
    pub report: CompressionReport,
}

/// Exception coding: each miss costs `log2(T) + log2(alphabet)` bits.
pub fn exception_encode<P: SequencePredictor>(p: &P, seq: &[Symbol]) -> Result<ExceptionCode, CodecError> {
    let alphabet = p.alphabet();
    let mut model = p.clone();
    let mut exceptions = Vec::new();
    for i in 0..seq.len() {
        let guess = model.predict(&seq[..i])?.argmax();
        if seq[i].value() >= alphabet {
            return Err(PredictError::SymbolOutOfRange {
                value: seq[i].0,
                alphabet,
            }
            .into());
        }
        if guess != seq[i] {
            exceptions.push((i, seq[i]));
        }
        model.update(seq[i], &seq[..i])?;
    }
    let per_miss = if seq.is_empty() {
        0.0
    } else {
        (seq.len() as f64).log2() + (alphabet as f64).log2()
    };
    let report = CompressionReport::from_parts(
        exceptions.len() as f64 * per_miss,
        p.model_bits(),
        seq.len() as u64,
        Measure::Length,
    )?;
    Ok(ExceptionCode {
        len: seq.len(),
        exceptions,
        report,
    })
}

/// Rebuilds the sequence by replaying argmax predictions and patching misses.
pub fn exception_decode<P: SequencePredictor>(p: &P, code: &ExceptionCode) -> Result<Vec<Symbol>, CodecError> {
    let mut model = p.clone();
    let mut out = Vec::with_capacity(code.len);
    let mut patches = code.exceptions.iter().peekable();
    for i in 0..code.len {
        let guess = model.predict(&out)?.argmax();
        let s = match patches.peek() {
            Some((pos, s)) if *pos == i => {
                patches.next();
                *s
            }
            _ => guess,
        };
        model.update(s, &out)?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::{symbols, RewardPair};
    use crate::prediction::{sequence_log_loss, Predictor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_round_trip(p: &Predictor, seq: &[Symbol]) {
        let code = encode(p, seq).unwrap();
        assert_eq!(decode(p, &code, seq.len()).unwrap(), seq);
        let ideal = sequence_log_loss(p, seq).unwrap();
        assert!(
            code.len() as f64 <= ideal + 8.0,
            "{} bits vs ideal {ideal}",
            code.len()
        );
    }

    #[test]
    fn uniform_0101() {
        let p = Predictor::uniform(2);
        let seq = symbols(&[0, 1, 0, 1]);
        let code = encode(&p, &seq).unwrap();
        assert!(code.len() <= 12);
        assert_eq!(decode(&p, &code, 4).unwrap(), seq);
    }

    #[test]
    fn laplace_thousand_zeros() {
        let p = Predictor::laplace(2, 0).unwrap();
        let seq = vec![Symbol(0); 1000];
        let code = encode(&p, &seq).unwrap();
        assert!((code.len() as f64) <= 1001f64.log2() + 8.0);
        assert_round_trip(&p, &seq);
    }

    #[test]
    fn empty_sequence() {
        let p = Predictor::laplace(4, 1).unwrap();
        let code = encode(&p, &[]).unwrap();
        assert!(code.len() <= 8);
        assert!(decode(&p, &code, 0).unwrap().is_empty());
    }

    #[test]
    fn exhaustive_binary_length_10() {
        let p = Predictor::uniform(2);
        for v in 0u32..1024 {
            let seq: Vec<Symbol> = (0..10).map(|i| Symbol(((v >> i) & 1) as u16)).collect();
            assert_round_trip(&p, &seq);
        }
    }

    #[test]
    fn random_16ary_order1() {
        let p = Predictor::laplace(16, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let seq: Vec<Symbol> = (0..1000).map(|_| Symbol(rng.gen_range(0..16))).collect();
            assert_round_trip(&p, &seq);
        }
    }

    #[test]
    fn skewed_point_mass_round_trip() {
        let p = Predictor::point_mass(4, Symbol(2));
        let seq = symbols(&[2, 2, 0, 2, 3, 2, 2, 1]);
        assert_round_trip(&p, &seq);
    }

    #[test]
    fn truncation_is_detected() {
        let p = Predictor::laplace(16, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seq: Vec<Symbol> = (0..300).map(|_| Symbol(rng.gen_range(0..16))).collect();
        let code = encode(&p, &seq).unwrap();
        for cut in [1, 2, 8, 40, code.len() / 2] {
            let short = code.truncated(code.len() - cut);
            assert!(
                matches!(decode(&p, &short, seq.len()), Err(CodecError::Truncated { .. })),
                "cut {cut} not detected"
            );
        }
    }

    #[test]
    fn framed_stream_round_trip_and_truncation() {
        let p = Predictor::laplace(16, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq: Vec<Symbol> = (0..500).map(|_| Symbol(rng.gen_range(0..16))).collect();
        let bytes = encode_framed(&p, &seq).unwrap();
        assert_eq!(u32::from_le_bytes(bytes[..4].try_into().unwrap()) >> 28, 1);
        assert_eq!(decode_framed(&p, &bytes).unwrap(), seq);
        assert!(decode_framed(&p, &bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_framed(&p, &extra).is_err());
        assert!(decode_framed(&Predictor::laplace(8, 2).unwrap(), &bytes).is_err());
    }

    #[test]
    fn exception_examples() {
        let always0 = Predictor::point_mass(2, Symbol(0));
        let r = exception_encode(&always0, &symbols(&[0, 0, 0, 0])).unwrap();
        assert!(r.exceptions.is_empty());
        assert_eq!(r.report.data_bits, 0.0);

        let r = exception_encode(&always0, &symbols(&[0, 0, 0, 1])).unwrap();
        assert_eq!(r.exceptions, vec![(3, Symbol(1))]);
        assert_eq!(r.report.data_bits, 3.0);
        assert_eq!(r.report.model_bits, always0.model_bits());

        let u = Predictor::uniform(2);
        let seq = symbols(&[1, 1, 1, 1]);
        let r = exception_encode(&u, &seq).unwrap();
        assert_eq!(r.exceptions.len(), 4);
        assert_eq!(r.report.data_bits, 12.0);
        assert_eq!(exception_decode(&u, &r).unwrap(), seq);
    }

    #[test]
    fn exception_replay_with_learning_predictor() {
        let p = Predictor::laplace(4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let seq: Vec<Symbol> = (0..200)
                .map(|i| {
                    if rng.gen_bool(0.1) {
                        Symbol(rng.gen_range(0..4))
                    } else {
                        Symbol((i % 3) as u16)
                    }
                })
                .collect();
            let code = exception_encode(&p, &seq).unwrap();
            assert_eq!(exception_decode(&p, &code).unwrap(), seq);
        }
    }

    #[test]
    fn measure_arithmetic() {
        let r = CompressionReport::from_parts(0.0, 100.0, 1024, Measure::LengthTime).unwrap();
        assert_eq!(r.total_bits, 110.0);
        let r = CompressionReport::from_parts(0.0, 100.0, 1024, Measure::Length).unwrap();
        assert_eq!(r.total_bits, 100.0);
        assert!(CompressionReport::from_parts(0.0, 1.0, 0, Measure::LengthTime).is_err());
    }

    #[test]
    fn evaluate_uniform_on_64_binary_steps() {
        let mut h = History::new(2, 2).unwrap();
        for i in 0..64u16 {
            h.append(Symbol(i % 2), Symbol(0), RewardPair::default()).unwrap();
        }
        let p = Predictor::uniform(2);
        let r = evaluate(&p, &h, Measure::Length).unwrap();
        assert_eq!(r.data_bits, 64.0);
        assert_eq!(r.total_bits, 64.0 + p.model_bits());
        assert_eq!(r.eval_cost, 64);
    }

    #[test]
    fn evaluate_rejects_empty_history_with_time_measure() {
        let h = History::new(2, 2).unwrap();
        let p = Predictor::uniform(2);
        assert_eq!(evaluate(&p, &h, Measure::LengthTime), Err(CodecError::EmptyHistory));
        assert!(evaluate(&p, &h, Measure::Length).is_ok());
        assert!(matches!(
            evaluate(&Predictor::uniform(4), &h, Measure::Length),
            Err(CodecError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn joint_channel_alphabet() {
        let mut h = History::new(2, 3).unwrap();
        h.append(Symbol(1), Symbol(2), RewardPair::default()).unwrap();
        assert_eq!(Channel::ObservationsAndActions.extract(&h), vec![Symbol(5)]);
        let p = Predictor::uniform(6);
        let r = evaluate_channel(&p, &h, Measure::Length, Channel::ObservationsAndActions).unwrap();
        assert!((r.data_bits - 6f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn eval_cost_is_linear_in_length() {
        let p = Predictor::laplace(4, 1).unwrap();
        for n in [0usize, 1, 17, 256] {
            let seq = vec![Symbol(1); n];
            assert_eq!(p.code_length(&seq).unwrap().eval_cost, n as u64);
        }
    }
}
