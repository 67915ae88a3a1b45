//! Monte Carlo estimators of `P(sum_i a_i X_i > x)` over the truncated support.
//!
//! Two estimators share one execution engine:
//!
//! * [`naive_mc`] averages the indicator of the event.
//! * [`largest_jump_mc`] conditions on all terms but one and integrates the
//!   remaining term out through the exact tail, once per index:
//!   `sum_i P(X_i > max(M_{-i}, x - S_{-i}) / a_i)`.
//!
//! Sample indices are cut into fixed-size blocks, each with its own substream
//! of the seed. Block statistics are merged in block order by a pairwise tree,
//! so the result does not depend on how many workers ran the blocks.

use std::ops::Range;
use std::time::Instant;

use crate::dist::StretchedExpParams;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::weights::WeightVector;

/// Replications per block.
pub const BLOCK_SIZE: u64 = 4096;

/// Confidence level of the one-sided bound reported when no hit was seen.
pub const ZERO_HIT_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RareEventEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub samples: u64,
    /// `ln p_hat`, `-inf` when nothing was observed.
    pub log_p_hat: f64,
    /// `a_max^r * log_p_hat`.
    pub normalized_rate: f64,
    /// `stderr / p_hat`; infinite when `p_hat == 0`.
    pub relative_error: f64,
    pub elapsed_seconds: f64,
    /// Exact one-sided upper confidence bound `1 - 0.05^(1/N)`, only when
    /// `p_hat == 0`.
    pub zero_upper_bound: Option<f64>,
    /// Certified bound on the weight mass left out of the truncated support.
    pub omitted_weight: f64,
}

/// A contiguous run of sample indices with its own substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub start: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamPlan {
    pub seed: u64,
    pub samples: u64,
    pub blocks: Vec<Block>,
    /// Contiguous ranges into `blocks`, one per worker that has work.
    pub assignments: Vec<Range<usize>>,
}

impl StreamPlan {
    pub fn stream(&self, block: &Block) -> Stream {
        Stream::new(self.seed, block.index)
    }
}

/// Split `samples` into [`BLOCK_SIZE`] blocks and hand each worker a
/// contiguous range of them. Block layout depends only on `samples`.
pub fn stream_plan(seed: u64, workers: usize, samples: u64) -> Result<StreamPlan> {
    if workers == 0 {
        return Err(Error::domain("worker count must be at least 1"));
    }
    let n_blocks = samples.div_ceil(BLOCK_SIZE);
    let blocks: Vec<Block> = (0..n_blocks)
        .map(|b| {
            let start = b * BLOCK_SIZE;
            Block {
                index: b,
                start,
                len: BLOCK_SIZE.min(samples - start),
            }
        })
        .collect();
    let used = workers.min(blocks.len()).max(1);
    let base = blocks.len() / used;
    let extra = blocks.len() % used;
    let mut assignments = Vec::with_capacity(used);
    let mut at = 0;
    for w in 0..used {
        let take = base + usize::from(w < extra);
        assignments.push(at..at + take);
        at += take;
    }
    Ok(StreamPlan {
        seed,
        samples,
        blocks,
        assignments,
    })
}

/// Plain estimator: fraction of replications with `S > x`.
pub fn naive_mc(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<RareEventEstimate> {
    run(Kind::Naive, wv, x, params, samples, seed, workers)
}

/// Conditional largest-jump estimator.
pub fn largest_jump_mc(
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<RareEventEstimate> {
    run(Kind::LargestJump, wv, x, params, samples, seed, workers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Naive,
    LargestJump,
}

fn run(
    kind: Kind,
    wv: &WeightVector,
    x: f64,
    params: &StretchedExpParams,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<RareEventEstimate> {
    if samples == 0 {
        return Err(Error::domain("samples must be at least 1"));
    }
    if !x.is_finite() {
        return Err(Error::domain(format!("threshold must be finite, got {x}")));
    }
    let started = Instant::now();
    let plan = stream_plan(seed, workers, samples)?;
    let stats = if x <= 0.0 {
        // every term is positive almost surely
        Moments {
            n: samples as f64,
            mean: 1.0,
            m2: 0.0,
        }
    } else {
        let kernel = Kernel::new(kind, wv, x, params);
        let per_block = execute(&plan, &kernel);
        pairwise_merge(&per_block)
    };
    let n = samples as f64;
    let p_hat = stats.mean.clamp(0.0, 1.0);
    let stderr = match kind {
        Kind::Naive => (p_hat * (1.0 - p_hat) / n).sqrt(),
        Kind::LargestJump if samples > 1 => (stats.m2.max(0.0) / (n - 1.0) / n).sqrt(),
        Kind::LargestJump => 0.0,
    };
    let log_p_hat = p_hat.ln();
    let (relative_error, zero_upper_bound) = if p_hat > 0.0 {
        (stderr / p_hat, None)
    } else {
        (f64::INFINITY, Some(1.0 - ZERO_HIT_LEVEL.powf(1.0 / n)))
    };
    Ok(RareEventEstimate {
        p_hat,
        stderr,
        samples,
        log_p_hat,
        normalized_rate: wv.a_max().powf(params.r()) * log_p_hat,
        relative_error,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        zero_upper_bound,
        omitted_weight: wv.tail_sum_bound(),
    })
}

fn execute(plan: &StreamPlan, kernel: &Kernel) -> Vec<Moments> {
    let work = |range: Range<usize>| -> Vec<Moments> {
        let mut k = kernel.clone();
        plan.blocks[range]
            .iter()
            .map(|b| {
                let mut stream = plan.stream(b);
                let mut m = Moments::default();
                for _ in 0..b.len {
                    m.push(k.replicate(&mut stream));
                }
                m
            })
            .collect()
    };
    if plan.assignments.len() <= 1 {
        return plan.assignments.iter().cloned().flat_map(work).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = plan
            .assignments
            .iter()
            .cloned()
            .map(|r| scope.spawn(move || work(r)))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("Monte Carlo worker panicked"))
            .collect()
    })
}

/// Running count, mean and centered second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * (b.n / n),
            m2: a.m2 + b.m2 + d * d * (a.n * b.n / n),
        }
    }
}

fn pairwise_merge(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        len => {
            let (l, r) = parts.split_at(len / 2);
            Moments::merge(pairwise_merge(l), pairwise_merge(r))
        }
    }
}

/// `v^e` with cheap paths for the exponents that show up in practice.
#[derive(Debug, Clone, Copy)]
enum Power {
    Half,
    Int(i32),
    Real(f64),
}

impl Power {
    fn new(e: f64) -> Self {
        if e == 0.5 {
            Power::Half
        } else if e.fract() == 0.0 && e.abs() <= 16.0 {
            Power::Int(e as i32)
        } else {
            Power::Real(e)
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Power::Half => v.sqrt(),
            Power::Int(k) => v.powi(k),
            Power::Real(e) => v.powf(e),
        }
    }
}

#[derive(Debug, Clone)]
struct Kernel {
    kind: Kind,
    x: f64,
    inv_kappa: f64,
    inv_r: Power,
    r: Power,
    weights: Vec<f64>,
    /// `kappa * a_i^(-r)`, so that `P(a_i X > y) = exp(-c_i y^r)`.
    rate: Vec<f64>,
    terms: Vec<f64>,
}

impl Kernel {
    fn new(kind: Kind, wv: &WeightVector, x: f64, params: &StretchedExpParams) -> Self {
        let weights = wv.weights().to_vec();
        let rate = weights.iter().map(|a| params.kappa() * a.powf(-params.r())).collect();
        Kernel {
            kind,
            x,
            inv_kappa: 1.0 / params.kappa(),
            inv_r: Power::new(1.0 / params.r()),
            r: Power::new(params.r()),
            terms: vec![0.0; weights.len()],
            weights,
            rate,
        }
    }

    #[inline]
    fn replicate(&mut self, stream: &mut Stream) -> f64 {
        match self.kind {
            Kind::Naive => {
                let mut s = 0.0;
                for &a in &self.weights {
                    s += a * self.inv_r.apply(stream.exp1() * self.inv_kappa);
                }
                if s > self.x {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::LargestJump => {
                let mut s = 0.0;
                let (mut top, mut second, mut at) = (0.0f64, 0.0f64, usize::MAX);
                for (i, (&a, t)) in self.weights.iter().zip(self.terms.iter_mut()).enumerate() {
                    let v = a * self.inv_r.apply(stream.exp1() * self.inv_kappa);
                    *t = v;
                    s += v;
                    if v > top {
                        second = top;
                        top = v;
                        at = i;
                    } else if v > second {
                        second = v;
                    }
                }
                let mut total = 0.0;
                for (i, (&v, &c)) in self.terms.iter().zip(&self.rate).enumerate() {
                    let others_max = if i == at { second } else { top };
                    let y = others_max.max(self.x - (s - v)).max(0.0);
                    total += (-c * self.r.apply(y)).exp();
                }
                total
            }
        }
    }
}
