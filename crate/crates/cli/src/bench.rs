//! `bfp bench`: throughput of the bitslice pipelines against a scalar loop.
//!
//! For each rep the op is applied to every pre-packed vector pair and the
//! elapsed time is divided by the element count. The first (warm-up) pass is
//! not recorded. When several rounding modes are requested their reps
//! alternate. The CSV carries the median over reps; the best rep is kept in
//! [`BenchRecord`] and printed by the CLI.
//!
//! The baseline works on the same operands stored as `f64`: one hardware op
//! per element followed by software rounding to the custom format.

use std::fs::OpenOptions;
use std::hint::black_box;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;
use std::time::{Duration, Instant};

use bfp_core::{
    bfp_op, classify, count_ops, decode_scalar, encode_scalar, with_lane_width, BfpVector,
    Counted, Encoding, FormatSpec, FpClass, Lane, OpCounter, OpKind, Rounding,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const BENCH_CSV_HEADER: &str =
    "format,op,rounding,lane_width,elements,ns_per_elem,mops,baseline_ns_per_elem";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub format: String,
    pub op: OpKind,
    pub rounding: Rounding,
    pub lane_width: usize,
    /// reps x elements per rep
    pub elements: u64,
    /// Median over reps.
    pub ns_per_elem: f64,
    pub best_ns_per_elem: f64,
    /// From the median.
    pub mops: f64,
    pub baseline_ns_per_elem: f64,
    pub baseline_best_ns_per_elem: f64,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{:.4},{:.4}",
            self.format,
            self.op,
            self.rounding,
            self.lane_width,
            self.elements,
            self.ns_per_elem,
            self.mops,
            self.baseline_ns_per_elem
        )
    }

    /// Baseline time over bitslice time; above 1 means the bitslice path is faster.
    pub fn speedup(&self) -> f64 {
        self.baseline_ns_per_elem / self.ns_per_elem
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    /// Elements per rep; a multiple of the lane width.
    pub elements: usize,
    pub reps: usize,
    pub threads: usize,
    pub seed: u64,
}

/// Random finite operands (no infinities or NaNs).
pub fn finite_operands(spec: &FormatSpec, n: usize, seed: u64) -> Vec<Encoding> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = spec.encoding_mask();
    (0..n)
        .map(|_| loop {
            let v = rng.gen::<u64>() & mask;
            if !matches!(classify(v, spec), FpClass::Inf | FpClass::NaN) {
                break v;
            }
        })
        .collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn shards(n: usize, threads: usize) -> Vec<Range<usize>> {
    let per = n.div_ceil(threads.max(1));
    (0..n).step_by(per.max(1)).map(|lo| lo..(lo + per).min(n)).collect()
}

/// Runs `work` over `n` items split across `threads`; returns the slowest
/// shard's time.
fn timed<F: Fn(Range<usize>) + Sync>(n: usize, threads: usize, work: F) -> Duration {
    if threads <= 1 {
        let t0 = Instant::now();
        work(0..n);
        return t0.elapsed();
    }
    let work = &work;
    std::thread::scope(|scope| {
        let handles: Vec<_> = shards(n, threads)
            .into_iter()
            .map(|range| {
                scope.spawn(move || {
                    let t0 = Instant::now();
                    work(range);
                    t0.elapsed()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench thread"))
            .max()
            .unwrap_or_default()
    })
}

type Pairs<L> = Vec<(BfpVector<L>, BfpVector<L>)>;

fn pack_pairs<L: Lane>(spec: &FormatSpec, a: &[Encoding], b: &[Encoding]) -> Pairs<L> {
    a.chunks(L::WIDTH)
        .zip(b.chunks(L::WIDTH))
        .map(|(x, y)| {
            (
                BfpVector::pack(x, spec).expect("in range"),
                BfpVector::pack(y, spec).expect("in range"),
            )
        })
        .collect()
}

fn time_bitslice<L: Lane>(op: OpKind, pairs: &Pairs<L>, threads: usize) -> Duration {
    timed(pairs.len(), threads, |range| {
        for (x, y) in &pairs[range] {
            black_box(bfp_op(op, black_box(x), black_box(y)).expect("same spec"));
        }
    })
}

fn time_baseline(spec: &FormatSpec, op: OpKind, fa: &[f64], fb: &[f64], threads: usize) -> Duration {
    timed(fa.len(), threads, |range| {
        let mut out = vec![0 as Encoding; range.len()];
        for (o, i) in out.iter_mut().zip(range) {
            *o = encode_scalar(op.apply_f64(black_box(fa[i]), black_box(fb[i])), spec);
        }
        black_box(out);
    })
}

/// Per mode, per rep: (bitslice, baseline) ns per element. Reps of the
/// different modes are interleaved so drift in machine load hits them alike.
fn mode_times<L: Lane>(
    spec: &FormatSpec,
    op: OpKind,
    modes: &[Rounding],
    a: &[Encoding],
    b: &[Encoding],
    cfg: &BenchConfig,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let specs: Vec<FormatSpec> = modes.iter().map(|&m| spec.with_rounding(m)).collect();
    let pairs: Vec<Pairs<L>> = specs.iter().map(|sp| pack_pairs(sp, a, b)).collect();
    let fa: Vec<f64> = a.iter().map(|&x| decode_scalar(x, spec)).collect();
    let fb: Vec<f64> = b.iter().map(|&x| decode_scalar(x, spec)).collect();
    let per_elem = |d: Duration| d.as_nanos() as f64 / a.len() as f64;
    for (sp, p) in specs.iter().zip(&pairs) {
        time_bitslice(op, p, cfg.threads);
        time_baseline(sp, op, &fa, &fb, cfg.threads);
    }
    let mut out = vec![(Vec::new(), Vec::new()); modes.len()];
    for _ in 0..cfg.reps {
        for (i, (sp, p)) in specs.iter().zip(&pairs).enumerate() {
            out[i].0.push(per_elem(time_bitslice(op, p, cfg.threads)));
            out[i].1.push(per_elem(time_baseline(sp, op, &fa, &fb, cfg.threads)));
        }
    }
    out
}

/// Benchmarks one op under each of `modes` at `lane_width`, on the same
/// operands, alternating modes between reps.
pub fn bench_modes(
    spec: &FormatSpec,
    op: OpKind,
    modes: &[Rounding],
    lane_width: usize,
    cfg: &BenchConfig,
) -> Result<Vec<BenchRecord>, CliError> {
    if cfg.elements == 0 || !cfg.elements.is_multiple_of(lane_width) {
        return Err(CliError::Usage(format!(
            "--elements must be a positive multiple of the lane width {lane_width}"
        )));
    }
    if cfg.reps == 0 || cfg.threads == 0 {
        return Err(CliError::Usage("--reps and --threads must be at least 1".into()));
    }
    let a = finite_operands(spec, cfg.elements, cfg.seed);
    let b = finite_operands(spec, cfg.elements, cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let times =
        with_lane_width!(lane_width, L => mode_times::<L>(spec, op, modes, &a, &b, cfg));
    let best = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(modes
        .iter()
        .zip(times)
        .map(|(&mode, (bits, base))| {
            let ns = median(&bits);
            BenchRecord {
                format: spec.name().to_string(),
                op,
                rounding: mode,
                lane_width,
                elements: (cfg.reps * cfg.elements) as u64,
                ns_per_elem: ns,
                best_ns_per_elem: best(&bits),
                mops: 1000.0 / ns,
                baseline_ns_per_elem: median(&base),
                baseline_best_ns_per_elem: best(&base),
            }
        })
        .collect())
}

/// Benchmarks one op under `mode` at `lane_width`.
pub fn bench_op(
    spec: &FormatSpec,
    op: OpKind,
    mode: Rounding,
    lane_width: usize,
    cfg: &BenchConfig,
) -> Result<BenchRecord, CliError> {
    Ok(bench_modes(spec, op, &[mode], lane_width, cfg)?.remove(0))
}

/// Lane operations for one evaluation of `op` at `lane_width`.
pub fn count_gates(spec: &FormatSpec, op: OpKind, mode: Rounding, lane_width: usize) -> OpCounter {
    let spec = spec.with_rounding(mode);
    let a = finite_operands(&spec, lane_width, 1);
    let b = finite_operands(&spec, lane_width, 2);
    with_lane_width!(lane_width, L => {
        let x = BfpVector::<Counted<L>>::pack(&a, &spec).expect("in range");
        let y = BfpVector::<Counted<L>>::pack(&b, &spec).expect("in range");
        count_ops(|| bfp_op(op, &x, &y).expect("same spec")).1
    })
}

/// Appends `records` to the CSV at `path`, writing the header first if the
/// file is new or empty. Refuses files whose header differs.
pub fn append_csv(path: &Path, records: &[BenchRecord]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)
        .map_err(io_err)?;
    let mut first = String::new();
    BufReader::new(&file).read_line(&mut first).map_err(io_err)?;
    let mut out = String::new();
    if first.is_empty() {
        out.push_str(BENCH_CSV_HEADER);
        out.push('\n');
    } else if first.trim_end_matches(['\n', '\r']) != BENCH_CSV_HEADER {
        return Err(CliError::Usage(format!(
            "{} has a different header; refusing to append",
            path.display()
        )));
    }
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    file.write_all(out.as_bytes()).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn shards_cover_range() {
        for (n, t) in [(10, 3), (4, 8), (0, 2), (7, 1)] {
            let s = shards(n, t);
            let total: usize = s.iter().map(|r| r.len()).sum();
            assert_eq!(total, n);
            assert!(s.len() <= t.max(1));
        }
    }

    #[test]
    fn csv_row_is_plain_decimal() {
        let r = BenchRecord {
            format: "fp8".into(),
            op: OpKind::Mul,
            rounding: Rounding::TowardZero,
            lane_width: 256,
            elements: 1_048_576,
            ns_per_elem: 1234.5,
            best_ns_per_elem: 1000.0,
            mops: 0.81004,
            baseline_ns_per_elem: 12.0,
            baseline_best_ns_per_elem: 11.0,
        };
        assert_eq!(r.csv_row(), "fp8,mul,RZ,256,1048576,1234.5000,0.8100,12.0000");
    }

    #[test]
    fn rejects_ragged_element_counts() {
        let cfg = BenchConfig { elements: 100, reps: 1, threads: 1, seed: 0 };
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        assert!(bench_op(&spec, OpKind::Add, Rounding::TowardZero, 64, &cfg).is_err());
    }

    #[test]
    fn small_bench_produces_positive_timings() {
        let cfg = BenchConfig { elements: 256, reps: 3, threads: 2, seed: 0 };
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        let r = bench_op(&spec, OpKind::Div, Rounding::NearestEven, 64, &cfg).unwrap();
        assert_eq!(r.elements, 768);
        assert!(r.ns_per_elem > 0.0 && r.baseline_ns_per_elem > 0.0);
        assert!(r.best_ns_per_elem <= r.ns_per_elem);
    }

    #[test]
    fn modes_share_operands() {
        let cfg = BenchConfig { elements: 128, reps: 2, threads: 1, seed: 3 };
        let spec = FormatSpec::fp8(Rounding::TowardZero);
        let rs = bench_modes(&spec, OpKind::Mul, &Rounding::ALL, 64, &cfg).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].rounding, Rounding::ALL[0]);
        assert_eq!(rs[1].rounding, Rounding::ALL[1]);
    }

    #[test]
    fn gate_counts_do_not_depend_on_width() {
        let spec = FormatSpec::fp8(Rounding::NearestEven);
        let c8 = count_gates(&spec, OpKind::Mul, Rounding::NearestEven, 8);
        let c1024 = count_gates(&spec, OpKind::Mul, Rounding::NearestEven, 1024);
        assert_eq!(c8, c1024);
    }
}
