//! hsmul: batch front end for the ring simulator. Multiplies matrices
//! with any of the implemented algorithms, sweeps cell counts for the
//! complexity tables, prints stride bases, and runs the pairwise
//! reduction against its oracle. All CSV goes to standard output; files
//! are only written via an explicit --out.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 verification
//! mismatch, 3 infeasible configuration.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hypersystolic::{
    approx_equal, balanced_factor, block_cyclic_multiply, block_multiply, cannon_matmul,
    cyclic_multiply, h_range_complete, hyper_systolic_matmul, naive_multiply,
    optimal_basis_search, pairwise_reduce, read_matrix_file, regular_bases, regular_pair,
    semi_hyper_systolic_2d_with_stats, semi_systolic_2d_with_stats, systolic_matmul,
    write_matrix_file, AlgoKind, BasisPair, BlockEntry, CostModel, Error, Grid2dStats, HsParams,
    Matrix, MetricScalar, Result, RingMachine, RunReport, StrideBasis,
};

#[derive(Parser)]
#[command(
    name = "hsmul",
    version,
    about = "Shift-counting matrix multiplication on a simulated cell ring"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Multiply two matrices and print the run report as CSV
    Multiply(MultiplyArgs),
    /// Sweep cell counts and compare measured shift counts to the formulas
    Bench(BenchArgs),
    /// Print regular stride bases or search for minimal ones
    Bases(BasesArgs),
    /// Run the pairwise reduction and check it against the double loop
    Reduce(ReduceArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Systolic,
    Hyper,
    Cannon,
    #[value(name = "semi2d")]
    Semi2d,
    #[value(name = "semihyper2d")]
    Semihyper2d,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MappingArg {
    Block,
    Cyclic,
    BlockCyclic,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OpArg {
    /// y_i = sum_j x_i * z_j
    SumOfProducts,
    /// y_i = sum_j (x_i - z_j)^2
    SumOfSquaredDifferences,
}

impl OpArg {
    fn label(self) -> &'static str {
        match self {
            OpArg::SumOfProducts => "sum-of-products",
            OpArg::SumOfSquaredDifferences => "sum-of-squared-differences",
        }
    }
}

fn parse_cost(s: &str) -> std::result::Result<CostModel, String> {
    CostModel::from_str(s).map_err(|e| e.to_string())
}

fn parse_basis(s: &str) -> std::result::Result<StrideBasis, String> {
    StrideBasis::from_str(s).map_err(|e| e.to_string())
}

#[derive(Args)]
#[command(group(ArgGroup::new("input").required(true).args(["random", "a"])))]
struct MultiplyArgs {
    /// Which algorithm runs the product
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Number of cells. The torus and grid algorithms run on a
    /// sqrt(p) x sqrt(p) grid, so p must be a perfect square for them.
    #[arg(long)]
    p: usize,
    /// Hyper-systolic stride; must divide p (or the grid side for
    /// semihyper2d). Default: the divisor closest to the square root.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Operand rows (A is n x m); defaults to the machine size. Sizes
    /// beyond p x p run the hyper kernel through the chosen --mapping.
    #[arg(long)]
    n: Option<usize>,
    /// Operand inner dimension; defaults to n
    #[arg(long)]
    m: Option<usize>,
    /// Generate operands from --seed instead of reading files
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Left operand file (dense text format; requires --b)
    #[arg(long, requires = "b", value_name = "FILE")]
    a: Option<PathBuf>,
    /// Right operand file
    #[arg(long, requires = "a", value_name = "FILE")]
    b: Option<PathBuf>,
    /// Work in f64 (random values uniform in [-9, 9], verify tol 1e-12)
    /// instead of exact integers
    #[arg(long)]
    float: bool,
    /// Exit with code 2 if the result differs from the schoolbook oracle
    #[arg(long)]
    verify: bool,
    /// Write the product matrix here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// How operands larger than p x p are laid out over the cells
    #[arg(long, value_enum, default_value_t = MappingArg::Block)]
    mapping: MappingArg,
    /// Inner dense tile side for --mapping block-cyclic
    #[arg(long, default_value_t = 1)]
    inner_block: usize,
    /// Run cyclic mappings one tile product at a time (K live
    /// intermediates instead of K times the tile row width)
    #[arg(long)]
    reduce_memory: bool,
    /// Shift cost model: constant | per_hop | table:c0,c1,...
    #[arg(long, default_value = "constant", value_parser = parse_cost)]
    cost: CostModel,
}

#[derive(Args)]
struct BenchArgs {
    /// Cell counts to sweep, e.g. --p 4,16. Torus rows appear only for
    /// perfect squares.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    p: Option<Vec<usize>>,
    /// Hyper-systolic stride for every p; default balances per p
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "constant", value_parser = parse_cost)]
    cost: CostModel,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["regular", "search"])))]
struct BasesArgs {
    /// Print the regular basis trio for the matrix product (needs --K
    /// and --Ktilde)
    #[arg(long)]
    regular: bool,
    /// Search for a minimum-cost complete pair over 0..n (needs --n)
    #[arg(long)]
    search: bool,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "Ktilde")]
    ktilde: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Cost model the search minimizes
    #[arg(long, default_value = "constant", value_parser = parse_cost)]
    cost: CostModel,
    /// Cap on k + k' during the search; default 2n
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("basis").args(["searched", "basis_a"])))]
struct ReduceArgs {
    /// Ring size and value count
    #[arg(long)]
    n: usize,
    /// Factor for the regular basis pair; must divide n. Default: the
    /// divisor closest to sqrt(n).
    #[arg(long = "K")]
    k: Option<usize>,
    /// Use a searched minimal pair instead of the regular one
    #[arg(long)]
    searched: bool,
    /// Custom A basis as comma-separated strides starting at 0
    #[arg(long, requires = "basis_b", value_parser = parse_basis)]
    basis_a: Option<StrideBasis>,
    /// Custom B basis
    #[arg(long, requires = "basis_a", value_parser = parse_basis)]
    basis_b: Option<StrideBasis>,
    #[arg(long, value_enum, default_value_t = OpArg::SumOfProducts)]
    op: OpArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Work in f64 with tol 1e-12 instead of exact integers
    #[arg(long)]
    float: bool,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Multiply(args) => cmd_multiply(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Bases(args) => cmd_bases(args),
        Cmd::Reduce(args) => cmd_reduce(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Usage and parse problems are 1, everything else the library rejects
/// is an infeasible configuration.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::BadCostModel(_) => 1,
        _ => 3,
    }
}

fn usage(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    1
}

fn sample_int(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(-9..=9)
}

fn sample_float(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-9.0..=9.0)
}

fn random_matrix<T>(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    sample: &mut impl FnMut(&mut ChaCha8Rng) -> T,
) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| sample(rng)).collect();
    Matrix::from_vec(rows, cols, data).expect("generated length matches")
}

fn exact_grid_side(p: usize) -> Result<usize> {
    let s = (p as f64).sqrt().round() as usize;
    if s > 0 && s * s == p {
        Ok(s)
    } else {
        Err(Error::Infeasible(format!(
            "a grid algorithm needs a square cell count, got p = {p}"
        )))
    }
}

// ---------------------------------------------------------------- multiply

fn cmd_multiply(args: MultiplyArgs) -> Result<i32> {
    if args.float {
        multiply_typed::<f64>(&args, &mut sample_float, 1e-12)
    } else {
        multiply_typed::<i64>(&args, &mut sample_int, 0.0)
    }
}

fn multiply_typed<T>(
    args: &MultiplyArgs,
    sample: &mut impl FnMut(&mut ChaCha8Rng) -> T,
    tol: f64,
) -> Result<i32>
where
    T: MetricScalar + Display + FromStr,
    <T as FromStr>::Err: Display,
{
    let p = args.p;
    if p == 0 {
        return Err(Error::EmptyRing);
    }
    let grid = matches!(
        args.algo,
        AlgoArg::Cannon | AlgoArg::Semi2d | AlgoArg::Semihyper2d
    );
    let side = if grid { exact_grid_side(p)? } else { p };
    let n = args.n.unwrap_or(side);
    let m = args.m.unwrap_or(n);
    if grid && (n != side || m != side) {
        return Err(Error::Infeasible(format!(
            "grid algorithms take the {side}x{side} problem; --n/--m cannot resize it"
        )));
    }

    let (a, b): (Matrix<T>, Matrix<T>) = match (&args.a, &args.b) {
        (Some(fa), Some(fb)) => (read_matrix_file(fa)?, read_matrix_file(fb)?),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let a = random_matrix(&mut rng, n, m, sample);
            let b = random_matrix(&mut rng, m, n, sample);
            (a, b)
        }
    };
    if grid && (a.rows() != side || a.cols() != side) {
        return Err(Error::Infeasible(format!(
            "{} needs {side}x{side} operands on p = {p} cells, file has {}x{}",
            algo_name(args.algo),
            a.rows(),
            a.cols()
        )));
    }
    let want = naive_multiply(&a, &b)?;

    let (row, result) = match args.algo {
        AlgoArg::Systolic => {
            if a.rows() != p || a.cols() != p {
                return Err(Error::Infeasible(format!(
                    "systolic runs the p x p product only; got {}x{} on p = {p}",
                    a.rows(),
                    a.cols()
                )));
            }
            let mut machine = RingMachine::new(p, args.cost.clone())?;
            let rep = systolic_matmul(&mut machine, &a, &b)?;
            finish_report(rep, &want, tol)
        }
        AlgoArg::Hyper => {
            let params = hs_params(p, args.k)?;
            if a.rows() == p && a.cols() == p {
                let mut machine = RingMachine::new(p, args.cost.clone())?;
                let rep = hyper_systolic_matmul(&mut machine, &a, &b, params)?;
                finish_report(rep, &want, tol)
            } else {
                mapped_multiply(args, params, &a, &b, &want, tol)?
            }
        }
        AlgoArg::Cannon => {
            let rep = cannon_matmul(side, &a, &b)?;
            finish_report(rep, &want, tol)
        }
        AlgoArg::Semi2d => {
            let (result, stats) = semi_systolic_2d_with_stats(side, &a, &b)?;
            let correct = approx_equal(&result, &want, tol);
            (
                grid_row(AlgoKind::Semi2d, p, 1, side, &stats, correct),
                result,
            )
        }
        AlgoArg::Semihyper2d => {
            let k = args.k.unwrap_or_else(|| balanced_factor(side));
            let (result, stats) = semi_hyper_systolic_2d_with_stats(side, &a, &b, k)?;
            let correct = approx_equal(&result, &want, tol);
            (
                grid_row(AlgoKind::SemiHyper2d, p, k, side / k, &stats, correct),
                result,
            )
        }
    };

    println!("{}", RunReport::<i64>::csv_header());
    println!("{row}");
    if let Some(path) = &args.out {
        write_matrix_file(path, &result)?;
    }
    let correct = row.ends_with("true");
    Ok(if args.verify && !correct { 2 } else { 0 })
}

fn algo_name(algo: AlgoArg) -> &'static str {
    match algo {
        AlgoArg::Systolic => "systolic",
        AlgoArg::Hyper => "hyper",
        AlgoArg::Cannon => "cannon",
        AlgoArg::Semi2d => "semi2d",
        AlgoArg::Semihyper2d => "semihyper2d",
    }
}

fn hs_params(p: usize, k: Option<usize>) -> Result<HsParams> {
    match k {
        Some(k) => HsParams::new(p, k),
        None => HsParams::balanced(p),
    }
}

fn finish_report<T: MetricScalar>(
    rep: RunReport<T>,
    want: &Matrix<T>,
    tol: f64,
) -> (String, Matrix<T>) {
    let correct = approx_equal(&rep.result, want, tol);
    let row = rep.csv_row(correct);
    (row, rep.result)
}

/// CSV row for the grid walkthroughs, which report movement tallies
/// instead of a ring shift log: both shift columns carry the summed
/// stepwise movements (broadcasts are a separate mechanism and excluded).
fn grid_row(
    algo: AlgoKind,
    p: usize,
    k: usize,
    ktilde: usize,
    stats: &Grid2dStats,
    correct: bool,
) -> String {
    let moves = stats.a_h_shift_steps
        + stats.a_v_shift_steps
        + stats.b_preshift_rows
        + stats.c_back_shifts;
    format!("{algo},{p},{k},{ktilde},{moves},{moves},{},{correct}", moves as f64)
}

fn mapped_multiply<T>(
    args: &MultiplyArgs,
    params: HsParams,
    a: &Matrix<T>,
    b: &Matrix<T>,
    want: &Matrix<T>,
    tol: f64,
) -> Result<(String, Matrix<T>)>
where
    T: MetricScalar,
{
    let p = args.p;
    match args.mapping {
        MappingArg::Block => {
            let mut machine: RingMachine<BlockEntry<T>> =
                RingMachine::new(p, args.cost.clone())?;
            let (result, rep) = block_multiply(&mut machine, a, b, params)?;
            let correct = approx_equal(&result, want, tol);
            Ok((rep.csv_row(correct), result))
        }
        MappingArg::Cyclic => {
            let mut machine: RingMachine<T> = RingMachine::new(p, args.cost.clone())?;
            let run = cyclic_multiply(&mut machine, a, b, params, args.reduce_memory)?;
            let correct = approx_equal(&run.result, want, tol);
            Ok((log_row(params, &machine, correct), run.result))
        }
        MappingArg::BlockCyclic => {
            let mut machine: RingMachine<BlockEntry<T>> =
                RingMachine::new(p, args.cost.clone())?;
            let run = block_cyclic_multiply(
                &mut machine,
                a,
                b,
                params,
                args.inner_block,
                args.reduce_memory,
            )?;
            let correct = approx_equal(&run.result, want, tol);
            Ok((log_row(params, &machine, correct), run.result))
        }
    }
}

/// Row for runs made of many tile products: both count columns carry the
/// machine's literal event total, the honest figure at this level.
fn log_row<E: Clone + PartialEq + std::fmt::Debug>(
    params: HsParams,
    machine: &RingMachine<E>,
    correct: bool,
) -> String {
    let raw = machine.log().len();
    format!(
        "{},{},{},{},{raw},{raw},{},{correct}",
        AlgoKind::Hyper,
        params.p(),
        params.k(),
        params.ktilde(),
        machine.log().total_cost()
    )
}

// ------------------------------------------------------------------- bench

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let sweep = args.p.clone().unwrap_or_default();
    if sweep.is_empty() {
        return Ok(usage("empty sweep: pass --p with at least one cell count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for &p in &sweep {
        if p == 0 {
            return Err(Error::EmptyRing);
        }
        let a = random_matrix(&mut rng, p, p, &mut sample_int);
        let b = random_matrix(&mut rng, p, p, &mut sample_int);

        let mut machine = RingMachine::new(p, args.cost.clone())?;
        let rep = systolic_matmul(&mut machine, &a, &b)?;
        rows.push(bench_row("systolic", p, 1, p, p - 1, rep.shift_count_paper));

        let params = hs_params(p, args.k)?;
        let mut machine = RingMachine::new(p, args.cost.clone())?;
        let rep = hyper_systolic_matmul(&mut machine, &a, &b, params)?;
        rows.push(bench_row(
            "hyper",
            p,
            params.k(),
            params.ktilde(),
            params.k() + params.ktilde() - 1,
            rep.shift_count_paper,
        ));

        if let Ok(s) = exact_grid_side(p) {
            let ga = random_matrix(&mut rng, s, s, &mut sample_int);
            let gb = random_matrix(&mut rng, s, s, &mut sample_int);
            let rep = cannon_matmul(s, &ga, &gb)?;
            rows.push(bench_row("cannon", p, s, s, 2 * s - 2, rep.shift_count_paper));
        }
    }
    println!("algo,p,K,Ktilde,predicted,measured,gain,predicted_equals_measured");
    for row in rows {
        println!("{row}");
    }
    Ok(0)
}

fn bench_row(
    algo: &str,
    p: usize,
    k: usize,
    ktilde: usize,
    predicted: usize,
    measured: usize,
) -> String {
    let gain = if measured == 0 {
        "-".to_string()
    } else {
        Ratio::new((p - 1) as u64, measured as u64).to_string()
    };
    format!(
        "{algo},{p},{k},{ktilde},{predicted},{measured},{gain},{}",
        predicted == measured
    )
}

// ------------------------------------------------------------------- bases

fn cmd_bases(args: BasesArgs) -> Result<i32> {
    if args.regular {
        let (Some(k), Some(kt)) = (args.k, args.ktilde) else {
            return Ok(usage("--regular needs --K and --Ktilde"));
        };
        let (a, b, c) = regular_bases(k, kt)?;
        println!("A={a} B={b} C={c}");
        let pair = BasisPair::new(a, b, k * kt)?;
        let (_, table) = h_range_complete(&pair);
        print!("{}", table.to_csv());
        return Ok(0);
    }
    let Some(n) = args.n else {
        return Ok(usage("--search needs --n"));
    };
    let max_len = args.max_len.unwrap_or(2 * n);
    let pair = optimal_basis_search(n, &args.cost, max_len)?;
    let (k, kp) = (pair.a.shift_count(), pair.b.shift_count());
    let (complete, table) = h_range_complete(&pair);
    println!("A={} B={}", pair.a, pair.b);
    println!("k={k},k'={kp},total={},complete={complete}", k + kp);
    print!("{}", table.to_csv());
    Ok(0)
}

// ------------------------------------------------------------------ reduce

fn cmd_reduce(args: ReduceArgs) -> Result<i32> {
    let n = args.n;
    if n == 0 {
        return Err(Error::EmptyRing);
    }
    let (label, pair) = if let (Some(a), Some(b)) = (&args.basis_a, &args.basis_b) {
        ("custom", BasisPair::new(a.clone(), b.clone(), n)?)
    } else if args.searched {
        (
            "searched",
            optimal_basis_search(n, &CostModel::Constant, 2 * n)?,
        )
    } else {
        let k = args.k.unwrap_or_else(|| balanced_factor(n));
        if k == 0 || n % k != 0 {
            return Err(Error::BadFactor { k, p: n });
        }
        ("regular", regular_pair(k, n / k)?)
    };

    match (args.float, args.op) {
        (false, OpArg::SumOfProducts) => reduce_typed::<i64>(
            &args,
            label,
            &pair,
            &mut sample_int,
            |x, z| x * z,
            |acc, v| acc + v,
            0.0,
        ),
        (false, OpArg::SumOfSquaredDifferences) => reduce_typed::<i64>(
            &args,
            label,
            &pair,
            &mut sample_int,
            |x, z| (x - z) * (x - z),
            |acc, v| acc + v,
            0.0,
        ),
        (true, OpArg::SumOfProducts) => reduce_typed::<f64>(
            &args,
            label,
            &pair,
            &mut sample_float,
            |x, z| x * z,
            |acc, v| acc + v,
            1e-12,
        ),
        (true, OpArg::SumOfSquaredDifferences) => reduce_typed::<f64>(
            &args,
            label,
            &pair,
            &mut sample_float,
            |x, z| (x - z) * (x - z),
            |acc, v| acc + v,
            1e-12,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn reduce_typed<T>(
    args: &ReduceArgs,
    label: &str,
    pair: &BasisPair,
    sample: &mut impl FnMut(&mut ChaCha8Rng) -> T,
    f: impl Fn(&T, &T) -> T,
    combine: impl Fn(&T, &T) -> T,
    tol: f64,
) -> Result<i32>
where
    T: MetricScalar,
{
    let n = args.n;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let x: Vec<T> = (0..n).map(|_| sample(&mut rng)).collect();
    let z: Vec<T> = (0..n).map(|_| sample(&mut rng)).collect();

    let mut machine: RingMachine<Option<T>> = RingMachine::new(n, CostModel::Constant)?;
    let rep = pairwise_reduce(&mut machine, &x, &z, &f, &combine, pair)?;

    let oracle: Vec<T> = (0..n)
        .map(|i| {
            let mut acc = f(&x[i], &z[0]);
            for zj in &z[1..] {
                acc = combine(&acc, &f(&x[i], zj));
            }
            acc
        })
        .collect();
    let matched = rep
        .values
        .iter()
        .zip(&oracle)
        .all(|(got, want)| got.abs_diff(want) <= tol);

    println!("n,K,Ktilde,basis,op,forward_shifts,back_shifts,total_shifts,match");
    println!(
        "{n},{},{},{label},{},{},{},{},{matched}",
        pair.a.shift_count() + 1,
        pair.b.shift_count() + 1,
        args.op.label(),
        rep.forward_shifts,
        rep.back_shifts,
        rep.forward_shifts + rep.back_shifts,
    );
    Ok(if matched { 0 } else { 2 })
}
