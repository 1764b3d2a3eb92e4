use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rockland::linalg::{c, CMat};
use rockland::modelops::{self, Disc1d, Grid, Injectivity, InjectivityEstimate, Scheme};
use rockland::{
    catalog_kind, decide, rs_scalar_decide, star_shape_probe, CatalogKind, Error, RunConfig, StratifiedLieAlgebra,
    SymbolGamma, Verdict,
};
use serde_json::json;

/// Largest matrix dimension a single sweep point may assemble.
const MAX_SWEEP_DIM: usize = 2_000_000;
const MAX_SWEEP_POINTS: usize = 100_000;

#[derive(Parser)]
#[command(name = "rockland", version, about = "Hypoellipticity checks for sub-Laplacian symbols")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the built-in algebras.
    Catalog,
    /// Decide hypoellipticity of a symbol and print the report.
    Check(CheckArgs),
    /// Smallest singular values of model operators over a parameter grid, as JSON lines.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Sphere sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Oscillator levels checked explicitly before the tail bound.
    #[arg(long)]
    kmax: Option<usize>,
    /// Hermite basis size or grid points for model operators.
    #[arg(long)]
    disc_size: Option<usize>,
    /// Injectivity threshold relative to the operator scale.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run configuration as JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Catalog name such as `engel` or `heisenberg(2)`, or a path to an algebra JSON file.
    algebra: String,
    /// Scalar symbol for N = 1, e.g. `0.5i` or `1-2i`; comma separated when dim g₋₂ > 1.
    #[arg(long, conflicts_with_all = ["symbol", "scalar_b"])]
    gamma: Option<String>,
    /// Symbol JSON file `{"N": N, "gammas": [[[{"re":..,"im":..}, ..], ..], ..]}`.
    #[arg(long, conflicts_with = "scalar_b")]
    symbol: Option<PathBuf>,
    /// Decide `ΣX_j² + iΣb_l Y_l` for the comma separated real vector `b`.
    #[arg(long, allow_hyphen_values = true)]
    scalar_b: Option<String>,
    /// Also decide `tγ` on the configured t-grid.
    #[arg(long)]
    star_probe: bool,
    /// Refine an indeterminate verdict with model-operator sweeps.
    #[arg(long)]
    numerical: bool,
    /// Skip deciding `−γ*`.
    #[arg(long)]
    no_h_elliptic: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Engel,
    EngelDegenerate,
    N4,
    Htilde,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    /// Ranges are `value` or `start:end:count`.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    hbar: Option<String>,
    /// Sign of the degenerate Engel branch.
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    sign: i32,
    #[arg(long, value_enum, default_value_t = SchemeArg::Hermite)]
    scheme: SchemeArg,
    #[arg(long, conflicts_with = "symbol")]
    gamma: Option<String>,
    #[arg(long)]
    symbol: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Hermite,
    Fd,
}

fn usage(msg: impl std::fmt::Display) -> String {
    msg.to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Catalog => {
            print!("{}", catalog_listing());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Check(a) => check(a),
        Cmd::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn catalog_listing() -> String {
    let rows: Vec<(String, Option<CatalogKind>, &str)> = vec![
        ("heisenberg(m)".into(), None, "dims 2m,1; step 2"),
        ("engel".into(), Some(CatalogKind::Engel), ""),
        ("n4".into(), Some(CatalogKind::N4), ""),
        ("heisenberg_plus_line(m)".into(), None, "dims 2m+1,1; step 2"),
        ("free_step2(n)".into(), None, "dims n,n(n-1)/2; step 2"),
        ("htilde(m)".into(), None, "dims 2m+1,2m+1,1; step 3"),
    ];
    let mut out = String::new();
    for (name, kind, fixed) in rows {
        let desc = match kind {
            Some(k) => {
                let a = catalog_kind(k).expect("catalog algebra");
                let dims: Vec<String> = a.layer_dims().iter().map(|d| d.to_string()).collect();
                format!("dims {}; step {}", dims.join(","), a.step())
            }
            None => fixed.to_string(),
        };
        out += &format!("{name:<26}{desc}\n");
    }
    out
}

fn load_config(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = common.samples {
        cfg.samples = Some(v);
    }
    if let Some(v) = common.kmax {
        cfg.kmax = v;
    }
    if let Some(v) = common.disc_size {
        cfg.hermite_size = v;
        cfg.grid_points = v;
    }
    if let Some(v) = common.threshold {
        cfg.injectivity_threshold = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(p) = &common.out {
        cfg.out = Some(p.display().to_string());
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load_algebra(spec: &str) -> Result<Arc<StratifiedLieAlgebra>, String> {
    let path = Path::new(spec);
    let alg = if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?;
        StratifiedLieAlgebra::from_json(&text).map_err(|e| format!("{spec}: {e}"))?
    } else {
        let kind = CatalogKind::from_str(spec).map_err(usage)?;
        catalog_kind(kind).map_err(usage)?
    };
    alg.ensure_valid().map_err(|e| format!("{spec}: {e}"))?;
    Ok(Arc::new(alg))
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
fn parse_complex(s: &str) -> Result<(f64, f64), String> {
    let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
    let bad = || format!("cannot parse `{s}` as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| (re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = 0;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = k;
            break;
        }
    }
    let (re_s, im_s) = body.split_at(split);
    let re = if re_s.is_empty() { 0.0 } else { re_s.parse::<f64>().map_err(|_| bad())? };
    let im = match im_s {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok((re, im))
}

fn parse_gamma(alg: &Arc<StratifiedLieAlgebra>, s: &str) -> Result<SymbolGamma, String> {
    let parts: Vec<(f64, f64)> = s.split(',').map(parse_complex).collect::<Result<_, _>>()?;
    if parts.len() != alg.m() {
        return Err(format!("--gamma has {} entries but dim g₋₂ = {}", parts.len(), alg.m()));
    }
    let zs: Vec<_> = parts.iter().map(|&(r, i)| c(r, i)).collect();
    SymbolGamma::from_scalars(alg.clone(), &zs).map_err(usage)
}

fn load_symbol(alg: &Arc<StratifiedLieAlgebra>, path: &Path) -> Result<SymbolGamma, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    SymbolGamma::from_json(alg.clone(), &text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("cannot parse `{x}` as a real number")))
        .collect()
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let mut so = std::io::stdout().lock();
            match writeln!(so, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                _ => Ok(()),
            }
        }
    }
}

fn exit_for(v: Verdict) -> ExitCode {
    if v.is_certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn check(a: CheckArgs) -> Result<ExitCode, String> {
    let mut cfg = load_config(&a.common)?;
    cfg.numerical_refinement |= a.numerical;
    if a.no_h_elliptic {
        cfg.h_elliptic = false;
    }
    let alg = load_algebra(&a.algebra)?;
    if let Some(b) = &a.scalar_b {
        let b = parse_reals(b)?;
        let rep = rs_scalar_decide(alg, &b, &cfg).map_err(usage)?;
        emit(&rep.to_json(), a.common.out.as_deref())?;
        return Ok(exit_for(rep.verdict));
    }
    let gamma = match (&a.gamma, &a.symbol) {
        (Some(g), _) => parse_gamma(&alg, g)?,
        (None, Some(p)) => load_symbol(&alg, p)?,
        (None, None) => return Err("one of --gamma, --symbol or --scalar-b is required".into()),
    };
    let rep = decide(&gamma, &cfg).map_err(usage)?;
    let mut value = serde_json::to_value(&rep).map_err(usage)?;
    if a.star_probe {
        let probe = star_shape_probe(&gamma, &cfg.star_ts, &cfg).map_err(usage)?;
        value["star_probe"] = serde_json::to_value(&probe).map_err(usage)?;
    }
    let text = serde_json::to_string_pretty(&value).map_err(usage)?;
    emit(&text, a.common.out.as_deref())?;
    Ok(exit_for(rep.verdict))
}

fn parse_range(name: &str, s: Option<&str>, default: Option<f64>) -> Result<Vec<f64>, String> {
    let Some(s) = s else {
        return default.map(|v| vec![v]).ok_or_else(|| format!("--{name} is required for this sweep"));
    };
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| -> Result<f64, String> {
        let v: f64 = x.trim().parse().map_err(|_| format!("--{name}: cannot parse `{x}`"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("--{name}: range must be finite"))
        }
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| format!("--{name}: bad count `{n}`"))?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            })
        }
        _ => Err(format!("--{name}: expected `value` or `start:end:count`")),
    }
}

fn sweep_gamma(alg: &Arc<StratifiedLieAlgebra>, a: &SweepArgs) -> Result<SymbolGamma, String> {
    match (&a.gamma, &a.symbol) {
        (Some(g), _) => parse_gamma(alg, g),
        (None, Some(p)) => load_symbol(alg, p),
        (None, None) => Ok(SymbolGamma::zero(alg.clone(), 1)),
    }
}

type PointFn = Box<dyn Fn(&Vec<f64>) -> rockland::Result<InjectivityEstimate> + Sync + Send>;

fn sweep(a: SweepArgs) -> Result<ExitCode, String> {
    let cfg = load_config(&a.common)?;
    let thr = cfg.injectivity_threshold;
    let seed = cfg.seed;
    let grid2 = |xs: &[f64], ys: &[f64]| -> Vec<Vec<f64>> {
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| vec![x, y])).collect()
    };
    let (points, per_point_dim, f): (Vec<Vec<f64>>, usize, PointFn) = match a.kind {
        SweepKind::Engel => {
            let alg = Arc::new(catalog_kind(CatalogKind::Engel).map_err(usage)?);
            let g = sweep_gamma(&alg, &a)?.gammas()[0].clone();
            let ps = parse_range("p", a.p.as_deref(), None)?;
            let qs = parse_range("q", a.q.as_deref(), None)?;
            if ps.contains(&0.0) {
                return Err("--p must avoid 0; use `sweep engel-degenerate`".into());
            }
            let scheme = match a.scheme {
                SchemeArg::Hermite => Scheme::HermiteBasis,
                SchemeArg::Fd => Scheme::FiniteDifference,
            };
            let disc = Disc1d { scheme, size: cfg.hermite_size, fine_size: None, length: None };
            let dim = 2 * cfg.hermite_size * g.nrows();
            let f: PointFn = Box::new(move |pt| {
                let op = modelops::build_engel_generic(pt[0], pt[1], &g, &disc)?;
                Ok(modelops::min_singular_seeded(&op, thr, true, seed))
            });
            (grid2(&ps, &qs), dim, f)
        }
        SweepKind::EngelDegenerate => {
            let alg = Arc::new(catalog_kind(CatalogKind::Engel).map_err(usage)?);
            let g = sweep_gamma(&alg, &a)?.gammas()[0].clone();
            let qs = parse_range("q", a.q.as_deref(), Some(-1.0))?;
            if qs.iter().any(|&q| q >= 0.0) {
                return Err("--q must be negative for the degenerate family".into());
            }
            let sign = a.sign;
            let size = cfg.hermite_size;
            let dim = 2 * size * g.nrows();
            let f: PointFn = Box::new(move |pt| {
                let op = modelops::build_engel_degenerate(pt[0], sign, &g, size)?;
                Ok(modelops::min_singular_seeded(&op, thr, true, seed))
            });
            (qs.into_iter().map(|q| vec![q]).collect(), dim, f)
        }
        SweepKind::N4 => {
            let alg = Arc::new(catalog_kind(CatalogKind::N4).map_err(usage)?);
            let gs = sweep_gamma(&alg, &a)?.gammas().to_vec();
            let pair: [CMat; 2] = [gs[0].clone(), gs[1].clone()];
            let alphas = parse_range("alpha", a.alpha.as_deref(), Some(1.0))?;
            let etas = parse_range("eta", a.eta.as_deref(), None)?;
            if alphas.contains(&0.0) {
                return Err("--alpha must avoid 0".into());
            }
            let pts = cfg.grid_points;
            let dim = 4 * pts * pts * pair[0].nrows();
            let f: PointFn = Box::new(move |pt| {
                let op = modelops::build_n4_generic(pt[0], pt[1], &pair, &Grid::square(pts))?;
                Ok(modelops::min_singular_seeded(&op, thr, true, seed))
            });
            (grid2(&alphas, &etas), dim, f)
        }
        SweepKind::Htilde => {
            let alg = Arc::new(catalog_kind(CatalogKind::Htilde(1)).map_err(usage)?);
            let gs = sweep_gamma(&alg, &a)?.gammas().to_vec();
            let hbars = parse_range("hbar", a.hbar.as_deref(), None)?;
            if hbars.contains(&0.0) {
                return Err("--hbar must avoid 0".into());
            }
            let pts = cfg.grid_points;
            let fine = pts * 4 / 3;
            let dim = fine * fine * fine * gs[0].nrows();
            let f: PointFn = Box::new(move |pt| {
                let grid = Grid { points: pts, fine_points: None, half_width: None, points_b: None, fine_points_b: None, half_width_b: None };
                let op = modelops::build_htilde_flat(1, pt[0], &gs, &grid)?;
                Ok(modelops::min_singular_seeded(&op, thr, true, seed))
            });
            (hbars.into_iter().map(|h| vec![h]).collect(), dim, f)
        }
    };
    if per_point_dim > MAX_SWEEP_DIM {
        return Err(Error::ResourceGuard(format!("{per_point_dim} unknowns per point exceeds {MAX_SWEEP_DIM}")).to_string());
    }
    if points.len() > MAX_SWEEP_POINTS {
        return Err(Error::ResourceGuard(format!("{} grid points exceeds {MAX_SWEEP_POINTS}", points.len())).to_string());
    }

    let mut sink: Box<dyn Write> = match &a.common.out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut min_margin = f64::INFINITY;
    let mut counts = [0usize; 4];
    let chunk = rayon_chunk();
    for block in points.chunks(chunk) {
        for (pt, res) in block.iter().zip(modelops::sweep(block, |p| f(p))) {
            let line = match res {
                Ok(est) => {
                    min_margin = min_margin.min(est.sigma_min / est.threshold.max(f64::MIN_POSITIVE) * thr);
                    counts[match est.verdict {
                        Injectivity::Injective => 0,
                        Injectivity::KernelDetected => 1,
                        Injectivity::Unresolved => 2,
                    }] += 1;
                    serde_json::to_string(&est).map_err(usage)?
                }
                Err(e) => {
                    counts[3] += 1;
                    json!({"params": pt, "error": e.to_string()}).to_string()
                }
            };
            writeln!(sink, "{line}").map_err(usage)?;
        }
        sink.flush().map_err(usage)?;
    }
    let summary = json!({
        "summary": {
            "points": points.len(),
            "min_margin": if min_margin.is_finite() { json!(min_margin) } else { json!(null) },
            "injective": counts[0],
            "kernel_detected": counts[1],
            "unresolved": counts[2],
            "errors": counts[3],
            "seed": seed,
        }
    });
    writeln!(sink, "{summary}").map_err(usage)?;
    sink.flush().map_err(usage)?;
    Ok(ExitCode::SUCCESS)
}

/// Points handed to the pool at once; results are written after each batch.
fn rayon_chunk() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).max(1) * 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.5i").unwrap(), (0.0, 0.5));
        assert_eq!(parse_complex("i").unwrap(), (0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), (0.0, -1.0));
        assert_eq!(parse_complex("1-2i").unwrap(), (1.0, -2.0));
        assert_eq!(parse_complex("1e-3+2e-1i").unwrap(), (1e-3, 0.2));
        assert_eq!(parse_complex("-3").unwrap(), (-3.0, 0.0));
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("q", Some("-1:1:3"), None).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert!(parse_range("q", Some("0:1:0"), None).unwrap().is_empty());
        assert!(parse_range("q", Some("0:inf:2"), None).is_err());
        assert!(parse_range("q", None, None).is_err());
    }
}
