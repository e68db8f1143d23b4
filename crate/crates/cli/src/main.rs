mod parse;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use nbcover::covers::{sample_cover, CoordinatizedCover, ModelKind, ModelSpec};
use nbcover::io::{
    census_csv, certificate_json, fmt12, nonalon_csv, read_cover, sidestep_csv, spectrum_json, trace_csv, write_catalog,
    write_cover, write_graph,
};
use nbcover::nblang::certificates;
use nbcover::sidestep::{planted_model, sidestep_demo};
use nbcover::spectra::{adjacency_f64, hashimoto_eigenvalues, ihara_check, mu1, new_old_spectrum, symmetric_eigenvalues};
use nbcover::tangles::{enumerate_minimal_tangles, graph_canonical_form, has_tangles, TangleCatalog, TangleQuery, TangleVerdict};
use nbcover::tracelab::{fit_expansion_table, mc_nonalon_probability, mc_statistic, with_threads, ExperimentPlan, Statistic};
use nbcover::walks::{walk_census, DEFAULT_BUDGET};
use nbcover::{Graph, GraphBuilder};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "nbcover", version, about = "Random covers, non-backtracking spectra and trace experiments")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores); never changes results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Directory receiving result files and manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// One of perm, perm-inv-even, perm-inv-odd, cycle, cycle-inv-even, cycle-inv-odd.
    #[arg(long, default_value = "perm")]
    model: String,
    /// Base graph, e.g. bouquet:2,0 or file:base.graph.
    #[arg(long, default_value = "bouquet:2,0")]
    base: String,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec> {
        let kind: ModelKind = self.model.parse()?;
        Ok(ModelSpec::new(kind, parse::graph(&self.base)?)?)
    }
}

#[derive(Args, Clone)]
struct PlanArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated cover degrees.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = StatArg::Trace)]
    stat: StatArg,
    /// Visited-subgraph order for `--stat order`.
    #[arg(long, default_value_t = 0)]
    order: usize,
    #[arg(long, default_value_t = 2.0)]
    nu: f64,
    #[arg(long, default_value_t = 2)]
    r: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Trace,
    Certified,
    Order,
}

impl PlanArgs {
    fn plan(&self, seed: u64) -> Result<ExperimentPlan> {
        let plan = ExperimentPlan {
            model: self.model.spec()?,
            n_grid: parse::list(&self.n)?,
            k_min: self.k_min,
            k_max: self.k_max,
            trials: self.trials,
            master_seed: seed,
            nu: self.nu,
            r: self.r,
        };
        plan.validate()?;
        if matches!(self.stat, StatArg::Certified) {
            TangleQuery::new(self.nu, self.r)?;
        }
        Ok(plan)
    }

    fn statistic(&self) -> Statistic {
        match self.stat {
            StatArg::Trace => Statistic::Trace,
            StatArg::Certified => Statistic::CertifiedTrace,
            StatArg::Order => Statistic::SnbcOrder(self.order),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample one cover and dump its permutations.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
    },
    /// Adjacency and non-backtracking spectra of a graph, or new/old spectra of a cover.
    Spectra {
        /// A graph to analyse directly.
        #[arg(long, conflicts_with_all = ["cover", "n"])]
        graph: Option<String>,
        /// A cover dump written by `sample`.
        #[arg(long, conflicts_with = "n")]
        cover: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// Sample a cover of this degree from --model/--base.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "0.1")]
        eps: String,
    },
    /// Check the Ihara determinant identity on given or random graphs.
    IharaCheck {
        #[arg(long)]
        graph: Option<String>,
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 8)]
        max_vertices: usize,
    },
    /// SNBC walk counts by homotopy type.
    WalksCensus {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Enumerate minimal tangles, optionally testing a graph against the catalog.
    Tangles {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 8)]
        bound: usize,
        #[arg(long)]
        graph: Option<String>,
    },
    /// Minimal certificate length vectors for a homotopy type.
    Certificates {
        #[arg(long = "type")]
        type_graph: String,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 10)]
        bound: usize,
    },
    /// Monte-Carlo expected traces over a cover model.
    TraceMc(PlanArgs),
    /// Fit the 1/n expansion of expected traces.
    ExpansionFit {
        #[command(flatten)]
        plan: PlanArgs,
        /// Number of expansion coefficients.
        #[arg(long = "terms", default_value_t = 2)]
        terms: usize,
    },
    /// Probability of a new eigenvalue beyond the Alon bound.
    Nonalon {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: String,
        #[arg(long, default_value = "0.1")]
        eps: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Planted matrix-model demonstration of the sidestepping estimate.
    SidestepDemo {
        #[arg(long, default_value_t = 3.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 5.0)]
        lambda1: f64,
        #[arg(long, default_value_t = 1)]
        j: usize,
        /// Planted points with weights, `value:weight,...`.
        #[arg(long, default_value = "4:1")]
        planted: String,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        #[arg(long, default_value = "50,100,200,400")]
        n: String,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
    /// Human-readable reports.
    Inspect {
        #[command(subcommand)]
        subject: Inspect,
    },
}

#[derive(Subcommand)]
enum Inspect {
    Walks {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        k: usize,
    },
    Tangles {
        #[arg(long)]
        nu: f64,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 8)]
        bound: usize,
    },
    Certificates {
        #[arg(long = "type")]
        type_graph: String,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 10)]
        bound: usize,
    },
}

enum Artifact {
    File(String, String),
    Catalog(String, TangleCatalog),
}

#[derive(Default)]
struct Report {
    /// Lines for the terminal.
    summary: Vec<String>,
    artifacts: Vec<Artifact>,
    results: Value,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    fn file(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact::File(name.into(), contents));
    }
}

fn progress(i: usize, total: usize, n: usize) {
    let step = (total / 10).max(1);
    if i % step == 0 || i == total {
        eprintln!("trial {i}/{total} n={n}");
    }
}

fn fmt_complex(z: Complex<f64>) -> String {
    let clean = |x: f64| if x.abs() < 1e-9 { 0.0 } else { x };
    let (re, im) = (clean(z.re), clean(z.im));
    if im == 0.0 {
        fmt12(re)
    } else {
        format!("{}{}{}i", fmt12(re), if im < 0.0 { "-" } else { "+" }, fmt12(im.abs()))
    }
}

fn set_of<I: IntoIterator<Item = String>>(items: I) -> String {
    format!("{{{}}}", items.into_iter().collect::<Vec<_>>().join(", "))
}

fn random_graph(rng: &mut ChaCha8Rng, max_vertices: usize) -> Graph {
    let nv = rng.gen_range(1..=max_vertices);
    let mut b = GraphBuilder::new(nv);
    for _ in 0..rng.gen_range(0..=nv + 4) {
        let u = rng.gen_range(0..nv);
        let v = if rng.gen_bool(0.15) { u } else { rng.gen_range(0..nv) };
        b.add_edge(u, v);
    }
    for _ in 0..rng.gen_range(0..=2) {
        b.add_half_loop(rng.gen_range(0..nv));
    }
    b.build()
}

fn spectra_of_graph(g: &Graph, rep: &mut Report) {
    let mut a = symmetric_eigenvalues(&adjacency_f64(g));
    a.sort_by(|x, y| y.total_cmp(x));
    let mut h = hashimoto_eigenvalues(g);
    h.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    let mu = mu1(g);
    rep.line(format!("Spec(A) = {}", set_of(a.iter().map(|&x| fmt_complex(Complex::new(x, 0.0))))));
    rep.line(format!("Spec(H) = {}", set_of(h.iter().map(|&z| fmt_complex(z)))));
    rep.line(format!("mu1 = {}", fmt12(mu)));
    let h_json: Vec<[f64; 2]> = h.iter().map(|z| [z.re, z.im]).collect();
    let value = json!({ "adjacency": a, "hashimoto": h_json, "mu1": mu });
    rep.file("spectrum.json", serde_json::to_string_pretty(&value).expect("json") + "\n");
    rep.results = value;
}

fn spectra_of_cover(cover: &CoordinatizedCover, eps: &[f64], rep: &mut Report) -> Result<()> {
    let report = new_old_spectrum(cover)?;
    rep.line(format!("old = {}", set_of(report.adjacency_old.iter().map(|&x| fmt12(x)))));
    rep.line(format!("new = {}", set_of(report.adjacency_new.iter().map(|&x| fmt12(x)))));
    rep.line(format!("new spectral radius = {}", fmt12(report.new_spectral_radius)));
    rep.line(format!("mu1 = {}", fmt12(report.mu1)));
    let value = spectrum_json(&report, eps);
    if let Some(counts) = value["non_alon_count"].as_object() {
        for (e, c) in counts {
            rep.line(format!("new eigenvalues beyond Alon bound + {e}: {c}"));
        }
    }
    rep.file("spectrum.json", serde_json::to_string_pretty(&value).expect("json") + "\n");
    rep.results = value;
    Ok(())
}

fn catalog_lines(cat: &TangleCatalog, rep: &mut Report) {
    rep.line(format!(
        "minimal tangles for nu={} r={}: {} (complete up to {} edges)",
        fmt12(cat.query.nu),
        cat.query.r,
        cat.tangles.len(),
        cat.complete_up_to
    ));
    rep.line("index  vertices  edges  mu1  form");
    for (i, (g, mu)) in cat.tangles.iter().zip(&cat.mu1_values).enumerate() {
        rep.line(format!("{i:5}  {:8}  {:5}  {}  {}", g.vertex_count(), g.edge_count(), fmt12(*mu), graph_canonical_form(g)));
    }
}

fn certificate_lines(t: &Graph, nu: f64, bound: usize, rep: &mut Report) -> Result<()> {
    let set = certificates(t, nu, bound)?;
    rep.line(format!(
        "{} minimal certificates in [1,{bound}]^{} (coordinates: edges {:?})",
        set.certificates.len(),
        set.coordinates.len(),
        set.coordinates
    ));
    for v in set.vectors() {
        rep.line(format!("xi = ({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")));
    }
    let value = certificate_json(&set);
    rep.file("certificates.json", serde_json::to_string_pretty(&value).expect("json") + "\n");
    rep.results = value;
    Ok(())
}

fn census_lines(g: &Graph, k: usize, budget: u64, rep: &mut Report) -> Result<()> {
    let census = walk_census(g, k, budget)?;
    let total: u64 = census.values().sum();
    rep.line(format!("{total} SNBC walks of length {k} in {} homotopy classes", census.len()));
    rep.line("order  count  lengths  type");
    for (key, c) in &census {
        let lengths: Vec<String> = key.lengths.iter().map(|x| x.to_string()).collect();
        rep.line(format!("{:5}  {c:5}  ({})  {}", key.order, lengths.join(","), key.type_key));
    }
    rep.file("census.csv", census_csv(k, &census));
    rep.results = json!({ "total": total, "classes": census.len() });
    Ok(())
}

fn run(cli: &Cli) -> Result<Report> {
    let seed = cli.seed;
    let mut rep = Report::default();
    match &cli.command {
        Command::Sample { model, n } => {
            let spec = model.spec()?;
            let cover = sample_cover(&spec, *n, seed)?;
            rep.line(format!(
                "{} cover of degree {n}: {} vertices, {} edges",
                spec.kind,
                cover.total.vertex_count(),
                cover.total.edge_count()
            ));
            rep.file("base.graph", write_graph(&spec.base));
            rep.file("cover.txt", write_cover(&cover, "base.graph"));
            rep.results = json!({ "vertices": cover.total.vertex_count(), "edges": cover.total.edge_count() });
        }
        Command::Spectra { graph, cover, model, n, eps } => {
            let eps: Vec<f64> = parse::list(eps)?;
            if let Some(g) = graph {
                spectra_of_graph(&parse::graph(g)?, &mut rep);
            } else if let Some(path) = cover {
                spectra_of_cover(&read_cover(path)?, &eps, &mut rep)?;
            } else if let Some(n) = n {
                let c = sample_cover(&model.spec()?, *n, seed)?;
                spectra_of_cover(&c, &eps, &mut rep)?;
            } else {
                bail!("give --graph, --cover or --n");
            }
        }
        Command::IharaCheck { graph, random, max_vertices } => {
            let mut graphs = Vec::new();
            if let Some(g) = graph {
                graphs.push(parse::graph(g)?);
            }
            if *random > 0 && *max_vertices == 0 {
                bail!("--max-vertices must be positive");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            graphs.extend((0..*random).map(|_| random_graph(&mut rng, *max_vertices)));
            if graphs.is_empty() {
                bail!("give --graph or --random");
            }
            let mut held = 0;
            let mut worst = 0.0f64;
            for g in &graphs {
                let o = ihara_check(g)?;
                held += usize::from(o.holds);
                worst = worst.max(o.max_abs_residual);
            }
            rep.line(format!("{held}/{} hold", graphs.len()));
            rep.line(format!("max relative residual {}", fmt12(worst)));
            rep.results = json!({ "held": held, "checked": graphs.len(), "max_relative_residual": worst });
        }
        Command::WalksCensus { graph, k, budget } => census_lines(&parse::graph(graph)?, *k, *budget, &mut rep)?,
        Command::Tangles { nu, r, bound, graph } => {
            let q = TangleQuery::new(*nu, *r)?;
            let g = graph.as_deref().map(parse::graph).transpose()?;
            let cat = enumerate_minimal_tangles(&q, *bound)?;
            catalog_lines(&cat, &mut rep);
            if let Some(g) = g {
                match has_tangles(&g, &q, &cat)? {
                    TangleVerdict::Yes { witness, .. } => rep.line(format!("graph contains tangle {}", graph_canonical_form(&witness))),
                    TangleVerdict::NoUpToBound(b) => rep.line(format!("graph has no tangle with at most {b} edges")),
                }
            }
            rep.results = json!({ "count": cat.tangles.len(), "mu1_values": cat.mu1_values });
            rep.artifacts.push(Artifact::Catalog("catalog".into(), cat));
        }
        Command::Certificates { type_graph, nu, bound } => certificate_lines(&parse::graph(type_graph)?, *nu, *bound, &mut rep)?,
        Command::TraceMc(args) => {
            let plan = args.plan(seed)?;
            let table = mc_statistic(&plan, args.statistic(), Some(&progress))?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            rep.line(format!("{} rows", table.rows.len()));
            rep.file("trace.csv", trace_csv(&table));
            rep.results = json!({ "rows": table.rows.len(), "warnings": table.warnings });
        }
        Command::ExpansionFit { plan: args, terms } => {
            let plan = args.plan(seed)?;
            if *terms == 0 || plan.n_grid.len() < terms + 2 {
                bail!("--terms {terms} needs at least {} grid points", terms + 2);
            }
            let table = mc_statistic(&plan, args.statistic(), Some(&progress))?;
            let est = fit_expansion_table(&table, *terms)?;
            let mut csv = String::from("k,j,coefficient,stderr,condition\n");
            for (k, c) in &est.per_k {
                let coeffs: Vec<String> = c.coefficients.iter().map(|&x| fmt12(x)).collect();
                rep.line(format!("k={k}: {}", coeffs.join(", ")));
                for (j, &x) in c.coefficients.iter().enumerate() {
                    let se = c.covariance[j][j].max(0.0).sqrt();
                    csv.push_str(&format!("{k},{j},{},{},{}\n", fmt12(x), fmt12(se), fmt12(c.condition)));
                }
            }
            rep.file("trace.csv", trace_csv(&table));
            rep.file("expansion.csv", csv);
            rep.results = json!({ "order": est.order, "fit_window": est.fit_window });
        }
        Command::Nonalon { model, n, eps, trials } => {
            let spec = model.spec()?;
            let grid: Vec<usize> = parse::list(n)?;
            let eps: Vec<f64> = parse::list(eps)?;
            let table = mc_nonalon_probability(&spec, &grid, &eps, *trials, seed, Some(&progress))?;
            let mut slopes = serde_json::Map::new();
            for (e, s) in &table.slopes {
                rep.line(format!("slope eps={}: {}", fmt12(*e), s.map_or("undefined".into(), fmt12)));
                slopes.insert(fmt12(*e), json!(s));
            }
            rep.file("nonalon.csv", nonalon_csv(&table));
            rep.results = json!({ "slopes": slopes });
        }
        Command::SidestepDemo { lambda0, lambda1, j, planted, theta, n, trials } => {
            let points = parse::weighted_points(planted)?;
            let grid: Vec<usize> = parse::list(n)?;
            let model = planted_model(*lambda0, *lambda1, *j, points.clone(), grid)?;
            let bases: Vec<(Complex<f64>, f64)> = points.iter().map(|&(l, c)| (Complex::new(l, 0.0), c)).collect();
            let report = sidestep_demo(&model, *j, &bases, *theta, *trials, seed)?;
            for ((l, _), e) in points.iter().zip(&report.exponents) {
                rep.line(format!("Ein near {}: decay exponent {} (target {j})", fmt12(*l), e.map_or("undefined".into(), fmt12)));
            }
            rep.line(format!("Eout decay exponent {}", report.e_out_exponent.map_or("undefined".into(), fmt12)));
            rep.line(format!("slopes within 0.5 of j: {}; Eout decays faster: {}", report.slopes_ok, report.e_out_ok));
            let ls: Vec<f64> = points.iter().map(|p| p.0).collect();
            rep.file("sidestep.csv", sidestep_csv(&report, &ls));
            rep.results = json!({
                "exponents": report.exponents,
                "e_out_exponent": report.e_out_exponent,
                "slopes_ok": report.slopes_ok,
                "e_out_ok": report.e_out_ok,
            });
        }
        Command::Inspect { subject } => {
            inspect(subject, &mut rep)?;
            rep.artifacts.clear();
        }
    }
    Ok(rep)
}

/// Inspection reports are terminal-only.
fn inspect(subject: &Inspect, rep: &mut Report) -> Result<()> {
    match subject {
        Inspect::Walks { graph, k } => census_lines(&parse::graph(graph)?, *k, DEFAULT_BUDGET, rep)?,
        Inspect::Tangles { nu, r, bound } => {
            let cat = enumerate_minimal_tangles(&TangleQuery::new(*nu, *r)?, *bound)?;
            catalog_lines(&cat, rep);
            rep.results = json!({ "count": cat.tangles.len() });
        }
        Inspect::Certificates { type_graph, nu, bound } => certificate_lines(&parse::graph(type_graph)?, *nu, *bound, rep)?,
    }
    Ok(())
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn write_outputs(dir: &Path, cli: &Cli, rep: &Report, wall: f64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for a in &rep.artifacts {
        match a {
            Artifact::File(name, contents) => {
                fs::write(dir.join(name), contents)?;
                outputs.push(name.clone());
            }
            Artifact::Catalog(name, cat) => {
                write_catalog(&dir.join(name), cat)?;
                outputs.push(format!("{name}/"));
            }
        }
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": git_describe(),
        "command": args,
        "seed": cli.seed,
        "threads": cli.threads,
        "outputs": outputs,
        "results": rep.results,
        "wall_time_s": wall,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<nbcover::Error>()) {
        Some(e) if e.is_budget() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = with_threads(cli.threads, || run(&cli)).map_err(anyhow::Error::from).and_then(|r| r);
    let rep = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let wall = start.elapsed().as_secs_f64();
    match &cli.out {
        Some(dir) => {
            if let Err(e) = write_outputs(dir, &cli, &rep, wall) {
                eprintln!("error: writing {}: {e:#}", dir.display());
                return ExitCode::from(1);
            }
        }
        None => {
            for a in &rep.artifacts {
                if let Artifact::File(name, contents) = a {
                    if name.ends_with(".csv") {
                        print!("{contents}");
                    }
                }
            }
        }
    }
    for l in &rep.summary {
        println!("{l}");
    }
    ExitCode::SUCCESS
}
