use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use arboreal::config::Config;
use arboreal::correspondence::CorrespondencePoset;
use arboreal::expand::{corpus, draw_valid_constants, svg, total_expansion, ArborealGraph, CurveGerm2D, ExpansionConstants, Mode};
use arboreal::linalg::Coefficients;
use arboreal::models::{check_presentations, compare_leafy, compare_vertex, verify_profile, RectilinearModel, SmoothingProfile};
use arboreal::quiver::functor_check;
use arboreal::sections::{build_stalk_diagram, global_k0, invariance_report};
use arboreal::topology::{build_link_complex, generalized_link};
use arboreal::tree::{ForestJson, LeafyRootedForest, RootedTree};
use arboreal::Error;

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Largest tree accepted by functor-check.
const FUNCTOR_GUARD: usize = 6;
/// Simplex budget for the order-complex cross-check.
const ORDER_COMPLEX_LIMIT: usize = 2_000_000;

#[derive(Parser)]
#[command(name = "arboreal", version, about = "Arboreal singularities: posets, links, models, quivers and 2D expansion")]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cells and reduced homology of the link of a tree
    Link {
        /// tree text like "(a (b))", or a file holding text or JSON
        tree: String,
        /// marked leaves, comma separated (generalized link)
        #[arg(long, value_delimiter = ',')]
        marked: Vec<String>,
        /// check the bouquet claim and cross-check against the order complex
        #[arg(long)]
        homology: bool,
        #[arg(long)]
        check_intersection: bool,
    },
    /// Elements and covering relations of the correspondence poset
    Poset {
        tree: String,
        #[arg(long)]
        json: bool,
    },
    /// Rectilinear presentations, smoothing profile and comparison map
    ModelsCheck {
        tree: String,
        #[arg(long, value_delimiter = ',')]
        marked: Vec<String>,
        /// samples per vertex (default from the configuration)
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        skip_profile: bool,
    },
    /// Multiplicativity of restriction matrices over every composable pair
    FunctorCheck {
        tree: String,
        /// also push the generated object family through every element
        #[arg(long)]
        objects: bool,
    },
    /// Expand a plane-curve germ into an arboreal graph
    Expand {
        /// germ JSON file or bundled corpus name
        germ: String,
        /// "auto" draws sequentially small constants from the seed
        #[arg(long, default_value = "auto")]
        constants: String,
        #[arg(long, default_value = "full")]
        mode: Mode,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// graph JSON destination (stdout when absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// write the constants that were used
        #[arg(long)]
        constants_out: Option<PathBuf>,
    },
    /// Global K_0 sections of an expanded graph
    Sections { graph: PathBuf },
    /// Global sections across several constant draws and both modes
    Invariance {
        germ: String,
        #[arg(long, default_value_t = 5)]
        draws: usize,
    },
}

/// Failure of a requested check, as opposed to an error in the input.
struct CheckFailed(String);

enum Failure {
    Error(Error),
    Check(CheckFailed),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), e.to_string().as_bytes());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(CheckFailed(msg))) => {
            eprintln!("error[check-failed]: {}", one_line(&msg));
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            match e {
                Error::Parse(_) | Error::Io(_) | Error::TooLarge(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Outcome {
    let config = Config::resolve(cli.config.as_deref())?;
    match cli.command {
        Command::Link { tree, marked, homology, check_intersection } => cmd_link(&tree, &marked, homology, check_intersection),
        Command::Poset { tree, json } => cmd_poset(&tree, json),
        Command::ModelsCheck { tree, marked, samples, skip_profile } => {
            cmd_models_check(&config, &tree, &marked, samples.unwrap_or(config.samples), skip_profile)
        }
        Command::FunctorCheck { tree, objects } => cmd_functor_check(&tree, objects),
        Command::Expand { germ, constants, mode, svg, out, constants_out } => {
            cmd_expand(&config, &germ, &constants, mode, svg.as_deref(), out.as_deref(), constants_out.as_deref())
        }
        Command::Sections { graph } => cmd_sections(&config, &graph),
        Command::Invariance { germ, draws } => cmd_invariance(&config, &germ, draws),
    }
}

fn read_file(path: &Path) -> arboreal::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_file(path: &Path, text: &str) -> arboreal::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

enum TreeInput {
    Plain(RootedTree),
    Leafy(LeafyRootedForest),
}

fn read_tree(arg: &str, marked: &[String]) -> arboreal::Result<TreeInput> {
    let text = if Path::new(arg).is_file() { read_file(Path::new(arg))? } else { arg.to_string() };
    let input = if text.trim_start().starts_with('{') {
        let json: ForestJson = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("tree JSON: {e}")))?;
        let f = LeafyRootedForest::from_json(&json)?;
        if f.marked.is_empty() && f.trees.len() == 1 {
            TreeInput::Plain(f.trees.into_iter().next().expect("one tree"))
        } else {
            TreeInput::Leafy(f)
        }
    } else {
        TreeInput::Plain(RootedTree::parse(&text)?)
    };
    match (input, marked.is_empty()) {
        (input, true) => Ok(input),
        (TreeInput::Plain(t), false) => Ok(TreeInput::Leafy(LeafyRootedForest::new(vec![t], marked.to_vec())?)),
        (TreeInput::Leafy(f), false) => {
            let mut all = f.marked.clone();
            all.extend(marked.iter().cloned());
            Ok(TreeInput::Leafy(LeafyRootedForest::new(f.trees, all)?))
        }
    }
}

fn plain_tree(arg: &str) -> arboreal::Result<RootedTree> {
    match read_tree(arg, &[])? {
        TreeInput::Plain(t) => Ok(t),
        TreeInput::Leafy(_) => Err(Error::Validation("this command takes a single unmarked tree".into())),
    }
}

fn read_germ(arg: &str) -> arboreal::Result<(String, CurveGerm2D)> {
    let path = Path::new(arg);
    if path.is_file() {
        let g = CurveGerm2D::from_json(&read_file(path)?)?;
        let name = g.name.clone().unwrap_or_else(|| path.file_stem().map_or(arg.into(), |s| s.to_string_lossy().into_owned()));
        return Ok((name, g));
    }
    let name = arg.strip_suffix(".json").unwrap_or(arg);
    corpus::by_name(name)
        .map(|g| (name.to_string(), g))
        .ok_or_else(|| Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{arg}: no such file or bundled germ"))))
}

fn cmd_link(arg: &str, marked: &[String], homology: bool, check_intersection: bool) -> Outcome {
    let input = read_tree(arg, marked)?;
    let (label, complex, size) = match &input {
        TreeInput::Plain(t) => (t.to_string(), build_link_complex(t)?, Some(t.len())),
        TreeInput::Leafy(f) => {
            let names: Vec<String> = f.trees.iter().map(|t| t.to_string()).collect();
            (format!("{} marked {{{}}}", names.join(" "), f.marked.join(",")), generalized_link(f)?, None)
        }
    };
    let mut failures = Vec::new();
    out!("tree: {label}");
    if complex.is_empty() {
        out!("cells: none; empty link");
        if homology && size == Some(1) {
            out!("bouquet: one (-1)-sphere");
        }
    } else {
        let counts = complex.counts_by_dim();
        let cells: Vec<String> = counts.iter().enumerate().filter(|(_, &n)| n > 0).map(|(k, n)| format!("{n}×dim{k}")).collect();
        let betti = complex.homology(Coefficients::Rational)?;
        out!("cells: {}; reduced betti: {}", cells.join(" "), betti.summary());
        if homology {
            match complex.order_complex_homology(Coefficients::Rational, ORDER_COMPLEX_LIMIT) {
                Ok(oc) if oc.reduced_betti == betti.reduced_betti => out!("order complex: agrees"),
                Ok(oc) => {
                    out!("order complex: {}", oc.summary());
                    failures.push("cellular and order-complex homology differ".to_string());
                }
                Err(Error::TooLarge(_)) => out!("order complex: skipped (more than {ORDER_COMPLEX_LIMIT} simplices)"),
                Err(e) => return Err(e.into()),
            }
            if let Some(n) = size {
                match betti.concentration() {
                    Some((k, r)) if r as usize == n => out!("bouquet: {n} spheres of dimension {k}"),
                    _ => {
                        out!("bouquet: fails");
                        failures.push(format!("homology is not a bouquet of {n} spheres"));
                    }
                }
            }
        }
    }
    if check_intersection {
        let report = complex.check_intersection_property();
        if report.holds {
            out!("intersection property: holds");
        } else {
            let w = report.witness.expect("failing report has a witness");
            out!("intersection property: fails for {} and {} (maximal common faces: {})", w.first, w.second, w.maximal_common_faces.join(", "));
            failures.push("intersection property fails".into());
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(CheckFailed(failures.join("; "))))
    }
}

fn cmd_poset(arg: &str, as_json: bool) -> Outcome {
    let t = plain_tree(arg)?;
    let poset = CorrespondencePoset::build(&t)?;
    let n = poset.len();
    let covers: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && poset.leq(i, j) && !(0..n).any(|k| k != i && k != j && poset.leq(i, k) && poset.leq(k, j)))
        .collect();
    if as_json {
        let elements: Vec<_> = poset
            .elements()
            .iter()
            .map(|p| json!({"label": p.label(), "sub": p.sub_vertices().iter().map(|&v| t.name(v)).collect::<Vec<_>>(), "derived_size": p.derived().len()}))
            .collect();
        let out = json!({"schema": "arboreal.poset/1", "tree": t.to_string(), "size": n, "minimum": poset.minimum(), "elements": elements, "covers": covers});
        out!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    } else {
        out!("tree: {t}");
        out!("elements: {n}");
        out!("minimum: {}", poset.get(poset.minimum()).label());
        for (i, p) in poset.elements().iter().enumerate() {
            out!("{i:>4}  {}", p.label());
        }
        let mut line = String::from("covers:");
        for (i, j) in &covers {
            let _ = write!(line, " {i}<{j}");
        }
        out!("{line}");
    }
    Ok(())
}

fn cmd_models_check(config: &Config, arg: &str, marked: &[String], samples: usize, skip_profile: bool) -> Outcome {
    let input = read_tree(arg, marked)?;
    let mut rng = config.rng();
    let profile = SmoothingProfile::standard(config.profile.delta);
    let tol = config.tolerance("membership");
    let mut failures = Vec::new();
    let model = match &input {
        TreeInput::Plain(t) => RectilinearModel::new(t.as_forest().clone()),
        TreeInput::Leafy(f) => RectilinearModel::leafy(f)?,
    };
    let pres = check_presentations(&model, samples.min(10_000), &mut rng)?;
    out!(
        "presentations: {} disagreements over {} random and {} grid points",
        pres.disagreements, pres.random_samples, pres.grid_points
    );
    if !pres.passed() {
        failures.push("rectilinear presentations disagree".to_string());
    }
    if !skip_profile {
        let report = verify_profile(&profile, config.profile.grid, config.tolerance("profile"));
        for c in &report.checks {
            out!("profile {}: {} (worst {:.3e})", c.name, if c.passed { "pass" } else { "FAIL" }, c.worst);
        }
        if !report.passed() {
            failures.push("smoothing profile".into());
        }
    }
    let reports = match &input {
        TreeInput::Plain(_) => (0..model.forest().len())
            .map(|a| compare_vertex(&model, &profile, a, samples, tol, config.tolerance("injectivity"), &mut rng))
            .collect::<arboreal::Result<Vec<_>>>()?,
        TreeInput::Leafy(_) => vec![compare_leafy(&model, &profile, samples, tol, &mut rng)?],
    };
    for r in &reports {
        out!(
            "compare {}: {} samples, max slack {:.3e}, {} membership, {} injectivity, {} sign violations",
            r.vertex, r.samples, r.max_membership_violation, r.membership_failures, r.injectivity_violations, r.sign_violations
        );
        if !r.passed() {
            failures.push(format!("comparison at {}", r.vertex));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(CheckFailed(format!("failed: {}", failures.join(", ")))))
    }
}

fn cmd_functor_check(arg: &str, objects: bool) -> Outcome {
    let t = plain_tree(arg)?;
    if t.len() > FUNCTOR_GUARD {
        return Err(Error::TooLarge(format!("functor-check accepts trees with at most {FUNCTOR_GUARD} vertices, got {}", t.len())).into());
    }
    let report = functor_check(&t, objects || t.len() <= 4)?;
    out!("tree: {}", report.tree);
    out!("poset: {} elements", report.poset_size);
    out!("{}", report.summary());
    if report.objects_checked > 0 {
        out!("objects: {} pushed forward, {} K_0 mismatches", report.objects_checked, report.k0_mismatches);
    }
    out!("euler form unimodular: {}", report.euler_unimodular);
    for f in &report.failures {
        out!("failure: {f}");
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(CheckFailed(report.summary())))
    }
}

fn cmd_expand(
    config: &Config,
    germ_arg: &str,
    constants: &str,
    mode: Mode,
    svg_out: Option<&Path>,
    out: Option<&Path>,
    constants_out: Option<&Path>,
) -> Outcome {
    let (_, germ) = read_germ(germ_arg)?;
    let c = if constants == "auto" {
        draw_valid_constants(&germ, &config.constants, mode, &config.geometry(), &mut config.rng())?
    } else {
        ExpansionConstants::from_json(&read_file(Path::new(constants))?)?
    };
    let graph = total_expansion(&germ, &c, mode, &config.geometry(), &config.classify())?;
    if let Some(p) = constants_out {
        write_file(p, &(serde_json::to_string_pretty(&c).expect("constants serialize") + "\n"))?;
    }
    if let Some(p) = svg_out {
        write_file(p, &svg::render(Some(&germ), &graph))?;
    }
    match out {
        Some(p) => {
            write_file(p, &(graph.to_json() + "\n"))?;
            out!("census: {}", graph.census());
        }
        None => out!("{}", graph.to_json()),
    }
    Ok(())
}

fn cmd_sections(config: &Config, path: &Path) -> Outcome {
    let mut graph = ArborealGraph::from_json(&read_file(path)?)?;
    graph.classify_all(&config.classify());
    if let Some(e) = graph.first_failure() {
        return Err(e.into());
    }
    let g = global_k0(&build_stalk_diagram(&graph)?);
    let out = json!({
        "schema": "arboreal.sections/1",
        "census": graph.census().to_string(),
        "nodes": graph.nodes.len(),
        "edges": graph.edges.len(),
        "rank": g.rank,
        "invariant_factors": g.invariant_factors,
    });
    out!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    Ok(())
}

fn cmd_invariance(config: &Config, germ_arg: &str, draws: usize) -> Outcome {
    let (name, germ) = read_germ(germ_arg)?;
    let report = invariance_report(&name, &germ, draws, config.seed, &config.constants, &config.geometry(), &config.classify())?;
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value.as_object_mut().expect("object").insert("schema".into(), json!("arboreal.invariance/1"));
    out!("{}", serde_json::to_string_pretty(&value).expect("serializes"));
    if report.full_consistent && report.intro_consistent != Some(false) {
        Ok(())
    } else {
        Err(Failure::Check(CheckFailed(format!("global sections of {name} differ across draws"))))
    }
}
