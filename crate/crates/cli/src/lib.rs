//! The `treerank` command line: argument handling, tree input, and text or
//! JSON rendering of every library operation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use treerank::{
    compare, count_rank_functions, date_resolved, date_tree, parse_newick, rank_moments,
    rank_probabilities, resolution_count, to_decimal, write_newick_with, BigCount, Edge,
    EdgeLengthReport, Error, PhyloTree, RankSampler, Rational, TimingModel,
    DEFAULT_MAX_RESOLUTIONS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "treerank",
    version,
    about = "Rank and timing inference on rooted tree topologies"
)]
struct Cli {
    /// Emit a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Significant digits for decimal renderings.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u16).range(1..=100))]
    precision: u16,

    /// Print exact rationals only, without decimals.
    #[arg(long, global = true)]
    exact: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// Newick file, or "-" for standard input.
    file: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Number of rank functions of the tree.
    Count(Input),
    /// Every vertex with its preorder id, kind and parent.
    ListVertices(Input),
    /// Distribution of a vertex's rank.
    Rankprob {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        vertex: String,
        /// Append mean and variance.
        #[arg(long)]
        moments: bool,
    },
    /// Probability that `u` comes before `v`.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Expected edge lengths and an annotated Newick tree.
    Date {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "yule")]
        model: TimingModel,
        /// Include pendant edges and leaf depths (Yule, binary trees).
        #[arg(long)]
        pendant: bool,
        /// Largest number of binary resolutions averaged over for a non-binary tree.
        #[arg(long, default_value_t = DEFAULT_MAX_RESOLUTIONS)]
        max_resolutions: usize,
    },
    /// Uniformly sampled rank functions.
    Sample {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print a frequency table instead of the draws.
        #[arg(long)]
        summary: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Count(_) => "count",
            Command::ListVertices(_) => "list-vertices",
            Command::Rankprob { .. } => "rankprob",
            Command::Compare { .. } => "compare",
            Command::Date { .. } => "date",
            Command::Sample { .. } => "sample",
        }
    }

    fn input(&self) -> &Input {
        match self {
            Command::Count(input) | Command::ListVertices(input) => input,
            Command::Rankprob { input, .. }
            | Command::Compare { input, .. }
            | Command::Date { input, .. }
            | Command::Sample { input, .. } => input,
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::EmptyTree
            | Error::DuplicateLabel(_)
            | Error::UnaryVertex(_) => EXIT_PARSE,
            Error::ResolutionCap { .. } => EXIT_CAP,
            _ => EXIT_CONTRACT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

struct VertexRow {
    id: String,
    name: String,
    leaf: bool,
    parent: Option<String>,
    leaves_below: usize,
}

struct EdgeRow {
    parent: String,
    child: String,
    pendant: bool,
    length: Rational,
}

enum Outcome {
    Count(BigCount),
    Vertices(Vec<VertexRow>),
    RankProb {
        vertex: String,
        p: Vec<Rational>,
        moments: Option<(Rational, Rational)>,
    },
    Compare {
        u: String,
        v: String,
        p: Rational,
    },
    Date {
        model: TimingModel,
        resolutions: Option<BigCount>,
        edges: Vec<EdgeRow>,
        leaf_depths: Vec<(String, Rational)>,
        newick: String,
    },
    Samples {
        seed: u64,
        draws: Vec<Vec<String>>,
    },
    SampleSummary {
        seed: u64,
        n: usize,
        rows: Vec<(Vec<String>, usize)>,
    },
}

/// Runs one invocation and returns its exit code. `argv[0]` is the program
/// name.
pub fn run<I, T>(argv: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, stdin) {
        Ok((tree, outcome)) => {
            let text = if cli.json {
                render_json(&cli, &tree, &outcome)
            } else {
                render_text(&cli, &outcome)
            };
            match out.write_all(text.as_bytes()) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_tree(input: &Input, stdin: &mut dyn Read) -> Result<PhyloTree, Failure> {
    let io = |e: std::io::Error| Failure {
        code: EXIT_USAGE,
        message: format!("cannot read {}: {e}", input.file),
    };
    let text = if input.file == "-" {
        let mut s = String::new();
        stdin.read_to_string(&mut s).map_err(io)?;
        s
    } else {
        fs::read_to_string(&input.file).map_err(io)?
    };
    Ok(parse_newick(&text)?)
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> Result<(PhyloTree, Outcome), Failure> {
    let tree = read_tree(cli.command.input(), stdin)?;
    let outcome = match &cli.command {
        Command::Count(_) => Outcome::Count(count_rank_functions(&tree)?),
        Command::ListVertices(_) => Outcome::Vertices(
            tree.vertices()
                .map(|v| VertexRow {
                    id: v.to_string(),
                    name: tree.name(v),
                    leaf: tree.is_leaf(v),
                    parent: tree.parent(v).map(|p| tree.name(p)),
                    leaves_below: tree.leaves_below(v),
                })
                .collect(),
        ),
        Command::Rankprob {
            vertex, moments, ..
        } => {
            let v = tree.resolve(vertex)?;
            let dist = rank_probabilities(&tree, v)?;
            let moments = moments.then(|| {
                let m = rank_moments(&dist);
                (m.mean, m.variance)
            });
            Outcome::RankProb {
                vertex: tree.name(v),
                p: dist.probabilities().to_vec(),
                moments,
            }
        }
        Command::Compare { u, v, .. } => {
            let (u, v) = (tree.resolve(u)?, tree.resolve(v)?);
            Outcome::Compare {
                u: tree.name(u),
                v: tree.name(v),
                p: compare(&tree, u, v)?,
            }
        }
        Command::Date {
            model,
            pendant,
            max_resolutions,
            ..
        } => date(
            &tree,
            *model,
            *pendant,
            *max_resolutions,
            cli.precision as usize,
        )?,
        Command::Sample {
            n, seed, summary, ..
        } => {
            if tree.interior_count() == 0 {
                return Err(Error::NoInteriorVertex.into());
            }
            let mut sampler = RankSampler::new(&tree, *seed);
            let names =
                |order: &[treerank::VertexId]| order.iter().map(|&v| tree.name(v)).collect();
            if *summary {
                let mut counts: BTreeMap<Vec<treerank::VertexId>, usize> = BTreeMap::new();
                for _ in 0..*n {
                    *counts.entry(sampler.draw().order().to_vec()).or_default() += 1;
                }
                Outcome::SampleSummary {
                    seed: *seed,
                    n: *n,
                    rows: counts.iter().map(|(order, &c)| (names(order), c)).collect(),
                }
            } else {
                Outcome::Samples {
                    seed: *seed,
                    draws: (0..*n).map(|_| names(sampler.draw().order())).collect(),
                }
            }
        }
    };
    Ok((tree, outcome))
}

fn date(
    tree: &PhyloTree,
    model: TimingModel,
    pendant: bool,
    max_resolutions: usize,
    precision: usize,
) -> Result<Outcome, Failure> {
    let binary = tree.is_binary();
    if pendant && !binary {
        return Err(Failure {
            code: EXIT_CONTRACT,
            message: "pendant edge lengths need a binary tree".into(),
        });
    }
    let report: EdgeLengthReport = if binary {
        date_tree(tree, model, pendant)?
    } else {
        date_resolved(tree, model, max_resolutions)?
    };
    let edges = tree
        .edges()
        .filter_map(|e: Edge| {
            report.length(e).map(|len| EdgeRow {
                parent: tree.name(e.parent),
                child: tree.name(e.child),
                pendant: tree.is_leaf(e.child),
                length: len.clone(),
            })
        })
        .collect();
    let newick = write_newick_with(tree, |e| report.length(e).map(|x| to_decimal(x, precision)));
    Ok(Outcome::Date {
        model,
        resolutions: (!binary).then(|| resolution_count(tree)),
        edges,
        leaf_depths: report
            .leaf_depths
            .iter()
            .map(|(&leaf, d)| (tree.name(leaf), d.clone()))
            .collect(),
        newick,
    })
}

fn exact_value(x: &Rational) -> Value {
    Value::String(x.to_string())
}

impl Outcome {
    /// JSON payload with every rational rendered by `num`.
    fn payload(&self, num: &dyn Fn(&Rational) -> Value) -> Value {
        match self {
            Outcome::Count(c) => json!({ "count": c.to_string() }),
            Outcome::Vertices(rows) => json!({
                "vertices": rows.iter().map(|r| json!({
                    "id": r.id,
                    "name": r.name,
                    "kind": if r.leaf { "leaf" } else { "interior" },
                    "parent": r.parent,
                    "leaves_below": r.leaves_below,
                })).collect::<Vec<_>>()
            }),
            Outcome::RankProb { vertex, p, moments } => {
                let mut m = Map::new();
                m.insert("vertex".into(), json!(vertex));
                m.insert(
                    "distribution".into(),
                    p.iter()
                        .enumerate()
                        .map(|(k, x)| json!({ "rank": k + 1, "p": num(x) }))
                        .collect(),
                );
                if let Some((mean, var)) = moments {
                    m.insert("mean".into(), num(mean));
                    m.insert("variance".into(), num(var));
                }
                Value::Object(m)
            }
            Outcome::Compare { u, v, p } => json!({ "u": u, "v": v, "p": num(p) }),
            Outcome::Date {
                model,
                resolutions,
                edges,
                leaf_depths,
                newick,
            } => {
                let mut m = Map::new();
                m.insert("model".into(), json!(model.to_string()));
                if let Some(r) = resolutions {
                    m.insert("resolutions".into(), json!(r.to_string()));
                }
                m.insert(
                    "edges".into(),
                    edges
                        .iter()
                        .map(|e| {
                            json!({
                                "parent": e.parent,
                                "child": e.child,
                                "pendant": e.pendant,
                                "length": num(&e.length),
                            })
                        })
                        .collect(),
                );
                if !leaf_depths.is_empty() {
                    let depths: Map<String, Value> = leaf_depths
                        .iter()
                        .map(|(name, d)| (name.clone(), num(d)))
                        .collect();
                    m.insert("leaf_depths".into(), Value::Object(depths));
                }
                m.insert("newick".into(), json!(newick));
                Value::Object(m)
            }
            Outcome::Samples { seed, draws } => json!({
                "seed": seed,
                "n": draws.len(),
                "draws": draws,
            }),
            Outcome::SampleSummary { seed, n, rows } => json!({
                "seed": seed,
                "n": n,
                "frequencies": rows.iter().map(|(order, c)| json!({
                    "order": order,
                    "count": c,
                    "frequency": num(&Rational::new((*c).into(), (*n).into())),
                })).collect::<Vec<_>>()
            }),
        }
    }
}

fn render_json(cli: &Cli, tree: &PhyloTree, outcome: &Outcome) -> String {
    let precision = cli.precision as usize;
    let decimal = if cli.exact {
        Value::Null
    } else {
        outcome.payload(&|x| Value::String(to_decimal(x, precision)))
    };
    let doc = json!({
        "command": cli.command.name(),
        "tree": {
            "leaves": tree.leaf_count(),
            "interior": tree.interior_count(),
            "binary": tree.is_binary(),
        },
        "payload": outcome.payload(&exact_value),
        "exact": cli.exact,
        "decimal": decimal,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    s.push('\n');
    s
}

fn render_text(cli: &Cli, outcome: &Outcome) -> String {
    let num = |x: &Rational| {
        if cli.exact {
            x.to_string()
        } else {
            format!("{x} ({})", to_decimal(x, cli.precision as usize))
        }
    };
    let mut s = String::new();
    let mut line = |l: String| {
        s.push_str(&l);
        s.push('\n');
    };
    match outcome {
        Outcome::Count(c) => line(c.to_string()),
        Outcome::Vertices(rows) => {
            line("id\tname\tkind\tparent\tleaves".into());
            for r in rows {
                line(format!(
                    "{}\t{}\t{}\t{}\t{}",
                    r.id,
                    r.name,
                    if r.leaf { "leaf" } else { "interior" },
                    r.parent.as_deref().unwrap_or("-"),
                    r.leaves_below
                ));
            }
        }
        Outcome::RankProb { p, moments, .. } => {
            line("rank\tprobability".into());
            for (k, x) in p.iter().enumerate() {
                line(format!("{}\t{}", k + 1, num(x)));
            }
            if let Some((mean, var)) = moments {
                line(format!("mean\t{}", num(mean)));
                line(format!("variance\t{}", num(var)));
            }
        }
        Outcome::Compare { p, .. } => line(num(p)),
        Outcome::Date {
            resolutions,
            edges,
            leaf_depths,
            newick,
            ..
        } => {
            if let Some(r) = resolutions {
                line(format!("averaged over {r} binary resolutions"));
            }
            line("parent\tchild\tlength".into());
            for e in edges {
                line(format!("{}\t{}\t{}", e.parent, e.child, num(&e.length)));
            }
            if !leaf_depths.is_empty() {
                line("leaf\tdepth".into());
                for (name, d) in leaf_depths {
                    line(format!("{name}\t{}", num(d)));
                }
            }
            line(newick.clone());
        }
        Outcome::Samples { draws, .. } => {
            for d in draws {
                line(d.join(" "));
            }
        }
        Outcome::SampleSummary { n, rows, .. } => {
            line("count\tfrequency\torder".into());
            for (order, c) in rows {
                let f = Rational::new((*c).into(), (*n).into());
                line(format!("{c}\t{}\t{}", num(&f), order.join(" ")));
            }
        }
    }
    s
}
