use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use archegraph::experiments::{
    alignment_by_cycles, cospectral, shift_accuracy, simplex_recovery, stratified_similarity, GraphType,
};
use archegraph::fit::{fit_min_volume_simplex, FitOptions};
use archegraph::matching::{cond_sim_grad_descent, metropolis_chain};
use archegraph::pencil::{kappa, kappa_shifted};
use archegraph::rng::split;
use archegraph::simquery::SimilarityIndex;
use archegraph::spectral::{embed, EmbeddingDump};
use archegraph::synth::{gen_er, gen_rmat, gen_simplex_cloud, gen_stratified, random_permutation_k_cycles};
use archegraph::{Graph, Permutation};
use serde::Serialize;
use serde_json::json;

use crate::output::{load_graph, read_input, with_suffix, write_csv, write_json, write_text, Header};
use crate::{
    Cli, Command, CriterionFailed, ExperimentCommand, Format, GenCommand, GraphKind, InputError, Method,
};

pub fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Embed(a) => {
            let g = connected_graph(&a.graph, a.largest_component)?;
            let emb = embed(&g, a.k)?;
            write_json(a.out.as_deref(), &Header::new("embed", seed, a), &EmbeddingDump::new(&g, &emb))
        }
        Command::Vertexsim(a) => {
            let g = connected_graph(&a.graph, a.largest_component)?;
            let emb = embed(&g, a.k)?;
            let fit = fit_min_volume_simplex(&emb.points(), a.gamma, &FitOptions::default())?;
            let header = Header::new("vertexsim", seed, a);
            let labels: Vec<String> = (0..g.n()).map(|v| g.label(v)).collect();
            write_index(&a.index, &header, &labels, &fit.mixture.theta)?;
            write_json(a.out.as_deref(), &header, &json!({ "vertices": labels, "fit": fit.dump() }))
        }
        Command::Query(a) => {
            let (labels, rows) = read_index(&a.index)?;
            let v = labels
                .iter()
                .position(|l| *l == a.vertex)
                .ok_or_else(|| InputError(format!("vertex {:?} not in {}", a.vertex, a.index.display())))?;
            let index = SimilarityIndex::new(rows)?;
            let hits = if a.dissimilar { index.most_dissimilar(v, a.top)? } else { index.most_similar(v, a.top)? };
            let out: Vec<QueryRow> = hits
                .iter()
                .enumerate()
                .map(|(r, h)| QueryRow { rank: r + 1, vertex_label: labels[h.vertex].clone(), distance: h.distance })
                .collect();
            write_csv(a.out.as_deref(), &Header::new("query", seed, a), &out)
        }
        Command::Kappa(a) => {
            let (ga, gb) = (load_graph(&a.graph_a)?, load_graph(&a.graph_b)?);
            let r = match a.method {
                Method::Exact => kappa(&ga.laplacian(), &gb.laplacian())?,
                Method::Shifted => kappa_shifted(&ga.laplacian(), &gb.laplacian(), a.epsilon)?,
            };
            write_json(a.out.as_deref(), &Header::new("kappa", seed, a), &r)
        }
        Command::Match(a) => {
            let (ga, gb) = (load_graph(&a.graph_a)?, load_graph(&a.graph_b)?);
            let sigma0 = initial_alignment(a.init.as_deref(), &ga, &gb)?;
            let r = cond_sim_grad_descent(&ga.laplacian(), &gb.laplacian(), a.q, a.epsilon, &sigma0)?;
            let mut v = serde_json::to_value(&r)?;
            v["alignment"] = json!(label_pairs(&r.sigma, &ga, &gb));
            write_json(a.out.as_deref(), &Header::new("match", seed, a), &v)
        }
        Command::Metropolis(a) => {
            let (ga, gb) = (load_graph(&a.graph_a)?, load_graph(&a.graph_b)?);
            let sigma0 = initial_alignment(a.init.as_deref(), &ga, &gb)?;
            let samples = metropolis_chain(&ga.laplacian(), &gb.laplacian(), a.lambda, a.steps, split(seed, 0), &sigma0)?;
            let rows: Vec<SampleRow> = samples
                .iter()
                .map(|s| SampleRow {
                    step_index: s.step_index,
                    sigma: s.sigma.as_slice().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
                    f_value: s.f_value,
                })
                .collect();
            write_csv(a.out.as_deref(), &Header::new("metropolis", seed, a), &rows)
        }
        Command::Gen(g) => gen(g, seed),
        Command::Experiment(e) => experiment(e, seed),
    }
}

fn connected_graph(path: &Path, largest: bool) -> Result<Graph> {
    let g = load_graph(path)?;
    if largest {
        return Ok(g.largest_component());
    }
    if !g.is_connected() {
        bail!(InputError(format!(
            "{} is disconnected; pass --largest-component to use its largest component",
            path.display()
        )));
    }
    Ok(g)
}

#[derive(Serialize)]
struct QueryRow {
    rank: usize,
    vertex_label: String,
    distance: f64,
}

#[derive(Serialize)]
struct SampleRow {
    step_index: usize,
    sigma: String,
    f_value: f64,
}

fn write_index(path: &Path, header: &Header, labels: &[String], theta: &[Vec<f64>]) -> Result<()> {
    let mut text = header.comment_lines();
    let mut w = csv::Writer::from_writer(Vec::new());
    let width = theta.first().map_or(0, |r| r.len());
    let mut head = vec!["vertex_label".to_string()];
    head.extend((0..width).map(|j| format!("theta_{j}")));
    w.write_record(&head)?;
    for (l, row) in labels.iter().zip(theta) {
        let mut rec = vec![l.clone()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    text.push_str(std::str::from_utf8(&w.into_inner()?)?);
    write_text(path, &text)
}

fn read_index(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_input(path)?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        let mut it = rec.iter();
        labels.push(it.next().unwrap_or_default().to_string());
        let row = it
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!(InputError(format!("{} has no rows", path.display())));
    }
    Ok((labels, rows))
}

fn label_indices(g: &Graph) -> HashMap<String, usize> {
    (0..g.n()).map(|v| (g.label(v), v)).collect()
}

/// `σ` maps each vertex of `b` to the vertex of `a` it is compared with.
/// The file lists `label_a label_b` pairs.
fn initial_alignment(path: Option<&Path>, a: &Graph, b: &Graph) -> Result<Permutation> {
    let n = b.n();
    let Some(path) = path else {
        return Ok(Permutation::identity(n));
    };
    if a.n() != n {
        bail!(InputError(format!("graphs have {} and {n} vertices", a.n())));
    }
    let text = read_input(path)?;
    let (ia, ib) = (label_indices(a), label_indices(b));
    let mut pairs = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| InputError(format!("{}:{}: {msg}", path.display(), lineno + 1));
        if toks.len() != 2 {
            bail!(bad("expected two labels".into()));
        }
        let u = ia.get(toks[0]).ok_or_else(|| bad(format!("unknown vertex {:?} in first graph", toks[0])))?;
        let v = ib.get(toks[1]).ok_or_else(|| bad(format!("unknown vertex {:?} in second graph", toks[1])))?;
        pairs.push_str(&format!("{v} {u}\n"));
    }
    Permutation::from_alignment_text(&pairs, n).map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}

fn label_pairs(sigma: &Permutation, a: &Graph, b: &Graph) -> Vec<(String, String)> {
    let inv = sigma.inverse();
    (0..a.n()).map(|u| (a.label(u), b.label(inv.apply(u)))).collect()
}

fn gen(cmd: &GenCommand, seed: u64) -> Result<()> {
    let s = split(seed, 0);
    match cmd {
        GenCommand::Er(a) => {
            let g = gen_er(a.n, a.p, s)?;
            write_graph(&a.out, &Header::new("gen er", seed, a), &g, json!({}))
        }
        GenCommand::Rmat(a) => {
            let probs: [f64; 4] = a.probs.as_slice().try_into().context("--probs takes four values")?;
            let attempts = a.attempts.unwrap_or(8 << a.levels);
            let g = gen_rmat(a.levels, attempts, probs, s)?;
            write_graph(&a.out, &Header::new("gen rmat", seed, a), &g, json!({ "attempts": attempts }))
        }
        GenCommand::Stratified(a) => {
            let (g, ages) = gen_stratified(a.n, a.alpha, a.p0, s)?;
            write_graph(&a.out, &Header::new("gen stratified", seed, a), &g, json!({ "ages": ages }))
        }
        GenCommand::Cloud(a) => {
            let c = gen_simplex_cloud(a.k, a.points, a.sigma, s)?;
            let header = Header::new("gen cloud", seed, a);
            write_matrix(&with_suffix(&a.out, ".points.csv"), &header, "x", &c.points)?;
            write_matrix(&with_suffix(&a.out, ".simplex.csv"), &header, "x", &c.true_simplex.vertex_list())?;
            write_json(
                Some(&with_suffix(&a.out, ".json")),
                &header,
                &json!({ "k": a.k, "points": a.points, "weights": c.weights }),
            )
        }
        GenCommand::Perm(a) => {
            let p = random_permutation_k_cycles(a.n, a.cycles, s)?;
            let header = Header::new("gen perm", seed, a);
            let text = header.comment_lines() + &p.to_alignment_text();
            write_text(&with_suffix(&a.out, ".perm"), &text)?;
            write_json(
                Some(&with_suffix(&a.out, ".json")),
                &header,
                &json!({ "sigma": p, "cycles": p.num_cycles() }),
            )
        }
    }
}

/// `PREFIX.edges` plus a JSON sidecar with the graph and `extra` fields.
fn write_graph(prefix: &Path, header: &Header, g: &Graph, mut extra: serde_json::Value) -> Result<()> {
    write_text(&with_suffix(prefix, ".edges"), &(header.comment_lines() + &g.to_edge_list()))?;
    let isolated = g.degrees().iter().filter(|&&d| d == 0).count();
    extra["n"] = json!(g.n());
    extra["edges"] = json!(g.edges());
    extra["isolated_vertices"] = json!(isolated);
    write_json(Some(&with_suffix(prefix, ".json")), header, &extra)
}

fn write_matrix(path: &Path, header: &Header, prefix: &str, rows: &[Vec<f64>]) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..width).map(|j| format!("{prefix}{j}")))?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    write_text(path, &(header.comment_lines() + std::str::from_utf8(&w.into_inner()?)?))
}

fn emit<R: Serialize, T: Serialize>(
    out: Option<&Path>,
    format: Format,
    header: &Header,
    report: &R,
    rows: &[T],
) -> Result<()> {
    match format {
        Format::Json => write_json(out, header, report),
        Format::Csv => write_csv(out, header, rows),
    }
}

fn verdict(pass: bool, summary: String) -> Result<()> {
    eprintln!("{} {summary}", if pass { "PASS" } else { "FAIL" });
    if pass {
        Ok(())
    } else {
        Err(CriterionFailed(summary).into())
    }
}

fn experiment(cmd: &ExperimentCommand, seed: u64) -> Result<()> {
    match cmd {
        ExperimentCommand::Fig3(a) => {
            let seeds: Vec<u64> = (0..a.reps).map(|i| split(seed, i)).collect();
            let r = simplex_recovery(&a.ks, a.sigma, &seeds, a.points, a.gamma)?;
            emit(a.out.as_deref(), a.format, &Header::new("experiment fig3", seed, a), &r, &r.rows)?;
            let ok = r.rows.iter().filter(|x| x.pass).count();
            verdict(r.pass, format!("fig3: {ok}/{} cells within {}", r.rows.len(), r.bound))
        }
        ExperimentCommand::Fig4(a) => {
            let seeds: Vec<u64> = (0..a.reps).map(|i| split(seed, i)).collect();
            let r = stratified_similarity(a.n, a.alpha, a.p0, a.k, a.gamma, &seeds)?;
            emit(a.out.as_deref(), a.format, &Header::new("experiment fig4", seed, a), &r, &r.rows)?;
            let ok = r.rows.iter().filter(|x| x.pass).count();
            verdict(r.pass, format!("fig4: same-age pairs closer in {ok}/{} networks", r.rows.len()))
        }
        ExperimentCommand::Table2(a) => {
            let t = match a.graph_type {
                GraphKind::Er => GraphType::ErdosRenyi,
                GraphKind::Rmat => GraphType::Rmat,
            };
            let r = alignment_by_cycles(a.n, t, a.q, a.epsilon, a.batches, seed, a.min_successes, a.min_batches)?;
            emit(a.out.as_deref(), a.format, &Header::new("experiment table2", seed, a), &r, &r.cells)?;
            verdict(r.pass, format!("table2: successes per batch {:?}", r.successes))
        }
        ExperimentCommand::ShiftAccuracy(a) => {
            let extra = a
                .graph
                .iter()
                .map(|p| Ok((p.display().to_string(), load_graph(p)?.largest_component())))
                .collect::<Result<Vec<_>>>()?;
            let r = shift_accuracy(a.pairs, seed, &extra)?;
            emit(a.out.as_deref(), a.format, &Header::new("experiment shift-accuracy", seed, a), &r, &r.rows)?;
            let worst = r.rows.iter().map(|x| x.relative_gap).fold(0.0, f64::max);
            verdict(r.pass, format!("shift-accuracy: max relative gap {worst:.3e} over {} pairs", r.rows.len()))
        }
        ExperimentCommand::Cospectral(a) => {
            let r = cospectral()?;
            write_json(a.out.as_deref(), &Header::new("experiment cospectral", seed, a), &r)?;
            verdict(r.pass, format!("cospectral: min kappa {:.5} (expected {} ± {})", r.min_kappa, r.expected, r.tolerance))
        }
    }
}
