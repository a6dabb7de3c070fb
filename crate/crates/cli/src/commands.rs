use std::io::BufRead;
use std::path::Path;

use entrenet_core::evaluation::{beta_sweep, marginal_report, FitReport, MarginalReport};
use entrenet_core::io::{
    build_bank_problem, build_trade_problem, load_balance_sheets, load_trade_matrix, make_q2_cut,
    CutSummary, TradeDataset,
};
use entrenet_core::model::CategoryRuleSet;
use entrenet_core::netanalysis::{
    compute_metrics, degree_ccdf, degree_preserved_randomize, detect_communities, fit_relative_threshold,
    pagerank, truncate_percentile, CcdfPoint, MetricStats, DEFAULT_DAMPING, DEFAULT_TOLERANCE,
};
use entrenet_core::solver::solve_ridge;
use entrenet_core::{FlowMatrix64, Problem64, Solution64};
use serde::Serialize;

use crate::config::{RunConfig, Variant};
use crate::error::CliError;
use crate::output::{num, opt, Outputs, Table};

/// What a command produced; printed to stdout as JSON.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: &'static str,
    pub files: Vec<String>,
    pub converged: bool,
}

fn is_balance_sheet(path: &Path) -> Result<bool, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        return Ok(t.starts_with("year,"));
    }
    Err(CliError::data(format!("{}: no records", path.display())))
}

fn load_rules(cfg: &RunConfig) -> Result<CategoryRuleSet<f64>, CliError> {
    match &cfg.rules {
        None => Ok(CategoryRuleSet::bank_default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("invalid rules {}: {e}", p.display())))
        }
    }
}

fn load_variant(cfg: &RunConfig) -> Result<(TradeDataset<f64>, Option<CutSummary>), CliError> {
    let data = load_trade_matrix(&cfg.input)?;
    Ok(match cfg.variant {
        Variant::NoCut => (data, None),
        Variant::Q2Cut => {
            let (cut, summary) = make_q2_cut(&data)?;
            (cut, Some(summary))
        }
    })
}

fn marginal_table(rep: &MarginalReport) -> Table<&MarginalReport> {
    Table {
        header: vec!["node", "out_data", "out_reconstructed", "in_data", "in_reconstructed"],
        rows: rep
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.id.clone(),
                    num(r.out_data),
                    num(r.out_reconstructed),
                    num(r.in_data),
                    num(r.in_reconstructed),
                ]
            })
            .collect(),
        json: rep,
    }
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    config: &'a RunConfig,
    #[serde(flatten)]
    summary: entrenet_core::solver::SolutionSummary,
    zero_cells: usize,
    group_constraints: usize,
    max_relative_marginal_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    q2_cut: Option<CutSummary>,
}

pub fn reconstruct(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let (problem, cut): (Problem64, Option<CutSummary>) = if is_balance_sheet(&cfg.input)? {
        let records = load_balance_sheets(&cfg.input, cfg.year)?;
        (build_bank_problem(&records, &load_rules(cfg)?, cfg.beta)?, None)
    } else {
        let (data, cut) = load_variant(cfg)?;
        (build_trade_problem(&data, cfg.beta, cfg.link_constraints)?, cut)
    };
    let sol = solve_ridge(&problem, &cfg.solver())?;
    let report = marginal_report(&sol.t, &problem.marginals)?;
    let mut out = Outputs::new(cfg)?;
    out.matrix("t", &sol.t)?;
    out.matrix("p", &sol.p)?;
    out.json(
        "solution",
        &SolutionDoc {
            config: cfg,
            summary: sol.summary(),
            zero_cells: problem.zero_cells.len(),
            group_constraints: problem.group_constraints.len(),
            max_relative_marginal_deviation: report.max_relative_deviation,
            q2_cut: cut,
        },
    )?;
    out.table("marginals", &marginal_table(&report))?;
    finish("reconstruct", out, sol.converged)
}

fn finish(command: &'static str, out: Outputs, converged: bool) -> Result<RunSummary, CliError> {
    let summary = RunSummary {
        command,
        files: crate::output::display(&out.written),
        converged,
    };
    if converged {
        Ok(summary)
    } else {
        println!("{}", serde_json::to_string(&summary).unwrap());
        Err(CliError::not_converged(
            "solver stopped before reaching the tolerance; outputs hold the last iterate",
        ))
    }
}

#[derive(Serialize)]
struct MetricsDoc {
    percentile: f64,
    threshold: f64,
    positive_links: usize,
    kept_links: usize,
    positive_density: f64,
    /// kept / positive links
    retained_ratio: f64,
    #[serde(flatten)]
    metrics: entrenet_core::netanalysis::MetricsReport,
    path_length_policy: &'static str,
}

#[derive(Serialize)]
struct EnsembleDoc<'a> {
    n_samples: usize,
    swaps_per_edge: usize,
    seed: u64,
    metrics: Vec<(&'static str, &'a MetricStats)>,
}

fn ccdf_rows(rows: &mut Vec<Vec<String>>, name: &str, pts: &[CcdfPoint]) {
    rows.extend(pts.iter().map(|p| vec![name.to_string(), num(p.value), num(p.fraction)]));
}

pub fn analyze(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let weights: FlowMatrix64 = load_trade_matrix(&cfg.input)?.matrix;
    let (net, trunc) = truncate_percentile(&weights, cfg.percentile)?;
    let metrics = compute_metrics(&net);
    let n = net.n();
    let slots = (n * n.saturating_sub(1)).max(1) as f64;
    let doc = MetricsDoc {
        percentile: cfg.percentile,
        threshold: trunc.threshold,
        positive_links: trunc.positive_links,
        kept_links: trunc.kept_links,
        positive_density: trunc.positive_links as f64 / slots,
        retained_ratio: trunc.kept_links as f64 / trunc.positive_links as f64,
        metrics,
        path_length_policy: "pairs in different components excluded",
    };
    let ensemble = degree_preserved_randomize(&net, cfg.samples, cfg.swaps_per_edge, cfg.seed)?;
    let (labels, _) = detect_communities(&net);
    let pr: Vec<f64> = pagerank(&net, DEFAULT_DAMPING, DEFAULT_TOLERANCE)?;
    let ccdf = degree_ccdf(&net, &pr);
    let ids: Vec<&str> = net.nodes().iter().map(|n| n.id.as_str()).collect();

    let mut out = Outputs::new(cfg)?;
    let edges = net.edges();
    out.table(
        "edges",
        &Table {
            header: vec!["source", "target"],
            rows: edges.iter().map(|&(i, j)| vec![ids[i].to_string(), ids[j].to_string()]).collect(),
            json: edges.iter().map(|&(i, j)| (ids[i], ids[j])).collect::<Vec<_>>(),
        },
    )?;
    let m = &doc.metrics;
    out.table(
        "metrics",
        &Table {
            header: vec!["metric", "value"],
            rows: [
                ("percentile", num(doc.percentile)),
                ("threshold", num(doc.threshold)),
                ("positive_links", doc.positive_links.to_string()),
                ("kept_links", doc.kept_links.to_string()),
                ("positive_density", num(doc.positive_density)),
                ("density", num(m.density)),
                ("retained_ratio", num(doc.retained_ratio)),
                ("avg_shortest_path", opt(m.avg_shortest_path)),
                ("disconnected_pairs", m.disconnected_pairs.to_string()),
                ("clustering", num(m.clustering)),
                ("assortativity", opt(m.assortativity)),
                ("modularity", num(m.modularity)),
                ("communities", m.communities.to_string()),
            ]
            .into_iter()
            .map(|(k, v)| vec![k.to_string(), v])
            .collect(),
            json: &doc,
        },
    )?;
    let stats = [
        ("avg_shortest_path", &ensemble.avg_shortest_path),
        ("clustering", &ensemble.clustering),
        ("assortativity", &ensemble.assortativity),
    ];
    out.table(
        "ensemble",
        &Table {
            header: vec!["metric", "observed", "mean", "sd", "z_score", "undefined", "n_samples", "seed"],
            rows: stats
                .iter()
                .map(|(name, s)| {
                    vec![
                        name.to_string(),
                        opt(s.observed),
                        opt(s.mean),
                        opt(s.sd),
                        opt(s.z_score),
                        s.undefined.to_string(),
                        ensemble.n_samples.to_string(),
                        ensemble.seed.to_string(),
                    ]
                })
                .collect(),
            json: EnsembleDoc {
                n_samples: ensemble.n_samples,
                swaps_per_edge: ensemble.swaps_per_edge,
                seed: ensemble.seed,
                metrics: stats.to_vec(),
            },
        },
    )?;
    let in_deg = net.in_degrees();
    let out_deg = net.out_degrees();
    out.table(
        "nodes",
        &Table {
            header: vec!["node", "community", "pagerank", "in_degree", "out_degree"],
            rows: (0..n)
                .map(|k| {
                    vec![
                        ids[k].to_string(),
                        labels[k].to_string(),
                        num(pr[k]),
                        in_deg[k].to_string(),
                        out_deg[k].to_string(),
                    ]
                })
                .collect(),
            json: (0..n)
                .map(|k| {
                    serde_json::json!({
                        "node": ids[k], "community": labels[k], "pagerank": pr[k],
                        "in_degree": in_deg[k], "out_degree": out_deg[k],
                    })
                })
                .collect::<Vec<_>>(),
        },
    )?;
    let mut rows = Vec::new();
    ccdf_rows(&mut rows, "in_degree", &ccdf.in_degree);
    ccdf_rows(&mut rows, "out_degree", &ccdf.out_degree);
    ccdf_rows(&mut rows, "total_degree", &ccdf.total_degree);
    ccdf_rows(&mut rows, "pagerank", &ccdf.pagerank);
    out.table(
        "ccdf",
        &Table {
            header: vec!["quantity", "value", "fraction"],
            rows,
            json: &ccdf,
        },
    )?;
    finish("analyze", out, true)
}

#[derive(Serialize)]
struct Scenario {
    variant: &'static str,
    link_constraints: bool,
    #[serde(flatten)]
    fit: FitReport,
}

#[derive(Serialize)]
struct ThresholdRow {
    variant: &'static str,
    link_constraints: bool,
    #[serde(flatten)]
    fit: entrenet_core::netanalysis::RelativeFit,
    /// Total reconstructed flow lost to truncation, relative to the grand total.
    flow_removed_share: f64,
}

fn score(sol: &Solution64, data: &FlowMatrix64) -> Result<FitReport, CliError> {
    Ok(FitReport::from_solution(sol, data)?)
}

pub fn validate(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let no_cut = load_trade_matrix(&cfg.input)?;
    let (q2, _) = make_q2_cut(&no_cut)?;
    let mut scenarios = Vec::new();
    let mut thresholds = Vec::new();
    let mut converged = true;
    for (variant, ds) in [("no_cut", &no_cut), ("q2_cut", &q2)] {
        for link in [false, true] {
            let problem = build_trade_problem(ds, cfg.beta, link)?;
            let sol = solve_ridge(&problem, &cfg.solver())?;
            converged &= sol.converged;
            if let Some(target) = cfg.target_density {
                let (net, fit) = fit_relative_threshold(&sol.t, target)?;
                let kept = net.mask(&sol.t)?;
                thresholds.push(ThresholdRow {
                    variant,
                    link_constraints: link,
                    fit,
                    flow_removed_share: 1.0 - kept.total() / sol.t.total(),
                });
            }
            scenarios.push(Scenario {
                variant,
                link_constraints: link,
                fit: score(&sol, &ds.matrix)?,
            });
        }
    }
    let density = |v: &str, link: bool| {
        scenarios
            .iter()
            .find(|s| s.variant == v && s.link_constraints == link)
            .map(|s| s.fit.density_reconstructed)
            .unwrap()
    };
    let table3 = vec![
        vec!["trade data".to_string(), num(no_cut.density()), num(q2.density())],
        vec![
            "reconstruction w/o link constraints".to_string(),
            num(density("no_cut", false)),
            num(density("q2_cut", false)),
        ],
        vec![
            "reconstruction with link constraints".to_string(),
            num(density("no_cut", true)),
            num(density("q2_cut", true)),
        ],
    ];
    let mut out = Outputs::new(cfg)?;
    out.table(
        "density_table",
        &Table {
            header: vec!["network density", "no_cut", "q2_cut"],
            json: table3
                .iter()
                .map(|r| serde_json::json!({ "row": r[0], "no_cut": r[1].parse::<f64>().ok(), "q2_cut": r[2].parse::<f64>().ok() }))
                .collect::<Vec<_>>(),
            rows: table3,
        },
    )?;
    out.table(
        "fit_reports",
        &Table {
            header: vec![
                "variant", "link_constraints", "beta", "objective", "rmse", "slope_a", "intercept_b", "n_pairs",
                "density_data", "density_reconstructed", "converged",
            ],
            rows: scenarios
                .iter()
                .map(|s| {
                    let f = &s.fit;
                    vec![
                        s.variant.to_string(),
                        s.link_constraints.to_string(),
                        num(f.beta),
                        num(f.objective),
                        num(f.rmse),
                        num(f.slope_a),
                        num(f.intercept_b),
                        f.n_pairs.to_string(),
                        num(f.density_data),
                        num(f.density_reconstructed),
                        f.converged.to_string(),
                    ]
                })
                .collect(),
            json: &scenarios,
        },
    )?;
    if cfg.target_density.is_some() {
        out.table(
            "threshold_fit",
            &Table {
                header: vec![
                    "variant", "link_constraints", "fraction", "target_density", "achieved_density", "kept_links",
                    "target_links", "flow_removed_share",
                ],
                rows: thresholds
                    .iter()
                    .map(|t| {
                        vec![
                            t.variant.to_string(),
                            t.link_constraints.to_string(),
                            num(t.fit.fraction),
                            num(t.fit.target_density),
                            num(t.fit.achieved_density),
                            t.fit.kept_links.to_string(),
                            num(t.fit.target_links),
                            num(t.flow_removed_share),
                        ]
                    })
                    .collect(),
                json: &thresholds,
            },
        )?;
    }
    finish("validate", out, converged)
}

pub fn sweep(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let (data, _) = load_variant(cfg)?;
    let template = build_trade_problem(&data, 0.0, cfg.link_constraints)?;
    let reports = beta_sweep(&template, &cfg.betas, &data.matrix, &cfg.solver())?;
    let converged = reports.iter().all(|r| r.converged);
    let mut out = Outputs::new(cfg)?;
    out.table(
        "sweep",
        &Table {
            header: vec!["beta", "objective", "rmse", "slope_a", "intercept_b", "density"],
            rows: reports
                .iter()
                .map(|r| {
                    vec![
                        num(r.beta),
                        num(r.objective),
                        num(r.rmse),
                        num(r.slope_a),
                        num(r.intercept_b),
                        num(r.density_reconstructed),
                    ]
                })
                .collect(),
            json: &reports,
        },
    )?;
    finish("sweep", out, converged)
}
