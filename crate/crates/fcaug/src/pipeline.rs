//! The four batch commands and truth verification, as library calls. Each
//! writes its files into an output directory together with a manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fcaug_core::augment::{fixed_point_solve, solve_with_field, AugmentationField, FixedPointTrace};
use fcaug_core::dae::{solve_steady, SolveReport};
use fcaug_core::data::{generate_truth, select_training, CaseRecord, TruthSet};
use fcaug_core::eval::{evaluate_suite, EvalSettings, SuiteReport};
use fcaug_core::fcmodel::{CellModel, CellState};
use fcaug_core::iiml::{run_wciiml, IimlOutcome};
use fcaug_core::mlp::MlpModel;

use crate::cases::{load_cases, num, save_cases, CONDITIONS_FILE};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::Pool;
use crate::manifest::{to_table, Manifest};
use crate::sealed::{self, SealedTruth, SEALED_FILE};
use crate::weights::{load_weights, save_weights, sha256_hex};

pub const WEIGHTS_FILE: &str = "weights.txt";
pub const J_HISTORY_FILE: &str = "j_history.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(dir: &Path, rel: &str, text: &str, manifest: &mut Manifest) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    manifest.add_output(dir, rel)
}

fn file_sha(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn csv_lines(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s += &r;
        s.push('\n');
    }
    s
}

fn config_table(cfg: &RunConfig) -> toml::Table {
    to_table(cfg)
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    cfg.params.geometry.y_grid()
}

pub fn load_case_set(cfg: &RunConfig, dir: &Path) -> Result<Vec<CaseRecord>> {
    load_cases(dir, &grid(cfg))
}

#[derive(Debug, Clone)]
pub struct TruthReport {
    pub truth: TruthSet,
    pub out: PathBuf,
}

/// Manufactures a case set with the configured hidden augmentation. The
/// hidden definition goes only into the sealed sidecar; the manifest's
/// configuration echo leaves it out.
pub fn gen_truth(cfg: &RunConfig, out: &Path) -> Result<TruthReport> {
    let start = Instant::now();
    create_dir(out)?;
    let pool = Pool::new(cfg.workers)?;
    let truth = generate_truth(&cfg.truth, &cfg.params, &cfg.iiml.fixed_point, &cfg.solver, &pool)?;
    save_cases(out, &truth.records, &grid(cfg))?;
    let sealed = SealedTruth {
        format_version: sealed::FORMAT_VERSION,
        conditions_sha256: file_sha(&out.join(CONDITIONS_FILE))?,
        spec: cfg.truth.clone(),
        fixed_point: cfg.iiml.fixed_point,
        solver: cfg.solver,
        params: cfg.params.clone(),
    };
    sealed::write(out, &sealed)?;

    let mut table = config_table(cfg);
    table.remove("truth");
    let mut m = Manifest::new("gen-truth", table);
    m.add_output(out, CONDITIONS_FILE)?;
    for r in &truth.records {
        m.add_output(out, &format!("profiles/case_{}.csv", r.case_id))?;
    }
    m.add_output(out, SEALED_FILE)?;
    m.results.insert("cases".into(), (truth.records.len() as i64).into());
    m.results.insert("dropped".into(), toml::Value::Array(truth.dropped.iter().map(|&d| (d as i64).into()).collect()));
    m.results.insert("resamples".into(), (truth.resamples as i64).into());
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.save(out)?;
    Ok(TruthReport { truth, out: out.to_path_buf() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub cases: usize,
    pub conditions_match: bool,
    /// Case ids whose stored profiles differ from a regeneration.
    pub mismatched: Vec<u32>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.conditions_match && self.mismatched.is_empty()
    }
}

/// Regenerates the case set from its sealed record and compares it with the
/// stored files.
pub fn verify_truth(dir: &Path, workers: usize) -> Result<VerifyReport> {
    let s = sealed::read(dir)?;
    let conditions_match = file_sha(&dir.join(CONDITIONS_FILE))? == s.conditions_sha256;
    let stored = load_cases(dir, &s.params.geometry.y_grid())?;
    let pool = Pool::new(workers)?;
    let regenerated = generate_truth(&s.spec, &s.params, &s.fixed_point, &s.solver, &pool)?;
    let mut mismatched: Vec<u32> = stored
        .iter()
        .filter(|r| regenerated.records.iter().find(|g| g.case_id == r.case_id) != Some(*r))
        .map(|r| r.case_id)
        .collect();
    for g in &regenerated.records {
        if !stored.iter().any(|r| r.case_id == g.case_id) {
            mismatched.push(g.case_id);
        }
    }
    Ok(VerifyReport { cases: stored.len(), conditions_match, mismatched })
}

fn history_csv(report: &SolveReport) -> String {
    let header = format!("time,{}", report.group_names.join(","));
    csv_lines(
        &header,
        report.residual_history.iter().map(|h| {
            let mut cols = vec![num(h.time)];
            cols.extend(h.norms.iter().map(|v| num(*v)));
            cols.join(",")
        }),
    )
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub baseline: CellState,
    pub augmented: Option<(CellState, AugmentationField, FixedPointTrace)>,
}

/// Baseline solve of one case and, with weights, its augmented fixed point.
/// Writes the profiles, the residual history of each solve and the
/// fixed-point residuals.
pub fn simulate(cfg: &RunConfig, cases_dir: &Path, case_id: u32, weights: Option<&Path>, out: &Path) -> Result<SimulateReport> {
    let start = Instant::now();
    create_dir(out)?;
    let cases = load_case_set(cfg, cases_dir)?;
    let case = cases.iter().find(|c| c.case_id == case_id).ok_or_else(|| Error::Data(format!("unknown case id {case_id}")))?;
    let model = CellModel::new(&cfg.params, &case.conditions)?;
    let solver = fcaug_core::dae::SolverSettings { record_history: true, ..cfg.solver };
    let (baseline, base_report) = solve_steady(&model, None, &solver, None)?;
    let mut m = Manifest::new("simulate", config_table(cfg));
    m.inputs.insert("cases".into(), cases_dir.display().to_string());
    m.inputs.insert("case_id".into(), case_id.to_string());

    let augmented = match weights {
        Some(w) => {
            m.inputs.insert("weights_sha256".into(), file_sha(w)?);
            let (net, _) = load_weights(w)?;
            let ones = AugmentationField::ones(model.n_y());
            let fp = fixed_point_solve(&model, &net, &cfg.iiml.fixed_point, &solver, Some((&baseline, &ones)))?;
            let (state, report) = solve_with_field(&model, &fp.field, &solver, None)?;
            write(out, &format!("case_{case_id}_history_augmented.csv"), &history_csv(&report), &mut m)?;
            let rows = fp.trace.r_aug_history.iter().enumerate().map(|(k, r)| format!("{},{}", k + 1, num(*r)));
            write(out, &format!("case_{case_id}_fixed_point.csv"), &csv_lines("iteration,r_aug", rows), &mut m)?;
            Some((state, fp.field, fp.trace))
        }
        None => None,
    };
    write(out, &format!("case_{case_id}_history_baseline.csv"), &history_csv(&base_report), &mut m)?;

    let y = grid(cfg);
    let mut header = vec!["y", "lambda_baseline", "i_loc_baseline"];
    if augmented.is_some() {
        header.extend(["delta", "lambda_augmented", "i_loc_augmented"]);
    }
    header.push("lambda_data");
    if case.j_data.is_some() {
        header.push("j_data");
    }
    let (lb, ib) = (baseline.lambda_mb(), baseline.i_loc());
    let aug = augmented.as_ref().map(|(s, f, _)| (f.values().to_vec(), s.lambda_mb(), s.i_loc()));
    let rows = (0..y.len()).map(|n| {
        let mut cols = vec![num(y[n]), num(lb[n]), num(ib[n])];
        if let Some((d, la, ia)) = &aug {
            cols.extend([num(d[n]), num(la[n]), num(ia[n])]);
        }
        cols.push(num(case.lambda_data[n]));
        if let Some(j) = &case.j_data {
            cols.push(num(j[n]));
        }
        cols.join(",")
    });
    write(out, &format!("case_{case_id}_profiles.csv"), &csv_lines(&header.join(","), rows), &mut m)?;
    m.results.insert("v_cell_baseline".into(), baseline.v_cell.into());
    if let Some((s, _, t)) = &augmented {
        m.results.insert("v_cell_augmented".into(), s.v_cell.into());
        m.results.insert("fixed_point_iterations".into(), (t.iterations as i64).into());
        m.results.insert("fixed_point_converged".into(), t.converged.into());
    }
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.save(out)?;
    Ok(SimulateReport { baseline, augmented })
}

fn j_history_csv(outcome: &IimlOutcome) -> String {
    let h = &outcome.history;
    let header = "iteration,accepted,objective,best_objective,step_scale,ml_loss,max_gradient_norm,fd_solves,fixed_point_solves,max_fixed_point_iterations";
    let baseline = format!("0,true,{},{},,,,0,0,0", num(h.baseline_objective), num(h.baseline_objective));
    let rows = h.iterations.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            r.accepted,
            r.objective.map(num).unwrap_or_default(),
            num(r.best_objective),
            num(r.step_scale),
            num(r.ml_loss),
            num(r.gradient_norms.iter().cloned().fold(0.0, f64::max)),
            r.fd_solves,
            r.fixed_point_solves,
            r.fixed_point.iter().map(|t| t.iterations).max().unwrap_or(0),
        )
    });
    csv_lines(header, std::iter::once(baseline).chain(rows))
}

fn provenance(ids: &[u32], iteration: usize, objective: f64) -> String {
    let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    format!("wciiml training_ids={} iteration={iteration} objective={}", ids.join(";"), num(objective))
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub outcome: IimlOutcome,
    pub weights: PathBuf,
}

/// Trains on `cfg.training_ids` and writes the best network, a checkpoint
/// per accepted iteration and the objective history.
pub fn train(cfg: &RunConfig, cases_dir: &Path, out: &Path) -> Result<TrainReport> {
    let start = Instant::now();
    if cfg.training_ids.is_empty() {
        return Err(Error::Config("no training_ids given".into()));
    }
    create_dir(out)?;
    let cases = load_case_set(cfg, cases_dir)?;
    let (train_cases, _) = select_training(&cases, &cfg.training_ids)?;
    let pool = Pool::new(cfg.workers)?;
    let outcome = run_wciiml(&cfg.params, &train_cases, &cfg.iiml, &cfg.solver, &pool)?;
    let ids: Vec<u32> = train_cases.iter().map(|c| c.case_id).collect();

    let mut m = Manifest::new("train", config_table(cfg));
    m.inputs.insert("cases".into(), cases_dir.display().to_string());
    m.inputs.insert("conditions_sha256".into(), file_sha(&cases_dir.join(CONDITIONS_FILE))?);
    let h = &outcome.history;
    let weights = out.join(WEIGHTS_FILE);
    save_weights(&weights, &outcome.model, &provenance(&ids, h.best_iteration, h.best_objective))?;
    m.add_output(out, WEIGHTS_FILE)?;
    for (it, net) in &outcome.checkpoints {
        let objective = h.iterations.iter().find(|r| r.iteration == *it).and_then(|r| r.objective).unwrap_or(f64::NAN);
        let rel = format!("checkpoints/weights_iter_{it:03}.txt");
        save_weights(&out.join(&rel), net, &provenance(&ids, *it, objective))?;
        m.add_output(out, &rel)?;
    }
    write(out, J_HISTORY_FILE, &j_history_csv(&outcome), &mut m)?;
    m.results.insert("training_ids".into(), toml::Value::Array(ids.iter().map(|&i| (i as i64).into()).collect()));
    m.results.insert("baseline_objective".into(), h.baseline_objective.into());
    m.results.insert("best_objective".into(), h.best_objective.into());
    m.results.insert("best_iteration".into(), (h.best_iteration as i64).into());
    m.results.insert("stop".into(), format!("{:?}", h.stop).into());
    let j: Vec<toml::Value> = h.iterations.iter().map(|r| r.objective.unwrap_or(f64::NAN).into()).collect();
    m.results.insert("objective_per_iteration".into(), toml::Value::Array(j));
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.save(out)?;
    Ok(TrainReport { outcome, weights })
}

fn metrics_csv(report: &SuiteReport) -> String {
    let header = "case_id,training,p1_lambda,p2_lambda,p1_j,p2_j,err_baseline,err_augmented,fixed_point_iterations,flags";
    let rows = report.records.iter().map(|r| {
        let mut flags = Vec::new();
        if r.oscillation {
            flags.push("oscillation");
        }
        if r.extrapolated > 0 {
            flags.push("extrapolated");
        }
        if r.lambda.degenerate {
            flags.push("degenerate");
        }
        let (p1j, p2j) = r.current.map_or((String::new(), String::new()), |c| (num(c.p1), num(c.p2)));
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.case_id,
            r.training,
            num(r.lambda.p1),
            num(r.lambda.p2),
            p1j,
            p2j,
            num(r.lambda.err_baseline),
            num(r.lambda.err_augmented),
            r.fixed_point_iterations,
            flags.join(";")
        )
    });
    csv_lines(header, rows)
}

fn summary_text(report: &SuiteReport) -> String {
    let s = &report.summary;
    format!(
        "cases: {}\nevaluated: {}\nfailed: {}\nimproved (P1_lambda > 0): {} of {} ({:.4})\nheld-out improved: {} of {} ({:.4})\nmean P1_lambda: {:.6}\nmean P2_lambda: {:.6}\n",
        s.total,
        s.evaluated,
        s.failed,
        s.improved,
        s.total,
        s.improved_fraction,
        s.held_out_improved,
        s.held_out_total,
        s.held_out_improved_fraction,
        s.mean_p1,
        s.mean_p2
    )
}

/// Metrics of the network on every case; `cfg.training_ids` marks the
/// training split.
pub fn evaluate(cfg: &RunConfig, cases_dir: &Path, weights: &Path, out: &Path) -> Result<SuiteReport> {
    let start = Instant::now();
    create_dir(out)?;
    let cases = load_case_set(cfg, cases_dir)?;
    let (net, prov) = load_weights(weights)?;
    let report = evaluate_with(cfg, &cases, &net)?;
    let mut m = Manifest::new("evaluate", config_table(cfg));
    m.inputs.insert("cases".into(), cases_dir.display().to_string());
    m.inputs.insert("conditions_sha256".into(), file_sha(&cases_dir.join(CONDITIONS_FILE))?);
    m.inputs.insert("weights_sha256".into(), file_sha(weights)?);
    m.inputs.insert("weights_provenance".into(), prov);
    write(out, METRICS_FILE, &metrics_csv(&report), &mut m)?;
    let failures = report.failures.iter().map(|f| format!("{},{},{:?}", f.case_id, f.training, f.message));
    write(out, FAILURES_FILE, &csv_lines("case_id,training,message", failures), &mut m)?;
    write(out, SUMMARY_FILE, &summary_text(&report), &mut m)?;
    m.results = to_table(&report.summary);
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.save(out)?;
    Ok(report)
}

pub fn evaluate_with(cfg: &RunConfig, cases: &[CaseRecord], net: &MlpModel) -> Result<SuiteReport> {
    let pool = Pool::new(cfg.workers)?;
    let settings = EvalSettings { solver: cfg.solver, fixed_point: cfg.iiml.fixed_point };
    Ok(evaluate_suite(&cfg.params, cases, None, net, &cfg.training_ids, &settings, &pool))
}
