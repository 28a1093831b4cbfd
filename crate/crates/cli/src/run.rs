//! One function per experiment kind. Each writes its CSV artifacts and returns the report body.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use darcm::clustering::{average_friend_cc, average_interest_cc, global_friend_cc, global_interest_cc, Statistic};
use darcm::degrees::{empirical_degree_hist, indegree_tail_exponent, mean_outdegree, outdegree_tail_exponent, DegreeHistogram};
use darcm::export::{real, write_edges_csv, write_histogram_csv, write_survival_csv, write_vertices_csv};
use darcm::generator::{generate_torus, palm_degree_samples};
use darcm::marking::replicate_seed;
use darcm::percolation::{estimate_survival, regime};
use darcm::stats::{batch_ci, fit_hist_tail, trend_test, KMin, TrendPoint, MIN_BATCH_SAMPLES};
use darcm::validation::{run_suite, CRITERIA};
use darcm::{Digraph, Direction, ModelParams, SampleMode, Seed, TorusSpec};

use crate::config::{DegreeSource, ExperimentConfig};
use crate::error::CliError;
use crate::report::{Artifact, ResultEntry};

pub struct Outcome {
    pub results: Vec<ResultEntry>,
    pub artifacts: Vec<Artifact>,
}

pub struct Ctx<'a> {
    pub config: &'a ExperimentConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Ctx<'_> {
    fn model(&self) -> Result<ModelParams, CliError> {
        self.config.model.ok_or_else(|| CliError::Usage("the config needs a [model] section".into()))
    }

    fn section<'s, T>(&self, s: &'s Option<T>, name: &str) -> Result<&'s T, CliError> {
        s.as_ref().ok_or_else(|| CliError::Usage(format!("the config needs a [{name}] section")))
    }

    /// Writes one artifact through `f` and records its relative path.
    fn artifact(
        &self,
        artifacts: &mut Vec<Artifact>,
        kind: &str,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let werr = |source| CliError::Write { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(werr)?);
        f(&mut w).and_then(|_| w.flush()).map_err(werr)?;
        artifacts.push(Artifact { kind: kind.into(), path: name.into() });
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{name} must be positive, got {v}")))
    }
}

pub fn generate(ctx: &Ctx) -> Result<Outcome, CliError> {
    let p = ctx.model()?;
    let sec = ctx.section(&ctx.config.generate, "generate")?;
    let (mode, volume) = match sec.n {
        Some(n) => (SampleMode::FixedCount(n as i64), sec.volume.unwrap_or(n.max(1) as f64)),
        None => (
            SampleMode::PoissonCount,
            sec.volume.ok_or_else(|| CliError::Usage("[generate] needs `n` or `volume`".into()))?,
        ),
    };
    let spec = TorusSpec::with_volume(positive("volume", volume)?, p.dim())?;
    let g = generate_torus(&p, &spec, mode, Seed(ctx.seed))?;
    let mut artifacts = Vec::new();
    ctx.artifact(&mut artifacts, "vertices", "vertices.csv", |w| write_vertices_csv(&g, p.dim(), w))?;
    ctx.artifact(&mut artifacts, "edges", "edges.csv", |w| write_edges_csv(&g, w))?;
    let n = g.vertex_count() as u64;
    let results = vec![
        ResultEntry::value("vertices", n as f64, ctx.seed, 1),
        ResultEntry::value("arcs", g.arc_count() as f64, ctx.seed, 1),
        ResultEntry::value("arcs_per_vertex", g.arc_count() as f64 / n.max(1) as f64, ctx.seed, n)
            .with_theory(mean_outdegree(&p)),
    ];
    Ok(Outcome { results, artifacts })
}

fn tail_entry(name: &str, h: &DegreeHistogram, theory: Option<f64>, seed: u64) -> ResultEntry {
    let base = match fit_hist_tail(h, KMin::Auto) {
        Ok(f) => ResultEntry::value(name, f.estimate, seed, f.n_tail as u64)
            .with_ci(f.estimate - 1.96 * f.stderr, f.estimate + 1.96 * f.stderr)
            .with_detail(format!("k_min {}, plausible power law: {}", f.k_min, f.power_law_plausible)),
        Err(e) => ResultEntry::value(name, f64::NAN, seed, h.total).with_detail(format!("not estimated: {e}")),
    };
    match theory {
        Some(t) => base.with_theory(t),
        None => base,
    }
}

pub fn degrees(ctx: &Ctx) -> Result<Outcome, CliError> {
    let p = ctx.model()?;
    let sec = ctx.section(&ctx.config.degrees, "degrees")?;
    let (out_h, in_h) = match sec.source {
        DegreeSource::Torus => {
            let v = sec.volume.ok_or_else(|| CliError::Usage("[degrees] with source = \"torus\" needs `volume`".into()))?;
            let spec = TorusSpec::with_volume(positive("volume", v)?, p.dim())?;
            let g: Digraph = generate_torus(&p, &spec, SampleMode::PoissonCount, Seed(ctx.seed))?;
            (empirical_degree_hist(&g, Direction::Out), empirical_degree_hist(&g, Direction::In))
        }
        DegreeSource::Palm => {
            let n = sec.samples.ok_or_else(|| CliError::Usage("[degrees] with source = \"palm\" needs `samples`".into()))?;
            let s = Seed(ctx.seed);
            (
                DegreeHistogram::from_samples(Direction::Out, palm_degree_samples(&p, Direction::Out, n, replicate_seed(s, 0))),
                DegreeHistogram::from_samples(Direction::In, palm_degree_samples(&p, Direction::In, n, replicate_seed(s, 1))),
            )
        }
    };
    let mut artifacts = Vec::new();
    ctx.artifact(&mut artifacts, "outdegree_histogram", "outdegree.csv", |w| write_histogram_csv(&out_h, w))?;
    ctx.artifact(&mut artifacts, "indegree_histogram", "indegree.csv", |w| write_histogram_csv(&in_h, w))?;
    let mean = mean_outdegree(&p);
    let results = vec![
        ResultEntry::value("mean_outdegree", out_h.mean(), ctx.seed, out_h.total).with_theory(mean),
        ResultEntry::value("mean_indegree", in_h.mean(), ctx.seed, in_h.total).with_theory(mean),
        tail_entry("outdegree_tail_exponent", &out_h, outdegree_tail_exponent(&p), ctx.seed),
        tail_entry("indegree_tail_exponent", &in_h, Some(indegree_tail_exponent(&p)), ctx.seed),
    ];
    Ok(Outcome { results, artifacts })
}

pub fn cluster(ctx: &Ctx) -> Result<Outcome, CliError> {
    let p = ctx.model()?;
    let sec = ctx.section(&ctx.config.cluster, "cluster")?;
    if sec.reps < MIN_BATCH_SAMPLES {
        return Err(CliError::Usage(format!("[cluster] reps must be at least {MIN_BATCH_SAMPLES}")));
    }
    if sec.volumes.is_empty() {
        return Err(CliError::Usage("[cluster] volumes must not be empty".into()));
    }
    let stats: [(Statistic, fn(&Digraph) -> f64); 4] = [
        (Statistic::AverageFriend, average_friend_cc),
        (Statistic::GlobalFriend, global_friend_cc),
        (Statistic::AverageInterest, average_interest_cc),
        (Statistic::GlobalInterest, global_interest_cc),
    ];
    let mut values = vec![vec![Vec::with_capacity(sec.reps); sec.volumes.len()]; stats.len()];
    for (i, &t) in sec.volumes.iter().enumerate() {
        let spec = TorusSpec::with_volume(positive("volume", t)?, p.dim())?;
        for r in 0..sec.reps as u64 {
            let g = generate_torus(&p, &spec, SampleMode::PoissonCount, replicate_seed(Seed(ctx.seed), (i as u64) << 32 | r))?;
            for (k, (_, f)) in stats.iter().enumerate() {
                values[k][i].push(f(&g));
            }
        }
    }
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for (k, (stat, _)) in stats.iter().enumerate() {
        let mut points = Vec::new();
        for (i, &t) in sec.volumes.iter().enumerate() {
            let ci = batch_ci(&values[k][i])?;
            rows.push(format!("{},{},{},{},{},{}", stat.as_str(), real(t), real(ci.mean), real(ci.ci_low), real(ci.ci_high), sec.reps));
            results.push(
                ResultEntry::value(format!("{}@{t}", stat.as_str()), ci.mean, ctx.seed, sec.reps as u64)
                    .with_ci(ci.ci_low, ci.ci_high),
            );
            points.push(TrendPoint { t, interval: ci });
        }
        if let Ok(tr) = trend_test(&points) {
            results.push(
                ResultEntry::value(format!("{}_trend", stat.as_str()), f64::NAN, ctx.seed, (sec.reps * points.len()) as u64)
                    .with_detail(format!("{:?}: {}", tr.verdict, tr.evidence)),
            );
        }
    }
    let mut artifacts = Vec::new();
    ctx.artifact(&mut artifacts, "clustering", "clustering.csv", |w| {
        writeln!(w, "statistic,volume,mean,ci_low,ci_high,reps")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    Ok(Outcome { results, artifacts })
}

pub fn percolate(ctx: &Ctx) -> Result<Outcome, CliError> {
    let p = ctx.model()?;
    let sec = ctx.section(&ctx.config.percolate, "percolate")?;
    let curve = estimate_survival(&p, &sec.betas, sec.volume, sec.reps, sec.threshold, Seed(ctx.seed))?;
    let mut artifacts = Vec::new();
    ctx.artifact(&mut artifacts, "survival", "survival.csv", |w| write_survival_csv(&curve, w))?;
    let mut results: Vec<ResultEntry> = curve
        .points
        .iter()
        .map(|pt| {
            ResultEntry::value(format!("survival@beta={}", pt.beta), pt.interval.mean, ctx.seed, sec.reps as u64)
                .with_ci(pt.interval.ci_low, pt.interval.ci_high)
        })
        .collect();
    let r = regime(p.gamma(), p.delta(), p.big_gamma());
    results.push(ResultEntry::value("regime", f64::NAN, ctx.seed, 0).with_detail(format!("{r:?}")));
    Ok(Outcome { results, artifacts })
}

pub fn validate(ctx: &Ctx) -> Result<Outcome, CliError> {
    let ids: Vec<u8> = match ctx.config.validate.as_ref().and_then(|v| v.criteria.clone()) {
        Some(ids) => ids,
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    let outcomes = run_suite(&ids, Seed(ctx.seed))?;
    let mut results = Vec::new();
    for o in &outcomes {
        println!("criterion {:>2}: {} [{}] {}", o.id, if o.passed { "PASS" } else { "FAIL" }, o.title, o.detail);
        let mut e = ResultEntry::value(format!("criterion_{}", o.id), f64::NAN, o.seed, 1).with_detail(o.detail.clone());
        e.passed = Some(o.passed);
        results.push(e);
        for (k, v) in &o.metrics {
            results.push(ResultEntry::value(format!("criterion_{}.{k}", o.id), *v, o.seed, 1));
        }
    }
    let mut artifacts = Vec::new();
    ctx.artifact(&mut artifacts, "validation", "validation.csv", |w| {
        writeln!(w, "criterion,passed")?;
        outcomes.iter().try_for_each(|o| writeln!(w, "{},{}", o.id, o.passed))
    })?;
    Ok(Outcome { results, artifacts })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })
}
