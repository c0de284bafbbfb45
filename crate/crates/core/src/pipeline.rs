//! Scenario-driven orchestration. Every stage reads the previous stage's
//! files from the output directory and writes its own, so running the
//! stages one by one produces the same bytes as [`run_pipeline`].
//!
//! Output layout:
//!
//! ```text
//! stack.rseg, truth.rlbl, truth.csv         synth
//! labels.{rlbl,csv}, variance.{rvar,csv},
//! costmap_k{k}.csv                          costmap
//! paths/path_i{i}_j{j}_k{k}.csv             paths
//! efficiency.csv                            sample
//! assignment.json, f_distribution.csv,
//! overlay.svg, scenario.resolved.json       assign
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assignment::{
    f_samples, sga_assign, write_f_distribution_csv, GroundSet, RiskParams, SolutionReport, Tuple,
};
use crate::efficiency::{build_efficiency_matrix, EfficiencyMatrix};
use crate::error::Error;
use crate::planner::{
    generate_candidates, read_path_csv, render_svg, write_path_csv, CandidateSet,
};
use crate::seed;
use crate::terrain::{
    build_cost_map, mode_label, pixel_uncertainty, read_label_map, read_sample_stack,
    read_variance_map, synth_scene, write_cost_map_csv, write_label_map, write_label_map_csv,
    write_sample_stack, write_variance_map, write_variance_map_csv, ClassCost, CostMapping,
    LabelMap, Pixel, SceneSpec,
};

pub const DEFAULT_DRAWS: usize = 600;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("scenario: {field}: {message}")]
    Scenario { field: String, message: String },
    #[error(transparent)]
    Lib(#[from] Error),
}

impl PipelineError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        PipelineError::Scenario {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// 2 for invalid scenarios, 3 when a candidate has no path, 4 for I/O and
    /// unreadable artifacts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Scenario { .. } => 2,
            PipelineError::Lib(e) => match e {
                Error::InvalidEndpoint(_) | Error::InvalidParams(_) | Error::InvalidMapping(_)
                | Error::InvalidSpec(_) | Error::MissingClassCost(_) => 2,
                Error::NoPath { .. } | Error::CandidateNoPath { .. } => 3,
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::MalformedHeader(_)
                | Error::DimensionMismatch(_)
                | Error::ProbabilityDrift { .. } => 4,
                _ => 1,
            },
        }
    }
}

pub type PResult<T> = std::result::Result<T, PipelineError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneSource {
    /// Generate the stack from an inline scene description.
    Synth(SceneSpec),
    /// Read an RSEG1 stack, optionally with RLBL1 ground truth. Relative
    /// paths resolve against the scenario file's directory.
    Stack {
        path: PathBuf,
        #[serde(default)]
        truth: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scene: SceneSource,
    /// Base cost per class: a positive number or "impassable".
    pub class_costs: Vec<ClassCost>,
    pub lambdas: Vec<f64>,
    pub vehicles: Vec<Pixel>,
    pub demands: Vec<Pixel>,
    pub alpha: f64,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub seed: u64,
}

fn default_draws() -> usize {
    DEFAULT_DRAWS
}

/// Command-line values that take precedence over the scenario file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub alpha: Option<f64>,
}

impl Scenario {
    /// Three vehicles west of a building block, two demands east of it, and a
    /// high-uncertainty grass shortcut through the block.
    pub fn demo() -> Self {
        Scenario {
            scene: SceneSource::Synth(SceneSpec::demo()),
            class_costs: vec![
                ClassCost::Finite(1.0),
                ClassCost::Finite(1.0),
                ClassCost::Finite(2.0),
                ClassCost::Finite(3.0),
            ],
            lambdas: vec![10.0, 50.0],
            vehicles: vec![Pixel::new(24, 4), Pixel::new(18, 3), Pixel::new(40, 8)],
            demands: vec![Pixel::new(24, 58), Pixel::new(30, 57)],
            alpha: 0.01,
            gamma: None,
            delta: None,
            draws: DEFAULT_DRAWS,
            seed: 7,
        }
    }

    /// Parses and validates a scenario file, resolving stack paths against
    /// its directory.
    pub fn load(path: impl AsRef<Path>) -> PResult<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sc: Scenario = serde_json::from_str(&text).map_err(|e| {
            PipelineError::field(
                format!("{}:{}:{}", path.display(), e.line(), e.column()),
                e,
            )
        })?;
        if let SceneSource::Stack { path: stack, truth } = &mut sc.scene {
            let base = path.parent().unwrap_or(Path::new("."));
            *stack = base.join(&*stack);
            if let Some(t) = truth {
                *t = base.join(&*t);
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn apply(&mut self, o: &Overrides) -> PResult<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = o.draws {
            self.draws = d;
        }
        if let Some(a) = o.alpha {
            self.alpha = a;
        }
        self.validate()
    }

    pub fn mapping(&self) -> PResult<CostMapping> {
        CostMapping::new(self.class_costs.clone(), 0.0)
            .map_err(|e| PipelineError::field("class_costs", e))
    }

    /// Grid width and height, from the inline spec or the stack header.
    fn dims(&self) -> PResult<(usize, usize, usize)> {
        match &self.scene {
            SceneSource::Synth(spec) => {
                spec.validate()
                    .map_err(|e| PipelineError::field("scene.synth", e))?;
                Ok((spec.width, spec.height, spec.num_classes))
            }
            SceneSource::Stack { path, truth } => {
                if let Some(t) = truth {
                    if !t.is_file() {
                        return Err(PipelineError::field(
                            "scene.stack.truth",
                            format!("{} does not exist", t.display()),
                        ));
                    }
                }
                let stack = read_sample_stack(path)
                    .map_err(|e| PipelineError::field("scene.stack.path", e))?;
                Ok((stack.width(), stack.height(), stack.num_classes()))
            }
        }
    }

    /// Checks everything that can be checked without running a stage.
    pub fn validate(&self) -> PResult<()> {
        self.mapping()?;
        if self.lambdas.is_empty() {
            return Err(PipelineError::field("lambdas", "must not be empty"));
        }
        for (n, l) in self.lambdas.iter().enumerate() {
            if !(l.is_finite() && *l >= 0.0) {
                return Err(PipelineError::field(
                    format!("lambdas[{n}]"),
                    format!("{l} must be finite and >= 0"),
                ));
            }
            if self.lambdas[..n].contains(l) {
                return Err(PipelineError::field(
                    format!("lambdas[{n}]"),
                    format!("{l} repeated"),
                ));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(PipelineError::field("alpha", "must lie in (0, 1]"));
        }
        if let Some(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(PipelineError::field("gamma", "must be positive"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d <= self.gamma.unwrap_or(f64::INFINITY)) {
                return Err(PipelineError::field("delta", "must lie in (0, gamma]"));
            }
        }
        if self.draws == 0 {
            return Err(PipelineError::field("draws", "must be at least 1"));
        }
        if self.vehicles.is_empty() {
            return Err(PipelineError::field("vehicles", "need at least one vehicle"));
        }
        if self.demands.is_empty() {
            return Err(PipelineError::field("demands", "need at least one demand"));
        }
        let (w, h, classes) = self.dims()?;
        if classes > self.class_costs.len() {
            return Err(PipelineError::field(
                "class_costs",
                format!("{} entries for {classes} classes", self.class_costs.len()),
            ));
        }
        for (name, pixels) in [("vehicles", &self.vehicles), ("demands", &self.demands)] {
            for (n, p) in pixels.iter().enumerate() {
                if p.row >= h || p.col >= w {
                    return Err(PipelineError::field(
                        format!("{name}[{n}]"),
                        format!("{p} outside {w}x{h} grid"),
                    ));
                }
            }
        }
        for (n, v) in self.vehicles.iter().enumerate() {
            if self.demands.contains(v) {
                return Err(PipelineError::field(
                    format!("vehicles[{n}]"),
                    format!("{v} coincides with a demand"),
                ));
            }
        }
        Ok(())
    }

    /// Rejects endpoints whose predicted class is impassable.
    fn check_endpoints(&self, labels: &LabelMap) -> PResult<()> {
        for (name, pixels) in [("vehicles", &self.vehicles), ("demands", &self.demands)] {
            for (n, &p) in pixels.iter().enumerate() {
                let class = labels.get(p);
                if let Some(ClassCost::Impassable) = self.class_costs.get(class) {
                    return Err(PipelineError::field(
                        format!("{name}[{n}]"),
                        format!("{p} has impassable class {class}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn out_file(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

fn path_file(out: &Path, t: Tuple) -> PathBuf {
    out.join("paths")
        .join(format!("path_i{}_j{}_k{}.csv", t.vehicle, t.demand, t.path))
}

fn ensure_dir(dir: &Path) -> PResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn write_text(file: &Path, text: &str) -> PResult<()> {
    fs::write(file, text).map_err(|e| Error::io(file, e).into())
}

/// Writes `stack.rseg` and, when known, the ground truth.
pub fn stage_synth(sc: &Scenario, out: &Path) -> PResult<()> {
    ensure_dir(out)?;
    let (truth, stack) = match &sc.scene {
        SceneSource::Synth(spec) => {
            let (truth, stack) = synth_scene(spec, seed::derive(sc.seed, seed::SYNTH))?;
            (Some(truth), stack)
        }
        SceneSource::Stack { path, truth } => {
            let stack = read_sample_stack(path)?;
            let truth = truth.as_ref().map(read_label_map).transpose()?;
            (truth, stack)
        }
    };
    write_sample_stack(out_file(out, "stack.rseg"), &stack)?;
    if let Some(truth) = truth {
        write_label_map(out_file(out, "truth.rlbl"), &truth)?;
        write_label_map_csv(out_file(out, "truth.csv"), &truth)?;
    }
    Ok(())
}

/// Label, variance and per-λ cost maps.
pub fn stage_costmap(sc: &Scenario, out: &Path) -> PResult<()> {
    let stack = read_sample_stack(out_file(out, "stack.rseg"))?;
    let labels = mode_label(&stack);
    let variance = pixel_uncertainty(&stack);
    write_label_map(out_file(out, "labels.rlbl"), &labels)?;
    write_label_map_csv(out_file(out, "labels.csv"), &labels)?;
    write_variance_map(out_file(out, "variance.rvar"), &variance)?;
    write_variance_map_csv(out_file(out, "variance.csv"), &variance)?;
    let base = sc.mapping()?;
    for (k, &l) in sc.lambdas.iter().enumerate() {
        let map = build_cost_map(&labels, &variance, &base.with_lambda(l)?)?;
        write_cost_map_csv(out_file(out, &format!("costmap_k{k}.csv")), &map)?;
    }
    Ok(())
}

/// One A* path per (vehicle, demand, λ).
pub fn stage_paths(sc: &Scenario, out: &Path) -> PResult<CandidateSet> {
    let labels = read_label_map(out_file(out, "labels.rlbl"))?;
    let variance = read_variance_map(out_file(out, "variance.rvar"))?;
    sc.check_endpoints(&labels)?;
    let candidates = generate_candidates(
        &labels,
        &variance,
        &sc.mapping()?,
        &sc.lambdas,
        &sc.vehicles,
        &sc.demands,
    )?;
    ensure_dir(&out.join("paths"))?;
    for (t, path) in candidates.iter() {
        write_path_csv(path_file(out, t), t, path)?;
    }
    for (t, earlier) in candidates.duplicates() {
        eprintln!(
            "note: candidate {t} has the same geometry as path {earlier} for that pair"
        );
    }
    Ok(candidates)
}

fn load_candidates(sc: &Scenario, out: &Path) -> PResult<CandidateSet> {
    let ground = GroundSet::new(sc.vehicles.len(), sc.demands.len(), sc.lambdas.len());
    let paths = ground
        .tuples()
        .map(|t| Ok(read_path_csv(path_file(out, t))?.path))
        .collect::<PResult<Vec<_>>>()?;
    Ok(CandidateSet::new(
        sc.vehicles.clone(),
        sc.demands.clone(),
        sc.lambdas.clone(),
        paths,
    )?)
}

/// Monte Carlo efficiency matrix.
pub fn stage_sample(sc: &Scenario, out: &Path) -> PResult<EfficiencyMatrix> {
    let candidates = load_candidates(sc, out)?;
    let stack = read_sample_stack(out_file(out, "stack.rseg"))?;
    let matrix = build_efficiency_matrix(
        &candidates,
        &stack,
        &sc.mapping()?,
        sc.draws,
        seed::derive(sc.seed, seed::SAMPLE),
    )?;
    matrix.write_csv(out_file(out, "efficiency.csv"))?;
    Ok(matrix)
}

/// Greedy CVaR assignment, its reward distribution, and the SVG overlay.
pub fn stage_assign(sc: &Scenario, out: &Path) -> PResult<SolutionReport> {
    let matrix = EfficiencyMatrix::read_csv(out_file(out, "efficiency.csv"))?;
    let ground = GroundSet::new(sc.vehicles.len(), sc.demands.len(), sc.lambdas.len());
    let params = RiskParams::resolve(sc.alpha, sc.gamma, sc.delta, &matrix, ground.demands)?;
    let solution = sga_assign(&ground, &matrix, &params)?;
    let report = SolutionReport::new(
        &solution,
        &params,
        Some(sc.seed),
        matrix.draws(),
        Some(&sc.lambdas),
    );
    report.write(out_file(out, "assignment.json"))?;
    write_f_distribution_csv(
        out_file(out, "f_distribution.csv"),
        &f_samples(&solution.selected, &matrix)?,
    )?;

    let candidates = load_candidates(sc, out)?;
    let labels = read_label_map(out_file(out, "labels.rlbl"))?;
    let variance = read_variance_map(out_file(out, "variance.rvar"))?;
    write_text(
        &out_file(out, "overlay.svg"),
        &render_svg(&labels, &variance, &candidates, &solution.selected),
    )?;

    let resolved = Scenario {
        gamma: Some(params.gamma),
        delta: Some(params.delta),
        ..sc.clone()
    };
    let mut text = serde_json::to_string_pretty(&resolved).expect("scenario serialises");
    text.push('\n');
    write_text(&out_file(out, "scenario.resolved.json"), &text)?;
    Ok(report)
}

/// Assigns from a standalone efficiency CSV, writing `assignment.json` and
/// `f_distribution.csv` into `out`.
pub fn assign_from_matrix(
    matrix_file: &Path,
    alpha: f64,
    gamma: Option<f64>,
    delta: Option<f64>,
    seed: Option<u64>,
    out: &Path,
) -> PResult<SolutionReport> {
    let matrix = EfficiencyMatrix::read_csv(matrix_file)?;
    let ground = GroundSet::of_matrix(&matrix)?;
    let params = RiskParams::resolve(alpha, gamma, delta, &matrix, ground.demands)?;
    let solution = sga_assign(&ground, &matrix, &params)?;
    ensure_dir(out)?;
    let report = SolutionReport::new(&solution, &params, seed, matrix.draws(), None);
    report.write(out_file(out, "assignment.json"))?;
    write_f_distribution_csv(
        out_file(out, "f_distribution.csv"),
        &f_samples(&solution.selected, &matrix)?,
    )?;
    Ok(report)
}

/// All stages in order.
pub fn run_pipeline(sc: &Scenario, out: &Path) -> PResult<SolutionReport> {
    stage_synth(sc, out)?;
    stage_costmap(sc, out)?;
    stage_paths(sc, out)?;
    stage_sample(sc, out)?;
    stage_assign(sc, out)
}
