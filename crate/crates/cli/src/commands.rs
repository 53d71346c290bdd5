//! Builds the configured problem and runs it.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::Deserialize;

use qmcqoi::driver::FnIntegrand;
use qmcqoi::problems::{
    all_subsets, conjugate_gaussian, ishigami_problem, make_mean_vector_problem, make_posterior_mean_problem,
    make_qei_integrand, singleton_subsets, uniform_metrics, QeiSpec,
};
use qmcqoi::study::{convergence_study, smooth_product, StudyConfig, StudyTable};
use qmcqoi::{run, ProblemSpec, RunReport};

use crate::config::{ConfigError, ProblemConfig, RunConfig, SubsetsArg};

pub enum Outcome {
    Run {
        report: Box<RunReport>,
        /// Names of the QOI rows, when the problem has them.
        labels: Option<Vec<String>>,
    },
    Study(StudyTable),
}

/// `qei --spec` file contents.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QeiFile {
    means: Vec<Vec<f64>>,
    factors: Vec<Vec<Vec<f64>>>,
    y_star: f64,
}

fn read_qei_spec(path: &Path) -> Result<QeiSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let file: QeiFile =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid qei spec {}: {e}", path.display())))?;
    let factors = file
        .factors
        .into_iter()
        .map(|rows| {
            let d = rows.len();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            Array2::from_shape_vec((d, flat.len() / d.max(1)), flat)
                .map_err(|_| ConfigError("qei factors must be square matrices".into()))
        })
        .collect::<Result<_, _>>()?;
    Ok(QeiSpec {
        means: file.means.into_iter().map(Array1::from).collect(),
        factors,
        y_star: file.y_star,
    })
}

fn half_normal() -> QeiSpec {
    QeiSpec {
        means: vec![Array1::from(vec![0.0])],
        factors: vec![Array2::from_elem((1, 1), 1.0)],
        y_star: 0.0,
    }
}

fn subset_label(kind: &str, u: &[usize]) -> String {
    let inputs: Vec<String> = u.iter().map(|v| (v + 1).to_string()).collect();
    format!("{kind}{{{}}}", inputs.join(","))
}

fn build(config: &RunConfig) -> Result<(ProblemSpec, Option<Vec<String>>), ConfigError> {
    let metric = &config.metric;
    let alpha = config.alpha;
    Ok(match &config.problem {
        ProblemConfig::Product { dimension } => {
            let f = Arc::new(FnIntegrand::new(*dimension, &[], |x: &[f64]| vec![smooth_product(x)]));
            (make_mean_vector_problem(f, vec![metric.clone()], vec![alpha])?, None)
        }
        ProblemConfig::Moments => {
            let f = Arc::new(FnIntegrand::new(1, &[3], |x: &[f64]| vec![x[0], x[0] * x[0], x[0].powi(3)]));
            (make_mean_vector_problem(f, uniform_metrics(metric, 3), vec![alpha; 3])?, None)
        }
        ProblemConfig::Ishigami { a, b, subsets } => {
            let subsets = match subsets {
                SubsetsArg::Singletons => singleton_subsets(3),
                SubsetsArg::All => all_subsets(3),
            };
            let n = 2 * subsets.len();
            let labels = ["closed", "total"]
                .iter()
                .flat_map(|kind| subsets.iter().map(move |u| subset_label(kind, u)))
                .collect();
            let p = ishigami_problem(subsets, *a, *b, uniform_metrics(metric, n), vec![alpha; n])?;
            (p.problem().clone(), Some(labels))
        }
        ProblemConfig::Conjugate { observations } => (
            make_posterior_mean_problem(conjugate_gaussian(observations.clone()), vec![metric.clone()], vec![alpha])?,
            None,
        ),
        ProblemConfig::Qei { spec } => {
            let spec = match spec {
                Some(path) => read_qei_spec(path)?,
                None => half_normal(),
            };
            let batches = spec.means.len();
            let f = Arc::new(make_qei_integrand(spec)?);
            (make_mean_vector_problem(f, uniform_metrics(metric, batches), vec![alpha; batches])?, None)
        }
        ProblemConfig::Convergence { .. } => unreachable!("studies are not driver runs"),
    })
}

pub fn execute(config: &RunConfig) -> Result<Outcome, ConfigError> {
    if let ProblemConfig::Convergence {
        dimension,
        seeds,
        m_min,
        m_max,
    } = config.problem
    {
        let study = StudyConfig {
            seeds,
            m_min,
            m_max,
            ..StudyConfig::smooth_product(dimension, config.seed)
        };
        return Ok(Outcome::Study(convergence_study(&study)?));
    }
    let (problem, labels) = build(config)?;
    let options = config.run_options(problem.dimension())?;
    let report = run(&problem, &options)?;
    Ok(Outcome::Run { report: Box::new(report), labels })
}
