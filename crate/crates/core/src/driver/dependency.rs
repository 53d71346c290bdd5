use ndarray::IxDyn;

use crate::array::{num_elements, unravel, FlagArray};
use crate::error::{Error, Result};

/// Which QOI owns which mean, as discovered by probing the dependency function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyMatrix {
    qoi_shape: Vec<usize>,
    mean_shape: Vec<usize>,
    /// `rows[l][k]`: mean `k` is a dependency of QOI `l` (flat indices).
    rows: Vec<Vec<bool>>,
    owner: Vec<usize>,
}

impl DependencyMatrix {
    pub fn qoi_shape(&self) -> &[usize] {
        &self.qoi_shape
    }

    pub fn mean_shape(&self) -> &[usize] {
        &self.mean_shape
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn depends(&self, qoi: usize, mean: usize) -> bool {
        self.rows[qoi][mean]
    }

    /// Flat index of the QOI owning flat mean index `mean`.
    pub fn owner(&self, mean: usize) -> usize {
        self.owner[mean]
    }

    /// Number of means owned by each QOI.
    pub fn owned_counts(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|row| row.iter().filter(|&&b| b).count())
            .collect()
    }

    /// Means owned by flat QOI index `qoi`.
    pub fn owned_means(&self, qoi: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[qoi]
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }
}

fn probe<D>(dependency: &D, input: &FlagArray, mean_shape: &[usize]) -> Result<FlagArray>
where
    D: Fn(&FlagArray) -> FlagArray + ?Sized,
{
    let out = dependency(input);
    if out.shape() != mean_shape {
        return Err(Error::Shape {
            expected: mean_shape.to_vec(),
            actual: out.shape().to_vec(),
        });
    }
    Ok(out.as_standard_layout().into_owned())
}

fn flat(flags: &FlagArray) -> Vec<bool> {
    flags.iter().copied().collect()
}

/// Probes `dependency` with one-hot QOI flag arrays and checks that every mean
/// index is a dependency of exactly one QOI index.
///
/// Also requires `D(all False) = all False`, `D(all True) = all True`, and that
/// clearing one QOI flag from the all-True input re-enables exactly the means
/// that QOI owns.
pub fn validate_dependency<D>(
    dependency: &D,
    qoi_shape: &[usize],
    mean_shape: &[usize],
) -> Result<DependencyMatrix>
where
    D: Fn(&FlagArray) -> FlagArray + ?Sized,
{
    let n_qoi = num_elements(qoi_shape);
    let n_mean = num_elements(mean_shape);
    if n_qoi == 0 || n_mean == 0 {
        return Err(Error::DependencyStructure(
            "QOI and mean arrays must be non-empty".into(),
        ));
    }

    let none = probe(dependency, &FlagArray::from_elem(IxDyn(qoi_shape), false), mean_shape)?;
    if let Some(k) = none.iter().position(|&b| b) {
        return Err(Error::DependencyStructure(format!(
            "mean index {:?} is flagged stopped before any QOI has converged",
            unravel(mean_shape, k)
        )));
    }

    let mut rows = Vec::with_capacity(n_qoi);
    for l in 0..n_qoi {
        let mut input = FlagArray::from_elem(IxDyn(qoi_shape), false);
        input.as_slice_mut().expect("fresh array")[l] = true;
        rows.push(flat(&probe(dependency, &input, mean_shape)?));
    }

    let mut owner = vec![0; n_mean];
    for (k, slot) in owner.iter_mut().enumerate() {
        let owners: Vec<usize> = (0..n_qoi).filter(|&l| rows[l][k]).collect();
        if owners.len() != 1 {
            let owners: Vec<Vec<usize>> = owners.iter().map(|&l| unravel(qoi_shape, l)).collect();
            return Err(Error::DependencyStructure(format!(
                "mean index {:?} is a dependency of {} QOI indices {:?}; every mean must \
                 belong to exactly one QOI. Duplicate shared integrand outputs so each QOI \
                 owns its own copy (e.g. add mu_4 = mu_1 and write s_2 = mu_4 + mu_3 instead \
                 of s_2 = mu_1 + mu_3)",
                unravel(mean_shape, k),
                owners.len(),
                owners
            )));
        }
        *slot = owners[0];
    }

    let all = probe(dependency, &FlagArray::from_elem(IxDyn(qoi_shape), true), mean_shape)?;
    if let Some(k) = all.iter().position(|&b| !b) {
        return Err(Error::DependencyStructure(format!(
            "mean index {:?} is still required after every QOI has converged",
            unravel(mean_shape, k)
        )));
    }

    for (l, row) in rows.iter().enumerate() {
        let mut input = FlagArray::from_elem(IxDyn(qoi_shape), true);
        input.as_slice_mut().expect("fresh array")[l] = false;
        let out = flat(&probe(dependency, &input, mean_shape)?);
        if let Some(k) = (0..n_mean).find(|&k| out[k] == row[k]) {
            return Err(Error::DependencyStructure(format!(
                "dependency function is not consistent with ownership: with only QOI {:?} \
                 unconverged, mean {:?} is {}",
                unravel(qoi_shape, l),
                unravel(mean_shape, k),
                if out[k] { "stopped" } else { "required" }
            )));
        }
    }

    Ok(DependencyMatrix {
        qoi_shape: qoi_shape.to_vec(),
        mean_shape: mean_shape.to_vec(),
        rows,
        owner,
    })
}

/// Per-mean uncertainty levels: the smallest `alpha_l / N_l` over the QOI `l`
/// depending on mean `k`, where `N_l` counts the means `l` depends on.
pub fn allocate_alpha(dependencies: &DependencyMatrix, qoi_alpha: &[f64]) -> Result<Vec<f64>> {
    let n_qoi = dependencies.rows.len();
    if qoi_alpha.len() != n_qoi {
        return Err(Error::Shape {
            expected: dependencies.qoi_shape.clone(),
            actual: vec![qoi_alpha.len()],
        });
    }
    let counts = dependencies.owned_counts();
    let n_mean = dependencies.owner.len();
    (0..n_mean)
        .map(|k| {
            (0..n_qoi)
                .filter(|&l| dependencies.rows[l][k])
                .map(|l| qoi_alpha[l] / counts[l] as f64)
                .reduce(f64::min)
                .ok_or_else(|| {
                    Error::DependencyStructure(format!(
                        "mean index {:?} has no owning QOI",
                        unravel(&dependencies.mean_shape, k)
                    ))
                })
        })
        .collect()
}
