use std::path::Path;

use brainkit::clustering::{box_smooth, grid_to_graph, kmeans, split_regions, ward_agglomerate, KMeansOptions};
use brainkit::decomposition::{concat_ica, pca_fit, IcaOptions};
use brainkit::masking::{apply_mask, unmask, unmask_row};
use brainkit::nifti::write_nifti;
use brainkit::signal::detrend;
use brainkit::{BrainMask, Volume4D};
use ndarray::{Array1, Array2};

use super::{ensure_dir, write_map, write_summary, SliceChoice};
use crate::error::CliResult;
use crate::render::render_labels;
use crate::tables::write_table;

#[derive(Debug, Clone, PartialEq)]
pub struct IcaParams {
    pub n_components: usize,
    /// Per-subject PCA dimension; `None` picks `2·n_components`, clipped to
    /// the shortest run.
    pub subject_dim: Option<usize>,
    pub seed: u64,
    pub slice: SliceChoice,
}

impl Default for IcaParams {
    fn default() -> Self {
        IcaParams {
            n_components: 10,
            subject_dim: None,
            seed: 0,
            slice: SliceChoice::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcaReport {
    /// `n_components × n_voxels`, unit variance per map.
    pub maps: Array2<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Group ICA over the concatenated subjects.
pub fn run_ica(subjects: &[Volume4D], mask: &BrainMask, params: &IcaParams, out: &Path) -> CliResult<IcaReport> {
    ensure_dir(out)?;
    let data = subjects
        .iter()
        .map(|v| apply_mask(v, mask))
        .collect::<brainkit::Result<Vec<_>>>()?;
    let shortest = data.iter().map(|d| d.nrows()).min().unwrap_or(0);
    let k = params.n_components;
    let dim = params.subject_dim.unwrap_or((2 * k).min(shortest).max(k));
    let opts = IcaOptions {
        seed: params.seed,
        ..IcaOptions::default()
    };
    let group = concat_ica(&data, k, dim, &opts)?;
    let background = subjects.first().map(Volume4D::mean_frame);
    for (i, map) in group.maps.rows().into_iter().enumerate() {
        write_map(map, mask, background.as_ref(), params.slice, out, &format!("ic_{i:02}"))?;
    }
    write_nifti(&unmask(group.maps.view(), mask)?, out.join("components.nii"))?;
    let conv = group.ica.convergence;
    write_summary(
        out,
        &[
            ("subjects", subjects.len().to_string()),
            ("components", k.to_string()),
            ("subject_dim", dim.to_string()),
            ("converged", conv.converged.to_string()),
            ("iterations", conv.iterations.to_string()),
        ],
    )?;
    Ok(IcaReport {
        maps: group.maps,
        converged: conv.converged,
        iterations: conv.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ward,
    KMeans,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ward" => Ok(Method::Ward),
            "kmeans" => Ok(Method::KMeans),
            _ => Err(format!("method must be ward or kmeans, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub method: Method,
    pub n_clusters: usize,
    pub seed: u64,
    /// Box-smoothing radius in voxels applied before masking.
    pub smooth_radius: usize,
    /// Reduce each voxel's time course to this many PCA scores first.
    pub pca_components: Option<usize>,
    pub slice: SliceChoice,
}

impl ClusterParams {
    pub fn new(method: Method, n_clusters: usize) -> Self {
        ClusterParams {
            method,
            n_clusters,
            seed: 0,
            smooth_radius: 0,
            pca_components: None,
            slice: SliceChoice::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    /// Cluster id per masked voxel.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// Connected pieces once clusters are split on the voxel grid.
    pub n_regions: usize,
    pub sizes: Vec<usize>,
    /// False when Ward fell back to the mask's connected components.
    pub feasible: bool,
}

/// Parcellation of the masked voxels by their time courses.
pub fn run_cluster(vol: &Volume4D, mask: &BrainMask, params: &ClusterParams, out: &Path) -> CliResult<ClusterReport> {
    ensure_dir(out)?;
    let smoothed;
    let source = if params.smooth_radius > 0 {
        smoothed = box_smooth(vol, params.smooth_radius);
        &smoothed
    } else {
        vol
    };
    let x = detrend(apply_mask(source, mask)?.view())?;
    // columns are voxels; PCA runs over voxels as observations
    let features = match params.pca_components {
        Some(k) => pca_fit(x.t(), k)?.transform(x.t()).reversed_axes(),
        None => x,
    };
    let graph = grid_to_graph(mask);
    let (parcellation, feasible) = match params.method {
        Method::Ward => {
            let ward = ward_agglomerate(features.view(), &graph, params.n_clusters)?;
            (ward.parcellation, ward.feasible)
        }
        Method::KMeans => {
            let km = kmeans(features.t(), params.n_clusters, params.seed, &KMeansOptions::default())?;
            (km.parcellation, true)
        }
    };
    let (_, n_regions) = split_regions(&graph, &parcellation.labels);
    let sizes = parcellation.sizes();

    let shifted: Array1<f64> = parcellation.labels.iter().map(|&l| (l + 1) as f64).collect();
    let labels_vol = unmask_row(shifted.view(), mask)?;
    write_nifti(&labels_vol, out.join("labels.nii"))?;
    let index = params.slice.resolve(mask.shape());
    render_labels(&labels_vol, params.slice.axis, index, params.seed)?.write(&out.join("labels.pgm"))?;
    let rows: Vec<Vec<String>> = sizes
        .iter()
        .enumerate()
        .map(|(i, s)| vec![(i + 1).to_string(), s.to_string()])
        .collect();
    write_table(&out.join("sizes.csv"), &["label", "voxels"], &rows)?;
    write_summary(
        out,
        &[
            ("method", format!("{:?}", params.method)),
            ("clusters", parcellation.n_clusters.to_string()),
            ("regions", n_regions.to_string()),
            ("feasible", feasible.to_string()),
        ],
    )?;
    Ok(ClusterReport {
        labels: parcellation.labels,
        n_clusters: parcellation.n_clusters,
        n_regions,
        sizes,
        feasible,
    })
}
