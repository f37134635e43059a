//! Command-line surface: argument definitions, config merging and dispatch.

use std::path::{Path, PathBuf};

use brainkit::masking::compute_mask;
use brainkit::nifti::read_nifti;
use brainkit::resample::{resample, Interpolation};
use brainkit::signal::CleanConfig;
use brainkit::{BrainMask, Volume4D};
use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::error::{CliError, CliResult};
use crate::pipelines::{
    run_cluster, run_decode, run_decode_pixels, run_encode, run_ica, run_searchlight, run_synth, Classifier,
    ClusterParams, DecodeParams, EncodeParams, IcaParams, Method, PixelParams, SearchlightParams, SliceChoice,
    SynthKind,
};
use crate::render::{render_slice, SliceAxis};
use crate::settings::Settings;
use crate::tables::{read_labels, read_matrix};

// mask quantiles used when no mask file is given
const MASK_LOWER_Q: f64 = 0.2;
const MASK_UPPER_Q: f64 = 0.85;

fn value(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).help(help).value_name("VALUE")
}

fn switch(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).help(help).action(ArgAction::SetTrue)
}

fn common(cmd: Command) -> Command {
    cmd.arg(value("config", "key = value file; flags given here override it"))
        .arg(value("out", "output directory (file for render)"))
        .arg(value("seed", "random seed [0]"))
        .arg(value("slice-axis", "preview slice axis x|y|z [z]"))
        .arg(value("slice-index", "preview slice index [middle]"))
}

fn masked_input(cmd: Command) -> Command {
    cmd.arg(value("data", "4D NIfTI volume"))
        .arg(value("mask", "mask NIfTI; computed from the mean image when absent"))
        .arg(value("interp", "mask resampling when grids differ: nearest|trilinear [nearest]"))
}

fn cleaning(cmd: Command) -> Command {
    cmd.arg(switch("detrend", "remove a linear trend per voxel"))
        .arg(switch("standardize", "scale each voxel to unit variance"))
        .arg(value("low-cut", "high-pass cutoff in Hz"))
        .arg(value("high-cut", "low-pass cutoff in Hz"))
        .arg(value("tr", "repetition time in seconds [1]"))
}

fn classifier(cmd: Command) -> Command {
    cmd.arg(value("labels", "CSV with index,label rows"))
        .arg(value("classifier", "svc|logreg [svc]"))
        .arg(value("c", "inverse regularization C [1]"))
        .arg(value("n-folds", "cross-validation folds [5]"))
}

pub fn command() -> Command {
    Command::new("brainkit")
        .about("Decoding, encoding, decomposition and parcellation of brain volumes")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            common(Command::new("synth").about("write a synthetic dataset"))
                .arg(value("kind", "decoding|encoding|rest"))
                .arg(value("shape", "grid as nx,ny,nz"))
                .arg(value("n-per-class", "trials per class [40]"))
                .arg(value("snr", "signal amplitude [5]"))
                .arg(value("n-trials", "encoding trials [300]"))
                .arg(value("n-voxels", "encoding voxels [400]"))
                .arg(value("noise", "encoding noise sigma [0.5]"))
                .arg(value("n-subjects", "rest subjects [2]"))
                .arg(value("n-frames", "rest frames per subject [80]"))
                .arg(value("n-networks", "rest networks [3]")),
        )
        .subcommand(
            classifier(cleaning(masked_input(common(
                Command::new("decode").about("ANOVA + linear classifier decoding"),
            ))))
            .arg(value("k", "features kept by ANOVA [500]"))
            .arg(switch("shuffle", "shuffle before splitting folds"))
            .arg(switch("permute-labels", "shuffle labels first (chance control)")),
        )
        .subcommand(
            masked_input(common(Command::new("encode").about("ridge encoding and receptive fields")))
                .arg(value("stimuli", "CSV of stimuli with a header row"))
                .arg(value("alpha", "ridge penalty [100]"))
                .arg(value("n-folds", "cross-validation folds [10]"))
                .arg(value("n-fields", "voxels given a receptive field [50]"))
                .arg(value("lars-folds", "folds for LARS-lasso [5]"))
                .arg(value("lars-max-iter", "LARS steps [500]")),
        )
        .subcommand(
            masked_input(common(Command::new("decode-pixels").about("decode every stimulus pixel")))
                .arg(value("stimuli", "CSV of stimuli with a header row"))
                .arg(value("c-scale", "factor applied to the C grid [4]"))
                .arg(value("k", "in-fold ANOVA features, 0 keeps all [50]"))
                .arg(value("n-folds", "cross-validation folds [5]"))
                .arg(switch("no-standardize", "skip per-fold standardization")),
        )
        .subcommand(
            classifier(cleaning(masked_input(common(
                Command::new("searchlight").about("spherical searchlight accuracy map"),
            ))))
            .arg(value("radius-mm", "sphere radius in millimetres")),
        )
        .subcommand(
            common(Command::new("ica").about("group ICA over concatenated subjects"))
                .arg(value("data", "4D NIfTI per subject; repeat or comma-separate").action(ArgAction::Append))
                .arg(value("mask", "mask NIfTI; computed from the first subject when absent"))
                .arg(value("interp", "mask resampling when grids differ: nearest|trilinear [nearest]"))
                .arg(value("n-components", "independent components [10]"))
                .arg(value("subject-dim", "per-subject PCA dimension [2·components]")),
        )
        .subcommand(
            masked_input(common(Command::new("cluster").about("Ward or k-means parcellation")))
                .arg(value("method", "ward|kmeans [ward]"))
                .arg(value("n-clusters", "number of clusters"))
                .arg(value("smooth-radius", "box smoothing radius in voxels [0]"))
                .arg(value("pca-components", "PCA scores per voxel before clustering")),
        )
        .subcommand(
            common(Command::new("render").about("grayscale PGM of one slice"))
                .arg(value("map", "NIfTI map"))
                .arg(value("background", "NIfTI anatomical background"))
                .arg(value("frame", "map frame [0]"))
                .arg(value("threshold", "hide |values| below this [0]")),
        )
}

/// Config file values, then every flag given on the command line.
pub fn settings_from(matches: &ArgMatches) -> CliResult<Settings> {
    let mut settings = match matches.get_one::<String>("config") {
        Some(p) => Settings::load(Path::new(p))?,
        None => Settings::default(),
    };
    for id in matches.ids() {
        let key = id.as_str();
        if key == "config" || matches.value_source(key) != Some(ValueSource::CommandLine) {
            continue;
        }
        if let Ok(Some(true)) = matches.try_get_one::<bool>(key) {
            settings.set(key, "true");
        } else if let Ok(Some(values)) = matches.try_get_many::<String>(key) {
            settings.set(key, values.cloned().collect::<Vec<_>>().join(","));
        }
    }
    Ok(settings)
}

/// Runs one subcommand and returns a one-line report for stdout.
pub fn run(matches: &ArgMatches) -> CliResult<String> {
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| CliError::config("no subcommand"))?;
    let s = settings_from(sub)?;
    match name {
        "synth" => synth(&s),
        "decode" => decode(&s),
        "encode" => encode(&s),
        "decode-pixels" => decode_pixels(&s),
        "searchlight" => searchlight(&s),
        "ica" => ica(&s),
        "cluster" => cluster(&s),
        "render" => render(&s),
        other => Err(CliError::config(format!("unknown subcommand {other}"))),
    }
}

fn out_dir(s: &Settings) -> CliResult<PathBuf> {
    s.require("out")
}

fn slice(s: &Settings) -> CliResult<SliceChoice> {
    Ok(SliceChoice {
        axis: s.get_or("slice-axis", SliceAxis::Z)?,
        index: s.get("slice-index")?,
    })
}

fn shape3(s: &Settings, default: [usize; 3]) -> CliResult<[usize; 3]> {
    match s.list::<usize>("shape")? {
        None => Ok(default),
        Some(v) => v
            .try_into()
            .map_err(|_| CliError::config("shape needs three comma-separated sizes")),
    }
}

fn interpolation(s: &Settings) -> CliResult<Interpolation> {
    match s.raw("interp").unwrap_or("nearest") {
        "nearest" => Ok(Interpolation::Nearest),
        "trilinear" => Ok(Interpolation::Trilinear),
        other => Err(CliError::config(format!("interp must be nearest or trilinear, got {other:?}"))),
    }
}

/// The mask for `reference`: read and resampled onto its grid when needed,
/// or computed from its mean image.
fn load_mask(s: &Settings, reference: &Volume4D) -> CliResult<BrainMask> {
    if s.raw("mask").is_none() {
        return Ok(compute_mask(&reference.mean_frame(), MASK_LOWER_Q, MASK_UPPER_Q)?);
    }
    let mask_vol = read_nifti(s.existing_path("mask")?)?;
    let same_grid = mask_vol.spatial_shape() == reference.spatial_shape()
        && mask_vol.affine().approx_eq(reference.affine(), 1e-6);
    let on_grid = if same_grid {
        mask_vol
    } else {
        log::info!("resampling mask onto the data grid");
        let r = resample(&mask_vol, reference.affine(), reference.spatial_shape(), interpolation(s)?)?;
        let [nx, ny, nz] = reference.spatial_shape();
        let kept = r.frame(0).iter().map(|&v| if v >= 0.5 { 1.0 } else { 0.0 }).collect();
        Volume4D::new([nx, ny, nz, 1], kept, *reference.affine())?
    };
    Ok(BrainMask::from_volume(&on_grid)?)
}

fn clean_config(s: &Settings) -> CliResult<CleanConfig> {
    let cfg = CleanConfig {
        detrend: s.flag("detrend")?,
        standardize: s.flag("standardize")?,
        low_cut_hz: s.get("low-cut")?,
        high_cut_hz: s.get("high-cut")?,
        tr_seconds: s.get_or("tr", 1.0)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn classifier_of(s: &Settings) -> CliResult<Classifier> {
    s.raw("classifier")
        .unwrap_or("svc")
        .parse()
        .map_err(CliError::config)
}

fn synth(s: &Settings) -> CliResult<String> {
    let kind = match s.require::<String>("kind")?.as_str() {
        "decoding" => SynthKind::Decoding {
            shape: shape3(s, [16, 16, 16])?,
            n_per_class: s.get_or("n-per-class", 40)?,
            snr: s.get_or("snr", 5.0)?,
        },
        "encoding" => SynthKind::Encoding {
            n_trials: s.get_or("n-trials", 300)?,
            n_voxels: s.get_or("n-voxels", 400)?,
            noise: s.get_or("noise", 0.5)?,
        },
        "rest" => SynthKind::Rest {
            n_subjects: s.get_or("n-subjects", 2)?,
            n_frames: s.get_or("n-frames", 80)?,
            shape: shape3(s, [12, 12, 12])?,
            n_networks: s.get_or("n-networks", 3)?,
        },
        other => return Err(CliError::config(format!("kind must be decoding, encoding or rest, got {other:?}"))),
    };
    let files = run_synth(kind, s.get_or("seed", 0)?, &out_dir(s)?)?;
    Ok(format!("wrote {} files", files.len()))
}

fn decode(s: &Settings) -> CliResult<String> {
    let vol = read_nifti(s.existing_path("data")?)?;
    let mask = load_mask(s, &vol)?;
    let labels = read_labels(&s.existing_path("labels")?)?;
    let params = DecodeParams {
        k: s.get_or("k", 500)?,
        classifier: classifier_of(s)?,
        c: s.get_or("c", 1.0)?,
        n_folds: s.get_or("n-folds", 5)?,
        shuffle: s.flag("shuffle")?,
        seed: s.get_or("seed", 0)?,
        clean: clean_config(s)?,
        permute_labels: s.flag("permute-labels")?,
        slice: slice(s)?,
    };
    let report = run_decode(&vol, &mask, &labels, &params, &out_dir(s)?)?;
    Ok(format!("accuracy {:.3} ± {:.3}", report.mean, report.std))
}

/// Stimuli CSV plus the masked volume as a `trials × voxels` matrix.
fn encoding_inputs(s: &Settings) -> CliResult<(ndarray::Array2<f64>, ndarray::Array2<f64>, BrainMask)> {
    let stimuli = read_matrix(&s.existing_path("stimuli")?, true)?;
    let vol = read_nifti(s.existing_path("data")?)?;
    let mask = load_mask(s, &vol)?;
    let bold = brainkit::masking::apply_mask(&vol, &mask)?;
    Ok((stimuli, bold, mask))
}

fn encode(s: &Settings) -> CliResult<String> {
    let (stimuli, bold, mask) = encoding_inputs(s)?;
    let defaults = EncodeParams::default();
    let params = EncodeParams {
        alpha: s.get_or("alpha", defaults.alpha)?,
        n_folds: s.get_or("n-folds", defaults.n_folds)?,
        n_fields: s.get_or("n-fields", defaults.n_fields)?,
        lars_folds: s.get_or("lars-folds", defaults.lars_folds)?,
        lars_max_iter: s.get_or("lars-max-iter", defaults.lars_max_iter)?,
        slice: slice(s)?,
    };
    let report = run_encode(stimuli.view(), bold.view(), &mask, &params, &out_dir(s)?)?;
    let best = report.top_voxels.first().map(|&v| report.r2[v]).unwrap_or(f64::NAN);
    Ok(format!("best voxel r2 {best:.3}"))
}

fn decode_pixels(s: &Settings) -> CliResult<String> {
    let (stimuli, bold, _) = encoding_inputs(s)?;
    let defaults = PixelParams::default();
    let k: usize = s.get_or("k", defaults.k.unwrap_or(0))?;
    let params = PixelParams {
        c_scale: s.get_or("c-scale", defaults.c_scale)?,
        k: (k > 0).then_some(k),
        n_folds: s.get_or("n-folds", defaults.n_folds)?,
        standardize: !s.flag("no-standardize")?,
    };
    let table = run_decode_pixels(stimuli.view(), bold.view(), &params, &out_dir(s)?)?;
    let rows: Vec<String> = table
        .models
        .iter()
        .zip(table.mean.rows())
        .map(|(m, r)| format!("{m}: {}", r.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" ")))
        .collect();
    Ok(rows.join("\n"))
}

fn searchlight(s: &Settings) -> CliResult<String> {
    let vol = read_nifti(s.existing_path("data")?)?;
    let mask = load_mask(s, &vol)?;
    let labels = read_labels(&s.existing_path("labels")?)?;
    let params = SearchlightParams {
        n_folds: s.get_or("n-folds", 5)?,
        classifier: classifier_of(s)?,
        c: s.get_or("c", 1.0)?,
        clean: clean_config(s)?,
        slice: slice(s)?,
        ..SearchlightParams::new(s.require("radius-mm")?)
    };
    let report = run_searchlight(&vol, &mask, &labels, &params, &out_dir(s)?)?;
    let best = report.scores.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(format!("{} spheres, best accuracy {best:.3}", report.scores.len()))
}

fn ica(s: &Settings) -> CliResult<String> {
    let subjects = s
        .existing_paths("data")?
        .iter()
        .map(read_nifti)
        .collect::<brainkit::Result<Vec<_>>>()?;
    let mask = load_mask(s, &subjects[0])?;
    let params = IcaParams {
        n_components: s.get_or("n-components", 10)?,
        subject_dim: s.get("subject-dim")?,
        seed: s.get_or("seed", 0)?,
        slice: slice(s)?,
    };
    let report = run_ica(&subjects, &mask, &params, &out_dir(s)?)?;
    Ok(format!("{} components after {} iterations", report.maps.nrows(), report.iterations))
}

fn cluster(s: &Settings) -> CliResult<String> {
    let vol = read_nifti(s.existing_path("data")?)?;
    let mask = load_mask(s, &vol)?;
    let method: Method = s
        .raw("method")
        .unwrap_or("ward")
        .parse()
        .map_err(CliError::config)?;
    let params = ClusterParams {
        seed: s.get_or("seed", 0)?,
        smooth_radius: s.get_or("smooth-radius", 0)?,
        pca_components: s.get("pca-components")?,
        slice: slice(s)?,
        ..ClusterParams::new(method, s.require("n-clusters")?)
    };
    let report = run_cluster(&vol, &mask, &params, &out_dir(s)?)?;
    Ok(format!("{} clusters, {} connected regions", report.n_clusters, report.n_regions))
}

fn render(s: &Settings) -> CliResult<String> {
    let map = read_nifti(s.existing_path("map")?)?;
    let frame: usize = s.get_or("frame", 0)?;
    if frame >= map.n_frames() {
        return Err(brainkit::Error::BadSlice(format!("frame {frame} of {}", map.n_frames())).into());
    }
    let threshold: f64 = s.get_or("threshold", 0.0)?;
    let [nx, ny, nz] = map.spatial_shape();
    let values = map
        .frame(frame)
        .iter()
        .map(|&v| if v.abs() < threshold { 0.0 } else { v })
        .collect();
    let map = Volume4D::new([nx, ny, nz, 1], values, *map.affine())?;
    let background = match s.raw("background") {
        Some(_) => Some(read_nifti(s.existing_path("background")?)?.mean_frame()),
        None => None,
    };
    let choice = slice(s)?;
    let index = choice.resolve(map.spatial_shape());
    let out: PathBuf = s.require("out")?;
    render_slice(&map, background.as_ref(), choice.axis, index)?.write(&out)?;
    Ok(format!("wrote {}", out.display()))
}
