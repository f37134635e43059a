use std::path::{Path, PathBuf};

use brainkit::masking::unmask;
use brainkit::nifti::write_nifti;
use brainkit::synth::{make_decoding, make_encoding, make_rest, N_PIXELS};
use brainkit::{Affine4, BrainMask};

use super::ensure_dir;
use crate::error::CliResult;
use crate::tables::{write_labels, write_matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    Decoding {
        shape: [usize; 3],
        n_per_class: usize,
        snr: f64,
    },
    Encoding {
        n_trials: usize,
        n_voxels: usize,
        noise: f64,
    },
    Rest {
        n_subjects: usize,
        n_frames: usize,
        shape: [usize; 3],
        n_networks: usize,
    },
}

/// Writes a synthetic dataset under `out` and returns the files written.
///
/// * decoding: `bold.nii`, `mask.nii`, `labels.csv`, `truth.nii`
/// * encoding: `bold.nii` (voxels along x), `mask.nii`, `stimuli.csv`,
///   `fields.csv`
/// * rest: `sub-XX.nii`, `mask.nii`, `maps.nii`
pub fn run_synth(kind: SynthKind, seed: u64, out: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut written = Vec::new();
    let mut put = |name: &str| {
        let p = out.join(name);
        written.push(p.clone());
        p
    };
    match kind {
        SynthKind::Decoding { shape, n_per_class, snr } => {
            let set = make_decoding(shape, n_per_class, snr, seed)?;
            write_nifti(&set.volume, put("bold.nii"))?;
            write_nifti(&set.mask.to_volume(), put("mask.nii"))?;
            write_labels(&put("labels.csv"), &set.labels)?;
            write_nifti(&set.truth_support.to_volume(), put("truth.nii"))?;
        }
        SynthKind::Encoding {
            n_trials,
            n_voxels,
            noise,
        } => {
            let set = make_encoding(n_trials, n_voxels, noise, seed)?;
            let mask = BrainMask::full([n_voxels, 1, 1], Affine4::identity())?;
            write_nifti(&unmask(set.bold.view(), &mask)?, put("bold.nii"))?;
            write_nifti(&mask.to_volume(), put("mask.nii"))?;
            let header: Vec<String> = (0..N_PIXELS).map(|p| format!("p{p:03}")).collect();
            write_matrix(&put("stimuli.csv"), Some(&header), set.stimuli.view())?;
            write_matrix(&put("fields.csv"), Some(&header), set.true_fields.view())?;
        }
        SynthKind::Rest {
            n_subjects,
            n_frames,
            shape,
            n_networks,
        } => {
            let set = make_rest(n_subjects, n_frames, shape, n_networks, seed)?;
            for (s, data) in set.subjects.iter().enumerate() {
                write_nifti(&unmask(data.view(), &set.mask)?, put(&format!("sub-{s:02}.nii")))?;
            }
            write_nifti(&set.mask.to_volume(), put("mask.nii"))?;
            write_nifti(&unmask(set.true_maps.view(), &set.mask)?, put("maps.nii"))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use brainkit::nifti::read_nifti;

    #[test]
    fn encoding_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let kind = SynthKind::Encoding {
            n_trials: 60,
            n_voxels: 12,
            noise: 0.0,
        };
        let files = run_synth(kind, 3, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let bold = read_nifti(dir.path().join("bold.nii")).unwrap();
        assert_eq!(bold.shape(), [12, 1, 1, 60]);
        let stimuli = crate::tables::read_matrix(&dir.path().join("stimuli.csv"), true).unwrap();
        assert_eq!(stimuli.dim(), (60, N_PIXELS));
    }

    #[test]
    fn rest_writes_one_file_per_subject() {
        let dir = tempfile::tempdir().unwrap();
        let kind = SynthKind::Rest {
            n_subjects: 2,
            n_frames: 20,
            shape: [6, 6, 6],
            n_networks: 2,
        };
        let files = run_synth(kind, 1, dir.path()).unwrap();
        let names: Vec<_> = files.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["sub-00.nii", "sub-01.nii", "mask.nii", "maps.nii"]);
    }
}
