//! Files: trajectory and waypoint CSV, dataset directories, model archives
//! and report exports.
//!
//! Every writer reads its output back and checks it against what was
//! written before returning.

mod tracks;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_dataset, Dataset};
use crate::error::{Error, Result};
use crate::eval::{EvalReport, KSweepReport};
use crate::features::ReferencePath;
use crate::priors::StyleModel;

pub use tracks::{
    load_tracks, load_waypoints, read_tracks, read_waypoints, save_trajectories, save_waypoints, write_trajectories,
    write_trajectories_from, write_waypoints, Track, TrackPositions,
};

use tracks::{create, open};

/// Version written into model archives and dataset manifests.
pub const FORMAT_VERSION: u32 = 1;

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const MANIFEST_FILE: &str = "dataset.json";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(open(path)?))?)
}

/// Writes `value` as JSON and checks that it parses back to an equal value.
fn write_json_checked<T: Serialize + DeserializeOwned + PartialEq>(path: &Path, value: &T) -> Result<()> {
    write_json(path, value)?;
    let back: T = read_json(path)?;
    if &back != value {
        return Err(Error::invalid(format!("{} did not read back identically", path.display())));
    }
    Ok(())
}

/// Serializes non-finite reals as `null` and reads `null` back as NaN.
pub(crate) mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&x.is_finite().then_some(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?
                .into_iter()
                .map(|x| x.unwrap_or(f64::NAN))
                .collect())
        }
    }
}

/// Everything a dataset directory records besides the trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub dt: f64,
    /// Track ids in dataset order.
    pub track_ids: Vec<String>,
    pub labels: Option<Vec<f64>>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Free-form description of how the data were produced.
    #[serde(default)]
    pub generator: Option<serde_json::Value>,
}

fn track_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i:05}")).collect()
}

/// Writes `trajectories.csv` and `dataset.json` into `dir`, creating it.
pub fn save_dataset(dir: &Path, data: &Dataset, generator: Option<serde_json::Value>) -> Result<()> {
    let demos = data.demonstrations();
    let dt = demos.first().map_or(0.0, |t| t.dt());
    if demos.iter().any(|t| t.dt() != dt) {
        return Err(Error::invalid("all demonstrations of a saved dataset must share one dt"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let ids = track_ids(demos.len());
    let mut w = BufWriter::new(create(&dir.join(TRAJECTORIES_FILE))?);
    write_trajectories(&mut w, &ids, demos)?;
    w.flush()?;
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        dt,
        track_ids: ids,
        labels: data.labels().map(<[f64]>::to_vec),
        train: data.train_indices().to_vec(),
        test: data.test_indices().to_vec(),
        generator,
    };
    write_json_checked(&dir.join(MANIFEST_FILE), &manifest)?;
    if &load_dataset(dir, None)? != data {
        return Err(Error::invalid(format!("dataset in {} did not read back identically", dir.display())));
    }
    Ok(())
}

/// Reads a directory written by [`save_dataset`]; `path` is needed only
/// for Cartesian tracks.
pub fn load_dataset(dir: &Path, path: Option<&ReferencePath>) -> Result<Dataset> {
    let manifest: DatasetManifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let mut tracks = load_tracks(&dir.join(TRAJECTORIES_FILE))?;
    if tracks.len() != manifest.track_ids.len() {
        return Err(Error::dims("dataset tracks", manifest.track_ids.len(), tracks.len()));
    }
    let mut demos = Vec::with_capacity(tracks.len());
    for id in &manifest.track_ids {
        let pos = tracks
            .iter()
            .position(|t| &t.id == id)
            .ok_or_else(|| Error::invalid(format!("track {id} listed in the manifest is missing")))?;
        let mut t = tracks.swap_remove(pos);
        if (t.dt - manifest.dt).abs() > 1e-3 {
            return Err(Error::invalid(format!(
                "track {id}: sampling interval {} s differs from the manifest's {} s",
                t.dt, manifest.dt
            )));
        }
        t.dt = manifest.dt;
        demos.push(t.to_trajectory(path)?);
    }
    Dataset::new(demos, manifest.labels, manifest.train, manifest.test)
}

/// A dataset from a bare trajectory file, split by seed.
pub fn dataset_from_tracks(
    tracks: &[Track],
    path: Option<&ReferencePath>,
    train_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    let demos = tracks.iter().map(|t| t.to_trajectory(path)).collect::<Result<Vec<_>>>()?;
    split_dataset(demos, train_fraction, seed)
}

/// A trained model with the seed and configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub model: StyleModel,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl ModelArchive {
    pub fn new(model: StyleModel, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(ModelArchive {
            format_version: FORMAT_VERSION,
            model,
            seed,
            config: serde_json::to_value(config)?,
        })
    }
}

pub fn save_model(path: &Path, archive: &ModelArchive) -> Result<()> {
    archive.model.validate()?;
    write_json(path, archive)?;
    if &load_model(path)? != archive {
        return Err(Error::invalid(format!("{} did not read back identically", path.display())));
    }
    Ok(())
}

/// Reads an archive, rejecting other format versions before decoding the
/// payload.
pub fn load_model(path: &Path) -> Result<ModelArchive> {
    let raw: serde_json::Value = read_json(path)?;
    let found = raw
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Schema {
            row: 0,
            message: format!("{}: missing format_version", path.display()),
        })?;
    if found != FORMAT_VERSION as u64 {
        return Err(Error::VersionMismatch {
            found: found as u32,
            expected: FORMAT_VERSION,
        });
    }
    let archive: ModelArchive = serde_json::from_value(raw)?;
    archive.model.validate()?;
    Ok(archive)
}

pub fn save_eval_report(path: &Path, report: &EvalReport) -> Result<()> {
    write_json_checked(path, report)
}

pub fn save_sweep_report(path: &Path, report: &KSweepReport) -> Result<()> {
    write_json_checked(path, report)
}

fn real(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// One row per evaluated test trajectory: `method, label, test_index, med,
/// error`. Failed trajectories have an empty `med` and the error message.
pub fn write_eval_csv<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "label", "test_index", "med", "error"])?;
    for m in &report.per_method {
        let name = serde_json::to_value(m.method)?["method"].as_str().unwrap_or_default().to_string();
        for (i, v) in m.indices.iter().zip(&m.per_trajectory) {
            w.write_record([name.as_str(), &m.label, &i.to_string(), &real(*v), ""])?;
        }
        for f in &m.failures {
            w.write_record([name.as_str(), &m.label, &f.index.to_string(), "", &f.message])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per `(k, test trajectory)`: `k, test_index, med`.
pub fn write_sweep_csv<W: Write>(writer: W, report: &KSweepReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "test_index", "med"])?;
    for ((k, idx), vals) in report.ks.iter().zip(&report.indices).zip(&report.per_trajectory) {
        for (i, v) in idx.iter().zip(vals) {
            w.write_record([k.to_string(), i.to_string(), real(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per `k`: `k, med_mean, med_std, failures`.
pub fn write_sweep_summary_csv<W: Write>(writer: W, report: &KSweepReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "med_mean", "med_std", "failures"])?;
    for i in 0..report.ks.len() {
        w.write_record([
            report.ks[i].to_string(),
            real(report.med_mean[i]),
            real(report.med_std[i]),
            report.failures[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `write` on a buffered file at `path`.
pub fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DynamicsModel;
    use crate::features::FeatureSet;
    use crate::irl::IrlConfig;
    use crate::priors::{fit_pirl_gmm, fit_pirl_knn, gmm_assign, PriorOptions};
    use crate::synth::{generate_dataset, SynthConfig, ThetaSamplerConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(seed: u64) -> Dataset {
        generate_dataset(
            &ThetaSamplerConfig::two_kernel(seed),
            &SynthConfig {
                n_trajectories: 40,
                ..SynthConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let data = small(3);
        save_dataset(dir.path(), &data, Some(serde_json::json!({"seed": 3}))).unwrap();
        let back = load_dataset(dir.path(), None).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn dataset_version_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &small(1), None).unwrap();
        let p = dir.path().join(MANIFEST_FILE);
        let mut m: DatasetManifest = read_json(&p).unwrap();
        m.format_version += 1;
        write_json(&p, &m).unwrap();
        assert!(matches!(load_dataset(dir.path(), None), Err(Error::VersionMismatch { .. })));
    }

    fn irl() -> IrlConfig {
        IrlConfig { beta: 100.0, ..IrlConfig::default() }
    }

    #[test]
    fn gmm_archive_assigns_identically() {
        let data = small(5);
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let fs = FeatureSet::LqrQuadratic;
        let m = fit_pirl_gmm(&data.train_demos(), &fs, &model, 2, &irl(), 0, &PriorOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let archive = ModelArchive::new(m, 0, &irl()).unwrap();
        save_model(&path, &archive).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, archive);
        let (crate::priors::StyleVariant::Gmm(a), crate::priors::StyleVariant::Gmm(b)) =
            (&archive.model.variant, &back.model.variant)
        else {
            panic!("expected mixture models")
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let q = crate::types::FeatureVector::new(vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .unwrap();
            assert_eq!(gmm_assign(&a.gmm, &q), gmm_assign(&b.gmm, &q));
        }
    }

    #[test]
    fn knn_archive_preserves_entries() {
        let data = small(6);
        let model = DynamicsModel::point_mass(0.1).unwrap();
        let m = fit_pirl_knn(&data.train_demos(), &FeatureSet::LqrQuadratic, &model, &irl(), &PriorOptions::default())
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("knn.json");
        save_model(&path, &ModelArchive::new(m.clone(), 1, &irl()).unwrap()).unwrap();
        let back = load_model(&path).unwrap().model;
        let thetas = |m: &StyleModel| m.thetas().iter().map(|t| t.as_slice().to_vec()).collect::<Vec<_>>();
        assert_eq!(thetas(&back), thetas(&m));
    }

    #[test]
    fn bumped_archive_version_is_rejected() {
        let m = StyleModel::single(crate::types::CostWeights::from_ratio(2.0).unwrap(), FeatureSet::LqrQuadratic);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut archive = ModelArchive::new(m, 0, &()).unwrap();
        save_model(&path, &archive).unwrap();
        archive.format_version = FORMAT_VERSION + 1;
        write_json(&path, &archive).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::VersionMismatch { found, .. }) if found == FORMAT_VERSION + 1
        ));
        fs::write(&path, "{\"format_version\": 1, \"model\": 3}").unwrap();
        assert!(matches!(load_model(&path), Err(Error::Json(_))));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let e = load_model(Path::new("/nonexistent/model.json")).unwrap_err();
        assert!(matches!(e, Error::Io(_)));
        assert!(e.to_string().contains("/nonexistent/model.json"));
    }
}
