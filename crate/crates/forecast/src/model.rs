use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use twin_core::{NormalizationStats, TimeSeriesStore};

use crate::error::{shape_err, ForecastError, Result};
use crate::metrics::{Forecaster, Persistence};
use crate::network::Topology;
use crate::task::{ForecastTask, WindowShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Persistence,
    Dnn,
    Lstm,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Persistence => "persistence",
            ModelKind::Dnn => "dnn",
            ModelKind::Lstm => "lstm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "persistence" => Ok(ModelKind::Persistence),
            "dnn" => Ok(ModelKind::Dnn),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(ForecastError::InvalidConfig(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    #[default]
    RandomInit,
    PersistencePretrained,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::RandomInit => "random-init",
            Provenance::PersistencePretrained => "persistence-pretrained",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 0 is the state before any update.
    pub epoch: usize,
    /// Mean training loss (mean NMSE); at epoch 0 evaluated over the whole
    /// training split, afterwards the running mean over the epoch's batches.
    pub train_loss: f64,
    pub validation_nrmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainSummary {
    pub samples: u64,
    pub nrmse: f64,
    /// `null` in the file when unbounded.
    #[serde(with = "unbounded")]
    pub threshold: f64,
    pub converged: bool,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub pretrain: Option<PretrainSummary>,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub samples_seen: u64,
}

impl TrainingHistory {
    /// Best validation NRMSE seen up to each epoch.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.epochs
            .iter()
            .scan(f64::INFINITY, |best, e| {
                *best = best.min(e.validation_nrmse);
                Some(*best)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub kind: ModelKind,
    pub task: ForecastTask,
    pub topology: Option<Topology>,
    pub weights: Vec<f64>,
    /// Stats the network was trained under; `None` means inputs are used as is.
    pub norm: Option<NormalizationStats>,
    pub provenance: Provenance,
    pub history: TrainingHistory,
}

impl ForecastModel {
    pub fn persistence(task: ForecastTask) -> Self {
        ForecastModel {
            kind: ModelKind::Persistence,
            task,
            topology: None,
            weights: Vec::new(),
            norm: None,
            provenance: Provenance::RandomInit,
            history: TrainingHistory::default(),
        }
    }

    /// A randomly initialized network.
    pub fn network(task: ForecastTask, topology: Topology, seed: u64) -> Result<Self> {
        if !topology.fits(task.shape()) {
            return Err(shape_err(task.shape(), format!("{topology:?}")));
        }
        let kind = match topology {
            Topology::Dnn { .. } => ModelKind::Dnn,
            Topology::Lstm { .. } => ModelKind::Lstm,
        };
        let weights = topology.init(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(ForecastModel {
            kind,
            task,
            topology: Some(topology),
            weights,
            norm: None,
            provenance: Provenance::RandomInit,
            history: TrainingHistory::default(),
        })
    }

    pub fn shape(&self) -> WindowShape {
        self.task.shape()
    }

    /// Label such as `lstm-pretrained`.
    pub fn label(&self) -> String {
        match self.provenance {
            Provenance::PersistencePretrained => format!("{}-pretrained", self.kind),
            Provenance::RandomInit => self.kind.to_string(),
        }
    }

    /// Checks the shape invariants tying kind, task, topology and weights together.
    pub fn validate(&self) -> Result<()> {
        let shape = WindowShape::new(self.task.m, self.task.k, self.task.l())?;
        match (&self.kind, &self.topology) {
            (ModelKind::Persistence, None) if self.weights.is_empty() => {}
            (ModelKind::Persistence, _) => return Err(shape_err("persistence without weights", self.weights.len())),
            (ModelKind::Dnn, Some(t @ Topology::Dnn { .. })) | (ModelKind::Lstm, Some(t @ Topology::Lstm { .. })) => {
                if !t.fits(shape) {
                    return Err(shape_err(shape, format!("{t:?}")));
                }
                if t.param_count() != self.weights.len() {
                    return Err(shape_err(format!("{} weights", t.param_count()), self.weights.len()));
                }
            }
            (kind, t) => return Err(shape_err(kind, format!("{t:?}"))),
        }
        if let Some(norm) = &self.norm {
            let names: Vec<&str> = norm.names().collect();
            if names != self.task.parameters.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(shape_err(self.task.parameters.join(","), names.join(",")));
            }
        }
        Ok(())
    }

    /// Forecast `[k x l]` from one normalized `[m x l]` window.
    pub fn predict(&self, window: ArrayView2<f64>) -> Result<Array2<f64>> {
        let shape = self.shape();
        if window.dim() != (shape.m, shape.l) {
            return Err(shape_err(format!("({}, {})", shape.m, shape.l), format!("{:?}", window.dim())));
        }
        let flat = Array2::from_shape_vec((1, shape.input_width()), window.iter().copied().collect()).expect("sized");
        let out = self.predict_batch(shape, flat.view())?;
        Ok(out.into_shape_with_order((shape.k, shape.l)).expect("contiguous"))
    }

    /// Forecast in raw units from the `m` resampled steps ending at `at`.
    pub fn forecast_at(&self, store: &TimeSeriesStore, at: DateTime<Utc>) -> Result<Array2<f64>> {
        let ids = self.task.resolve(store.catalog())?;
        let raw = store.window(at, self.task.m, &ids, self.task.timescale.step())?;
        match &self.norm {
            Some(norm) => {
                let out = self.predict(norm.normalize_matrix(&raw).view())?;
                Ok(norm.denormalize_matrix(&out))
            }
            None => self.predict(raw.view()),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ForecastModel::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        let header = Header {
            format_version: FORMAT_VERSION,
            kind: self.kind,
            task: self.task.clone(),
            topology: self.topology.clone(),
            norm: self.norm.clone(),
            provenance: self.provenance,
            history: self.history.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| ForecastError::ModelFormat(e.to_string()))?;
        out.write_all(MAGIC)?;
        out.write_all(&(json.len() as u64).to_le_bytes())?;
        out.write_all(&json)?;
        out.write_all(&(self.weights.len() as u64).to_le_bytes())?;
        for w in &self.weights {
            out.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> Result<Self> {
        let bad = |m: &str| ForecastError::ModelFormat(m.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != MAGIC {
            return Err(bad("not a model file"));
        }
        let header_len = read_u64(input)?;
        if header_len > 1 << 30 {
            return Err(bad("header length out of range"));
        }
        let mut json = vec![0u8; header_len as usize];
        input.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&json).map_err(|e| ForecastError::ModelFormat(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(ForecastError::ModelFormat(format!("unsupported format version {}", header.format_version)));
        }
        let count = read_u64(input)? as usize;
        let expected = header.topology.as_ref().map_or(0, Topology::param_count);
        if count != expected {
            return Err(shape_err(format!("{expected} weights"), count));
        }
        let mut bytes = vec![0u8; count * 8];
        input.read_exact(&mut bytes).map_err(|_| bad("truncated weights"))?;
        let weights = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let model = ForecastModel {
            kind: header.kind,
            task: header.task,
            topology: header.topology,
            weights,
            norm: header.norm,
            provenance: header.provenance,
            history: header.history,
        };
        model.validate()?;
        Ok(model)
    }
}

impl Forecaster for ForecastModel {
    fn predict_batch(&self, shape: WindowShape, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if shape != self.shape() {
            return Err(shape_err(self.shape(), shape));
        }
        match &self.topology {
            None => Persistence.predict_batch(shape, inputs),
            Some(t) => t.forward(&self.weights, inputs),
        }
    }
}

const MAGIC: &[u8; 8] = b"TWINMDL1";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: ModelKind,
    task: ForecastTask,
    topology: Option<Topology>,
    norm: Option<NormalizationStats>,
    provenance: Provenance,
    history: TrainingHistory,
}

fn read_u64(input: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    input
        .read_exact(&mut b)
        .map_err(|_| ForecastError::ModelFormat("truncated length field".into()))?;
    Ok(u64::from_le_bytes(b))
}
