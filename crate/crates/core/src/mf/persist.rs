//! Model file: one JSON document carrying a format tag and version, the
//! training config, both id maps, factors and biases.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MfModel, ModelParams, TrainConfig};
use crate::domain::{CustomerId, IdIndex, ItemId};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "pricepref-mf";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: TrainConfig,
    customers: Vec<CustomerId>,
    items: Vec<ItemId>,
    params: ModelParams,
}

pub fn write_model(out: impl Write, model: &MfModel) -> std::io::Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.to_owned(),
        version: MODEL_FORMAT_VERSION,
        config: model.config.clone(),
        customers: model.customers.ids().to_vec(),
        items: model.items.ids().to_vec(),
        params: model.params.clone(),
    };
    let mut out = out;
    serde_json::to_writer(&mut out, &file)?;
    out.write_all(b"\n")
}

pub fn read_model(input: impl Read, path: &Path) -> Result<MfModel> {
    let bad = |message: String| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message,
    };
    let file: ModelFile = serde_json::from_reader(input).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    if file.format != MODEL_FORMAT {
        return Err(bad(format!("not a model file (format tag '{}')", file.format)));
    }
    if file.version != MODEL_FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
            file.version
        )));
    }
    let p = &file.params;
    let (nc, ni) = (file.customers.len(), file.items.len());
    if p.dim == 0
        || p.customer_bias.len() != nc
        || p.item_bias.len() != ni
        || p.customer_factors.len() != nc * p.dim
        || p.item_factors.len() != ni * p.dim
    {
        return Err(bad("parameter shapes do not match the id maps".into()));
    }
    let customers = IdIndex::from_ids(file.customers);
    let items = IdIndex::from_ids(file.items);
    if customers.len() != nc || items.len() != ni {
        return Err(bad("duplicate ids in model file".into()));
    }
    Ok(MfModel {
        params: file.params,
        customers,
        items,
        config: file.config,
    })
}

pub fn save_model(path: &Path, model: &MfModel) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_model(&mut w, model).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_model(path: &Path) -> Result<MfModel> {
    let f = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_model(BufReader::new(f), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mf::init_model;

    fn model() -> MfModel {
        let config = TrainConfig {
            latent_dim: 3,
            ..TrainConfig::default()
        };
        let mut params = init_model(2, 3, &config).unwrap();
        params.item_bias[1] = -0.1234567890123;
        MfModel {
            params,
            customers: IdIndex::from_ids(["u1".into(), "u2".into()]),
            items: IdIndex::from_ids(["a".into(), "b".into(), "c".into()]),
            config,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        let back = read_model(buf.as_slice(), Path::new("m.json")).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        write_model(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn rejects_wrong_version() {
        let mut buf = Vec::new();
        write_model(&mut buf, &model()).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            read_model(text.as_bytes(), Path::new("m.json")),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut m = model();
        m.params.item_bias.pop();
        let mut buf = Vec::new();
        write_model(&mut buf, &m).unwrap();
        assert!(read_model(buf.as_slice(), Path::new("m.json")).is_err());
    }
}
