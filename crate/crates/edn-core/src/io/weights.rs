//! Binary weights container: magic `EDNW`, little-endian u32 header fields,
//! named f32 entries. Loading validates every entry against the graph built
//! from the config and rejects unknown, missing or mis-shaped entries.

use crate::error::{EdnError, Result};
use crate::graph::{build_model, EdnModel, NetworkConfig};
use crate::tensor::Tensor4;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"EDNW";
pub const WEIGHTS_VERSION: u32 = 1;

struct Writer {
    buf: Vec<u8>,
    count: u32,
}

impl Writer {
    fn entry(&mut self, name: &str, dims: &[u32], payload: &[f32]) {
        debug_assert_eq!(
            dims.iter().map(|&d| d as usize).product::<usize>(),
            payload.len()
        );
        self.buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(name.as_bytes());
        self.buf.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for &d in dims {
            self.buf.extend_from_slice(&d.to_le_bytes());
        }
        for &v in payload {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.count += 1;
    }
}

/// Entry names for one layer, in serialization order.
fn entry_names(model: &EdnModel, path: &str) -> Result<Vec<String>> {
    let p = model.param(path)?;
    let mut names = vec![format!("{path}.weight")];
    if p.bias.is_some() {
        names.push(format!("{path}.bias"));
    }
    if p.bn.is_some() {
        for part in ["gamma", "beta", "mean", "var"] {
            names.push(format!("{path}.bn.{part}"));
        }
    }
    Ok(names)
}

pub fn save_weights(model: &EdnModel, path: &Path) -> Result<()> {
    let mut w = Writer {
        buf: Vec::new(),
        count: 0,
    };
    for layer in model.layer_paths().map(String::from).collect::<Vec<_>>() {
        let p = model.param(&layer)?;
        let (n, c, h, wd) = p.weight.dims();
        w.entry(
            &format!("{layer}.weight"),
            &[n as u32, c as u32, h as u32, wd as u32],
            p.weight.data(),
        );
        if let Some(b) = &p.bias {
            w.entry(&format!("{layer}.bias"), &[b.len() as u32], b);
        }
        if let Some(bn) = &p.bn {
            w.entry(&format!("{layer}.bn.gamma"), &[bn.gamma.len() as u32], &bn.gamma);
            w.entry(&format!("{layer}.bn.beta"), &[bn.beta.len() as u32], &bn.beta);
            w.entry(&format!("{layer}.bn.mean"), &[bn.mean.len() as u32], &bn.mean);
            w.entry(&format!("{layer}.bn.var"), &[bn.var.len() as u32], &bn.var);
        }
    }
    let mut out = Vec::with_capacity(w.buf.len() + 12);
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&w.count.to_le_bytes());
    out.extend_from_slice(&w.buf);
    fs::write(path, out)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> Result<u32> {
        let end = self.pos + 4;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            EdnError::format(self.bytes.len() as u64, "truncated weights file")
        })?;
        self.pos = end;
        Ok(u32::from_le_bytes(slice.try_into().expect("4 bytes")))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self.bytes.get(self.pos..end).ok_or_else(|| {
            EdnError::format(self.bytes.len() as u64, "truncated weights file")
        })?;
        self.pos = end;
        Ok(slice)
    }
}

struct RawEntry {
    dims: Vec<u32>,
    payload: Vec<f32>,
}

fn read_entries(bytes: &[u8]) -> Result<BTreeMap<String, RawEntry>> {
    if bytes.get(..4) != Some(&WEIGHTS_MAGIC[..]) {
        return Err(EdnError::format(0, "bad magic: expected `EDNW`"));
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32()?;
    if version != WEIGHTS_VERSION {
        return Err(EdnError::format(
            4,
            format!("unsupported format version {version}"),
        ));
    }
    let count = r.u32()?;
    let mut entries = BTreeMap::new();
    for _ in 0..count {
        let name_at = r.pos;
        let name_len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| EdnError::format(name_at as u64, "entry name is not UTF-8"))?
            .to_string();
        let ndim = r.u32()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(r.u32()?);
        }
        let len: usize = dims.iter().map(|&d| d as usize).product();
        let raw = r.take(len * 4)?;
        let payload = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        if entries.insert(name.clone(), RawEntry { dims, payload }).is_some() {
            return Err(EdnError::Validation(format!("duplicate entry `{name}`")));
        }
    }
    if r.pos != bytes.len() {
        return Err(EdnError::format(
            r.pos as u64,
            format!("{} trailing bytes after last entry", bytes.len() - r.pos),
        ));
    }
    Ok(entries)
}

fn take_vec(
    entries: &mut BTreeMap<String, RawEntry>,
    name: &str,
    want_len: usize,
) -> Result<Vec<f32>> {
    let e = entries
        .remove(name)
        .ok_or_else(|| EdnError::Validation(format!("missing entry `{name}`")))?;
    if e.dims.len() != 1 || e.dims[0] as usize != want_len {
        return Err(EdnError::Validation(format!(
            "entry `{name}`: expected dims [{want_len}], got {:?}",
            e.dims
        )));
    }
    Ok(e.payload)
}

/// Build the graph for `config` and replace every parameter with the file's
/// payload. Every expected entry must be present with matching dims; extra
/// entries are rejected by name.
pub fn load_weights(config: &NetworkConfig, path: &Path) -> Result<EdnModel> {
    let bytes = fs::read(path)?;
    let mut entries = read_entries(&bytes)?;
    let mut model = build_model(config)?;
    let layers: Vec<String> = model.layer_paths().map(String::from).collect();
    for layer in &layers {
        for name in entry_names(&model, layer)? {
            if !entries.contains_key(&name) {
                return Err(EdnError::Validation(format!(
                    "missing parameter entry `{name}` for layer `{layer}`"
                )));
            }
        }
        let p = model.param_mut(layer)?;
        let (n, c, h, w) = p.weight.dims();
        let wname = format!("{layer}.weight");
        let e = entries.remove(&wname).expect("checked above");
        let want = [n as u32, c as u32, h as u32, w as u32];
        if e.dims != want {
            return Err(EdnError::Validation(format!(
                "entry `{wname}`: expected dims {want:?}, got {:?}",
                e.dims
            )));
        }
        p.weight = Tensor4::new(n, c, h, w, e.payload)?;
        if let Some(b) = &mut p.bias {
            *b = take_vec(&mut entries, &format!("{layer}.bias"), b.len())?;
        }
        if let Some(bn) = &mut p.bn {
            let c = bn.gamma.len();
            bn.gamma = take_vec(&mut entries, &format!("{layer}.bn.gamma"), c)?;
            bn.beta = take_vec(&mut entries, &format!("{layer}.bn.beta"), c)?;
            bn.mean = take_vec(&mut entries, &format!("{layer}.bn.mean"), c)?;
            bn.var = take_vec(&mut entries, &format!("{layer}.bn.var"), c)?;
            if bn.var.iter().any(|&v| v <= 0.0) {
                return Err(EdnError::Validation(format!(
                    "entry `{layer}.bn.var`: variances must be > 0"
                )));
            }
        }
    }
    if let Some(name) = entries.keys().next() {
        return Err(EdnError::Validation(format!(
            "unknown entry `{name}` does not match any layer"
        )));
    }
    Ok(model)
}
