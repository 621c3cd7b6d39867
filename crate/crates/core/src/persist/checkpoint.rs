//! Binary checkpoints. Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "LSKCKPT\0"
//! version    u32
//! length     u64      payload byte count
//! checksum   u64      FNV-1a 64 of the payload
//! payload:
//!   str      config snapshot (RunConfig text)
//!   u64      seed
//!   u64      env_steps
//!   u64      iteration
//!   u32      block count
//!   blocks:  str name, str meta, u64 n, n × f64
//! str = u32 byte length + UTF-8 bytes
//! ```

use std::path::Path;

use super::RunConfig;
use crate::compose::{ComposerMode, DdpgComposer};
use crate::error::{CheckpointError, Error, Result};
use crate::nn::{Activation, Mlp, MlpSpec, ParamVector};
use crate::trainer::{EmbeddingModel, ValueNormalizer};

pub const MAGIC: &[u8; 8] = b"LSKCKPT\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8 + 8;

/// Everything needed to rebuild a trained model.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub model: EmbeddingModel,
    pub composer: Option<DdpgComposer>,
    pub seed: u64,
    pub env_steps: u64,
    pub iteration: u64,
}

/// One named block of parameters as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub meta: String,
    pub values: Vec<f64>,
}

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn mlp_meta(spec: &MlpSpec) -> String {
    let hidden = spec
        .hidden_dims
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "mlp in={} hidden={} out={} act={}",
        spec.input_dim,
        hidden,
        spec.output_dim,
        spec.activation.as_str()
    )
}

fn meta_field<'a>(meta: &'a str, key: &str) -> Result<&'a str> {
    meta.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| malformed(format!("block meta `{meta}` lacks `{key}`")))
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Checkpoint(CheckpointError::Malformed(msg.into()))
}

fn meta_usize(meta: &str, key: &str) -> Result<usize> {
    meta_field(meta, key)?
        .parse()
        .map_err(|_| malformed(format!("bad `{key}` in `{meta}`")))
}

fn mlp_from_block(block: &Block) -> Result<Mlp> {
    let m = &block.meta;
    let hidden_s = meta_field(m, "hidden")?;
    let hidden = if hidden_s.is_empty() {
        Vec::new()
    } else {
        hidden_s
            .split(',')
            .map(|h| {
                h.parse()
                    .map_err(|_| malformed(format!("bad hidden list in `{m}`")))
            })
            .collect::<Result<Vec<usize>>>()?
    };
    let act = Activation::parse(meta_field(m, "act")?)
        .ok_or_else(|| malformed(format!("bad activation in `{m}`")))?;
    let spec = MlpSpec::new(meta_usize(m, "in")?, hidden, meta_usize(m, "out")?, act)?;
    let shapes = spec.layer_shapes();
    let params = ParamVector::new(block.values.clone(), shapes)
        .map_err(|e| malformed(format!("block `{}`: {e}", block.name)))?;
    Mlp::new(spec, params)
}

fn mlp_block(name: &str, mlp: &Mlp) -> Block {
    Block {
        name: name.into(),
        meta: mlp_meta(mlp.spec()),
        values: mlp.params().values().to_vec(),
    }
}

impl Checkpoint {
    pub fn blocks(&self) -> Vec<Block> {
        let m = &self.model;
        let mut out = vec![
            mlp_block("policy", &m.policy),
            Block {
                name: "policy_log_std".into(),
                meta: "vector".into(),
                values: m.policy_log_std.clone(),
            },
            mlp_block("embedding", &m.embedding),
            mlp_block("inference", &m.inference),
            mlp_block("value", &m.value),
            Block {
                name: "value_norm".into(),
                meta: "vector mean,var,count".into(),
                values: vec![m.value_norm.mean, m.value_norm.var, m.value_norm.count],
            },
        ];
        if let Some(c) = &self.composer {
            out.push(mlp_block("composer.actor", &c.actor));
            out.push(mlp_block("composer.critic", &c.critic));
            out.push(Block {
                name: "composer.box".into(),
                meta: "vector lo,hi".into(),
                values: [c.lo.as_slice(), &c.hi].concat(),
            });
            out.push(Block {
                name: "composer.catalog".into(),
                meta: format!(
                    "catalog mode={} k={} rows={}",
                    c.mode.as_str(),
                    c.discrete_k,
                    c.catalog.len()
                ),
                values: c.catalog.concat(),
            });
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut p = Vec::new();
        put_str(&mut p, &self.config.to_text());
        p.extend_from_slice(&self.seed.to_le_bytes());
        p.extend_from_slice(&self.env_steps.to_le_bytes());
        p.extend_from_slice(&self.iteration.to_le_bytes());
        let blocks = self.blocks();
        p.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
        for b in &blocks {
            put_str(&mut p, &b.name);
            put_str(&mut p, &b.meta);
            p.extend_from_slice(&(b.values.len() as u64).to_le_bytes());
            for v in &b.values {
                p.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut out = Vec::with_capacity(HEADER_LEN + p.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(p.len() as u64).to_le_bytes());
        out.extend_from_slice(&fnv1a(&p).to_le_bytes());
        out.extend_from_slice(&p);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic.into());
        }
        if bytes.len() < HEADER_LEN {
            return Err(CheckpointError::Checksum.into());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: FORMAT_VERSION,
            }
            .into());
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        let sum = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let payload = &bytes[HEADER_LEN..];
        if payload.len() as u64 != len || fnv1a(payload) != sum {
            return Err(CheckpointError::Checksum.into());
        }

        let mut r = Reader {
            buf: payload,
            pos: 0,
        };
        let config = RunConfig::parse_text(&r.string()?)?;
        let seed = r.u64()?;
        let env_steps = r.u64()?;
        let iteration = r.u64()?;
        let count = r.u32()? as usize;
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let meta = r.string()?;
            let n = r.u64()? as usize;
            let mut values = Vec::with_capacity(n.min(payload.len() / 8));
            for _ in 0..n {
                values.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
            }
            blocks.push(Block { name, meta, values });
        }
        if r.pos != payload.len() {
            return Err(malformed("trailing bytes after the last block"));
        }
        Self::from_blocks(config, seed, env_steps, iteration, &blocks)
    }

    fn from_blocks(
        config: RunConfig,
        seed: u64,
        env_steps: u64,
        iteration: u64,
        blocks: &[Block],
    ) -> Result<Self> {
        let find = |name: &str| {
            blocks
                .iter()
                .find(|b| b.name == name)
                .ok_or_else(|| Error::Checkpoint(CheckpointError::MissingBlock(name.into())))
        };
        let policy = mlp_from_block(find("policy")?)?;
        let policy_log_std = find("policy_log_std")?.values.clone();
        let embedding = mlp_from_block(find("embedding")?)?;
        let inference = mlp_from_block(find("inference")?)?;
        let value = mlp_from_block(find("value")?)?;
        let vn = &find("value_norm")?.values;
        if vn.len() != 3 {
            return Err(malformed("value_norm must hold three numbers"));
        }

        let num_skills = embedding.spec().input_dim;
        let latent_dim = embedding.spec().output_dim / 2;
        let action_dim = policy.spec().output_dim;
        let obs_dim = policy
            .spec()
            .input_dim
            .checked_sub(latent_dim)
            .ok_or_else(|| malformed("policy input narrower than the latent"))?;
        let window = config.train.window;
        if policy_log_std.len() != action_dim {
            return Err(Error::dims(
                "checkpoint policy_log_std",
                action_dim,
                policy_log_std.len(),
            ));
        }
        if inference.spec().input_dim != obs_dim * window {
            return Err(Error::dims(
                "checkpoint inference input",
                obs_dim * window,
                inference.spec().input_dim,
            ));
        }
        if value.spec().input_dim != obs_dim + num_skills {
            return Err(Error::dims(
                "checkpoint value input",
                obs_dim + num_skills,
                value.spec().input_dim,
            ));
        }
        let model = EmbeddingModel {
            policy,
            policy_log_std,
            embedding,
            inference,
            value,
            value_norm: ValueNormalizer {
                mean: vn[0],
                var: vn[1],
                count: vn[2],
            },
            bounds: config.train.log_std_bounds()?,
            num_skills,
            obs_dim,
            action_dim,
            latent_dim,
            window,
        };

        let composer = match blocks.iter().find(|b| b.name == "composer.actor") {
            None => None,
            Some(actor) => {
                let actor = mlp_from_block(actor)?;
                let critic = mlp_from_block(find("composer.critic")?)?;
                let bx = &find("composer.box")?.values;
                let cat = find("composer.catalog")?;
                let d = actor.spec().output_dim;
                if bx.len() != 2 * d {
                    return Err(Error::dims("checkpoint composer box", 2 * d, bx.len()));
                }
                let rows = meta_usize(&cat.meta, "rows")?;
                if cat.values.len() != rows * d {
                    return Err(Error::dims(
                        "checkpoint composer catalog",
                        rows * d,
                        cat.values.len(),
                    ));
                }
                let mode = ComposerMode::parse(meta_field(&cat.meta, "mode")?)
                    .ok_or_else(|| malformed(format!("bad composer mode in `{}`", cat.meta)))?;
                Some(DdpgComposer {
                    mode,
                    actor,
                    critic,
                    lo: bx[..d].to_vec(),
                    hi: bx[d..].to_vec(),
                    catalog: cat.values.chunks(d.max(1)).map(<[f64]>::to_vec).collect(),
                    discrete_k: meta_usize(&cat.meta, "k")?,
                })
            }
        };
        Ok(Self {
            config,
            model,
            composer,
            seed,
            env_steps,
            iteration,
        })
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| malformed("payload ends inside a field"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("non-UTF-8 string"))
    }
}

/// Writes to a temporary sibling and renames it into place.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, ckpt.to_bytes())?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
