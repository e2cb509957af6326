use std::collections::BTreeMap;

use candle_core::{DType, Device, Tensor, Var};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

/// Named trainable tensors of one network, with a freeze switch.
///
/// Frozen sets still participate in forward passes; optimizers skip them.
#[derive(Debug)]
pub struct ParamSet {
    name: String,
    vars: BTreeMap<String, Var>,
    frozen: bool,
}

impl ParamSet {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            vars: BTreeMap::new(),
            frozen: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    /// Registers a tensor drawn from U(-bound, bound). Panics on duplicate keys.
    pub fn uniform(&mut self, key: &str, shape: &[usize], bound: f64, rng: &mut impl Rng) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        let data: Vec<f32> = if bound > 0.0 {
            let dist = Uniform::new_inclusive(-bound as f32, bound as f32).unwrap();
            (0..n).map(|_| dist.sample(rng)).collect()
        } else {
            vec![0.0; n]
        };
        self.insert(key, Tensor::from_vec(data, shape, &Device::Cpu)?)
    }

    pub fn insert(&mut self, key: &str, value: Tensor) -> Result<Tensor> {
        assert!(!self.vars.contains_key(key), "duplicate parameter `{key}` in {}", self.name);
        let var = Var::from_tensor(&value.to_dtype(DType::F32)?)?;
        let t = var.as_tensor().clone();
        self.vars.insert(key.to_string(), var);
        Ok(t)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }

    pub fn get(&self, key: &str) -> Option<&Var> {
        self.vars.get(key)
    }

    pub fn num_params(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    /// Flattened copy of every parameter, for exact comparisons.
    pub fn snapshot(&self) -> Result<BTreeMap<String, Vec<f32>>> {
        self.vars
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.as_tensor().flatten_all()?.to_vec1::<f32>()?)))
            .collect()
    }

    /// Overwrites values in place (layers keep pointing at the same storage).
    pub fn load(&self, values: &BTreeMap<String, Tensor>) -> Result<()> {
        for (k, v) in &self.vars {
            let src = values.get(k).ok_or_else(|| Error::CorruptCheckpoint {
                path: Default::default(),
                message: format!("missing tensor `{}.{k}`", self.name),
            })?;
            if src.dims() != v.dims() {
                return Err(Error::Shape {
                    expected: format!("{:?} for {}.{k}", v.dims(), self.name),
                    actual: format!("{:?}", src.dims()),
                });
            }
            v.set(&src.to_dtype(DType::F32)?)?;
        }
        Ok(())
    }
}
