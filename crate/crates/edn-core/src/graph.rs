//! The EDN computational graph: a seeded 5-stage toy backbone with the
//! 1..1/16 stride schedule, the extremely-downsampled block (EDB) on top of
//! stage 5, scale-correlated pyramid convolution (SCPC) fusion in a top-down
//! decoder, and per-stage prediction heads.
//!
//! Layer geometry lives in a single plan shared by the builder, the weights
//! loader and the MAC accounting; `forward` executes layers by path.

use crate::error::{EdnError, Result};
use crate::layers::{
    batchnorm_inference, conv2d, count_macs, global_avg_pool, init_params, maxpool2, relu,
    sigmoid, upsample_bilinear, ConvSpec, LayerParams, BN_EPS,
};
use crate::tensor::{ChannelVector, Tensor4};
use std::collections::BTreeMap;

/// Number of SCPC branches; the split/dilation chain is defined for exactly
/// four.
pub const SCPC_BRANCHES: usize = 4;

/// Atrous-rate tuples for the three flavour groups: `low` for decoder stages
/// 1-2 (highest resolution), `high` for stages 3-5, `extreme` for the two
/// fusion sites inside the EDB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateGroups {
    pub low: [usize; 4],
    pub high: [usize; 4],
    pub extreme: [usize; 4],
}

impl Default for RateGroups {
    fn default() -> Self {
        RateGroups {
            low: [1, 2, 4, 8],
            high: [1, 2, 3, 4],
            extreme: [1, 1, 1, 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateGroupId {
    Low,
    High,
    Extreme,
}

/// Declarative description of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub backbone_widths: [usize; 5],
    pub decoder_width: usize,
    pub edb_width: usize,
    pub scpc_branches: usize,
    pub rates: RateGroups,
    /// Swap every SCPC 3x3 for a depthwise-separable pair.
    pub lite: bool,
    pub input_side: usize,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            backbone_widths: [16, 32, 64, 128, 128],
            decoder_width: 32,
            edb_width: 256,
            scpc_branches: SCPC_BRANCHES,
            rates: RateGroups::default(),
            lite: false,
            input_side: 384,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scpc_branches != SCPC_BRANCHES {
            return Err(EdnError::config(
                "scpc_branches",
                format!("must be {SCPC_BRANCHES}, got {}", self.scpc_branches),
            ));
        }
        for (i, &w) in self.backbone_widths.iter().enumerate() {
            if w == 0 {
                return Err(EdnError::config(
                    "backbone_widths",
                    format!("stage {} width must be >= 1", i + 1),
                ));
            }
        }
        if self.decoder_width == 0 || !self.decoder_width.is_multiple_of(self.scpc_branches) {
            return Err(EdnError::config(
                "decoder_width",
                format!(
                    "{} must be positive and divisible by {}",
                    self.decoder_width, self.scpc_branches
                ),
            ));
        }
        if self.edb_width == 0 || !self.edb_width.is_multiple_of(self.scpc_branches) {
            return Err(EdnError::config(
                "edb_width",
                format!(
                    "{} must be positive and divisible by {}",
                    self.edb_width, self.scpc_branches
                ),
            ));
        }
        let all_rates = self
            .rates
            .low
            .iter()
            .chain(self.rates.high.iter())
            .chain(self.rates.extreme.iter());
        for &r in all_rates {
            if r == 0 {
                return Err(EdnError::config("rates", "atrous rates must be >= 1"));
            }
        }
        if self.input_side == 0 || !self.input_side.is_multiple_of(64) {
            return Err(EdnError::config(
                "input_side",
                format!("{} must be a positive multiple of 64", self.input_side),
            ));
        }
        Ok(())
    }

    pub fn rates_for(&self, id: RateGroupId) -> [usize; 4] {
        match id {
            RateGroupId::Low => self.rates.low,
            RateGroupId::High => self.rates.high,
            RateGroupId::Extreme => self.rates.extreme,
        }
    }

    /// Rate group for decoder stage `i` (1-based): stages 1-2 low, 3-5 high.
    pub fn stage_group(i: usize) -> RateGroupId {
        if i <= 2 {
            RateGroupId::Low
        } else {
            RateGroupId::High
        }
    }
}

/// One convolution site in the assembled graph.
#[derive(Debug, Clone)]
pub struct ConvSite {
    pub path: String,
    pub spec: ConvSpec,
    pub has_bias: bool,
    pub has_bn: bool,
    pub out_h: usize,
    pub out_w: usize,
}

/// One stacked-SCPC fusion site (two sequential SCPC blocks sharing rates).
#[derive(Debug, Clone)]
pub struct ScpcSite {
    pub prefix: String,
    pub group: RateGroupId,
    pub rates: [usize; 4],
    pub width: usize,
}

struct Plan {
    sites: BTreeMap<String, ConvSite>,
    scpc_sites: Vec<ScpcSite>,
}

struct PlanBuilder<'a> {
    config: &'a NetworkConfig,
    plan: Plan,
}

impl<'a> PlanBuilder<'a> {
    fn conv(
        &mut self,
        path: String,
        spec: ConvSpec,
        has_bias: bool,
        has_bn: bool,
        hw: (usize, usize),
    ) -> Result<(usize, usize)> {
        let out = spec.out_hw(hw.0, hw.1)?;
        let site = ConvSite {
            path: path.clone(),
            spec,
            has_bias,
            has_bn,
            out_h: out.0,
            out_w: out.1,
        };
        self.plan.sites.insert(path, site);
        Ok(out)
    }

    /// Stride-1 conv with bn, no bias (bn supplies the affine part).
    fn conv_bn(
        &mut self,
        path: String,
        c_in: usize,
        c_out: usize,
        k: usize,
        dilation: usize,
        hw: (usize, usize),
    ) -> Result<(usize, usize)> {
        self.conv(path, ConvSpec::same(c_in, c_out, k, dilation, 1), false, true, hw)
    }

    fn scpc_block(
        &mut self,
        prefix: &str,
        c: usize,
        rates: [usize; 4],
        hw: (usize, usize),
    ) -> Result<()> {
        let b = c / SCPC_BRANCHES;
        self.conv_bn(format!("{prefix}.transition"), c, c, 1, 1, hw)?;
        for (i, &rate) in rates.iter().enumerate() {
            if self.config.lite {
                // Depthwise + pointwise; bn rides on the pointwise conv.
                self.conv(
                    format!("{prefix}.branch{}.dw", i + 1),
                    ConvSpec {
                        c_in: b,
                        c_out: b,
                        k: 3,
                        stride: 1,
                        pad: rate,
                        dilation: rate,
                        groups: b,
                    },
                    false,
                    false,
                    hw,
                )?;
                self.conv_bn(format!("{prefix}.branch{}.pw", i + 1), b, b, 1, 1, hw)?;
            } else {
                self.conv_bn(format!("{prefix}.branch{}", i + 1), b, b, 3, rate, hw)?;
            }
        }
        self.conv_bn(format!("{prefix}.fuse"), c, c, 1, 1, hw)?;
        Ok(())
    }

    /// Two stacked SCPC blocks sharing one rate tuple; records the fusion
    /// site.
    fn stacked_scpc(
        &mut self,
        prefix: &str,
        c: usize,
        group: RateGroupId,
        hw: (usize, usize),
    ) -> Result<()> {
        let rates = self.config.rates_for(group);
        self.scpc_block(&format!("{prefix}.scpc1"), c, rates, hw)?;
        self.scpc_block(&format!("{prefix}.scpc2"), c, rates, hw)?;
        self.plan.scpc_sites.push(ScpcSite {
            prefix: prefix.to_string(),
            group,
            rates,
            width: c,
        });
        Ok(())
    }
}

fn pool_hw(hw: (usize, usize)) -> Result<(usize, usize)> {
    if hw.0 < 2 || hw.1 < 2 {
        return Err(EdnError::dimension(format!(
            "cannot downsample {}x{} by 2",
            hw.0, hw.1
        )));
    }
    Ok((hw.0 / 2, hw.1 / 2))
}

/// Walk the graph once, producing every convolution site with its geometry.
fn plan(config: &NetworkConfig) -> Result<Plan> {
    config.validate()?;
    let mut pb = PlanBuilder {
        config,
        plan: Plan {
            sites: BTreeMap::new(),
            scpc_sites: Vec::new(),
        },
    };
    let s = config.input_side;
    let dw = config.decoder_width;

    // Backbone: two 3x3 conv+bn+relu per stage, maxpool2 between stages.
    let mut hw = (s, s);
    let mut c_prev = 3;
    let mut stage_hw = [(0usize, 0usize); 5];
    for st in 1..=5 {
        if st > 1 {
            hw = pool_hw(hw)?;
        }
        let width = config.backbone_widths[st - 1];
        pb.conv_bn(format!("backbone.stage{st}.conv1"), c_prev, width, 3, 1, hw)?;
        pb.conv_bn(format!("backbone.stage{st}.conv2"), width, width, 3, 1, hw)?;
        c_prev = width;
        stage_hw[st - 1] = hw;
    }

    // EDB: two conv+pool descents, global attention, stacked-SCPC fusion.
    let ew = config.edb_width;
    let hw1 = pool_hw(hw)?;
    pb.conv_bn("edb.down1.conv1".into(), c_prev, ew, 3, 1, hw1)?;
    pb.conv_bn("edb.down1.conv2".into(), ew, ew, 3, 1, hw1)?;
    let hw2 = pool_hw(hw1)?;
    pb.conv_bn("edb.down2.conv1".into(), ew, ew, 3, 1, hw2)?;
    pb.conv_bn("edb.down2.conv2".into(), ew, ew, 3, 1, hw2)?;
    pb.stacked_scpc("edb.h2", ew, RateGroupId::Extreme, hw2)?;
    pb.conv_bn("edb.x2.proj".into(), ew, dw, 1, 1, hw2)?;
    pb.conv_bn("edb.x1.proj".into(), ew, dw, 1, 1, hw1)?;
    pb.stacked_scpc("edb.hy", 2 * dw, RateGroupId::Extreme, hw1)?;

    // Top-down decoder with per-stage prediction heads.
    let mut d_c = 2 * dw;
    let mut d_hw = hw1;
    for i in (1..=5).rev() {
        let e_hw = stage_hw[i - 1];
        pb.conv_bn(format!("decoder.stage{i}.up"), d_c, dw, 1, 1, d_hw)?;
        pb.conv_bn(
            format!("decoder.stage{i}.skip"),
            config.backbone_widths[i - 1],
            dw,
            1,
            1,
            e_hw,
        )?;
        pb.stacked_scpc(
            &format!("decoder.stage{i}.h"),
            2 * dw,
            NetworkConfig::stage_group(i),
            e_hw,
        )?;
        // Prediction head: plain 1x1 with bias, no bn, no relu.
        pb.conv(
            format!("head.stage{i}"),
            ConvSpec::same(2 * dw, 1, 1, 1, 1),
            true,
            false,
            e_hw,
        )?;
        d_c = 2 * dw;
        d_hw = e_hw;
    }
    Ok(pb.plan)
}

/// Immutable model: config, layer geometry, parameters keyed by layer path.
#[derive(Debug, Clone)]
pub struct EdnModel {
    config: NetworkConfig,
    sites: BTreeMap<String, ConvSite>,
    scpc_sites: Vec<ScpcSite>,
    params: BTreeMap<String, LayerParams>,
}

/// Per-layer sub-seed: FNV-1a over the global seed and the layer path, so
/// parameter draws do not depend on construction order.
fn sub_seed(global: u64, path: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in global.to_le_bytes().iter().chain(path.as_bytes()) {
        h ^= *b as u64;
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Build a model with freshly initialized parameters for every planned site.
pub fn build_model(config: &NetworkConfig) -> Result<EdnModel> {
    let plan = plan(config)?;
    let mut params = BTreeMap::new();
    for (path, site) in &plan.sites {
        let mut p = init_params(path, &site.spec, sub_seed(config.seed, path))?;
        if !site.has_bias {
            p.bias = None;
        }
        if !site.has_bn {
            p.bn = None;
        }
        params.insert(path.clone(), p);
    }
    Ok(EdnModel {
        config: config.clone(),
        sites: plan.sites,
        scpc_sites: plan.scpc_sites,
        params,
    })
}

impl EdnModel {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn site(&self, path: &str) -> Result<&ConvSite> {
        self.sites
            .get(path)
            .ok_or_else(|| EdnError::Validation(format!("unknown layer path `{path}`")))
    }

    pub fn sites(&self) -> impl Iterator<Item = &ConvSite> {
        self.sites.values()
    }

    pub fn scpc_sites(&self) -> &[ScpcSite] {
        &self.scpc_sites
    }

    pub fn param(&self, path: &str) -> Result<&LayerParams> {
        self.params
            .get(path)
            .ok_or_else(|| EdnError::Validation(format!("missing parameters for layer `{path}`")))
    }

    pub fn param_mut(&mut self, path: &str) -> Result<&mut LayerParams> {
        self.params
            .get_mut(path)
            .ok_or_else(|| EdnError::Validation(format!("missing parameters for layer `{path}`")))
    }

    pub fn layer_paths(&self) -> impl Iterator<Item = &str> {
        self.sites.keys().map(|s| s.as_str())
    }

    /// Analytic multiply-accumulate total over every convolution site.
    pub fn total_macs(&self) -> u64 {
        self.sites
            .values()
            .map(|s| count_macs(&s.spec, s.out_h, s.out_w))
            .sum()
    }

    /// Conv (+bias) and batch norm when the site carries one; no activation.
    fn run_conv(&self, path: &str, x: &Tensor4) -> Result<Tensor4> {
        let site = self.site(path)?;
        let p = self.param(path)?;
        let y = conv2d(x, &site.spec, p)?;
        match &p.bn {
            Some(bn) => batchnorm_inference(&y, bn, BN_EPS),
            None => Ok(y),
        }
    }

    fn run_conv_relu(&self, path: &str, x: &Tensor4) -> Result<Tensor4> {
        Ok(relu(&self.run_conv(path, x)?))
    }

    /// SCPC branch i: dense 3x3 (+bn+relu), or depthwise+pointwise in lite
    /// mode with bn+relu after the pointwise conv.
    fn run_branch(&self, prefix: &str, i: usize, x: &Tensor4) -> Result<Tensor4> {
        if self.config.lite {
            let mid = self.run_conv(&format!("{prefix}.branch{}.dw", i + 1), x)?;
            self.run_conv_relu(&format!("{prefix}.branch{}.pw", i + 1), &mid)
        } else {
            self.run_conv_relu(&format!("{prefix}.branch{}", i + 1), x)
        }
    }
}

/// One SCPC block at `prefix` (e.g. `decoder.stage1.h.scpc1`): 1x1
/// transition, even channel split, a chain of dilated 3x3 branches where
/// each branch consumes the previous branch's output, 1x1 fusion whose ReLU
/// is applied after the residual sum.
pub fn scpc(model: &EdnModel, prefix: &str, x: &Tensor4) -> Result<Tensor4> {
    if !x.c().is_multiple_of(SCPC_BRANCHES) {
        return Err(EdnError::config(
            "scpc",
            format!("{} channels not divisible by {}", x.c(), SCPC_BRANCHES),
        ));
    }
    let m1 = model.run_conv_relu(&format!("{prefix}.transition"), x)?;
    let parts = m1.split_channels(SCPC_BRANCHES)?;
    let mut outs: Vec<Tensor4> = Vec::with_capacity(SCPC_BRANCHES);
    for i in 0..SCPC_BRANCHES {
        let input = if i == 0 {
            parts[0].clone()
        } else {
            parts[i].add(&outs[i - 1])?
        };
        outs.push(model.run_branch(prefix, i, &input)?);
    }
    let mut cat = outs[0].clone();
    for o in &outs[1..] {
        cat = cat.concat_channels(o)?;
    }
    let fused = model.run_conv(&format!("{prefix}.fuse"), &cat)?;
    Ok(relu(&fused.add(x)?))
}

/// Two sequential SCPC blocks sharing the site's rate tuple.
pub fn stacked_scpc(model: &EdnModel, prefix: &str, x: &Tensor4) -> Result<Tensor4> {
    let y = scpc(model, &format!("{prefix}.scpc1"), x)?;
    scpc(model, &format!("{prefix}.scpc2"), &y)
}

/// The extremely-downsampled block on top of stage 5. Two conv+pool
/// descents produce X1 (half scale) and X2 (quarter scale); the sigmoid of
/// X2's global average recalibrates both as channel attention; the branches
/// are fused back at X1's scale.
pub fn edb(model: &EdnModel, e5: &Tensor4) -> Result<Tensor4> {
    edb_impl(model, e5, false)
}

pub(crate) fn edb_impl(model: &EdnModel, e5: &Tensor4, force_ones_attention: bool) -> Result<Tensor4> {
    let x = maxpool2(e5)?;
    let x = model.run_conv_relu("edb.down1.conv1", &x)?;
    let x1 = model.run_conv_relu("edb.down1.conv2", &x)?;

    let x = maxpool2(&x1)?;
    let x = model.run_conv_relu("edb.down2.conv1", &x)?;
    let x2 = model.run_conv_relu("edb.down2.conv2", &x)?;

    let attention = if force_ones_attention {
        ChannelVector::ones(x2.c())?
    } else {
        global_avg_pool(&x2)?.sigmoid()
    };
    debug_assert!(attention.data().iter().all(|&v| v > 0.0 && v <= 1.0));
    let x2_r = x2.mul_channels(&attention)?;
    let x1_r = x1.mul_channels(&attention)?;

    let h2 = stacked_scpc(model, "edb.h2", &x2_r)?;
    let x2_up = upsample_bilinear(
        &model.run_conv_relu("edb.x2.proj", &h2)?,
        x1.h(),
        x1.w(),
    )?;
    let x1_p = model.run_conv_relu("edb.x1.proj", &x1_r)?;
    stacked_scpc(model, "edb.hy", &x1_p.concat_channels(&x2_up)?)
}

/// Everything a forward pass produces: encoder stages E1..E5, decoder
/// features D1..D6, and side-output predictions P1..P5 at input resolution.
#[derive(Debug, Clone)]
pub struct ForwardOutputs {
    pub stage_features: [Tensor4; 5],
    pub decoder_features: [Tensor4; 6],
    pub predictions: [Tensor4; 5],
}

impl ForwardOutputs {
    /// P1, the final output prediction.
    pub fn final_prediction(&self) -> &Tensor4 {
        &self.predictions[0]
    }
}

/// Full forward pass over one image `(1, 3, s, s)` with `s = input_side`.
pub fn forward(model: &EdnModel, image: &Tensor4) -> Result<ForwardOutputs> {
    let s = model.config.input_side;
    if image.dims() != (1, 3, s, s) {
        return Err(EdnError::dimension(format!(
            "forward expects (1,3,{s},{s}), got {:?}",
            image.dims()
        )));
    }

    // Encoder; scale of stage i is input/2^(i-1).
    let mut stages: Vec<Tensor4> = Vec::with_capacity(5);
    let mut x = image.clone();
    for st in 1..=5 {
        if st > 1 {
            x = maxpool2(&x)?;
        }
        x = model.run_conv_relu(&format!("backbone.stage{st}.conv1"), &x)?;
        x = model.run_conv_relu(&format!("backbone.stage{st}.conv2"), &x)?;
        assert_eq!(
            (x.h(), x.w()),
            (s >> (st - 1), s >> (st - 1)),
            "stage {st} scale ledger violated"
        );
        stages.push(x.clone());
    }

    // EDB on top of E5, at 1/32 scale.
    let d6 = edb(model, &stages[4])?;
    assert_eq!((d6.h(), d6.w()), (s / 32, s / 32), "D6 scale ledger violated");

    // Top-down fusion; D_i lives at E_i's scale.
    let mut decoder_rev: Vec<Tensor4> = vec![d6];
    for i in (1..=5).rev() {
        let prev = decoder_rev.last().expect("d6 seeds the chain");
        let e_i = &stages[i - 1];
        let up = upsample_bilinear(
            &model.run_conv_relu(&format!("decoder.stage{i}.up"), prev)?,
            e_i.h(),
            e_i.w(),
        )?;
        let skip = model.run_conv_relu(&format!("decoder.stage{i}.skip"), e_i)?;
        let d_i = stacked_scpc(model, &format!("decoder.stage{i}.h"), &skip.concat_channels(&up)?)?;
        decoder_rev.push(d_i);
    }

    // decoder_rev = [D6, D5, D4, D3, D2, D1]; store as D1..D6.
    let decoder: Vec<Tensor4> = decoder_rev.into_iter().rev().collect();

    // Side outputs: sigmoid(upsample(1x1(D_i))) for i = 1..5.
    let mut predictions: Vec<Tensor4> = Vec::with_capacity(5);
    for i in 1..=5 {
        let logits = model.run_conv(&format!("head.stage{i}"), &decoder[i - 1])?;
        let up = upsample_bilinear(&logits, s, s)?;
        predictions.push(sigmoid(&up));
    }

    Ok(ForwardOutputs {
        stage_features: stages.try_into().expect("five stages"),
        decoder_features: decoder.try_into().expect("six decoder features"),
        predictions: predictions.try_into().expect("five predictions"),
    })
}

/// Convenience: deterministic pseudo-random input image for benches/tests.
pub fn synthetic_image(side: usize, seed: u64) -> Tensor4 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f32> = (0..3 * side * side).map(|_| rng.random_range(0.0..1.0)).collect();
    Tensor4::new(1, 3, side, side, data).expect("valid dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::sigmoid_scalar;
    use rand::{Rng, SeedableRng};

    /// Random feature map of the requested shape.
    fn feature(c: usize, h: usize, w: usize, seed: u64) -> Tensor4 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..c * h * w).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor4::new(1, c, h, w, data).unwrap()
    }

    /// Small config keeping unit tests fast.
    pub(crate) fn tiny_config() -> NetworkConfig {
        NetworkConfig {
            backbone_widths: [4, 8, 8, 8, 8],
            decoder_width: 8,
            edb_width: 16,
            input_side: 64,
            seed: 11,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn default_rate_groups_and_dims() {
        let c = NetworkConfig::default();
        assert_eq!(c.rates.low, [1, 2, 4, 8]);
        assert_eq!(c.rates.high, [1, 2, 3, 4]);
        assert_eq!(c.rates.extreme, [1, 1, 1, 1]);
        assert_eq!(c.input_side, 384);
        assert_eq!(c.decoder_width, 32);
        assert_eq!(c.edb_width, 256);
    }

    #[test]
    fn build_is_deterministic_and_validates() {
        let cfg = tiny_config();
        let a = build_model(&cfg).unwrap();
        let b = build_model(&cfg).unwrap();
        for path in a.layer_paths() {
            assert_eq!(a.param(path).unwrap(), b.param(path).unwrap(), "{path}");
        }
        let mut bad = cfg.clone();
        bad.decoder_width = 30;
        match build_model(&bad) {
            Err(EdnError::Config { field, .. }) => assert_eq!(field, "decoder_width"),
            other => panic!("expected config error, got {other:?}"),
        }
        let mut bad = cfg;
        bad.input_side = 100;
        assert!(build_model(&bad).is_err());
    }

    #[test]
    fn seven_scpc_sites_with_expected_groups() {
        let model = build_model(&tiny_config()).unwrap();
        let sites = model.scpc_sites();
        assert_eq!(sites.len(), 7);
        let by_prefix: std::collections::BTreeMap<_, _> =
            sites.iter().map(|s| (s.prefix.as_str(), s.group)).collect();
        assert_eq!(by_prefix["edb.h2"], RateGroupId::Extreme);
        assert_eq!(by_prefix["edb.hy"], RateGroupId::Extreme);
        assert_eq!(by_prefix["decoder.stage1.h"], RateGroupId::Low);
        assert_eq!(by_prefix["decoder.stage2.h"], RateGroupId::Low);
        assert_eq!(by_prefix["decoder.stage3.h"], RateGroupId::High);
        assert_eq!(by_prefix["decoder.stage4.h"], RateGroupId::High);
        assert_eq!(by_prefix["decoder.stage5.h"], RateGroupId::High);
    }

    #[test]
    fn scpc_preserves_dims_and_zero_weights_reduce_to_relu() {
        let model = build_model(&tiny_config()).unwrap();
        // edb.h2 operates at edb_width = 16 channels.
        let x = feature(16, 24, 18, 5);
        let y = scpc(&model, "edb.h2.scpc1", &x).unwrap();
        assert_eq!(y.dims(), x.dims());

        let mut zeroed = build_model(&tiny_config()).unwrap();
        let paths: Vec<String> = zeroed.layer_paths().map(String::from).collect();
        for p in paths {
            let lp = zeroed.param_mut(&p).unwrap();
            lp.weight = Tensor4::zeros(
                lp.weight.n(),
                lp.weight.c(),
                lp.weight.h(),
                lp.weight.w(),
            )
            .unwrap();
        }
        let y = scpc(&zeroed, "edb.h2.scpc1", &x).unwrap();
        assert_eq!(y, relu(&x));
        let y2 = stacked_scpc(&zeroed, "edb.h2", &x).unwrap();
        assert_eq!(y2, relu(&x));
    }

    #[test]
    fn scpc_rejects_non_divisible_width() {
        let model = build_model(&tiny_config()).unwrap();
        let x = Tensor4::zeros(1, 6, 4, 4).unwrap();
        assert!(scpc(&model, "edb.h2.scpc1", &x).is_err());
    }

    #[test]
    fn stacked_equals_manual_composition_bitwise() {
        let model = build_model(&tiny_config()).unwrap();
        let x = feature(16, 8, 16, 3);
        let manual = scpc(&model, "edb.h2.scpc2", &scpc(&model, "edb.h2.scpc1", &x).unwrap()).unwrap();
        let stacked = stacked_scpc(&model, "edb.h2", &x).unwrap();
        assert_eq!(manual, stacked);
    }

    #[test]
    fn scpc_unit_rates_match_dilation_one_graph_replay() {
        // EH rates are {1,1,1,1}; replay the same blocks with explicit
        // dilation-1 convs and identical parameters.
        let model = build_model(&tiny_config()).unwrap();
        let prefix = "edb.h2.scpc1";
        let x = feature(16, 12, 12, 9);

        let run = |path: &str, input: &Tensor4| -> Tensor4 {
            let p = model.param(path).unwrap();
            let (co, ci, k, _) = p.weight.dims();
            let spec = ConvSpec::same(ci, co, k, 1, 1);
            let y = conv2d(input, &spec, p).unwrap();
            relu(&batchnorm_inference(&y, p.bn.as_ref().unwrap(), BN_EPS).unwrap())
        };
        let m1 = run(&format!("{prefix}.transition"), &x);
        let parts = m1.split_channels(4).unwrap();
        let mut outs: Vec<Tensor4> = Vec::new();
        for i in 0..4 {
            let input = if i == 0 {
                parts[0].clone()
            } else {
                parts[i].add(&outs[i - 1]).unwrap()
            };
            outs.push(run(&format!("{prefix}.branch{}", i + 1), &input));
        }
        let mut cat = outs[0].clone();
        for o in &outs[1..] {
            cat = cat.concat_channels(o).unwrap();
        }
        let pf = model.param(&format!("{prefix}.fuse")).unwrap();
        let fuse_spec = ConvSpec::same(16, 16, 1, 1, 1);
        let fused = batchnorm_inference(
            &conv2d(&cat, &fuse_spec, pf).unwrap(),
            pf.bn.as_ref().unwrap(),
            BN_EPS,
        )
        .unwrap();
        let want = relu(&fused.add(&x).unwrap());

        assert_eq!(scpc(&model, prefix, &x).unwrap(), want);
    }

    #[test]
    fn lite_scpc_equals_depthwise_separable_replay() {
        use crate::layers::depthwise_separable_conv;
        let cfg = NetworkConfig {
            lite: true,
            ..tiny_config()
        };
        let model = build_model(&cfg).unwrap();
        let prefix = "edb.h2.scpc1";
        let x = feature(16, 10, 10, 31);

        let run_dense = |path: &str, input: &Tensor4| -> Tensor4 {
            let p = model.param(path).unwrap();
            let (co, ci, k, _) = p.weight.dims();
            let y = conv2d(input, &ConvSpec::same(ci, co, k, 1, 1), p).unwrap();
            relu(&batchnorm_inference(&y, p.bn.as_ref().unwrap(), BN_EPS).unwrap())
        };
        let m1 = run_dense(&format!("{prefix}.transition"), &x);
        let parts = m1.split_channels(4).unwrap();
        let mut outs: Vec<Tensor4> = Vec::new();
        for (i, rates) in cfg.rates.extreme.iter().enumerate() {
            let input = if i == 0 {
                parts[0].clone()
            } else {
                parts[i].add(&outs[i - 1]).unwrap()
            };
            // Composite branch: depthwise + pointwise, then the pointwise
            // layer's bn and relu.
            let p_dw = model.param(&format!("{prefix}.branch{}.dw", i + 1)).unwrap();
            let p_pw = model.param(&format!("{prefix}.branch{}.pw", i + 1)).unwrap();
            let spec = ConvSpec::same(4, 4, 3, *rates, 1);
            let y = depthwise_separable_conv(&input, &spec, p_dw, p_pw).unwrap();
            outs.push(relu(
                &batchnorm_inference(&y, p_pw.bn.as_ref().unwrap(), BN_EPS).unwrap(),
            ));
        }
        let mut cat = outs[0].clone();
        for o in &outs[1..] {
            cat = cat.concat_channels(o).unwrap();
        }
        let pf = model.param(&format!("{prefix}.fuse")).unwrap();
        let fused = batchnorm_inference(
            &conv2d(&cat, &ConvSpec::same(16, 16, 1, 1, 1), pf).unwrap(),
            pf.bn.as_ref().unwrap(),
            BN_EPS,
        )
        .unwrap();
        let want = relu(&fused.add(&x).unwrap());
        assert_eq!(scpc(&model, prefix, &x).unwrap(), want);
    }

    #[test]
    fn lite_zero_weights_reduce_to_relu() {
        let cfg = NetworkConfig {
            lite: true,
            ..tiny_config()
        };
        let mut model = build_model(&cfg).unwrap();
        let paths: Vec<String> = model.layer_paths().map(String::from).collect();
        for p in &paths {
            let lp = model.param_mut(p).unwrap();
            lp.weight =
                Tensor4::zeros(lp.weight.n(), lp.weight.c(), lp.weight.h(), lp.weight.w()).unwrap();
        }
        let x = feature(16, 6, 6, 12);
        assert_eq!(scpc(&model, "edb.h2.scpc1", &x).unwrap(), relu(&x));
    }

    #[test]
    fn edb_halves_scale_net() {
        let cfg = tiny_config();
        let model = build_model(&cfg).unwrap();
        // 24x24 input: Down1 -> 12, Down2 -> 6, fused output back at 12.
        let e5 = feature(8, 24, 24, 1);
        let y = edb(&model, &e5).unwrap();
        assert_eq!((y.h(), y.w()), (12, 12));
        assert_eq!(y.c(), 2 * cfg.decoder_width);
        let too_small = Tensor4::zeros(1, 8, 3, 3).unwrap();
        assert!(edb(&model, &too_small).is_err());
    }

    #[test]
    fn gap_vector_lies_in_unit_interval() {
        let cfg = tiny_config();
        let model = build_model(&cfg).unwrap();
        let image = synthetic_image(cfg.input_side, 2);
        // Recompute the attention vector the way edb does.
        let out = forward(&model, &image).unwrap();
        let e5 = &out.stage_features[4];
        let x = maxpool2(e5).unwrap();
        let x = model.run_conv_relu("edb.down1.conv1", &x).unwrap();
        let x1 = model.run_conv_relu("edb.down1.conv2", &x).unwrap();
        let x = maxpool2(&x1).unwrap();
        let x = model.run_conv_relu("edb.down2.conv1", &x).unwrap();
        let x2 = model.run_conv_relu("edb.down2.conv2", &x).unwrap();
        let att = global_avg_pool(&x2).unwrap().sigmoid();
        assert!(att.data().iter().all(|&v| v > 0.0 && v < 1.0));
        // Sigmoid output agrees with the scalar map.
        let raw = global_avg_pool(&x2).unwrap();
        for (s, r) in att.data().iter().zip(raw.data()) {
            assert_eq!(*s, sigmoid_scalar(*r));
        }
    }

    #[test]
    fn forced_ones_attention_equals_graph_without_recalibration() {
        let model = build_model(&tiny_config()).unwrap();
        let e5 = feature(8, 24, 24, 7);
        let forced = edb_impl(&model, &e5, true).unwrap();

        // Same graph with the recalibration step removed entirely.
        let x = maxpool2(&e5).unwrap();
        let x = model.run_conv_relu("edb.down1.conv1", &x).unwrap();
        let x1 = model.run_conv_relu("edb.down1.conv2", &x).unwrap();
        let x = maxpool2(&x1).unwrap();
        let x = model.run_conv_relu("edb.down2.conv1", &x).unwrap();
        let x2 = model.run_conv_relu("edb.down2.conv2", &x).unwrap();
        let h2 = stacked_scpc(&model, "edb.h2", &x2).unwrap();
        let x2_up = upsample_bilinear(
            &model.run_conv_relu("edb.x2.proj", &h2).unwrap(),
            x1.h(),
            x1.w(),
        )
        .unwrap();
        let x1_p = model.run_conv_relu("edb.x1.proj", &x1).unwrap();
        let want = stacked_scpc(&model, "edb.hy", &x1_p.concat_channels(&x2_up).unwrap()).unwrap();
        assert_eq!(forced, want);
    }

    #[test]
    fn forward_shapes_ranges_and_determinism_small() {
        let cfg = tiny_config();
        let model = build_model(&cfg).unwrap();
        let image = synthetic_image(cfg.input_side, 42);
        let out = forward(&model, &image).unwrap();
        let s = cfg.input_side;
        for (i, e) in out.stage_features.iter().enumerate() {
            assert_eq!((e.h(), e.w()), (s >> i, s >> i));
        }
        assert_eq!(
            (out.decoder_features[5].h(), out.decoder_features[5].w()),
            (s / 32, s / 32)
        );
        for p in &out.predictions {
            assert_eq!(p.dims(), (1, 1, s, s));
            assert!(p.data().iter().all(|&v| v > 0.0 && v < 1.0));
        }
        let again = forward(&model, &image).unwrap();
        for i in 0..5 {
            assert_eq!(out.predictions[i], again.predictions[i]);
        }
        let bad = Tensor4::zeros(1, 3, 32, 32).unwrap();
        assert!(forward(&model, &bad).is_err());
    }

    #[test]
    fn zero_weights_keep_predictions_finite() {
        let cfg = tiny_config();
        let mut model = build_model(&cfg).unwrap();
        let paths: Vec<String> = model.layer_paths().map(String::from).collect();
        for p in &paths {
            let lp = model.param_mut(p).unwrap();
            lp.weight =
                Tensor4::zeros(lp.weight.n(), lp.weight.c(), lp.weight.h(), lp.weight.w()).unwrap();
        }
        let out = forward(&model, &synthetic_image(cfg.input_side, 3)).unwrap();
        for p in &out.predictions {
            assert!(p.data().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn lite_reduces_total_macs_at_equal_widths() {
        let cfg = tiny_config();
        let full = build_model(&cfg).unwrap();
        let lite = build_model(&NetworkConfig { lite: true, ..cfg }).unwrap();
        assert!(lite.total_macs() < full.total_macs());
    }
}
