//! Architecture descriptions: the fine-tuned C3D layer list and a compact
//! variant with the same layer pattern for small inputs.

use crate::nn::Pool3dConfig;

pub const DEFAULT_NUM_CLASSES: usize = 14;
pub const CUBE_FRAMES: usize = 16;
pub const FRAME_SIZE: usize = 170;
/// `T × H × W × C` of one input cube.
pub const TABLE1_INPUT: [usize; 4] = [CUBE_FRAMES, FRAME_SIZE, FRAME_SIZE, 3];
pub const DEFAULT_DROPOUT: f64 = 0.6;

#[derive(Clone, Debug, PartialEq)]
pub enum LayerSpec {
    Conv { name: String, out_channels: usize, kernel: [usize; 3] },
    BatchNorm { name: String },
    Relu { name: String },
    MaxPool { name: String, config: Pool3dConfig },
    Flatten { name: String },
    Dense { name: String, outputs: usize },
    Dropout { name: String, rate: f64 },
}

impl LayerSpec {
    pub fn name(&self) -> &str {
        match self {
            LayerSpec::Conv { name, .. }
            | LayerSpec::BatchNorm { name }
            | LayerSpec::Relu { name }
            | LayerSpec::MaxPool { name, .. }
            | LayerSpec::Flatten { name }
            | LayerSpec::Dense { name, .. }
            | LayerSpec::Dropout { name, .. } => name,
        }
    }

    pub fn conv(name: &str, out_channels: usize) -> Self {
        LayerSpec::Conv {
            name: name.into(),
            out_channels,
            kernel: [3, 3, 3],
        }
    }

    pub fn bn(name: &str) -> Self {
        LayerSpec::BatchNorm { name: name.into() }
    }

    pub fn relu(name: &str) -> Self {
        LayerSpec::Relu { name: name.into() }
    }

    pub fn pool(name: &str, config: Pool3dConfig) -> Self {
        LayerSpec::MaxPool {
            name: name.into(),
            config,
        }
    }

    pub fn flatten() -> Self {
        LayerSpec::Flatten { name: "flatten".into() }
    }

    pub fn dense(name: &str, outputs: usize) -> Self {
        LayerSpec::Dense {
            name: name.into(),
            outputs,
        }
    }

    pub fn dropout(name: &str, rate: f64) -> Self {
        LayerSpec::Dropout {
            name: name.into(),
            rate,
        }
    }
}

/// Conv+ReLU pairs named after the conv.
fn conv_relu(specs: &mut Vec<LayerSpec>, name: &str, out: usize) {
    specs.push(LayerSpec::conv(name, out));
    specs.push(LayerSpec::relu(&format!("{name}_relu")));
}

/// The fine-tuned C3D: eight 3×3×3 convs, five ceil-mode pools, three batch
/// norms (after conv1, after pool5, after fc6) and the fc6/fc7/fc9 head.
pub fn table1_layers(num_classes: usize) -> Vec<LayerSpec> {
    let mut s = vec![
        LayerSpec::conv("conv1", 64),
        LayerSpec::bn("batchNormalization_1"),
        LayerSpec::relu("conv1_relu"),
        LayerSpec::pool("pool1", Pool3dConfig::spatial2()),
    ];
    conv_relu(&mut s, "conv2", 128);
    s.push(LayerSpec::pool("pool2", Pool3dConfig::cube2()));
    conv_relu(&mut s, "conv3a", 256);
    conv_relu(&mut s, "conv3b", 256);
    s.push(LayerSpec::pool("pool3", Pool3dConfig::cube2()));
    conv_relu(&mut s, "conv4a", 512);
    conv_relu(&mut s, "conv4b", 512);
    s.push(LayerSpec::pool("pool4", Pool3dConfig::cube2()));
    conv_relu(&mut s, "conv5a", 512);
    conv_relu(&mut s, "conv5b", 512);
    s.push(LayerSpec::pool("pool5", Pool3dConfig::cube2()));
    s.push(LayerSpec::bn("batchNormalization_2"));
    s.push(LayerSpec::flatten());
    fc_head(&mut s, 4096, num_classes, DEFAULT_DROPOUT);
    s
}

fn fc_head(s: &mut Vec<LayerSpec>, width: usize, num_classes: usize, dropout: f64) {
    s.push(LayerSpec::dense("fc6", width));
    s.push(LayerSpec::relu("fc6_relu"));
    s.push(LayerSpec::dropout("fc6_dropout", dropout));
    s.push(LayerSpec::bn("batchNormalization_3"));
    s.push(LayerSpec::dense("fc7", width));
    s.push(LayerSpec::relu("fc7_relu"));
    s.push(LayerSpec::dropout("fc7_dropout", dropout));
    s.push(LayerSpec::dense("fc9", num_classes));
}

/// Same layer pattern as [`table1_layers`] with narrow widths and three
/// conv stages, for inputs around 16×32×32.
pub fn compact_layers(num_classes: usize) -> Vec<LayerSpec> {
    let mut s = vec![
        LayerSpec::conv("conv1", 8),
        LayerSpec::bn("batchNormalization_1"),
        LayerSpec::relu("conv1_relu"),
        LayerSpec::pool("pool1", Pool3dConfig::spatial2()),
    ];
    conv_relu(&mut s, "conv2", 16);
    s.push(LayerSpec::pool("pool2", Pool3dConfig::cube2()));
    conv_relu(&mut s, "conv3", 32);
    s.push(LayerSpec::pool("pool3", Pool3dConfig::cube2()));
    s.push(LayerSpec::bn("batchNormalization_2"));
    s.push(LayerSpec::flatten());
    fc_head(&mut s, 64, num_classes, DEFAULT_DROPOUT);
    s
}

/// Smallest net exercising every differentiable layer kind on its own:
/// conv, batch norm, pool, conv, pool, dense. Meant for `4×16×16×3` inputs
/// and finite-difference checks.
pub fn gradcheck_layers(num_classes: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv("conv1", 4),
        LayerSpec::bn("batchNormalization_1"),
        LayerSpec::pool("pool1", Pool3dConfig::cube2()),
        LayerSpec::conv("conv2", 4),
        LayerSpec::pool("pool2", Pool3dConfig::cube2()),
        LayerSpec::flatten(),
        LayerSpec::dense("fc9", num_classes),
    ]
}

/// One row of the reference shape table: layer name, input and output
/// extents without the batch axis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceRow {
    pub name: &'static str,
    pub input: &'static [usize],
    pub output: &'static [usize],
}

const fn row(name: &'static str, input: &'static [usize], output: &'static [usize]) -> ReferenceRow {
    ReferenceRow { name, input, output }
}

/// Layer shapes exactly as published for the fine-tuned network, including
/// the three Input-column entries that disagree with the preceding Output.
pub const TABLE1_REFERENCE: &[ReferenceRow] = &[
    row("Input", &[16, 170, 170, 3], &[16, 170, 170, 3]),
    row("conv1", &[16, 170, 170, 64], &[16, 170, 170, 64]),
    row("batchNormalization_1", &[16, 170, 170, 64], &[16, 170, 170, 64]),
    row("pool1", &[16, 170, 170, 64], &[16, 85, 85, 64]),
    row("conv2", &[16, 85, 85, 64], &[16, 85, 85, 128]),
    row("pool2", &[8, 85, 85, 128], &[8, 43, 43, 128]),
    row("conv3a", &[8, 43, 43, 128], &[8, 43, 43, 256]),
    row("conv3b", &[8, 43, 43, 256], &[8, 43, 43, 256]),
    row("pool3", &[8, 43, 43, 256], &[4, 22, 22, 256]),
    row("conv4a", &[4, 22, 22, 256], &[4, 22, 22, 512]),
    row("conv4b", &[4, 22, 22, 512], &[4, 22, 22, 512]),
    row("pool4", &[4, 22, 22, 512], &[2, 11, 11, 512]),
    row("conv5a", &[2, 11, 11, 512], &[2, 11, 11, 512]),
    row("conv5b", &[2, 11, 11, 512], &[2, 11, 11, 512]),
    row("pool5", &[2, 13, 13, 512], &[1, 6, 6, 512]),
    row("batchNormalization_2", &[1, 6, 6, 512], &[1, 6, 6, 512]),
    row("fc6", &[18432], &[4096]),
    row("batchNormalization_3", &[4096], &[4096]),
    row("fc7", &[4096], &[4096]),
    row("fc9", &[4096], &[14]),
];

/// Known disagreements between the published Input column and the shapes
/// the network necessarily produces.
pub const DOCUMENTED_INPUT_NOTES: &[(&str, &str)] = &[
    (
        "conv1",
        "published input 16×170×170×64 contradicts the 3-channel input row; 64 is conv1's output width",
    ),
    (
        "pool5",
        "published input 2×13×13×512 contradicts conv5b output 2×11×11×512; 11 pools to 6 in ceil mode, matching fc6's 18432 inputs",
    ),
    (
        "pool2",
        "published input 8×85×85×128 contradicts conv2 output 16×85×85×128; pool2 is what halves the temporal axis",
    ),
];
