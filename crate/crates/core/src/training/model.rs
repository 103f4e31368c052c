use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError, Variant};
use crate::fusion::{Classifier, InfoAttention, Projector, Source};
use crate::graph::{MultiRelationGraph, Neighborhoods};
use crate::input::NodeInput;
use crate::neighborhood_attention::{NeighborhoodAttention, NeighborhoodOutput};
use crate::relation_attention::RelationAttention;
use crate::seed::rng_for;
use crate::tensor::{AdamState, Binding, Matrix, ParamStore, Tape, TensorError, Var};

/// Graph dimensions a model is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub num_nodes: usize,
    pub num_relations: usize,
    pub feature_dim: usize,
}

impl ModelDims {
    pub fn of(graph: &MultiRelationGraph) -> Self {
        Self {
            num_nodes: graph.num_nodes(),
            num_relations: graph.num_relations(),
            feature_dim: graph.feature_dim(),
        }
    }
}

/// Parameter handles of all modules. Every variant registers the same
/// tensors in the same order, so checkpoints share one layout.
#[derive(Debug, Clone)]
pub struct HaGnn {
    pub relation: RelationAttention,
    pub neighborhood: NeighborhoodAttention,
    pub projector: Projector,
    pub info: InfoAttention,
    pub classifier: Classifier,
    pub variant: Variant,
}

/// Values produced by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub importance: Var,
    pub beta: Var,
    /// Absent for V1.
    pub neighborhood: Option<NeighborhoodOutput>,
    /// N×3 source weights; absent for the single-source variants.
    pub phi: Option<Var>,
    pub z: Var,
    pub logits: Var,
    pub probs: Var,
}

impl HaGnn {
    /// Registers freshly initialized parameters into `store`.
    pub fn init(store: &mut ParamStore, config: &TrainConfig, dims: ModelDims) -> Result<Self, TrainError> {
        config.validate()?;
        if dims.num_nodes == 0 || dims.num_relations == 0 || dims.feature_dim == 0 {
            return Err(TrainError::Config(format!("degenerate graph dimensions {dims:?}")));
        }
        let mut rng = rng_for(config.seed, "init");
        let relation = RelationAttention::new(store, dims.num_nodes, config.relation_hidden, &mut rng);
        let na_input = match config.variant {
            Variant::F => dims.num_nodes + dims.feature_dim,
            _ => dims.num_nodes,
        };
        let neighborhood = NeighborhoodAttention::new(store, config.neighborhood, na_input, &mut rng)?;
        let widths = [
            Some(dims.num_nodes),
            Some(neighborhood.output_dim()),
            Some(dims.feature_dim),
        ];
        let projector = Projector::new(store, &config.fusion, widths, &mut rng);
        let info = InfoAttention::new(store, &config.fusion, &mut rng);
        let classifier = Classifier::new(store, &config.fusion, &mut rng);
        Ok(Self {
            relation,
            neighborhood,
            projector,
            info,
            classifier,
            variant: config.variant,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bind: &Binding,
        graph: &MultiRelationGraph,
        hoods: &Neighborhoods,
    ) -> Result<ForwardOutput, TensorError> {
        let rel = self.relation.forward(tape, bind, graph)?;
        let local = NodeInput::local(rel.local.clone());
        let features = tape.constant(graph.features().clone())?;
        let feature_input = NodeInput::dense(features);

        let neighborhood = match self.variant {
            Variant::V1 => None,
            Variant::F => {
                let input = local.clone().concat(feature_input.clone());
                Some(self.neighborhood.forward(tape, bind, hoods, &input)?)
            }
            Variant::Full | Variant::V2 => Some(self.neighborhood.forward(tape, bind, hoods, &local)?),
        };
        let long_range = neighborhood.as_ref().map(|n| NodeInput::dense(n.output));

        let (z, phi) = match (self.variant, &long_range) {
            (Variant::V1, _) => (self.projector.project(tape, bind, Source::Local, &local)?, None),
            (Variant::V2, Some(g)) => (self.projector.project(tape, bind, Source::LongRange, g)?, None),
            (Variant::Full | Variant::F, Some(g)) => {
                let m_h = self.projector.project(tape, bind, Source::Local, &local)?;
                let m_g = self.projector.project(tape, bind, Source::LongRange, g)?;
                let m_f = self.projector.project(tape, bind, Source::Feature, &feature_input)?;
                let fused = self.info.fuse(tape, bind, &[m_h, m_g, m_f])?;
                (fused.z, Some(fused.phi))
            }
            (_, None) => unreachable!("neighborhood output exists for every variant but V1"),
        };
        let logits = self.classifier.logits(tape, bind, z)?;
        let probs = tape.sigmoid(logits)?;
        Ok(ForwardOutput {
            importance: rel.importance,
            beta: rel.beta,
            neighborhood,
            phi,
            z,
            logits,
            probs,
        })
    }

    /// Mean `φ` over nodes; the single-source variants report their selector.
    pub fn mean_phi(&self, tape: &Tape, out: &ForwardOutput) -> [f64; 3] {
        match (self.variant, out.phi) {
            (Variant::V1, _) => [1.0, 0.0, 0.0],
            (Variant::V2, _) => [0.0, 1.0, 0.0],
            (_, Some(phi)) => {
                let m = tape.value(phi);
                let mut acc = [0.0; 3];
                for r in 0..m.rows() {
                    for (a, v) in acc.iter_mut().zip(m.row(r)) {
                        *a += v;
                    }
                }
                acc.map(|a| a / m.rows() as f64)
            }
            (_, None) => [f64::NAN; 3],
        }
    }
}

/// Everything needed to resume training or to predict.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub config: TrainConfig,
    pub dims: ModelDims,
    pub model: HaGnn,
    pub params: ParamStore,
    pub adam: AdamState,
}

/// Per-node outputs of a forward pass without gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: [f64; 3],
}

impl ModelState {
    pub fn init(graph: &MultiRelationGraph, config: &TrainConfig) -> Result<Self, TrainError> {
        let dims = ModelDims::of(graph);
        let mut params = ParamStore::new();
        let model = HaGnn::init(&mut params, config, dims)?;
        let adam = AdamState::new(params.values());
        Ok(Self {
            config: config.clone(),
            dims,
            model,
            params,
            adam,
        })
    }

    pub fn check_graph(&self, graph: &MultiRelationGraph) -> Result<(), TrainError> {
        let dims = ModelDims::of(graph);
        if dims != self.dims {
            return Err(TrainError::Config(format!(
                "model built for {:?}, graph has {:?}",
                self.dims, dims
            )));
        }
        Ok(())
    }

    pub fn forward_pass(&self, graph: &MultiRelationGraph) -> Result<Prediction, TrainError> {
        self.check_graph(graph)?;
        self.forward_with(graph, &graph.neighborhoods())
    }

    pub(crate) fn forward_with(&self, graph: &MultiRelationGraph, hoods: &Neighborhoods) -> Result<Prediction, TrainError> {
        let mut tape = Tape::new();
        let bind = self.params.bind(&mut tape)?;
        let out = self.model.forward(&mut tape, &bind, graph, hoods)?;
        Ok(Prediction {
            probs: tape.value(out.probs).as_slice().to_vec(),
            beta: tape.value(out.beta).as_slice().to_vec(),
            phi: self.model.mean_phi(&tape, &out),
        })
    }

    /// Scalar parameter count.
    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params
            .ids()
            .find(|&id| self.params.name(id) == name)
            .map(|id| self.params.get(id))
    }
}
