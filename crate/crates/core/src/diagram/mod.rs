//! String diagrams over a strict monoidal category with pregroup adjoints.
//!
//! A [`Diagram`] is stored in "one box per layer" normal form: each layer
//! carries a single box and the number of wires to its left. Structural
//! equality of two diagrams is therefore plain equality of their layer lists.

use thiserror::Error;

mod functor;
mod json;
mod types;

pub use functor::FunctorSpec;
pub use json::{deserialize_diagram, serialize_diagram};
pub use types::{DiagramBox, Factor, PregroupType, Side, CAP_PREFIX, CUP_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("cannot compose: upper codomain {upper_cod} does not match lower domain {lower_dom}")]
    Composition { upper_cod: PregroupType, lower_dom: PregroupType },
    #[error("layer {layer}: box {found} does not fit running type {running} at offset {offset}")]
    LayerType {
        layer: usize,
        offset: usize,
        running: PregroupType,
        found: Box<DiagramBox>,
    },
    #[error("declared codomain {declared} differs from computed {computed}")]
    Codomain { declared: PregroupType, computed: PregroupType },
    #[error("functor has no image for object {0:?}")]
    MissingObject(String),
    #[error("functor has no image for box {0}")]
    MissingBox(Box<DiagramBox>),
    #[error("image of box {generator} has type {image_dom} -> {image_cod}, expected {expected_dom} -> {expected_cod}")]
    ImageType {
        generator: Box<DiagramBox>,
        image_dom: PregroupType,
        image_cod: PregroupType,
        expected_dom: PregroupType,
        expected_cod: PregroupType,
    },
    #[error("diagram format error at {path}: {message}")]
    Format { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layer {
    /// Number of type factors to the left of the box.
    pub offset: usize,
    pub op: DiagramBox,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagram {
    dom: PregroupType,
    cod: PregroupType,
    layers: Vec<Layer>,
}

impl Diagram {
    pub fn id(ty: PregroupType) -> Diagram {
        Diagram {
            dom: ty.clone(),
            cod: ty,
            layers: Vec::new(),
        }
    }

    pub fn from_box(op: DiagramBox) -> Diagram {
        Diagram {
            dom: op.dom.clone(),
            cod: op.cod.clone(),
            layers: vec![Layer { offset: 0, op }],
        }
    }

    /// Builds a diagram from layers, computing and checking the codomain.
    pub fn new(dom: PregroupType, layers: Vec<Layer>) -> Result<Diagram, DiagramError> {
        let mut d = Diagram::id(dom);
        for layer in layers {
            d.push(layer.offset, layer.op)?;
        }
        Ok(d)
    }

    pub fn dom(&self) -> &PregroupType {
        &self.dom
    }

    pub fn cod(&self) -> &PregroupType {
        &self.cod
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_identity(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &DiagramBox> {
        self.layers.iter().map(|l| &l.op)
    }

    /// Appends one box below the current codomain at `offset`.
    pub fn push(&mut self, offset: usize, op: DiagramBox) -> Result<(), DiagramError> {
        let width = op.dom.len();
        let fits = offset + width <= self.cod.len() && self.cod.0[offset..offset + width] == op.dom.0[..];
        if !fits {
            return Err(DiagramError::LayerType {
                layer: self.layers.len(),
                offset,
                running: self.cod.clone(),
                found: Box::new(op),
            });
        }
        let mut next = self.cod.0[..offset].to_vec();
        next.extend(op.cod.0.iter().cloned());
        next.extend(self.cod.0[offset + width..].iter().cloned());
        self.cod = PregroupType(next);
        self.layers.push(Layer { offset, op });
        Ok(())
    }

    /// Running type just above each layer, followed by the final codomain.
    pub fn running_types(&self) -> Vec<PregroupType> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut cur = self.dom.clone();
        for layer in &self.layers {
            let next = {
                let mut v = cur.0[..layer.offset].to_vec();
                v.extend(layer.op.cod.0.iter().cloned());
                v.extend(cur.0[layer.offset + layer.op.dom.len()..].iter().cloned());
                PregroupType(v)
            };
            out.push(cur);
            cur = next;
        }
        out.push(cur);
        out
    }

    /// Checks that every layer fits its running type and that the stored
    /// codomain is the computed one.
    pub fn validate(&self) -> Result<(), DiagramError> {
        let rebuilt = Diagram::new(self.dom.clone(), self.layers.clone())?;
        if rebuilt.cod != self.cod {
            return Err(DiagramError::Codomain {
                declared: self.cod.clone(),
                computed: rebuilt.cod,
            });
        }
        Ok(())
    }

    /// Sequential composition: `self` on top, `lower` underneath.
    pub fn then(&self, lower: &Diagram) -> Result<Diagram, DiagramError> {
        if self.cod != lower.dom {
            return Err(DiagramError::Composition {
                upper_cod: self.cod.clone(),
                lower_dom: lower.dom.clone(),
            });
        }
        let mut layers = self.layers.clone();
        layers.extend(lower.layers.iter().cloned());
        Ok(Diagram {
            dom: self.dom.clone(),
            cod: lower.cod.clone(),
            layers,
        })
    }

    /// Parallel composition. The left diagram's layers run first, then the
    /// right one's, shifted past the left codomain; this is the interchange
    /// normal form `(f ⊗ id) ; (id ⊗ g)`.
    pub fn tensor(&self, right: &Diagram) -> Diagram {
        let shift = self.cod.len();
        let mut layers = self.layers.clone();
        layers.extend(right.layers.iter().map(|l| Layer {
            offset: l.offset + shift,
            op: l.op.clone(),
        }));
        Diagram {
            dom: self.dom.tensor(&right.dom),
            cod: self.cod.tensor(&right.cod),
            layers,
        }
    }

    /// Whiskering: `id(left) ⊗ self ⊗ id(right)`.
    pub fn whisker(&self, left: &PregroupType, right: &PregroupType) -> Diagram {
        Diagram::id(left.clone()).tensor(self).tensor(&Diagram::id(right.clone()))
    }

    /// Upside-down reflection: boxes are daggered and layers reversed.
    pub fn dagger(&self) -> Diagram {
        Diagram {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            layers: self
                .layers
                .iter()
                .rev()
                .map(|l| Layer {
                    offset: l.offset,
                    op: l.op.dagger(),
                })
                .collect(),
        }
    }

    pub fn apply_functor(&self, functor: &FunctorSpec) -> Result<Diagram, DiagramError> {
        functor.apply(self)
    }
}

/// Free-function spelling of [`Diagram::then`].
pub fn compose(upper: &Diagram, lower: &Diagram) -> Result<Diagram, DiagramError> {
    upper.then(lower)
}

pub fn tensor(left: &Diagram, right: &Diagram) -> Diagram {
    left.tensor(right)
}

pub fn adjoint(ty: &PregroupType, side: Side) -> PregroupType {
    ty.adjoint(side)
}

pub fn apply_functor(functor: &FunctorSpec, d: &Diagram) -> Result<Diagram, DiagramError> {
    functor.apply(d)
}
