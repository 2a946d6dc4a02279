use std::collections::{BTreeMap, BTreeSet};

use super::{Diagram, DiagramBox, DiagramError, PregroupType};

/// A strict monoidal functor given on generators.
///
/// Objects are mapped per base name; the extension to a factor `(b, z)`
/// applies `z` adjoints to the image of `b`, and the extension to a type is
/// the tensor of the factor images.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FunctorSpec {
    pub object_map: BTreeMap<String, PregroupType>,
    pub box_map: BTreeMap<DiagramBox, Diagram>,
}

impl FunctorSpec {
    pub fn new() -> FunctorSpec {
        FunctorSpec::default()
    }

    /// The identity functor on every generator appearing in `d`.
    pub fn identity_on(d: &Diagram) -> FunctorSpec {
        let mut f = FunctorSpec::new();
        let mut bases = BTreeSet::new();
        for factor in d.dom().factors() {
            bases.insert(factor.base.clone());
        }
        for op in d.boxes() {
            for factor in op.dom.factors().iter().chain(op.cod.factors()) {
                bases.insert(factor.base.clone());
            }
            f.box_map.insert(op.clone(), Diagram::from_box(op.clone()));
        }
        for b in bases {
            f.object_map.insert(b.clone(), PregroupType::base(b));
        }
        f
    }

    pub fn map_object(&mut self, base: impl Into<String>, image: PregroupType) -> &mut Self {
        self.object_map.insert(base.into(), image);
        self
    }

    /// Registers the image of a box, checking it has the mapped type.
    pub fn map_box(&mut self, generator: DiagramBox, image: Diagram) -> Result<&mut Self, DiagramError> {
        let expected_dom = self.map_type(&generator.dom)?;
        let expected_cod = self.map_type(&generator.cod)?;
        if image.dom() != &expected_dom || image.cod() != &expected_cod {
            return Err(DiagramError::ImageType {
                image_dom: image.dom().clone(),
                image_cod: image.cod().clone(),
                generator: Box::new(generator),
                expected_dom,
                expected_cod,
            });
        }
        self.box_map.insert(generator, image);
        Ok(self)
    }

    pub fn map_type(&self, ty: &PregroupType) -> Result<PregroupType, DiagramError> {
        let mut out = Vec::new();
        for factor in ty.factors() {
            let image = self
                .object_map
                .get(&factor.base)
                .ok_or_else(|| DiagramError::MissingObject(factor.base.clone()))?;
            out.extend(image.wind(factor.z).0);
        }
        Ok(PregroupType(out))
    }

    fn check_total(&self, d: &Diagram) -> Result<(), DiagramError> {
        self.map_type(d.dom())?;
        for op in d.boxes() {
            let Some(image) = self.box_map.get(op) else {
                return Err(DiagramError::MissingBox(Box::new(op.clone())));
            };
            let expected_dom = self.map_type(&op.dom)?;
            let expected_cod = self.map_type(&op.cod)?;
            if image.dom() != &expected_dom || image.cod() != &expected_cod {
                return Err(DiagramError::ImageType {
                    generator: Box::new(op.clone()),
                    image_dom: image.dom().clone(),
                    image_cod: image.cod().clone(),
                    expected_dom,
                    expected_cod,
                });
            }
        }
        Ok(())
    }

    /// Substitutes every box by its image, layer by layer. Totality is
    /// checked before any rewriting starts.
    pub fn apply(&self, d: &Diagram) -> Result<Diagram, DiagramError> {
        self.check_total(d)?;
        let mut out = Diagram::id(self.map_type(d.dom())?);
        for (layer, running) in d.layers().iter().zip(d.running_types()) {
            let left = running.slice(0, layer.offset);
            let shift = self.map_type(&left)?.len();
            let image = &self.box_map[&layer.op];
            for inner in image.layers() {
                out.push(inner.offset + shift, inner.op.clone())?;
            }
        }
        Ok(out)
    }
}
