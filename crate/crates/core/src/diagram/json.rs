use serde::{Deserialize, Serialize};

use super::{Diagram, DiagramBox, DiagramError, Layer, PregroupType};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerJson {
    offset: usize,
    name: String,
    dom: PregroupType,
    cod: PregroupType,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramJson {
    dom: PregroupType,
    cod: PregroupType,
    layers: Vec<LayerJson>,
}

pub fn serialize_diagram(d: &Diagram) -> String {
    let json = DiagramJson {
        dom: d.dom().clone(),
        cod: d.cod().clone(),
        layers: d
            .layers()
            .iter()
            .map(|l| LayerJson {
                offset: l.offset,
                name: l.op.name.clone(),
                dom: l.op.dom.clone(),
                cod: l.op.cod.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&json).expect("diagram JSON is always serializable")
}

pub fn deserialize_diagram(text: &str) -> Result<Diagram, DiagramError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let json: DiagramJson = serde_path_to_error::deserialize(de).map_err(|e| DiagramError::Format {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let mut layers = Vec::with_capacity(json.layers.len());
    for (i, l) in json.layers.into_iter().enumerate() {
        if l.name.is_empty() {
            return Err(DiagramError::Format {
                path: format!("layers[{i}].name"),
                message: "box name must be non-empty".into(),
            });
        }
        layers.push(Layer {
            offset: l.offset,
            op: DiagramBox::new(l.name, l.dom, l.cod),
        });
    }
    let d = Diagram::new(json.dom, layers)?;
    if d.cod() != &json.cod {
        return Err(DiagramError::Codomain {
            declared: json.cod,
            computed: d.cod().clone(),
        });
    }
    Ok(d)
}
