use crate::dataio::{ExplanationMatrix, LensVector};
use crate::error::Result;
use crate::mapper::{self, CoverAnchor, MapperGraph, MapperParams};
use crate::matrix::Matrix;
use crate::persistence::{extended_persistence_fast, PersistenceDiagram};

/// Mapper graph of a set of explanations and its persistence diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub graph: MapperGraph,
    pub diagram: PersistenceDiagram,
    pub components: usize,
}

pub fn signature(e: &ExplanationMatrix, lens: &LensVector, p: &MapperParams) -> Result<Signature> {
    lens.check_paired(e)?;
    p.validate()?;
    signature_raw(e.values(), lens.values(), p)
}

pub(crate) fn signature_raw(values: &Matrix, lens: &[f64], p: &MapperParams) -> Result<Signature> {
    let graph = mapper::build_mapper_raw(values, lens, p, CoverAnchor::Observed)?;
    let diagram = extended_persistence_fast(&graph);
    let components = mapper::connected_components(&graph).0;
    Ok(Signature {
        graph,
        diagram,
        components,
    })
}
