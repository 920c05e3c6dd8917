use super::{DeformationNetModel, RigidNetModel};
use crate::data::TimeGrid;
use crate::kinematics::{centroid, rigid_point, RigidTransform};
use crate::{Error, Result, Vec3};

/// Rigid-mapped positions `R(t)(x_init - c) + c + T(t)`, time-major.
pub fn rigid_positions(x_init: &[Vec3], c: Vec3, rigid: &[RigidTransform]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(rigid.len() * x_init.len());
    for rt in rigid {
        let r = rt.matrix();
        out.extend(x_init.iter().map(|x| rigid_point(&r, c, rt.translation, *x)));
    }
    out
}

/// `x(t) = apply_rigid(x_init, c, rigid(t)) + D(t)` at every step.
pub fn reconstruct_total(x_init: &[Vec3], c: Vec3, rigid: &[RigidTransform], deformation: &[Vec3]) -> Result<Vec<Vec3>> {
    if deformation.len() != rigid.len() * x_init.len() {
        return Err(Error::Shape(format!(
            "deformation has {} vectors, expected {} steps x {} nodes",
            deformation.len(),
            rigid.len(),
            x_init.len()
        )));
    }
    let mut out = rigid_positions(x_init, c, rigid);
    for (p, d) in out.iter_mut().zip(deformation) {
        *p = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
    }
    Ok(out)
}

/// RigidNet and DeformationNet combined through the decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposedModel {
    pub rigid: RigidNetModel,
    pub deform: DeformationNetModel,
}

pub struct ProposedPrediction {
    pub rigid: Vec<RigidTransform>,
    pub rigid_positions: Vec<Vec3>,
    pub deformation: Vec<Vec3>,
    pub total: Vec<Vec3>,
}

impl ProposedModel {
    pub fn param_count(&self) -> usize {
        self.rigid.param_count() + self.deform.param_count()
    }

    pub fn predict(&self, x_init: &[Vec3], eta: [f64; 4], grid: &TimeGrid) -> Result<ProposedPrediction> {
        let c = centroid(x_init);
        let rigid = super::rigidnet_rollout(&self.rigid, eta, grid)?;
        let deformation = self.deform.predict_trajectory(x_init, eta, grid)?;
        let rigid_positions = rigid_positions(x_init, c, &rigid);
        let total = rigid_positions.iter().zip(&deformation).map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]]).collect();
        Ok(ProposedPrediction { rigid, rigid_positions, deformation, total })
    }
}
