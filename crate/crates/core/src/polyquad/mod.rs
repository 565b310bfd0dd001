//! Polynomial spaces on triangles and the quadrature rules used to integrate
//! them exactly.

pub mod basis;
pub mod poly;
pub mod quadrature;

pub use basis::{triangle_frame, BasisTable, DSpace, HomogeneousBasis, PolyBasis};
pub use poly::{dim_p, mono_index, Frame, Poly2, VecPoly};
pub use quadrature::{edge_rule, triangle_rule, QuadratureRule};
