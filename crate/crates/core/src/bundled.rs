//! Named example chains, each with a simplicial complex that supports it.

use crate::chain::{Cell, Chain};
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::form::AxisBox;

/// A chain together with a complex containing it.
#[derive(Debug, Clone)]
pub struct BundledChain {
    pub name: &'static str,
    pub chain: Chain,
    pub complex: SimplicialComplex,
}

pub const NAMES: &[&str] = &[
    "unit_square",
    "square_boundary",
    "small_loop",
    "open_path",
    "segment",
    "staircase",
    "weighted_path",
    "cube_boundary",
    "point_pair",
    "kuhn_square",
];

fn edge_chain(cx: &SimplicialComplex, path: &[[f64; 2]], weight: f64) -> Result<Chain> {
    let verts = cx.vertices().to_vec();
    let find = |p: &[f64; 2]| {
        verts
            .iter()
            .position(|v| (v[0] - p[0]).abs() < 1e-12 && (v[1] - p[1]).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidParameter(format!("{p:?} is not a vertex")))
    };
    let mut cells = Vec::new();
    for w in path.windows(2) {
        cells.push(Cell {
            indices: vec![find(&w[0])?, find(&w[1])?],
            multiplicity: weight,
        });
    }
    Chain::new(2, 1, verts, cells)
}

impl BundledChain {
    /// Bounding box of the supporting complex.
    pub fn complex_region(&self) -> AxisBox {
        AxisBox::bounding(self.complex.vertices()).expect("nonempty complex")
    }
}

/// Builds a bundled chain by name.
pub fn chain(name: &str) -> Result<BundledChain> {
    let square = |m| SimplicialComplex::freudenthal(&AxisBox::unit(2), m);
    let (name, chain, complex) = match name {
        "unit_square" => {
            let cx = square(4)?;
            ("unit_square", cx.fundamental_chain(), cx)
        }
        "square_boundary" => {
            let cx = square(4)?;
            ("square_boundary", cx.fundamental_chain().boundary()?, cx)
        }
        "small_loop" => {
            let cx = square(4)?;
            let c = edge_chain(&cx, &[[0.25, 0.25], [0.5, 0.25], [0.5, 0.5], [0.25, 0.5], [0.25, 0.25]], 1.0)?;
            ("small_loop", c, cx)
        }
        "open_path" => {
            let cx = square(4)?;
            let c = edge_chain(
                &cx,
                &[
                    [0.0, 0.0],
                    [0.25, 0.0],
                    [0.5, 0.0],
                    [0.75, 0.0],
                    [1.0, 0.0],
                    [1.0, 0.25],
                    [1.0, 0.5],
                    [1.0, 0.75],
                    [1.0, 1.0],
                    [0.75, 1.0],
                    [0.5, 1.0],
                    [0.25, 1.0],
                    [0.0, 1.0],
                ],
                1.0,
            )?;
            ("open_path", c, cx)
        }
        "segment" => {
            let cx = square(4)?;
            let c = edge_chain(&cx, &[[0.0, 0.5], [0.25, 0.5], [0.5, 0.5], [0.75, 0.5], [1.0, 0.5]], 1.0)?;
            ("segment", c, cx)
        }
        "staircase" => {
            let cx = square(4)?;
            let c = edge_chain(
                &cx,
                &[[0.0, 0.0], [0.25, 0.0], [0.25, 0.25], [0.5, 0.25], [0.5, 0.5], [0.75, 0.5], [0.75, 0.75]],
                1.0,
            )?;
            ("staircase", c, cx)
        }
        "weighted_path" => {
            let cx = square(4)?;
            let a = edge_chain(&cx, &[[0.0, 0.25], [0.25, 0.5], [0.5, 0.75]], 2.0)?;
            let b = edge_chain(&cx, &[[0.75, 0.0], [0.75, 0.25], [1.0, 0.25]], -0.5)?;
            ("weighted_path", a.add(&b)?, cx)
        }
        "cube_boundary" => {
            let cx = SimplicialComplex::freudenthal(&AxisBox::unit(3), 1)?;
            ("cube_boundary", cx.fundamental_chain().boundary()?, cx)
        }
        "point_pair" => {
            let cx = square(2)?;
            let verts = cx.vertices().to_vec();
            let a = verts.iter().position(|v| v == &[0.0, 0.0]).expect("corner");
            let b = verts.iter().position(|v| v == &[1.0, 0.5]).expect("vertex");
            let c = Chain::new(
                2,
                0,
                verts,
                vec![
                    Cell {
                        indices: vec![b],
                        multiplicity: 1.0,
                    },
                    Cell {
                        indices: vec![a],
                        multiplicity: -1.0,
                    },
                ],
            )?;
            ("point_pair", c, cx)
        }
        "kuhn_square" => {
            // lattice of the tent motions with width 1/4 centred at (1/2, 1/2)
            let cx = square(8)?;
            ("kuhn_square", cx.fundamental_chain(), cx)
        }
        other => return Err(Error::InvalidParameter(format!("unknown bundled chain '{other}'"))),
    };
    Ok(BundledChain { name, chain, complex })
}

pub fn all() -> Vec<BundledChain> {
    NAMES.iter().map(|n| chain(n).expect("bundled chains build")).collect()
}
