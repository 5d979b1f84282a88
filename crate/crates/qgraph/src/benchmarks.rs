//! The three two-edge reference problems: a barrier at a wire's end, a
//! barrier inside one wire, and a barrier straddling the origin on both wires.
//!
//! All use unit edges with a Kirchhoff origin.

use crate::graph::{
    compose, Cut, EndCondition, OriginCondition, PotentialProfile, SplitSpec, StarGraph, BoundaryConditions,
};
use crate::graph::unit_two_star;

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: &'static str,
    pub graph: StarGraph,
    pub bc: BoundaryConditions,
    pub split: SplitSpec,
    /// Counting interval.
    pub interval: (f64, f64),
    pub barrier: f64,
}

/// Barrier `ν` on `[s1, 1]` of edge 0, Dirichlet ends, cut at `s1`.
pub fn barrier_end(s1: f64, nu: f64) -> Benchmark {
    let g = unit_two_star(PotentialProfile::steps(1.0, &[s1], &[0.0, nu]), PotentialProfile::zero(1.0));
    Benchmark {
        name: "barrier_end",
        bc: compose(&OriginCondition::Kirchhoff, &EndCondition::Dirichlet, 2),
        graph: g,
        split: SplitSpec::single(0, s1),
        interval: (5.0, 60.0),
        barrier: nu,
    }
}

/// Barrier `ν` on `(s2, s1)` of edge 0, Neumann ends, cuts at `s1` and `s2`.
pub fn barrier_interior(s1: f64, s2: f64, nu: f64) -> Benchmark {
    let g = unit_two_star(PotentialProfile::steps(1.0, &[s2, s1], &[0.0, nu, 0.0]), PotentialProfile::zero(1.0));
    Benchmark {
        name: "barrier_interior",
        bc: compose(&OriginCondition::Kirchhoff, &EndCondition::Neumann, 2),
        graph: g,
        split: SplitSpec::same_wire(0, s1, s2),
        interval: (5.0, 60.0),
        barrier: nu,
    }
}

/// Barrier `ν` on `(0, s_i)` of both edges, Dirichlet ends, cuts at `s1`, `s2`.
pub fn two_wire(s1: f64, s2: f64, nu: f64) -> Benchmark {
    let g = unit_two_star(
        PotentialProfile::steps(1.0, &[s1], &[nu, 0.0]),
        PotentialProfile::steps(1.0, &[s2], &[nu, 0.0]),
    );
    Benchmark {
        name: "two_wire",
        bc: compose(&OriginCondition::Kirchhoff, &EndCondition::Dirichlet, 2),
        graph: g,
        split: SplitSpec::two_wires(Cut { edge: 0, position: s1 }, Cut { edge: 1, position: s2 }),
        interval: (3.0, 60.0),
        barrier: nu,
    }
}

/// The reference parameter choices.
pub fn standard() -> [Benchmark; 3] {
    [barrier_end(1.0 / 3.0, -10.0), barrier_interior(0.75, 0.25, -10.0), two_wire(0.5, 0.5, -10.0)]
}

pub fn by_name(name: &str) -> Option<Benchmark> {
    standard().into_iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_by_name() {
        for b in standard() {
            assert_eq!(by_name(b.name).unwrap(), b);
            b.graph.validate().unwrap();
            b.split.validate(&b.graph).unwrap();
        }
        assert!(by_name("nothing").is_none());
    }
}
