use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, Mark, MixedGraph};

/// One traversed edge, oriented along the walk. `near` is the mark at the
/// vertex the step leaves, `far` the mark at the vertex it reaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WalkEdge {
    pub kind: EdgeKind,
    pub near: Mark,
    pub far: Mark,
}

impl WalkEdge {
    pub const FORWARD: WalkEdge = WalkEdge {
        kind: EdgeKind::Directed,
        near: Mark::Tail,
        far: Mark::Head,
    };
    pub const BACKWARD: WalkEdge = WalkEdge {
        kind: EdgeKind::Directed,
        near: Mark::Head,
        far: Mark::Tail,
    };
    pub const BIDIRECTED: WalkEdge = WalkEdge {
        kind: EdgeKind::Bidirected,
        near: Mark::Head,
        far: Mark::Head,
    };

    pub fn reversed(self) -> WalkEdge {
        WalkEdge {
            kind: self.kind,
            near: self.far,
            far: self.near,
        }
    }

    pub fn arrow(self) -> &'static str {
        match (self.kind, self.near, self.far) {
            (EdgeKind::Bidirected, _, _) => "<->",
            (_, Mark::Tail, Mark::Head) => "->",
            (_, Mark::Head, Mark::Tail) => "<-",
            _ => "--",
        }
    }

    /// Whether the edge exists in `g` between `a` (near) and `b` (far).
    pub fn exists(self, g: &MixedGraph, a: usize, b: usize) -> bool {
        match (self.kind, self.near, self.far) {
            (EdgeKind::Bidirected, Mark::Head, Mark::Head) => g.has_bidirected(a, b),
            (EdgeKind::Directed, Mark::Tail, Mark::Head) => g.has_directed(a, b),
            (EdgeKind::Directed, Mark::Head, Mark::Tail) => g.has_directed(b, a),
            _ => false,
        }
    }
}

/// A walk: vertices `v0 .. vn` joined by `n` edges.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Walk {
    pub vertices: Vec<String>,
    pub edges: Vec<WalkEdge>,
}

impl Walk {
    pub fn single(v: impl Into<String>) -> Self {
        Walk {
            vertices: vec![v.into()],
            edges: Vec::new(),
        }
    }

    pub fn push(&mut self, e: WalkEdge, v: impl Into<String>) {
        self.edges.push(e);
        self.vertices.push(v.into());
    }

    pub fn then(mut self, e: WalkEdge, v: impl Into<String>) -> Self {
        self.push(e, v);
        self
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_path(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.vertices.iter().all(|v| seen.insert(v))
    }

    /// Interior positions `1..n` whose two incident edges both have an
    /// arrowhead at the vertex.
    pub fn is_collider_at(&self, i: usize) -> bool {
        i > 0 && i < self.vertices.len() - 1 && self.edges[i - 1].far == Mark::Head && self.edges[i].near == Mark::Head
    }

    pub fn all_interior_colliders(&self) -> bool {
        (1..self.vertices.len().saturating_sub(1)).all(|i| self.is_collider_at(i))
    }

    pub fn is_valid_in(&self, g: &MixedGraph) -> bool {
        if self.vertices.len() != self.edges.len() + 1 {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, e)| {
            match (g.index_of(&self.vertices[i]), g.index_of(&self.vertices[i + 1])) {
                (Ok(a), Ok(b)) => e.exists(g, a, b),
                _ => false,
            }
        })
    }

    pub fn reversed(&self) -> Walk {
        Walk {
            vertices: self.vertices.iter().rev().cloned().collect(),
            edges: self.edges.iter().rev().map(|e| e.reversed()).collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = self.vertices[0].clone();
        for (e, v) in self.edges.iter().zip(&self.vertices[1..]) {
            s.push(' ');
            s.push_str(e.arrow());
            s.push(' ');
            s.push_str(v);
        }
        s
    }
}

impl std::fmt::Display for Walk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.vertices.is_empty() {
            return Ok(());
        }
        f.write_str(&self.render())
    }
}

/// Last-occurrence construction: starting from the first vertex, jump to
/// its final occurrence and continue with the edge leaving it there.
pub fn primary_path(w: &Walk) -> Result<Walk> {
    if w.vertices.is_empty() {
        return Err(Error::EmptyWalk);
    }
    let last = w.vertices.len() - 1;
    let last_index = |v: &String| w.vertices.iter().rposition(|u| u == v).unwrap_or(0);
    let mut out = Walk::single(w.vertices[0].clone());
    let mut i = last_index(&w.vertices[0]);
    while i < last {
        let next = &w.vertices[i + 1];
        out.push(w.edges[i], next.clone());
        i = last_index(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_is_cut_at_last_occurrence() {
        let w = Walk::single("A")
            .then(WalkEdge::FORWARD, "B")
            .then(WalkEdge::FORWARD, "A")
            .then(WalkEdge::FORWARD, "C");
        let p = primary_path(&w).unwrap();
        assert_eq!(p.render(), "A -> C");
    }

    #[test]
    fn inherits_marks_from_final_occurrence() {
        let w = Walk::single("A")
            .then(WalkEdge::BIDIRECTED, "B")
            .then(WalkEdge::BACKWARD, "C")
            .then(WalkEdge::FORWARD, "B")
            .then(WalkEdge::FORWARD, "D");
        let p = primary_path(&w).unwrap();
        assert_eq!(p.render(), "A <-> B -> D");
    }

    #[test]
    fn simple_path_is_fixed_point() {
        let w = Walk::single("A")
            .then(WalkEdge::FORWARD, "B")
            .then(WalkEdge::BIDIRECTED, "C");
        assert_eq!(primary_path(&w).unwrap(), w);
    }

    #[test]
    fn empty_walk_errors() {
        let w = Walk {
            vertices: vec![],
            edges: vec![],
        };
        assert!(matches!(primary_path(&w), Err(Error::EmptyWalk)));
    }
}
