use std::fmt::Write;

use crate::model::format_exact;
use crate::numeric::Rational;

use super::{conflict_edges, PartialOrder};

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(text: &str) -> String {
    format!("\"{}\"", escape(text))
}

/// Graphviz digraph of the incomparable pairs.
///
/// Objects sharing a consensus score sit on one `rank=same` row, rows listed
/// from the highest score down. Each conflicting pair gets one edge, from
/// the higher-rated object to the one the ranking puts ahead.
pub fn conflict_graph_dot(order: &PartialOrder, scores: &[Rational]) -> String {
    let objects = order.objects();
    assert_eq!(objects.len(), scores.len());

    let mut levels: Vec<Rational> = scores.to_vec();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    levels.dedup();

    let mut out = String::from("digraph conflicts {\n  rankdir=TB;\n  node [shape=box];\n");
    for level in &levels {
        let members: Vec<String> = (0..objects.len())
            .filter(|&i| scores[i] == *level)
            .map(|i| quote(objects[i].as_str()))
            .collect();
        let _ = writeln!(out, "  {{ rank=same; {}; }}", members.join("; "));
    }
    for (i, object) in objects.iter().enumerate() {
        let label = format!("\"{}\\n{}\"", escape(object.as_str()), format_exact(&scores[i]));
        let _ = writeln!(out, "  {} [label={label}];", quote(object.as_str()));
    }

    for (from, to) in conflict_edges(order, scores) {
        let _ = writeln!(out, "  {} -> {};", quote(objects[from].as_str()), quote(objects[to].as_str()));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::partial_order_from;
    use crate::model::{ObjectId, Ranking};
    use crate::numeric::{int, rational};

    #[test]
    fn single_conflict() {
        let objects: Vec<ObjectId> = vec![14.into(), 38.into(), 54.into()];
        let scores = [rational(11, 2), int(3), int(5)];
        let po = partial_order_from(&objects, &scores, &Ranking::new(vec![2, 3, 1]));
        let dot = conflict_graph_dot(&po, &scores);
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("\"14\" -> \"54\";"));
        let rows: Vec<&str> = dot.lines().filter(|l| l.contains("rank=same")).collect();
        assert_eq!(rows, ["  { rank=same; \"14\"; }", "  { rank=same; \"54\"; }", "  { rank=same; \"38\"; }"]);
        assert_eq!(dot, conflict_graph_dot(&po, &scores));
    }

    #[test]
    fn consistent_orders_have_no_edges() {
        let objects: Vec<ObjectId> = vec![1.into(), 2.into(), 3.into()];
        let scores = [int(4), int(4), int(2)];
        let po = partial_order_from(&objects, &scores, &Ranking::new(vec![1, 1, 3]));
        let dot = conflict_graph_dot(&po, &scores);
        assert!(!dot.contains("->"));
        assert!(dot.contains("{ rank=same; \"1\"; \"2\"; }"));
    }
}
