use std::collections::BTreeMap;
use std::fmt::Write;

pub(crate) struct DotNode {
    pub id: String,
    pub label: String,
    pub cluster: String,
    pub marked: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Arrow {
    None,
    Forward,
    Both,
}

pub(crate) struct DotEdge {
    pub from: String,
    pub to: String,
    pub label: &'static str,
    pub arrow: Arrow,
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn render(name: &str, clusters: &BTreeMap<String, String>, nodes: &[DotNode], edges: &[DotEdge]) -> String {
    let directed = edges.iter().any(|e| e.arrow != Arrow::None);
    let (kw, op) = if directed { ("digraph", "->") } else { ("graph", "--") };
    let mut out = String::new();
    writeln!(out, "{kw} {} {{", quote(name)).unwrap();
    writeln!(out, "  node [shape=box, fontname=\"monospace\", style=filled, fillcolor=white];").unwrap();
    let mut by_cluster: BTreeMap<&str, Vec<&DotNode>> = BTreeMap::new();
    for n in nodes {
        by_cluster.entry(&n.cluster).or_default().push(n);
    }
    for (i, (cluster, members)) in by_cluster.iter().enumerate() {
        writeln!(out, "  subgraph cluster_{i} {{").unwrap();
        if let Some(label) = clusters.get(*cluster) {
            writeln!(out, "    label={};", quote(label)).unwrap();
        }
        for n in members {
            let fill = if n.marked { ", fillcolor=lightblue" } else { "" };
            writeln!(out, "    {} [label={}{}];", quote(&n.id), quote(&n.label), fill).unwrap();
        }
        writeln!(out, "  }}").unwrap();
    }
    for e in edges {
        let dir = match e.arrow {
            Arrow::None | Arrow::Forward => "",
            Arrow::Both => ", dir=both",
        };
        writeln!(out, "  {} {op} {} [label={}{}];", quote(&e.from), quote(&e.to), quote(e.label), dir).unwrap();
    }
    out.push_str("}\n");
    out
}
