//! Federated-ID3 baseline: one ID3 tree grown by the server from class
//! counts that clients aggregate over their own rows. No rows, and no row
//! identifiers, leave a client.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataView, Schema};
use crate::dtree::{argmax, choose_categorical_split, Branch, DecisionTree, Node, Split, TrainParams, TreeKind};
use crate::{Error, Result};

/// Counts wanted for one tree node: rows matching every `(feature, symbol)`
/// constraint, broken down by the `target` feature's symbol (or just by
/// class when `target` is `None`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountQuery {
    pub node: usize,
    pub constraints: Vec<(usize, u32)>,
    pub target: Option<usize>,
}

/// `counts[symbol][class]`; a single row when the query had no target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountReply {
    pub node: usize,
    pub target: Option<usize>,
    pub counts: Vec<Vec<u64>>,
}

/// A client's exact answer to one query over its local rows.
pub fn client_counts(view: DataView<'_>, q: &CountQuery) -> CountReply {
    let schema = view.schema();
    let k = schema.class_count();
    let width = q.target.map_or(1, |f| schema.features[f].symbols.len());
    let mut counts = vec![vec![0u64; k]; width];
    for row in view.rows() {
        let matches = q.constraints.iter().all(|&(f, s)| row.values[f].as_symbol() == Some(s));
        if !matches {
            continue;
        }
        let slot = match q.target {
            Some(f) => row.values[f].as_symbol().expect("categorical value") as usize,
            None => 0,
        };
        counts[slot][row.class] += 1;
    }
    CountReply { node: q.node, target: q.target, counts }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FedId3Stats {
    /// Query/reply exchanges, one per tree level.
    pub exchanges: usize,
    /// Client-server messages (a query batch and a reply per client per level).
    pub messages: usize,
    pub queries: usize,
}

struct Pending {
    slot: usize,
    constraints: Vec<(usize, u32)>,
    depth: usize,
    fallback: usize,
}

enum Slot {
    Empty,
    Leaf(Vec<f64>),
    Split { feature: usize, children: Vec<(u32, usize)> },
}

fn sum_replies(replies: &[Vec<CountReply>], idx: usize) -> Vec<Vec<u64>> {
    let mut total = replies[0][idx].counts.clone();
    for client in &replies[1..] {
        for (t, r) in total.iter_mut().zip(&client[idx].counts) {
            for (a, b) in t.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
    total
}

/// Grows the tree level by level. Each level sends every client one batch of
/// queries (class counts plus one table per unused feature for every open
/// node) and sums the replies; the split rule is the one `train_id3` uses,
/// so the result equals ID3 on the pooled rows.
pub fn fedid3_build(clients: &[DataView<'_>], params: &TrainParams) -> Result<(DecisionTree, FedId3Stats)> {
    let Some(first) = clients.first() else {
        return Err(Error::Config("Federated-ID3 needs at least one client".into()));
    };
    let schema: &Schema = first.schema();
    if clients.iter().any(|c| c.schema() != schema) {
        return Err(Error::Schema("clients disagree on the schema".into()));
    }
    if !schema.all_categorical() {
        return Err(Error::Schema("Federated-ID3 needs categorical features".into()));
    }
    let k = schema.class_count();
    let mut slots = vec![Slot::Empty];
    let mut frontier = vec![Pending { slot: 0, constraints: Vec::new(), depth: 0, fallback: 0 }];
    let mut stats = FedId3Stats::default();

    while !frontier.is_empty() {
        let mut queries = Vec::new();
        let mut ranges = Vec::with_capacity(frontier.len());
        for p in &frontier {
            let start = queries.len();
            queries.push(CountQuery { node: p.slot, constraints: p.constraints.clone(), target: None });
            if p.depth < params.max_depth {
                for f in 0..schema.feature_count() {
                    if !p.constraints.iter().any(|&(u, _)| u == f) {
                        queries.push(CountQuery { node: p.slot, constraints: p.constraints.clone(), target: Some(f) });
                    }
                }
            }
            ranges.push(start..queries.len());
        }
        let replies: Vec<Vec<CountReply>> = clients
            .par_iter()
            .map(|c| queries.iter().map(|q| client_counts(*c, q)).collect())
            .collect();
        stats.exchanges += 1;
        stats.messages += 2 * clients.len();
        stats.queries += queries.len();

        let mut next = Vec::new();
        for (p, range) in frontier.iter().zip(ranges) {
            let counts: Vec<u64> = sum_replies(&replies, range.start).remove(0);
            let total: u64 = counts.iter().sum();
            if total == 0 {
                let mut dist = vec![0.0; k];
                dist[p.fallback] = 1.0;
                slots[p.slot] = Slot::Leaf(dist);
                continue;
            }
            let dist: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || p.depth >= params.max_depth {
                slots[p.slot] = Slot::Leaf(dist);
                continue;
            }
            let tables: Vec<(usize, Vec<Vec<u64>>)> = range
                .clone()
                .skip(1)
                .map(|i| (queries[i].target.expect("feature query"), sum_replies(&replies, i)))
                .collect();
            let Some(feature) = choose_categorical_split(&counts, &tables, params.min_leaf as u64) else {
                slots[p.slot] = Slot::Leaf(dist);
                continue;
            };
            let table = &tables.iter().find(|(f, _)| *f == feature).expect("chosen feature").1;
            let majority = argmax(&dist);
            let mut children = Vec::new();
            for (s, row) in table.iter().enumerate() {
                if row.iter().sum::<u64>() == 0 {
                    continue;
                }
                let slot = slots.len();
                slots.push(Slot::Empty);
                let mut constraints = p.constraints.clone();
                constraints.push((feature, s as u32));
                children.push((s as u32, slot));
                next.push(Pending { slot, constraints, depth: p.depth + 1, fallback: majority });
            }
            slots[p.slot] = Slot::Split { feature, children };
        }
        frontier = next;
    }

    let node = assemble(&mut slots, 0);
    Ok((DecisionTree { kind: TreeKind::Id3, max_depth: params.max_depth, node }, stats))
}

fn assemble(slots: &mut [Slot], i: usize) -> Node {
    match std::mem::replace(&mut slots[i], Slot::Empty) {
        Slot::Leaf(dist) => Node::leaf(dist),
        Slot::Split { feature, children } => Node::Split(Split::Multiway {
            feature,
            branches: children.into_iter().map(|(value, c)| Branch { value, node: assemble(slots, c) }).collect(),
            default: None,
        }),
        Slot::Empty => unreachable!("every slot is filled before assembly"),
    }
}
