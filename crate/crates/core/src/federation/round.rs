use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::protocol::{Message, Network, Participant, Payload, Transcript};
use super::Experiment;
use crate::aggregation::{apply_filter, build_global_tree, score_trees, CrossEvalMatrix};
use crate::dtree::DecisionTree;
use crate::fedid3::{fedid3_build, FedId3Stats};
use crate::metrics::Metrics;
use crate::rules::{extract_rules_for, fold_merge, RuleSet, Truncation};
use crate::{Error, Result};

/// Fault injection for tests of the protocol's tolerance.
#[derive(Debug, Clone, Default)]
pub struct RoundOptions {
    /// Clients whose upload is replaced by an unparseable document.
    pub corrupt_uploads: Vec<usize>,
}

/// Wall-clock seconds per phase. Kept out of the JSON report so reports stay
/// reproducible byte for byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub local_training: f64,
    pub upload_broadcast: f64,
    pub cross_evaluation: f64,
    pub aggregation: f64,
    pub global_evaluation: f64,
    pub fedid3: f64,
}

/// What the server did with the uploaded trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerSummary {
    /// Clients whose trees arrived intact, in id order.
    pub participants: Vec<usize>,
    pub cross_eval: CrossEvalMatrix,
    /// Filter score per participant.
    pub scores: Vec<f64>,
    /// Surviving client ids, strongest first (merge order).
    pub survivors: Vec<usize>,
    pub merged_rules: usize,
    pub truncations: Vec<Truncation>,
    /// True when a single tree survived and is delivered unchanged.
    pub single_survivor: bool,
    pub global_depth: usize,
    pub global_leaves: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub fold: usize,
    /// Each client's own tree on its test split.
    pub local: Option<Vec<Metrics>>,
    /// The global tree on each client's test split.
    pub global: Option<Vec<Metrics>>,
    pub server: Option<ServerSummary>,
    pub fedid3: Option<Vec<Metrics>>,
    pub fedid3_stats: Option<FedId3Stats>,
    pub messages: usize,
    #[serde(skip)]
    pub timings: PhaseTimings,
    #[serde(skip)]
    pub transcript: Transcript,
    #[serde(skip)]
    pub global_tree: Option<DecisionTree>,
    #[serde(skip)]
    pub global_rules: Option<RuleSet>,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

impl Experiment {
    /// One round of the protocol on fold `fold` of every client:
    /// local training, upload, broadcast, cross-evaluation, filtering and
    /// merging on the server, global delivery and client evaluation.
    pub fn run_round(&self, fold: usize, opts: &RoundOptions) -> Result<RoundReport> {
        let mut report = RoundReport {
            fold,
            local: None,
            global: None,
            server: None,
            fedid3: None,
            fedid3_stats: None,
            messages: 0,
            timings: PhaseTimings::default(),
            transcript: Transcript::default(),
            global_tree: None,
            global_rules: None,
        };
        if self.kind.is_some() {
            self.protocol(fold, opts, &mut report)?;
        }
        if self.categorical.is_some() {
            let t = Instant::now();
            let (metrics, stats) = self.fedid3_round(fold)?;
            report.fedid3 = Some(metrics);
            report.fedid3_stats = Some(stats);
            report.timings.fedid3 = secs(t);
        }
        Ok(report)
    }

    fn protocol(&self, fold: usize, opts: &RoundOptions, report: &mut RoundReport) -> Result<()> {
        let kind = self.kind.expect("local tree kind");
        let data = self.local.as_ref().expect("local dataset");
        let n = self.shares.len();
        let mut net = Network::default();

        // Clients train on their fold-train split.
        let t = Instant::now();
        let local_trees: Vec<DecisionTree> = (0..n)
            .into_par_iter()
            .map(|c| DecisionTree::train(data.view(self.train_rows(c, fold)), kind, &self.params))
            .collect::<Result<_>>()?;
        report.timings.local_training = secs(t);

        // Upload, then broadcast whatever the server could read.
        let t = Instant::now();
        for (c, tree) in local_trees.iter().enumerate() {
            let bytes = if opts.corrupt_uploads.contains(&c) { b"{\"kind\":".to_vec() } else { tree.serialize() };
            net.send(Participant::Client(c), Participant::Server, Message::TreeUpload(bytes.into()));
        }
        let mut accepted: Vec<(usize, Payload, DecisionTree)> = Vec::new();
        for env in net.drain(Participant::Server) {
            let (Participant::Client(c), Message::TreeUpload(bytes)) = (env.from, env.message) else {
                return Err(Error::Contract("server expected tree uploads".into()));
            };
            // An unreadable upload excludes that client instead of failing the round.
            if let Ok(tree) = DecisionTree::deserialize(&bytes) {
                accepted.push((c, bytes, tree));
            }
        }
        if accepted.is_empty() {
            return Err(Error::Contract("no client tree reached the server intact".into()));
        }
        let payload: Vec<(usize, Payload)> = accepted.iter().map(|(c, b, _)| (*c, b.clone())).collect();
        for c in 0..n {
            net.send(Participant::Server, Participant::Client(c), Message::TreeBroadcast(payload.clone()));
        }
        report.timings.upload_broadcast = secs(t);

        // Each client scores every received tree on its own training split.
        let t = Instant::now();
        let inboxes: Vec<_> = (0..n).map(|c| net.drain(Participant::Client(c))).collect();
        let reports: Vec<Vec<(usize, Metrics)>> = inboxes
            .into_par_iter()
            .enumerate()
            .map(|(c, inbox)| {
                let view = data.view(self.train_rows(c, fold));
                let mut out = Vec::new();
                for env in inbox {
                    if let Message::TreeBroadcast(trees) = env.message {
                        for (owner, bytes) in trees {
                            let tree = DecisionTree::deserialize(&bytes)?;
                            out.push((owner, tree.evaluate(view)?));
                        }
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (c, r) in reports.into_iter().enumerate() {
            net.send(Participant::Client(c), Participant::Server, Message::EvalReport(r));
        }
        report.timings.cross_evaluation = secs(t);

        // Server: filter, extract, merge, build.
        let t = Instant::now();
        let participants: Vec<usize> = accepted.iter().map(|(c, _, _)| *c).collect();
        let mut rows: Vec<Option<Vec<Metrics>>> = vec![None; n];
        for env in net.drain(Participant::Server) {
            if let (Participant::Client(c), Message::EvalReport(r)) = (env.from, env.message) {
                let row = participants
                    .iter()
                    .map(|p| r.iter().find(|(o, _)| o == p).map(|(_, m)| *m))
                    .collect::<Option<Vec<_>>>();
                rows[c] = row;
            }
        }
        let matrix = CrossEvalMatrix::new(
            participants
                .iter()
                .map(|&p| rows[p].clone().ok_or_else(|| Error::Contract(format!("missing report from client {p}"))))
                .collect::<Result<_>>()?,
        )?;
        let scores = score_trees(&matrix, &self.config.filter);
        let mut kept = apply_filter(&scores, &self.config.filter);
        kept.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(participants[a].cmp(&participants[b])));
        let survivors: Vec<usize> = kept.iter().map(|&i| participants[i]).collect();

        let sets: Vec<RuleSet> = kept.iter().map(|&i| extract_rules_for(&accepted[i].2, participants[i])).collect();
        let (global_tree, rules, truncations) = if kept.len() == 1 {
            (accepted[kept[0]].2.clone(), sets[0].clone(), Vec::new())
        } else {
            let merged = fold_merge(&sets, self.config.rule_cap).map_err(|e| match e {
                Error::DegenerateMerge { step, .. } => Error::DegenerateMerge { step, surviving: survivors.clone() },
                other => other,
            })?;
            let tree = build_global_tree(&merged.rules, &self.params)?;
            (tree, merged.rules, merged.truncations)
        };
        let tree_bytes: Payload = global_tree.serialize().into();
        let rule_bytes: Payload = rules.serialize().into();
        for c in 0..n {
            net.send(
                Participant::Server,
                Participant::Client(c),
                Message::GlobalModel { tree: tree_bytes.clone(), rules: rule_bytes.clone() },
            );
        }
        report.timings.aggregation = secs(t);

        // Clients evaluate the delivered model and their own tree on test data.
        let t = Instant::now();
        let inboxes: Vec<_> = (0..n).map(|c| net.drain(Participant::Client(c))).collect();
        let evaluated: Vec<(Metrics, Metrics)> = inboxes
            .into_par_iter()
            .enumerate()
            .map(|(c, inbox)| {
                let view = data.view(self.test_rows(c, fold));
                let global = inbox
                    .into_iter()
                    .find_map(|env| match env.message {
                        Message::GlobalModel { tree, .. } => Some(tree),
                        _ => None,
                    })
                    .ok_or_else(|| Error::Contract(format!("client {c} got no global model")))?;
                let global = DecisionTree::deserialize(&global)?;
                Ok((local_trees[c].evaluate(view)?, global.evaluate(view)?))
            })
            .collect::<Result<_>>()?;
        report.timings.global_evaluation = secs(t);

        report.local = Some(evaluated.iter().map(|e| e.0).collect());
        report.global = Some(evaluated.iter().map(|e| e.1).collect());
        report.server = Some(ServerSummary {
            participants,
            cross_eval: matrix,
            scores,
            survivors,
            merged_rules: rules.len(),
            truncations,
            single_survivor: kept.len() == 1,
            global_depth: global_tree.depth(),
            global_leaves: global_tree.leaf_count(),
        });
        let transcript = net.into_transcript();
        report.messages = transcript.client_server_count();
        report.transcript = transcript;
        report.global_tree = Some(global_tree);
        report.global_rules = Some(rules);
        Ok(())
    }

    fn fedid3_round(&self, fold: usize) -> Result<(Vec<Metrics>, FedId3Stats)> {
        let data = self.categorical.as_ref().expect("categorical dataset");
        let n = self.shares.len();
        let views: Vec<_> = (0..n).map(|c| data.view(self.train_rows(c, fold))).collect();
        let (tree, stats) = fedid3_build(&views, &self.fed_params)?;
        let metrics = (0..n)
            .into_par_iter()
            .map(|c| tree.evaluate(data.view(self.test_rows(c, fold))))
            .collect::<Result<_>>()?;
        Ok((metrics, stats))
    }
}
