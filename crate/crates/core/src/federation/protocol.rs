use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::metrics::Metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Participant {
    Server,
    Client(usize),
}

/// Serialized document shared by every recipient of a broadcast.
pub type Payload = Arc<[u8]>;

/// Everything that crosses the client/server boundary. Payloads are the
/// serialized tree and rule documents or metrics; there is no variant that
/// could carry a data row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    TreeUpload(Payload),
    /// `(owner, serialized tree)` for every tree the server accepted.
    TreeBroadcast(Vec<(usize, Payload)>),
    /// `(owner, metrics)` of each received tree on the sender's data.
    EvalReport(Vec<(usize, Metrics)>),
    GlobalModel { tree: Payload, rules: Payload },
}

impl Message {
    pub fn name(&self) -> &'static str {
        match self {
            Message::TreeUpload(_) => "TreeUpload",
            Message::TreeBroadcast(_) => "TreeBroadcast",
            Message::EvalReport(_) => "EvalReport",
            Message::GlobalModel { .. } => "GlobalModel",
        }
    }

    /// Raw byte payloads, for audits.
    pub fn payloads(&self) -> Vec<&[u8]> {
        match self {
            Message::TreeUpload(b) => vec![b],
            Message::TreeBroadcast(trees) => trees.iter().map(|(_, b)| &b[..]).collect(),
            Message::EvalReport(_) => Vec::new(),
            Message::GlobalModel { tree, rules } => vec![tree, rules],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub seq: usize,
    pub from: Participant,
    pub to: Participant,
    pub message: Message,
}

/// Every message in send order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Envelope>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Messages with the server on exactly one end.
    pub fn client_server_count(&self) -> usize {
        self.messages
            .iter()
            .filter(|e| (e.from == Participant::Server) != (e.to == Participant::Server))
            .count()
    }

    pub fn count(&self, name: &str) -> usize {
        self.messages.iter().filter(|e| e.message.name() == name).count()
    }
}

/// In-memory mailboxes, one per participant. A real transport would replace
/// this type and nothing else.
#[derive(Debug, Default)]
pub struct Network {
    boxes: BTreeMap<Participant, VecDeque<Envelope>>,
    transcript: Transcript,
}

impl Network {
    pub fn send(&mut self, from: Participant, to: Participant, message: Message) {
        let env = Envelope { seq: self.transcript.len(), from, to, message };
        self.transcript.messages.push(env.clone());
        self.boxes.entry(to).or_default().push_back(env);
    }

    pub fn recv(&mut self, who: Participant) -> Option<Envelope> {
        self.boxes.get_mut(&who)?.pop_front()
    }

    /// Drains a participant's mailbox in arrival order.
    pub fn drain(&mut self, who: Participant) -> Vec<Envelope> {
        self.boxes.get_mut(&who).map(|q| q.drain(..).collect()).unwrap_or_default()
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}
