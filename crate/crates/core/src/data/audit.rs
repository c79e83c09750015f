use std::sync::{Arc, Mutex};

use super::SplitTag;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub stage: String,
    pub split: SplitTag,
}

/// Shared log of which pipeline stage consumed which split.
///
/// Clones share the same log. Each `(stage, split)` pair is recorded once,
/// in first-access order.
#[derive(Clone, Debug, Default)]
pub struct SplitAudit {
    entries: Arc<Mutex<Vec<AuditEntry>>>,
}

impl SplitAudit {
    pub fn record(&self, stage: &str, split: SplitTag) {
        let mut entries = self.entries.lock().expect("audit lock poisoned");
        if !entries.iter().any(|e| e.stage == stage && e.split == split) {
            entries.push(AuditEntry {
                stage: stage.to_owned(),
                split,
            });
        }
    }

    pub fn entries(&self) -> Vec<AuditEntry> {
        self.entries.lock().expect("audit lock poisoned").clone()
    }

    pub fn touched(&self, split: SplitTag) -> bool {
        self.entries().iter().any(|e| e.split == split)
    }

    /// Stages that read `split`, in order.
    pub fn readers(&self, split: SplitTag) -> Vec<String> {
        self.entries()
            .into_iter()
            .filter(|e| e.split == split)
            .map(|e| e.stage)
            .collect()
    }
}
