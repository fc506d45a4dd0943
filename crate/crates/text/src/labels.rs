use std::collections::HashMap;

/// A closed, ordered set of string labels (tags, relations, POS).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    /// Distinct labels in sorted order.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v: Vec<String> = labels.into_iter().map(|s| s.as_ref().to_string()).collect();
        v.sort();
        v.dedup();
        Self::from_ordered(v)
    }

    /// Keeps the given order; duplicates after the first are dropped.
    pub fn from_ordered(labels: Vec<String>) -> Self {
        let mut out = LabelSet::default();
        for l in labels {
            out.push(&l);
        }
        out
    }

    /// Adds `label` if missing and returns its id.
    pub fn push(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        self.index.insert(label.to_string(), self.labels.len());
        self.labels.push(label.to_string());
        self.labels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}
