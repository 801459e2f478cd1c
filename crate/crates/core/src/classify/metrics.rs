use crate::data::ActivityLabel;

/// Rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub labels: Vec<ActivityLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<ActivityLabel>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    fn slot(&mut self, l: ActivityLabel) -> usize {
        match self.labels.iter().position(|x| *x == l) {
            Some(i) => i,
            None => {
                self.labels.push(l);
                for row in &mut self.counts {
                    row.push(0);
                }
                self.counts.push(vec![0; self.labels.len()]);
                self.labels.len() - 1
            }
        }
    }

    pub fn add(&mut self, truth: ActivityLabel, predicted: ActivityLabel) {
        let (t, p) = (self.slot(truth), self.slot(predicted));
        self.counts[t][p] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }

    pub fn support(&self, label: ActivityLabel) -> u64 {
        self.labels
            .iter()
            .position(|x| *x == label)
            .map_or(0, |i| self.counts[i].iter().sum())
    }

    /// Per-label recall; `None` for labels without support.
    pub fn recall(&self, label: ActivityLabel) -> Option<f64> {
        let i = self.labels.iter().position(|x| *x == label)?;
        let support: u64 = self.counts[i].iter().sum();
        (support > 0).then(|| self.counts[i][i] as f64 / support as f64)
    }

    /// `truth,<label…>` header followed by one row per true label.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("truth");
        for l in &self.labels {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            out.push_str(l.as_str());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ActivityLabel::*;

    #[test]
    fn perfect_and_constant_predictions() {
        let mut cm = ConfusionMatrix::new(vec![Walk, Run]);
        for l in [Walk, Run, Walk, Run] {
            cm.add(l, l);
        }
        assert_eq!(cm.accuracy(), 1.0);
        assert_eq!(cm.counts, vec![vec![2, 0], vec![0, 2]]);

        let mut cm = ConfusionMatrix::new(vec![Walk, Run]);
        for l in [Walk, Run, Walk, Run] {
            cm.add(l, Walk);
        }
        assert_eq!(cm.accuracy(), 0.5);
        assert_eq!(cm.support(Run), 2);
        assert_eq!(cm.recall(Run), Some(0.0));
        assert_eq!(cm.total(), 4);
    }

    #[test]
    fn unseen_label_extends_matrix() {
        let mut cm = ConfusionMatrix::new(vec![Walk]);
        cm.add(Sit, Walk);
        assert_eq!(cm.labels, vec![Walk, Sit]);
        assert_eq!(cm.to_csv(), "truth,WALK,SIT\nWALK,0,0\nSIT,1,0\n");
    }
}
