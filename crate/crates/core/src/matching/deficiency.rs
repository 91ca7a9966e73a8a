/// One row of the suffix table: providers `i..=m` (1-based, ascending τ)
/// against the jobs whose threshold is at least `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuffixRow {
    pub index: usize,
    pub jobs: usize,
    pub providers: usize,
}

impl SuffixRow {
    pub fn deficit(&self) -> usize {
        self.jobs.saturating_sub(self.providers)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deficiency {
    pub delta: usize,
    /// Per job, the first provider (1-based, ascending τ) able to finish it;
    /// `m + 1` when none can.
    pub thresholds: Vec<usize>,
    pub suffix: Vec<SuffixRow>,
    /// `n - Δ`, the number of feasible matches GSM makes.
    pub predicted: usize,
}

pub fn deficiency(taus: &[u32], jobs: &[u32]) -> Deficiency {
    let mut sorted = taus.to_vec();
    sorted.sort_unstable();
    let m = sorted.len();
    let thresholds: Vec<usize> = jobs.iter().map(|&w| sorted.partition_point(|&t| t < w) + 1).collect();
    let suffix: Vec<SuffixRow> = (1..=m + 1)
        .map(|i| SuffixRow { index: i, jobs: thresholds.iter().filter(|&&t| t >= i).count(), providers: m + 1 - i })
        .collect();
    let delta = suffix.iter().map(SuffixRow::deficit).max().unwrap_or(0);
    Deficiency { delta, thresholds, predicted: jobs.len() - delta, suffix }
}
