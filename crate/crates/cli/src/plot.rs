use std::io::Write;

use anyhow::{bail, Result};

use ifaudit_core::population::ScoredPopulation;

#[derive(Debug, Clone, PartialEq)]
pub struct HistRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub group: String,
    pub count_before: usize,
    pub count_after: usize,
}

/// Equal-width bins over the joint before/after score range, one row per
/// (bin, group). The last bin is closed on the right.
pub fn histogram(
    groups: &[String],
    before: &ScoredPopulation,
    after: &ScoredPopulation,
    bins: usize,
) -> Result<Vec<HistRow>> {
    if bins == 0 {
        bail!("--bins must be >= 1");
    }
    let all = before.scores().iter().chain(after.scores());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0 / bins as f64
    };
    let bin_of = |s: f64| (((s - lo) / width) as usize).min(bins - 1);

    let gi = |g: &str| {
        groups
            .iter()
            .position(|h| h == g)
            .expect("group from population")
    };
    let mut counts = vec![[0usize; 2]; bins * groups.len()];
    for (epoch, sp) in [before, after].into_iter().enumerate() {
        for (ind, s) in sp.iter() {
            counts[bin_of(s) * groups.len() + gi(&ind.group)][epoch] += 1;
        }
    }
    let mut rows = Vec::with_capacity(counts.len());
    for b in 0..bins {
        for (g, group) in groups.iter().enumerate() {
            let [count_before, count_after] = counts[b * groups.len() + g];
            rows.push(HistRow {
                bin_lo: lo + b as f64 * width,
                bin_hi: if b + 1 == bins && hi > lo {
                    hi
                } else {
                    lo + (b + 1) as f64 * width
                },
                group: group.clone(),
                count_before,
                count_after,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[HistRow], mut w: W) -> Result<()> {
    writeln!(w, "bin_lo,bin_hi,group,count_before,count_after")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.bin_lo, r.bin_hi, r.group, r.count_before, r.count_after
        )?;
    }
    w.flush()?;
    Ok(())
}
