use std::cmp::Reverse;

use crate::span::DisclosureSpan;

/// Merges spans from one document into a sorted, non-overlapping list.
///
/// Same-category spans that overlap or touch are unioned. Remaining overlaps
/// between categories keep the longer span; ties keep the earlier start, then the
/// lower category.
pub fn merge_spans(spans: Vec<DisclosureSpan>) -> Vec<DisclosureSpan> {
    let mut by_cat = spans;
    by_cat.sort_by(|a, b| (a.category, a.start, a.end).cmp(&(b.category, b.start, b.end)));

    let mut unioned: Vec<DisclosureSpan> = Vec::with_capacity(by_cat.len());
    for span in by_cat {
        match unioned.last_mut() {
            Some(last) if last.category == span.category && span.start <= last.end => {
                if span.end > last.end {
                    // the snapshots overlap by `last.end - span.start` code points
                    let skip = last.end - span.start;
                    last.text.extend(span.text.chars().skip(skip));
                    last.end = span.end;
                }
            }
            _ => unioned.push(span),
        }
    }

    unioned.sort_by_key(|s| (Reverse(s.len()), s.start, s.category));
    let mut kept: Vec<DisclosureSpan> = Vec::with_capacity(unioned.len());
    for span in unioned {
        if kept.iter().all(|k| k.end <= span.start || span.end <= k.start) {
            kept.push(span);
        }
    }
    kept.sort_by_key(|s| (s.start, s.end));
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Category::{self, *};
    use proptest::prelude::*;

    const TEXT: &str = "abcdefghijklmnopqrstuvwxyz0123456789";

    fn sp(s: usize, e: usize, c: Category) -> DisclosureSpan {
        DisclosureSpan::from_text("d", TEXT, s, e, c).unwrap()
    }

    #[test]
    fn same_category_overlap_merges() {
        assert_eq!(merge_spans(vec![sp(0, 4, Age), sp(3, 8, Age)]), vec![sp(0, 8, Age)]);
    }

    #[test]
    fn adjacent_same_category_merges() {
        assert_eq!(merge_spans(vec![sp(4, 8, Age), sp(0, 4, Age)]), vec![sp(0, 8, Age)]);
    }

    #[test]
    fn longer_wins_across_categories() {
        assert_eq!(
            merge_spans(vec![sp(0, 10, Health), sp(2, 5, Location)]),
            vec![sp(0, 10, Health)]
        );
        // equal length: earlier start wins
        assert_eq!(merge_spans(vec![sp(3, 8, Pet), sp(1, 6, Finance)]), vec![sp(1, 6, Finance)]);
    }

    #[test]
    fn empty() {
        assert!(merge_spans(vec![]).is_empty());
    }

    proptest! {
        #[test]
        fn output_sorted_disjoint_and_valid(raw in prop::collection::vec((0usize..30, 1usize..6, 0usize..3), 0..12)) {
            let cats = [Age, Health, Pet];
            let spans: Vec<_> = raw.iter().map(|&(s, l, c)| sp(s, (s + l).min(TEXT.len()), cats[c])).collect();
            let merged = merge_spans(spans);
            for w in merged.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
            for s in &merged {
                prop_assert_eq!(s, &sp(s.start, s.end, s.category));
            }
        }
    }
}
