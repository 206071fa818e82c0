//! Text-complexity features of legal articles and tertile stratification.

use serde::Serialize;

use crate::ingest::LegalArticle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TextFeatures {
    /// Words per sentence over all article bodies; 0 without sentences.
    pub avg_sentence_length: f64,
    pub recital_length: usize,
    /// Internal references (same-corpus `IntRef`s).
    pub cross_reference_count: usize,
    /// References to other acts (`ExtRef`s).
    pub external_reference_count: usize,
    pub list_item_count: usize,
}

/// Sentences end at `.`, `?` or `!` followed by whitespace or the end of text.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if matches!(c, '.' | '?' | '!') {
            let at_end = chars.get(k + 1).is_none_or(|(_, n)| n.is_whitespace());
            if at_end {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if s.split_whitespace().next().is_some() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if tail.split_whitespace().next().is_some() {
        out.push(tail);
    }
    out
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn text_features(articles: &[LegalArticle]) -> TextFeatures {
    let mut sentences = 0usize;
    let mut words = 0usize;
    for a in articles {
        for s in split_sentences(&a.body_text) {
            sentences += 1;
            words += word_count(s);
        }
    }
    TextFeatures {
        avg_sentence_length: if sentences == 0 {
            0.0
        } else {
            words as f64 / sentences as f64
        },
        recital_length: articles.iter().map(|a| word_count(&a.recital_text)).sum(),
        cross_reference_count: articles.iter().map(|a| a.internal_refs.len()).sum(),
        external_reference_count: articles.iter().map(|a| a.external_refs.len()).sum(),
        list_item_count: articles.iter().map(|a| a.list_item_count).sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TextFeature {
    AvgSentenceLength,
    RecitalLength,
    CrossReferences,
    ExternalReferences,
    ListItems,
}

impl TextFeature {
    pub const ALL: [TextFeature; 5] = [
        TextFeature::AvgSentenceLength,
        TextFeature::RecitalLength,
        TextFeature::CrossReferences,
        TextFeature::ExternalReferences,
        TextFeature::ListItems,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextFeature::AvgSentenceLength => "avg_sentence_length",
            TextFeature::RecitalLength => "recital_length",
            TextFeature::CrossReferences => "cross_references",
            TextFeature::ExternalReferences => "external_references",
            TextFeature::ListItems => "list_items",
        }
    }

    pub fn value(self, f: &TextFeatures) -> f64 {
        match self {
            TextFeature::AvgSentenceLength => f.avg_sentence_length,
            TextFeature::RecitalLength => f.recital_length as f64,
            TextFeature::CrossReferences => f.cross_reference_count as f64,
            TextFeature::ExternalReferences => f.external_reference_count as f64,
            TextFeature::ListItems => f.list_item_count as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TertileRow {
    pub level: &'static str,
    pub count: usize,
    pub feature_min: f64,
    pub feature_max: f64,
    pub mean_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("tertiles need at least 3 models, got {0}")]
pub struct TertileError(pub usize);

/// Sorts `(feature, similarity)` pairs by feature (ties by similarity) and
/// splits them into three groups whose sizes differ by at most one, earlier
/// groups taking the remainder.
pub fn tertile_table(pairs: &[(f64, f64)]) -> Result<[TertileRow; 3], TertileError> {
    let n = pairs.len();
    if n < 3 {
        return Err(TertileError(n));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let base = n / 3;
    let extra = n % 3;
    let sizes = [base + usize::from(extra > 0), base + usize::from(extra > 1), base];
    let mut start = 0;
    let levels = ["Low", "Medium", "High"];
    let rows: Vec<TertileRow> = sizes
        .iter()
        .zip(levels)
        .map(|(&size, level)| {
            let group = &sorted[start..start + size];
            start += size;
            TertileRow {
                level,
                count: size,
                feature_min: group.first().map(|p| p.0).unwrap_or(0.0),
                feature_max: group.last().map(|p| p.0).unwrap_or(0.0),
                mean_similarity: group.iter().map(|p| p.1).sum::<f64>() / size as f64,
            }
        })
        .collect();
    Ok(rows.try_into().expect("three rows"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(body: &str) -> LegalArticle {
        LegalArticle {
            id: "a".into(),
            act_id: String::new(),
            title: String::new(),
            body_text: body.into(),
            recital_text: String::new(),
            internal_refs: vec!["x".into(), "y".into(), "z".into()],
            external_refs: Vec::new(),
            list_item_count: 2,
            source_xml_path: String::new(),
        }
    }

    #[test]
    fn sentence_lengths() {
        let f = text_features(&[article("Dit is een zin. Nog een zin.")]);
        assert_eq!(f.avg_sentence_length, 3.5);
        assert_eq!(
            split_sentences("Dit is een zin. Nog een zin."),
            vec!["Dit is een zin.", "Nog een zin."]
        );
        assert_eq!(f.recital_length, 0);
        assert_eq!(f.cross_reference_count, 3);
        assert_eq!(
            split_sentences("artikel 3.10 geldt. Klaar"),
            vec!["artikel 3.10 geldt.", "Klaar"]
        );
        assert_eq!(text_features(&[article("")]).avg_sentence_length, 0.0);
    }

    #[test]
    fn tertile_sizes() {
        let six: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.0)).collect();
        let t = tertile_table(&six).unwrap();
        assert_eq!(t.iter().map(|r| r.count).collect::<Vec<_>>(), vec![2, 2, 2]);
        let seven: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, 0.0)).collect();
        let t = tertile_table(&seven).unwrap();
        assert_eq!(t.iter().map(|r| r.count).collect::<Vec<_>>(), vec![3, 2, 2]);
        let eight: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 0.0)).collect();
        let t = tertile_table(&eight).unwrap();
        assert_eq!(t.iter().map(|r| r.count).collect::<Vec<_>>(), vec![3, 3, 2]);
        assert!(tertile_table(&six[..2]).is_err());
    }

    #[test]
    fn monotone_decreasing_means() {
        let pairs: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0 - i as f64 / 10.0)).collect();
        let t = tertile_table(&pairs).unwrap();
        assert!(t[0].mean_similarity > t[1].mean_similarity && t[1].mean_similarity > t[2].mean_similarity);
        assert_eq!((t[0].feature_min, t[0].feature_max), (0.0, 2.0));
    }
}
