use serde::{Deserialize, Serialize};

use super::{CodelengthTrace, Direction};

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub language: String,
    pub direction: Direction,
    pub seed: u64,
    #[serde(rename = "L_cond")]
    pub l_cond: f64,
    #[serde(rename = "L_uncond")]
    pub l_uncond: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "I_bits")]
    pub i_bits: f64,
}

/// `iteration,bits,cumulative_bits`, iterations counted from 1.
pub fn trace_csv(trace: &CodelengthTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "bits", "cumulative_bits"]).expect("in-memory write");
    for (i, (b, c)) in trace.per_batch_bits.iter().zip(trace.cumulative()).enumerate() {
        w.serialize((i + 1, b, c)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    if rows.is_empty() {
        w.write_record(["language", "direction", "seed", "L_cond", "L_uncond", "C", "I_bits"])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_roundtrip() {
        let rows = vec![
            ResultRow {
                language: "ko".into(),
                direction: Direction::OrthToPhon,
                seed: 3,
                l_cond: 12.5,
                l_uncond: 100.25,
                c: 1.0 - 12.5 / 100.25,
                i_bits: 87.75,
            },
            ResultRow {
                language: "en".into(),
                direction: Direction::PhonToOrth,
                seed: 40,
                l_cond: 0.1,
                l_uncond: 0.3,
                c: 1.0 - 0.1 / 0.3,
                i_bits: 0.3 - 0.1,
            },
        ];
        let text = results_csv(&rows);
        assert!(text.starts_with("language,direction,seed,L_cond,L_uncond,C,I_bits\n"));
        assert!(text.contains(",o2p,"));
        assert_eq!(parse_results_csv(&text).unwrap(), rows);
        assert_eq!(parse_results_csv(&results_csv(&[])).unwrap(), vec![]);
    }

    #[test]
    fn trace_table() {
        let mut t = CodelengthTrace::new(false, 0);
        t.per_batch_bits = vec![1.5, 2.0];
        assert_eq!(trace_csv(&t), "iteration,bits,cumulative_bits\n1,1.5,1.5\n2,2.0,3.5\n");
    }
}
