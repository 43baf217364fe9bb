use proptest::prelude::*;
use trackline::io::mot::{format_results, parse_embeddings, parse_mot, read_mot, write_embeddings, write_results};
use trackline::io::seqinfo::parse_seqinfo;
use trackline::{BBox, CueProvider, Embedding, Error, FileProvider, TrajectorySet};

fn arb_set() -> impl Strategy<Value = TrajectorySet> {
    let point = (0usize..40, -500.0f64..2000.0, -500.0f64..2000.0, 0.5f64..400.0, 0.5f64..400.0, prop::option::of(0.0f64..1.0));
    prop::collection::vec((1u64..30, prop::collection::vec(point, 1..20)), 0..12).prop_map(|tracks| {
        let mut set = TrajectorySet::new(40, 30.0);
        for (id, pts) in tracks {
            for (f, x, y, w, h, s) in pts {
                set.insert(id, f, BBox::new(x, y, w, h), s);
            }
        }
        set
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn results_roundtrip(set in arb_set()) {
        let text = format_results(&set);
        let back = parse_mot(&text, "mem").unwrap().to_trajectories(Some(set.sequence_length), set.fps);
        prop_assert_eq!(back, set);
    }

    #[test]
    fn embeddings_roundtrip(rows in prop::collection::vec((1usize..100, prop::collection::vec(-10.0f64..10.0, 6)), 1..30)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        let rows: Vec<(usize, Embedding)> = rows.into_iter().map(|(f, v)| (f, Embedding::new(v))).collect();
        write_embeddings(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        prop_assert_eq!(parse_embeddings(&text, "emb").unwrap(), rows);
    }
}

#[test]
fn results_file_roundtrip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut set = TrajectorySet::new(3, 30.0);
    set.insert(2, 0, BBox::new(1.5, 2.25, 10.0, 20.0), Some(0.75));
    set.insert(1, 2, BBox::new(-3.0, 4.0, 5.0, 6.0), None);
    let path = dir.path().join("out.txt");
    write_results(&set, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "1,2,1.5,2.25,10,20,0.75,-1,-1,-1\n3,1,-3,4,5,6,-1,-1,-1,-1\n");
    let back = read_mot(&path).unwrap().to_trajectories(Some(3), 30.0);
    assert_eq!(back, set);
}

#[test]
fn ground_truth_visibility_filter() {
    let text = "1,1,0,0,10,10,1,1,0.04\n1,2,0,0,10,10,1,1,0.05\n2,1,0,0,10,10,1,1,1.0\n";
    let seq = parse_mot(text, "gt").unwrap();
    assert_eq!(seq.row_count(), 2);
    assert_eq!(seq.data_lines, 3);
    let ids: Vec<i64> = seq.frames[&0].iter().map(|r| r.id).collect();
    assert_eq!(ids, vec![2]);
}

#[test]
fn malformed_rows_are_rejected_with_line_numbers() {
    let bad = "1,1,0,0,10,10,1\n2,1,0,0,-4,10,1\n";
    assert!(matches!(parse_mot(bad, "det"), Err(Error::NonPositiveBox { line: 2, .. })));
    let short = "1,1,0,0,10\n";
    let err = parse_mot(short, "det").unwrap_err().to_string();
    assert!(err.contains("det") && err.contains('1'), "{err}");
    assert!(parse_mot("0,1,0,0,1,1,1\n", "det").is_err());
    assert!(parse_mot("1,x,0,0,1,1,1\n", "det").is_err());
}

#[test]
fn file_provider_pairs_embeddings_with_detection_rows() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.txt");
    let emb = dir.path().join("emb.txt");
    std::fs::write(&det, "1,-1,0,0,10,10,0.9\n\n2,-1,5,5,10,10,0.8\n2,-1,50,50,10,10,0.7\n").unwrap();
    std::fs::write(&emb, "1,1,0\n2,0,1\n2,0.5,0.5\n").unwrap();
    let mut p = FileProvider::load(&det, Some(&emb), 2.0).unwrap();
    assert!(p.has_embeddings());
    assert_eq!(p.len(), 2);
    let cues = p.query(1, &Default::default()).unwrap();
    let e: Vec<_> = cues.detections.iter().map(|d| d.embedding.clone().unwrap().0).collect();
    assert_eq!(e, vec![vec![0.0, 1.0], vec![0.5, 0.5]]);

    std::fs::write(&emb, "1,1,0\n2,0,1\n").unwrap();
    assert!(matches!(FileProvider::load(&det, Some(&emb), 2.0), Err(Error::Parse { .. })));
    std::fs::write(&emb, "1,1,0\n1,0,1\n2,0.5,0.5\n").unwrap();
    assert!(FileProvider::load(&det, Some(&emb), 2.0).is_err());
    let bare = FileProvider::load(&det, None, 2.0).unwrap();
    assert!(matches!(bare.require_embeddings(), Err(Error::MissingEmbedding)));
}

#[test]
fn seqinfo_sets_length_and_rate() {
    let info = parse_seqinfo("[Sequence]\nname=MOT17-02\nframeRate=25\nseqLength=600\nimWidth=1920\n");
    assert_eq!(info.fps, Some(25.0));
    assert_eq!(info.length, Some(600));
}
