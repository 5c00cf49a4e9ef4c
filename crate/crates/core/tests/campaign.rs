use std::fs;
use std::path::Path;

use morphreduce::campaign::{load_results, CampaignConfig, Campaign, SampleRecord, SampleStatus};
use morphreduce::dmd::SnapshotSet;
use serde_json::{json, Value};

const DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../demo");

fn setup(dir: &Path, config: Value) -> (Campaign, std::path::PathBuf) {
    for f in ["hull.obj", "lattice.json"] {
        fs::copy(Path::new(DEMO).join(f), dir.join(f)).unwrap();
    }
    let path = dir.join("campaign.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let (cfg, base) = CampaignConfig::load(&path).unwrap();
    (Campaign::prepare(cfg, &base).unwrap(), path)
}

fn script(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn external(dir: &Path, count: usize, body: &str, dmd: Option<Value>) -> Campaign {
    let sh = script(dir, "eval.sh", body);
    let mut cfg = json!({
        "lattice": "lattice.json",
        "base_mesh": "hull.obj",
        "samples": {"count": count, "seed": 4},
        "objective": {"kind": "external-command", "program": "sh", "args": [sh]},
        "output_dir": "run",
    });
    if let Some(d) = dmd {
        cfg["dmd"] = d;
    }
    setup(dir, cfg).0
}

#[test]
fn failing_sample_is_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let body = "case \"$1\" in */003/*) echo boom >&2; exit 3;; esac\n\
                awk -F, 'NR==2 {s=0; for (i=1;i<=NF;i++) s+=$i; printf \"%.17g\\n\", 1+s}' \"$1\"\n";
    let c = external(dir.path(), 6, body, None);
    let table = c.run().unwrap();
    assert_eq!(table.records.len(), 6);
    assert_eq!(table.ok_count(), 5);
    match &table.records[3].status {
        SampleStatus::Failed { reason } => assert!(reason.starts_with("evaluator_failed: ") && reason.contains("boom"), "{reason}"),
        s => panic!("sample 3 should fail, got {s:?}"),
    }
    for r in table.records.iter().filter(|r| r.index != 3) {
        let expected = 1.0 + r.mu.iter().sum::<f64>();
        assert!((r.outputs["resistance"] - expected).abs() < 1e-9);
        assert!(r.outputs.contains_key("trim"));
    }
    let (manifest, loaded) = load_results(&c.run_dir).unwrap();
    assert!(manifest.complete);
    assert_eq!((manifest.ok, manifest.failed), (5, 1));
    assert_eq!(loaded.records.len(), 6);
}

#[test]
fn resume_skips_completed_and_retries_failures() {
    let dir = tempfile::tempdir().unwrap();
    let marker = dir.path().join("flaky");
    let body = format!(
        "case \"$1\" in */002/*) [ -e '{m}' ] || {{ touch '{m}'; exit 1; }};; esac\necho 2.5\n",
        m = marker.display()
    );
    let c = external(dir.path(), 4, &body, None);
    let first = c.run().unwrap();
    assert_eq!(first.ok_count(), 3);

    // tamper with a completed record: a resumed run must keep it verbatim
    let rec_path = c.run_dir.join("samples/001/record.json");
    let mut rec: SampleRecord = serde_json::from_str(&fs::read_to_string(&rec_path).unwrap()).unwrap();
    rec.outputs.insert("resistance".into(), -99.0);
    fs::write(&rec_path, serde_json::to_string(&rec).unwrap()).unwrap();

    let second = c.run().unwrap();
    assert_eq!(second.ok_count(), 4);
    assert_eq!(second.records[1].outputs["resistance"], -99.0);
    assert_eq!(second.records[2].outputs["resistance"], 2.5);
}

#[test]
fn worker_count_does_not_change_results() {
    let run = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let (_, path) = setup(
            dir.path(),
            json!({
                "lattice": "lattice.json",
                "base_mesh": "hull.obj",
                "samples": {"count": 12, "seed": 8},
                "objective": {"kind": "volume-drag-proxy", "noise": 0.01, "seed": 2},
                "dmd": {},
                "output_dir": "run",
                "workers": workers,
            }),
        );
        let (cfg, base) = CampaignConfig::load(&path).unwrap();
        let table = Campaign::prepare(cfg, &base).unwrap().run().unwrap();
        let records: Vec<String> = (0..12)
            .map(|i| fs::read_to_string(dir.path().join(format!("run/samples/{i:03}/record.json"))).unwrap())
            .collect();
        (table.records, records)
    };
    let (a, ta) = run(1);
    let (b, tb) = run(3);
    assert_eq!(a.len(), 12);
    assert!(a.iter().all(|r| r.is_ok()));
    assert_eq!(ta, tb);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.outputs, y.outputs);
    }
}

#[test]
fn eight_parameter_ridge_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = setup(
        dir.path(),
        json!({
            "bounds": vec![[-0.3, 0.3]; 8],
            "samples": {"count": 130, "scheme": "uniform-random", "seed": 1},
            "objective": {"kind": "ridge", "direction": [1.0, 0.5, 0.0, 0.0, -0.25, 0.0, 0.0, 0.1]},
            "output_dir": "out",
        }),
    );
    let table = c.run().unwrap();
    assert_eq!(table.ok_count(), 130);
    assert!(table.records.iter().all(|r| r.mu.iter().all(|x| (-0.3..=0.3).contains(x))));
    let samples = table.sample_table("resistance").unwrap();
    assert_eq!(samples.len(), 130);
}

#[test]
fn external_series_feeds_the_steady_state() {
    let dir = tempfile::tempdir().unwrap();
    // rows: resistance history 4 + 0.5 e^{-t}, one auxiliary channel
    let n = 81;
    let mut data = nalgebra::DMatrix::zeros(2, n);
    for k in 0..n {
        let t = 7.0 + 0.1 * k as f64;
        data[(0, k)] = 4.0 + 0.5 * (-(t - 7.0)).exp();
        data[(1, k)] = (-(t - 7.0)).exp();
    }
    let series = SnapshotSet::new(data, 7.0, 0.1).unwrap();
    let csv = dir.path().join("history.csv");
    fs::write(&csv, series.to_csv()).unwrap();
    let body = format!("echo 1.0 '{}'\n", csv.display());
    let c = external(dir.path(), 2, &body, Some(json!({"transient": null})));
    let table = c.run().unwrap();
    assert_eq!(table.ok_count(), 2);
    for r in &table.records {
        assert_eq!(r.raw["resistance"], 1.0);
        assert!((r.outputs["resistance"] - 4.0).abs() < 1e-6, "{}", r.outputs["resistance"]);
        assert!(r.dmd.as_ref().unwrap().training_error < 1e-8);
        assert!(c.run_dir.join(r.series.as_ref().unwrap()).exists());
    }
}
