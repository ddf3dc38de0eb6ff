use hbcsense_core::counting::CountingConfig;
use hbcsense_core::ingest::{load_session_file, save_session, session_csv_bytes};
use hbcsense_core::pipeline::count_report;
use hbcsense_core::simulate::presets::{simulate_collab, simulate_dataset, CollabSpec, DatasetSpec};
use hbcsense_core::types::validate_session;

#[test]
fn simulated_sessions_survive_disk() {
    let dir = tempfile::tempdir().unwrap();
    let files = simulate_dataset(&DatasetSpec::leg7(2, 2), 17).unwrap();
    let mut loaded = Vec::new();
    for f in &files {
        assert!(validate_session(&f.session).is_empty(), "{}", f.session.meta.id);
        let path = dir.path().join(format!("{}.csv", f.session.meta.id));
        save_session(&path, &f.session, &f.repetitions).unwrap();
        let back = load_session_file(&path).unwrap();
        assert_eq!(back, *f);
        assert_eq!(session_csv_bytes(&back.session).unwrap(), std::fs::read(&path).unwrap());
        loaded.push(back);
    }
    let cfg = CountingConfig::leg_default();
    assert_eq!(
        count_report(&files, &cfg, "t", "h", 17).unwrap(),
        count_report(&loaded, &cfg, "t", "h", 17).unwrap()
    );
}

#[test]
fn collab_sessions_carry_groups() {
    let files = simulate_collab(&CollabSpec::new(vec![2, 3]), 4).unwrap();
    assert_eq!(files.len(), 5);
    let groups: std::collections::BTreeSet<_> =
        files.iter().map(|f| f.session.meta.group_id.clone().unwrap()).collect();
    assert_eq!(groups.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    save_session(&path, &files[0].session, &files[0].repetitions).unwrap();
    assert_eq!(load_session_file(&path).unwrap().session, files[0].session);
}

#[test]
fn same_seed_same_bytes() {
    let a = simulate_dataset(&DatasetSpec::gym12(1, 1), 99).unwrap();
    let b = simulate_dataset(&DatasetSpec::gym12(1, 1), 99).unwrap();
    let c = simulate_dataset(&DatasetSpec::gym12(1, 1), 100).unwrap();
    let bytes = |f: &hbcsense_core::ingest::SessionFile| session_csv_bytes(&f.session).unwrap();
    assert_eq!(bytes(&a[0]), bytes(&b[0]));
    assert_ne!(bytes(&a[0]), bytes(&c[0]));
}
