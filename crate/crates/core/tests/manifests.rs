use std::path::PathBuf;

use hbcsense_core::features::{collab_manifest, gym_manifest, leg_manifest, FeatureManifest, Modality};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("manifests").join(name)
}

fn check(name: &str, m: &FeatureManifest) {
    let mut want = serde_json::to_string_pretty(m).unwrap();
    want.push('\n');
    let path = shipped(name);
    if std::env::var_os("HBCSENSE_BLESS").is_some() {
        std::fs::write(&path, &want).unwrap();
    }
    let have = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(have, want, "{name} is stale; rerun with HBCSENSE_BLESS=1");
}

#[test]
fn shipped_manifests_match_code() {
    check("leg.json", &leg_manifest());
    check("gym.json", &gym_manifest());
    check("collab.json", &collab_manifest());
}

#[test]
fn modality_subsets_have_expected_widths() {
    let leg = leg_manifest();
    assert_eq!(leg.len(), 126);
    assert_eq!(leg.select(Modality::Hbc).0.len(), 18);
    assert_eq!(leg.select(Modality::Imu).0.len(), 108);
    let gym = gym_manifest();
    assert_eq!(gym.len(), 615);
    let (hbc, _) = gym.select(Modality::Hbc);
    let (imu, _) = gym.select(Modality::Imu);
    let (all, _) = gym.select(Modality::Combined);
    assert_eq!(all.len(), 615);
    let mixed = gym.features.iter().filter(|f| f.sensors.len() > 1 && f.sensors.contains(&hbcsense_core::features::SensorGroup::Hbc)).count();
    assert_eq!(hbc.len() + imu.len() + mixed, 615);
}

#[test]
fn subset_hash_differs_from_full() {
    let leg = leg_manifest();
    let (hbc, cols) = leg.select(Modality::Hbc);
    assert_ne!(hbc.hash, leg.hash);
    assert!(cols.windows(2).all(|w| w[0] < w[1]));
    let names = leg.names();
    for (f, &c) in hbc.features.iter().zip(&cols) {
        assert_eq!(f.name, names[c]);
    }
}
