//! Constructed record sets with known structure, for demos and checks of
//! the clustering pipeline.

use crate::cluster::Zone;
use crate::model::{table2_records, IncidentRecord, VolumeVs30d};
use crate::rng::PortableRng;

struct Blob {
    zone: Zone,
    center: [f64; 6],
    spread: f64,
}

// total buy, total sell, AI buy, AI sell, price range, volume vs 30-day avg
const BLOBS: [Blob; 5] = [
    Blob { zone: Zone::Stable, center: [12.0, 12.0, 5.0, 5.0, 2.0, 100.0], spread: 0.5 },
    Blob { zone: Zone::Anomalous, center: [30.0, 28.0, 23.0, 21.0, 24.0, 190.0], spread: 0.8 },
    Blob { zone: Zone::TransitionA, center: [25.0, 23.0, 13.0, 12.0, 16.0, 50.0], spread: 0.8 },
    Blob { zone: Zone::Irregular, center: [20.0, 20.0, 8.0, 8.0, 12.0, 150.0], spread: 2.0 },
    Blob { zone: Zone::Strategic, center: [45.0, 45.0, 27.0, 27.0, 6.0, 125.0], spread: 0.25 },
];
const FEATURE_SCALE: [f64; 6] = [1.0, 1.0, 1.0, 1.0, 1.0, 5.0];

/// Five well-separated Gaussian blobs whose centroid profiles match the
/// zone rules: one high-AI-share, high-volatility group, one quiet group at
/// the 30-day average, one widely scattered, one tight, and one in between.
/// Returns strict-valid records (serials 1..) and the intended zone of each.
pub fn five_zone_blobs(per_blob: usize, seed: u64) -> (Vec<IncidentRecord>, Vec<Zone>) {
    let base = table2_records()[0].clone();
    let mut rng = PortableRng::seed_from_u64(seed);
    let round = |v: f64| (v * 10.0).round() / 10.0;
    let mut records = Vec::with_capacity(per_blob * BLOBS.len());
    let mut zones = Vec::with_capacity(per_blob * BLOBS.len());
    for blob in &BLOBS {
        for _ in 0..per_blob {
            let mut v = [0.0; 6];
            for j in 0..6 {
                v[j] = round((blob.center[j] + blob.spread * FEATURE_SCALE[j] * rng.standard_normal()).max(0.0));
            }
            for share in v.iter_mut().take(5) {
                *share = share.min(100.0);
            }
            v[2] = v[2].min(v[0]);
            v[3] = v[3].min(v[1]);
            let mut r = base.clone();
            r.serial_no = Some(records.len() as u64 + 1);
            r.total_buy_volume_pct = v[0];
            r.total_sell_volume_pct = v[1];
            r.ai_buy_volume_pct = v[2];
            r.ai_sell_volume_pct = v[3];
            r.price_range_pct = v[4];
            r.volume_vs_30d = VolumeVs30d::Exact(v[5]);
            records.push(r);
            zones.push(blob.zone);
        }
    }
    (records, zones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_record, ValidationMode};

    #[test]
    fn blobs_are_valid_and_sized() {
        let (records, zones) = five_zone_blobs(20, 1);
        assert_eq!(records.len(), 100);
        assert_eq!(zones.iter().filter(|&&z| z == Zone::Strategic).count(), 20);
        assert!(records.iter().all(|r| validate_record(r, ValidationMode::Strict).ok));
    }
}
