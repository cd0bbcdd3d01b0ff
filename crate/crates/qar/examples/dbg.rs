use qar::analysis::*;
use qar::dynamics::DissipationMode;
use qar::model::RefrigeratorFamily;

fn main() {
    let fam = RefrigeratorFamily::new(56.87, 0.1, 1e-6, 127.33, 66.25, 4.78).unwrap();
    for mode in [DissipationMode::Delocalized, DissipationMode::Localized, DissipationMode::LocalizedFlat] {
        let o = maximize_cooling_power(&fam, mode, 200).unwrap();
        println!("{mode:?}: qdot_c_max={:.4e} (target deloc 8.39e-6 / loc 1.27e-6), eps*/eC={:.4}", o.qdot_c_max, o.cop_ratio_star);
    }
    // saturation scan
    let scan = random_bound_scan(&ScanRanges::saturation(), DissipationMode::Delocalized, 200, 7).unwrap();
    println!("saturation scan: max={:.4} cooling={} noncooling={}", scan.summary.max_cop_ratio, scan.summary.n_cooling, scan.summary.n_non_cooling);
    // default 2000-scan timing
    let t0 = std::time::Instant::now();
    let scan = random_bound_scan(&ScanRanges::default(), DissipationMode::Delocalized, 2000, 7).unwrap();
    println!("default 2000: max={:.4} in {:?} (cooling {} noncooling {})", scan.summary.max_cop_ratio, t0.elapsed(), scan.summary.n_cooling, scan.summary.n_non_cooling);
    let t0 = std::time::Instant::now();
    let scan = random_bound_scan(&ScanRanges::default(), DissipationMode::LocalizedFlat, 500, 11).unwrap();
    println!("flat 500: max={:.4} in {:?}", scan.summary.max_cop_ratio, t0.elapsed());
}
