// Temporary calibration pilot; not part of the deliverable.
use orbitstat::hitstats::*;
use orbitstat::poisson::*;
use orbitstat::*;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "c1" => c1(),
        "c3" => c3(),
        "c4" => c4(),
        "neg" => neg(),
        _ => println!("pilots: c1 c3 c4 neg"),
    }
}

fn c1() {
    // criterion 1: doubling, 5 centers, r = 2^-12 vs 2^-6
    let spec = SystemSpec::doubling();
    let t0 = Instant::now();
    for seed in [42u64] {
        for c in 0..5u64 {
            let center_stream = RngStream::new(seed, c);
            let x = sample_invariant(&spec, &mut center_stream.rng(), 0).unwrap();
            let mut ds = vec![];
            for (i, r) in [(1u64, 2f64.powi(-12)), (2, 2f64.powi(-6))] {
                let vc = visit_count_distribution(
                    &spec,
                    &x,
                    r,
                    1.0,
                    20_000,
                    100_000,
                    &RngStream::new(seed, 100 + 10 * c + i),
                )
                .unwrap();
                let d = tv_distance(
                    &PmfView::empirical(&vc.pmf),
                    &PmfView::poisson(1.0).unwrap(),
                );
                ds.push(d);
            }
            println!(
                "seed {seed} center {c}: dtv(2^-12) = {:.4}, dtv(2^-6) = {:.4}, trend {}",
                ds[0],
                ds[1],
                ds[0] < ds[1]
            );
        }
    }
    println!("c1 wall time {:?}", t0.elapsed());
}

fn c3() {
    // criterion 3: solenoid gamma .5 theta .2, 3 centers, r=0.02, ens 1e4
    let spec = SystemSpec::solenoid(0.5, 0.2).unwrap();
    let t0 = Instant::now();
    for c in 0..3u64 {
        let mut rng = RngStream::new(42, 900 + c).rng();
        let x = sample_invariant(&spec, &mut rng, 1000).unwrap();
        let vc = visit_count_distribution(
            &spec,
            &x,
            0.02,
            1.0,
            10_000,
            200_000,
            &RngStream::new(42, 910 + c),
        )
        .unwrap();
        let d = tv_distance(
            &PmfView::empirical(&vc.pmf),
            &PmfView::poisson(1.0).unwrap(),
        );
        println!(
            "solenoid center {c}: mu = {:.5} (se {:.5}), N = {}, dtv = {:.4}",
            vc.measure.value, vc.measure.std_error, vc.horizon, d
        );
    }
    println!("c3 wall time {:?}", t0.elapsed());

    // stadium variant, criterion 2
    let spec = SystemSpec::stadium(2.0).unwrap();
    let t0 = Instant::now();
    for c in 0..3u64 {
        let mut rng = RngStream::new(42, 920 + c).rng();
        let x = sample_invariant(&spec, &mut rng, 0).unwrap();
        let vc = visit_count_distribution(
            &spec,
            &x,
            0.02,
            1.0,
            10_000,
            10_000_000,
            &RngStream::new(42, 930 + c),
        )
        .unwrap();
        let d = tv_distance(
            &PmfView::empirical(&vc.pmf),
            &PmfView::poisson(1.0).unwrap(),
        );
        println!(
            "stadium center {c}: mu = {:.6} (se {:.6}), N = {}, dtv = {:.4}",
            vc.measure.value, vc.measure.std_error, vc.horizon, d
        );
    }
    println!("c2 wall time {:?}", t0.elapsed());
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn c4() {
    // criterion 4: recurrence slopes
    let t0 = Instant::now();
    for seed in [42u64, 7, 123] {
        let spec = SystemSpec::doubling();
        let radii: Vec<f64> = (4..=16).map(|k| 2f64.powi(-k)).collect();
        let mut slopes = vec![];
        for c in 0..16u64 {
            let mut rng = RngStream::new(seed, 80 + c).rng();
            let x = sample_invariant(&spec, &mut rng, 0).unwrap();
            let rec = recurrence_rate(&spec, &x, &radii, 10_000_000).unwrap();
            slopes.push(rec.fit.slope);
        }
        println!("seed {seed} doubling: {slopes:.3?} median {:.3}", median(slopes.clone()));

        let spec = SystemSpec::stadium(2.0).unwrap();
        let radii: Vec<f64> = (4..=10).map(|k| 2f64.powi(-k)).collect();
        let mut slopes = vec![];
        for c in 0..16u64 {
            let mut rng = RngStream::new(seed, 180 + c).rng();
            let x = sample_invariant(&spec, &mut rng, 0).unwrap();
            let rec = recurrence_rate(&spec, &x, &radii, 10_000_000).unwrap();
            slopes.push(rec.fit.slope);
        }
        println!("seed {seed} stadium: {slopes:.3?} median {:.3}", median(slopes.clone()));

        let spec = SystemSpec::solenoid(0.5, 0.2).unwrap();
        let radii: Vec<f64> = (2..=7).map(|k| 2f64.powi(-k)).collect();
        let mut rec_slopes = vec![];
        let mut dim_slopes = vec![];
        for c in 0..8u64 {
            let mut rng = RngStream::new(seed, 280 + c).rng();
            let x = sample_invariant(&spec, &mut rng, 1000).unwrap();
            let rec = recurrence_rate(&spec, &x, &radii, 10_000_000).unwrap();
            let dim =
                local_dimension(&spec, &x, &radii, 200_000, &RngStream::new(seed, 290 + c))
                    .unwrap();
            rec_slopes.push(rec.fit.slope);
            dim_slopes.push(dim.fit.slope);
        }
        let rm = median(rec_slopes.clone());
        let dm = median(dim_slopes.clone());
        println!(
            "seed {seed} solenoid rec {rec_slopes:.3?} median {rm:.3}; dim {dim_slopes:.3?} median {dm:.3}; gap {:.3}",
            (rm - dm).abs()
        );
    }
    println!("c4 wall time {:?}", t0.elapsed());
}

fn neg() {
    // negative control: fixed-point center
    let spec = SystemSpec::doubling();
    let x = PhasePoint::circle(0.0);
    let vc = visit_count_distribution(
        &spec,
        &x,
        0.01,
        1.0,
        20_000,
        100_000,
        &RngStream::new(42, 500),
    )
    .unwrap();
    let d = tv_distance(
        &PmfView::empirical(&vc.pmf),
        &PmfView::poisson(1.0).unwrap(),
    );
    println!("fixed-point center: N = {}, dtv = {:.4}", vc.horizon, d);
    for k in 0..8 {
        println!(
            "  k={k}: emp {:.4} poisson {:.4}",
            vc.pmf.frequency(k),
            poisson_pmf(1.0, k).unwrap()
        );
    }

    // kac pilots
    let x = PhasePoint::circle(2f64.powi(-7));
    let kac = mean_return_time(&spec, &x, 2f64.powi(-7), 3000, 100_000, &RngStream::new(42, 501))
        .unwrap();
    println!(
        "kac doubling: mean*mu = {:.4} (exceeded {})",
        kac.mean * 2f64.powi(-6),
        kac.exceeded_members
    );

    let spec = SystemSpec::stadium(2.0).unwrap();
    let mut rng = RngStream::new(42, 502).rng();
    let x = sample_invariant(&spec, &mut rng, 0).unwrap();
    let mu = estimate_ball_measure(&spec, &x, 0.05, 10_000_000, &RngStream::new(42, 503)).unwrap();
    let kac = mean_return_time(&spec, &x, 0.05, 1000, 1_000_000, &RngStream::new(42, 504)).unwrap();
    println!(
        "kac stadium: mu = {:.6}, mean*mu = {:.4} (exceeded {})",
        mu.value,
        kac.mean * mu.value,
        kac.exceeded_members
    );
}
