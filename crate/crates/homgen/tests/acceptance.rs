mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::{lattice_points_outside, project_polygon, texture, write_sequence};
use homgen::report::{report_from_json, report_to_json};
use homgen_core::classical::{estimate_pair, ransac_homography, EstimatorConfig, RansacConfig};
use homgen_core::endoscopy::{
    fit_circle, fit_circle_trimmed, sample_boundary_points, BoundaryParams, BoundarySamples, Circle,
};
use homgen_core::eval::{cdf_thresholds, mpd, EvalReport, DEFAULT_PERCENTILES};
use homgen_core::generation::{generate_motion, generate_seeded, sample_crop_polygon, HomGenConfig};
use homgen_core::geometry::rect_corners;
use homgen_core::homography::{
    four_point_to_matrix, matrix_to_four_point, solve_dlt, Correspondence, FourPointHomography, Homography,
};
use homgen_core::image::{masked_mean_abs_diff, warp_image, warp_image_with_mask, ImageBuffer};
use homgen_core::pipeline::{sample_from_seed, AugmentationPolicy, FrameSource, PipelineConfig};
use homgen_core::rng::{derive_seed, rng_from_seed};
use homgen_core::Point2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn corners_240x320() -> [Point2; 4] {
    rect_corners(0.0, 0.0, 320.0, 240.0)
}

/// Random homography close enough to a camera motion to stay well conditioned.
fn random_homography(rng: &mut impl Rng) -> Homography {
    let s = rng.gen_range(0.8..1.25);
    let a = rng.gen_range(-0.3..0.3f64);
    let rows = [
        [s * a.cos() + rng.gen_range(-0.1..0.1), -s * a.sin() + rng.gen_range(-0.1..0.1), rng.gen_range(-60.0..60.0)],
        [s * a.sin() + rng.gen_range(-0.1..0.1), s * a.cos() + rng.gen_range(-0.1..0.1), rng.gen_range(-60.0..60.0)],
        [rng.gen_range(-5e-4..5e-4), rng.gen_range(-5e-4..5e-4), 1.0],
    ];
    Homography::from_rows(rows).unwrap()
}

fn condition_number(g: &Homography) -> f64 {
    let sv = g.matrix().svd(false, false).singular_values;
    sv.max() / sv.min()
}

fn dlt_exactness() -> Outcome {
    let mut rng = rng_from_seed(101);
    let corners = corners_240x320();
    let start = Instant::now();
    let (mut worst, mut worst_cond, mut n) = (0.0f64, 0.0f64, 0);
    while n < 10_000 {
        let g = random_homography(&mut rng);
        let cond = condition_number(&g);
        if cond >= 1e6 {
            continue;
        }
        n += 1;
        worst_cond = worst_cond.max(cond);
        let inv = Homography::new(g.matrix().try_inverse().unwrap()).unwrap();
        let corr: Vec<Correspondence> =
            corners.iter().map(|p| Correspondence::new(*p, inv.warp_point(*p).unwrap())).collect();
        match solve_dlt(&corr) {
            Ok(est) => worst = worst.max(est.max_normalized_diff(&g)),
            Err(e) => return outcome(false, format!("DLT failed on sample {n}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && secs < 10.0,
        format!("10000 homographies (max condition {worst_cond:.1}): max entry error {worst:.2e}, {secs:.2} s"),
    )
}

fn four_point_round_trip() -> Outcome {
    let mut rng = rng_from_seed(202);
    let corners = corners_240x320();
    let (mut worst, mut failures) = (0.0f64, 0);
    for _ in 0..10_000 {
        let mut fp = FourPointHomography::zero();
        for d in fp.deltas.iter_mut() {
            *d = [rng.gen_range(-128.0..=128.0), rng.gen_range(-128.0..=128.0)];
        }
        match four_point_to_matrix(&fp, &corners).and_then(|g| matrix_to_four_point(&g, &corners)) {
            Ok(back) => worst = worst.max(back.max_abs_diff(&fp)),
            Err(_) => failures += 1,
        }
    }
    outcome(
        worst < 1e-6 && failures == 0,
        format!("10000 four-points with |delta| <= 128: max error {worst:.2e} px, {failures} errors"),
    )
}

fn containment_soundness() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for rho in [32.0, 48.0, 64.0] {
        let (mut fallbacks, mut violations) = (0, 0);
        for i in 0..10_000u64 {
            let cfg = HomGenConfig {
                edge_deviation: rho,
                seed: derive_seed(rho as u64, i),
                ..HomGenConfig::default()
            };
            let m = generate_seeded(&cfg).unwrap();
            if m.fallback {
                fallbacks += 1;
                continue;
            }
            let border = cfg.border_polygon();
            let ok = project_polygon(&m.g_inverse.to_row_major(), border.vertices())
                .map(|warped| lattice_points_outside(&warped, m.crop_polygon.vertices()) == 0)
                .unwrap_or(false);
            if !ok {
                violations += 1;
            }
        }
        let rate = fallbacks as f64 / 100.0;
        pass &= violations == 0;
        if rho == 32.0 {
            pass &= rate < 1.0;
        }
        parts.push(format!("rho {rho}: {violations} oracle violations, fallback {rate:.2}%"));
    }
    outcome(pass, parts.join("; "))
}

fn circle_points(c: &Circle, n: usize, rng: &mut impl Rng) -> Vec<Point2> {
    (0..n)
        .map(|_| {
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Point2::new(c.center.x + c.radius * t.cos(), c.center.y + c.radius * t.sin())
        })
        .collect()
}

fn random_circle(rng: &mut impl Rng) -> Circle {
    Circle {
        center: Point2::new(rng.gen_range(100.0..540.0), rng.gen_range(100.0..380.0)),
        radius: rng.gen_range(60.0..260.0),
    }
}

/// Bright textured disk on a black background, 4x4 supersampled at the rim.
fn render_disk(h: usize, w: usize, c: &Circle, seed: u64) -> ImageBuffer {
    let tex = texture(h, w, seed);
    ImageBuffer::from_fn(h, w, 3, |r, col, k| {
        let mut inside = 0;
        for sy in 0..4 {
            for sx in 0..4 {
                let x = col as f64 + (sx as f64 + 0.5) / 4.0;
                let y = r as f64 + (sy as f64 + 0.5) / 4.0;
                if (x - c.center.x).hypot(y - c.center.y) <= c.radius {
                    inside += 1;
                }
            }
        }
        ((40.0 + 0.8 * tex.get(r, col, k) as f64) * inside as f64 / 16.0).round() as u8
    })
    .unwrap()
}

fn circle_fit() -> Outcome {
    let mut rng = rng_from_seed(404);
    let mut exact_worst = 0.0f64;
    for _ in 0..1000 {
        let c = random_circle(&mut rng);
        let pts = circle_points(&c, rng.gen_range(3..64), &mut rng);
        let fit = fit_circle(&BoundarySamples { points: pts.clone() }).unwrap();
        let res = pts.iter().map(|p| fit.residual(*p).abs()).fold(0.0, f64::max);
        exact_worst = exact_worst.max(res);
    }

    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut noisy_worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(4040, seed));
        let c = random_circle(&mut rng);
        let pts: Vec<Point2> = circle_points(&c, 360, &mut rng)
            .into_iter()
            .map(|p| p.offset(noise.sample(&mut rng), noise.sample(&mut rng)))
            .collect();
        let fit = fit_circle(&BoundarySamples { points: pts }).unwrap();
        noisy_worst = noisy_worst
            .max(fit.center.distance(c.center))
            .max((fit.radius - c.radius).abs());
    }

    let mut image_worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(derive_seed(4041, seed));
        let c = Circle {
            center: Point2::new(rng.gen_range(300.0..340.0), rng.gen_range(220.0..260.0)),
            radius: rng.gen_range(180.0..225.0),
        };
        let img = render_disk(480, 640, &c, seed);
        let params = BoundaryParams { seed, ..BoundaryParams::default() };
        let samples = sample_boundary_points(&img, homgen_core::endoscopy::DEFAULT_RAY_COUNT, &params).unwrap();
        let fit = fit_circle_trimmed(&samples).unwrap();
        image_worst = image_worst
            .max(fit.center.distance(c.center))
            .max((fit.radius - c.radius).abs());
    }

    let fixture = fit_circle(&BoundarySamples {
        points: vec![
            Point2::new(7.0, 3.0),
            Point2::new(-3.0, 3.0),
            Point2::new(2.0, 8.0),
            Point2::new(2.0, -2.0),
        ],
    })
    .unwrap();
    let fixture_ok = fixture.center == Point2::new(2.0, 3.0) && fixture.radius == 5.0;

    outcome(
        exact_worst < 1e-9 && noisy_worst < 0.5 && image_worst < 0.5 && fixture_ok,
        format!(
            "exact residual {exact_worst:.2e}; noisy (sigma 1 px, 100 seeds) error {noisy_worst:.3} px; \
             rendered disks error {image_worst:.3} px; fixture center ({}, {}) r {}",
            fixture.center.x, fixture.center.y, fixture.radius
        ),
    )
}

fn ransac_robustness() -> Outcome {
    let corners = corners_240x320();
    let mut good = 0;
    let mut worst = 0.0f64;
    let mut zero_outlier_worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(505, seed));
        let g = random_homography(&mut rng);
        let inv = g.invert().unwrap();
        let mut corr: Vec<Correspondence> = (0..100)
            .map(|_| {
                let p = Point2::new(rng.gen_range(0.0..320.0), rng.gen_range(0.0..240.0));
                Correspondence::new(p, inv.warp_point(p).unwrap())
            })
            .collect();
        let inliers = corr.clone();
        for _ in 0..40 {
            let p = Point2::new(rng.gen_range(0.0..320.0), rng.gen_range(0.0..240.0));
            let q = Point2::new(rng.gen_range(0.0..320.0), rng.gen_range(0.0..240.0));
            corr.insert(rng.gen_range(0..=corr.len()), Correspondence::new(p, q));
        }
        let cfg = RansacConfig { seed, ..RansacConfig::default() };
        let truth = matrix_to_four_point(&g, &corners).unwrap();
        let err = ransac_homography(&corr, &cfg)
            .and_then(|r| matrix_to_four_point(&r.homography, &corners))
            .map(|fp| mpd(&fp, &truth))
            .unwrap_or(f64::INFINITY);
        worst = worst.max(err);
        if err < 0.5 {
            good += 1;
        }

        let full = solve_dlt(&inliers).unwrap();
        let robust = ransac_homography(&inliers, &cfg).unwrap();
        zero_outlier_worst = zero_outlier_worst.max(robust.homography.max_normalized_diff(&full));
    }
    outcome(
        good >= 99 && zero_outlier_worst < 1e-9,
        format!(
            "{good}/100 seeds with MPD < 0.5 px (worst {worst:.2e}); zero outliers vs DLT {zero_outlier_worst:.2e}"
        ),
    )
}

/// Single-frame sequences, so every drawn pair is static.
struct StaticFrames(Vec<ImageBuffer>);

impl FrameSource for StaticFrames {
    fn sequence_count(&self) -> usize {
        self.0.len()
    }
    fn sequence_len(&self, _: usize) -> usize {
        1
    }
    fn frame(&self, sequence: usize, _: usize) -> homgen_core::Result<ImageBuffer> {
        Ok(self.0[sequence].clone())
    }
}

fn label_soundness() -> Outcome {
    let cfg = PipelineConfig {
        augmentation: AugmentationPolicy::disabled(),
        ..PipelineConfig::default()
    };
    let (h, w) = (cfg.pre_resize.height as usize, cfg.pre_resize.width as usize);
    let source = StaticFrames((0..8).map(|s| texture(h, w, 600 + s)).collect());
    let (ch, cw) = (cfg.homgen.crop_height as usize, cfg.homgen.crop_width as usize);
    let local = rect_corners(0.0, 0.0, cw as f64, ch as f64);
    let (mut worst_mae, mut fill, mut fallbacks, mut non_static) = (0.0f64, 0usize, 0, 0);
    for i in 0..1000u64 {
        let s = sample_from_seed(&source, &cfg, derive_seed(606, i)).unwrap();
        if s.t() != 0 {
            non_static += 1;
        }
        let sample = s.sample;
        if sample.motion.fallback {
            fallbacks += 1;
        } else {
            fill += sample.fill_pixels;
        }
        let g = four_point_to_matrix(&sample.label, &local).unwrap();
        let back = warp_image_with_mask(&sample.warped_offset_crop, &g, ch, cw).unwrap();
        let mae = masked_mean_abs_diff(&back.image, &sample.anchor_crop, &back.valid).unwrap_or(f64::INFINITY);
        worst_mae = worst_mae.max(mae);
    }
    outcome(
        worst_mae < 3.0 && fill == 0 && non_static == 0,
        format!(
            "1000 static samples: worst MAE {worst_mae:.3}, fill pixels {fill} (fallbacks {fallbacks})"
        ),
    )
}

fn metric_fixtures() -> Outcome {
    let gt = FourPointHomography::new([[1.5, -2.0], [0.0, 0.0], [-7.0, 3.0], [12.0, 9.0]]);
    let mut shifted = gt;
    for d in shifted.deltas.iter_mut() {
        d[0] += 3.0;
        d[1] += 4.0;
    }
    let mpd_ok = mpd(&shifted, &gt) == 5.0;

    let ramp: Vec<f64> = (1..=10).map(f64::from).collect();
    let thresholds = cdf_thresholds(&ramp, &DEFAULT_PERCENTILES).unwrap();
    let ramp_ok = thresholds == vec![(30.0, 3.0), (50.0, 5.0), (70.0, 7.0), (90.0, 9.0)];

    let mut rng = rng_from_seed(707);
    let mut identity_worst = 0.0f64;
    for _ in 0..1000 {
        let mut fp = FourPointHomography::zero();
        for d in fp.deltas.iter_mut() {
            *d = [rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)];
        }
        let direct = fp.deltas.iter().map(|d| d[0].hypot(d[1])).sum::<f64>() / 4.0;
        identity_worst = identity_worst.max((mpd(&FourPointHomography::zero(), &fp) - direct).abs());
    }

    let published = EvalReport {
        count: 0,
        thresholds: vec![(30.0, 1.00), (50.0, 1.26), (70.0, 1.59), (90.0, 2.15)],
        mpds: Vec::new(),
    };
    let text = serde_json::to_string(&report_to_json(&published)).unwrap();
    let parsed = serde_json::from_str(&text).map_err(|e| e.to_string()).and_then(|v| report_from_json(&v));
    let round_trip_ok = parsed.as_ref() == Ok(&published);

    outcome(
        mpd_ok && ramp_ok && identity_worst < 1e-12 && round_trip_ok,
        format!(
            "mpd 5 exact: {mpd_ok}; ramp thresholds {thresholds:?}; identity baseline error {identity_worst:.1e}; \
             report round trip: {round_trip_ok}"
        ),
    )
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("frames");
    write_sequence(&data.join("seq_a"), 6, 240, 320, 800);
    write_sequence(&data.join("seq_b"), 4, 240, 320, 900);
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{ "sequence_window": 3, "augmentation": { "grayscale": 0.3, "fog": 0.3 }, "dataset": { "root": "frames" } }"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
        let out = tmp.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_homgen"))
            .args(["generate", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--num", "24", "--seed", "8080", "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        Ok(read_tree(&out))
    };
    let runs = match (run("a", "1"), run("b", "1"), run("c", "4")) {
        (Ok(a), Ok(b), Ok(c)) => [a, b, c],
        (a, b, c) => {
            let err = [a.err(), b.err(), c.err()].into_iter().flatten().next().unwrap_or_default();
            return outcome(false, format!("generate failed: {err}"));
        }
    };
    let files = runs[0].len();
    let same_invocations = runs[0] == runs[1];
    let same_threads = runs[0] == runs[2];
    outcome(
        same_invocations && same_threads && files == 49,
        format!(
            "{files} files; repeat invocation identical: {same_invocations}; 1 vs 4 threads identical: {same_threads}"
        ),
    )
}

fn throughput() -> Outcome {
    let reference = texture(240, 320, 990);
    let corners = corners_240x320();
    let mut rng = rng_from_seed(991);
    let offsets: Vec<ImageBuffer> = (0..20)
        .map(|_| {
            let mut fp = FourPointHomography::zero();
            for d in fp.deltas.iter_mut() {
                *d = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
            }
            let g = four_point_to_matrix(&fp, &corners).unwrap();
            warp_image(&reference, &g.invert().unwrap(), 240, 320).unwrap()
        })
        .collect();
    let cfg = EstimatorConfig::default();
    let start = Instant::now();
    let mut estimated = 0;
    for off in &offsets {
        if estimate_pair(&reference, off, &cfg).is_ok() {
            estimated += 1;
        }
    }
    let pairs_per_s = offsets.len() as f64 / start.elapsed().as_secs_f64();

    let hg = HomGenConfig::default();
    let mut rng = rng_from_seed(992);
    let crop = sample_crop_polygon(&hg, &mut rng).unwrap();
    let calls = 5000;
    let start = Instant::now();
    for _ in 0..calls {
        std::hint::black_box(generate_motion(&hg, &crop, &mut rng).unwrap());
    }
    let calls_per_s = calls as f64 / start.elapsed().as_secs_f64();
    outcome(
        pairs_per_s >= 10.0 && calls_per_s >= 1000.0 && estimated == offsets.len(),
        format!(
            "estimate {pairs_per_s:.1} pairs/s ({estimated}/{} converged); generate_motion {calls_per_s:.0} calls/s",
            offsets.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("DLT exactness", dlt_exactness),
        ("four-point round trip", four_point_round_trip),
        ("motion containment", containment_soundness),
        ("circle fit", circle_fit),
        ("RANSAC robustness", ransac_robustness),
        ("label soundness", label_soundness),
        ("metric fixtures", metric_fixtures),
        ("determinism", determinism),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        println!("[{}] {}. {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
