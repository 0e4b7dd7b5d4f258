//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::time::Instant;

use alphabench::afs::FeatureFile;
use alphabench::emit::{self, Format};
use alphabench::eval::{feature_paths, run_eval, BuiltinMetric, EvalConfig};
use alphabench::io::{save_rgba, BitDepth};
use alphabench_core::dataset::{split, stats, test_count, ManifestEntry, Split, Xorshift64Star};
use alphabench_core::losses::{
    abmse_closed, abmse_mc, adaptive_weight, compose_objective, kl_between, kl_standard, AdaptiveWeight, DyadicSampler,
    LatentGaussian, LossTerms, LossWeights, McEstimate, Reduction,
};
use alphabench_core::metrics::{
    extend_metric, frechet_distance, Direction, FeatureSet, GaussianStats, Mse, PairwiseMetric, Psnr, SqrtMethod, Ssim,
};
use alphabench_core::report::{compare, MetricReport, MetricRow};
use alphabench_core::surgery::{
    conv2d_reference, extend_decoder_last_conv, extend_encoder_first_conv, ConvTensor, FeatureMap,
};
use alphabench_core::{default_moments, CanonicalBackgroundSet, RgbaImage, SignedImage};
use rand_core::RngCore;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn unit(rng: &mut Xorshift64Star) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn range(rng: &mut Xorshift64Star, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

fn signed_image(rng: &mut Xorshift64Star, w: usize, h: usize) -> SignedImage {
    SignedImage::from_fn(w, h, |_, _| {
        let rgb = [0; 3].map(|_| range(rng, -1.0, 1.0) as f32);
        (rgb, unit(rng) as f32)
    })
    .unwrap()
}

fn unit_rgba(rng: &mut Xorshift64Star, w: usize, h: usize, opaque: bool) -> RgbaImage {
    RgbaImage::from_fn(w, h, |_, _| {
        let rgb = [0; 3].map(|_| unit(rng) as f32);
        (rgb, if opaque { 1.0 } else { unit(rng) as f32 })
    })
    .unwrap()
}

struct AbmseCase {
    closed: f64,
    symmetric: McEstimate,
    skewed: McEstimate,
    three_point: McEstimate,
}

const MC_SAMPLES: u64 = 1_000_000;

fn abmse_cases() -> (Vec<AbmseCase>, f64) {
    let m = default_moments();
    let samplers = [
        DyadicSampler::symmetric_two_point(&m),
        DyadicSampler::skewed_two_point(&m),
        DyadicSampler::three_point(&m),
    ];
    let start = Instant::now();
    let cases = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Xorshift64Star::new(0xAB00 + i);
            let x = signed_image(&mut rng, 16, 16);
            let xh = signed_image(&mut rng, 16, 16);
            let closed = abmse_closed(&x, &xh, &m).unwrap();
            let mut est = samplers.iter().enumerate().map(|(k, s)| {
                let mut r = Xorshift64Star::new(1_000 * i + k as u64);
                abmse_mc(&x, &xh, s, MC_SAMPLES, &mut r).unwrap()
            });
            AbmseCase {
                closed,
                symmetric: est.next().unwrap(),
                skewed: est.next().unwrap(),
                three_point: est.next().unwrap(),
            }
        })
        .collect();
    (cases, start.elapsed().as_secs_f64())
}

fn abmse_oracle(cases: &[AbmseCase], secs: f64) -> Outcome {
    let mut within = 0;
    let mut total = 0;
    for c in cases {
        for e in [&c.symmetric, &c.skewed, &c.three_point] {
            total += 1;
            if (c.closed - e.estimate).abs() <= 3.0 * e.stderr {
                within += 1;
            }
        }
    }
    let rate = within as f64 / total as f64;
    let detail = format!("{within}/{total} within 3 stderr, {MC_SAMPLES} samples each, {secs:.1} s");
    if rate >= 0.95 && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn moment_sufficiency(cases: &[AbmseCase]) -> Outcome {
    let m = default_moments();
    let (sym, skew) = (
        DyadicSampler::symmetric_two_point(&m),
        DyadicSampler::skewed_two_point(&m),
    );
    for c in 0..3 {
        let same = (sym.raw_moment(c, 1) - skew.raw_moment(c, 1)).abs() < 1e-12
            && (sym.raw_moment(c, 2) - skew.raw_moment(c, 2)).abs() < 1e-12;
        let third_gap = (sym.raw_moment(c, 3) - skew.raw_moment(c, 3)).abs();
        if !same || third_gap < 1e-3 {
            return Err(format!("channel {c}: samplers do not isolate the third moment"));
        }
    }
    let agree = cases
        .iter()
        .filter(|c| {
            let sigma = (c.symmetric.stderr.powi(2) + c.skewed.stderr.powi(2)).sqrt();
            (c.symmetric.estimate - c.skewed.estimate).abs() <= 3.0 * sigma
        })
        .count();
    let detail = format!("{agree}/{} pairs agree within combined 3 sigma", cases.len());
    if agree == cases.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const COLUMN_ORDER: [&str; 9] = [
    "black", "gray", "white", "red", "yellow", "green", "cyan", "blue", "magenta",
];

fn named(values: [f64; 9]) -> impl Iterator<Item = (&'static str, f64)> {
    COLUMN_ORDER.into_iter().zip(values)
}

fn aggregation_fixtures() -> Outcome {
    let psnr = MetricRow::from_values(
        "Alpha PSNR",
        Direction::HigherBetter,
        named([
            32.2987, 33.4605, 32.2383, 32.4273, 32.3152, 32.4010, 32.3259, 32.2476, 32.3637,
        ]),
    )
    .map_err(|e| e.to_string())?;
    let rfid = MetricRow::from_values(
        "Alpha rFID",
        Direction::LowerBetter,
        named([7.5630, 5.6691, 7.3526, 6.3528, 6.7486, 6.2935, 6.1922, 6.1664, 6.0109]),
    )
    .map_err(|e| e.to_string())?;
    let (p, r) = (format!("{:.4}", psnr.overall), format!("{:.4}", rfid.overall));
    if p != "32.4531" || r != "6.4832" {
        return Err(format!("overall means {p} / {r}"));
    }

    let report = |dataset: &str, metric: &str, direction, values: [f64; 9], overall| {
        let mut rep = MetricReport::new(dataset);
        rep.rows = vec![MetricRow::with_overall(metric, direction, named(values), overall).unwrap()];
        rep
    };
    // Whole-image PSNR on AIM-500, then alpha-benchmark rFID.
    let aim = compare(
        &report(
            "AIM-500",
            "PSNR",
            Direction::HigherBetter,
            [
                31.6007, 34.9229, 31.5234, 31.9905, 31.7616, 31.8860, 31.7065, 31.5669, 31.8329,
            ],
            32.0879,
        ),
        &report(
            "AIM-500",
            "PSNR",
            Direction::HigherBetter,
            [
                36.6537, 39.7929, 36.3265, 37.0620, 36.7204, 36.9623, 36.4340, 36.0575, 36.4856,
            ],
            36.9439,
        ),
    )
    .map_err(|e| e.to_string())?;
    let alpha = compare(
        &report(
            "alpha",
            "rFID",
            Direction::LowerBetter,
            [7.5630, 5.6691, 7.3526, 6.3528, 6.7486, 6.2935, 6.1922, 6.1664, 6.0109],
            6.4832,
        ),
        &report(
            "alpha",
            "rFID",
            Direction::LowerBetter,
            [1.8807, 1.9358, 2.6166, 1.3276, 1.9337, 1.2855, 1.6091, 1.2121, 1.1391],
            1.6600,
        ),
    )
    .map_err(|e| e.to_string())?;
    let dp = aim.row("PSNR").unwrap().overall.clone();
    let df = alpha.row("rFID").unwrap().overall.clone();
    let (sp, sf) = (format!("{:+.4}", dp.delta), format!("{:+.4}", df.delta));
    if sp != "+4.8560" || sf != "-4.8232" || !dp.improved || !df.improved {
        return Err(format!("deltas {sp} / {sf}"));
    }
    let (ma, mf) = (
        emit::comparison(&aim, Format::Markdown),
        emit::comparison(&alpha, Format::Markdown),
    );
    if !ma.contains("36.9439 (+4.8560)") || !mf.contains("1.6600 (-4.8232)") {
        return Err("rendered comparison lacks the delta cells".into());
    }
    Ok(format!("overall {p} / {r}, deltas {sp} / {sf}"))
}

fn opaque_invariance() -> Outcome {
    let mut rng = Xorshift64Star::new(44);
    let gt: Vec<_> = (0..4).map(|_| unit_rgba(&mut rng, 17, 13, true)).collect();
    let pred: Vec<_> = (0..4).map(|_| unit_rgba(&mut rng, 17, 13, true)).collect();
    let metrics: [&dyn PairwiseMetric; 3] = [&Mse, &Psnr::default(), &Ssim::default()];
    for m in metrics {
        let r = extend_metric(m, &gt, &pred, &CanonicalBackgroundSet).map_err(|e| e.to_string())?;
        let first = r.per_background[0].to_bits();
        if r.per_background.iter().any(|v| v.to_bits() != first) {
            return Err(format!("{}: {:?}", r.metric, r.per_background));
        }
    }
    Ok("MSE, PSNR, SSIM bitwise identical across 9 backgrounds".into())
}

const CORPUS: [(&str, usize, usize); 10] = [
    ("Adobe Image Matting", 472, 23),
    ("AM-2K", 2000, 100),
    ("Distinctions-646", 638, 31),
    ("HHM-2K", 2000, 100),
    ("Human-1K", 1003, 50),
    ("P3M-500-NP", 500, 25),
    ("PhotoMatte85", 85, 4),
    ("realWorldPortrait-636", 636, 31),
    ("SIMD", 334, 16),
    ("Transparent-460", 456, 22),
];

fn split_regression() -> Outcome {
    for (name, n, want) in CORPUS {
        let got = test_count(n, 0.05);
        if got != want {
            return Err(format!("{name}: {got} test of {n}, expected {want}"));
        }
    }
    let mut entries = Vec::new();
    for (d, (name, n, want)) in CORPUS.into_iter().enumerate() {
        let ids: Vec<String> = (0..n).map(|i| format!("{name}/{i:05}")).collect();
        let splits = split(&ids, 0.05, d as u64).map_err(|e| e.to_string())?;
        let n_test = splits.iter().filter(|s| **s == Split::Test).count();
        if n_test != want {
            return Err(format!("{name}: synthetic manifest has {n_test} test entries"));
        }
        entries.extend(ids.into_iter().zip(splits).map(|(id, split)| ManifestEntry {
            rgba_path: format!("{id}.png"),
            id,
            width: 1024,
            height: 1024,
            split,
        }));
    }
    let s = stats(&entries).map_err(|e| e.to_string())?;
    if (s.n_train, s.n_test) != (7722, 402) {
        return Err(format!("totals {}/{}", s.n_train, s.n_test));
    }
    Ok("ten test counts and 7722/402 totals".into())
}

fn log_normal(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * ((x - m).powi(2) / v + (2.0 * std::f64::consts::PI * v).ln())
}

fn kl_grid(mq: f64, vq: f64, mp: f64, vp: f64) -> f64 {
    const POINTS: usize = 100_000;
    let half = 12.0 * vq.sqrt();
    let h = 2.0 * half / (POINTS - 1) as f64;
    let f = |i: usize| {
        let x = mq - half + i as f64 * h;
        let lq = log_normal(x, mq, vq);
        lq.exp() * (lq - log_normal(x, mp, vp))
    };
    let inner: f64 = (1..POINTS - 1).map(f).sum();
    h * (inner + 0.5 * (f(0) + f(POINTS - 1)))
}

fn latent(mu: f64, log_var: f64) -> LatentGaussian {
    LatentGaussian::new((1, 1, 1), vec![mu], vec![log_var]).unwrap()
}

fn kl_correctness() -> Outcome {
    let mut rng = Xorshift64Star::new(66);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (mq, lq, mp, lp) = (
            range(&mut rng, -2.0, 2.0),
            range(&mut rng, -2.0, 2.0),
            range(&mut rng, -2.0, 2.0),
            range(&mut rng, -2.0, 2.0),
        );
        let (q, p) = (latent(mq, lq), latent(mp, lp));
        let std = kl_standard(&q, Reduction::Sum) - kl_grid(mq, lq.exp(), 0.0, 1.0);
        let between = kl_between(&q, &p, Reduction::Sum).unwrap() - kl_grid(mq, lq.exp(), mp, lp.exp());
        worst = worst.max(std.abs()).max(between.abs());
        let selfkl = kl_between(&q, &q, Reduction::Sum).unwrap();
        if selfkl.abs() > 1e-12 {
            return Err(format!("KL(q, q) = {selfkl:e}"));
        }
    }
    let standard = kl_standard(&LatentGaussian::standard((2, 3, 3)), Reduction::Sum);
    let detail = format!("max deviation {worst:.2e} over 50 draws");
    if worst <= 1e-6 && standard.abs() <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn feature_map(rng: &mut Xorshift64Star, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::new(c, h, w, (0..c * h * w).map(|_| range(rng, -1.0, 1.0) as f32).collect()).unwrap()
}

fn conv(rng: &mut Xorshift64Star, k: usize, cin: usize, cout: usize) -> ConvTensor {
    let bias = (0..cout).map(|_| range(rng, -0.5, 0.5) as f32).collect();
    ConvTensor::from_fn(k, cin, cout, |_, _, _, _| range(rng, -0.5, 0.5) as f32, bias).unwrap()
}

fn max_gap(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max)
}

fn surgery_invariants() -> Outcome {
    let mut rng = Xorshift64Star::new(77);
    let mut worst = 0.0f64;
    for draw in 0..100 {
        let k = [1, 3, 5][rng.below(3) as usize];
        let (h, w) = (3 + rng.below(6) as usize, 3 + rng.below(6) as usize);
        let width = 2 + rng.below(7) as usize;

        let enc = conv(&mut rng, k, 3, width);
        let x = feature_map(&mut rng, 3, h, w);
        let alpha = feature_map(&mut rng, 1, h, w);
        let before = conv2d_reference(&x, &enc).unwrap();
        let ext = extend_encoder_first_conv(&enc).unwrap();
        let after = conv2d_reference(&x.concat(&alpha).unwrap(), &ext).unwrap();
        worst = worst.max(max_gap(before.data(), after.data()));

        let dec = conv(&mut rng, k, width, 3);
        let z = feature_map(&mut rng, width, h, w);
        let before = conv2d_reference(&z, &dec).unwrap();
        let after = conv2d_reference(&z, &extend_decoder_last_conv(&dec).unwrap()).unwrap();
        worst = worst.max(max_gap(before.data(), after.take_channels(3).unwrap().data()));
        let alpha_gap = after
            .channel(3)
            .iter()
            .map(|v| (*v as f64 - 1.0).abs())
            .fold(0.0, f64::max);
        if alpha_gap > 1e-6 {
            return Err(format!("draw {draw}: decoder alpha off by {alpha_gap:e}"));
        }
    }
    let detail = format!("100 draws, max deviation {worst:.2e}");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a.to_vec();
    let mut v: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    out
}

fn brute_force_fid(m1: &[f64], s1: &[f64], m2: &[f64], s2: &[f64], n: usize) -> f64 {
    let (l, v) = jacobi_eigen(s1, n);
    let mut root = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            root[i * n + j] = (0..n).map(|k| v[i * n + k] * l[k].max(0.0).sqrt() * v[j * n + k]).sum();
        }
    }
    let inner = matmul(&matmul(&root, s2, n), &root, n);
    let sym: Vec<f64> = (0..n * n)
        .map(|i| 0.5 * (inner[i] + inner[(i % n) * n + i / n]))
        .collect();
    let (ev, _) = jacobi_eigen(&sym, n);
    let cross: f64 = ev.iter().map(|e| e.max(0.0).sqrt()).sum();
    let dm: f64 = m1.iter().zip(m2).map(|(a, b)| (a - b).powi(2)).sum();
    let tr = |s: &[f64]| (0..n).map(|i| s[i * n + i]).sum::<f64>();
    dm + tr(s1) + tr(s2) - 2.0 * cross
}

fn random_spd(rng: &mut Xorshift64Star, n: usize) -> Vec<f64> {
    let a: Vec<f64> = (0..n * n).map(|_| range(rng, -1.0, 1.0)).collect();
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            s[i * n + j] = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    s
}

fn frechet_oracle() -> Outcome {
    let mut rng = Xorshift64Star::new(88);
    let methods = [SqrtMethod::Eigen, SqrtMethod::NewtonSchulz];
    let mut worst_1d = 0.0f64;
    for _ in 0..50 {
        let (m1, m2) = (range(&mut rng, -3.0, 3.0), range(&mut rng, -3.0, 3.0));
        let (sd1, sd2) = (range(&mut rng, 0.05, 3.0), range(&mut rng, 0.05, 3.0));
        let a = GaussianStats::new(vec![m1], vec![sd1 * sd1]).unwrap();
        let b = GaussianStats::new(vec![m2], vec![sd2 * sd2]).unwrap();
        let want = (m1 - m2).powi(2) + (sd1 - sd2).powi(2);
        for m in methods {
            worst_1d = worst_1d.max((frechet_distance(&a, &b, m).unwrap() - want).abs());
        }
    }
    let mut worst_8d = 0.0f64;
    let mut worst_self = 0.0f64;
    for _ in 0..20 {
        let (s1, s2) = (random_spd(&mut rng, 8), random_spd(&mut rng, 8));
        let m1: Vec<f64> = (0..8).map(|_| range(&mut rng, -1.0, 1.0)).collect();
        let m2: Vec<f64> = (0..8).map(|_| range(&mut rng, -1.0, 1.0)).collect();
        let want = brute_force_fid(&m1, &s1, &m2, &s2, 8);
        let a = GaussianStats::new(m1, s1).unwrap();
        let b = GaussianStats::new(m2, s2).unwrap();
        for m in methods {
            worst_8d = worst_8d.max((frechet_distance(&a, &b, m).unwrap() - want).abs());
            worst_self = worst_self.max(frechet_distance(&a, &a, m).unwrap().abs());
        }
    }
    let detail = format!("1-D {worst_1d:.1e}, 8-D {worst_8d:.1e}, self {worst_self:.1e}");
    if worst_1d <= 1e-8 && worst_8d <= 1e-6 && worst_self <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn composite_objective() -> Outcome {
    let w = LossWeights::default();
    let expected = LossWeights {
        w_rec: 1.0,
        w_perc: 0.5,
        w_norm_kl: 1e-6,
        w_ref_kl: 1e-16,
        w_gan: 1.0,
        gan_start_step: 4000,
        epsilon_adapt: 1e-4,
    };
    if w != expected {
        return Err(format!("defaults {w:?}"));
    }
    let terms = LossTerms {
        rec: 0.8,
        perc: 0.3,
        norm_kl: 1234.0,
        ref_kl: 5.0e9,
        gan: 0.7,
    };
    let lambda = 2.5;
    let base = terms.rec + 0.5 * terms.perc + 1e-6 * terms.norm_kl + 1e-16 * terms.ref_kl;
    let before = compose_objective(terms, lambda, &w, 3999);
    let at = compose_objective(terms, lambda, &w, 4000);
    if before.gan_active || (before.total - base).abs() > 1e-12 {
        return Err(format!("step 3999 total {}", before.total));
    }
    if !at.gan_active || (at.total - (base + lambda * terms.gan)).abs() > 1e-12 {
        return Err(format!("step 4000 total {}", at.total));
    }
    let l = adaptive_weight(1.0, 0.0, w.epsilon_adapt).map_err(|e| e.to_string())?;
    let ld = AdaptiveWeight::default().compute(1.0, 0.0).map_err(|e| e.to_string())?;
    if (l - 1e4).abs() > 1e-8 || l != ld {
        return Err(format!("lambda(1, 0) = {l}"));
    }
    Ok(format!("gate at step 4000, lambda(1, 0) = {l}"))
}

fn synthetic_corpus(root: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let (gt, pred, feats) = (root.join("gt"), root.join("pred"), root.join("features"));
    let mut rng = Xorshift64Star::new(99);
    for d in [&gt, &pred] {
        std::fs::create_dir_all(d).unwrap();
    }
    for i in 0..50 {
        let x = unit_rgba(&mut rng, 24, 20, false);
        let xh = RgbaImage::from_fn(24, 20, |px, py| {
            let (c, a) = x.pixel(px, py);
            (
                c.map(|v| (v + 0.05 * (unit(&mut rng) as f32 - 0.5)).clamp(0.0, 1.0)),
                (a + 0.1 * (unit(&mut rng) as f32 - 0.5)).clamp(0.0, 1.0),
            )
        })
        .unwrap();
        save_rgba(&gt.join(format!("img{i:03}.png")), &x, BitDepth::Sixteen).unwrap();
        save_rgba(&pred.join(format!("img{i:03}.png")), &xh, BitDepth::Sixteen).unwrap();
    }
    std::fs::create_dir_all(&feats).unwrap();
    for label in CanonicalBackgroundSet::labels() {
        let (g, p) = feature_paths(&feats, label);
        for path in [g, p] {
            let rows = (0..50 * 6).map(|_| range(&mut rng, -1.0, 1.0) as f32).collect();
            FeatureFile::new(FeatureSet::new(50, 6, rows).unwrap(), "synthetic")
                .write(&path)
                .unwrap();
        }
    }
    let labels = root.join("labels.csv");
    let text: String = (0..50)
        .map(|i| format!("img{i:03},{}\n", ["a", "b", "c"][i % 3]))
        .collect();
    std::fs::write(&labels, text).unwrap();
    (gt, pred, feats)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (gt, pred, feats) = synthetic_corpus(dir.path());
    let mut outputs = Vec::new();
    for threads in [1, 4, 16] {
        let mut cfg = EvalConfig::new("synthetic", &gt, &pred);
        cfg.metrics = vec![BuiltinMetric::Mse, BuiltinMetric::Psnr, BuiltinMetric::Ssim];
        cfg.features_dir = Some(feats.clone());
        cfg.labels = Some(dir.path().join("labels.csv"));
        cfg.threads = threads;
        let r = run_eval(&cfg).map_err(|e| e.to_string())?;
        outputs.push(emit::report(&r, Format::Json));
    }
    if outputs.windows(2).all(|w| w[0] == w[1]) {
        Ok(format!("{} bytes identical for 1, 4, 16 threads", outputs[0].len()))
    } else {
        Err("reports differ across thread counts".into())
    }
}

fn main() {
    let (cases, secs) = abmse_cases();
    let checks: Vec<(&str, Outcome)> = vec![
        ("ABMSE closed form vs Monte-Carlo", abmse_oracle(&cases, secs)),
        ("moment sufficiency", moment_sufficiency(&cases)),
        ("aggregation fixtures", aggregation_fixtures()),
        ("opaque invariance", opaque_invariance()),
        ("split rule regression", split_regression()),
        ("KL correctness", kl_correctness()),
        ("surgery invariants", surgery_invariants()),
        ("Frechet oracle", frechet_oracle()),
        ("composite objective", composite_objective()),
        ("evaluation determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, outcome) in &checks {
        match outcome {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
