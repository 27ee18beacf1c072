//! Independent reference implementations and the checks built on them.
//! Each check returns a one-line summary on success and the first
//! discrepancy on failure, so both the test suite and the acceptance
//! harness can run them.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use teachable_core::corpus::{self, CorpusSpec, LabeledFrame, Renderer};
use teachable_core::pipeline::{Event, EventPayload};
use teachable_core::project::{load_project, save_project, Project};
use teachable_core::scene::{smoothstep, DEFAULT_TWEEN_MS};
use teachable_core::state_logic::{staggered_param, StateRuntime, StateSet};
use teachable_core::teach::softmax::{Objective, Params};
use teachable_core::teach::{
    predict, train_knn, train_softmax, ClassifierModel, Embedding, Prediction, Smoother, SmootherConfig, SoftmaxParams,
    StateEvent, TrainingSet,
};
use teachable_core::tracking::{chroma, lift_to_plane, locate_template, track_blob, Blob, CameraModel, ColorTracker, Plane};
use teachable_core::vision::{embed, embed_parts, resize_bilinear, Frame, WORKING_SIZE};
use teachable_core::{Pose, Quat, StateId, Vec3};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn random_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().any(|x| x.abs() > 1e-3) {
            return v;
        }
    }
}

fn class_set(dim: usize, classes: usize) -> TrainingSet {
    TrainingSet::with_classes(dim, (0..classes).map(|c| (format!("s{c}"), String::new()))).unwrap()
}

// ---- knn ----

/// k rounds of "take the most similar unused exemplar", then vote.
pub fn knn_oracle(exemplars: &[(usize, Vec<f64>)], classes: usize, k: usize, q: &[f64]) -> (usize, Vec<f64>) {
    let q = unit(q);
    let sims: Vec<f64> = exemplars.iter().map(|(_, v)| unit(v).iter().zip(&q).map(|(a, b)| a * b).sum()).collect();
    let k = k.min(sims.len());
    let mut used = vec![false; sims.len()];
    let mut votes = vec![0usize; classes];
    let mut sum = vec![0.0; classes];
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for i in 0..sims.len() {
            if !used[i] && best.is_none_or(|b| sims[i] > sims[b]) {
                best = Some(i);
            }
        }
        let b = best.unwrap();
        used[b] = true;
        votes[exemplars[b].0] += 1;
        sum[exemplars[b].0] += sims[b];
    }
    let mut top = 0;
    for c in 0..classes {
        let (vc, vt) = (votes[c], votes[top]);
        if vc > vt || (vc == vt && vc > 0 && sum[c] / vc as f64 > sum[top] / vt as f64) {
            top = c;
        }
    }
    (top, votes.iter().map(|&v| v as f64 / k as f64).collect())
}

pub fn check_knn(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let d = rng.random_range(2..12);
        let classes = rng.random_range(2..5);
        let mut set = class_set(d, classes);
        let mut exemplars = Vec::new();
        let n = rng.random_range(classes..classes + 25);
        for i in 0..n {
            let c = if i < classes { i } else { rng.random_range(0..classes) };
            // coarse grid values make exact similarity ties common
            let v: Vec<f64> = random_vec(&mut rng, d).iter().map(|x| (x * 2.0).round() / 2.0).collect();
            let v = if v.iter().all(|&x| x == 0.0) { vec![1.0; d] } else { v };
            set.add_sample(&format!("s{c}").into(), Embedding::new(v.clone())).unwrap();
            exemplars.push((c, v));
        }
        let k = rng.random_range(1..n + 4);
        let model = train_knn(&set, k).map_err(|e| e.to_string())?;
        let q = random_vec(&mut rng, d);
        let got = predict(&model, &Embedding::new(q.clone())).map_err(|e| e.to_string())?;
        let (top, probs) = knn_oracle(&exemplars, classes, k, &q);
        ensure!(got.top_ordinal == top && got.probabilities == probs, "case {case}: got {} {:?}, oracle {top} {probs:?}", got.top_ordinal, got.probabilities);
    }
    Ok(format!("{cases} cases exact"))
}

// ---- color blobs ----

/// Breadth-first flood fill from each unvisited mask pixel in raster order.
pub fn blob_oracle(frame: &Frame, tracker: &ColorTracker) -> Option<Blob> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    let mask: Vec<bool> = (0..w * h).map(|i| tracker.matches(frame.pixel((i % w) as u32, (i / w) as u32))).collect();
    let mut seen = vec![false; w * h];
    let mut best: Option<(usize, f64, f64)> = None;
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let (mut area, mut sx, mut sy) = (0usize, 0.0, 0.0);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            area += 1;
            sx += x as f64;
            sy += y as f64;
            let mut neighbors = Vec::with_capacity(4);
            if x > 0 {
                neighbors.push(i - 1);
            }
            if x + 1 < w {
                neighbors.push(i + 1);
            }
            if y > 0 {
                neighbors.push(i - w);
            }
            if y + 1 < h {
                neighbors.push(i + w);
            }
            for j in neighbors {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if area >= tracker.min_blob_area && best.is_none_or(|b| area > b.0) {
            best = Some((area, sx, sy));
        }
    }
    best.map(|(a, sx, sy)| Blob { centroid: (sx / a as f64, sy / a as f64), area: a })
}

pub fn check_blobs(frames: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = [200u8, 40, 40];
    let mut found = 0;
    for case in 0..frames {
        let (w, h) = (rng.random_range(20..80u32), rng.random_range(20..60u32));
        let rects: Vec<(u32, u32, u32, u32)> = (0..rng.random_range(0..6))
            .map(|_| (rng.random_range(0..w), rng.random_range(0..h), rng.random_range(1..15), rng.random_range(1..15)))
            .collect();
        let speckle = rng.random_range(0.0..0.15);
        let frame = Frame::from_fn(w, h, |x, y| {
            let inside = rects.iter().any(|&(rx, ry, rw, rh)| x >= rx && x < rx + rw && y >= ry && y < ry + rh);
            if inside || rng.random_bool(speckle) {
                target
            } else {
                [rng.random_range(0..60), rng.random_range(0..200), rng.random_range(100..=255)]
            }
        })
        .unwrap();
        let mut tracker = ColorTracker::new("t", chroma(target.map(f64::from)));
        tracker.min_blob_area = rng.random_range(1..30);
        match (track_blob(&frame, &tracker), blob_oracle(&frame, &tracker)) {
            (None, None) => {}
            (Some(g), Some(o)) => {
                ensure!(g.area == o.area, "frame {case}: area {} vs oracle {}", g.area, o.area);
                let err = (g.centroid.0 - o.centroid.0).abs().max((g.centroid.1 - o.centroid.1).abs());
                ensure!(err <= 1e-9, "frame {case}: centroid {:?} vs oracle {:?}", g.centroid, o.centroid);
                found += 1;
            }
            (g, o) => return Err(format!("frame {case}: got {g:?}, oracle {o:?}")),
        }
    }
    Ok(format!("{frames} frames, {found} with a blob, centroids within 1e-9"))
}

// ---- template matching ----

/// Zero-mean NCC computed directly at every position and scale.
pub fn ncc_oracle(frame: &Frame, template: &Frame, scales: &[f64]) -> Option<(u32, u32, f64, f64)> {
    let luma = frame.luma();
    let (fw, fh) = (frame.width() as usize, frame.height() as usize);
    let mut best: Option<(u32, u32, f64, f64)> = None;
    for &s in scales {
        let tw = (template.width() as f64 * s).round() as usize;
        let th = (template.height() as f64 * s).round() as usize;
        if tw < 2 || th < 2 || tw > fw || th > fh {
            continue;
        }
        let t = resize_bilinear(template, tw as u32, th as u32).unwrap().luma();
        let tm = t.iter().sum::<f64>() / t.len() as f64;
        for y in 0..=fh - th {
            for x in 0..=fw - tw {
                let mut win = Vec::with_capacity(tw * th);
                for dy in 0..th {
                    for dx in 0..tw {
                        win.push(luma[(y + dy) * fw + x + dx]);
                    }
                }
                let wm = win.iter().sum::<f64>() / win.len() as f64;
                let (mut c, mut a, mut b) = (0.0, 0.0, 0.0);
                for (p, q) in win.iter().zip(&t) {
                    c += (p - wm) * (q - tm);
                    a += (p - wm) * (p - wm);
                    b += (q - tm) * (q - tm);
                }
                if a <= 1e-9 || b <= 1e-9 {
                    continue;
                }
                let score = c / (a * b).sqrt();
                if best.is_none_or(|bst| score > bst.3) {
                    best = Some((x as u32, y as u32, s, score));
                }
            }
        }
    }
    best
}

pub fn check_templates(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.8, 1.0, 1.25];
    for case in 0..cases {
        let (w, h) = (rng.random_range(40..64u32), rng.random_range(30..48u32));
        let frame = Frame::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()]).unwrap();
        let (tw, th) = (rng.random_range(6..12u32), rng.random_range(6..12u32));
        let (tx, ty) = (rng.random_range(0..w - tw), rng.random_range(0..h - th));
        let mut tpl = frame.crop(tx, ty, tw, th).unwrap();
        for _ in 0..case {
            let (x, y) = (rng.random_range(0..tw), rng.random_range(0..th));
            tpl.set_pixel(x, y, [rng.random(), rng.random(), rng.random()]);
        }
        let (ox, oy, os, oscore) = ncc_oracle(&frame, &tpl, &scales).ok_or(format!("case {case}: oracle found nothing"))?;
        let got = locate_template(&frame, &tpl, &scales).map_err(|e| e.to_string())?;
        match got {
            Some(g) => {
                ensure!((g.x, g.y, g.scale) == (ox, oy, os), "case {case}: argmax {:?} vs oracle {:?}", (g.x, g.y, g.scale), (ox, oy, os));
                ensure!((g.score - oscore).abs() < 1e-9, "case {case}: score {} vs {}", g.score, oscore);
            }
            None => ensure!(oscore < 0.7, "case {case}: rejected a match scoring {oscore}"),
        }
    }
    Ok(format!("{cases} cases, same argmax"))
}

// ---- embedding ----

/// Color block by explicit per-cell, per-channel, per-bin counting.
pub fn color_block_oracle(frame: &Frame) -> Vec<f64> {
    let n = WORKING_SIZE as usize;
    let work = resize_bilinear(frame, WORKING_SIZE, WORKING_SIZE).unwrap();
    let cell = n / 4;
    let mut out = Vec::with_capacity(192);
    for cy in 0..4 {
        for cx in 0..4 {
            for ch in 0..3 {
                for bin in 0..4 {
                    let mut count = 0;
                    for y in cy * cell..(cy + 1) * cell {
                        for x in cx * cell..(cx + 1) * cell {
                            let v = work.pixel(x as u32, y as u32)[ch] as usize;
                            if (bin * 64..(bin + 1) * 64).contains(&v) {
                                count += 1;
                            }
                        }
                    }
                    out.push(count as f64 / (cell * cell) as f64);
                }
            }
        }
    }
    out
}

/// Gradient block via explicit 3x3 Sobel kernels over a replicated border,
/// orientation quantized straight from the angle.
pub fn gradient_block_oracle(frame: &Frame) -> Vec<f64> {
    use std::f64::consts::PI;
    let n = WORKING_SIZE as usize;
    let luma = resize_bilinear(frame, WORKING_SIZE, WORKING_SIZE).unwrap().luma();
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let padded: Vec<Vec<f64>> = (0..n + 2)
        .map(|y| (0..n + 2).map(|x| luma[y.saturating_sub(1).min(n - 1) * n + x.saturating_sub(1).min(n - 1)]).collect())
        .collect();
    let cell = n / 4;
    let mut out = vec![0.0; 128];
    for y in 0..n {
        for x in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    gx += kx[j][i] * padded[y + j][x + i];
                    gy += kx[i][j] * padded[y + j][x + i];
                }
            }
            let snap = |g: f64| if g.abs() < 1e-9 { 0.0 } else { g };
            let (gx, gy) = (snap(gx), snap(gy));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let mut theta = gy.atan2(gx);
            while theta < 0.0 {
                theta += PI;
            }
            while theta >= PI {
                theta -= PI;
            }
            let bin = ((theta * 8.0 / PI).floor() as usize).min(7);
            out[((y / cell) * 4 + x / cell) * 8 + bin] += mag;
        }
    }
    for h in out.chunks_mut(8) {
        let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        h.iter_mut().for_each(|v| *v /= norm + 1e-6);
    }
    out
}

pub fn check_embedding(frames: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..frames {
        let (w, h) = (rng.random_range(8..160u32), rng.random_range(8..120u32));
        let smooth = rng.random_bool(0.5);
        let (a, b) = (rng.random_range(1..9u32), rng.random_range(1..9u32));
        let frame = Frame::from_fn(w, h, |x, y| {
            if smooth {
                [(x * a) as u8, (y * b) as u8, ((x + y) * 3) as u8]
            } else {
                [rng.random(), rng.random(), rng.random()]
            }
        })
        .unwrap();
        let parts = embed_parts(&frame);
        let mut want = color_block_oracle(&frame);
        let wg = gradient_block_oracle(&frame);
        for (i, (g, o)) in parts.color.iter().zip(&want).chain(parts.gradient.iter().zip(&wg)).enumerate() {
            ensure!((g - o).abs() <= 1e-12, "frame {case} ({w}x{h}): entry {i} is {g}, oracle {o}");
            worst = worst.max((g - o).abs());
        }
        ensure!(worst <= 1e-12, "frame {case}: block entry off by {worst:e}");
        want.extend(wg);
        let norm = want.iter().map(|v| v * v).sum::<f64>().sqrt();
        let full: Vec<f64> = want.iter().map(|v| v / (norm + 1e-6)).collect();
        let e = embed(&frame);
        for (g, o) in e.values().iter().zip(&full) {
            ensure!((g - o).abs() <= 1e-12, "frame {case}: normalized entry off by {:e}", (g - o).abs());
        }
    }
    Ok(format!("{frames} frames, max block error {worst:e}"))
}

// ---- softmax ----

pub fn check_gradient(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, k, n) = (6, 4, 30);
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| unit(&random_vec(&mut rng, d))).collect();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    let objective = Objective { inputs: inputs.iter().map(Vec::as_slice).collect(), labels, l2: 1e-2 };
    let mut p = Params::zeros(k, d);
    p.weights.iter_mut().flatten().for_each(|w| *w = rng.random_range(-1.0..1.0));
    p.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    let (_, g) = objective.loss_and_gradient(&p);

    let h = 1e-5;
    let (mut analytic, mut numeric) = (Vec::new(), Vec::new());
    for c in 0..k {
        for j in 0..=d {
            let bump = |p: &mut Params, delta: f64| {
                if j < d {
                    p.weights[c][j] += delta;
                } else {
                    p.bias[c] += delta;
                }
            };
            let (mut plus, mut minus) = (p.clone(), p.clone());
            bump(&mut plus, h);
            bump(&mut minus, -h);
            numeric.push((objective.loss(&plus) - objective.loss(&minus)) / (2.0 * h));
            analytic.push(if j < d { g.weights[c][j] } else { g.bias[c] });
        }
    }
    let diff = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
    let rel = diff / scale;
    ensure!(rel <= 1e-5, "relative gradient error {rel:e}");
    Ok(format!("relative error {rel:.2e}"))
}

pub fn corpus_set(renderer: Renderer, classes: usize, per_class: usize, seed: u64) -> TrainingSet {
    let samples = corpus::generate(&CorpusSpec::new(renderer, classes, per_class, seed)).unwrap();
    training_set_of(&samples)
}

pub fn training_set_of(samples: &[LabeledFrame]) -> TrainingSet {
    let mut set = TrainingSet::new(teachable_core::vision::EMBEDDING_DIM);
    for s in samples {
        if set.class_index(&s.state_id).is_none() {
            set.add_class(s.state_id.clone(), s.state_id.as_str()).unwrap();
        }
        set.add_sample(&s.state_id, embed(&s.frame)).unwrap();
    }
    set
}

pub fn check_loss_monotone(set: &TrainingSet) -> Check {
    let fit = train_softmax(set, &SoftmaxParams::default()).map_err(|e| e.to_string())?;
    for (e, w) in fit.losses.windows(2).enumerate() {
        ensure!(w[1] <= w[0], "loss rose at epoch {e}: {} -> {}", w[0], w[1]);
    }
    Ok(format!("{} epochs, loss {:.4} -> {:.4}", fit.losses.len() - 1, fit.losses[0], fit.final_loss()))
}

// ---- geometry ----

fn random_quat(rng: &mut impl Rng) -> Quat {
    Quat::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalized()
}

pub fn check_lift(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < cases {
        let mut camera = CameraModel::centered(640, 480, rng.random_range(300.0..900.0));
        camera.pose = Pose::new(random_quat(&mut rng), Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let normal = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let Some(normal) = normal.normalized() else { continue };
        // a point in front of the camera, then a plane through it
        let depth = rng.random_range(0.5..5.0);
        let px = (rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
        let point = camera.unproject(px.0, px.1, depth);
        let mut plane = Plane::from_origin_normal("p", point, normal).unwrap();
        plane.origin = plane.point_at(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0);
        let ray = camera.world_ray(px.0, px.1);
        if ray.dot(normal).abs() < 0.05 {
            continue;
        }
        let lifted = lift_to_plane(&camera, &plane, px).map_err(|e| format!("case {done}: {e}"))?;
        let back = camera.project(lifted).ok_or(format!("case {done}: lifted point behind camera"))?;
        let residual = (lifted - point).norm().max(plane.signed_distance(lifted).abs());
        let reproj = (back.0 - px.0).hypot(back.1 - px.1) / camera.fx;
        worst = worst.max(residual).max(reproj);
        ensure!(residual < 1e-9 && reproj < 1e-9, "case {done}: residual {residual:e}, reprojection {reproj:e}");
        done += 1;
    }
    Ok(format!("{cases} cases, max residual {worst:.1e}"))
}

/// Angle between two unit quaternions from the vector part of `a* b`.
fn angle_oracle(a: Quat, b: Quat) -> f64 {
    let r = a.conjugate() * b;
    2.0 * Vec3::new(r.x, r.y, r.z).norm().atan2(r.w.abs())
}

pub fn check_slerp(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let a = random_quat(&mut rng);
        let b = if case % 4 == 0 {
            // nearly identical rotations
            (a * Quat::from_axis_angle(Vec3::new(rng.random(), rng.random(), 1.0), rng.random_range(1e-6..1e-3))).normalized()
        } else {
            random_quat(&mut rng)
        };
        let total = angle_oracle(a, b);
        for t in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            let q = Quat::slerp(a, b, t);
            let err = (angle_oracle(a, q) - t * total).abs().max((angle_oracle(q, b) - (1.0 - t) * total).abs());
            worst = worst.max(err);
            ensure!(err <= 1e-9, "case {case} t={t}: angle off by {err:e}");
        }
    }
    Ok(format!("{cases} pairs, max deviation {worst:.1e}"))
}

// ---- state logic ----

pub fn check_staggered() -> Check {
    let six = (0..6).fold(StateSet::continuous("s", 0.0, 1.0), |s, i| s.with_state(format!("k{i}"), ""));
    let got: Vec<f64> = (0..6).map(|i| staggered_param(&six, &format!("k{i}").into()).unwrap()).collect();
    ensure!(got == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], "six states gave {got:?}");
    for k in 2..=10 {
        for (a, b) in [(0.0, 1.0), (-2.0, 3.0), (5.0, 1.0)] {
            let set = (0..k).fold(StateSet::continuous("s", a, b), |s, i| s.with_state(format!("k{i}"), ""));
            for i in 0..k {
                let v = staggered_param(&set, &format!("k{i}").into()).unwrap();
                let want = a + (b - a) * i as f64 / (k - 1) as f64;
                ensure!((v - want).abs() <= 1e-12, "K={k} i={i} on [{a},{b}]: {v} vs {want}");
            }
        }
    }
    Ok("6 states give [0, 0.2, 0.4, 0.6, 0.8, 1]; K=2..10 match the closed form".into())
}

fn pred(state: &str, confidence: f64, ts: u64) -> Prediction {
    Prediction { probabilities: vec![], top_state_id: state.into(), top_ordinal: 0, top_confidence: confidence, timestamp_ms: ts }
}

/// Events a hysteresis smoother must emit: at index `i` when the last `M`
/// predictions all name `s` with confidence at least tau and `s` is not
/// already stable.
pub fn smoother_oracle(preds: &[Prediction], cfg: &SmootherConfig) -> Vec<(usize, StateId)> {
    let m = cfg.hysteresis_m;
    let mut stable: Option<StateId> = None;
    let mut out = Vec::new();
    for i in 0..preds.len() {
        if i + 1 < m {
            continue;
        }
        let run = &preds[i + 1 - m..=i];
        let s = &preds[i].top_state_id;
        if run.iter().all(|p| &p.top_state_id == s && p.top_confidence >= cfg.confidence_tau) && stable.as_ref() != Some(s) {
            stable = Some(s.clone());
            out.push((i, s.clone()));
        }
    }
    out
}

pub fn check_smoother(streams: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = 0;
    for case in 0..streams {
        let cfg = SmootherConfig { window_n: 9, confidence_tau: rng.random_range(0.3..0.8), hysteresis_m: rng.random_range(1..6) };
        let mut smoother = Smoother::new(cfg).unwrap();
        let mut preds = Vec::new();
        let mut current = "a";
        for i in 0..300 {
            if rng.random_bool(0.2) {
                current = ["a", "b", "c"][rng.random_range(0..3)];
            }
            preds.push(pred(current, rng.random_range(0.0..1.0), i));
        }
        let mut got = Vec::new();
        for (i, p) in preds.iter().enumerate() {
            if let Some(ev) = smoother.push(p) {
                ensure!(ev.run_length >= cfg.hysteresis_m, "case {case}: event after a run of {}", ev.run_length);
                got.push((i, ev.to));
            }
        }
        let want = smoother_oracle(&preds, &cfg);
        ensure!(got == want, "case {case}: events {got:?} vs oracle {want:?}");
        events += got.len();
    }

    let cfg = SmootherConfig::default();
    let mut smoother = Smoother::new(cfg).unwrap();
    let script: Vec<&str> = std::iter::repeat_n("A", 10).chain(std::iter::repeat_n("B", 2)).chain(std::iter::repeat_n("A", 10)).collect();
    let emitted: Vec<StateId> = script.iter().enumerate().filter_map(|(i, s)| smoother.push(&pred(s, 0.95, i as u64))).map(|e| e.to).collect();
    ensure!(emitted == vec![StateId::from("A")], "A x10, B x2, A x10 emitted {emitted:?}");
    Ok(format!("{streams} streams, {events} events match the oracle, none shorter than M; A/B/A emits only A"))
}

pub fn check_counters(events: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = ["a", "b", "c", "d", "e"];
    let sets = vec![
        StateSet::discrete("d").with_state("a", "").with_state("b", "").with_state("c", ""),
        StateSet::continuous("k", 0.0, 1.0).with_state("d", "").with_state("e", ""),
    ];
    let mut runtime = StateRuntime::new(sets, vec![]).map_err(|e| e.to_string())?;
    let mut stream = Vec::new();
    let mut from: Option<StateId> = None;
    for i in 0..events {
        let to: StateId = states[rng.random_range(0..states.len())].into();
        stream.push(StateEvent { to: to.clone(), from: from.replace(to), timestamp_ms: i as u64, run_length: 3, min_confidence: 1.0 });
    }
    for ev in &stream {
        runtime.on_state_event(ev);
    }
    let oracle = stream.iter().fold(BTreeMap::<StateId, u64>::new(), |mut m, ev| {
        *m.entry(ev.to.clone()).or_default() += 1;
        m
    });
    for s in states {
        let id = StateId::from(s);
        ensure!(runtime.count(&id) == oracle.get(&id).copied().unwrap_or(0), "counter for {s}: {} vs {:?}", runtime.count(&id), oracle.get(&id));
    }
    Ok(format!("{events} events, counters equal the fold"))
}

// ---- determinism ----

pub fn check_project_roundtrip(project: &Project) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    save_project(project, &a).map_err(|e| e.to_string())?;
    let loaded = load_project(&a).map_err(|e| e.to_string())?;
    save_project(&loaded, &b).map_err(|e| e.to_string())?;
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    ensure!(x == y, "second save differs from the first");
    Ok(format!("{} bytes identical after save, load, save", x.len()))
}

pub fn check_model_roundtrip(model: &ClassifierModel, queries: usize, seed: u64) -> Check {
    let json = serde_json::to_string(model).map_err(|e| e.to_string())?;
    let back: ClassifierModel = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..queries {
        let q = Embedding::new(unit(&random_vec(&mut rng, model.embedding_dim)));
        let (p, r) = (model.predict(&q).unwrap(), back.predict(&q).unwrap());
        let same = p.probabilities.iter().zip(&r.probabilities).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure!(same && p.top_ordinal == r.top_ordinal, "query {i}: predictions differ after reload");
    }
    Ok(format!("{queries} predictions bit-identical after reload"))
}

// ---- timelines ----

/// Scripted slider session: blocks of frames per state, 15 fps timestamps.
/// Returns frames and the state sequence a correct run must report.
pub fn slider_script(order: &[usize], per_block: usize, seed: u64) -> (Vec<Frame>, Vec<StateId>) {
    let classes = order.iter().max().copied().unwrap_or(0) + 1;
    let classes = classes.max(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = CorpusSpec::new(Renderer::SliderPosition, classes, 1, seed);
    let mut frames = Vec::new();
    for &c in order {
        for _ in 0..per_block {
            let f = corpus::render(Renderer::SliderPosition, c, classes, spec.width, spec.height, &mut rng);
            frames.push(f.with_timestamp(frames.len() as u64 * 1000 / 15));
        }
    }
    let mut truth: Vec<StateId> = order.iter().map(|&c| Renderer::SliderPosition.state_id(c)).collect();
    truth.dedup();
    (frames, truth)
}

/// Checks a demo-project timeline: the reported states follow `truth`, and
/// every marker snapshot matches a smoothstep tween between keyed positions
/// (`0.1 * ordinal` along x), restarted from the current value at each
/// state change.
pub fn check_timeline(events: &[Event], truth: &[StateId], ordinal: impl Fn(&StateId) -> usize) -> Check {
    let changes: Vec<(f64, StateId)> = events
        .iter()
        .filter_map(|e| match &e.payload {
            EventPayload::StateChanged { to, .. } => Some((e.t, to.clone())),
            _ => None,
        })
        .collect();
    let seen: Vec<StateId> = changes.iter().map(|(_, s)| s.clone()).collect();
    ensure!(seen == truth, "stateChanged sequence {seen:?}, expected {truth:?}");

    let duration = DEFAULT_TWEEN_MS;
    // piecewise oracle: (start time, from x, to x)
    let mut segments: Vec<(f64, f64, f64)> = Vec::new();
    let value_at = |segments: &[(f64, f64, f64)], t: f64| match segments.last() {
        None => 0.0,
        Some(&(t0, a, b)) => a + (b - a) * smoothstep((t - t0) / duration),
    };
    let (mut checked, mut in_tween, mut last_t) = (0, 0, f64::NEG_INFINITY);
    let mut worst: f64 = 0.0;
    for e in events {
        ensure!(e.t >= last_t, "timestamps go backwards at t={}", e.t);
        last_t = e.t;
        match &e.payload {
            EventPayload::StateChanged { to, .. } => {
                let from = value_at(&segments, e.t);
                segments.push((e.t, from, 0.1 * ordinal(to) as f64));
            }
            EventPayload::SceneSnapshot { objects } => {
                let Some(marker) = objects.iter().find(|o| o.id.as_str() == "marker") else {
                    return Err(format!("snapshot at t={} has no marker", e.t));
                };
                let want = value_at(&segments, e.t);
                let err = (marker.world_transform.position.x - want).abs();
                worst = worst.max(err);
                ensure!(err <= 1e-6, "snapshot at t={}: x={} vs smoothstep {}", e.t, marker.world_transform.position.x, want);
                checked += 1;
                if segments.last().is_some_and(|s| e.t - s.0 < duration) {
                    in_tween += 1;
                }
            }
            _ => {}
        }
    }
    ensure!(in_tween > 0, "no snapshot fell inside a tween");
    Ok(format!("{} state changes as expected; {checked} snapshots ({in_tween} mid-tween) within {worst:.1e}", seen.len()))
}
