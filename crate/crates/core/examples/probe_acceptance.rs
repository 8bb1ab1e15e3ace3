// scratch probe for acceptance tolerances; not part of the build proper
use lerwlab_core::correlators::{connected_correlator, partition_function, CorrelatorSpec, Terminal};
use lerwlab_core::field::NuField;
use lerwlab_core::geometry::{excursion_kernel, harmonic_measure_h, Interval};
use lerwlab_core::hitting::{
    first_order_hitting, offcritical_hitting_probability, GammaGridParams, HittingQuery,
};
use lerwlab_core::lattice::{estimate_local_time_moment, LatticeCell, LatticeDomain, WalkSpec};
use lerwlab_core::loewner::sde::sample_dipolar_sle;
use lerwlab_core::loewner::stats::lerw_driving_diffusivity;
use lerwlab_core::loewner::zipper::roundtrip_pair;
use lerwlab_core::rng::sample_stream;
use num_complex::Complex64;
use std::time::Instant;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

fn main() {
    let which: String = std::env::args().nth(1).unwrap_or_else(|| "all".into());

    if which == "zipper" || which == "all" {
        let t0 = Instant::now();
        let xi_f = |t: f64| 0.8 * (3.0 * t).sin() + 0.2 * t;
        let pair = roundtrip_pair(xi_f, 1000, 16, 0.5, 0.45, Terminal::Point(8.0)).unwrap();
        println!(
            "zipper: rms(1000) = {:.3e}, rms(2000) = {:.3e}, ratio = {:.4}  [{:?}]",
            pair.coarse.rms,
            pair.fine.rms,
            pair.fine.rms / pair.coarse.rms,
            t0.elapsed()
        );
    }

    if which == "zipper2" {
        // shared-reference variant: both vertex counts subsample one fine
        // curve and are scored against that curve's own exact driving
        use lerwlab_core::loewner::zipper::{extract_driving, reconstruct_trace, CurvePolyline};
        use lerwlab_core::loewner::DrivingSample;
        let t0 = Instant::now();
        let xi_f = |t: f64| 0.8 * (3.0 * t).sin() + 0.2 * t;
        let n_fine = 32_000usize;
        let dt = 0.5 / n_fine as f64;
        let times: Vec<f64> = (0..=n_fine).map(|k| k as f64 * dt).collect();
        let vals: Vec<f64> = times.iter().map(|&t| xi_f(t)).collect();
        let d = DrivingSample::new(times, vals, 0.0, Terminal::Point(8.0)).unwrap();
        let fine = reconstruct_trace(&d, 0.0).unwrap();
        println!("fine trace built  [{:?}]", t0.elapsed());
        let xi_ref = extract_driving(
            &CurvePolyline::new(fine.vertices().to_vec()).unwrap(),
            Terminal::Point(8.0),
        )
        .unwrap();
        println!("fine driving extracted  [{:?}]", t0.elapsed());
        let interp = |t: f64| -> f64 {
            let j = xi_ref.times.partition_point(|&u| u <= t).min(xi_ref.times.len() - 1);
            let (t0, t1) = (xi_ref.times[j - 1], xi_ref.times[j]);
            let (x0, x1) = (xi_ref.xi[j - 1], xi_ref.xi[j]);
            x0 + (x1 - x0) * (t - t0) / (t1 - t0)
        };
        let rms_for = |step: usize, lo: f64, hi: f64| -> f64 {
            let verts: Vec<Complex64> = fine.vertices().iter().copied().step_by(step).collect();
            let back =
                extract_driving(&CurvePolyline::new(verts).unwrap(), Terminal::Point(8.0))
                    .unwrap();
            let mut s = 0.0;
            let mut m = 0usize;
            for (k, &t) in back.times.iter().enumerate() {
                if t >= lo && t <= hi {
                    let e = back.xi[k] - interp(t);
                    s += e * e;
                    m += 1;
                }
            }
            (s / m as f64).sqrt()
        };
        for (lo, hi) in [(0.0, 0.45), (0.1, 0.45), (0.0, 0.35)] {
            let r1 = rms_for(32, lo, hi);
            let r2 = rms_for(16, lo, hi);
            println!(
                "zipper2 window [{lo},{hi}]: rms(1000) = {r1:.3e}, rms(2000) = {r2:.3e}, ratio = {:.4}",
                r2 / r1
            );
        }
        // against the analytic driving instead of the shared extraction
        let rms_an = |step: usize, hi: f64| -> f64 {
            let verts: Vec<Complex64> = fine.vertices().iter().copied().step_by(step).collect();
            let back =
                extract_driving(&CurvePolyline::new(verts).unwrap(), Terminal::Point(8.0))
                    .unwrap();
            let mut s = 0.0;
            let mut m = 0usize;
            for (k, &t) in back.times.iter().enumerate() {
                if t <= hi {
                    let e = back.xi[k] - xi_f(t);
                    s += e * e;
                    m += 1;
                }
            }
            (s / m as f64).sqrt()
        };
        let r1 = rms_an(32, 0.45);
        let r2 = rms_an(16, 0.45);
        println!(
            "zipper2 analytic ref: rms(1000) = {r1:.3e}, rms(2000) = {r2:.3e}, ratio = {:.4}  [{:?}]",
            r2 / r1,
            t0.elapsed()
        );
    }

    if which == "disc" {
        // exact discrete solves: harmonic measure and visit-count Green on
        // the walk's own lattice, against the continuum kernels
        use lerwlab_core::geometry::grid::{DirichletProblem, StencilGrid};
        for inv in [16i32, 32, 64] {
            let t0 = Instant::now();
            let mesh = 1.0 / inv as f64;
            let target = iv(0.25, 4.5);
            let domain = LatticeDomain::new(mesh, -5.0, 5.0, 5.0, target).unwrap();
            let nx = (domain.ix_hi - domain.ix_lo + 1) as usize;
            let ny = (domain.iy_hi + 1) as usize;
            let grid = StencilGrid::new(nx, ny, mesh, -5.0, 0.0).unwrap();
            let node = |ix: i32, iy: i32| grid.index((ix - domain.ix_lo) as usize, iy as usize);
            let mut bc = vec![0.0; grid.len()];
            for ix in domain.ix_lo..=domain.ix_hi {
                if domain.in_target(ix, 0) {
                    bc[node(ix, 0)] = 1.0;
                }
            }
            let hm = DirichletProblem { grid, boundary: &bc, killing: None, source: None }
                .solve()
                .unwrap();
            let zero_bc = vec![0.0; grid.len()];
            let mut src = vec![0.0; grid.len()];
            let start = domain.boundary_start(0.0).unwrap();
            src[node(start.0, start.1)] = 2.0 / (mesh * mesh);
            let gvis = DirichletProblem {
                grid,
                boundary: &zero_bc,
                killing: None,
                source: Some(&src),
            }
            .solve()
            .unwrap();
            let side = {
                let s = (0.234 / mesh).round() as i32;
                if s % 2 == 0 { s + 1 } else { s }
            };
            let z1 = Complex64::new(0.0, 0.5);
            let c1 = LatticeCell::centered(&domain, z1, side).unwrap();
            let mut est1 = 0.0;
            let mut avg1 = 0.0;
            let mut count = 0.0;
            for ix in c1.ix_lo..=c1.ix_hi {
                for iy in c1.iy_lo..=c1.iy_hi {
                    est1 += 0.5 * mesh * mesh * gvis[node(ix, iy)] * hm[node(ix, iy)];
                    let z = domain.site_position(ix, iy);
                    avg1 += excursion_kernel(0.0, z).unwrap()
                        * harmonic_measure_h(z, target).unwrap();
                    count += 1.0;
                }
            }
            avg1 /= count;
            let est0 = hm[node(start.0, start.1)];
            let z0 = partition_function(0.0, Terminal::Interval(target)).unwrap();
            let area = (side as f64 * mesh) * (side as f64 * mesh);
            let cond1 = est1 / est0 / area;
            let exact1 = avg1 / z0;
            println!(
                "disc mesh 1/{inv}: side = {side}, rho0 = {:.4}, n1 ratio = {:.4}  [{:?}]",
                est0 / (mesh * z0),
                cond1 / exact1,
                t0.elapsed()
            );
            if inv == 16 {
                // same quantity by Monte Carlo, to validate the walk sampler
                let nu = NuField::zero();
                let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
                let m0 = estimate_local_time_moment(spec, &[], 200_000, 4).unwrap();
                let m1 = estimate_local_time_moment(spec, &[c1], 200_000, 5).unwrap();
                println!(
                    "disc mesh 1/16 MC check: est0 {:.5} vs exact {:.5} ({:+.1} se), est1 {:.3e} vs exact {:.3e} ({:+.1} se)",
                    m0.value,
                    est0,
                    (m0.value - est0) / m0.std_error,
                    m1.value,
                    est1,
                    (m1.value - est1) / m1.std_error,
                );
            }
        }
    }

    if which == "lerwvar" {
        // single-increment variance of the erased-walk driving at
        // macroscopic lags, across curves
        use lerwlab_core::lattice::{loop_erase, sample_walk};
        use lerwlab_core::loewner::zipper::{extract_driving_capped, CurvePolyline};
        let t0 = Instant::now();
        let mesh = 1.0 / 64.0;
        let domain = LatticeDomain::new(mesh, -3.0, 5.0, 2.0, iv(1.0, 3.0)).unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let terminal = Terminal::Interval(iv(1.0, 3.0));
        let burn = 0.05;
        let lags = [0.1, 0.2, 0.3];
        let cap = burn + lags[2];
        let mut sums = [0.0f64; 3];
        let mut sqs = [0.0f64; 3];
        let mut ns = [0u64; 3];
        let n_attempts = 1_500_000u64;
        for i in 0..n_attempts {
            let mut rng = sample_stream(777, i);
            let s = sample_walk(spec, &mut rng).unwrap();
            if !s.hit_target {
                continue;
            }
            let erased = loop_erase(&s.path).unwrap();
            let curve = CurvePolyline::from_lattice_path(&erased, mesh).unwrap();
            let back = match extract_driving_capped(&curve, terminal, cap) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let t_end = *back.times.last().unwrap();
            let value_at = |t: f64| -> f64 {
                let j = back.times.partition_point(|&u| u <= t).min(back.times.len() - 1);
                let (ta, tb) = (back.times[j - 1], back.times[j]);
                let (xa, xb) = (back.xi[j - 1], back.xi[j]);
                xa + (xb - xa) * (t - ta) / (tb - ta)
            };
            if t_end < burn {
                continue;
            }
            let base = value_at(burn);
            for (k, &lag) in lags.iter().enumerate() {
                if t_end >= burn + lag {
                    let d = value_at(burn + lag) - base;
                    sums[k] += d;
                    sqs[k] += d * d;
                    ns[k] += 1;
                }
            }
        }
        for (k, &lag) in lags.iter().enumerate() {
            let n = ns[k] as f64;
            let mean = sums[k] / n;
            let var = sqs[k] / n - mean * mean;
            let kappa = var / lag;
            let se = kappa * (2.0 / n).sqrt();
            println!(
                "lerwvar lag {lag}: kappa_var = {kappa:.4} (se {se:.4}), mean = {mean:+.4}, curves = {}",
                ns[k]
            );
        }
        println!("lerwvar done  [{:?}]", t0.elapsed());
    }

    if which == "lerw" || which == "all" {
        let mesh = 1.0 / 64.0;
        let domain = LatticeDomain::new(mesh, -3.0, 5.0, 2.0, iv(1.0, 3.0)).unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        for (burn_in, window, delta) in [
            (0.0, 0.02, 1e-3),
            (0.0, 0.1, 5e-3),
            (0.05, 0.2, 0.01),
            (0.05, 0.2, 0.02),
            (0.1, 0.4, 0.02),
        ] {
            let t0 = Instant::now();
            let d = lerw_driving_diffusivity(spec, 1_000_000, burn_in, window, delta, 777)
                .unwrap();
            println!(
                "lerw burn={burn_in} win={window} delta={delta}: kappa_hat = {:.4} (se {:.4}), curves = {}, increments = {}  [{:?}]",
                d.kappa_hat,
                d.std_error,
                d.n_curves,
                d.n_increments,
                t0.elapsed()
            );
        }
    }

    if which == "lerwmesh" {
        for mesh_div in [32.0, 96.0] {
            let mesh = 1.0 / mesh_div;
            let domain = LatticeDomain::new(mesh, -3.0, 5.0, 2.0, iv(1.0, 3.0)).unwrap();
            let nu = NuField::zero();
            let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
            let t0 = Instant::now();
            let d =
                lerw_driving_diffusivity(spec, 1_500_000, 0.05, 0.2, 0.02, 777).unwrap();
            println!(
                "lerwmesh 1/{mesh_div}: kappa_hat = {:.4} (se {:.4}), curves = {}, increments = {}  [{:?}]",
                d.kappa_hat,
                d.std_error,
                d.n_curves,
                d.n_increments,
                t0.elapsed()
            );
        }
    }

    if which == "corr" || which == "all" {
        let t0 = Instant::now();
        let mesh = 1.0 / 64.0;
        let target = iv(0.25, 4.5);
        let domain = LatticeDomain::new(mesh, -5.0, 5.0, 5.0, target).unwrap();
        let nu = NuField::zero();
        let spec = WalkSpec::from_boundary(&domain, 0.0, &nu).unwrap();
        let side = 15i32;
        let z1 = Complex64::new(0.0, 0.5);
        let z2 = Complex64::new(0.3, 0.65);
        let c1 = LatticeCell::centered(&domain, z1, side).unwrap();
        let c2 = LatticeCell::centered(&domain, z2, side).unwrap();
        let sites = |c: &LatticeCell| -> Vec<Complex64> {
            let mut v = Vec::new();
            for ix in c.ix_lo..=c.ix_hi {
                for iy in c.iy_lo..=c.iy_hi {
                    v.push(domain.site_position(ix, iy));
                }
            }
            v
        };
        let s1 = sites(&c1);
        let s2 = sites(&c2);
        let terminal = Terminal::Interval(target);
        let avg1: f64 = s1
            .iter()
            .map(|&z| {
                excursion_kernel(0.0, z).unwrap() * harmonic_measure_h(z, target).unwrap()
            })
            .sum::<f64>()
            / s1.len() as f64;
        let mut avg2 = 0.0;
        for &a in &s1 {
            for &b in &s2 {
                avg2 += connected_correlator(
                    &CorrelatorSpec::new(0.0, terminal, vec![a, b]).unwrap(),
                )
                .unwrap();
            }
        }
        avg2 /= (s1.len() * s2.len()) as f64;
        let n = 1_000_000;
        let est0 = estimate_local_time_moment(spec, &[], n, 4).unwrap();
        let est1 = estimate_local_time_moment(spec, &[c1], n, 5).unwrap();
        let est2 = estimate_local_time_moment(spec, &[c1, c2], n, 6).unwrap();
        let z0 = partition_function(0.0, terminal).unwrap();
        let area = (side as f64 * mesh) * (side as f64 * mesh);
        // conditional moments: the source layer cancels in est_n / est_0
        let cond1 = est1.value / est0.value / area;
        let cond2 = est2.value / est0.value / (area * area);
        let exact1 = avg1 / z0;
        let exact2 = avg2 / z0;
        let se1 = est1.std_error / est0.value / area / exact1;
        let se2 = est2.std_error / est0.value / (area * area) / exact2;
        println!(
            "corr: hit = {:.5} (se {:.5}), n1 ratio = {:.4} (se {:.4}), n2 ratio = {:.4} (se {:.4})  [{:?}]",
            est0.value,
            est0.std_error,
            cond1 / exact1,
            se1,
            cond2 / exact2,
            se2,
            t0.elapsed()
        );
    }

    if which == "offcrit" || which == "all" {
        let t0 = Instant::now();
        let uni = iv(1.0, 3.0);
        let sub = iv(1.0, 2.0);
        let params = GammaGridParams { h: 1.0 / 64.0, x_lo: -3.0, x_hi: 6.0, y_hi: 4.0 };
        for eps in [0.1, 0.2, 0.4] {
            let nu = NuField::disk(eps, 0.0, 2.0, 0.5).unwrap();
            let q = HittingQuery::new(0.0, uni, sub, nu).unwrap();
            let pde = offcritical_hitting_probability(&q, &params).unwrap();
            let first = first_order_hitting(&q).unwrap();
            println!(
                "offcrit eps={eps}: pde = {pde:.6}, first = {first:.6}, d = {:.3e}  [{:?}]",
                (first - pde).abs(),
                t0.elapsed()
            );
        }
    }

    if which == "landing" || which == "all" {
        let t0 = Instant::now();
        let target = iv(1.0, 3.0);
        let n_paths = 2000u64;
        let mut landed = 0u64;
        let mut sum_t = 0.0;
        let mut max_t: f64 = 0.0;
        let mut bins = [0u64; 16];
        for i in 0..n_paths {
            let mut rng = sample_stream(4242, i);
            let d = sample_dipolar_sle(0.0, target, 2.0, 400.0, 1e-3, &mut rng, 16).unwrap();
            if let Some(x) = d.landing {
                landed += 1;
                let t_end = *d.times.last().unwrap();
                sum_t += t_end;
                max_t = max_t.max(t_end);
                let b = (((x - 1.0) / 2.0 * 16.0) as usize).min(15);
                bins[b] += 1;
            }
        }
        println!(
            "landing: landed {landed}/{n_paths}, mean stop t = {:.2}, max = {:.2}, bins = {bins:?}  [{:?}]",
            sum_t / landed as f64,
            max_t,
            t0.elapsed()
        );
    }
}
