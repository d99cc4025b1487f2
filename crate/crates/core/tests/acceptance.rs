//! Acceptance suite. Prints one PASS/FAIL line per criterion, followed by the
//! individual checks, and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use counterpoint_core::dichotomy::{
    affine_classes, chord_endomorphisms, strong_atlas, whole_tone_triads, ODD_WHOLE_TONE,
};
use counterpoint_core::report::{world_table, MYSTIC_PRINTED_SD};
use counterpoint_core::residue::enumerate_dual_symmetries;
use counterpoint_core::stats::{
    chi_square_gof, chi_square_sf, effect_size, effect_size_from_moments, sample_summary,
    Rational, SdDivisor,
};
use counterpoint_core::world::{
    build_world, reference_world, scale_restriction_report, world_overlap, RestrictionMode,
};
use counterpoint_core::{
    Dichotomy, DualAffineMap, DualInterval, Histogram, Modulus, PcSet, PopulationSpec,
    ResidueAffineMap, World,
};
use rayon::prelude::*;

const N12: Modulus = Modulus::TWELVE;

struct Criterion {
    number: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(number: u32, title: &'static str) -> Self {
        Criterion {
            number,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, label: impl Into<String>, ok: bool) {
        self.checks.push((label.into(), ok));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

struct Worlds {
    fux: World,
    mystic: World,
    fux_time: Duration,
    mystic_time: Duration,
}

fn timed_build(d: &Dichotomy) -> (World, Duration) {
    let start = Instant::now();
    let w = build_world(d).expect("strong dichotomy");
    (w, start.elapsed())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn fmt_hist(h: &Histogram) -> String {
    let parts: Vec<String> = h.iter().map(|(c, f)| format!("{c}:{f}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn iv(text: &str) -> DualInterval {
    DualInterval::parse(text, N12).unwrap()
}

fn pcs(values: &[u32]) -> PcSet {
    PcSet::new(values.to_vec(), N12).unwrap()
}

fn criterion_1(w: &Worlds) -> Criterion {
    let mut c = Criterion::new(1, "world fingerprints");
    let fux = Histogram::from_pairs([(0, 6720), (1, 4992), (2, 5568), (3, 1440), (4, 1152), (5, 864)]);
    let mystic = Histogram::from_pairs([(0, 16128), (1, 576), (2, 2880), (3, 0), (4, 1152), (5, 0)]);
    c.check(
        format!("fux histogram {} == {}", fmt_hist(w.fux.histogram()), fmt_hist(&fux)),
        *w.fux.histogram() == fux,
    );
    c.check(
        format!("mystic histogram {} == {}", fmt_hist(w.mystic.histogram()), fmt_hist(&mystic)),
        *w.mystic.histogram() == mystic,
    );
    for (name, t) in [("fux", w.fux_time), ("mystic", w.mystic_time)] {
        c.check(format!("{name} build {:.2} s < 10 s", t.as_secs_f64()), t < Duration::from_secs(10));
    }
    c
}

fn criterion_2(w: &Worlds) -> Criterion {
    let mut c = Criterion::new(2, "worked steps");
    let a = w.fux.count(&iv("0+e3"), &iv("2+e4"));
    let b = w.fux.count(&iv("0+e7"), &iv("2+e7"));
    c.check(format!("count(0+e3 -> 2+e4) = {a}, want 2"), a == 2);
    c.check(format!("count(0+e7 -> 2+e7) = {b}, want 0"), b == 0);
    c.check(format!("max step count = {}, want 5", w.fux.max_count()), w.fux.max_count() == 5);
    c
}

fn criterion_3(w: &Worlds) -> Criterion {
    let mut c = Criterion::new(3, "moments");
    let fm = w.fux.moments();
    let mean = format!("{:.4}", fm.mean_f64());
    let sd = format!("{:.4}", fm.sd);
    c.check(format!("fux mean {mean}, want 1.4167"), mean == "1.4167");
    c.check(format!("fux sd {sd}, want 1.3651"), sd == "1.3651");
    let mm = format!("{:.4}", w.mystic.moments().mean_f64());
    c.check(format!("mystic world mean {mm}, want 0.5278"), mm == "0.5278");

    let reference = reference_world(&Dichotomy::mystic()).expect("mystic reference");
    let rm = reference.histogram.moments();
    c.check(
        format!("mystic sd from reference histogram {:.6}, want 1.0925 +/- 0.0001", rm.sd),
        close(rm.sd, 1.0925, 1e-4),
    );
    let table = world_table(&w.mystic);
    let printed = format!("{MYSTIC_PRINTED_SD:.4}");
    c.check(
        format!("discrepancy note mentions printed sd {printed}"),
        table.notes.iter().any(|n| n.contains(&printed)),
    );
    for (xbar, n, want) in [(2.1, 20, 1.438), (0.69231, 52, 0.151)] {
        let e = effect_size_from_moments(xbar, n, rm.mean_f64(), rm.sd, 0.10).unwrap();
        c.check(
            format!("effect size at mean {xbar} = {:.5}, want {want} +/- 0.002", e.d),
            close(e.d, want, 0.002),
        );
    }
    c
}

fn criterion_4(w: &Worlds) -> Criterion {
    let mut c = Criterion::new(4, "probabilities and independence");
    let o = world_overlap(&w.fux, &w.mystic).unwrap();
    let total = 20736;
    for (name, got, want) in [
        ("p_F", o.p_a, Rational::new(14016, total)),
        ("p_M", o.p_b, Rational::new(4608, total)),
        ("p_FM", o.p_ab, Rational::new(2976, total)),
    ] {
        c.check(format!("{name} = {got}, want {want}"), got == want);
    }
    let bound = Rational::new(1, 110);
    c.check(format!("gap {} < {bound}", o.gap), o.gap < bound);
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "statistics anchors");
    let fux = PopulationSpec::from_histogram(&Histogram::from_pairs([
        (0, 6720),
        (1, 4992),
        (2, 5568),
        (3, 1440),
        (4, 1152),
        (5, 864),
    ]));
    let e = effect_size_from_moments(1.3333, 30, fux.mean(), fux.sd(), 0.10).unwrap();
    let d4 = format!("{:.4}", e.d);
    let half = (e.ci_high - e.ci_low) / 2.0;
    c.check(format!("d(1.3333) = {d4}, want -0.0611"), d4 == "-0.0611");
    c.check(format!("|d| = {:.5}, want 0.061 +/- 0.001", e.d.abs()), close(e.d.abs(), 0.061, 0.001));
    c.check(format!("half-width {half:.5}, want 0.3005 +/- 0.0005"), close(half, 0.3005, 0.0005));
    let (lo, hi) = (e.d.abs() - half, e.d.abs() + half);
    c.check(
        format!("interval [{lo:.4}, {hi:.4}], want [-0.239, 0.362] +/- 0.001"),
        close(lo, -0.239, 0.001) && close(hi, 0.362, 0.001),
    );

    let sf = chi_square_sf(7.83, 5);
    c.check(format!("sf(7.83, 5) = {sf:.7}, want 0.16575 +/- 5e-6"), close(sf, 0.16575, 5e-6));
    let unrounded = chi_square_sf(7.83184, 5);
    c.check(
        format!("sf(7.83184, 5) = {unrounded:.7}, statistic printed as {:.2}", 7.83184),
        close(unrounded, 0.16575, 5e-6),
    );
    let sf = format!("{:.1e}", chi_square_sf(57.72, 3));
    c.check(format!("sf(57.72, 3) = {sf}, want 1.8e-12"), sf == "1.8e-12");
    let sf = format!("{:.2e}", chi_square_sf(36.385, 5));
    c.check(format!("sf(36.385, 5) = {sf}, want 7.95e-7"), sf == "7.95e-7");
    let sf = chi_square_sf(0.57184, 3);
    c.check(format!("sf(0.57184, 3) = {sf:.7}, want 0.90285 +/- 5e-6"), close(sf, 0.90285, 5e-6));

    // 30 steps with frequencies 10:8:6:3:2:1 against the Fux population.
    let mut values = Vec::new();
    for (cat, freq) in [(0u32, 10usize), (1, 8), (2, 6), (3, 3), (4, 2), (5, 1)] {
        values.extend(std::iter::repeat_n(cat, freq));
    }
    let s = sample_summary(&values, &fux.support, SdDivisor::N).unwrap();
    let plain = chi_square_gof(&s, &fux, false).unwrap();
    let yates = chi_square_gof(&s, &fux, true).unwrap();
    let want_plain = 74962.0 / 65975.0;
    let want_yates = 6691.0 / 16965.0;
    c.check(
        format!("fixture mean {:.6}, want 1.4", s.mean),
        close(s.mean, 1.4, 1e-12),
    );
    c.check(
        format!("fixture chi2 {:.10}, want 74962/65975", plain.statistic),
        close(plain.statistic, want_plain, 1e-12) && plain.df == 5,
    );
    c.check(
        format!("fixture Yates chi2 {:.10}, want 6691/16965", yates.statistic),
        close(yates.statistic, want_yates, 1e-12),
    );
    let es = effect_size(&s, &fux, 0.10).unwrap();
    let want_d = (1.4 - 17.0 / 12.0) / fux.sd();
    c.check(format!("fixture d {:.8}", es.d), close(es.d, want_d, 1e-12));

    // Two equiprobable categories, 20 against 10.
    let coin = PopulationSpec::from_histogram(&Histogram::from_pairs([(0, 1), (1, 1)]));
    let mut values = vec![0u32; 20];
    values.extend([1u32; 10]);
    let s = sample_summary(&values, &coin.support, SdDivisor::N).unwrap();
    let plain = chi_square_gof(&s, &coin, false).unwrap();
    let yates = chi_square_gof(&s, &coin, true).unwrap();
    c.check(
        format!("coin chi2 {:.12}, want 10/3", plain.statistic),
        close(plain.statistic, 10.0 / 3.0, 1e-12),
    );
    c.check(
        format!("coin Yates chi2 {:.12}, want 2.7, p {:.8}", yates.statistic, yates.p_value),
        close(yates.statistic, 2.7, 1e-12) && close(yates.p_value, 0.100_348_246_462_290_7, 1e-12),
    );
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "dichotomy atlas");
    let all = affine_classes(N12);
    let total: usize = all.iter().map(|k| k.orbit_size).sum();
    c.check(format!("{total} half-sets in {} classes, want 924", all.len()), total == 924);
    let strong = strong_atlas(N12);
    let strong_total: usize = strong.iter().map(|k| k.orbit_size).sum();
    c.check(format!("{} strong classes, want 6", strong.len()), strong.len() == 6);
    c.check(format!("{strong_total} strong half-sets, want 288"), strong_total == 288);

    let invertible = ResidueAffineMap::invertible(N12);
    for (name, d, want) in [
        ("fux", Dichotomy::fux(), ResidueAffineMap::new(2, 5, N12)),
        ("mystic", Dichotomy::mystic(), ResidueAffineMap::new(9, 11, N12)),
    ] {
        let brute: Vec<_> = invertible
            .iter()
            .filter(|m| d.half().image(m) == d.complement())
            .collect();
        let certified = d.strength().strong_polarity();
        c.check(
            format!("{name} polarity {}, brute force {:?}, want {want}",
                certified.map_or("none".to_string(), |p| p.to_string()),
                brute.iter().map(|m| m.to_string()).collect::<Vec<_>>()),
            d.strength().is_strong() && certified == Some(want) && brute == vec![&want],
        );
    }
    let class = Dichotomy::mystic().classify();
    c.check(
        format!("mystic alias {:?}", class.alias),
        class.strong && class.alias.as_deref().is_some_and(|a| a.contains("78")),
    );
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "Noll checks");
    let r = chord_endomorphisms(&pcs(&[0, 4, 7])).unwrap();
    c.check(format!("|End(0,4,7)| = {}, want 8", r.endomorphisms.len()), r.endomorphisms.len() == 8);
    c.check(
        format!("linear parts {:?}, want [0, 1, 3, 4, 8, 9]", r.linear_parts.to_vec()),
        r.linear_parts == pcs(&[0, 1, 3, 4, 8, 9]),
    );
    c.check(format!("strong verdict {}", r.strong_verdict), r.strong_verdict);
    let triads = whole_tone_triads();
    let strong: Vec<_> = triads
        .iter()
        .filter(|t| chord_endomorphisms(t).unwrap().strong_verdict)
        .collect();
    c.check(
        format!("{} whole-tone triads, {} strong, want 20 and 0", triads.len(), strong.len()),
        triads.len() == 20 && strong.is_empty(),
    );
    c
}

fn criterion_8(w: &Worlds) -> Criterion {
    let mut c = Criterion::new(8, "scale restriction");
    let scale = pcs(&ODD_WHOLE_TONE);
    let mut counts = Vec::new();
    for mode in [RestrictionMode::CantusOnly, RestrictionMode::BothVoices] {
        let r = scale_restriction_report(&w.mystic, &scale, mode).unwrap();
        counts.push(r.forbidden_count);
        c.check(format!("{mode}: {} of {} steps forbidden", r.forbidden_count, r.domain_steps), true);
    }
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    c.check(format!("forbidden counts {counts:?}, want {{8, 4}} as a set"), sorted == [4, 8]);
    c
}

fn dual_index(g: &DualAffineMap) -> usize {
    let (l, t) = (g.linear(), g.translation());
    (((l.a() * 12 + l.b()) * 12 + t.a()) * 12 + t.b()) as usize
}

fn criterion_9(w: &Worlds, started: Instant) -> Criterion {
    let mut c = Criterion::new(9, "property suites");
    for (name, world) in [("fux", &w.fux), ("mystic", &w.mystic)] {
        let broken = DualInterval::all(N12)
            .flat_map(|xi| DualInterval::all(N12).map(move |eta| (xi, eta)))
            .flat_map(|(xi, eta)| (1..12).map(move |t| (xi, eta, t)))
            .filter(|(xi, eta, t)| world.count(&xi.transpose(*t), &eta.transpose(*t)) != world.count(xi, eta))
            .count();
        c.check(format!("{name} translation covariance: {broken} violations"), broken == 0);
    }

    let group = enumerate_dual_symmetries(N12);
    let mut present = vec![false; 12 * 12 * 144];
    for g in &group {
        present[dual_index(g)] = true;
    }
    let identity = present[dual_index(&DualAffineMap::identity(N12))];
    let open = group
        .par_iter()
        .map(|f| {
            let inverse = usize::from(!present[dual_index(&f.invert().unwrap())]);
            inverse + group.iter().filter(|g| !present[dual_index(&f.compose(g).unwrap())]).count()
        })
        .sum::<usize>();
    c.check(
        format!("symmetry pool of {} closed under composition and inverse ({open} escapes)", group.len()),
        group.len() == 6912 && identity && open == 0,
    );

    for (name, d) in [("fux", Dichotomy::fux()), ("mystic", Dichotomy::mystic())] {
        let p = d.strength().strong_polarity().unwrap();
        let pp = p.compose(&p).unwrap();
        c.check(format!("{name} polarity {p} is an involution"), pp == ResidueAffineMap::identity(N12));
    }

    let worst = (0..=4000)
        .map(|i| f64::from(i) * 0.01)
        .map(|x| (chi_square_sf(x, 2) - (-x / 2.0).exp()).abs())
        .fold(0.0, f64::max);
    c.check(format!("sf(x, 2) vs exp(-x/2): max error {worst:.1e}"), worst <= 1e-12);
    let elapsed = started.elapsed();
    c.check(
        format!("acceptance run {:.2} s < 60 s", elapsed.as_secs_f64()),
        elapsed < Duration::from_secs(60),
    );
    c
}

fn main() -> ExitCode {
    let started = Instant::now();
    let (fux, fux_time) = timed_build(&Dichotomy::fux());
    let (mystic, mystic_time) = timed_build(&Dichotomy::mystic());
    let worlds = Worlds {
        fux,
        mystic,
        fux_time,
        mystic_time,
    };
    let criteria = vec![
        criterion_1(&worlds),
        criterion_2(&worlds),
        criterion_3(&worlds),
        criterion_4(&worlds),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(&worlds),
        criterion_9(&worlds, started),
    ];
    let mut failed = 0;
    for c in &criteria {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {}", c.number, c.title);
        for (label, ok) in &c.checks {
            println!("    [{}] {label}", if *ok { "ok" } else { "x" });
        }
        failed += usize::from(!c.passed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
