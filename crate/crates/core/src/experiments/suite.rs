use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{conjugate_gap_integral, energy_difference_smooth, EnergyOptions};
use crate::error::{Error, Result};
use crate::metric::{AngularDensity, ConjugateFunction, MeasureSpec, MetricFunction, TorusMeasure};
use crate::rational::{ints_to_rat, rat};
use crate::sections::{gram_offdiagonal_check, l2_log_norm_sq, lk_difference, log_sup_norm, SectionIndex, SectionOptions};
use crate::toric::{Fan, StandardFan, ToricDivisor};
use crate::Polytope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Lattice,
    Toric,
    Conjugate,
    Energy,
    Sections,
    Gram,
}

impl Tag {
    pub const ALL: [Tag; 6] = [Tag::Lattice, Tag::Toric, Tag::Conjugate, Tag::Energy, Tag::Sections, Tag::Gram];
}

impl FromStr for Tag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
            .map_err(|_| Error::Config(format!("unknown suite tag {s:?}")))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("tag serializes");
        f.write_str(s.as_str().expect("string tag"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub tag: Tag,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<SuiteCheck>,
    pub passed: bool,
}

struct Recorder {
    tag: Tag,
    checks: Vec<SuiteCheck>,
}

impl Recorder {
    fn record(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(SuiteCheck {
            tag: self.tag,
            name: name.into(),
            passed,
            detail,
        });
    }

    fn close(&mut self, name: &str, value: f64, expected: f64, tol: f64) {
        let passed = (value - expected).abs() <= tol;
        self.record(
            name,
            Ok((passed, format!("value {value:.12e}, expected {expected:.12e}, tol {tol:e}"))),
        );
    }
}

fn divisor(fan: StandardFan, values: &[i64]) -> ToricDivisor {
    ToricDivisor::from_ints(Fan::standard(fan), values).expect("standard divisor")
}

fn p1() -> ToricDivisor {
    divisor(StandardFan::P1, &[0, -1])
}

fn p2() -> ToricDivisor {
    divisor(StandardFan::P2, &[0, 0, -1])
}

fn lattice(r: &mut Recorder) -> Result<()> {
    let tri = Polytope::from_vertices(&[ints_to_rat(&[0, 0]), ints_to_rat(&[1, 0]), ints_to_rat(&[0, 1])])?;
    for k in 1..=4u32 {
        let expected = ((k + 1) * (k + 2) / 2) as usize;
        let got = tri.lattice_points(k).len();
        r.record(&format!("ehrhart simplex k={k}"), Ok((got == expected, format!("{got} points"))));
    }
    let doubled = tri.minkowski_sum(&tri)?;
    r.record(
        "minkowski sum is dilation",
        Ok((doubled == tri.scale(&rat(2, 1))? && doubled.volume() == rat(2, 1), format!("volume {}", doubled.volume()))),
    );
    let back = Polytope::from_json(&tri.to_json())?;
    r.record("json round trip", Ok((back == tri, String::new())));
    Ok(())
}

fn toric(r: &mut Recorder) -> Result<()> {
    let h = divisor(StandardFan::Hirzebruch(1), &[0, 0, 0, -1]);
    r.record(
        "hirzebruch pullback nef big not ample",
        Ok((h.is_nef() && h.is_big() && !h.is_ample(), String::new())),
    );
    let flat = divisor(StandardFan::Hirzebruch(1), &[0, 0, -1, 0]);
    r.record(
        "hirzebruch fiber class nef not big",
        Ok((flat.is_nef() && !flat.is_big(), String::new())),
    );
    let q = divisor(StandardFan::P1xP1, &[0, 0, -1, -1]);
    r.record("P1xP1 ample", Ok((q.is_ample(), String::new())));
    for (name, d, deg) in [("P2 degree", p2(), 1), ("P1xP1 degree", q, 2)] {
        let got = d.degree()?;
        r.record(name, Ok((got == rat(deg, 1), format!("degree {got}"))));
    }
    Ok(())
}

fn conjugate(r: &mut Recorder) -> Result<()> {
    let d1 = p1();
    let fs = MetricFunction::fubini_study(&d1)?;
    let can = MetricFunction::canonical(&d1)?;
    let c = ConjugateFunction::with_defaults(&fs);
    r.close("bergman P1 midpoint", c.eval(&[0.5])?, 0.5 * 2f64.ln(), 1e-8);
    let cc = ConjugateFunction::with_defaults(&can);
    let worst = (0..=10)
        .map(|i| cc.eval(&[i as f64 / 10.0]).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    r.close("canonical vanishes", worst, 0.0, 1e-10);
    let d2 = p2();
    let fs2 = MetricFunction::fubini_study(&d2)?;
    r.close(
        "bergman P2 barycenter",
        ConjugateFunction::with_defaults(&fs2).eval(&[1.0 / 3.0, 1.0 / 3.0])?,
        0.5 * 3f64.ln(),
        1e-5,
    );
    let shifted = ConjugateFunction::with_defaults(&fs.shifted(0.3));
    r.close("shift law", shifted.eval(&[0.3])? - c.eval(&[0.3])?, -0.3, 1e-12);
    // contraction against the blend, whose distance to the source is at most the gap
    let blend = MetricFunction::blend(&fs, &can, 0.5)?;
    let sup_g = (-400..=400)
        .map(|i| {
            let u = [i as f64 * 0.05];
            (fs.value(&u) - blend.value(&u)).abs()
        })
        .fold(0.0, f64::max);
    let cb = ConjugateFunction::with_defaults(&blend);
    let mut sup_c: f64 = 0.0;
    let mut concave = true;
    for i in 1..20 {
        let x = i as f64 / 20.0;
        sup_c = sup_c.max((c.eval(&[x])? - cb.eval(&[x])?).abs());
        let mid = cb.eval(&[x])?;
        let lo = cb.eval(&[x - 0.025])?;
        let hi = cb.eval(&[x + 0.025])?;
        concave &= mid >= 0.5 * (lo + hi) - 2e-8;
    }
    r.record(
        "contraction",
        Ok((sup_c <= sup_g + 2e-8, format!("sup conj diff {sup_c:.3e}, sup metric diff {sup_g:.3e}"))),
    );
    r.record("concavity", Ok((concave, String::new())));
    Ok(())
}

fn energy(r: &mut Recorder) -> Result<()> {
    let d1 = p1();
    let o1 = EnergyOptions::for_dim(1);
    let fs = MetricFunction::fubini_study(&d1)?;
    let can = MetricFunction::canonical(&d1)?;
    let sharp = MetricFunction::fubini_study_with(&d1, 2.0, None)?;
    r.close("J bergman canonical P1", conjugate_gap_integral(&fs, &can, &o1)?.value, 0.25, 1e-6);
    let j = conjugate_gap_integral(&fs, &sharp, &o1)?.value;
    let m = energy_difference_smooth(&fs, &sharp, &o1)?.value;
    r.close("energy identity P1", m, j, 1e-5);
    let back = conjugate_gap_integral(&sharp, &fs, &o1)?.value;
    r.close("antisymmetry", back, -j, 2e-8);
    let d2 = p2();
    let o2 = EnergyOptions::for_dim(2);
    let fs2 = MetricFunction::fubini_study(&d2)?;
    let can2 = MetricFunction::canonical(&d2)?;
    r.close("J bergman canonical P2", conjugate_gap_integral(&fs2, &can2, &o2)?.value, 5.0 / 24.0, 1e-5);
    Ok(())
}

fn sections(r: &mut Recorder) -> Result<()> {
    let d1 = p1();
    let opts = SectionOptions::for_dim(1);
    let fs = MetricFunction::fubini_study(&d1)?;
    let can = MetricFunction::canonical(&d1)?;
    let mu = MeasureSpec::laplace(d1.fan());
    let lk = lk_difference(&mu, &fs, &mu, &can, 1, &opts)?;
    r.close("L1 difference closed form", lk.value, 0.5 * 1.5f64.ln(), 1e-9);
    for k in [1, 4, 8] {
        let s = lk_difference(&mu, &fs.shifted(0.3), &mu, &fs, k, &opts)?;
        r.close(&format!("shift law k={k}"), s.value, -0.3, 1e-12);
    }
    let conj = ConjugateFunction::new(&fs, opts.legendre.clone());
    let mut ok = true;
    for k in [1u32, 3, 6] {
        for s in SectionIndex::all(&d1.polytope(), k) {
            let l2 = l2_log_norm_sq(&s, &conj, &mu, &opts)?.log_value;
            ok &= 0.5 * l2 <= log_sup_norm(&s, &conj)? + 1e-9;
        }
    }
    r.record("L2 below sup", Ok((ok, String::new())));
    Ok(())
}

fn gram(r: &mut Recorder) -> Result<()> {
    for (name, d, pairs) in [
        ("P1", p1(), vec![(vec![0], vec![1]), (vec![0], vec![2]), (vec![1], vec![2])]),
        ("P2", p2(), vec![(vec![0, 0], vec![1, 0]), (vec![0, 0], vec![0, 1]), (vec![1, 0], vec![0, 1])]),
    ] {
        let n = d.rank();
        let opts = SectionOptions::for_dim(n);
        let g = MetricFunction::fubini_study(&d)?;
        let k = if n == 1 { 2 } else { 1 };
        let inv = TorusMeasure::invariant(MeasureSpec::laplace(d.fan()));
        let rep = gram_offdiagonal_check(&inv, &g, k, &pairs, &opts)?;
        r.record(
            &format!("{name} invariant orthogonality"),
            Ok((rep.max_relative < 1e-8, format!("max relative {:.3e}", rep.max_relative))),
        );
        let skew = TorusMeasure {
            radial: MeasureSpec::laplace(d.fan()),
            angular: AngularDensity::Cosine { axis: 0, amplitude: 1.0 },
        };
        let rep = gram_offdiagonal_check(&skew, &g, k, &pairs[..1], &opts)?;
        r.record(
            &format!("{name} non-invariant detected"),
            Ok((rep.max_relative > 0.1, format!("max relative {:.3e}", rep.max_relative))),
        );
    }
    Ok(())
}

/// Run the named groups of contractual checks (all groups when `tags` is empty).
pub fn run_property_suite(tags: &[Tag]) -> SuiteReport {
    let selected: Vec<Tag> = if tags.is_empty() { Tag::ALL.to_vec() } else { tags.to_vec() };
    let mut checks = Vec::new();
    for tag in selected {
        let mut r = Recorder { tag, checks: Vec::new() };
        let outcome = match tag {
            Tag::Lattice => lattice(&mut r),
            Tag::Toric => toric(&mut r),
            Tag::Conjugate => conjugate(&mut r),
            Tag::Energy => energy(&mut r),
            Tag::Sections => sections(&mut r),
            Tag::Gram => gram(&mut r),
        };
        if let Err(e) = outcome {
            r.record("setup", Err(e));
        }
        checks.extend(r.checks);
    }
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport { checks, passed }
}
