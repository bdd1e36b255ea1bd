//! Verification commands and their reports.
//!
//! Each command takes a fully explicit configuration (including the seed)
//! and returns a [`VerificationReport`] whose JSON form is byte-stable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bivector::BivectorField;
use crate::bracket::{constraint_bracket_closed_form, lie_bracket};
use crate::cotangent::{shoot_through, tangent_cone_probe, COTANGENT_TOL};
use crate::error::{Error, Result};
use crate::functionals::{casimir_functional, constraint_functional};
use crate::pathspace::{BoundaryKind, Grid};
use crate::sampling;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtMost,
            pass: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            comparison: Comparison::AtLeast,
            pass: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub overall: bool,
    pub warnings: Vec<String>,
    pub details: Value,
    #[serde(skip)]
    pub csv: String,
}

impl VerificationReport {
    fn new(command: &str, config: Value, seed: u64, checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        Self {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            seed,
            checks,
            overall,
            warnings: Vec::new(),
            details: Value::Null,
            csv: String::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Human-readable summary, one line per check.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} (seed {})\n", self.command, self.seed);
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            out.push_str(&format!(
                "  [{}] {} = {:.3e} ({op} {:.1e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.tolerance
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        out.push_str(&format!("overall: {}\n", if self.overall { "PASS" } else { "FAIL" }));
        out
    }
}

/// Poisson test at `samples` seeded points of `[-1, 1]^n`.
pub fn jacobi(pi: &BivectorField, samples: usize, tol: f64, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sampling::points(&mut rng, samples, pi.dim(), 1.0);
    let verdict = pi.is_poisson(&points, tol)?;
    let mut report = VerificationReport::new(
        "jacobi",
        json!({ "n": pi.dim(), "samples": samples, "tol": tol }),
        seed,
        vec![Check::at_most("max_abs_jacobiator", verdict.max_abs_j, tol)],
    );
    let mut details = json!({ "poisson": verdict.poisson, "max_abs_j": verdict.max_abs_j });
    if let Some(w) = &verdict.witness {
        let j = pi.jacobiator(w)?;
        let n = pi.dim();
        let mut entries = Vec::new();
        for r in 0..n {
            for s in r + 1..n {
                for t in s + 1..n {
                    let v = j.get(r, s, t);
                    if v != 0.0 {
                        entries.push(json!({ "r": r + 1, "s": s + 1, "j": t + 1, "value": v }));
                    }
                }
            }
        }
        details["witness"] = json!(w);
        details["jacobiator_at_witness"] = Value::Array(entries);
    }
    report.details = details;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoisotropyConfig {
    pub paths: usize,
    pub grid_n: usize,
    pub kind: BoundaryKind,
    pub tol: f64,
    pub eps: f64,
    pub profile_pairs: usize,
}

impl Default for CoisotropyConfig {
    fn default() -> Self {
        Self {
            paths: 10,
            grid_n: 128,
            kind: BoundaryKind::SemiFree,
            tol: 1e-5,
            eps: 0.45,
            profile_pairs: 3,
        }
    }
}

/// Shoots cotangent paths through seeded points and brackets every pair of
/// constraint functionals `F_{f,r}`, `G_{g,s}` (`r <= s`) on them.
pub fn coisotropy(pi: &BivectorField, cfg: &CoisotropyConfig, seed: u64) -> Result<VerificationReport> {
    let n = pi.dim();
    let grid = Grid::new(cfg.grid_n, cfg.kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut csv = String::from("path,r,s,pair,bracket,closed_form,jacobi_term,scale\n");
    let mut worst_defect = 0.0_f64;
    let mut worst_bracket = 0.0_f64;
    let mut worst_closed = 0.0_f64;
    let mut worst_casimir = 0.0_f64;
    let mut worst_through = 0.0_f64;
    let mut shot = 0;
    for id in 0..cfg.paths {
        let q = sampling::point(&mut rng, n, 1.0);
        let p = sampling::point(&mut rng, n, 1.0);
        let profiles: Vec<_> = (0..cfg.profile_pairs)
            .map(|_| (sampling::profile(&mut rng, cfg.kind), sampling::profile(&mut rng, cfg.kind)))
            .collect();
        let h = sampling::polynomial(&mut rng, n, 2, 3);
        let result = match shoot_through(pi, &q, &p, cfg.eps, &grid) {
            Ok(r) => r,
            Err(e @ Error::OdeBlowUp { .. }) => {
                warnings.push(format!("path {}: {e}; excluded", id + 1));
                continue;
            }
            Err(e) => return Err(e),
        };
        shot += 1;
        let a = &result.path;
        let scale = a.scale_for(pi);
        worst_defect = worst_defect.max(result.defect_max / scale);
        worst_through = worst_through.max(result.through_point_error);
        let casimir = casimir_functional(&h)?;
        for r in 0..n {
            for s in r..n {
                for (k, (f, g)) in profiles.iter().enumerate() {
                    let ff = constraint_functional(pi, r, f, cfg.kind)?;
                    let gg = constraint_functional(pi, s, g, cfg.kind)?;
                    let value = lie_bracket(&ff, &gg, a)?;
                    let closed = constraint_bracket_closed_form(pi, f, r, g, s, a)?;
                    worst_bracket = worst_bracket.max(value.abs() / scale);
                    worst_closed =
                        worst_closed.max((value - closed.total).abs() / value.abs().max(1.0));
                    if k == 0 && s == r {
                        worst_casimir = worst_casimir.max(lie_bracket(&casimir, &ff, a)?.abs() / scale);
                    }
                    csv.push_str(&format!(
                        "{},{},{},{},{:e},{:e},{:e},{:e}\n",
                        id + 1,
                        r + 1,
                        s + 1,
                        k + 1,
                        value,
                        closed.total,
                        closed.jacobi_term,
                        scale
                    ));
                }
            }
        }
    }
    let mut checks = vec![
        Check::at_most("shoot_defect_over_scale", worst_defect, COTANGENT_TOL),
        Check::at_most("shoot_through_point_error", worst_through, COTANGENT_TOL),
        Check::at_most("bracket_over_scale", worst_bracket, cfg.tol),
        Check::at_most("closed_form_relative_error", worst_closed, 1e-6),
        Check::at_most("casimir_bracket_over_scale", worst_casimir, 1e-6),
    ];
    if shot == 0 && cfg.paths > 0 {
        checks.push(Check::at_least("paths_shot", 0.0, 1.0));
    }
    let mut report = VerificationReport::new(
        "coisotropy",
        json!({
            "n": n, "paths": cfg.paths, "grid_n": cfg.grid_n, "kind": cfg.kind,
            "tol": cfg.tol, "eps": cfg.eps, "profile_pairs": cfg.profile_pairs,
        }),
        seed,
        checks,
    );
    report.warnings = warnings;
    report.details = json!({ "paths_shot": shot, "max_bracket_over_scale": worst_bracket });
    report.csv = csv;
    Ok(report)
}

/// Runs the tangent cone probe for `pi = x dx ^ dy` at the zero loop.
pub fn counterexample(eps: f64, modes: usize, grid_n: usize) -> Result<VerificationReport> {
    let grid = Grid::periodic(grid_n)?;
    let probe = tangent_cone_probe(eps, modes, &grid)?;
    let checks = vec![
        Check::at_most("res_u", probe.res_u, 1e-9),
        Check::at_most("res_v", probe.res_v, 1e-9),
        Check::at_least("res_uv", probe.res_uv, 0.4 * eps * eps),
        Check::at_most("holonomy_uv_minus_eps", (probe.holonomy_uv - eps).abs(), eps * eps),
    ];
    let mut report = VerificationReport::new(
        "counterexample",
        json!({ "eps": eps, "modes": modes, "grid_n": grid_n }),
        0,
        checks,
    );
    report.details = serde_json::to_value(probe).expect("probe serializes");
    Ok(report)
}

/// Compares the gradient pairing with the finite-difference oracle on
/// seeded random functionals, paths and tangent vectors.
pub fn gradient_check(
    pi: &BivectorField,
    trials: usize,
    kind: BoundaryKind,
    grid_n: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let n = pi.dim();
    let grid = Grid::new(grid_n, kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("trial,functional,directional_derivative,pairing,relative_error\n");
    let mut worst = 0.0_f64;
    let mut boundary = 0.0_f64;
    for k in 0..trials {
        let f = sampling::functional(&mut rng, pi, kind, k)?;
        let a = sampling::path(&mut rng, &grid, n)?;
        let d = sampling::tangent(&mut rng, &grid, n)?;
        let g = f.gradient(&a)?;
        if kind == BoundaryKind::Periodic {
            boundary = g
                .alpha0
                .iter()
                .chain(&g.alpha1)
                .fold(boundary, |m, x| m.max(x.abs()));
        }
        let pair = g.pair(&d)?;
        let dd = f.directional_derivative(&a, &d)?;
        let rel = (dd - pair).abs() / pair.abs().max(1.0);
        worst = worst.max(rel);
        csv.push_str(&format!(
            "{},\"{}\",{dd:e},{pair:e},{rel:e}\n",
            k + 1,
            f.label().replace('"', "'")
        ));
    }
    let mut checks = vec![Check::at_most("worst_relative_error", worst, 1e-6)];
    if kind == BoundaryKind::Periodic {
        checks.push(Check::at_most("periodic_boundary_terms", boundary, 0.0));
    }
    let mut report = VerificationReport::new(
        "gradient-check",
        json!({ "n": n, "trials": trials, "kind": kind, "grid_n": grid_n }),
        seed,
        checks,
    );
    if trials == 0 {
        report.warnings.push("no trials requested; the check passes vacuously".into());
    }
    report.details = json!({ "worst_relative_error": worst });
    report.csv = csv;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bivector::presets;

    #[test]
    fn jacobi_reports() {
        let r = jacobi(&presets::so3(), 50, 1e-9, 0).unwrap();
        assert!(r.overall);
        let r = jacobi(&presets::non_poisson(), 50, 1e-9, 0).unwrap();
        assert!(!r.overall);
        assert!(r.details["witness"].is_array());
        assert!(jacobi(&presets::so3(), 0, 1e-9, 0).is_err());
    }

    #[test]
    fn report_text_and_json() {
        let r = jacobi(&presets::symplectic_plane(), 5, 1e-9, 1).unwrap();
        assert!(r.to_text().contains("[PASS] max_abs_jacobiator"));
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["overall"], true);
        assert_eq!(r.to_json(), jacobi(&presets::symplectic_plane(), 5, 1e-9, 1).unwrap().to_json());
    }

    #[test]
    fn gradient_check_with_no_trials() {
        let r = gradient_check(&presets::so3(), 0, BoundaryKind::SemiFree, 128, 0).unwrap();
        assert!(r.overall);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn coisotropy_zero_field() {
        let cfg = CoisotropyConfig {
            paths: 2,
            ..Default::default()
        };
        let r = coisotropy(&BivectorField::zero(2).unwrap(), &cfg, 4).unwrap();
        assert!(r.overall, "{}", r.to_text());
        assert_eq!(r.csv.lines().count(), 1 + 2 * 3 * 3);
    }
}
