//! One function per subcommand, each a thin call into the library.

use std::path::PathBuf;

use serde_json::json;

use pointgas::bounds::{assemble_ledger, occupation_table, LedgerConstants};
use pointgas::cache::Cache;
use pointgas::freefermi::{density_at, f_density, Boundary};
use pointgas::hardy::{lemma_scan, Lemma, LemmaScanOptions};
use pointgas::spectral2::{compare_pair, radial_spectrum, unitary_eigenvalue, InteractingOptions, RadialProblem, WeightKind};

use crate::config::{Command, RunConfig};
use crate::output::{Cell, Outcome, Table};
use crate::CliError;

const TWO_SQRT3: f64 = 3.464_101_615_137_754_6;

/// Cache directory when `POINTGAS_CACHE_DIR` is unset.
pub const DEFAULT_CACHE_DIR: &str = ".pointgas-cache";

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Fermi => fermi(cfg),
        Command::Hardy => hardy(cfg),
        Command::Twobody => twobody(cfg),
        Command::Spectrum2 => spectrum2(cfg),
        Command::Occupations => occupations(cfg),
        Command::Ledger => ledger(cfg),
    }
}

fn boundary(s: &str) -> Boundary {
    s.parse().expect("validated choice")
}

fn fermi(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (beta, rho, q) = (cfg.f64("beta"), cfg.f64("rho"), cfg.u32("q")?);
    let p = f_density(beta, rho, q)?;
    let mut t = Table::new(&["beta", "rho", "q", "mu", "f", "pressure", "error"]);
    t.push(vec![p.beta.cell(), p.rho.cell(), p.q.cell(), p.mu.cell(), p.f.cell(), p.pressure.cell(), p.error.cell()]);
    let back = density_at(beta, p.mu, q)?;
    let mut o = Outcome::new(t, &p)?;
    o.check(p.f.is_finite() && p.mu.is_finite(), "non-finite free energy");
    o.check((back - rho).abs() <= 1e-8 * rho, format!("density at mu* is {back}, not {rho}"));
    Ok(o)
}

fn hardy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let lemma = if cfg.get("lemma") == "ball" { Lemma::Ball } else { Lemma::Box };
    let opts = LemmaScanOptions {
        lemma,
        ell: cfg.f64("ell"),
        c0: cfg.f64("c0"),
        c1: cfg.f64("c1"),
        samples: cfg.usize("samples")?,
        resolution: cfg.usize("resolution")?,
        seed: cfg.u64("seed"),
    };
    let rows = lemma_scan(&opts)?;
    let threshold = cfg.f64("min-lambda");
    let mut t = Table::new(&["y0", "y1", "y2", "h", "lambda", "residual", "dofs", "pass"]);
    for r in &rows {
        t.push(vec![
            r.y[0].cell(),
            r.y[1].cell(),
            r.y[2].cell(),
            r.h.cell(),
            r.lambda.cell(),
            r.residual.cell(),
            r.dofs.cell(),
            (r.lambda >= threshold).cell(),
        ]);
    }
    let min = rows.iter().map(|r| r.lambda).fold(f64::INFINITY, f64::min);
    let mut o = Outcome::new(t, json!({ "options": opts, "min_lambda": min, "rows": rows }))?;
    for r in rows.iter().filter(|r| r.lambda < threshold) {
        o.check(false, format!("lambda {} < {threshold} at y = {:?}", r.lambda, r.y));
    }
    Ok(o)
}

fn twobody(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = RadialProblem {
        outer: boundary(cfg.get("outer")),
        ..RadialProblem::new(cfg.f64("a-inv"), cfg.f64("radius"), cfg.usize("elements")?)
    };
    let s = radial_spectrum(&p, cfg.usize("levels")?)?;
    let exact = p.a_inv == 0.0 && p.outer == Boundary::Dirichlet;
    let mut t = Table::new(&["k", "energy", "multiplicity", "reference", "rel_error"]);
    for (k, (&e, &m)) in s.eigenvalues.iter().zip(&s.multiplicities).enumerate() {
        let reference = exact.then(|| unitary_eigenvalue(p.radius, k));
        let rel = reference.map(|r| (e - r).abs() / r);
        t.push(vec![k.cell(), e.cell(), m.cell(), reference.cell(), rel.cell()]);
    }
    let mut o = Outcome::new(t, json!({ "problem": p, "spectrum": s }))?;
    o.check(s.eigenvalues.iter().all(|e| e.is_finite()), "non-finite eigenvalue");
    o.check(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]), "eigenvalues out of order");
    o.check(s.eigenvalues.iter().all(|e| *e >= -1e-10), "negative eigenvalue of a positive form");
    Ok(o)
}

/// The spectrum cache for this process.
pub fn cache() -> Cache {
    Cache::from_env(DEFAULT_CACHE_DIR)
}

fn spectrum2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = InteractingOptions {
        bc: boundary(cfg.get("bc")),
        weight: if cfg.get("weight") == "unit" { WeightKind::Unit } else { WeightKind::Interacting },
        basis_cutoff: cfg.u32("basis")?,
        cusp: cfg.bool("cusp"),
        energy_cutoff: None,
        entropy_c: cfg.f64("entropy-c"),
    };
    let cache = cfg.bool("cache").then(cache);
    let c = compare_pair(cfg.f64("beta"), cfg.f64("side"), cfg.u32("q")?, &opts, cache.as_ref())?;
    let mut t = Table::new(&["sector", "energy", "degeneracy", "residual"]);
    for l in &c.levels {
        t.push(vec![l.sector.to_string(), l.energy.cell(), l.degeneracy.cell(), l.residual.cell()]);
    }
    let cache_dir: Option<PathBuf> = cache.as_ref().map(|c| c.dir().to_path_buf());
    let margin = c.margin();
    let tol = cfg.f64("tol") * c.free.abs();
    let controlled = c.interacting.free_energy.is_some();
    let mut o = Outcome::new(
        t,
        json!({
            "options": opts,
            "free_energy_interacting": c.interacting.free_energy,
            "interval": c.interacting.interval,
            "free_energy_free": c.free,
            "margin": margin,
            "tail_bound": c.interacting.tail_bound,
            "energy_cutoff": c.interacting.energy_cutoff,
            "sectors": c.interacting.sectors,
            "cache_dir": cache_dir,
        }),
    )?;
    o.check(controlled, "tail of the pair spectrum is not controlled at this cutoff");
    o.check(margin >= -tol, format!("F_g exceeds F by {}", -margin));
    Ok(o)
}

fn occupations(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (n, m, q) = (cfg.usize("N")?, cfg.usize("m")?, cfg.u32("q")?);
    let table = occupation_table(cfg.f64("side"), m, n, q, cfg.f64("kappa"), cfg.usize("max-rows")?)?;
    let mut t = Table::new(&["counts", "ground_count", "k_minus", "k_plus", "v", "kinetic"]);
    let mut comparable = true;
    for r in &table.rows {
        let counts: Vec<String> = r.counts.iter().map(|c| c.to_string()).collect();
        t.push(vec![
            counts.join(" "),
            r.ground_count.to_string(),
            r.stats.k_minus.cell(),
            r.stats.k_plus.cell(),
            r.stats.v.cell(),
            r.kinetic.cell(),
        ]);
        comparable &= r.stats.k_minus <= r.stats.k_plus && r.stats.k_plus <= (1.0 + TWO_SQRT3) * r.stats.k_minus * (1.0 + 1e-12);
    }
    let mut o = Outcome::new(
        t,
        json!({
            "N": n,
            "m": m,
            "q": q,
            "boxes": m * m * m,
            "enumerated_sum": table.enumerated_sum.to_string(),
            "ground_sum": table.ground_sum.to_string(),
            "binomial": table.binomial.to_string(),
            "identity_holds": table.identity_holds(),
        }),
    )?;
    o.check(table.identity_holds(), "ground-state sum differs from C(qM, N)");
    o.check(comparable, "K- <= K+ <= (1 + 2 sqrt 3) K- violated");
    Ok(o)
}

fn ledger(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let k = LedgerConstants { c: cfg.f64("c"), kappa: cfg.f64("kappa"), c_eta: cfg.f64("c-eta"), c_delta: cfg.f64("c-delta") };
    let l = assemble_ledger(cfg.f64("beta"), cfg.usize("N")?, cfg.f64("rho"), cfg.u32("q")?, &k)?;
    let cols = [
        "N",
        "rho",
        "beta",
        "q",
        "ell",
        "m",
        "e_bar",
        "e0",
        "delta",
        "finite_size_defect",
        "tail_term",
        "norm_penalty",
        "f_local",
        "f_free",
        "f_lower",
        "headline_deficit",
        "deficit_per_particle",
        "feasible",
    ];
    let term = |name: &str| l.terms.get(name).copied();
    let mut t = Table::new(&cols);
    t.push(vec![
        l.n.cell(),
        l.rho.cell(),
        l.beta.cell(),
        l.q.cell(),
        l.ell.cell(),
        l.m.cell(),
        l.e_bar.cell(),
        l.e0.cell(),
        l.delta.delta.cell(),
        term("finite_size_defect").cell(),
        term("tail_term").cell(),
        term("norm_penalty").cell(),
        l.f_local.cell(),
        l.f_free.cell(),
        l.f_lower.cell(),
        l.headline_deficit.cell(),
        l.deficit_per_particle.cell(),
        l.feasible.cell(),
    ]);
    let mut o = Outcome::new(t, &l)?;
    o.check(l.terms.values().all(|v| v.is_finite()), "non-finite ledger term");
    if let Some(lo) = l.f_lower {
        o.check(lo <= l.f_free, format!("lower bound {lo} above the free energy {}", l.f_free));
    }
    Ok(o)
}
