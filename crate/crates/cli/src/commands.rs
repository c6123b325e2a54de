use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::json;

use greenlab_core::degrees::{degree_sequence, lambda_q_montecarlo, lambda_q_pair};
use greenlab_core::ergodics::{entropy_lower_estimate, lyapunov_coded, lyapunov_qr_with, LyapunovOptions, RadiusFunctions};
use greenlab_core::maps::catalog::{self, CATALOG};
use greenlab_core::maps::{
    calibrate_constants, conjugate_pair, contract_construct, load_map_json, map_to_json, p3_contract_coordinates, verify_contraction, CatalogMap,
    RationalMap,
};
use greenlab_core::measures::{
    correlation, empirical_integral, hypothesis_h_check, sample_mu_n, sample_mu_n_with, sample_nu_n, sample_nu_n_with, Coding, NuMethod, Observable,
    Verdict, WeightedCloud, H_TOLERANCE,
};
use greenlab_core::potentials::{green_many, hypothesis_strong_series, hypothesis_weak_integral, DistanceEstimator};
use greenlab_core::{Error, Precision};

use crate::output::{sha256_hex, PlotSeries, RunManifest, Sink};
use crate::{CatalogAction, Cli, Command, HypothesisKind, Method, Which};

/// Error classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Check(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Json(_)
            | Error::Schema(_)
            | Error::Invalid(_)
            | Error::NotInverse(_)
            | Error::DimensionMismatch { .. }
            | Error::NotHomogeneous(_)
            | Error::ZeroMap => Failure::Usage(msg),
            Error::ContractionNotVerified(_) => Failure::Check(msg),
            _ => Failure::Numeric(msg),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(format!("{e:#}"))
    }
}

type Res<T> = Result<T, Failure>;

/// A map from a catalog label or a JSON file, with the hash of its
/// canonical JSON form.
pub struct Loaded {
    pub map: CatalogMap,
    pub label: String,
    pub hash: String,
}

pub fn load_map(arg: &str) -> Res<Loaded> {
    let map = if Path::new(arg).is_file() {
        let text = fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("reading {arg}: {e}")))?;
        let (map, warnings) = load_map_json(&text).map_err(|e| match e {
            Error::Json(j) => Failure::Usage(format!("{arg}: invalid JSON: {j}")),
            other => Failure::from(other),
        })?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        map
    } else {
        catalog::by_label(arg)?
    };
    let canonical = serde_json::to_string(&map_to_json(&map)).map_err(|e| Failure::Numeric(e.to_string()))?;
    Ok(Loaded {
        label: map.forward().label.clone(),
        hash: sha256_hex(canonical.as_bytes()),
        map,
    })
}

fn command_map(cmd: &Command) -> Option<&str> {
    match cmd {
        Command::Catalog { .. } => None,
        Command::Degrees { map, .. }
        | Command::Green { map, .. }
        | Command::Hypothesis { map, .. }
        | Command::Measure { map, .. }
        | Command::Lyapunov { map, .. }
        | Command::Entropy { map, .. }
        | Command::Mixing { map, .. }
        | Command::Contract { map, .. } => Some(map),
    }
}

pub fn run(cli: &Cli, start: Instant) -> Res<()> {
    if cli.precision < 2 {
        return Err(Failure::Usage("precision must be at least 2 bits".into()));
    }
    let loaded = command_map(&cli.command).map(load_map).transpose()?;
    // The map argument is hashed through its content, not its spelling.
    let key = format!("{:?}", cli.command).replacen(command_map(&cli.command).unwrap_or(""), "", 1);
    let manifest = RunManifest::new(
        std::env::args().skip(1).collect(),
        &key,
        loaded.as_ref().map(|l| (l.label.as_str(), l.hash.as_str())),
        cli.seed,
        cli.precision,
        cli.threads,
    );
    let mut sink = Sink::new(manifest, cli.out_dir.clone());
    let precision = Precision(cli.precision);
    let seed = cli.seed;
    let check = match (&cli.command, loaded) {
        (Command::Catalog { action }, _) => catalog_cmd(action, &mut sink),
        (
            Command::Degrees {
                n,
                require_stable,
                q,
                samples,
                ..
            },
            Some(l),
        ) => degrees(&l, *n, *require_stable, *q, *samples, seed, precision, &mut sink),
        (Command::Green { n, points, grid, .. }, Some(l)) => green(&l, *n, *points, *grid, seed, precision, &mut sink),
        (
            Command::Hypothesis {
                kind,
                n,
                n_list,
                m,
                l: level,
                require_pass,
                ..
            },
            Some(l),
        ) => hypothesis(&l, *kind, *n, n_list, *m, *level, *require_pass, seed, &mut sink),
        (
            Command::Measure {
                which,
                l: level,
                n,
                m,
                method,
                observables,
                dump,
                ..
            },
            Some(l),
        ) => measure(&l, *which, *level, *n, *m, *method, observables, *dump, seed, &mut sink),
        (
            Command::Lyapunov {
                orbits, steps, qr_period, n, ..
            },
            Some(l),
        ) => lyapunov(&l, *orbits, *steps, *qr_period, *n, seed, precision, &mut sink),
        (
            Command::Entropy {
                n,
                m,
                probes,
                c0,
                big_l,
                k_const,
                p,
                block,
                ..
            },
            Some(l),
        ) => entropy(&l, *n, *m, *probes, *c0, *big_l, *k_const, *p, *block, seed, &mut sink),
        (Command::Mixing { phi, psi, n, m, .. }, Some(l)) => mixing(&l, phi, psi, *n, *m, seed, &mut sink),
        (
            Command::Contract {
                lambda,
                s,
                samples,
                orbit,
                p3_coordinates,
                ..
            },
            Some(l),
        ) => contract(&l, lambda, *s, *samples, *orbit, *p3_coordinates, seed, &mut sink),
        _ => unreachable!("every map command loads its map"),
    };
    // Outputs are written even when a requested check fails.
    let result = match check {
        Ok(None) => Ok(()),
        Ok(Some(msg)) => Err(Failure::Check(msg)),
        Err(e) => return Err(e),
    };
    sink.finish(start.elapsed().as_secs_f64())?;
    result
}

/// `Ok(Some(msg))` reports a failed check after the outputs are written.
type CheckRes = Res<Option<String>>;

fn catalog_cmd(action: &CatalogAction, sink: &mut Sink) -> CheckRes {
    match action {
        CatalogAction::List => {
            let rows: Vec<_> = CATALOG
                .iter()
                .map(|c| json!({ "label": c.label, "params": c.params, "summary": c.summary }))
                .collect();
            sink.json("catalog", &rows)?;
        }
        CatalogAction::Show { label } => {
            let m = catalog::by_label(label)?;
            let j = map_to_json(&m);
            let delta = m.pair().map(|p| p.delta());
            sink.json(
                &format!("map_{}", m.forward().label),
                &json!({ "d": m.forward().degree(), "delta": delta, "map": j }),
            )?;
        }
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn degrees(
    l: &Loaded,
    n: usize,
    require_stable: bool,
    q: Option<usize>,
    samples: usize,
    seed: u64,
    precision: Precision,
    sink: &mut Sink,
) -> CheckRes {
    if n == 0 {
        return Err(Failure::Usage("--N must be at least 1".into()));
    }
    let seq = degree_sequence(l.map.forward(), n)?;
    let mut table = PlotSeries::new("degrees", &["n", "degree"]);
    for (i, d) in &seq.entries {
        table.push(vec![*i as f64, *d as f64]);
    }
    sink.csv(&table);
    if let Some(q) = q {
        let e = match l.map.pair() {
            Some(p) => lambda_q_pair(p, q, samples, seed, precision)?,
            None => lambda_q_montecarlo(l.map.forward(), q, samples, seed, precision)?,
        };
        sink.json("lambda_q", &e)?;
    }
    Ok((require_stable && !seq.is_stable()).then(|| format!("degree drops at n = {}", seq.first_drop.unwrap_or(0))))
}

fn green(l: &Loaded, n: usize, points: usize, grid: Option<f64>, seed: u64, precision: Precision, sink: &mut Sink) -> CheckRes {
    let f = l.map.forward();
    let pts: Vec<Vec<Complex64>> = match grid {
        Some(r) => {
            if f.k() != 2 {
                return Err(Failure::Usage("--grid needs a map of P^2".into()));
            }
            let c = |x: f64| Complex64::new(x, 0.0);
            (0..100)
                .map(|i| (-r + 2.0 * r * (i / 10) as f64 / 9.0, -r + 2.0 * r * (i % 10) as f64 / 9.0))
                .map(|(x, y)| vec![c(x), c(y), c(1.0)])
                .collect()
        }
        None => greenlab_core::measures::fs_uniform_sample(f.k(), points, seed)?,
    };
    let series = green_many(f, &pts, n, precision);
    let mut cols = vec!["index".to_string()];
    for i in 0..=f.k() {
        cols.push(format!("re_z{i}"));
        cols.push(format!("im_z{i}"));
    }
    cols.extend(["g".into(), "tail_bound".into()]);
    let names: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut table = PlotSeries::new("green", &names);
    for (i, (z, s)) in pts.iter().zip(&series).enumerate() {
        let mut row = vec![i as f64];
        row.extend(z.iter().flat_map(|c| [c.re, c.im]));
        match s {
            Ok(s) => row.extend([s.value(), s.tail_bound]),
            Err(_) => row.extend([f64::NEG_INFINITY, f64::NAN]),
        }
        table.push(row);
    }
    sink.csv(&table);
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn hypothesis(
    l: &Loaded,
    kind: HypothesisKind,
    n: usize,
    n_list: &[usize],
    m: usize,
    level: usize,
    require_pass: bool,
    seed: u64,
    sink: &mut Sink,
) -> CheckRes {
    let need_pair = || l.map.pair().ok_or_else(|| Failure::Usage("this check needs a birational pair".into()));
    match kind {
        HypothesisKind::Strong => {
            let r = hypothesis_strong_series(need_pair()?, n, 4, DistanceEstimator::Proxy, seed)?;
            let mut t = PlotSeries::new(
                "strong_series",
                &["n", "forward_term", "forward_partial_sum", "backward_term", "backward_partial_sum"],
            );
            for i in 0..r.forward.terms.len() {
                t.push(vec![
                    i as f64,
                    r.forward.terms[i],
                    r.forward.partial_sums[i],
                    r.backward.terms[i],
                    r.backward.partial_sums[i],
                ]);
            }
            sink.csv(&t);
            sink.json("strong_series", &r)?;
            let ok = r.verdict == greenlab_core::potentials::Verdict::Converges;
            Ok((require_pass && !ok).then(|| format!("strong series verdict {:?}", r.verdict)))
        }
        HypothesisKind::Weak => {
            let pair = need_pair()?;
            let mut t = PlotSeries::new("weak_series", &["n", "integral", "stderr", "weighted"]);
            for i in 0..=n {
                let w = hypothesis_weak_integral(pair, i, m, greenlab_core::stream::child_seed(seed, i as u64))?;
                t.push(vec![i as f64, w.integral, w.stderr, w.weighted]);
            }
            sink.csv(&t);
            Ok(None)
        }
        HypothesisKind::H => {
            let h = hypothesis_h_check(l.map.forward(), level, n_list, m, seed, H_TOLERANCE)?;
            let mut t = PlotSeries::new("hypothesis_h", &["n", "i_n", "stderr", "dropped_mass"]);
            for e in &h.entries {
                t.push(vec![e.n as f64, e.value, e.stderr, e.dropped_mass]);
            }
            sink.csv(&t);
            sink.json("hypothesis_h", &h)?;
            Ok((require_pass && h.verdict != Verdict::Pass).then(|| format!("(H) check verdict {:?}", h.verdict)))
        }
    }
}

fn nu_method(m: Method) -> NuMethod {
    match m {
        Method::Auto => NuMethod::Auto,
        Method::Importance => NuMethod::Importance,
        Method::Crofton => NuMethod::Crofton,
    }
}

#[allow(clippy::too_many_arguments)]
fn measure(
    l: &Loaded,
    which: Which,
    level: usize,
    n: usize,
    m: usize,
    method: Method,
    observables: &[String],
    dump: bool,
    seed: u64,
    sink: &mut Sink,
) -> CheckRes {
    let f = l.map.forward();
    let cloud = match which {
        Which::Nu => sample_nu_n_with(f, level, n, m, seed, nu_method(method))?,
        Which::Mu => sample_mu_n_with(f, level, n, m, seed, nu_method(method))?,
    };
    let mut rows = Vec::new();
    for text in observables {
        let obs = Observable::parse(text, Some(f))?;
        let (value, stderr) = empirical_integral(&cloud, |z| obs.eval(z))?;
        rows.push(json!({ "observable": obs.name, "value": value, "stderr": stderr }));
    }
    sink.json("measure", &json!({ "meta": cloud.meta, "integrals": rows }))?;
    if dump {
        sink.csv(&cloud_table(&cloud));
    }
    Ok(None)
}

fn cloud_table(cloud: &WeightedCloud) -> PlotSeries {
    let k = cloud.k();
    let mut cols = Vec::new();
    for i in 0..=k {
        cols.push(format!("re_z{i}"));
        cols.push(format!("im_z{i}"));
    }
    cols.push("weight".into());
    let names: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut t = PlotSeries::new("cloud", &names);
    for (z, w) in cloud.points.iter().zip(&cloud.weights) {
        let mut row: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
        row.push(*w);
        t.push(row);
    }
    t
}

/// μ-distributed cloud: exact coding when the map has one, else `μ_n`.
fn mu_cloud(f: &RationalMap, n: usize, m: usize, seed: u64) -> Res<WeightedCloud> {
    match Coding::for_map(f) {
        Some(c) => Ok(c.cloud(&f.label, m, seed)?),
        None => Ok(sample_mu_n(f, 1, n, m, seed)?),
    }
}

#[allow(clippy::too_many_arguments)]
fn lyapunov(l: &Loaded, orbits: usize, steps: usize, qr_period: usize, n: usize, seed: u64, precision: Precision, sink: &mut Sink) -> CheckRes {
    let f = l.map.forward();
    let est = match Coding::for_map(f) {
        Some(c) => lyapunov_coded(f, &c.orbits(orbits, steps, seed)?, qr_period, seed)?,
        None => {
            let cloud = sample_mu_n(f, 1, n, orbits.max(1000), seed)?;
            lyapunov_qr_with(f, &cloud, steps, precision, seed, LyapunovOptions { orbits, qr_period })?
        }
    };
    let dropped = est.dropped as f64 / est.orbits.max(1) as f64;
    sink.json(
        "lyapunov",
        &json!({
            "value": est.exponents, "stderr": est.stderr, "seed": seed, "dropped_mass": dropped,
            "params": { "orbits": orbits, "steps": steps, "qr_period": qr_period, "coded": Coding::for_map(f).map(|c| c.name()) },
            "log_det": est.log_det, "log_det_stderr": est.log_det_stderr,
        }),
    )?;
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn entropy(
    l: &Loaded,
    n: usize,
    m: usize,
    probes: usize,
    c0: f64,
    big_l: Option<f64>,
    k_const: Option<f64>,
    p: Option<f64>,
    block: usize,
    seed: u64,
    sink: &mut Sink,
) -> CheckRes {
    let f = l.map.forward();
    let holo = f.is_holomorphic();
    let big_l = match big_l {
        Some(v) => v,
        None if holo => 0.0,
        None => {
            let h = hypothesis_h_check(f, 1, &[2, 3, 4], 500, greenlab_core::stream::child_seed(seed, 1), H_TOLERANCE)?;
            -h.entries.last().map_or(0.0, |e| e.value)
        }
    };
    let radii = if holo {
        let d = RadiusFunctions::holomorphic_default();
        RadiusFunctions::new(k_const.unwrap_or(d.k_const), p.unwrap_or(d.p), block, true)?
    } else {
        let (k0, p0) = match (k_const, p) {
            (Some(k), Some(p)) => (k, p),
            (k, pp) => {
                let data = f.indeterminacy().ok_or_else(|| Failure::Usage("map has no indeterminacy data".into()))?;
                let c = calibrate_constants(f, data, 2000, greenlab_core::stream::child_seed(seed, 2))?;
                (k.unwrap_or(c.k), pp.unwrap_or(c.p))
            }
        };
        RadiusFunctions::new(k0, p0, block, false)?
    };
    let cloud = match Coding::for_map(f) {
        Some(c) => c.cloud(&f.label, m, seed)?,
        None => sample_nu_n(f, 1, 1, m, seed)?,
    };
    let e = entropy_lower_estimate(f, 1, n, &cloud, &radii, c0, big_l, probes, greenlab_core::stream::child_seed(seed, 3))?;
    sink.json(
        "entropy",
        &json!({
            "value": e.value, "stderr": e.stderr, "seed": seed, "dropped_mass": cloud.meta.dropped_mass,
            "reference": e.reference, "good_fraction": e.good_fraction,
            "params": { "n": n, "M": m, "probes": probes, "C0": c0, "L": big_l, "K": radii.k_const, "p": radii.p, "m": block, "cloud": cloud.meta.estimator },
        }),
    )?;
    Ok(None)
}

fn mixing(l: &Loaded, phi: &str, psi: &str, n: usize, m: usize, seed: u64, sink: &mut Sink) -> CheckRes {
    let f = l.map.forward();
    let cloud = mu_cloud(f, 4, m, seed)?;
    let a = Observable::parse(phi, Some(f))?;
    let b = Observable::parse(psi, Some(f))?;
    let t = correlation(f, &cloud, &a, &b, n)?;
    let mut table = PlotSeries::new("mixing", &["n", "c_n", "stderr", "dropped_mass"]);
    for i in 0..=n {
        table.push(vec![i as f64, t.c[i], t.stderr[i], t.dropped_mass[i]]);
    }
    sink.csv(&table);
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn contract(l: &Loaded, lambda: &str, s: usize, samples: usize, orbit: usize, p3_coordinates: bool, seed: u64, sink: &mut Sink) -> CheckRes {
    let lam: BigRational = lambda.parse().map_err(|_| Failure::Usage(format!("bad rational {lambda:?}")))?;
    let pair = l.map.pair().ok_or_else(|| Failure::Usage("contract needs a birational pair".into()))?;
    let pair = if p3_coordinates {
        conjugate_pair(pair, &p3_contract_coordinates(), &format!("{}_contract", l.label))?
    } else {
        pair.clone()
    };
    let g = contract_construct(&pair.forward, &lam, s)?;
    let lam_f = num_traits::ToPrimitive::to_f64(&lam).unwrap_or(f64::NAN);
    match verify_contraction(&pair, &g, lam_f, s, samples, orbit, seed) {
        Ok(rep) => {
            sink.json(
                "contract",
                &json!({ "verified": true, "report": rep, "map": map_to_json(&CatalogMap::Map(g)) }),
            )?;
            Ok(None)
        }
        Err(Error::ContractionNotVerified(msg)) => {
            sink.json("contract", &json!({ "verified": false, "reason": msg }))?;
            Ok(Some(format!("contraction not verified: {msg}")))
        }
        Err(e) => Err(e.into()),
    }
}
