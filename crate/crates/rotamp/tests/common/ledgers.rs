//! Random admissible ledgers and the partial-moment matrix identities, with every matrix
//! family built from its defining double sum.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotamp::amp_engine::{onsager_rectangular, onsager_symmetric, CumulantSource, OnsagerLedger};
use rotamp::freeprob::{partial_moment_coeffs, rect_partial_moment_coeffs, CumulantTable, PartialMomentTable};

pub type M = DMatrix<f64>;

pub fn pows(p: &M, count: usize) -> Vec<M> {
    let t = p.nrows();
    let mut out = vec![M::identity(t, t)];
    for j in 1..count {
        out.push(p * &out[j - 1]);
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, t: usize, lo: f64, hi: f64) -> M {
    M::from_fn(t, t, |_, _| rng.random_range(lo..hi))
}

fn psd(rng: &mut ChaCha8Rng, t: usize) -> M {
    let g = uniform(rng, t, -1.0, 1.0);
    &g * g.transpose() / t as f64
}

/// Lower-triangular random matrix; `diag` keeps the diagonal.
fn lower(rng: &mut ChaCha8Rng, t: usize, diag: bool) -> M {
    let mut m = uniform(rng, t, -0.8, 0.8);
    for i in 0..t {
        for j in i..t {
            if j > i || !diag {
                m[(i, j)] = 0.0;
            }
        }
    }
    m
}

fn cumulants(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `max |a - b| / max(1, max |a|)`.
pub fn rel_err(a: &M, b: &M) -> f64 {
    (a - b).amax() / a.amax().max(1.0)
}

fn block(a: &M, b: &M, c: &M, d: &M) -> M {
    let t = a.nrows();
    let mut out = M::zeros(2 * t, 2 * t);
    out.view_mut((0, 0), (t, t)).copy_from(a);
    out.view_mut((0, t), (t, t)).copy_from(b);
    out.view_mut((t, 0), (t, t)).copy_from(c);
    out.view_mut((t, t), (t, t)).copy_from(d);
    out
}

fn series(terms: &[M], coeff: impl Fn(usize) -> f64) -> M {
    let t = terms[0].nrows();
    terms.iter().enumerate().fold(M::zeros(t, t), |acc, (j, m)| acc + m * coeff(j))
}

fn c(table: &PartialMomentTable, k: usize, j: usize) -> f64 {
    table.get(k, j).expect("coefficient in range")
}

fn cb(table: &PartialMomentTable, k: usize, j: usize) -> f64 {
    table.get_bar(k, j).expect("coefficient in range")
}

/// Largest relative error over the symmetric identities for one random ledger of size `t`.
pub fn symmetric_identities(seed: u64, t: usize) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = psd(&mut rng, t);
    let phi = lower(&mut rng, t, false);
    let j_top = 2 * t + 1;
    let k_top = 6;
    let kappa = cumulants(&mut rng, k_top + j_top + 2);
    let table = partial_moment_coeffs(&kappa, k_top, j_top + 2).unwrap();
    let ledger = OnsagerLedger::symmetric(
        delta.clone(),
        phi.clone(),
        CumulantTable::square_from_cumulants(&kappa),
        CumulantSource::Limit,
    )
    .unwrap();
    let (b, sigma) = onsager_symmetric(&ledger).unwrap();

    let p = pows(&phi, j_top + 2);
    let theta: Vec<M> = (0..=j_top)
        .map(|j| (0..=j).fold(M::zeros(t, t), |acc, i| acc + &p[i] * &delta * p[j - i].transpose()))
        .collect();
    let l: Vec<M> = (0..=k_top).map(|k| series(&theta, |j| c(&table, k, j))).collect();
    let id = M::identity(t, t);
    let ups = block(&delta, &(&delta * &b + &phi * &sigma), &phi.transpose(), &(phi.transpose() * &b + &id));
    let l_mat = |k: usize| block(&l[k], &l[k + 1], &l[k + 1], &l[k + 2]);

    let mut out = vec![
        ("L0", rel_err(&l[0], &delta)),
        ("L1 first form", rel_err(&l[1], &(&delta * &b + &phi * &sigma))),
        ("L1 second form", rel_err(&l[1], &(b.transpose() * &delta + &sigma * phi.transpose()))),
        (
            "L2",
            rel_err(
                &l[2],
                &(b.transpose() * &delta * &b
                    + b.transpose() * &phi * &sigma
                    + &sigma * phi.transpose() * &b
                    + &sigma),
            ),
        ),
    ];
    let mut inv = 0.0f64;
    let mut inv2 = 0.0f64;
    for k in 0..=4 {
        let lhs = {
            let mut m = M::zeros(t, 2 * t);
            m.view_mut((0, 0), (t, t)).copy_from(&l[k]);
            m.view_mut((0, t), (t, t)).copy_from(&l[k + 1]);
            m
        };
        let left = {
            let mut m = M::zeros(t, 2 * t);
            m.view_mut((0, 0), (t, t)).copy_from(&series(&p[..=j_top], |j| c(&table, k, j)));
            m.view_mut((0, t), (t, t)).copy_from(&series(&theta, |j| c(&table, k, j + 1)));
            m
        };
        inv = inv.max(rel_err(&lhs, &(left * &ups)));

        let s1 = series(&p[..=j_top], |j| c(&table, k, j + 1));
        let s2 = series(&theta, |j| c(&table, k, j + 2));
        let mid = block(&M::zeros(t, t), &s1.transpose(), &s1, &s2);
        let rhs = l_mat(0) * c(&table, k, 0) + ups.transpose() * mid * &ups;
        inv2 = inv2.max(rel_err(&l_mat(k), &rhs));
    }
    out.push(("upsilon inverse", inv));
    out.push(("upsilon inverse, second form", inv2));
    out
}

/// Largest relative error over the rectangular identities for one random ledger of size `t`.
pub fn rect_identities(seed: u64, t: usize) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = rng.random_range(0.2..2.0);
    let delta = psd(&mut rng, t);
    let gamma_mat = psd(&mut rng, t);
    let phi = lower(&mut rng, t, false);
    let psi = lower(&mut rng, t, true);
    let j_top = 2 * t + 1;
    let rows: usize = 9;
    let kappa = cumulants(&mut rng, rows.div_ceil(2) + j_top + 1);
    let table = rect_partial_moment_coeffs(&kappa, gamma, rows, j_top + 1).unwrap();
    let ledger = OnsagerLedger::rectangular(
        delta.clone(),
        phi.clone(),
        gamma_mat.clone(),
        psi.clone(),
        CumulantTable::rect_from_cumulants(&kappa, gamma),
        gamma,
        CumulantSource::Limit,
    )
    .unwrap();
    let on = onsager_rectangular(&ledger).unwrap();
    let (a, b, sigma, omega) = (&on.a, &on.b, &on.sigma, &on.omega);

    let fp = pows(&(&phi * &psi), j_top + 2);
    let pf = pows(&(&psi * &phi), j_top + 2);
    let theta: Vec<M> = (0..=j_top)
        .map(|j| {
            let first = (0..=j).fold(M::zeros(t, t), |acc, i| acc + &fp[i] * &delta * fp[j - i].transpose());
            (0..j).fold(first, |acc, i| {
                acc + &fp[i] * &phi * &gamma_mat * phi.transpose() * fp[j - 1 - i].transpose()
            })
        })
        .collect();
    let xi: Vec<M> = (0..=j_top)
        .map(|j| {
            let first = (0..=j).fold(M::zeros(t, t), |acc, i| acc + &pf[i] * &gamma_mat * pf[j - i].transpose());
            (0..j).fold(first, |acc, i| acc + &pf[i] * &psi * &delta * psi.transpose() * pf[j - 1 - i].transpose())
        })
        .collect();
    let x: Vec<M> = (0..=j_top)
        .map(|j| {
            (0..=j).fold(M::zeros(t, t), |acc, i| {
                acc + &pf[i] * (&psi * &delta + &gamma_mat * phi.transpose()) * fp[j - i].transpose()
            })
        })
        .collect();
    let xt: Vec<M> = x.iter().map(|m| m.transpose()).collect();
    let kk = rows / 2;
    let h: Vec<M> = (0..=kk).map(|k| series(&theta, |j| c(&table, 2 * k, j))).collect();
    let ii: Vec<M> = (0..kk).map(|k| series(&x, |j| c(&table, 2 * k + 1, j))).collect();
    let jj: Vec<M> = (0..kk).map(|k| series(&xt, |j| cb(&table, 2 * k + 1, j))).collect();
    let l: Vec<M> = (0..=kk).map(|k| series(&xi, |j| cb(&table, 2 * k, j))).collect();

    let id = M::identity(t, t);
    let (ft, pt) = (phi.transpose(), psi.transpose());
    let ups = block(&delta, &(&delta * a + &phi * sigma), &ft, &(&ft * a + &id));
    let tt = block(&gamma_mat, &(&gamma_mat * b + &psi * omega), &pt, &(&pt * b + &id));

    let mut out = vec![
        ("H0", rel_err(&h[0], &delta)),
        ("L0 (rectangular)", rel_err(&l[0], &gamma_mat)),
        ("I1 first form", rel_err(&ii[0], &(a.transpose() * &delta + sigma * &ft))),
        ("I1 second form", rel_err(&ii[0], &((&gamma_mat * b + &psi * omega) / gamma))),
        ("J1 first form", rel_err(&jj[0], &(b.transpose() * &gamma_mat + omega * &pt))),
        ("J1 second form", rel_err(&jj[0], &((&delta * a + &phi * sigma) * gamma))),
        (
            "L2 (rectangular)",
            rel_err(
                &l[1],
                &((a.transpose() * &delta * a + a.transpose() * &phi * sigma + sigma * &ft * a + sigma) * gamma),
            ),
        ),
        (
            "H2",
            rel_err(
                &h[1],
                &((b.transpose() * &gamma_mat * b + b.transpose() * &psi * omega + omega * &pt * b + omega) / gamma),
            ),
        ),
    ];
    let ij = (0..kk).fold(0.0f64, |e, k| e.max(rel_err(&jj[k], &(ii[k].transpose() * gamma))));
    out.push(("J = gamma I^T", ij));

    let (mut u1, mut u2, mut t1, mut t2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let zero = M::zeros(t, t);
    for k in 0..=3 {
        let lhs = block(&h[k], &ii[k].transpose(), &ii[k], &(&l[k + 1] / gamma));
        let left = block(
            &series(&fp[..=j_top], |j| c(&table, 2 * k, j)),
            &series(&xt, |j| c(&table, 2 * k, j + 1)),
            &(series(&pf[..=j_top], |j| c(&table, 2 * k + 1, j)) * &psi),
            &series(&xi, |j| c(&table, 2 * k + 1, j)),
        );
        u1 = u1.max(rel_err(&lhs, &(left * &ups)));
        let s = series(&pf[..=j_top], |j| c(&table, 2 * k, j + 1)) * &psi;
        let mid = block(&zero, &s.transpose(), &s, &series(&xi, |j| c(&table, 2 * k, j + 1)));
        let base = block(&h[0], &ii[0].transpose(), &ii[0], &(&l[1] / gamma));
        u2 = u2.max(rel_err(&lhs, &(base * c(&table, 2 * k, 0) + ups.transpose() * mid * &ups)));

        let lhs = block(&l[k], &jj[k].transpose(), &jj[k], &(&h[k + 1] * gamma));
        let left = block(
            &series(&pf[..=j_top], |j| cb(&table, 2 * k, j)),
            &series(&x, |j| cb(&table, 2 * k, j + 1)),
            &(series(&fp[..=j_top], |j| cb(&table, 2 * k + 1, j)) * &phi),
            &series(&theta, |j| cb(&table, 2 * k + 1, j)),
        );
        t1 = t1.max(rel_err(&lhs, &(left * &tt)));
        let s = series(&fp[..=j_top], |j| cb(&table, 2 * k, j + 1)) * &phi;
        let mid = block(&zero, &s.transpose(), &s, &series(&theta, |j| cb(&table, 2 * k, j + 1)));
        let base = block(&l[0], &jj[0].transpose(), &jj[0], &(&h[1] * gamma));
        t2 = t2.max(rel_err(&lhs, &(base * cb(&table, 2 * k, 0) + tt.transpose() * mid * &tt)));
    }
    out.push(("Upsilon inverse (rectangular)", u1));
    out.push(("Upsilon inverse (rectangular), second form", u2));
    out.push(("T inverse", t1));
    out.push(("T inverse, second form", t2));
    out
}

/// Random `(Delta, Phi, Gamma, Psi, gamma)` with the shapes an AMP run produces.
pub fn random_parts(seed: u64, t: usize) -> (M, M, M, M, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = rng.random_range(0.2..2.0);
    let delta = psd(&mut rng, t);
    let gamma_mat = psd(&mut rng, t);
    let phi = lower(&mut rng, t, false);
    let psi = lower(&mut rng, t, true);
    (delta, phi, gamma_mat, psi, gamma)
}

/// Largest entrywise gap between the Onsager matrices under semicircle (symmetric) and
/// Marchenko–Pastur (rectangular) cumulants and their Gaussian-noise forms.
pub fn gaussian_specialization(seed: u64, t: usize) -> f64 {
    let (delta, phi, gamma_mat, psi, gamma) = random_parts(seed, t);
    let unit = |at: usize| -> Vec<f64> { (0..2 * t).map(|k| if k == at { 1.0 } else { 0.0 }).collect() };

    let l = OnsagerLedger::symmetric(
        delta.clone(),
        phi.clone(),
        CumulantTable::square_from_cumulants(&unit(1)),
        CumulantSource::Limit,
    )
    .unwrap();
    let (b, sigma) = onsager_symmetric(&l).unwrap();
    let mut err = (b - phi.transpose()).amax().max((sigma - &delta).amax());

    let r = OnsagerLedger::rectangular(
        delta.clone(),
        phi.clone(),
        gamma_mat.clone(),
        psi.clone(),
        CumulantTable::rect_from_cumulants(&unit(0), gamma),
        gamma,
        CumulantSource::Limit,
    )
    .unwrap();
    let on = onsager_rectangular(&r).unwrap();
    for e in [
        (on.a - psi.transpose()).amax(),
        (on.b - phi.transpose() * gamma).amax(),
        (on.sigma - gamma_mat).amax(),
        (on.omega - delta * gamma).amax(),
    ] {
        err = err.max(e);
    }
    err
}
