//! Closed-form predictors: entanglement-membrane curves for random Clifford
//! circuits and the quasiparticle picture for free-fermion quenches.
//!
//! Membrane speeds are quoted in double-layer time units (one even-odd
//! brickwork layer per unit time); the line tension itself lives in
//! half-layer units where |v| <= 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("velocity {0} outside [-1, 1]")]
    VelocityOutOfRange(f64),
    #[error("local dimension must be >= 2, got {0}")]
    BadLocalDimension(u32),
    #[error("region size {0} invalid for L = {1}")]
    BadRegion(usize, usize),
    #[error("k-grid needs >= 1024 points, got {0}")]
    GridTooCoarse(usize),
    #[error("|Delta| must be < 1, got {0}")]
    BadDimerization(f64),
    #[error("no edge mode for Delta = {0} >= 0")]
    NoEdgeMode(f64),
}

/// Second-Renyi line tension
/// E_2(v) = log_d (d^2+1)/d + ((1+v)/2) log_d ((1+v)/2)
///        + ((1-v)/2) log_d ((1-v)/2), with 0 log 0 := 0.
pub fn line_tension(v: f64, d: u32) -> Result<f64, TheoryError> {
    if d < 2 {
        return Err(TheoryError::BadLocalDimension(d));
    }
    if !(-1.0..=1.0).contains(&v) {
        return Err(TheoryError::VelocityOutOfRange(v));
    }
    let dd = d as f64;
    let ln_d = dd.ln();
    let xlx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() / ln_d };
    Ok(((dd * dd + 1.0) / dd).ln() / ln_d + xlx((1.0 + v) / 2.0) + xlx((1.0 - v) / 2.0))
}

/// dE_2/dv = (1/2) log_d ((1+v)/(1-v)), for |v| < 1.
pub fn line_tension_derivative(v: f64, d: u32) -> Result<f64, TheoryError> {
    if d < 2 {
        return Err(TheoryError::BadLocalDimension(d));
    }
    if v.abs() >= 1.0 {
        return Err(TheoryError::VelocityOutOfRange(v));
    }
    Ok(0.5 * ((1.0 + v) / (1.0 - v)).ln() / (d as f64).ln())
}

/// Entanglement speed v_E = 2 E_2(0) in double-layer units.
pub fn v_entanglement(d: u32) -> Result<f64, TheoryError> {
    Ok(2.0 * line_tension(0.0, d)?)
}

/// Butterfly speed v_B = 2 (d^2-1)/(d^2+1) in double-layer units.
pub fn v_butterfly(d: u32) -> Result<f64, TheoryError> {
    if d < 2 {
        return Err(TheoryError::BadLocalDimension(d));
    }
    let dd = d as f64;
    Ok(2.0 * (dd * dd - 1.0) / (dd * dd + 1.0))
}

/// Membrane MI for the one-to-one encoding, region of L_A sites centered on
/// the encoded site. Sharp breakpoint at t* = L_A / (2 v_E).
pub fn predict_one_to_one(l: usize, l_a: usize, t: f64, d: u32) -> Result<f64, TheoryError> {
    if l_a == 0 || l_a > l {
        return Err(TheoryError::BadRegion(l_a, l));
    }
    let ve = v_entanglement(d)?;
    let t_star = l_a as f64 / (2.0 * ve);
    Ok(if 2 * l_a < l {
        if t < t_star {
            2.0
        } else {
            0.0
        }
    } else if 2 * l_a == l {
        if t < t_star {
            2.0
        } else {
            1.0
        }
    } else {
        2.0
    })
}

/// Membrane MI for the one-to-all (GHZ) encoding; starts at 1 for any
/// 0 < L_A < L and splits at t* = L_A / (2 v_E).
pub fn predict_one_to_all(l: usize, l_a: usize, t: f64, d: u32) -> Result<f64, TheoryError> {
    if l_a == 0 || l_a >= l {
        return Err(TheoryError::BadRegion(l_a, l));
    }
    let ve = v_entanglement(d)?;
    let t_star = l_a as f64 / (2.0 * ve);
    Ok(if 2 * l_a == l || t < t_star {
        1.0
    } else if 2 * l_a < l {
        0.0
    } else {
        2.0
    })
}

/// Membrane MI for the many-to-many encoding, normalized by L/2: plateau 2,
/// linear decrease (L/2 + L_A - 2 v_E t)/(L/2), then the steady value
/// max(0, min(2, 4 L_A / L - 1)).
pub fn predict_many_to_many(l: usize, l_a: usize, t: f64, d: u32) -> Result<f64, TheoryError> {
    if 2 * l_a < l || l_a > l {
        return Err(TheoryError::BadRegion(l_a, l));
    }
    let ve = v_entanglement(d)?;
    let steady = (4.0 * l_a as f64 / l as f64 - 1.0).clamp(0.0, 2.0);
    let linear = (l as f64 / 2.0 + l_a as f64 - 2.0 * ve * t) / (l as f64 / 2.0);
    Ok(linear.clamp(steady, 2.0))
}

/// Steady-state membrane profile shared by the conservation checks; extends
/// the many-to-many steady value to all L_A through the purity relation.
pub fn steady_many_to_many(l: usize, l_a: usize) -> f64 {
    (4.0 * l_a as f64 / l as f64 - 1.0).clamp(0.0, 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Reflecting,
}

#[derive(Clone, Copy, Debug)]
pub enum Dispersion {
    /// eps(k) = 2 cos k, v(k) = -2 sin k (tight-binding chain, J = 1).
    Cosine,
    /// eps(k) = 2 sqrt(cos^2 k + Delta^2 sin^2 k) (SSH two-band expression).
    Ssh { delta: f64 },
}

impl Dispersion {
    pub fn velocity(&self, k: f64) -> f64 {
        match *self {
            Dispersion::Cosine => -2.0 * k.sin(),
            Dispersion::Ssh { delta } => {
                let e = (k.cos().powi(2) + delta * delta * k.sin().powi(2)).sqrt();
                if e < 1e-15 {
                    0.0
                } else {
                    (delta * delta - 1.0) * (2.0 * k).sin() / e
                }
            }
        }
    }

    /// max_k |v(k)|; equals 2(1 - |Delta|) for the SSH dispersion.
    pub fn v_max(&self) -> f64 {
        match *self {
            Dispersion::Cosine => 2.0,
            Dispersion::Ssh { delta } => 2.0 * (1.0 - delta.abs()),
        }
    }
}

/// Quasiparticle-picture inputs: dispersion, flat occupation n_k (Neel quench
/// gives n_k = 1/2, s_k = 1), boundary folding rule and k-grid size.
#[derive(Clone, Copy, Debug)]
pub struct QuasiparticleSpec {
    pub dispersion: Dispersion,
    pub n_k: f64,
    pub boundary: Boundary,
    pub grid: usize,
}

impl QuasiparticleSpec {
    pub fn clean_pbc() -> Self {
        Self { dispersion: Dispersion::Cosine, n_k: 0.5, boundary: Boundary::Periodic, grid: 4096 }
    }

    pub fn ssh_obc(delta: f64) -> Result<Self, TheoryError> {
        if delta.abs() >= 1.0 {
            return Err(TheoryError::BadDimerization(delta));
        }
        Ok(Self {
            dispersion: Dispersion::Ssh { delta },
            n_k: 0.5,
            boundary: Boundary::Reflecting,
            grid: 4096,
        })
    }

    fn entropy_unit(&self) -> f64 {
        let n = self.n_k;
        let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
        term(n) + term(1.0 - n)
    }
}

fn fold(x: f64, l: f64, boundary: Boundary) -> f64 {
    match boundary {
        Boundary::Periodic => x.rem_euclid(l),
        Boundary::Reflecting => {
            let y = x.rem_euclid(2.0 * l);
            if y > l {
                2.0 * l - y
            } else {
                y
            }
        }
    }
}

/// Quasiparticle MI: pairs emitted at x_e with velocities +-v(k) stay
/// correlated with R while both land inside A = [a_start, a_start + L_A);
/// MI = 2 s_k-weighted fraction of the k-grid inside A after boundary
/// folding. Midpoint rule on [-pi, pi).
pub fn quasiparticle_mi(
    l: usize,
    l_a: usize,
    x_e: f64,
    a_start: f64,
    t: f64,
    spec: &QuasiparticleSpec,
) -> Result<f64, TheoryError> {
    if l_a == 0 || l_a > l {
        return Err(TheoryError::BadRegion(l_a, l));
    }
    if spec.grid < 1024 {
        return Err(TheoryError::GridTooCoarse(spec.grid));
    }
    let lf = l as f64;
    let laf = l_a as f64;
    let inside = |x: f64| -> bool {
        let y = fold(x, lf, spec.boundary);
        match spec.boundary {
            Boundary::Periodic => (y - a_start).rem_euclid(lf) < laf,
            Boundary::Reflecting => y >= a_start && y < a_start + laf,
        }
    };
    let mut acc = 0.0;
    for i in 0..spec.grid {
        let k = -std::f64::consts::PI
            + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / spec.grid as f64;
        let v = spec.dispersion.velocity(k);
        if inside(x_e + v * t) {
            acc += 1.0;
        }
    }
    Ok(2.0 * spec.entropy_unit() * acc / spec.grid as f64)
}

/// Convenience: region of L_A sites centered on x_e.
pub fn quasiparticle_mi_centered(
    l: usize,
    l_a: usize,
    t: f64,
    spec: &QuasiparticleSpec,
) -> Result<f64, TheoryError> {
    let x_e = l as f64 / 2.0;
    quasiparticle_mi(l, l_a, x_e, x_e - l_a as f64 / 2.0, t, spec)
}

/// SSH edge diagnostics for the topological phase (Delta < 0, open chain):
/// localization length xi = 2 / ln((1-Delta)/(1+Delta)) and the edge-mode
/// density on site 0 from the numerically diagonalized zero-energy doublet.
pub fn ssh_edge_profile(delta: f64, l: usize) -> Result<(f64, f64), TheoryError> {
    if delta >= 0.0 {
        return Err(TheoryError::NoEdgeMode(delta));
    }
    if delta <= -1.0 {
        return Err(TheoryError::BadDimerization(delta));
    }
    let xi = 2.0 / ((1.0 - delta) / (1.0 + delta)).ln();
    let params = crate::gaussian::ModelParams { delta, periodic: false, ..Default::default() };
    let h = crate::gaussian::build_ssh(&params, l, 0)
        .map_err(|_| TheoryError::BadRegion(l, l))?;
    // The two eigenvalues closest to zero span the edge doublet; their summed
    // site-0 weight is the left edge-mode density.
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        h.eigenvalues()[a]
            .abs()
            .partial_cmp(&h.eigenvalues()[b].abs())
            .unwrap()
    });
    let edge_density: f64 = order[..2]
        .iter()
        .map(|&m| h.eigenvectors()[[0, m]].powi(2))
        .sum();
    Ok((xi, edge_density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn line_tension_reference_values() {
        assert_abs_diff_eq!(line_tension(0.0, 2).unwrap(), (5.0f64 / 4.0).log2(), epsilon = 1e-14);
        assert_abs_diff_eq!(line_tension(1.0, 2).unwrap(), (5.0f64 / 2.0).log2(), epsilon = 1e-14);
        assert_abs_diff_eq!(line_tension(0.6, 2).unwrap(), 0.6, epsilon = 1e-14);
        assert!(line_tension(1.2, 2).is_err());
        assert!(line_tension(0.0, 1).is_err());
    }

    #[test]
    fn speeds() {
        assert_abs_diff_eq!(v_entanglement(2).unwrap(), 2.0 * (1.25f64).log2(), epsilon = 1e-14);
        assert!((v_entanglement(2).unwrap() - 0.6439).abs() < 1e-4);
        assert_abs_diff_eq!(v_butterfly(2).unwrap(), 1.2, epsilon = 1e-14);
        // Large-d limit: v_E -> 2 from below, lightcone respected.
        let mut prev = v_entanglement(2).unwrap();
        for d in [4u32, 16, 256, 65535] {
            let ve = v_entanglement(d).unwrap();
            assert!(ve > prev && ve < 2.0);
            prev = ve;
        }
        assert!(v_entanglement(65535).unwrap() > 1.8);
    }

    /// Defining relations of the butterfly speed in half-layer units:
    /// E_2(v_B) = v_B and E_2'(v_B) = 1.
    #[test]
    fn butterfly_fixed_point() {
        for d in [2u32, 3, 5, 10] {
            let vb = v_butterfly(d).unwrap() / 2.0;
            assert_abs_diff_eq!(line_tension(vb, d).unwrap(), vb, epsilon = 1e-10);
            assert_abs_diff_eq!(line_tension_derivative(vb, d).unwrap(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn line_tension_convex() {
        let n = 2000;
        for i in 1..n {
            let v = i as f64 / n as f64 * 0.999;
            let h = 1e-4;
            let second = line_tension(v + h, 2).unwrap() - 2.0 * line_tension(v, 2).unwrap()
                + line_tension(v - h, 2).unwrap();
            assert!(second > 0.0, "not convex at v = {v}");
        }
        // Analytic derivative matches a central difference.
        for &v in &[0.1, 0.45, 0.8] {
            let h = 1e-6;
            let num = (line_tension(v + h, 2).unwrap() - line_tension(v - h, 2).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(line_tension_derivative(v, 2).unwrap(), num, epsilon = 1e-8);
        }
    }

    #[test]
    fn one_to_one_breakpoints() {
        assert_abs_diff_eq!(predict_one_to_one(512, 128, 50.0, 2).unwrap(), 2.0);
        assert_abs_diff_eq!(predict_one_to_one(512, 128, 150.0, 2).unwrap(), 0.0);
        // t* = 128 / (2 v_E) ~ 99.4
        let ve = v_entanglement(2).unwrap();
        let t_star = 128.0 / (2.0 * ve);
        assert!((t_star - 99.4).abs() < 0.1);
        assert_abs_diff_eq!(predict_one_to_one(512, 256, 1e9, 2).unwrap(), 1.0);
        assert_abs_diff_eq!(predict_one_to_one(512, 300, 1e9, 2).unwrap(), 2.0);
        assert!(predict_one_to_one(64, 0, 0.0, 2).is_err());
    }

    #[test]
    fn one_to_all_plateaus() {
        for l_a in [1usize, 100, 200, 255] {
            assert_abs_diff_eq!(predict_one_to_all(256, l_a, 0.0, 2).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(predict_one_to_all(256, 192, 1e9, 2).unwrap(), 2.0);
        assert_abs_diff_eq!(predict_one_to_all(256, 64, 1e9, 2).unwrap(), 0.0);
        assert_abs_diff_eq!(predict_one_to_all(256, 128, 1e9, 2).unwrap(), 1.0);
        assert!(predict_one_to_all(256, 256, 0.0, 2).is_err());
    }

    #[test]
    fn many_to_many_stages() {
        let ve = v_entanglement(2).unwrap();
        // Full region: purity forces 2 at all times.
        for &t in &[0.0, 100.0, 1e6] {
            assert_abs_diff_eq!(predict_many_to_many(512, 512, t, 2).unwrap(), 2.0);
        }
        assert_abs_diff_eq!(predict_many_to_many(512, 448, 1e9, 2).unwrap(), 2.0);
        assert_abs_diff_eq!(predict_many_to_many(512, 320, 1e9, 2).unwrap(), 1.5);
        // Stage boundaries for L_A = 320: plateau until (320-256)/(2 v_E).
        let t1 = (320.0 - 256.0) / (2.0 * ve);
        let t2 = (512.0 - 320.0) / (2.0 * ve);
        assert_abs_diff_eq!(predict_many_to_many(512, 320, 0.9 * t1, 2).unwrap(), 2.0);
        let mid = predict_many_to_many(512, 320, 0.5 * (t1 + t2), 2).unwrap();
        assert!(mid > 1.5 && mid < 2.0);
        // Linear stage value is exactly (L/2 + L_A - 2 v_E t)/(L/2).
        let t = 0.5 * (t1 + t2);
        assert_abs_diff_eq!(mid, (256.0 + 320.0 - 2.0 * ve * t) / 256.0, epsilon = 1e-12);
        assert!(predict_many_to_many(512, 128, 0.0, 2).is_err());
    }

    /// Steady-state conservation: profile(L_A) + profile(L - L_A) = 2 for
    /// every predictor (purity of the global state).
    #[test]
    fn steady_state_conservation() {
        let l = 512;
        let t = 1e9;
        for l_a in 1..l {
            let s = predict_one_to_one(l, l_a, t, 2).unwrap()
                + predict_one_to_one(l, l - l_a, t, 2).unwrap();
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
            if l_a < l {
                let s = predict_one_to_all(l, l_a, t, 2).unwrap()
                    + predict_one_to_all(l, l - l_a, t, 2).unwrap();
                assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
            }
            let s = steady_many_to_many(l, l_a) + steady_many_to_many(l, l - l_a);
            assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
        }
        // The piecewise many-to-many curve lands on the steady profile.
        for l_a in [256usize, 320, 400, 512] {
            assert_abs_diff_eq!(
                predict_many_to_many(l, l_a, t, 2).unwrap(),
                steady_many_to_many(l, l_a),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn quasiparticle_basics() {
        let spec = QuasiparticleSpec::clean_pbc();
        // t = 0: everything still at E.
        assert_abs_diff_eq!(quasiparticle_mi_centered(256, 64, 0.0, &spec).unwrap(), 2.0);
        // Bounds and monotonicity in L_A.
        let mut prev = 0.0;
        for l_a in [16usize, 64, 128, 200, 256] {
            let mi = quasiparticle_mi_centered(256, l_a, 37.3, &spec).unwrap();
            assert!((0.0..=2.0 + 1e-12).contains(&mi));
            assert!(mi >= prev - 1e-12);
            prev = mi;
        }
        // Late-time incommensurate average -> 2 L_A / L.
        let l = 256;
        for l_a in [64usize, 128, 192] {
            let mut acc = 0.0;
            let n = 400;
            for i in 0..n {
                let t = 3000.0 + i as f64 * 7.137;
                acc += quasiparticle_mi_centered(l, l_a, t, &spec).unwrap();
            }
            let want = 2.0 * l_a as f64 / l as f64;
            assert!((acc / n as f64 - want).abs() < 0.02, "L_A = {l_a}");
        }
        let coarse = QuasiparticleSpec { grid: 512, ..spec };
        assert!(quasiparticle_mi_centered(256, 64, 1.0, &coarse).is_err());
    }

    /// Reflecting boundaries with E at the center match PBC before any
    /// quasiparticle reaches a wall.
    #[test]
    fn reflecting_matches_periodic_early() {
        let pbc = QuasiparticleSpec::clean_pbc();
        let obc = QuasiparticleSpec { boundary: Boundary::Reflecting, ..pbc };
        let l = 256;
        let l_a = 64;
        for &t in &[5.0, 20.0, 50.0] {
            assert!(t < l as f64 / (2.0 * pbc.dispersion.v_max()));
            let a = quasiparticle_mi_centered(l, l_a, t, &pbc).unwrap();
            let b = quasiparticle_mi_centered(l, l_a, t, &obc).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn ssh_dispersion_speed() {
        assert_abs_diff_eq!(Dispersion::Ssh { delta: 0.4 }.v_max(), 1.2, epsilon = 1e-14);
        assert_abs_diff_eq!(Dispersion::Ssh { delta: -0.4 }.v_max(), 1.2, epsilon = 1e-14);
        assert_abs_diff_eq!(Dispersion::Ssh { delta: 0.9 }.v_max(), 0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(Dispersion::Ssh { delta: 0.0 }.v_max(), 2.0, epsilon = 1e-14);
        // Analytic v_max agrees with a dense numeric scan of |v(k)|.
        for &delta in &[0.0, 0.15, 0.4, 0.7, 0.9] {
            let disp = Dispersion::Ssh { delta };
            let mut vmax = 0.0f64;
            let n = 1 << 20;
            for i in 0..n {
                let k = -std::f64::consts::PI + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64;
                vmax = vmax.max(disp.velocity(k).abs());
            }
            assert!((vmax - disp.v_max()).abs() < 1e-5, "delta = {delta}");
        }
        // Delta = 0 reduces to the cosine-band speed profile.
        let d0 = Dispersion::Ssh { delta: 0.0 };
        for &k in &[0.3, 1.0, 2.2] {
            assert_abs_diff_eq!(d0.velocity(k).abs(), (2.0 * k.sin()).abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ssh_edge_mode() {
        let (xi, dens) = ssh_edge_profile(-0.4, 80).unwrap();
        assert_abs_diff_eq!(xi, 2.0 / (1.4f64 / 0.6).ln(), epsilon = 1e-14);
        assert!((xi - 2.361).abs() < 1e-3);
        // Analytic zero-mode weight on site 0: 1 - r^2, r = (1+Delta)/(1-Delta).
        let r: f64 = 0.6 / 1.4;
        assert_abs_diff_eq!(dens, 1.0 - r * r, epsilon = 1e-6);
        assert!(dens > 0.0 && dens < 1.0);
        // Converged in L to 4 digits.
        let (_, dens2) = ssh_edge_profile(-0.4, 160).unwrap();
        assert!((dens - dens2).abs() < 1e-4);
        // Perfect dimerization limit.
        let (xi, _) = ssh_edge_profile(-0.999, 40).unwrap();
        assert!(xi < 0.3);
        assert!(ssh_edge_profile(0.4, 80).is_err());
    }
}
