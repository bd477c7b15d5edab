//! Synthetic data generation matching the contamination model: Gaussian
//! designs, Gaussian noise, sparse coefficient vectors, and adversarial
//! output contaminations chosen after seeing the realized data.
//!
//! Generation is pure given `(spec, seed)`. Instances round-trip through a
//! directory of CSV files plus a JSON metadata file, losslessly at 17
//! significant digits.

use crate::covariance::Covariance;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::io_util::{format_f64, parse_f64, parse_usize, split_csv_line};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Contamination strategy; every kind except `None` makes exactly `o`
/// entries of `theta_star` nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryKind {
    None,
    /// The fixed value `c` on `o` uniformly chosen rows (ignores the data).
    ObliviousConstant { c: f64 },
    /// Flips the sign of the clean output on `o` uniformly chosen rows.
    SignFlipLarge,
    /// On the `o` rows with the largest `|xi_i|`, pushes further in the
    /// noise direction: `theta_i = scale * sign(xi_i) * max_j |xi_j|`.
    ResidualAligned { scale: f64 },
    /// On the `o` rows with the largest `|x_i|_2`, cancels a `scale`
    /// multiple of the signal: `theta_i = -scale * x_i^T beta_star / sqrt(n)`.
    LeverageTargeted { scale: f64 },
}

/// Everything needed to generate an instance deterministically.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InstanceSpec {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub o: usize,
    pub sigma: f64,
    pub covariance: Covariance,
    #[serde(default = "default_beta_magnitude")]
    pub beta_magnitude: f64,
    pub adversary: AdversaryKind,
    pub seed: u64,
}

fn default_beta_magnitude() -> f64 {
    1.0
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s > self.d {
            return Err(Error::InvalidParameter(format!(
                "need s <= d, got s={}, d={}",
                self.s, self.d
            )));
        }
        if self.o >= self.n {
            return Err(Error::InvalidParameter(format!(
                "need o < n, got o={}, n={}",
                self.o, self.n
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and nonnegative, got {}",
                self.sigma
            )));
        }
        if !(self.beta_magnitude != 0.0) || !self.beta_magnitude.is_finite() {
            return Err(Error::InvalidParameter(
                "beta_magnitude must be finite and nonzero".into(),
            ));
        }
        if self.covariance.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.covariance.dim(),
                context: "covariance dimension",
            });
        }
        self.covariance.validate()?;
        match self.adversary {
            AdversaryKind::ObliviousConstant { c } if c == 0.0 || !c.is_finite() => {
                return Err(Error::InvalidParameter(
                    "oblivious_constant needs a finite nonzero c".into(),
                ));
            }
            AdversaryKind::ResidualAligned { scale } | AdversaryKind::LeverageTargeted { scale }
                if scale == 0.0 || !scale.is_finite() =>
            {
                return Err(Error::InvalidParameter(
                    "adversary scale must be finite and nonzero".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Rows i.i.d. `N(0, Sigma)`, via a Cholesky-type factor times standard
/// normals. Rejects non-PSD covariances (factorization failure).
pub fn sample_gaussian_matrix(
    n: usize,
    covariance: &Covariance,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let d = covariance.dim();
    let factor = covariance.factor()?;
    let mut x = Array2::<f64>::zeros((n, d));
    let mut g = vec![0.0_f64; d];
    for i in 0..n {
        for gj in g.iter_mut() {
            *gj = StandardNormal.sample(rng);
        }
        for j in 0..d {
            // lower-triangular factor: row j uses g[0..=j]
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate().take(j + 1) {
                acc += factor[[j, k]] * gk;
            }
            x[[i, j]] = acc;
        }
    }
    Ok(x)
}

/// Indices of the `k` largest `score` values, ties broken by lower index.
fn top_k_indices(score: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..score.len()).collect();
    idx.sort_by(|&a, &b| {
        score[b]
            .partial_cmp(&score[a])
            .expect("top_k_indices: NaN score")
            .then(a.cmp(&b))
    });
    let mut out: Vec<usize> = idx.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

/// Build the o-sparse contamination for the realized `(X, xi, beta_star)`.
/// Returns the vector and its support.
pub fn adversary_theta(
    kind: AdversaryKind,
    x: &Array2<f64>,
    xi: &Array1<f64>,
    beta_star: &Array1<f64>,
    o: usize,
    rng: &mut ChaCha8Rng,
) -> (Array1<f64>, Vec<usize>) {
    let n = x.nrows();
    let mut theta = Array1::<f64>::zeros(n);
    if matches!(kind, AdversaryKind::None) || o == 0 {
        return (theta, Vec::new());
    }
    let sqrt_n = (n as f64).sqrt();
    let support: Vec<usize> = match kind {
        AdversaryKind::None => unreachable!(),
        AdversaryKind::ObliviousConstant { .. } | AdversaryKind::SignFlipLarge => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(rng);
            let mut chosen: Vec<usize> = all.into_iter().take(o).collect();
            chosen.sort_unstable();
            chosen
        }
        AdversaryKind::ResidualAligned { .. } => {
            let score: Vec<f64> = xi.iter().map(|v| v.abs()).collect();
            top_k_indices(&score, o)
        }
        AdversaryKind::LeverageTargeted { .. } => {
            let score: Vec<f64> = x
                .outer_iter()
                .map(|row| row.iter().map(|v| v * v).sum::<f64>())
                .collect();
            top_k_indices(&score, o)
        }
    };
    match kind {
        AdversaryKind::None => {}
        AdversaryKind::ObliviousConstant { c } => {
            for &i in &support {
                theta[i] = c;
            }
        }
        AdversaryKind::SignFlipLarge => {
            let fitted = x.dot(beta_star);
            for &i in &support {
                theta[i] = -2.0 * (fitted[i] + xi[i]) / sqrt_n;
            }
        }
        AdversaryKind::ResidualAligned { scale } => {
            let maxval = xi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for &i in &support {
                theta[i] = scale * xi[i].signum() * maxval;
            }
        }
        AdversaryKind::LeverageTargeted { scale } => {
            let fitted = x.dot(beta_star);
            for &i in &support {
                theta[i] = -scale * fitted[i] / sqrt_n;
            }
        }
    }
    // a zero on the support would break support(theta) = I_o
    let support: Vec<usize> = support.into_iter().filter(|&i| theta[i] != 0.0).collect();
    (theta, support)
}

/// Generate the full instance for `spec`; bit-identical for equal specs.
pub fn generate_instance(spec: &InstanceSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = crate::rng::seeded_rng(spec.seed);
    let x = sample_gaussian_matrix(spec.n, &spec.covariance, &mut rng)?;
    let xi = Array1::from_shape_fn(spec.n, |_| {
        spec.sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let mut beta_star = Array1::<f64>::zeros(spec.d);
    let mut coords: Vec<usize> = (0..spec.d).collect();
    coords.shuffle(&mut rng);
    for &j in coords.iter().take(spec.s) {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        beta_star[j] = sign * spec.beta_magnitude;
    }
    let (theta_star, outlier_index) =
        adversary_theta(spec.adversary, &x, &xi, &beta_star, spec.o, &mut rng);
    let y_clean = x.dot(&beta_star) + &xi;
    let sqrt_n = (spec.n as f64).sqrt();
    let y = &y_clean + &theta_star.mapv(|t| t * sqrt_n);
    let instance = ProblemInstance {
        x,
        y_clean,
        y,
        beta_star,
        theta_star,
        xi,
        sigma: spec.sigma,
        covariance: spec.covariance.clone(),
        outlier_index,
    };
    instance.validate()?;
    Ok(instance)
}

#[derive(Serialize, Deserialize)]
struct InstanceMeta {
    spec: InstanceSpec,
    outlier_index: Vec<usize>,
}

/// Write `X.csv`, `y.csv`, `truth.csv` and `meta.json` under `dir`.
pub fn write_instance_dir(dir: &Path, instance: &ProblemInstance, spec: &InstanceSpec) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))
    };

    let mut xbuf = String::new();
    for row in instance.x.outer_iter() {
        let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        xbuf.push_str(&cells.join(","));
        xbuf.push('\n');
    }
    write("X.csv", xbuf)?;

    let mut ybuf = String::from("y,y_clean\n");
    for i in 0..instance.samples() {
        ybuf.push_str(&format!(
            "{},{}\n",
            format_f64(instance.y[i]),
            format_f64(instance.y_clean[i])
        ));
    }
    write("y.csv", ybuf)?;

    let mut tbuf = String::from("name,index,value\n");
    for (j, v) in instance.beta_star.iter().enumerate() {
        tbuf.push_str(&format!("beta_star,{j},{}\n", format_f64(*v)));
    }
    for (i, v) in instance.theta_star.iter().enumerate() {
        tbuf.push_str(&format!("theta_star,{i},{}\n", format_f64(*v)));
    }
    for (i, v) in instance.xi.iter().enumerate() {
        tbuf.push_str(&format!("xi,{i},{}\n", format_f64(*v)));
    }
    write("truth.csv", tbuf)?;

    let meta = InstanceMeta {
        spec: spec.clone(),
        outlier_index: instance.outlier_index.clone(),
    };
    write("meta.json", serde_json::to_string_pretty(&meta)? + "\n")
}

/// Read an instance directory written by [`write_instance_dir`].
pub fn read_instance_dir(dir: &Path) -> Result<(ProblemInstance, InstanceSpec)> {
    let meta_path = dir.join("meta.json");
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: InstanceMeta = serde_json::from_str(&meta_text)?;
    let spec = meta.spec;
    let (n, d) = (spec.n, spec.d);

    let x_path = dir.join("X.csv");
    let x_text = fs::read_to_string(&x_path).map_err(|e| Error::io(&x_path, e))?;
    let mut x = Array2::<f64>::zeros((n, d));
    let mut rows = 0;
    for (i, line) in x_text.lines().enumerate() {
        if i >= n {
            return Err(Error::parse(&x_path, "too many rows"));
        }
        let fields = split_csv_line(line);
        if fields.len() != d {
            return Err(Error::parse(&x_path, format!("row {i}: expected {d} columns")));
        }
        for (j, f) in fields.iter().enumerate() {
            x[[i, j]] = parse_f64(&x_path, f)?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::parse(&x_path, format!("expected {n} rows, got {rows}")));
    }

    let y_path = dir.join("y.csv");
    let y_text = fs::read_to_string(&y_path).map_err(|e| Error::io(&y_path, e))?;
    let mut y = Array1::<f64>::zeros(n);
    let mut y_clean = Array1::<f64>::zeros(n);
    for (i, line) in y_text.lines().skip(1).enumerate() {
        let fields = split_csv_line(line);
        if fields.len() != 2 {
            return Err(Error::parse(&y_path, format!("row {i}: expected 2 columns")));
        }
        y[i] = parse_f64(&y_path, &fields[0])?;
        y_clean[i] = parse_f64(&y_path, &fields[1])?;
    }

    let t_path = dir.join("truth.csv");
    let t_text = fs::read_to_string(&t_path).map_err(|e| Error::io(&t_path, e))?;
    let mut beta_star = Array1::<f64>::zeros(d);
    let mut theta_star = Array1::<f64>::zeros(n);
    let mut xi = Array1::<f64>::zeros(n);
    for line in t_text.lines().skip(1) {
        let fields = split_csv_line(line);
        if fields.len() != 3 {
            return Err(Error::parse(&t_path, "expected 3 columns"));
        }
        let idx = parse_usize(&t_path, &fields[1])?;
        let value = parse_f64(&t_path, &fields[2])?;
        match fields[0].as_str() {
            "beta_star" => beta_star[idx] = value,
            "theta_star" => theta_star[idx] = value,
            "xi" => xi[idx] = value,
            other => return Err(Error::parse(&t_path, format!("unknown series {other:?}"))),
        }
    }

    let instance = ProblemInstance {
        x,
        y_clean,
        y,
        beta_star,
        theta_star,
        xi,
        sigma: spec.sigma,
        covariance: spec.covariance.clone(),
        outlier_index: meta.outlier_index,
    };
    instance.validate()?;
    Ok((instance, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn base_spec(seed: u64) -> InstanceSpec {
        InstanceSpec {
            n: 80,
            d: 12,
            s: 3,
            o: 5,
            sigma: 0.5,
            covariance: Covariance::identity(12),
            beta_magnitude: 1.0,
            adversary: AdversaryKind::ResidualAligned { scale: 4.0 },
            seed,
        }
    }

    #[test]
    fn reconstruction_and_sparsity_hold() {
        for adv in [
            AdversaryKind::None,
            AdversaryKind::ObliviousConstant { c: 3.0 },
            AdversaryKind::SignFlipLarge,
            AdversaryKind::ResidualAligned { scale: 4.0 },
            AdversaryKind::LeverageTargeted { scale: 2.0 },
        ] {
            let mut spec = base_spec(9);
            spec.adversary = adv;
            let inst = generate_instance(&spec).unwrap();
            inst.validate().unwrap();
            let nnz_beta = inst.beta_star.iter().filter(|v| **v != 0.0).count();
            assert_eq!(nnz_beta, 3);
            let nnz_theta = inst.theta_star.iter().filter(|v| **v != 0.0).count();
            if matches!(adv, AdversaryKind::None) {
                assert_eq!(nnz_theta, 0);
                assert_eq!(inst.y, inst.y_clean);
            } else {
                assert_eq!(nnz_theta, 5, "{adv:?}");
            }
        }
    }

    #[test]
    fn oblivious_constant_values() {
        let mut spec = base_spec(10);
        spec.adversary = AdversaryKind::ObliviousConstant { c: 2.5 };
        let inst = generate_instance(&spec).unwrap();
        for &i in &inst.outlier_index {
            assert_eq!(inst.theta_star[i], 2.5);
        }
        assert_eq!(inst.outlier_index.len(), 5);
    }

    #[test]
    fn sign_flip_negates_clean_output() {
        let mut spec = base_spec(11);
        spec.adversary = AdversaryKind::SignFlipLarge;
        let inst = generate_instance(&spec).unwrap();
        for &i in &inst.outlier_index {
            assert!(
                (inst.y[i] + inst.y_clean[i]).abs() < 1e-10 * (1.0 + inst.y_clean[i].abs()),
                "row {i}: y = {}, y_clean = {}",
                inst.y[i],
                inst.y_clean[i]
            );
        }
    }

    #[test]
    fn residual_aligned_targets_largest_noise() {
        let spec = base_spec(12);
        let inst = generate_instance(&spec).unwrap();
        let mut mags: Vec<f64> = inst.xi.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let cutoff = mags[4];
        let maxval = mags[0];
        for &i in &inst.outlier_index {
            assert!(inst.xi[i].abs() >= cutoff - 1e-12);
            assert!((inst.theta_star[i].abs() - 4.0 * maxval).abs() < 1e-12);
            assert_eq!(inst.theta_star[i].signum(), inst.xi[i].signum());
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        let a = generate_instance(&base_spec(77)).unwrap();
        let b = generate_instance(&base_spec(77)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.beta_star, b.beta_star);
        assert_eq!(a.theta_star, b.theta_star);
        let c = generate_instance(&base_spec(78)).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn sample_covariance_close_to_identity() {
        let mut rng = seeded_rng(5);
        let cov = Covariance::identity(2);
        let x = sample_gaussian_matrix(100_000, &cov, &mut rng).unwrap();
        let n = x.nrows() as f64;
        for a in 0..2 {
            for b in 0..2 {
                let mut acc = 0.0;
                for i in 0..x.nrows() {
                    acc += x[[i, a]] * x[[i, b]];
                }
                let target = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (acc / n - target).abs() < 0.02,
                    "({a},{b}): {}",
                    acc / n
                );
            }
        }
    }

    #[test]
    fn zero_variance_direction_gives_zero_column() {
        let mut rng = seeded_rng(6);
        let sigma = ndarray::array![[1.0, 0.0], [0.0, 0.0]];
        let cov = Covariance::explicit(sigma).unwrap();
        let x = sample_gaussian_matrix(200, &cov, &mut rng).unwrap();
        for i in 0..200 {
            assert_eq!(x[[i, 1]], 0.0);
        }
    }

    #[test]
    fn non_psd_rejected() {
        let mut rng = seeded_rng(7);
        let sigma = ndarray::array![[1.0, 2.0], [2.0, 1.0]];
        let cov = Covariance::explicit(sigma).unwrap();
        assert!(sample_gaussian_matrix(10, &cov, &mut rng).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = base_spec(1);
        spec.s = 13;
        assert!(generate_instance(&spec).is_err());
        let mut spec = base_spec(1);
        spec.o = 80;
        assert!(generate_instance(&spec).is_err());
        let mut spec = base_spec(1);
        spec.adversary = AdversaryKind::ObliviousConstant { c: 0.0 };
        assert!(generate_instance(&spec).is_err());
        let mut spec = base_spec(1);
        spec.covariance = Covariance::Equicorrelated { dim: 12, r: 1.0 };
        assert!(generate_instance(&spec).is_err());
    }

    #[test]
    fn instance_dir_roundtrip_lossless() {
        let spec = base_spec(301);
        let inst = generate_instance(&spec).unwrap();
        let dir = std::env::temp_dir().join(format!("extlasso-io-{}", std::process::id()));
        write_instance_dir(&dir, &inst, &spec).unwrap();
        let (back, spec_back) = read_instance_dir(&dir).unwrap();
        assert_eq!(spec, spec_back);
        assert_eq!(inst.x, back.x);
        assert_eq!(inst.y, back.y);
        assert_eq!(inst.y_clean, back.y_clean);
        assert_eq!(inst.beta_star, back.beta_star);
        assert_eq!(inst.theta_star, back.theta_star);
        assert_eq!(inst.xi, back.xi);
        assert_eq!(inst.outlier_index, back.outlier_index);
        fs::remove_dir_all(&dir).ok();
    }
}
