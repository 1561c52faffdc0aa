//! Whole-file atomic CSV output.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::ensemble::DetuningNode;

/// Write `contents` to a sibling temporary file, then rename it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

/// Rows `tau,z,re_zeta,im_zeta` of a field history laid out as one row of
/// `z.len()` values per time.
pub fn field_csv(taus: &[f64], z: &[f64], history: &[Complex64]) -> String {
    let mut s = String::from("tau,z,re_zeta,im_zeta\n");
    for (t, row) in taus.iter().zip(history.chunks(z.len())) {
        for (zz, v) in z.iter().zip(row) {
            s.push_str(&format!("{t:.16e},{zz:.16e},{:.16e},{:.16e}\n", v.re, v.im));
        }
    }
    s
}

/// Rows `tau,node_delta31,z,re_r12,im_r12,r11` of a node-major snapshot.
pub fn atoms_csv(tau: f64, nodes: &[DetuningNode], z: &[f64], r12: &[Complex64], r11: Option<&[f64]>) -> String {
    let n_z = z.len();
    let mut s = String::from("tau,node_delta31,z,re_r12,im_r12,r11\n");
    for (j, node) in nodes.iter().enumerate() {
        for (k, zz) in z.iter().enumerate() {
            let i = j * n_z + k;
            let p = r11.map_or(1.0 - r12[i].norm_sqr(), |r| r[i]);
            s.push_str(&format!(
                "{tau:.16e},{:.16e},{zz:.16e},{:.16e},{:.16e},{p:.16e}\n",
                node.delta31, r12[i].re, r12[i].im
            ));
        }
    }
    s
}

/// Rows `tau,re_input,im_input,re_echo,im_echo`.
pub fn envelope_csv(dt: f64, input: &[Complex64], echo: &[Complex64]) -> String {
    let mut s = String::from("tau,re_input,im_input,re_echo,im_echo\n");
    for (k, (a, b)) in input.iter().zip(echo).enumerate() {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            dt * k as f64,
            a.re,
            a.im,
            b.re,
            b.im
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_csv_has_one_row_per_sample() {
        let z = [0.0, 0.5, 1.0];
        let h = vec![Complex64::new(1.0 / 3.0, -2.0); 6];
        let s = field_csv(&[0.0, 0.1], &z, &h);
        assert_eq!(s.lines().count(), 7);
        let v: f64 = s.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 1.0 / 3.0);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("reqm-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.csv");
        write_atomic(&p, b"a\n").unwrap();
        write_atomic(&p, b"b\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b\n");
        assert!(!dir.join("x.csv.tmp").exists());
        fs::remove_dir_all(&dir).unwrap();
    }
}
