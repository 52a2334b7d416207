#![allow(dead_code)]

pub struct OracleRow {
    pub rho: f64,
    pub mu: f64,
    pub z: f64,
    pub value: f64,
}

pub fn oracle_rows() -> Vec<OracleRow> {
    include_str!("../fixtures/mlf_oracle.csv")
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.trim().parse().unwrap()).collect();
            OracleRow {
                rho: v[0],
                mu: v[1],
                z: v[2],
                value: v[3],
            }
        })
        .collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.log10(), b.log10());
    (0..n)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64))
        .collect()
}
