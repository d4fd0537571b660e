/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub fn gauss_unit(n: usize) -> Vec<(f64, f64)> {
    let ref_rule: &[(f64, f64)] = match n {
        1 => &[(0.0, 2.0)],
        2 => &[(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)],
        3 => &[
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ],
        4 => &[
            (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
            (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
            (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
        ],
        _ => panic!("Gauss rule with {n} points is not tabulated"),
    };
    ref_rule
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        for n in 1..=4 {
            let rule = gauss_unit(n);
            for p in 0..(2 * n) {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-15, "n={n} p={p}");
            }
        }
    }
}
