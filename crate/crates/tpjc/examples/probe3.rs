use tpjc::model::SystemParams;
use tpjc::rme::*;

fn main() {
    for kappa2 in [0.1, 0.01, 0.001] {
        let j_opt = optimal_hopping(kappa2);
        let base = SystemParams {
            g: 20.0, j: j_opt, omega: 0.5, delta: 0.0,
            kappa2, gamma: 0.01, gamma2ph_1: 0.0, gamma2ph_2: 0.0,
        };
        // J fixed at J_opt, optimize Omega on the 30-level chain
        let sbox = SearchBox { j: (j_opt, j_opt), omega: (0.1, 1.2) };
        let o = optimize_brightness(&base, &ReducedBasis::default(), &sbox, BrightnessObjective::UndrivenPhoton).unwrap();
        // Omega fixed at 0.5, optimize J on the three-level model
        let sbox_j = SearchBox { j: (0.05, 1.0), omega: (0.5, 0.5) };
        let jr = optimize_brightness(&base, &ReducedBasis::new(1), &sbox_j, BrightnessObjective::UndrivenPhoton).unwrap();
        println!("k2={kappa2}: omega_opt={:.5} (chain), j_opt_num={:.5} vs {:.5} (rel {:.4})",
                 o.omega, jr.j, j_opt, (jr.j / j_opt - 1.0).abs());
    }
}
