//! Crosstalk matrix for a 10 kHz aggressor on channel 4 with quiet victims,
//! for an ideal switch and for one with charge injection.

use tdmux::cli::Scenario;

fn main() {
    let ideal = Scenario::bundled("poc_crosstalk").unwrap();
    for kappa in [0.0, 1e-3] {
        let mut s = ideal.clone();
        s.profile.as_mut().unwrap().coupling_kappa = kappa;
        let report = s.run(None).unwrap().report.unwrap();
        println!("coupling kappa = {kappa}");
        print!("{}", report.crosstalk_table().unwrap());
        if let Some((victim, db)) = report.worst_victim() {
            println!("worst victim ch{victim} at {db:.1} dB\n");
        }
    }
}
