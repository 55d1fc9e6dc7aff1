//! Pressure and shear wavelength diagnostics for the background material.

use elascan::wavelengths;

fn main() {
    let (lambda0, mu0, rho0): (f64, f64, f64) = (6e5, 6e3, 3e3);
    println!("background: lambda = {lambda0:.1e} Pa, mu = {mu0:.1e} Pa, rho = {rho0:.1e} kg/m^3");
    let v_p = ((lambda0 + 2.0 * mu0) / rho0).sqrt();
    let v_s = (mu0 / rho0).sqrt();
    println!("wave speeds: v_p = {v_p:.3} m/s, v_s = {v_s:.3} m/s\n");
    println!("{:>10} {:>10} {:>10}", "omega", "l_p [m]", "l_s [m]");
    for omega in [1.0, 5.0, 10.0, 20.0, 50.0, 100.0] {
        let w = wavelengths(lambda0, mu0, rho0, omega).unwrap();
        println!("{omega:>10} {:>10.4} {:>10.4}", w.l_p, w.l_s);
    }
}
