//! Optical inter-satellite link budget: received power, SNR, rate and
//! packet success probability over distance and transmit power.
//!
//! ```bash
//! cargo run --example link_budget
//! ```

use dfedsat::linkmodel::{dbm_to_watts, link_report, noise_variances, received_power, LinkBudgetParams};

fn main() -> dfedsat::Result<()> {
    let params = LinkBudgetParams::default();
    let noise = noise_variances(&params, received_power(&params, 4.3106e6, 0.0)?);
    println!(
        "noise variances at 4310.6 km: shot {:.3e}, dark {:.3e}, thermal {:.3e} A^2",
        noise.shot, noise.dark_current, noise.thermal
    );

    println!("\n{:>10} {:>12} {:>9} {:>11} {:>8}", "km", "P_R (W)", "SNR dB", "rate Gb/s", "p");
    for km in [500.0, 1000.0, 2000.0, 4310.6, 7000.0, 10_000.0, 20_000.0] {
        let r = link_report(&params, km * 1e3)?;
        println!(
            "{km:>10.1} {:>12.3e} {:>9.2} {:>11.3} {:>8.5}",
            r.received_power_w,
            r.snr_db,
            r.data_rate_bps / 1e9,
            r.success_probability
        );
    }

    println!("\ntransmit power sweep at 4310.6 km");
    for dbm in [0.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
        let p = LinkBudgetParams {
            transmit_power: dbm_to_watts(dbm),
            ..params.clone()
        };
        println!("  {dbm:>4.1} dBm -> p = {:.5}", link_report(&p, 4.3106e6)?.success_probability);
    }
    Ok(())
}
