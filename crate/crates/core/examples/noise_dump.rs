//! Writes a small noise ensemble in binary and CSV form and reads the
//! binary dump back.

use fubini_sde::grid::Grids;
use fubini_sde::noise::{generate_epi_brownian, read_binary};

fn main() -> fubini_sde::error::Result<()> {
    let noise = generate_epi_brownian(Grids::new(1.0, 4, 3)?, 2, 42)?;
    let mut bytes = Vec::new();
    noise.write_binary(&mut bytes)?;
    let (header, data) = read_binary(bytes.as_slice())?;
    println!("{header:?}");
    println!(
        "{} increments, round trip exact: {}",
        data.len(),
        data == noise.dense_increments()
    );
    noise.write_csv(std::io::stdout().lock())?;
    Ok(())
}
