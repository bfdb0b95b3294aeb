//! `gen`: write a synthetic problem to a LIBSVM file.

use crate::{source, GenArgs};
use eccd::data::write_libsvm;

pub fn run(a: &GenArgs) -> Result<(), Box<dyn std::error::Error>> {
    let family = source::parse_family(&a.family).map_err(eccd::EccdError::Config)?;
    let d = source::generate(&a.gen, a.seed, &family)?;
    write_libsvm(&d, &a.out)?;
    eprintln!("wrote {} rows x {} columns to {}", d.n(), d.p(), a.out.display());
    Ok(())
}
