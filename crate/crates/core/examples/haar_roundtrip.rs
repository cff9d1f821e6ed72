//! Decompose a smooth field with one sharp edge into Haar subbands.

use masf::{dwt, idwt, Band, Field, Shape};

fn main() -> masf::Result<()> {
    let shape = Shape::new(16, 16, 1)?;
    let x = Field::from_fn(shape, |h, w, _| {
        let ramp = (h as f64 + w as f64) / 30.0 - 0.5;
        if w >= 9 { ramp + 0.8 } else { ramp }
    })?;

    let bands = dwt(&x)?;
    println!("field {} -> bands {}", shape, bands.band_shape()?);
    let total = x.sum_sq();
    for (band, norm) in Band::ALL.iter().zip(bands.norms()) {
        println!("  {:<3} norm {:>8.4}  energy share {:>6.2}%", band.name(), norm, 100.0 * norm * norm / total);
    }

    let back = idwt(&bands)?;
    println!("roundtrip max error {:.2e}", back.max_abs_diff(&x)?);
    Ok(())
}
