use colloc::black::{black_call, implied_vol};
fn main() {
    let (f, t) = (357.0f64, 1.6f64);
    for &k in &[150.0, 250.0, 357.0, 500.0, 800.0] {
        for &v in &[0.1f64, 0.3, 0.8] {
            let c = black_call(f, k, v, t);
            match implied_vol(c, f, k, t, true) {
                Ok(iv) => println!("K={k} v={v}: iv={iv:.15} err={:.2e} price={c:.6e}", (iv - v).abs()),
                Err(e) => println!("K={k} v={v}: ERR {e} price={c:.6e}"),
            }
        }
    }
}
