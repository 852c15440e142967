use padic_radius::diffsys::{DiffSystem, DomainSpec, IterStream};
use padic_radius::field::{rat, rat_i, FieldElem, PrimeConfig};
use padic_radius::laurent::{LaurentPoly, RatFunc};
use std::time::Instant;

fn main() {
    let cfg = PrimeConfig::eisenstein(3, 2, rat_i(-1)).unwrap();
    let pi = FieldElem::pi(&cfg);
    let g = LaurentPoly::from_terms(&cfg, [(0, pi.clone()), (2, pi.mul_rat(&rat_i(-3)))]);
    let sys = DiffSystem::scalar(RatFunc::from_poly(g), DomainSpec::disk(rat(-1, 2)), &cfg).unwrap();
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(243);
    let t0 = Instant::now();
    let mut stream = IterStream::new(&sys);
    for k in 0..n {
        stream.advance();
        if (k + 1) % 60 == 0 || k + 1 == n {
            let st = stream.state();
            let poly = &st.p_mat[0][0];
            let mut max_bits = 0u64;
            let mut total_bits = 0u64;
            let mut nterms = 0u64;
            let mut max_denom_bits = 0u64;
            for (_, c) in poly.terms() {
                for r in c.coeffs() {
                    let b = r.numer().bits();
                    max_bits = max_bits.max(b);
                    total_bits += b;
                    max_denom_bits = max_denom_bits.max(r.denom().bits());
                }
                nterms += 1;
            }
            println!(
                "n={} terms={} max_bits={} avg_bits={} max_denom_bits={} content_val={} elapsed={:?}",
                k + 1, nterms, max_bits, total_bits / (2 * nterms).max(1), max_denom_bits,
                st.content_val, t0.elapsed()
            );
        }
    }
}
