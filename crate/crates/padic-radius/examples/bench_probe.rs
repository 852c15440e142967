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
    let eval: bool = std::env::args().nth(2).map(|s| s == "eval").unwrap_or(false);
    let t0 = Instant::now();
    let mut stream = IterStream::new(&sys);
    let ts: Vec<_> = [rat(-1,2), rat(-4,9), rat(-5,12), rat(-13,36), rat(-1,3), rat(-1,4), rat(-1,6), rat(-1,12), rat_i(0)].to_vec();
    for _ in 0..n {
        let st = stream.advance();
        if eval {
            let _ = st.eval_gauss_many(&ts);
        }
    }
    println!("n={} eval={} took {:?}", n, eval, t0.elapsed());
}
