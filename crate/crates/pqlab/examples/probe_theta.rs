use pqlab::covering::{partition_of_unity, wb_enlarge, whitney};
use pqlab::geometry::{BoxN, Domain};
use pqlab::integrand::GrowthParams;
use pqlab::mollify::{correction_norm, loglog_slope, m_prime, singular_field_expr, theta};

fn main() {
    let gp = GrowthParams { p: 2.0, q: 2.2, alpha: 1.0, mu: 0.0, nu: 1.0, lambda: 1.0, n: 2, m: 1 };
    println!("theta={} m'={}", theta(&gp), m_prime(&gp).unwrap());
    let domain = Domain::Box(BoxN::unit_square());
    let m = m_prime(&gp).unwrap() + 0.5;
    for depth in [7usize, 9] {
        let base = whitney(&domain, depth, 0.0).unwrap();
        let cover = wb_enlarge(&domain, &base, m).unwrap();
        let pou = partition_of_unity(&cover);
        for gamma in [1.0/11.0, 0.05] {
            let (_, u) = singular_field_expr(&BoxN::unit_square(), 13, gamma);
            let mut rows = Vec::new();
            for k in 3..=7 {
                let eps = 2f64.powi(-k);
                let a2 = correction_norm(&u, &cover, &pou, eps, gp.q, 12, 12).unwrap();
                rows.push((eps, a2));
            }
            let slope = loglog_slope(&rows);
            println!("depth={depth} gamma={gamma:.4} slope={slope:.4} rows={rows:?}");
        }
    }
}
