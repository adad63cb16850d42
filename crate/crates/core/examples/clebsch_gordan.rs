//! Exact Clebsch-Gordan coefficients and spin matrices.
//!
//! cargo run --example clebsch_gordan

use spinflow::angular_momentum::{clebsch_gordan, spin_matrices, TwiceJ};

fn main() -> spinflow::Result<()> {
    let half = TwiceJ::new(1);
    let one = TwiceJ::new(2);

    // coupling spin 1/2 to spin 1
    println!("<1/2 m1; 1 m2 | J M>");
    for tj in [1u32, 3] {
        let j = TwiceJ::new(tj);
        for tm in (-(tj as i32)..=tj as i32).step_by(2) {
            for tm1 in [1, -1] {
                let tm2 = tm - tm1;
                if tm2.abs() > 2 {
                    continue;
                }
                let c = clebsch_gordan(half, one, tm1, tm2, j, tm)?;
                if !c.exact.is_zero() {
                    println!("  m1={:>4} m2={:>4}  J={} M={:>4}  {:<16} {:+.6}", half_str(tm1), half_str(tm2), j, half_str(tm), c.exact.to_string(), c.value);
                }
            }
        }
    }

    let s = spin_matrices(TwiceJ::new(3))?;
    println!("\nS_z for s = 3/2: {:?}", (0..4).map(|i| s.z[(i, i)].re).collect::<Vec<_>>());
    println!("S^2 / s(s+1) diagonal: {:.12}", s.square()[(0, 0)].re / 3.75);
    Ok(())
}

fn half_str(twice: i32) -> String {
    if twice % 2 == 0 {
        format!("{}", twice / 2)
    } else {
        format!("{twice}/2")
    }
}
