//! Brent's method for one-dimensional minimization on a closed interval.

/// `(3 - sqrt(5)) / 2`
const GOLDEN_SECTION: f64 = 0.381_966_011_250_105_1;

const MAX_ITER: usize = 500;

/// Minimizes `f` on `[lower, upper]`, combining golden-section steps with
/// parabolic interpolation. Stops once the bracket around the best point is
/// narrower than `tol`. Returns `(x, f(x))`.
pub fn minimize<F: FnMut(f64) -> f64>(f: &mut F, lower: f64, upper: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if lower < upper { (lower, upper) } else { (upper, lower) };
    let tol1 = tol / 4.0;
    let tol2 = 2.0 * tol1;

    let mut x = a + GOLDEN_SECTION * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITER {
        let mid = 0.5 * (a + b);
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < mid { b - x } else { a - x };
            d = GOLDEN_SECTION * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}
