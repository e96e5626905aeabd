use std::collections::BTreeSet;

use tfe_core::Multiindex;

#[derive(Clone, Copy)]
enum Coord<'a> {
    E(u32),
    F(u32),
    G(&'a [u32]),
}

const F0_CAP: u32 = 16;

/// Exhaustive walk over exponent boxes; prunes only on the running homogeneity.
pub fn brute_force(alpha: f64, d: usize, cutoff: f64) -> BTreeSet<Multiindex> {
    let mut polys: Vec<Vec<u32>> = Vec::new();
    let mut n = vec![0u32; 1 + d];
    loop {
        let deg = 4 * n[0] + n[1..].iter().sum::<u32>();
        if deg > 0 && (deg as f64) < cutoff {
            polys.push(n.clone());
        }
        let mut i = 0;
        loop {
            if i == n.len() {
                break;
            }
            n[i] += 1;
            if n[i] <= 8 {
                break;
            }
            n[i] = 0;
            i += 1;
        }
        if i == n.len() {
            break;
        }
    }
    let mut coords: Vec<(Coord, f64)> = Vec::new();
    for k in 1..20 {
        if alpha * (k as f64) < cutoff {
            coords.push((Coord::E(k), alpha * k as f64));
        }
    }
    for l in 0..20 {
        if alpha * (l as f64) < cutoff {
            coords.push((Coord::F(l), alpha * l as f64));
        }
    }
    for n in &polys {
        let deg = 4 * n[0] + n[1..].iter().sum::<u32>();
        coords.push((Coord::G(n), deg as f64 - alpha));
    }

    fn walk(
        i: usize,
        h: f64,
        cutoff: f64,
        coords: &[(Coord, f64)],
        counts: &mut Vec<u32>,
        out: &mut BTreeSet<Multiindex>,
    ) {
        if i == coords.len() {
            let (mut w, mut nb, mut np, mut total) = (0u32, 0u32, 0u32, 0u32);
            for (c, &m) in coords.iter().zip(counts.iter()) {
                total += m;
                match c.0 {
                    Coord::E(k) => w += k * m,
                    Coord::F(l) => {
                        w += l * m;
                        nb += m;
                    }
                    Coord::G(_) => np += m,
                }
            }
            let pp = total == 1 && np == 1;
            if 1 + w == nb + np && (pp || nb > 0) && h < cutoff {
                let mut beta = Multiindex::zero();
                for (c, &m) in coords.iter().zip(counts.iter()) {
                    match c.0 {
                        Coord::E(k) => beta.add_e(k, m),
                        Coord::F(l) => beta.add_f(l, m),
                        Coord::G(n) => beta.add_g(n.to_vec(), m),
                    }
                }
                out.insert(beta);
            }
            return;
        }
        let step = coords[i].1;
        let mut m = 0;
        while h + step * (m as f64) < cutoff && (step > 0.0 || m <= F0_CAP) {
            counts.push(m);
            walk(i + 1, h + step * m as f64, cutoff, coords, counts, out);
            counts.pop();
            m += 1;
        }
    }

    let mut out = BTreeSet::new();
    walk(0, alpha, cutoff, &coords, &mut Vec::new(), &mut out);
    for b in &out {
        assert!(b.b(0) < F0_CAP, "f0 box too small for {b}");
    }
    out
}
