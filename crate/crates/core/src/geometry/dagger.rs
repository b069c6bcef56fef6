//! `∂†` and the Chern Laplacian on jets.
//!
//! A `(p,q)`-form `α` is read as the tensor `A[t₁…t_q, s₁…s_p] = c_{(s₁…s_p),(t₁…t_q)}`,
//! which is the component written `α_{t̄_q…t̄₁ s_p…s₁}` in the interleaved
//! index notation (the holomorphic indices of a basis product appear in
//! reverse order: `T_{k̄jm}` multiplies `dz^m∧dz^j∧dz̄^k`).

use super::chern::Chern;
use super::tensor::{Slot, Tensor};
use crate::error::{Error, Result};
use crate::forms::{masks, Form};
use crate::series::Series;

/// Tensor view of a form: slots `[Anti; q] ++ [Hol; p]`.
pub fn form_to_tensor(f: &Form<Series>) -> Tensor<Series> {
    let (p, q) = f.bidegree();
    let mut slots = vec![Slot::Anti; q];
    slots.extend(vec![Slot::Hol; p]);
    Tensor::from_fn(f.m(), &slots, |i| f.get(&i[q..], &i[..q]))
}

/// Inverse of [`form_to_tensor`] (reads the canonical components only).
pub fn tensor_to_form(t: &Tensor<Series>, p: usize, q: usize) -> Form<Series> {
    let m = t.m();
    let mut f = Form::zeros(m, p, q);
    let mut idx = vec![0usize; p + q];
    for h in masks(m, p) {
        for a in masks(m, q) {
            let hs: Vec<usize> = (0..m).filter(|i| h >> i & 1 == 1).collect();
            let as_: Vec<usize> = (0..m).filter(|i| a >> i & 1 == 1).collect();
            idx[..q].copy_from_slice(&as_);
            idx[q..].copy_from_slice(&hs);
            f.set_mask(h, a, t.at(&idx).clone());
        }
    }
    f
}

/// `T̄_{s}{}^{cd} = g^{cā} g^{db̄} conj(T_{s̄ab})` as a `[Hol, HolUp, HolUp]` tensor.
fn tbar_raised(ch: &Chern) -> Tensor<Series> {
    let m = ch.dim();
    let tb = ch.torsion.map(|s| s.conj());
    Tensor::from_fn(m, &[Slot::Hol, Slot::HolUp, Slot::HolUp], |i| {
        let (s, c, d) = (i[0], i[1], i[2]);
        let mut acc = Series::zero();
        for a in 0..m {
            for b in 0..m {
                acc += &(&(ch.jet.ginv(c, a) * ch.jet.ginv(d, b)) * tb.at(&[s, a, b]));
            }
        }
        acc
    })
}

/// `∂†α` for any `(p,q)`-form with `p ≥ 1`, by the general integration-by-parts
/// formula: divergence, `τ̄` term, and one torsion term per remaining
/// holomorphic index.
pub fn del_dagger_general(ch: &Chern, alpha: &Form<Series>) -> Result<Form<Series>> {
    let (p, q) = alpha.bidegree();
    if p == 0 {
        return Err(Error::UnsupportedBidegree(p, q));
    }
    let m = ch.dim();
    let a = form_to_tensor(alpha);
    let na = ch.nabla_bar(&a)?;
    let tau_bar: Vec<Series> = ch.tau().data().iter().map(Series::conj).collect();
    let tb = if p >= 2 { Some(tbar_raised(ch)) } else { None };
    let mut out_slots = vec![Slot::Anti; q];
    out_slots.extend(vec![Slot::Hol; p - 1]);
    let mut idx = vec![0usize; p + q];
    let mut didx = vec![0usize; p + q + 1];
    let out = Tensor::from_fn(m, &out_slots, |o| {
        // o = [t₁…t_q, s₁…s_{p-1}]
        let mut acc = Series::zero();
        for s in 0..m {
            idx[..q].copy_from_slice(&o[..q]);
            idx[q] = s;
            idx[q + 1..].copy_from_slice(&o[q..]);
            for k in 0..m {
                didx[0] = k;
                didx[1..].copy_from_slice(&idx);
                let w = ch.jet.ginv(s, k);
                acc -= &(w * na.at(&didx));
                acc += &(&(w * &tau_bar[k]) * a.at(&idx));
            }
        }
        if let Some(tb) = &tb {
            for l in 1..p {
                let sign = if l % 2 == 1 { -0.5 } else { 0.5 };
                let sl = o[q + l - 1];
                for c in 0..m {
                    for d in 0..m {
                        // holomorphic slots: s₁…ŝ_l…s_{p-1}, d, c
                        idx[..q].copy_from_slice(&o[..q]);
                        let mut w = q;
                        for (r, &sr) in o[q..].iter().enumerate() {
                            if r + 1 != l {
                                idx[w] = sr;
                                w += 1;
                            }
                        }
                        idx[w] = d;
                        idx[w + 1] = c;
                        acc += &(tb.at(&[sl, c, d]) * a.at(&idx)).scale_re(sign);
                    }
                }
            }
        }
        acc
    });
    Ok(tensor_to_form(&out, p - 1, q))
}

/// `∂†` on `(1,0)`, `(2,0)` and `(2,1)` forms by the explicit component formulas.
pub fn del_dagger(ch: &Chern, alpha: &Form<Series>) -> Result<Form<Series>> {
    let m = ch.dim();
    let (p, q) = alpha.bidegree();
    let a = form_to_tensor(alpha);
    let na = ch.nabla_bar(&a)?;
    let gi = |x: usize, y: usize| ch.jet.ginv(x, y);
    let tau_bar: Vec<Series> = ch.tau().data().iter().map(Series::conj).collect();
    let tbar = |s: usize, x: usize, y: usize| ch.torsion.at(&[s, x, y]).conj();
    let out = match (p, q) {
        (1, 0) => {
            // -g^{pk̄}∇_k̄α_p + g^{pk̄}τ̄_k̄α_p
            Tensor::from_fn(m, &[], |_| {
                let mut acc = Series::zero();
                for pp in 0..m {
                    for k in 0..m {
                        acc -= &(gi(pp, k) * na.at(&[k, pp]));
                        acc += &(&(gi(pp, k) * &tau_bar[k]) * a.at(&[pp]));
                    }
                }
                acc
            })
        }
        (2, 0) => {
            // β_{lp} = A[p, l]
            Tensor::from_fn(m, &[Slot::Hol], |o| {
                let l = o[0];
                let mut acc = Series::zero();
                for pp in 0..m {
                    for k in 0..m {
                        acc -= &(gi(pp, k) * na.at(&[k, pp, l]));
                        acc += &(&(gi(pp, k) * &tau_bar[k]) * a.at(&[pp, l]));
                    }
                }
                for x in 0..m {
                    for y in 0..m {
                        for c in 0..m {
                            for d in 0..m {
                                // T̄_{l x̄ ȳ} β_{cd} g^{cx̄} g^{dȳ}
                                let w = &(gi(c, x) * gi(d, y)) * &tbar(l, x, y);
                                acc -= &(&w * a.at(&[d, c])).scale_re(0.5);
                            }
                        }
                    }
                }
                acc
            })
        }
        (2, 1) => {
            // ψ_{ᾱβγ} = A[α, γ, β]
            Tensor::from_fn(m, &[Slot::Anti, Slot::Hol], |o| {
                let (al, be) = (o[0], o[1]);
                let mut acc = Series::zero();
                for ga in 0..m {
                    for j in 0..m {
                        acc -= &(gi(ga, j) * na.at(&[j, al, ga, be]));
                        acc += &(&(gi(ga, j) * &tau_bar[j]) * a.at(&[al, ga, be]));
                    }
                }
                for j in 0..m {
                    for mm in 0..m {
                        for ga in 0..m {
                            for de in 0..m {
                                // T̄_{β j̄ m̄} ψ_{ᾱγδ} g^{γj̄} g^{δm̄}
                                let w = &(gi(ga, j) * gi(de, mm)) * &tbar(be, j, mm);
                                acc -= &(&w * a.at(&[al, de, ga])).scale_re(0.5);
                            }
                        }
                    }
                }
                acc
            })
        }
        _ => return Err(Error::UnsupportedBidegree(p, q)),
    };
    Ok(tensor_to_form(&out, p - 1, q))
}

/// `Δ_c t = g^{pq̄} ∇_q̄ ∇_p t`.
pub fn chern_laplacian(ch: &Chern, t: &Tensor<Series>) -> Result<Tensor<Series>> {
    if let Some(v) = t.valid_order() {
        if v < 2 {
            return Err(Error::InsufficientJetOrder { need: 2, have: v });
        }
    }
    let m = ch.dim();
    let nn = ch.nabla_bar(&ch.nabla(t)?)?;
    let mut full = vec![0usize; t.rank() + 2];
    Ok(Tensor::from_fn(m, t.slots(), |rest| {
        full[2..].copy_from_slice(rest);
        let mut acc = Series::zero();
        for pp in 0..m {
            for qq in 0..m {
                full[0] = qq;
                full[1] = pp;
                acc += &(ch.jet.ginv(pp, qq) * nn.at(&full));
            }
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricJet;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_form_series(ch: &Chern, p: usize, q: usize, rng: &mut impl Rng) -> Form<Series> {
        let sp = ch.jet.space().clone();
        let base = Form::<Complex64>::random(ch.dim(), p, q, rng);
        let mut noise = |c: &Complex64| {
            let coef = (0..sp.len())
                .map(|i| if i == 0 { *c } else { Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)) })
                .collect();
            Series::from_coefficients(&sp, coef)
        };
        let mut out = Form::<Series>::zeros(ch.dim(), p, q);
        for (h, a, c) in base.iter() {
            out.set_mask(h, a, noise(c));
        }
        out
    }

    #[test]
    fn tensor_form_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = Chern::new(&MetricJet::random(3, 2, 0.1, &mut rng)).unwrap();
        let f = random_form_series(&ch, 2, 1, &mut rng);
        let back = tensor_to_form(&form_to_tensor(&f), 2, 1);
        assert!(back.value().distance(&f.value()) < 1e-15);
    }

    #[test]
    fn general_formula_matches_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 2..=4 {
            let ch = Chern::new(&MetricJet::random(m, 2, 0.1, &mut rng)).unwrap();
            for (p, q) in [(1, 0), (2, 0), (2, 1)] {
                let f = random_form_series(&ch, p, q, &mut rng);
                let a = del_dagger(&ch, &f).unwrap().value();
                let b = del_dagger_general(&ch, &f).unwrap().value();
                assert!(a.distance(&b) < 1e-12, "m={m} ({p},{q})");
            }
        }
    }

    #[test]
    fn flat_constant_form_is_coclosed() {
        let ch = Chern::new(&MetricJet::flat(3, 2)).unwrap();
        let f = Form::<Complex64>::random(3, 2, 1, &mut ChaCha8Rng::seed_from_u64(1)).map(|c| Series::constant(*c));
        assert!(del_dagger(&ch, &f).unwrap().value().max_abs() == 0.0);
    }

    #[test]
    fn unsupported_bidegree() {
        let ch = Chern::new(&MetricJet::flat(3, 2)).unwrap();
        let f = Form::<Series>::zeros(3, 1, 1);
        assert!(matches!(del_dagger(&ch, &f), Err(Error::UnsupportedBidegree(1, 1))));
    }

    #[test]
    fn laplacian_of_scalar_is_flat_laplacian_on_flat_metric() {
        let ch = Chern::new(&MetricJet::flat(2, 3)).unwrap();
        let sp = ch.jet.space().clone();
        // f = z⁰ z̄⁰ + 2 z¹ z̄¹  ⇒  Σ ∂_p∂̄_p f = 3
        let z0 = Series::variable(&sp, 0);
        let z1 = Series::variable(&sp, 1);
        let f = &(&z0 * &z0.conj()) + &(&z1 * &z1.conj()).scale_re(2.0);
        let t = Tensor::from_fn(2, &[], |_| f.clone());
        let l = chern_laplacian(&ch, &t).unwrap();
        assert!((l.at(&[]).value() - Complex64::new(3.0, 0.0)).norm() < 1e-14);
    }
}
