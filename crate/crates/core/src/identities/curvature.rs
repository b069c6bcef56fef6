//! Identities involving derivatives of the metric: curvature expansions,
//! Bianchi identities, `∂†`, conformal changes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{eta_series, torsion_series, Entry, Population, Residual, Sample, I};
use crate::error::Result;
use crate::forms::Form;
use crate::geometry::{del_dagger, del_dagger_general, form_to_tensor, Chern, HolVolForm, Slot, Tensor};
use crate::series::{JetSpace, Series};

pub(super) fn entries() -> Vec<Entry> {
    let e = |key, about, population, min_dim, check| Entry { key, about, population, min_dim, tol: 1e-9, check };
    use Population::*;
    vec![
        e("torsion_form", "T = i∂η in components", Generic, 2, torsion_form),
        e("ddbar_eta", "(i∂∂̄η)_{k̄jℓ̄m} as curvature minus g^{sr̄}T_{r̄jm}T̄_{sk̄ℓ̄}", Generic, 2, ddbar_eta),
        e("lambda_ddbar_generic", "Λi∂∂̄η = −i(R̃ − R″ + Ric − R′ − TT̄) on any metric", Generic, 2, lambda_ddbar_generic),
        e("ricci_log_norm", "Ric_{k̄j} = ∂_j∂_k̄ log‖Ω‖²_η", Generic, 2, ricci_log_norm),
        e("bianchi", "R_{ℓ̄mk̄j} = R_{ℓ̄jk̄m} + ∇_ℓ̄T_{k̄jm} = R_{k̄jℓ̄m} + ∇_jT̄_{mk̄ℓ̄} + ∇_ℓ̄T_{k̄jm}", Generic, 2, bianchi),
        e("traced_bianchi", "R̃_{k̄j} = R_{k̄j} − ∇_jτ̄_k̄ + ∇^mT_{k̄jm}", Generic, 2, traced_bianchi),
        e("del_dagger_t", "∂†T_{k̄j} = −∇^mT_{k̄jm} + τ̄^mT_{k̄jm} − ½(T∘T̄)_{k̄j}", Generic, 2, del_dagger_t),
        e("torsion_flow", "∂(R̃ + ½T∘T̄) = −∂∂†T + ∂(τ̄·T)", Generic, 2, torsion_flow),
        e("conformal_torsion", "T^ℓ_{jk}(e^f g) = T^ℓ_{jk} + f_jδ^ℓ_k − f_kδ^ℓ_j", Generic, 2, conformal_torsion),
        e("conformal_curvature", "R_{k̄jp̄q}(e^f g) = e^f(R_{k̄jp̄q} − ∂_j∂_k̄f g_{p̄q})", Generic, 2, conformal_curvature),
        e("del_lemma", "∂α through partial and through Chern covariant derivatives", Generic, 2, del_lemma),
        e("del_dagger_special", "special-bidegree ∂† formulas against the general lemma", Generic, 2, del_dagger_special),
        e("divergence", "∇_jV^j − τ_jV^j = (det g)⁻¹∂_j(det g V^j)", Generic, 2, divergence),
        e("kahler_traces", "T = 0 and Ric = R̃ = R′ = R″ on Kähler metrics", Kahler, 2, kahler_traces),
    ]
}

fn mat_series(m: usize, f: impl Fn(usize, usize) -> Series) -> Vec<Series> {
    (0..m * m).map(|i| f(i / m, i % m)).collect()
}

fn torsion_form(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let lhs = ch.torsion_pack().form;
    let rhs = eta_series(&ch.jet).del().value().scale(I);
    let mut r = Residual::default();
    r.forms(&lhs, &rhs);
    Ok(r)
}

fn ddbar_eta(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let cp = ch.curvature_pack()?;
    let tp = ch.torsion_pack();
    let gi = ch.jet.metric().inv();
    let idd = eta_series(&ch.jet).delbar().del().value().scale(I);
    let rm = |k: usize, j: usize, l: usize, q: usize| *cp.rm.at(&[k, j, l, q]);
    let t = |k: usize, j: usize, l: usize| *tp.t.at(&[k, j, l]);
    let mut r = Residual::default();
    for k in 0..m {
        for j in 0..m {
            for l in 0..m {
                for mm in 0..m {
                    let mut tt = Complex64::default();
                    for sx in 0..m {
                        for rx in 0..m {
                            tt += gi[(sx, rx)] * t(rx, j, mm) * t(sx, k, l).conj();
                        }
                    }
                    let terms = [rm(k, j, l, mm), -rm(k, mm, l, j), rm(l, mm, k, j), -rm(l, j, k, mm), -tt];
                    r.terms(&terms);
                    r.compare(idd.interleaved_pp(&[(k, j), (l, mm)]), terms.iter().sum());
                }
            }
        }
    }
    Ok(r)
}

fn lambda_ddbar_generic(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let cp = ch.curvature_pack()?;
    let tp = ch.torsion_pack();
    let g = ch.jet.metric();
    let idd = eta_series(&ch.jet).delbar().del().value().scale(I);
    let lhs = g.lambda(&idd)?;
    let x = &cp.rtilde - &cp.rdprime + &cp.ric - &cp.rprime - &tp.tt;
    let rhs = super::form11(&x).scale(-I);
    let mut r = Residual::default();
    r.forms(&lhs, &rhs);
    Ok(r)
}

fn ricci_log_norm(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let cp = ch.curvature_pack()?;
    let omega = HolVolForm::new(Complex64::new(0.7, -1.3))?;
    let ln = omega.norm_sq(&ch.jet).ln();
    let mut r = Residual::default();
    for k in 0..s.m {
        for j in 0..s.m {
            r.compare(cp.ric[(k, j)], ln.d(j).dbar(k).value());
        }
    }
    Ok(r)
}

fn bianchi(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let rm = ch.curvature()?.value();
    let nbt = ch.nabla_bar(&ch.torsion)?.value();
    let ntb = ch.nabla(&ch.torsion.conj())?.value();
    let mut r = Residual::default();
    for l in 0..m {
        for mm in 0..m {
            for k in 0..m {
                for j in 0..m {
                    let lhs = *rm.at(&[l, mm, k, j]);
                    let a = *nbt.at(&[l, k, j, mm]);
                    r.compare(lhs, rm.at(&[l, j, k, mm]) + a);
                    r.compare(lhs, rm.at(&[k, j, l, mm]) + ntb.at(&[j, mm, k, l]) + a);
                }
            }
        }
    }
    Ok(r)
}

/// `∇^mT_{k̄jm} = g^{mq̄}∇_q̄T_{k̄jm}` at `(k, j)`.
fn div_t(ch: &Chern) -> Result<DMatrix<Complex64>> {
    let m = ch.dim();
    let nbt = ch.nabla_bar(&ch.torsion)?.value();
    let gi = ch.jet.metric().inv();
    Ok(DMatrix::from_fn(m, m, |k, j| {
        let mut acc = Complex64::default();
        for mm in 0..m {
            for q in 0..m {
                acc += gi[(mm, q)] * nbt.at(&[q, k, j, mm]);
            }
        }
        acc
    }))
}

fn traced_bianchi(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let cp = ch.curvature_pack()?;
    let ntau = ch.nabla(&ch.tau().conj())?.value();
    let div = div_t(ch)?;
    let mut r = Residual::default();
    for k in 0..s.m {
        for j in 0..s.m {
            r.compare(cp.rtilde[(k, j)], cp.ric[(k, j)] - ntau.at(&[j, k]) + div[(k, j)]);
        }
    }
    Ok(r)
}

fn del_dagger_t(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let tp = ch.torsion_pack();
    let lhs = del_dagger(ch, &torsion_series(ch))?.value();
    let div = div_t(ch)?;
    let mut r = Residual::default();
    for k in 0..s.m {
        for j in 0..s.m {
            r.compare(lhs.c11(k, j), -div[(k, j)] + tp.tau_t[(k, j)] - 0.5 * tp.tct[(k, j)]);
        }
    }
    Ok(r)
}

fn torsion_flow(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let jet = &ch.jet;
    // Everything below needs one derivative only: work on the order-1 truncation.
    let sp1 = JetSpace::new(m, 1);
    let cut = |x: &Series| x.restrict(&sp1);
    let gi = mat_series(m, |j, k| cut(jet.ginv(j, k)));
    let t = ch.torsion.map(cut);
    let curv = ch.curvature()?.map(cut);
    let tb = t.map(|x| x.conj());
    let rtilde = mat_series(m, |k, j| {
        let mut acc = Series::zero();
        for p in 0..m {
            for q in 0..m {
                acc += &gi[p * m + q] * curv.at(&[q, p, k, j]);
            }
        }
        acc
    });
    let tct = mat_series(m, |b, a| {
        let mut acc = Series::zero();
        for l in 0..m {
            for c in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        acc += &(&(&gi[l * m + c] * &gi[j * m + k]) * t.at(&[b, j, l])) * tb.at(&[a, k, c]);
                    }
                }
            }
        }
        acc
    });
    let tau: Vec<Series> = (0..m)
        .map(|l| {
            let mut acc = Series::zero();
            for j in 0..m {
                for k in 0..m {
                    acc += &gi[j * m + k] * t.at(&[k, j, l]);
                }
            }
            acc
        })
        .collect();
    let tau_up_bar: Vec<Series> = (0..m).map(|c| (0..m).fold(Series::zero(), |acc, k| acc + &gi[c * m + k] * &tau[k].conj())).collect();
    let w = Form::<Series>::from_11(m, |k, j| &rtilde[k * m + j] + &tct[k * m + j].scale_re(0.5));
    let taut = Form::<Series>::from_11(m, |a, b| (0..m).fold(Series::zero(), |acc, c| acc + &tau_up_bar[c] * t.at(&[a, b, c])));
    let dagger = del_dagger(ch, &torsion_series(ch))?.map(cut);
    let lhs = w.del().value();
    let rhs = taut.del().value().sub_form(&dagger.del().value());
    let mut r = Residual::default();
    r.forms(&lhs, &rhs);
    r.form_scale(&dagger.del().value());
    Ok(r)
}

fn conformal_torsion(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let f = s.scalar();
    let chf = Chern::new(&ch.jet.conformal(f)?)?;
    let up = |c: &Chern| {
        let t = c.torsion.value();
        let gi = c.jet.metric().inv().clone();
        Tensor::from_fn(m, &[Slot::HolUp, Slot::Hol, Slot::Hol], move |i| (0..m).map(|k| gi[(i[0], k)] * t.at(&[k, i[1], i[2]])).sum())
    };
    let (t0, t1) = (up(ch), up(&chf));
    let fj: Vec<Complex64> = (0..m).map(|j| f.d(j).value()).collect();
    let mut r = Residual::default();
    for l in 0..m {
        for j in 0..m {
            for k in 0..m {
                let dl = |a: usize| if a == l { 1.0 } else { 0.0 };
                r.compare(*t1.at(&[l, j, k]), t0.at(&[l, j, k]) + fj[j] * dl(k) - fj[k] * dl(j));
            }
        }
    }
    Ok(r)
}

fn conformal_curvature(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let f = s.scalar();
    let chf = Chern::new(&ch.jet.conformal(f)?)?;
    let (r0, r1) = (ch.curvature()?.value(), chf.curvature()?.value());
    let ef = f.value().re.exp();
    let g = ch.jet.metric().g();
    let mut r = Residual::default();
    for k in 0..m {
        for j in 0..m {
            let fkj = f.d(j).dbar(k).value();
            for l in 0..m {
                for q in 0..m {
                    r.compare(*r1.at(&[k, j, l, q]), ef * (r0.at(&[k, j, l, q]) - fkj * g[(l, q)]));
                }
            }
        }
    }
    Ok(r)
}

/// All index tuples of a given length.
fn tuples(m: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..m.pow(len as u32)).map(move |mut n| {
        let mut v = vec![0; len];
        for x in v.iter_mut().rev() {
            *x = n % m;
            n /= m;
        }
        v
    })
}

fn del_lemma(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let gi = ch.jet.metric().inv();
    let tv = ch.torsion.value();
    // T^s_{ab}
    let tup = |sx: usize, a: usize, b: usize| -> Complex64 { (0..m).map(|k| gi[(sx, k)] * tv.at(&[k, a, b])).sum() };
    let mut r = Residual::default();
    for (n, (p, q)) in [(1, 0), (2, 0), (1, 1), (2, 1)].into_iter().enumerate() {
        if p + 1 > m {
            continue;
        }
        let alpha = s.series_form(p, q, n as u64);
        let d_alpha = alpha.del().value();
        let a = form_to_tensor(&alpha);
        let av = a.value();
        let na = ch.nabla(&a)?.value();
        let da = Tensor::from_fn(m, &[vec![Slot::Hol], a.slots().to_vec()].concat(), |i| a.at(&i[1..]).d(i[0]).value());
        for tt in tuples(m, q) {
            for ss in tuples(m, p + 1) {
                let lhs = d_alpha.get(&ss, &tt);
                let mut partial = Complex64::default();
                let mut covariant = Complex64::default();
                for k in 0..=p {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let rest: Vec<usize> = ss.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, x)| *x).collect();
                    let idx: Vec<usize> = [vec![ss[k]], tt.clone(), rest.clone()].concat();
                    partial += sign * da.at(&idx);
                    covariant += sign * na.at(&idx);
                    // (−1)^k in one-based counting for the pair l < k
                    for l in 0..k {
                        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                        for sx in 0..m {
                            let mut sub = ss.clone();
                            sub[l] = sx;
                            sub.remove(k);
                            let idx: Vec<usize> = [tt.clone(), sub].concat();
                            covariant += sign * tup(sx, ss[l], ss[k]) * av.at(&idx);
                        }
                    }
                }
                r.compare(lhs, partial);
                r.compare(lhs, covariant);
            }
        }
    }
    Ok(r)
}

fn del_dagger_special(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let mut r = Residual::default();
    for (n, (p, q)) in [(1, 0), (2, 0), (2, 1)].into_iter().enumerate() {
        let alpha = s.series_form(p, q, 4 + n as u64);
        r.forms(&del_dagger(ch, &alpha)?.value(), &del_dagger_general(ch, &alpha)?.value());
    }
    Ok(r)
}

fn divergence(s: &Sample) -> Result<Residual> {
    let ch = s.generic();
    let m = s.m;
    let v_form = s.series_form(1, 0, 7);
    let v = Tensor::from_fn(m, &[Slot::HolUp], |i| v_form.get(&[i[0]], &[]));
    let nv = ch.nabla(&v)?.value();
    let tau = ch.torsion_pack().tau;
    let det = ch.jet.matrix().det();
    let mut lhs = Complex64::default();
    let mut rhs = Series::zero();
    let mut r = Residual::default();
    for j in 0..m {
        lhs += nv.at(&[j, j]) - tau[j] * v.at(&[j]).value();
        r.term(*nv.at(&[j, j]));
        rhs += (&det * v.at(&[j])).d(j);
    }
    r.compare(lhs, rhs.value() / det.value());
    Ok(r)
}

fn kahler_traces(s: &Sample) -> Result<Residual> {
    let ch = s.kahler();
    let cp = ch.curvature_pack()?;
    let mut r = Residual::default();
    r.abs = ch.torsion_pack().t.max_abs();
    r.matrices(&cp.rtilde, &cp.ric);
    r.matrices(&cp.rprime, &cp.ric);
    r.matrices(&cp.rdprime, &cp.ric);
    Ok(r)
}
