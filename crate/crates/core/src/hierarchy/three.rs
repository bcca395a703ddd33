//! Three-photon level.
//!
//! Besides `X = ⟨e,s|σ|g,3⟩` and `Y = ⟨g,s,s'|σ|g,3⟩` the level needs the
//! cross families `⟨e,0|σ|e,s⟩`, `⟨g,t₁|σ|e,s⟩`, `⟨e,0|σ|g,s,s'⟩` and
//! `⟨g,t₁|σ|g,s,s'⟩`. Each is split into a singular part fixed by the lower
//! levels and a regular remainder (`P̃`, `Q̃`, `R`, `W̃`) obeying
//! `M̃' = -ΓM̃ + Γe^{iφ}M̃(t-τ) + ℓ*·j` plus jumps.
//!
//! `W̃` has rank three. With [`MapStorage::Propagator`] it is never stored:
//! its source is a product `B*(u,t₁)·j_g(u;s,s')`, so every contraction the
//! level needs is rebuilt from the archived `j_g` and the discrete delay
//! propagator of the integrator.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::pulsed::{step2, Levels, Setup};
use super::ring::Ring;
use super::{Kernel, MapStorage, Options};
use crate::pulse::Side;
use crate::sum::{csum_by, rsum_by, wdot, wnorm2};

const ZERO: C64 = C64::new(0.0, 0.0);
const CHUNK: usize = 1024;

/// Index of the pair `i ≤ j` in the packed upper triangle of an `m × m` array.
#[inline]
pub(crate) fn pidx(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * m - i * (i + 1) / 2 + j
}

/// Packed symmetric pair layout and the weights of `½∬ds ds'`.
struct Pairs {
    m: usize,
    pairs: Vec<(u32, u32)>,
    pw: Vec<f64>,
}

impl Pairs {
    fn new(w: &[f64]) -> Self {
        let m = w.len();
        let mut pairs = Vec::with_capacity(m * (m + 1) / 2);
        let mut pw = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                pairs.push((i as u32, j as u32));
                pw.push(if i == j { 0.5 * w[i] * w[i] } else { w[i] * w[j] });
            }
        }
        Self { m, pairs, pw }
    }

    fn len(&self) -> usize {
        self.pw.len()
    }

    fn at(&self, y: &[C64], i: usize, j: usize) -> C64 {
        y[pidx(self.m, i, j)]
    }

    /// `½∬ w w a b` for symmetric `a`, `b`.
    fn dot(&self, a: &[C64], b: &[C64]) -> C64 {
        csum_by(self.len(), |p| a[p] * b[p] * self.pw[p])
    }
}

/// Jump of `B` at one step together with the mid values used to weight the
/// jumps of the hidden maps.
struct JumpInfo {
    jb: Vec<(usize, C64)>,
    am: C64,
    bm: Vec<C64>,
}

impl JumpInfo {
    fn new(s: &Setup, lv: &Levels, u: usize) -> Self {
        let jb = s.jumps(u);
        let am = if u == 0 { C64::new(0.5, 0.0) } else { lv.a[u] };
        let mut bm = lv.b.get(u).to_vec();
        for &(i, j) in &jb {
            bm[i] -= 0.5 * j;
        }
        Self { jb, am, bm }
    }

    /// Jump of the `e`-type source, `-2 J_B(s) A`.
    fn je(&self) -> Vec<(usize, C64)> {
        self.jb.iter().map(|&(i, j)| (i, -2.0 * j * self.am)).collect()
    }

    /// Adds `c · j_g^J` to a packed array, with
    /// `j_g^J(s,s') = -2(J_B(s)B_m(s') + B_m(s)J_B(s'))`.
    fn add_jg(&self, out: &mut [C64], c: C64, conj: bool) {
        let m = self.bm.len();
        for &(i, j) in &self.jb {
            for (t, &b) in self.bm.iter().enumerate() {
                let mut v = -2.0 * j * b;
                if t == i {
                    v *= 2.0;
                }
                let v = if conj { v.conj() } else { v };
                out[pidx(m, i, t)] += c * v;
            }
        }
    }

    /// `½∬ w w j_g^J y` for symmetric packed `y`.
    fn dot_jg(&self, pairs: &Pairs, w: &[f64], y: &[C64]) -> C64 {
        let mut acc = ZERO;
        for &(i, j) in &self.jb {
            let row = csum_by(pairs.m, |t| self.bm[t] * pairs.at(y, i, t) * w[t]);
            acc += -2.0 * w[i] * j * row;
        }
        acc
    }
}

/// Sources of the regular maps at one stage.
struct Sources {
    p: Vec<C64>,
    q: Vec<C64>,
    r: Vec<C64>,
    /// Packed `j_g` itself.
    jg: Vec<C64>,
    /// `B*(t₁) j_g`, only for direct storage.
    w: Option<Vec<C64>>,
}

/// Discrete response of `y' = -Γy + Γe^{iφ}y(t-τ)` to a unit value placed at
/// step zero, as a continuous increment (`regular`) or as a jump (`jump`).
struct Propagator {
    regular: Vec<C64>,
    jump: Vec<C64>,
    h: f64,
    e1: f64,
}

impl Propagator {
    fn new(s: &Setup) -> Self {
        let n = s.n_steps + 1;
        let run = |left0: C64| {
            let mut y = vec![ZERO; n];
            y[0] = C64::new(1.0, 0.0);
            for j in 0..n - 1 {
                let r0 = s.back(j).map_or(ZERO, |p| y[p]);
                let r1 = s.back(j + 1).map_or(ZERO, |p| if p == 0 { left0 } else { y[p] });
                y[j + 1] = s.e1 * y[j] + 0.5 * s.h * s.eip * (s.e1 * r0 + r1);
            }
            y
        };
        Self { regular: run(C64::new(1.0, 0.0)), jump: run(ZERO), h: s.h, e1: s.e1 }
    }

    /// Weights of the left-limit source, right-limit source and jump emitted at
    /// step `u` in the value at step `q`.
    fn coef(&self, q: usize, u: usize, side: Side) -> (C64, C64, C64) {
        let cm = if u >= 1 { 0.5 * self.h * self.regular[q - u] } else { ZERO };
        let cp = if u < q { 0.5 * self.h * self.e1 * self.regular[q - 1 - u] } else { ZERO };
        let cj = if u == q && side == Side::Left { ZERO } else { self.jump[q - u] };
        (cm, cp, cj)
    }
}

enum WStore {
    Direct(Ring),
    Archive { minus: Vec<Vec<C64>>, plus: Vec<Vec<C64>>, prop: Propagator },
}

struct Three<'a> {
    s: &'a Setup,
    lv: Levels,
    pairs: Pairs,
    pt: Ring,
    qt: Ring,
    r: Ring,
    wst: WStore,
    x: Ring,
    y: Ring,
    kernel: Kernel,
}

impl<'a> Three<'a> {
    fn new(s: &'a Setup, opts: &Options) -> Self {
        let m = s.m();
        let depth = s.k2 + 1;
        let pairs = Pairs::new(&s.w);
        let np = pairs.len();
        let lv = Levels::new(s, true);
        let wst = match opts.map_storage {
            MapStorage::Direct => WStore::Direct(Ring::new(depth, m * np)),
            MapStorage::Propagator => WStore::Archive {
                minus: Vec::with_capacity(s.n_steps + 1),
                plus: Vec::with_capacity(s.n_steps + 1),
                prop: Propagator::new(s),
            },
        };
        let mut t = Self {
            s,
            lv,
            pairs,
            pt: Ring::new(depth, m),
            qt: Ring::new(depth, m * m),
            r: Ring::new(depth, np),
            wst,
            x: Ring::new(depth, m),
            y: Ring::new(depth, np),
            kernel: opts.kernel,
        };
        let j = JumpInfo::new(s, &t.lv, 0);
        let mut p = vec![ZERO; m];
        let mut q = vec![ZERO; m * m];
        let mut r = vec![ZERO; np];
        t.add_map_jumps(&j, &mut p, &mut q, &mut r, 1.0);
        t.pt.push(&p);
        t.qt.push(&q);
        t.r.push(&r);
        if let WStore::Direct(ring) = &mut t.wst {
            let mut w = vec![ZERO; m * np];
            add_w_jump(&j, &mut w, np, 1.0);
            ring.push(&w);
        }
        if let WStore::Archive { minus, .. } = &mut t.wst {
            minus.push(vec![]);
        }
        t.x.push(&vec![ZERO; m]);
        t.y.push(&vec![ZERO; np]);
        t
    }

    /// Adds `sign ×` the jumps of `P̃`, `Q̃` and `R` at one step.
    fn add_map_jumps(&self, j: &JumpInfo, p: &mut [C64], q: &mut [C64], r: &mut [C64], sign: f64) {
        let m = self.s.m();
        for (i, v) in j.je() {
            p[i] += sign * j.am.conj() * v;
            for t1 in 0..m {
                q[t1 * m + i] += sign * j.bm[t1].conj() * v;
            }
        }
        j.add_jg(r, sign * j.am.conj(), false);
    }

    /// One-sided values of `P̃`, `Q̃` and `R` at step `m`.
    fn maps_at(&self, m: usize, side: Side) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
        let mut p = self.pt.get(m).to_vec();
        let mut q = self.qt.get(m).to_vec();
        let mut r = self.r.get(m).to_vec();
        if side == Side::Left {
            let j = JumpInfo::new(self.s, &self.lv, m);
            self.add_map_jumps(&j, &mut p, &mut q, &mut r, -1.0);
        }
        (p, q, r)
    }

    fn w_direct_at(&self, m: usize, side: Side) -> Vec<C64> {
        let WStore::Direct(ring) = &self.wst else { unreachable!() };
        let mut w = ring.get(m).to_vec();
        if side == Side::Left {
            let j = JumpInfo::new(self.s, &self.lv, m);
            add_w_jump(&j, &mut w, self.pairs.len(), -1.0);
        }
        w
    }

    /// `Σ_{t₁} w c(t₁) W̃(q; t₁, s, s')` as a packed array.
    fn w_contract(&self, q: usize, side: Side, c: &[C64]) -> Vec<C64> {
        let s = self.s;
        let np = self.pairs.len();
        match &self.wst {
            WStore::Direct(_) => {
                let w = self.w_direct_at(q, side);
                let wc: Vec<C64> = (0..s.m()).map(|t| c[t] * s.w[t]).collect();
                let mut out = vec![ZERO; np];
                out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, o)| {
                    let base = ci * CHUNK;
                    for (t, &x) in wc.iter().enumerate() {
                        let row = &w[t * np + base..t * np + base + o.len()];
                        for (a, &b) in o.iter_mut().zip(row) {
                            *a += x * b;
                        }
                    }
                });
                out
            }
            WStore::Archive { minus, plus, prop } => {
                // β(u) = Σ w c B*(u)
                let us: Vec<usize> = (0..=q).collect();
                let beta: Vec<(C64, C64, C64)> = us
                    .par_iter()
                    .map(|&u| {
                        let j = JumpInfo::new(s, &self.lv, u);
                        let bu = self.lv.b.get(u);
                        let full = csum_by(s.m(), |t| c[t] * bu[t].conj() * s.w[t]);
                        let corr: C64 = j.jb.iter().map(|&(i, v)| c[i] * v.conj() * s.w[i]).sum();
                        let (cm, cp, cj) = prop.coef(q, u, side);
                        (cm * (full - corr), cp * full, cj * (full - 0.5 * corr))
                    })
                    .collect();
                let mut out = combine(minus, plus, &beta, q, np, false);
                for &u in &us {
                    if beta[u].2 != ZERO {
                        JumpInfo::new(s, &self.lv, u).add_jg(&mut out, beta[u].2, false);
                    }
                }
                out
            }
        }
    }

    /// `Σ_{t₁} w W̃*(m; t₁, s, s') v(t₁)` as a packed array.
    fn w_contract_conj(&self, q: usize, side: Side, v: &[C64]) -> Vec<C64> {
        match &self.wst {
            WStore::Direct(_) => {
                let vc: Vec<C64> = v.iter().map(|x| x.conj()).collect();
                self.w_contract(q, side, &vc).iter().map(|x| x.conj()).collect()
            }
            WStore::Archive { minus, plus, prop } => {
                let s = self.s;
                let np = self.pairs.len();
                let gam: Vec<(C64, C64, C64)> = (0..=q)
                    .into_par_iter()
                    .map(|u| {
                        let j = JumpInfo::new(s, &self.lv, u);
                        let bu = self.lv.b.get(u);
                        let full = csum_by(s.m(), |t| bu[t] * v[t] * s.w[t]);
                        let corr: C64 = j.jb.iter().map(|&(i, x)| x * v[i] * s.w[i]).sum();
                        let (cm, cp, cj) = prop.coef(q, u, side);
                        (cm.conj() * (full - corr), cp.conj() * full, cj.conj() * (full - 0.5 * corr))
                    })
                    .collect();
                let mut out = combine(minus, plus, &gam, q, np, true);
                for u in 0..=q {
                    if gam[u].2 != ZERO {
                        JumpInfo::new(s, &self.lv, u).add_jg(&mut out, gam[u].2, true);
                    }
                }
                out
            }
        }
    }

    /// `½∬ w w W̃(m; t₁, s, s') y(s, s')` for every `t₁`.
    fn w_dot_pairs(&self, q: usize, side: Side, y: &[C64]) -> Vec<C64> {
        let s = self.s;
        let m = s.m();
        let np = self.pairs.len();
        match &self.wst {
            WStore::Direct(_) => {
                let w = self.w_direct_at(q, side);
                (0..m).into_par_iter().map(|t| self.pairs.dot(&w[t * np..(t + 1) * np], y)).collect()
            }
            WStore::Archive { minus, plus, prop } => {
                // η(u) = ½∬ w w j_g(u) y, folded with the propagator weights
                let eta: Vec<(C64, C64)> = (0..=q)
                    .into_par_iter()
                    .map(|u| {
                        let j = JumpInfo::new(s, &self.lv, u);
                        let (cm, cp, cj) = prop.coef(q, u, side);
                        let em = if cm != ZERO { self.pairs.dot(&minus[u], y) } else { ZERO };
                        let ep = if cp != ZERO { self.pairs.dot(&plus[u], y) } else { ZERO };
                        let ej = if cj != ZERO { j.dot_jg(&self.pairs, &s.w, y) } else { ZERO };
                        (cm * em + cp * ep + cj * ej, cm * em + 0.5 * cj * ej)
                    })
                    .collect();
                let jumps: Vec<Vec<(usize, C64)>> = (0..=q).map(|u| s.jumps(u)).collect();
                let mut out: Vec<C64> = (0..m)
                    .into_par_iter()
                    .map(|t| {
                        let mut acc = ZERO;
                        for u in 0..=q {
                            acc += self.lv.b.get(u)[t].conj() * eta[u].0;
                        }
                        acc
                    })
                    .collect();
                for u in 0..=q {
                    for &(i, x) in &jumps[u] {
                        out[i] -= x.conj() * eta[u].1;
                    }
                }
                out
            }
        }
    }

    /// Sources of the regular maps at stage `(m, side)`.
    fn sources(&self, m: usize, side: Side) -> Sources {
        let s = self.s;
        let nm = s.m();
        let np = self.pairs.len();
        let a = self.lv.a_at(m, side);
        let b = self.lv.b_at(s, m, side);
        let bq = self.lv.bq(s, m);
        let mut ze = vec![ZERO; nm];
        let mut zg = vec![ZERO; np];
        if let Some(mp) = s.back(m) {
            let ap = self.lv.a_at(mp, side);
            let bp = self.lv.b_at(s, mp, side);
            let (ptp, qtp, rp) = self.maps_at(mp, side);
            let wbq: Vec<C64> = (0..nm).map(|t| bq[t] * s.w[t]).collect();
            ze = (0..nm)
                .into_par_iter()
                .map(|i| {
                    let col = csum_by(nm, |t| wbq[t] * qtp[t * nm + i]);
                    a * (bp[i] + ptp[i]) + b[i] * ap + col
                })
                .collect();
            let wz = self.w_contract(mp, side, &bq);
            zg.par_iter_mut().enumerate().for_each(|(p, z)| {
                let (i, j) = self.pairs.pairs[p];
                let (i, j) = (i as usize, j as usize);
                *z = a * rp[p] + bp[i] * b[j] + b[i] * bp[j] + wz[p];
            });
        }
        let f = -2.0 * s.eip;
        let je: Vec<C64> = ze.iter().map(|z| f * z).collect();
        let jg: Vec<C64> = zg.iter().map(|z| f * z).collect();
        let p = je.iter().map(|v| a.conj() * v).collect();
        let mut q = vec![ZERO; nm * nm];
        q.par_chunks_mut(nm).enumerate().for_each(|(t, row)| {
            let c = b[t].conj();
            for (o, v) in row.iter_mut().zip(&je) {
                *o = c * v;
            }
        });
        let r = jg.iter().map(|v| a.conj() * v).collect();
        let w = matches!(self.wst, WStore::Direct(_)).then(|| {
            let mut w = vec![ZERO; nm * np];
            w.par_chunks_mut(np).enumerate().for_each(|(t, row)| {
                let c = b[t].conj();
                for (o, v) in row.iter_mut().zip(&jg) {
                    *o = c * v;
                }
            });
            w
        });
        Sources { p, q, r, jg, w }
    }

    /// Advances the regular maps from `n` to `n+1`.
    fn step_maps(&mut self, n: usize, s0: &Sources, s1: &Sources) {
        let s = self.s;
        let (h, e1, eip) = (s.h, s.e1, s.eip);
        let (b0, b1) = (s.back(n), s.back(n + 1));
        let hist0 = b0.map(|p| self.maps_at(p, Side::Right));
        let hist1 = b1.map(|p| self.maps_at(p, Side::Left));
        let step = |y: &[C64], d0: Option<&[C64]>, d1: Option<&[C64]>, r0: &[C64], r1: &[C64]| -> Vec<C64> {
            let mut out = vec![ZERO; y.len()];
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, o)| {
                let base = ci * CHUNK;
                for (k, v) in o.iter_mut().enumerate() {
                    let i = base + k;
                    let x0 = d0.map_or(ZERO, |d| eip * d[i]) + r0[i];
                    let x1 = d1.map_or(ZERO, |d| eip * d[i]) + r1[i];
                    *v = e1 * y[i] + 0.5 * h * (e1 * x0 + x1);
                }
            });
            out
        };
        let j = JumpInfo::new(s, &self.lv, n + 1);
        let mut p = step(
            self.pt.get(n),
            hist0.as_ref().map(|x| &x.0[..]),
            hist1.as_ref().map(|x| &x.0[..]),
            &s0.p,
            &s1.p,
        );
        let mut q = step(
            self.qt.get(n),
            hist0.as_ref().map(|x| &x.1[..]),
            hist1.as_ref().map(|x| &x.1[..]),
            &s0.q,
            &s1.q,
        );
        let mut r = step(
            self.r.get(n),
            hist0.as_ref().map(|x| &x.2[..]),
            hist1.as_ref().map(|x| &x.2[..]),
            &s0.r,
            &s1.r,
        );
        self.add_map_jumps(&j, &mut p, &mut q, &mut r, 1.0);
        if matches!(self.wst, WStore::Direct(_)) {
            let w0 = b0.map(|p| self.w_direct_at(p, Side::Right));
            let w1 = b1.map(|p| self.w_direct_at(p, Side::Left));
            let WStore::Direct(ring) = &self.wst else { unreachable!() };
            let mut w = step(ring.get(n), w0.as_deref(), w1.as_deref(), s0.w.as_ref().unwrap(), s1.w.as_ref().unwrap());
            add_w_jump(&j, &mut w, self.pairs.len(), 1.0);
            if let WStore::Direct(ring) = &mut self.wst {
                ring.push(&w);
            }
        }
        self.pt.push(&p);
        self.qt.push(&q);
        self.r.push(&r);
    }

    /// Right-hand side of `X` and `Y` at stage `(m, side)`.
    fn stage3(&self, m: usize, side: Side) -> (Vec<C64>, Vec<C64>) {
        let s = self.s;
        let nm = s.m();
        let np = self.pairs.len();
        let g = s.gamma;
        let (r3, r6) = ((3.0 * g).sqrt(), (6.0 * g).sqrt());
        let eip = s.eip;
        let a = self.lv.a_at(m, side);
        let b = self.lv.b_at(s, m, side);
        let bq = self.lv.bq(s, m);
        let d = self.lv.d[m];
        let kk = self.lv.k.get(m);
        let ft = s.ft(m, side);
        let (pt, qt, rl) = self.maps_at(m, side);
        let zm = vec![ZERO; nm];
        let zp = vec![ZERO; np];
        let back = s.back(m);
        let xp: &[C64] = back.map_or(&zm[..], |p| self.x.get(p));
        let yp: &[C64] = back.map_or(&zp[..], |p| self.y.get(p));

        let pv: Vec<C64> = (0..nm).map(|i| b[i] + pt[i]).collect();
        let pq: Vec<C64> = (0..nm).map(|i| bq[i] + pt[i]).collect();
        let alpha = wdot(&s.w, &pq, xp) + self.pairs.dot(&rl, yp);

        let vw = if back.is_some() { self.w_dot_pairs(m, side, yp) } else { zm.clone() };
        let wbq: Vec<C64> = (0..nm).map(|t| bq[t] * s.w[t]).collect();
        let u: Vec<C64> = (0..nm)
            .into_par_iter()
            .map(|t| {
                let qrow = wdot(&s.w, &qt[t * nm..(t + 1) * nm], xp);
                let yrow = csum_by(nm, |s2| wbq[s2] * self.pairs.at(yp, s2, t));
                let v = a * xp[t] + qrow + yrow + vw[t];
                2.0 * r3 * ft * kk[t] - 2.0 * eip * v
            })
            .collect();
        let wu: Vec<C64> = (0..nm).map(|t| u[t] * s.w[t]).collect();
        let dx: Vec<C64> = (0..nm)
            .into_par_iter()
            .map(|i| {
                let qint = a.conj() * u[i] + csum_by(nm, |t| qt[t * nm + i].conj() * wu[t]);
                let c = pv[i].conj();
                2.0 * r3 * ft * c * d - 2.0 * eip * c * alpha + qint + eip * xp[i]
            })
            .collect();
        let wint = self.w_contract_conj(m, side, &u);
        let mut dy = vec![ZERO; np];
        dy.par_iter_mut().enumerate().for_each(|(p, o)| {
            let (i, j) = self.pairs.pairs[p];
            let (i, j) = (i as usize, j as usize);
            let c = rl[p].conj();
            *o = -r6 * ft * s.f[i] * s.f[j] + 2.0 * r3 * ft * c * d - 2.0 * eip * c * alpha
                + b[i].conj() * u[j]
                + b[j].conj() * u[i]
                + wint[p]
                + eip * yp[p];
        });
        (dx, dy)
    }

    fn population(&self, x: &[C64], y: &[C64]) -> f64 {
        wnorm2(&self.s.w, x) + rsum_by(y.len(), |p| y[p].norm_sqr() * self.pairs.pw[p])
    }

    fn run(mut self) -> Vec<f64> {
        let s = self.s;
        let mut pop = vec![0.0; s.n_steps + 1];
        let mut src_plus = self.sources(0, Side::Right);
        if let WStore::Archive { plus, .. } = &mut self.wst {
            plus.push(std::mem::take(&mut src_plus.jg));
        }
        for n in 0..s.n_steps {
            self.lv.step1(s);
            step2(s, &mut self.lv, self.kernel, None);
            let mut src_minus = self.sources(n + 1, Side::Left);
            self.step_maps(n, &src_plus, &src_minus);
            if let WStore::Archive { minus, .. } = &mut self.wst {
                minus.push(std::mem::take(&mut src_minus.jg));
            }
            let (dx0, dy0) = self.stage3(n, Side::Right);
            let (dx1, dy1) = self.stage3(n + 1, Side::Left);
            let (h, e1) = (s.h, s.e1);
            let heun = |y: &[C64], r0: &[C64], r1: &[C64]| -> Vec<C64> {
                (0..y.len()).map(|i| e1 * y[i] + 0.5 * h * (e1 * r0[i] + r1[i])).collect()
            };
            let x = heun(self.x.get(n), &dx0, &dx1);
            let y = heun(self.y.get(n), &dy0, &dy1);
            pop[n + 1] = self.population(&x, &y);
            self.x.push(&x);
            self.y.push(&y);
            src_plus = self.sources(n + 1, Side::Right);
            if let WStore::Archive { plus, .. } = &mut self.wst {
                plus.push(std::mem::take(&mut src_plus.jg));
            }
        }
        pop
    }
}

/// `Σ_u c₋(u) j_g⁻(u) + c₊(u) j_g⁺(u)` over `u ≤ q`, optionally conjugating `j_g`.
fn combine(minus: &[Vec<C64>], plus: &[Vec<C64>], c: &[(C64, C64, C64)], q: usize, np: usize, conj: bool) -> Vec<C64> {
    let mut out = vec![ZERO; np];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, o)| {
        let base = ci * CHUNK;
        let len = o.len();
        for u in 0..=q {
            let (cm, cp, _) = c[u];
            if cm != ZERO {
                let src = &minus[u][base..base + len];
                for (a, &v) in o.iter_mut().zip(src) {
                    *a += cm * if conj { v.conj() } else { v };
                }
            }
            if cp != ZERO {
                let src = &plus[u][base..base + len];
                for (a, &v) in o.iter_mut().zip(src) {
                    *a += cp * if conj { v.conj() } else { v };
                }
            }
        }
    });
    out
}

/// Adds `sign ×` the jump `B_m*(t₁) j_g^J(s,s')` of `W̃` to a full `m × P` array.
fn add_w_jump(j: &JumpInfo, w: &mut [C64], np: usize, sign: f64) {
    let mut jg = vec![ZERO; np];
    j.add_jg(&mut jg, C64::new(sign, 0.0), false);
    w.par_chunks_mut(np).enumerate().for_each(|(t, row)| {
        let c = j.bm[t].conj();
        for (o, v) in row.iter_mut().zip(&jg) {
            *o += c * v;
        }
    });
}

pub(crate) fn run(s: &Setup, opts: &Options) -> Vec<f64> {
    Three::new(s, opts).run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_index_is_dense() {
        let m = 7;
        let mut seen = vec![false; m * (m + 1) / 2];
        for i in 0..m {
            for j in i..m {
                let p = pidx(m, i, j);
                assert!(!seen[p]);
                seen[p] = true;
                assert_eq!(p, pidx(m, j, i));
            }
        }
        assert!(seen.iter().all(|&x| x));
    }

    #[test]
    fn pair_weights_cover_half_square() {
        let w = vec![0.5, 1.0, 1.0, 0.5];
        let p = Pairs::new(&w);
        let tot: f64 = p.pw.iter().sum();
        let full: f64 = w.iter().sum::<f64>().powi(2);
        assert!((tot - 0.5 * full).abs() < 1e-15);
    }
}
