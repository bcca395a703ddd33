//! Fock-pulse hierarchy up to two photons, and the shared lower levels used by
//! the three-photon solver.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::ring::Ring;
use super::three;
use super::vacuum::delta_step;
use super::{build_nodes, Kernel, Options, SystemParams};
use crate::error::Result;
use crate::pulse::{Envelope, Side};
use crate::sum::{csum_by, wdot, wnorm2};
use crate::timegrid::{AuxNodes, TimeGrid};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Grid constants, node data and the impulsive sources of `⟨g,0|σ|g,s⟩`.
pub(crate) struct Setup {
    pub h: f64,
    /// Steps per round trip.
    pub k2: usize,
    pub n_steps: usize,
    pub gamma: f64,
    pub gamma_pd: f64,
    /// `e^{-(Γ+γ)h}`.
    pub e1: f64,
    /// `e^{-2Γh}`.
    pub e2: f64,
    /// `Γe^{iφ}`, zero without feedback.
    pub eip: C64,
    pub nodes: AuxNodes,
    pub w: Vec<f64>,
    /// One-sided pulse value at every node.
    pub f: Vec<C64>,
    /// Share of a jump at the current label that the quadrature sees.
    pub cw: Vec<f64>,
    j_direct: C64,
    j_mirror: C64,
    /// `f_τ(t_m)` as `[right, left]`.
    ft: Vec<[C64; 2]>,
}

impl Setup {
    pub fn new(params: &SystemParams, env: &Envelope, grid: &TimeGrid) -> Self {
        let nodes = build_nodes(grid, env);
        let g = params.gamma;
        let h = grid.dt;
        let f = (0..nodes.len()).map(|i| env.at(nodes.label[i], nodes.side[i])).collect();
        let cw = nodes
            .side
            .iter()
            .map(|s| match s {
                Side::Left => 0.0,
                Side::Right => 1.0,
                Side::Mid => 0.5,
            })
            .collect();
        let ft = (0..=grid.n_steps)
            .map(|m| {
                let t = grid.time(m);
                [
                    env.ftau(t, params.tau, params.phi, Side::Right),
                    env.ftau(t, params.tau, params.phi, Side::Left),
                ]
            })
            .collect();
        let half = C64::from_polar(1.0, 0.5 * params.phi);
        Self {
            h,
            k2: 2 * grid.k_half_tau,
            n_steps: grid.n_steps,
            gamma: g,
            gamma_pd: params.gamma_pd,
            e1: (-(g + params.gamma_pd) * h).exp(),
            e2: (-2.0 * g * h).exp(),
            eip: if params.feedback { C64::from_polar(g, params.phi) } else { ZERO },
            w: nodes.weight.clone(),
            nodes,
            f,
            cw,
            j_direct: -g.sqrt() * half,
            j_mirror: g.sqrt() * half.conj(),
            ft,
        }
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn ft(&self, m: usize, side: Side) -> C64 {
        self.ft[m][(side == Side::Left) as usize]
    }

    /// Nonzero entries of the jump of `⟨g,0|σ|g,s⟩` at step `m`: the emitter
    /// at `t_m` couples to the labels `t_m - τ/2` and `t_m + τ/2`.
    pub fn jumps(&self, m: usize) -> Vec<(usize, C64)> {
        let mut out = vec![];
        for i in self.nodes.at(m) {
            out.push((i, self.j_direct));
        }
        for i in self.nodes.at(m + self.k2) {
            // at t = 0 the label τ/2 is only reached from the right
            if m == 0 && self.nodes.side[i] == Side::Left {
                continue;
            }
            out.push((i, self.j_mirror));
        }
        out
    }

    /// Delayed step index for stage `m`, if it lies on or after `t = 0`.
    pub fn back(&self, m: usize) -> Option<usize> {
        m.checked_sub(self.k2)
    }
}

/// Levels one and two: `A = ⟨g,0|σ|e,0⟩`, `B = ⟨g,0|σ|g,s⟩`,
/// `C = ⟨g,0|σ|g,1⟩`, `D = ⟨e,0|σ|g,2⟩` and `K = ⟨g,s|σ|g,2⟩`.
pub(crate) struct Levels {
    pub a: Vec<C64>,
    pub b: Ring,
    pub c: Vec<C64>,
    pub d: Vec<C64>,
    pub k: Ring,
    /// Step reached so far.
    pub n: usize,
}

impl Levels {
    pub fn new(s: &Setup, keep_b: bool) -> Self {
        let m = s.m();
        let depth = s.k2 + 1;
        let mut b = Ring::new(if keep_b { s.n_steps + 1 } else { depth }, m);
        let mut row = vec![ZERO; m];
        for (i, j) in s.jumps(0) {
            row[i] += j;
        }
        b.push(&row);
        let mut k = Ring::new(depth, m);
        k.push(&vec![ZERO; m]);
        let mut a = vec![ZERO; s.n_steps + 1];
        a[0] = C64::new(1.0, 0.0);
        Self { a, b, c: vec![ZERO; s.n_steps + 1], d: vec![ZERO; s.n_steps + 1], k, n: 0 }
    }

    /// `A` at step `m`; the initial value is a jump, so its left limit is zero.
    pub fn a_at(&self, m: usize, side: Side) -> C64 {
        if m == 0 && side == Side::Left {
            ZERO
        } else {
            self.a[m]
        }
    }

    /// Time-one-sided row of `B` at step `m`.
    pub fn b_at(&self, s: &Setup, m: usize, side: Side) -> Vec<C64> {
        let mut row = self.b.get(m).to_vec();
        if side == Side::Left {
            for (i, j) in s.jumps(m) {
                row[i] -= j;
            }
        }
        row
    }

    /// Row of `B` as seen by label quadratures at step `m`.
    pub fn bq(&self, s: &Setup, m: usize) -> Vec<C64> {
        let mut row = self.b.get(m).to_vec();
        if m > 0 {
            for (i, j) in s.jumps(m) {
                row[i] -= s.cw[i] * j;
            }
        }
        row
    }

    fn a_back(&self, s: &Setup, m: usize, side: Side) -> C64 {
        s.back(m).map_or(ZERO, |p| self.a_at(p, side))
    }

    /// Advances `A`, `B`, `C` from step `n` to `n+1`.
    pub fn step1(&mut self, s: &Setup) {
        let n = self.n;
        let (h, e1) = (s.h, s.e1);
        let heun = |y: C64, r0: C64, r1: C64| e1 * y + 0.5 * h * (e1 * r0 + r1);
        let a0 = s.eip * self.a_back(s, n, Side::Right);
        let a1 = s.eip * self.a_back(s, n + 1, Side::Left);
        self.a[n + 1] = heun(self.a[n], a0, a1);

        let m = s.m();
        let b0 = s.back(n).map(|p| self.b_at(s, p, Side::Right));
        let b1 = s.back(n + 1).map(|p| self.b_at(s, p, Side::Left));
        let bn = self.b.get(n);
        let mut row: Vec<C64> = (0..m)
            .map(|i| {
                let r0 = b0.as_ref().map_or(ZERO, |v| s.eip * v[i]);
                let r1 = b1.as_ref().map_or(ZERO, |v| s.eip * v[i]);
                heun(bn[i], r0, r1)
            })
            .collect();
        for (i, j) in s.jumps(n + 1) {
            row[i] += j;
        }
        self.b.push(&row);

        self.c[n + 1] = step_c(s, &self.c, n);
    }
}

/// `⟨g,0|σ|g,1⟩` from step `n` to `n + 1`; it only depends on its own history.
fn step_c(s: &Setup, c: &[C64], n: usize) -> C64 {
    let heun = |y: C64, r0: C64, r1: C64| s.e1 * y + 0.5 * s.h * (s.e1 * r0 + r1);
    let sg = s.gamma.sqrt();
    let cb = |p: Option<usize>| p.map_or(ZERO, |p| c[p]);
    let c0 = -sg * s.ft(n, Side::Right) + s.eip * cb(s.back(n));
    let c1 = -sg * s.ft(n + 1, Side::Left) + s.eip * cb(s.back(n + 1));
    heun(c[n], c0, c1)
}

/// One-photon pulse: the population is `|⟨g,0|σ|g,1⟩|²`, plus the dephasing
/// remainder when that form is requested.
fn run1(s: &Setup, dephasing_form: bool) -> Vec<f64> {
    let mut c = vec![ZERO; s.n_steps + 1];
    let mut pop = vec![0.0; s.n_steps + 1];
    let mut delta = 0.0;
    for n in 0..s.n_steps {
        c[n + 1] = step_c(s, &c, n);
        let (y0, y1) = (c[n].norm_sqr(), c[n + 1].norm_sqr());
        if dephasing_form {
            delta = delta_step(delta, y0, y1, s.gamma, s.gamma_pd, s.h);
        }
        pop[n + 1] = y1 + delta;
    }
    pop
}

/// Pure-dephasing corrections to the two-photon level: `⟨a|E|c⟩` minus its
/// coherent part, for `a, c ∈ {e,0 ; g,s}`, plus the population remainder.
pub(crate) struct Dephasing2 {
    ee: C64,
    eg: Vec<C64>,
    gg: Vec<C64>,
    delta: f64,
}

/// Quantities of one two-photon stage that the population remainder needs.
struct Stage2 {
    dd: C64,
    dk: Vec<C64>,
    ue: C64,
    ug: Vec<C64>,
    ve: C64,
    vg: Vec<C64>,
}

impl Dephasing2 {
    fn new(m: usize) -> Self {
        Self { ee: ZERO, eg: vec![ZERO; m], gg: vec![ZERO; m * m], delta: 0.0 }
    }

    /// `δε' = -2Γδε + 2γ ℓ_a* ℓ_c` with `ℓ_{e,0} = A`, `ℓ_{g,s} = B(s)`.
    fn step(&mut self, s: &Setup, lv: &Levels, n: usize) {
        let m = s.m();
        let (h, e2, g2) = (s.h, s.e2, 2.0 * s.gamma_pd);
        if g2 == 0.0 {
            return;
        }
        let (a0, a1) = (lv.a_at(n, Side::Right), lv.a_at(n + 1, Side::Left));
        let (b0, b1) = (lv.b_at(s, n, Side::Right), lv.b_at(s, n + 1, Side::Left));
        let tr = |y: C64, r0: C64, r1: C64| e2 * y + 0.5 * h * g2 * (e2 * r0 + r1);
        self.ee = tr(self.ee, a0.conj() * a0, a1.conj() * a1);
        for i in 0..m {
            self.eg[i] = tr(self.eg[i], a0.conj() * b0[i], a1.conj() * b1[i]);
        }
        self.gg.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let (x0, x1) = (b0[i].conj(), b1[i].conj());
            for j in 0..m {
                row[j] = tr(row[j], x0 * b0[j], x1 * b1[j]);
            }
        });
    }

    /// Population remainder source at one stage.
    fn source(&self, s: &Setup, st: &Stage2, d: C64, k: &[C64], ft: C64, pstd: f64) -> f64 {
        let r2 = (2.0 * s.gamma).sqrt();
        let du = d.conj() * st.ue + csum_by(k.len(), |i| k[i].conj() * st.ug[i] * s.w[i]);
        let dv = d.conj() * st.ve + csum_by(k.len(), |i| k[i].conj() * st.vg[i] * s.w[i]);
        2.0 * s.gamma_pd * pstd - 4.0 * r2 * (ft * du).re + 4.0 * (s.eip * dv).re
    }
}

fn row_dot(w: &[f64], row: &[C64], v: &[C64]) -> C64 {
    wdot(w, row, v)
}

/// Right-hand side of `D` and `K` at stage `(m, side)`.
fn stage2(s: &Setup, lv: &Levels, kernel: Kernel, deph: Option<&Dephasing2>, m: usize, side: Side) -> Stage2 {
    let nm = s.m();
    let r2 = (2.0 * s.gamma).sqrt();
    let a = lv.a_at(m, side);
    let c = lv.c[m];
    let bpt = lv.b_at(s, m, side);
    let bq = lv.bq(s, m);
    let ft = s.ft(m, side);
    let p = s.back(m);
    let dp = p.map_or(ZERO, |p| lv.d[p]);
    let zero_row = vec![ZERO; nm];
    let kp: &[C64] = p.map_or(&zero_row[..], |p| lv.k.get(p));
    let zs = a * dp + wdot(&s.w, &bq, kp);

    let mut ue = a.conj() * c;
    let mut ve = a.conj() * zs;
    let mut ug: Vec<C64> = bpt.iter().map(|b| b.conj() * c).collect();
    let mut vg: Vec<C64> = match kernel {
        Kernel::Factored => bpt.iter().map(|b| b.conj() * zs).collect(),
        Kernel::Dense => {
            // ⟨g,s|E|g,t₁⟩ = B*(s)B(t₁), one row at a time
            let tail = a * dp;
            bpt.par_iter()
                .map(|bi| {
                    let row: Vec<C64> = bq.iter().map(|bj| bi.conj() * bj).collect();
                    bi.conj() * tail + row_dot(&s.w, &row, kp)
                })
                .collect()
        }
    };
    // at zero rate every correction vanishes identically
    if let Some(x) = deph.filter(|_| s.gamma_pd > 0.0) {
        ue += wdot(&s.w, &x.eg, &s.f);
        ve += x.ee * dp + wdot(&s.w, &x.eg, kp);
        let extra: Vec<(C64, C64)> = x
            .gg
            .par_chunks(nm)
            .map(|row| (row_dot(&s.w, row, &s.f), row_dot(&s.w, row, kp)))
            .collect();
        for i in 0..nm {
            ug[i] += extra[i].0;
            vg[i] += x.eg[i].conj() * dp + extra[i].1;
        }
    }
    let dd = 2.0 * r2 * ft * ue + s.eip * (dp - 2.0 * ve);
    let dk = (0..nm)
        .map(|i| -r2 * ft * s.f[i] + 2.0 * r2 * ft * ug[i] + s.eip * (kp[i] - 2.0 * vg[i]))
        .collect();
    Stage2 { dd, dk, ue, ug, ve, vg }
}

fn pop2(s: &Setup, d: C64, k: &[C64]) -> f64 {
    d.norm_sqr() + wnorm2(&s.w, k)
}

/// Advances `D` and `K` from step `lv.n` to `lv.n + 1` (after [`Levels::step1`])
/// and returns `|D|² + ∫|K|²` at the new step.
pub(crate) fn step2(s: &Setup, lv: &mut Levels, kernel: Kernel, mut deph: Option<&mut Dephasing2>) -> f64 {
    let n = lv.n;
    let st0 = stage2(s, lv, kernel, deph.as_deref(), n, Side::Right);
    if let Some(x) = deph.as_deref_mut() {
        x.step(s, lv, n);
    }
    let st1 = stage2(s, lv, kernel, deph.as_deref(), n + 1, Side::Left);
    let (h, e1) = (s.h, s.e1);
    let heun = |y: C64, r0: C64, r1: C64| e1 * y + 0.5 * h * (e1 * r0 + r1);
    lv.d[n + 1] = heun(lv.d[n], st0.dd, st1.dd);
    let kn = lv.k.get(n);
    let row: Vec<C64> = (0..s.m()).map(|i| heun(kn[i], st0.dk[i], st1.dk[i])).collect();
    let p1 = pop2(s, lv.d[n + 1], &row);
    if let Some(x) = deph {
        let p0 = pop2(s, lv.d[n], kn);
        let src0 = x.source(s, &st0, lv.d[n], kn, s.ft(n, Side::Right), p0);
        let src1 = x.source(s, &st1, lv.d[n + 1], &row, s.ft(n + 1, Side::Left), p1);
        x.delta = s.e2 * x.delta + 0.5 * h * (s.e2 * src0 + src1);
    }
    lv.k.push(&row);
    lv.n += 1;
    p1
}

pub(crate) fn run(
    params: &SystemParams,
    env: &Envelope,
    grid: &TimeGrid,
    opts: &Options,
    dephasing_form: bool,
    n_photons: usize,
) -> Result<Vec<f64>> {
    let s = Setup::new(params, env, grid);
    if n_photons == 3 {
        return Ok(three::run(&s, opts));
    }
    if n_photons == 1 {
        return Ok(run1(&s, dephasing_form));
    }
    let mut lv = Levels::new(&s, false);
    let mut pop = vec![0.0; grid.n_steps + 1];
    if !dephasing_form {
        for n in 0..grid.n_steps {
            lv.step1(&s);
            pop[n + 1] = step2(&s, &mut lv, opts.kernel, None);
        }
        return Ok(pop);
    }
    // The remainder's source cancels only on the exact solution, so at γ = 0
    // it still picks up an O(h²) residue. The same integration at γ = 0 runs
    // alongside and its remainder is subtracted: the scheme keeps its order
    // and reduces to the coherent path exactly when γ = 0.
    let s0 = Setup::new(&SystemParams { gamma_pd: 0.0, ..*params }, env, grid);
    let mut lv0 = Levels::new(&s0, false);
    let mut x = Dephasing2::new(s.m());
    let mut x0 = Dephasing2::new(s0.m());
    for n in 0..grid.n_steps {
        lv.step1(&s);
        let p = step2(&s, &mut lv, opts.kernel, Some(&mut x));
        lv0.step1(&s0);
        step2(&s0, &mut lv0, opts.kernel, Some(&mut x0));
        pop[n + 1] = p + (x.delta - x0.delta);
    }
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseSpec;

    fn rect() -> Envelope {
        Envelope::new(PulseSpec::rectangular(0.0, 2.0).unwrap())
    }

    #[test]
    fn jumps_skip_left_node_at_start() {
        let grid = TimeGrid::build(0.1, 2.0, 1.0).unwrap();
        let s = Setup::new(&SystemParams::pulsed(2, 1.0, 0.0), &rect(), &grid);
        // label τ/2 is split; only its right node jumps at t = 0
        let j0 = s.jumps(0);
        assert_eq!(j0.len(), 2);
        assert_eq!(s.jumps(3).len(), 2);
    }

    #[test]
    fn a_matches_vacuum_solution() {
        let grid = TimeGrid::build(0.01, 6.0, 2.0).unwrap();
        let p = SystemParams::pulsed(1, 2.0, 0.0);
        let s = Setup::new(&p, &rect(), &grid);
        let mut lv = Levels::new(&s, false);
        for _ in 0..grid.n_steps {
            lv.step1(&s);
            lv.n += 1;
        }
        let pv = super::super::vacuum::run(&SystemParams::excited(2.0, 0.0), &grid, false);
        for n in 0..=grid.n_steps {
            assert!((lv.a[n].norm_sqr() - pv[n]).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_kernel_matches_factored() {
        let grid = TimeGrid::build(0.05, 6.0, 1.0).unwrap();
        let p = SystemParams::pulsed(2, 1.0, 0.3);
        let mut o = Options::default();
        let f = run(&p, &rect(), &grid, &o, false, 2).unwrap();
        o.kernel = Kernel::Dense;
        let d = run(&p, &rect(), &grid, &o, false, 2).unwrap();
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_form_is_exact_at_zero_rate() {
        let grid = TimeGrid::build(0.05, 5.0, 1.0).unwrap();
        let o = Options::default();
        for n in 1..=2 {
            let p = SystemParams::pulsed(n, 1.0, 0.0);
            let a = run(&p, &rect(), &grid, &o, false, n).unwrap();
            let b = run(&p, &rect(), &grid, &o, true, n).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shadow_subtraction_keeps_second_order() {
        // differences between successive halvings shrink by about four
        let p = SystemParams::pulsed(2, 1.0, 0.0).with_dephasing(0.5);
        let o = Options::default();
        let at = |dt: f64| {
            let grid = TimeGrid::build(dt, 3.0, 1.0).unwrap();
            *run(&p, &rect(), &grid, &o, true, 2).unwrap().last().unwrap()
        };
        let (a, b, c) = (at(0.1), at(0.05), at(0.025));
        let ratio = (a - b) / (b - c);
        assert!((3.0..5.5).contains(&ratio), "{ratio}");
    }
}
