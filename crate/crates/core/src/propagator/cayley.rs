use num_complex::Complex64;

/// Channels advanced together in the interleaved sweep; their serial
/// recurrences are independent, so interleaving hides the chain latency.
pub const LANES: usize = 4;

/// Unitary rational half-step for one channel Hamiltonian:
/// ψ ← (1 − i·H·dt/4)(1 + i·H·dt/4)⁻¹ψ, two of which bracket each full
/// step. Factors store the Thomas elimination of (1 + i·H·dt/4).
///
/// The matrix is diagonally dominant for every potential and step size
/// used here (|1 + i·s·h_k| exceeds 2|s·o| because the stencil diagonal
/// dominates the potential well depth), so elimination needs no pivoting,
/// and the factorization of a leading sub-block is a prefix of the full
/// factorization. That is what allows the radial active region to grow
/// without refactorizing.
#[derive(Debug, Clone)]
pub struct ChannelFactors {
    /// s·h_k, s = dt/4
    pub a: Vec<f64>,
    /// forward-elimination multipliers c'_k
    pub cp: Vec<Complex64>,
    /// reciprocal pivots 1/denom_k
    pub inv: Vec<Complex64>,
}

/// Factors for every channel at one step size.
#[derive(Debug, Clone)]
pub struct CayleyFactors {
    pub dt_bits: u64,
    /// s·o, the scaled off-diagonal (o = −1/(2δr²))
    pub so: f64,
    pub per_channel: Vec<ChannelFactors>,
}

impl CayleyFactors {
    /// `h_diag[ℓ][k]` is the channel Hamiltonian diagonal, `h_off` its
    /// constant off-diagonal.
    pub fn build(h_diag: &[Vec<f64>], h_off: f64, dt: f64) -> Self {
        let s = 0.25 * dt;
        let so = s * h_off;
        let off = Complex64::new(0.0, so);
        let per_channel = h_diag
            .iter()
            .map(|h| {
                let n = h.len();
                let a: Vec<f64> = h.iter().map(|&x| s * x).collect();
                let mut cp = Vec::with_capacity(n);
                let mut inv = Vec::with_capacity(n);
                let mut prev_cp = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let d = Complex64::new(1.0, a[k]);
                    let denom = if k == 0 { d } else { d - off * prev_cp };
                    let r = denom.inv();
                    prev_cp = off * r;
                    inv.push(r);
                    cp.push(prev_cp);
                }
                ChannelFactors { a, cp, inv }
            })
            .collect();
        Self { dt_bits: dt.to_bits(), so, per_channel }
    }

    /// Half-step the first `m` channels of a channel-major array (`n`
    /// points each) on their first `m_pts` points. Channels are swept in
    /// groups of LANES; element-for-element the arithmetic is identical
    /// to per-channel [`Self::half_step`] calls, only the interleaving
    /// differs, so the results match bitwise.
    pub fn half_step_all(
        &self,
        data: &mut [Complex64],
        n: usize,
        m: usize,
        m_pts: usize,
        scratch: &mut [Complex64],
    ) {
        let mut chans: Vec<&mut [Complex64]> = data.chunks_exact_mut(n).take(m).collect();
        let mut groups = chans.chunks_exact_mut(LANES);
        for (g, group) in groups.by_ref().enumerate() {
            self.half_step_group(group, g * LANES, m_pts, scratch);
        }
        let rest = groups.into_remainder();
        let l0 = (m / LANES) * LANES;
        for (i, ch) in rest.iter_mut().enumerate() {
            self.half_step(l0 + i, ch, m_pts, scratch);
        }
    }

    fn half_step_group(
        &self,
        chs: &mut [&mut [Complex64]],
        l0: usize,
        m_pts: usize,
        scratch: &mut [Complex64],
    ) {
        let so = self.so;
        let fa: [&[f64]; LANES] =
            std::array::from_fn(|c| &self.per_channel[l0 + c].a[..m_pts]);
        let finv: [&[Complex64]; LANES] =
            std::array::from_fn(|c| &self.per_channel[l0 + c].inv[..m_pts]);
        let fcp: [&[Complex64]; LANES] =
            std::array::from_fn(|c| &self.per_channel[l0 + c].cp[..m_pts]);
        let z = &mut scratch[..LANES * m_pts];

        // fused matvec + forward sweep; k = 0 peeled so the prev term is
        // absent there exactly as in the single-channel path
        let mut prev = [Complex64::new(0.0, 0.0); LANES];
        for c in 0..LANES {
            let ch = &*chs[c];
            let (mut sr, mut si) = (0.0, 0.0);
            if 1 < m_pts {
                sr += ch[1].re;
                si += ch[1].im;
            }
            let hr = fa[c][0] * ch[0].re + so * sr;
            let hi = fa[c][0] * ch[0].im + so * si;
            let y = Complex64::new(ch[0].re + hi, ch[0].im - hr);
            prev[c] = y * finv[c][0];
            z[c * m_pts] = prev[c];
        }
        for k in 1..m_pts {
            for c in 0..LANES {
                let ch = &*chs[c];
                let (mut sr, mut si) = (ch[k - 1].re, ch[k - 1].im);
                if k + 1 < m_pts {
                    sr += ch[k + 1].re;
                    si += ch[k + 1].im;
                }
                let hr = fa[c][k] * ch[k].re + so * sr;
                let hi = fa[c][k] * ch[k].im + so * si;
                let y = Complex64::new(ch[k].re + hi, ch[k].im - hr);
                let t = Complex64::new(y.re + so * prev[c].im, y.im - so * prev[c].re);
                prev[c] = t * finv[c][k];
                z[c * m_pts + k] = prev[c];
            }
        }

        for c in 0..LANES {
            chs[c][m_pts - 1] = z[c * m_pts + m_pts - 1];
        }
        for k in (0..m_pts - 1).rev() {
            for c in 0..LANES {
                chs[c][k] = z[c * m_pts + k] - fcp[c][k] * chs[c][k + 1];
            }
        }
    }

    /// Apply the half-step to the first `m` points of one channel,
    /// treating the point at index m as zero. `scratch` must hold at
    /// least m entries.
    pub fn half_step(&self, ell: usize, psi: &mut [Complex64], m: usize, scratch: &mut [Complex64]) {
        let f = &self.per_channel[ell];
        let so = self.so;
        let a = &f.a[..m];
        let y = &mut scratch[..m];

        // y = (1 − i·s·H)ψ
        for k in 0..m {
            let (mut sr, mut si) = (0.0, 0.0);
            if k > 0 {
                sr += psi[k - 1].re;
                si += psi[k - 1].im;
            }
            if k + 1 < m {
                sr += psi[k + 1].re;
                si += psi[k + 1].im;
            }
            let hr = a[k] * psi[k].re + so * sr;
            let hi = a[k] * psi[k].im + so * si;
            y[k] = Complex64::new(psi[k].re + hi, psi[k].im - hr);
        }

        // forward sweep: z_k = (y_k − i·so·z_{k−1})·inv_k, stored in y
        let mut prev = y[0] * f.inv[0];
        y[0] = prev;
        for k in 1..m {
            let t = Complex64::new(y[k].re + so * prev.im, y[k].im - so * prev.re);
            prev = t * f.inv[k];
            y[k] = prev;
        }

        // back substitution into ψ
        psi[m - 1] = y[m - 1];
        for k in (0..m - 1).rev() {
            psi[k] = y[k] - f.cp[k] * psi[k + 1];
        }
    }
}
