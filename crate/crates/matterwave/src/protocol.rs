//! The interferometric protocol driver: split pulse, trap flight to a
//! detected re-collision, recombination pulse, separation flight, channel
//! readout. Also the analytic Fock-mixture oracle for the channel
//! populations and the parameter sweeps built on the same stages.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ProtocolConfig, Solver};
use crate::error::{Error, Result, StageExt};
use crate::grid::Grid1D;
use crate::observables::{
    channel_populations_gp, channel_populations_mb2, density_gp, density_mb2,
    detect_recollision, frag_from_visibility, split_completeness, visibility,
    ChannelPopulations, MeasureMode, RECOLLISION_HALF_WINDOW,
};
use crate::prop::{gp_propagate_observed, mb2_propagate_observed, Trajectory};
use crate::pulses::{apply_pulse_gp, apply_pulse_mb, pulse_channel_algebra, Pulse};
use crate::states::{mb2_from_gp, sech_soliton, GPState, MB2State, Potential, SystemParams};

/// Post-pulse flight time after which the split is judged complete or not.
pub const SPLIT_PROBE_TIME: f64 = 2.0;
/// Side-cloud mass fraction counted as a complete split.
pub const SPLIT_COMPLETE_THRESHOLD: f64 = 0.99;

/// Extra snapshot strides captured on both sides of the re-collision search
/// window, so recombination can also be applied at band edges.
const CAPTURE_SLACK: f64 = 2.0;

/// Everything the protocol reports about one full run. Fractions are of the
/// total particle number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub solver: Solver,
    pub recollision_index: usize,
    /// Detected re-collision time the recombination pulse was applied at.
    pub t_recollision: f64,
    /// Natural occupations at the re-collision; absent for mean-field runs.
    pub natural_occupations_rc: Option<[f64; 2]>,
    /// Channel populations `[-2k, 0, +2k]` from position windows after the
    /// separation flight.
    pub channels: [f64; 3],
    /// Channel populations from momentum bins taken at the pulse instant.
    pub channels_momentum: [f64; 3],
    pub visibility: f64,
    /// Fragmentation inferred from the visibility, `1 - (3/2) nu`.
    pub frag_interferometric: f64,
    /// `|frag_interferometric - n2/N|`; absent for mean-field runs.
    pub frag_discrepancy: Option<f64>,
    pub files: Option<OutputFiles>,
}

/// File names of the persisted artifacts, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub observables_csv: String,
    pub density_bin: String,
    pub density_meta: String,
    pub report_json: String,
}

impl ProtocolReport {
    pub fn validate(&self) -> Result<()> {
        fn frac(name: &str, x: f64) -> Result<()> {
            if !(-1e-9..=1.0 + 1e-9).contains(&x) {
                return Err(Error::Config(format!(
                    "report field {name} = {x} is outside [0, 1]"
                )));
            }
            Ok(())
        }
        if !self.t_recollision.is_finite() || self.t_recollision <= 0.0 {
            return Err(Error::Config(format!(
                "re-collision time {} is not a positive time",
                self.t_recollision
            )));
        }
        for (i, &c) in self.channels.iter().enumerate() {
            frac(&format!("channels[{i}]"), c)?;
        }
        for (i, &c) in self.channels_momentum.iter().enumerate() {
            frac(&format!("channels_momentum[{i}]"), c)?;
        }
        frac("visibility", self.visibility)?;
        frac("frag_interferometric", self.frag_interferometric)?;
        if let Some(occ) = self.natural_occupations_rc {
            frac("natural_occupations_rc[0]", occ[0])?;
            frac("natural_occupations_rc[1]", occ[1])?;
        }
        if let Some(d) = self.frag_discrepancy {
            frac("frag_discrepancy", d)?;
        }
        Ok(())
    }
}

/// Channel populations and visibility of the ideal two-mode mixture
/// `|n1, n2>` over ungerade/gerade orbitals, recombined with phase `chi2`.
/// Each mode contributes its double-pulse weights independently: the
/// ungerade mode carries an internal pi phase, the gerade mode carries none.
pub fn fock_channel_oracle(
    n1: usize,
    n2: usize,
    n_total: usize,
    chi2: f64,
) -> Result<([f64; 3], f64)> {
    if n1 + n2 != n_total || n_total == 0 {
        return Err(Error::OccupationMismatch {
            n1,
            n2,
            n: n_total,
        });
    }
    let wu = pulse_channel_algebra(PI, chi2);
    let wg = pulse_channel_algebra(0.0, chi2);
    let f1 = n1 as f64 / n_total as f64;
    let f2 = n2 as f64 / n_total as f64;
    let w = [
        f1 * wu[0] + f2 * wg[0],
        f1 * wu[1] + f2 * wg[1],
        f1 * wu[2] + f2 * wg[2],
    ];
    Ok((w, w[1]))
}

/// State under either solver; the protocol stages are solver-agnostic.
#[derive(Debug, Clone)]
enum SolverState {
    Gp(GPState),
    Mb2(MB2State),
}

impl SolverState {
    fn density(&self, grid: &Grid1D) -> Vec<f64> {
        match self {
            SolverState::Gp(s) => density_gp(s),
            SolverState::Mb2(s) => density_mb2(s, grid),
        }
    }

    fn apply_pulse(&self, pulse: &Pulse, grid: &Grid1D) -> Result<SolverState> {
        match self {
            SolverState::Gp(s) => Ok(SolverState::Gp(apply_pulse_gp(s, pulse, grid))),
            SolverState::Mb2(s) => Ok(SolverState::Mb2(apply_pulse_mb(s, pulse, grid)?)),
        }
    }

    fn channels(
        &self,
        k: f64,
        mode: MeasureMode,
        gamma: f64,
        grid: &Grid1D,
    ) -> Result<ChannelPopulations> {
        match self {
            SolverState::Gp(s) => channel_populations_gp(s, k, mode, gamma, grid),
            SolverState::Mb2(s) => channel_populations_mb2(s, k, mode, gamma, grid),
        }
    }
}

/// Propagates to `t_end`, cloning the state at every snapshot time for which
/// `want` returns true.
fn fly_captured(
    start: &SolverState,
    params: &SystemParams,
    potential: &Potential,
    grid: &Grid1D,
    cfg: &ProtocolConfig,
    t_end: f64,
    mut want: impl FnMut(f64) -> bool,
) -> Result<(SolverState, Trajectory, Vec<(f64, SolverState)>)> {
    let prop = cfg.propagator(t_end);
    let mut captured: Vec<(f64, SolverState)> = Vec::new();
    match start {
        SolverState::Gp(s) => {
            let (end, traj) = gp_propagate_observed(s, potential, params, &prop, grid, |st| {
                if want(st.time) {
                    captured.push((st.time, SolverState::Gp(st.clone())));
                }
            })?;
            Ok((SolverState::Gp(end), traj, captured))
        }
        SolverState::Mb2(s) => {
            let (end, traj) = mb2_propagate_observed(s, potential, params, &prop, grid, |st| {
                if want(st.time) {
                    captured.push((st.time, SolverState::Mb2(st.clone())));
                }
            })?;
            Ok((SolverState::Mb2(end), traj, captured))
        }
    }
}

/// Soliton plus split pulse at t = 0.
fn initial_split_state(
    cfg: &ProtocolConfig,
    pulse1: &Pulse,
    params: &SystemParams,
    grid: &Grid1D,
) -> Result<SolverState> {
    let soliton = sech_soliton(params.gamma, grid).stage("initial-state")?;
    match cfg.solver {
        Solver::Gp => Ok(SolverState::Gp(apply_pulse_gp(&soliton, pulse1, grid))),
        Solver::Mb2 => {
            let mb = mb2_from_gp(&soliton, params, None, grid).stage("initial-state")?;
            Ok(SolverState::Mb2(
                apply_pulse_mb(&mb, pulse1, grid).stage("split-pulse")?,
            ))
        }
    }
}

/// One detected re-collision of a flight.
#[derive(Debug, Clone, PartialEq)]
pub struct RecollisionInfo {
    pub j: usize,
    pub time: f64,
    /// Natural occupation fractions at the re-collision snapshot.
    pub occupations: [f64; 2],
    /// Core-averaged trap-center density, maximal over the detection window.
    pub central_density: f64,
}

/// Stages one and two of the protocol: the split state flown in the trap,
/// with states captured around every requested re-collision so that
/// recombination can be replayed from them without re-propagating.
pub struct SplitFlight {
    cfg: ProtocolConfig,
    params: SystemParams,
    potential: Potential,
    grid: Grid1D,
    pub trajectory: Trajectory,
    pub recollisions: Vec<RecollisionInfo>,
    captured: Vec<(f64, SolverState)>,
}

/// Measurement taken after recombination: positions are read out after the
/// separation flight, momenta at the pulse instant (in the trap, momentum
/// channels rotate during flight, so they are binned before it). The
/// visibility is raw channel data; converting it to a fragmentation is left
/// to callers because the inversion only applies inside the two-mode model
/// (off-optimum sweep points may leak slightly past nu = 2/3).
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub channels: [f64; 3],
    pub channels_momentum: [f64; 3],
    pub visibility: f64,
}

pub fn split_flight(
    cfg: &ProtocolConfig,
    j_set: &[usize],
    t_end: Option<f64>,
) -> Result<SplitFlight> {
    cfg.validate()?;
    let params = cfg.system_params().stage("initial-state")?;
    let grid = cfg.build_grid().stage("initial-state")?;
    let potential = cfg.potential();
    let stride = cfg.propagator(0.0).snapshot_stride;

    if j_set.iter().any(|&j| j == 0) {
        return Err(Error::InvalidParameter(
            "re-collision indices are 1-based".into(),
        ));
    }
    let omega = params.omega();
    if !j_set.is_empty() && !(omega > 0.0) {
        return Err(Error::Config(
            "re-collisions need a trap; set system.trap_a > 0".into(),
        ));
    }
    let centers: Vec<f64> = j_set.iter().map(|&j| j as f64 * PI / omega).collect();
    let capture_half = RECOLLISION_HALF_WINDOW + CAPTURE_SLACK * stride;
    let needed = centers.iter().fold(0.0_f64, |a, &c| a.max(c)) + capture_half;
    let t_fly = match t_end {
        Some(t) => {
            if !j_set.is_empty() && t + 1e-9 < needed {
                return Err(Error::InvalidParameter(format!(
                    "end time {t} does not cover the last re-collision window (needs {needed:.3})"
                )));
            }
            t
        }
        None => {
            if j_set.is_empty() {
                return Err(Error::InvalidParameter(
                    "need either re-collision indices or an explicit end time".into(),
                ));
            }
            needed
        }
    };

    let pulse1 = cfg.pulse1().stage("split-pulse")?;
    let start = initial_split_state(cfg, &pulse1, &params, &grid)?;

    let want = |t: f64| {
        centers
            .iter()
            .any(|&c| (t - c).abs() <= capture_half + 1e-9)
    };
    let (_, trajectory, captured) =
        fly_captured(&start, &params, &potential, &grid, cfg, t_fly, want)
            .stage("trap-flight")?;

    let mut recollisions = Vec::with_capacity(j_set.len());
    for &j in j_set {
        let rc = detect_recollision(&trajectory, j, omega).stage("recollision-detection")?;
        let snap = &trajectory.snapshots[rc.index];
        log::debug!(
            "re-collision {} detected at t = {:.4} (central density {:.4})",
            j,
            rc.time,
            rc.central_density
        );
        recollisions.push(RecollisionInfo {
            j,
            time: rc.time,
            occupations: snap.occupations,
            central_density: rc.central_density,
        });
    }

    Ok(SplitFlight {
        cfg: cfg.clone(),
        params,
        potential,
        grid,
        trajectory,
        recollisions,
        captured,
    })
}

impl SplitFlight {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn recollision(&self, j: usize) -> Result<&RecollisionInfo> {
        self.recollisions
            .iter()
            .find(|r| r.j == j)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("re-collision {j} was not requested in this flight"))
            })
    }

    /// Captured snapshot times within `window` (full width) of the detected
    /// re-collision `j`, ascending.
    pub fn band_times(&self, j: usize, window: f64) -> Result<Vec<f64>> {
        if !(window >= 0.0) || window > 2.0 * RECOLLISION_HALF_WINDOW {
            return Err(Error::InvalidParameter(format!(
                "re-collision window must be in [0, {}], got {window}",
                2.0 * RECOLLISION_HALF_WINDOW
            )));
        }
        let rc = self.recollision(j)?;
        let mut times: Vec<f64> = self
            .captured
            .iter()
            .map(|(t, _)| *t)
            .filter(|t| (t - rc.time).abs() <= 0.5 * window + 1e-9)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
        Ok(times)
    }

    /// Natural occupations at a snapshot time of the flight.
    pub fn occupations_at(&self, t: f64) -> Option<[f64; 2]> {
        self.trajectory
            .snapshots
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-9)
            .map(|s| s.occupations)
    }

    /// Stage three replayed from the captured state at `t_rc`: recombination
    /// pulse with phase `chi2` (`None` skips the pulse), separation flight of
    /// `t_sep`, channel readout. Returns the measurement and the trajectory
    /// of the separation flight.
    pub fn measure_at(
        &self,
        t_rc: f64,
        chi2: Option<f64>,
        t_sep: f64,
    ) -> Result<(Measurement, Trajectory)> {
        if !(t_sep > 0.0) {
            return Err(Error::Config(format!(
                "separation time must be positive, got {t_sep}"
            )));
        }
        let (_, state) = self
            .captured
            .iter()
            .find(|(t, _)| (t - t_rc).abs() <= 1e-9)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no captured state at t = {t_rc}; states are kept only near requested re-collisions"
                ))
            })?;

        let (recombined, k_channels) = match chi2 {
            Some(chi) => {
                let pulse =
                    Pulse::splitter(self.cfg.pulse2_momentum(), chi).stage("recombination-pulse")?;
                (
                    state.apply_pulse(&pulse, &self.grid).stage("recombination-pulse")?,
                    pulse.k,
                )
            }
            None => (state.clone(), self.cfg.pulse1.k),
        };

        let momentum = recombined
            .channels(k_channels, MeasureMode::MomentumBins, self.params.gamma, &self.grid)
            .stage("channel-measurement")?;

        let (end, tail, _) = fly_captured(
            &recombined,
            &self.params,
            &self.potential,
            &self.grid,
            &self.cfg,
            t_rc + t_sep,
            |_| false,
        )
        .stage("separation-flight")?;

        let position = end
            .channels(k_channels, MeasureMode::PositionWindows, self.params.gamma, &self.grid)
            .stage("channel-measurement")?;

        Ok((
            Measurement {
                channels: position.as_array(),
                channels_momentum: momentum.as_array(),
                visibility: visibility(&position),
            },
            tail,
        ))
    }
}

/// The full three-stage run: split, fly to the configured re-collision,
/// recombine, separate, measure. Returns the report and the stitched
/// trajectory (trap flight up to the re-collision, then the separation
/// flight).
pub fn run_full_protocol(cfg: &ProtocolConfig) -> Result<(ProtocolReport, Trajectory)> {
    let j = cfg.recollision.j;
    let flight = split_flight(cfg, &[j], None)?;
    let rc = flight.recollision(j)?.clone();

    let chi2 = cfg.pulse2.enabled.then_some(cfg.pulse2.chi);
    let (m, tail) = flight.measure_at(rc.time, chi2, cfg.t_sep)?;
    let frag = frag_from_visibility(m.visibility).stage("channel-measurement")?;

    let mut trajectory = flight.trajectory.clone();
    trajectory.truncate_after(rc.time);
    trajectory.extend(tail);

    let (natural_occupations_rc, frag_discrepancy) = match cfg.solver {
        Solver::Mb2 => (
            Some(rc.occupations),
            Some((frag - rc.occupations[1]).abs()),
        ),
        Solver::Gp => (None, None),
    };

    let report = ProtocolReport {
        solver: cfg.solver,
        recollision_index: j,
        t_recollision: rc.time,
        natural_occupations_rc,
        channels: m.channels,
        channels_momentum: m.channels_momentum,
        visibility: m.visibility,
        frag_interferometric: frag,
        frag_discrepancy,
        files: None,
    };
    report.validate()?;
    Ok((report, trajectory))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScanRow {
    pub k: f64,
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScan {
    pub rows: Vec<SplitScanRow>,
    /// Interpolated momentum where completeness crosses the threshold, if it
    /// does within the scanned range.
    pub crossing: Option<f64>,
}

/// One stage-1 run per momentum: split pulse, flight to the probe time, side
/// mass fraction.
pub fn scan_split_momentum(cfg: &ProtocolConfig, k_grid: &[f64]) -> Result<SplitScan> {
    cfg.validate()?;
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("momentum grid is empty".into()));
    }
    if k_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "momentum grid must be strictly ascending".into(),
        ));
    }
    let params = cfg.system_params().stage("initial-state")?;
    let grid = cfg.build_grid().stage("initial-state")?;
    let potential = cfg.potential();

    let rows: Vec<SplitScanRow> = k_grid
        .par_iter()
        .map(|&k| -> Result<SplitScanRow> {
            grid.pulse_headroom(k, params.gamma).stage("split-pulse")?;
            let pulse = Pulse::splitter(k, cfg.pulse1.chi).stage("split-pulse")?;
            let start = initial_split_state(cfg, &pulse, &params, &grid)?;
            let (end, _, _) = fly_captured(
                &start,
                &params,
                &potential,
                &grid,
                cfg,
                SPLIT_PROBE_TIME,
                |_| false,
            )
            .stage("trap-flight")?;
            let completeness = split_completeness(&end.density(&grid), params.gamma, &grid)
                .stage("channel-measurement")?;
            Ok(SplitScanRow { k, completeness })
        })
        .collect::<Result<Vec<_>>>()?;

    let crossing = threshold_crossing(&rows, SPLIT_COMPLETE_THRESHOLD);
    Ok(SplitScan { rows, crossing })
}

/// First below-to-above crossing, linearly interpolated. None when the grid
/// never brackets the threshold (all rows above means the crossing lies below
/// the scanned range, not at its first point).
fn threshold_crossing(rows: &[SplitScanRow], threshold: f64) -> Option<f64> {
    for w in rows.windows(2) {
        if w[0].completeness < threshold && w[1].completeness >= threshold {
            let f = (threshold - w[0].completeness) / (w[1].completeness - w[0].completeness);
            return Some(w[0].k + f * (w[1].k - w[0].k));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecombineSweepRow {
    pub chi2: f64,
    pub j: usize,
    pub t_rc: f64,
    pub nu: f64,
}

/// Replays recombination and readout for every combination of phase,
/// re-collision index and captured time within the timing band. The split
/// and trap flight are computed once; the replay jobs run in parallel and
/// the rows come back sorted by `(chi2, j, t_rc)`.
pub fn sweep_recombine_phase(
    cfg: &ProtocolConfig,
    chi2_grid: &[f64],
    j_set: &[usize],
    window: f64,
) -> Result<Vec<RecombineSweepRow>> {
    if chi2_grid.is_empty() || j_set.is_empty() {
        return Err(Error::InvalidParameter(
            "phase grid and re-collision set must be non-empty".into(),
        ));
    }
    let flight = split_flight(cfg, j_set, None)?;

    let mut jobs: Vec<(f64, usize, f64)> = Vec::new();
    for &j in j_set {
        for t in flight.band_times(j, window)? {
            for &chi2 in chi2_grid {
                jobs.push((chi2, j, t));
            }
        }
    }

    let mut rows: Vec<RecombineSweepRow> = jobs
        .par_iter()
        .map(|&(chi2, j, t_rc)| {
            flight
                .measure_at(t_rc, Some(chi2), cfg.t_sep)
                .map(|(m, _)| RecombineSweepRow {
                    chi2,
                    j,
                    t_rc,
                    nu: m.visibility,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.chi2
            .total_cmp(&b.chi2)
            .then(a.j.cmp(&b.j))
            .then(a.t_rc.total_cmp(&b.t_rc))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPhaseCurve {
    pub chi1: f64,
    pub times: Vec<f64>,
    pub n2_frac: Vec<f64>,
}

/// Fragmentation growth n2(t) for each split phase; one stage-1+2 run per
/// phase, in parallel.
pub fn sweep_split_phase(
    cfg: &ProtocolConfig,
    chi1_set: &[f64],
    t_end: f64,
) -> Result<Vec<SplitPhaseCurve>> {
    if cfg.solver != Solver::Mb2 {
        return Err(Error::Config(
            "the split-phase sweep tracks fragmentation growth; it needs solver = \"mb2\"".into(),
        ));
    }
    if chi1_set.is_empty() {
        return Err(Error::InvalidParameter("phase set is empty".into()));
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "end time must be positive, got {t_end}"
        )));
    }
    chi1_set
        .par_iter()
        .map(|&chi1| {
            let mut varied = cfg.clone();
            varied.pulse1.chi = chi1;
            let flight = split_flight(&varied, &[], Some(t_end))?;
            let times = flight.trajectory.snapshots.iter().map(|s| s.time).collect();
            let n2_frac = flight
                .trajectory
                .snapshots
                .iter()
                .map(|s| s.occupations[1])
                .collect();
            Ok(SplitPhaseCurve {
                chi1,
                times,
                n2_frac,
            })
        })
        .collect()
}
