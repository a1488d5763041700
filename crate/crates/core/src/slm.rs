//! Social locomotion field: orientation-sensitive, asymmetric discomfort
//! field of one or more standing humans.
//!
//! The pairwise field between the moving agent and a person is the product of
//! two individual influence terms divided by squared distance, capped and
//! clamped to `[0, 1]`. Each individual term combines a heading-relevant
//! component (HRSC, grows when that party faces the other), a
//! heading-irrelevant baseline (HISC), and a body-ellipse collision-avoidance
//! cross-section (CAC). All constants are fitted values taken as given; see
//! [`SlmParams`].
//!
//! Everything here is a pure function of its inputs and safe to call
//! concurrently with shared parameters.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{normalize_angle, Scalar};

/// Planar position plus facing direction. Heading is radians in `(-pi, pi]`,
/// counter-clockwise from the +x axis; the constructor normalizes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub heading: T,
}

impl<T: Scalar> Pose<T> {
    pub fn new(x: T, y: T, heading: T) -> Self {
        Pose { x, y, heading: normalize_angle(heading) }
    }

    /// Replaces the heading, keeping it normalized.
    pub fn with_heading(self, heading: T) -> Self {
        Pose { heading: normalize_angle(heading), ..self }
    }

    pub fn distance_to(&self, other: &Pose<T>) -> T {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }

    /// Direction of the vector from `self` to `other`.
    pub fn angle_to(&self, other: &Pose<T>) -> T {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// Fitted field constants plus per-component ablation switches.
///
/// Disabling a component zeroes its coefficient: `enable_hrsc = false`
/// treats both `m` values as 0, `enable_hisc = false` both `n` values,
/// `enable_cac = false` the `c` ratio.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SlmParams<T> {
    /// HRSC weight of the moving agent.
    pub m_agent: T,
    /// HISC baseline of the moving agent.
    pub n_agent: T,
    /// HRSC weight of a standing person.
    pub m_person: T,
    /// HISC baseline of a standing person.
    pub n_person: T,
    /// Body-ellipse semi-axis along the shoulder line, meters.
    pub a: T,
    /// Body-ellipse semi-axis along the facing direction, meters.
    pub b: T,
    /// Relative weight of the collision-avoidance cross-section.
    pub c: T,
    /// Cap applied to the raw pairwise field before clamping to 1.
    pub k_cap: T,
    pub enable_hrsc: bool,
    pub enable_hisc: bool,
    pub enable_cac: bool,
}

impl<T: Scalar> Default for SlmParams<T> {
    fn default() -> Self {
        SlmParams {
            m_agent: T::cast(0.321),
            n_agent: T::cast(0.856),
            m_person: T::cast(0.438),
            n_person: T::cast(0.630),
            a: T::cast(0.285),
            b: T::cast(0.175),
            c: T::cast(1.430),
            k_cap: T::cast(10.180),
            enable_hrsc: true,
            enable_hisc: true,
            enable_cac: true,
        }
    }
}

impl<T: Scalar> SlmParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > T::zero() && self.b > T::zero() && self.k_cap > T::zero()) {
            return Err(Error::InvalidBounds(format!(
                "field params require a > 0, b > 0, k_cap > 0 (got a={}, b={}, k_cap={})",
                self.a, self.b, self.k_cap
            )));
        }
        Ok(())
    }

    pub fn without_hrsc(mut self) -> Self {
        self.enable_hrsc = false;
        self
    }

    pub fn without_hisc(mut self) -> Self {
        self.enable_hisc = false;
        self
    }

    pub fn without_cac(mut self) -> Self {
        self.enable_cac = false;
        self
    }

    fn m_agent_eff(&self) -> T {
        if self.enable_hrsc { self.m_agent } else { T::zero() }
    }

    fn m_person_eff(&self) -> T {
        if self.enable_hrsc { self.m_person } else { T::zero() }
    }

    fn n_agent_eff(&self) -> T {
        if self.enable_hisc { self.n_agent } else { T::zero() }
    }

    fn n_person_eff(&self) -> T {
        if self.enable_hisc { self.n_person } else { T::zero() }
    }

    fn c_eff(&self) -> T {
        if self.enable_cac { self.c } else { T::zero() }
    }
}

/// The field evaluated at one query pose against a set of persons.
#[derive(Debug, Clone)]
pub struct FieldSample<T> {
    pub query: Pose<T>,
    /// Clamped pairwise values, one per person, each in `[0, 1]`.
    pub per_person: Vec<T>,
    /// Sum of `per_person`.
    pub total: T,
}

/// Clamped non-negative cosine of the angle between a facing direction and
/// the connecting line; 1 when facing the other party, 0 from the rear half.
pub fn heading_factor<T: Scalar>(theta_h: T) -> T {
    let c = theta_h.cos();
    if c >= T::zero() { c } else { T::zero() }
}

/// Body-ellipse cross-section seen along the connecting line, meters.
/// `theta` is the angle between the connecting line and the ellipse long
/// axis; the result lies between the two semi-axes.
pub fn collision_avoidance<T: Scalar>(theta: T, params: &SlmParams<T>) -> T {
    let (a, b) = (params.a, params.b);
    let (s, c) = theta.sin_cos();
    a * b / (a * a * c * c + b * b * s * s).sqrt()
}

/// Influence of one party toward the other: HRSC + HISC + weighted CAC.
///
/// `line_to_other` is the direction from this party to the other one;
/// `body_long_axis` the direction of its shoulder line. Ablation switches in
/// `params` zero the corresponding coefficients.
pub fn individual_influence<T: Scalar>(
    entity_heading: T,
    line_to_other: T,
    body_long_axis: T,
    m: T,
    n: T,
    params: &SlmParams<T>,
) -> T {
    let m = if params.enable_hrsc { m } else { T::zero() };
    let n = if params.enable_hisc { n } else { T::zero() };
    let theta_h = entity_heading - line_to_other;
    let theta_ca = line_to_other - body_long_axis;
    m * heading_factor(theta_h) + n + params.c_eff() * collision_avoidance(theta_ca, params)
}

fn half_pi<T: Scalar>() -> T {
    T::FRAC_PI_2()
}

/// Clamped pairwise field between the agent and one person, in `[0, 1]`.
///
/// Each party contributes its own influence term evaluated against the line
/// toward the other party, with its own body ellipse (long axis perpendicular
/// to its heading). The product decays with squared distance, is divided by
/// the cap and clamped to 1.
pub fn pairwise_field<T: Scalar>(agent: &Pose<T>, person: &Pose<T>, params: &SlmParams<T>) -> Result<T> {
    let dx = person.x - agent.x;
    let dy = person.y - agent.y;
    let d2 = dx * dx + dy * dy;
    if d2 == T::zero() {
        return Err(Error::DegenerateDistance { person_index: None });
    }
    let line_ap = dy.atan2(dx);
    let line_pa = (-dy).atan2(-dx);
    let i_agent = individual_influence(
        agent.heading,
        line_ap,
        agent.heading + half_pi::<T>(),
        params.m_agent_eff(),
        params.n_agent_eff(),
        params,
    );
    let i_person = individual_influence(
        person.heading,
        line_pa,
        person.heading + half_pi::<T>(),
        params.m_person_eff(),
        params.n_person_eff(),
        params,
    );
    let raw = i_agent * i_person / d2;
    Ok((raw / params.k_cap).min(T::one()))
}

/// Field of a whole person set at one query pose; total is the plain sum of
/// the clamped pairwise values.
pub fn total_field<T: Scalar>(agent: &Pose<T>, persons: &[Pose<T>], params: &SlmParams<T>) -> Result<FieldSample<T>> {
    let mut per_person = Vec::with_capacity(persons.len());
    let mut total = T::zero();
    for (k, person) in persons.iter().enumerate() {
        let v = pairwise_field(agent, person, params)
            .map_err(|_| Error::DegenerateDistance { person_index: Some(k) })?;
        per_person.push(v);
        total = total + v;
    }
    Ok(FieldSample { query: *agent, per_person, total })
}

/// Heading given to the probe agent while rasterizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeHeading<T> {
    Fixed(T),
    /// Face the nearest person from each cell; intuitive for heatmaps since
    /// the field is strongest between mutually facing parties.
    TowardNearest,
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, y0: T, width: T, height: T) -> Self {
        Rect { x0, y0, width, height }
    }

    /// Square of side `side` centered on the origin.
    pub fn centered_square(side: T) -> Self {
        let half = side / T::cast(2.0);
        Rect { x0: -half, y0: -half, width: side, height: side }
    }
}

/// Row-major grid of field totals; row 0 spans the lowest y band.
#[derive(Debug, Clone)]
pub struct FieldGrid<T> {
    pub x0: T,
    pub y0: T,
    pub resolution: T,
    pub ncols: usize,
    pub nrows: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> FieldGrid<T> {
    pub fn at(&self, row: usize, col: usize) -> T {
        self.values[row * self.ncols + col]
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// Writes the grid as CSV: a `# x0,y0,resolution,ncols,nrows` header,
    /// then one line per grid row, 9 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# {:.8e},{:.8e},{:.8e},{},{}",
            self.x0.as_f64(),
            self.y0.as_f64(),
            self.resolution.as_f64(),
            self.ncols,
            self.nrows
        )?;
        for row in 0..self.nrows {
            let mut line = String::with_capacity(self.ncols * 16);
            for col in 0..self.ncols {
                if col > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:.8e}", self.at(row, col).as_f64()));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

fn cell_count(extent: f64, resolution: f64) -> usize {
    let ratio = extent / resolution;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-6 * rounded.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Samples `total_field` at every cell center of a regular grid.
///
/// Cells landing exactly on a person contribute the clamped maximum (1.0)
/// for that person instead of the undefined zero-distance value.
pub fn rasterize_field<T: Scalar>(
    persons: &[Pose<T>],
    probe_heading: ProbeHeading<T>,
    bounds: Rect<T>,
    resolution: T,
    params: &SlmParams<T>,
) -> Result<FieldGrid<T>> {
    if resolution <= T::zero() {
        return Err(Error::InvalidBounds(format!("resolution must be > 0, got {resolution}")));
    }
    if bounds.width <= T::zero() || bounds.height <= T::zero() {
        return Err(Error::InvalidBounds(format!(
            "zero-area bounds: width={}, height={}",
            bounds.width, bounds.height
        )));
    }
    params.validate()?;
    let ncols = cell_count(bounds.width.as_f64(), resolution.as_f64());
    let nrows = cell_count(bounds.height.as_f64(), resolution.as_f64());
    let half = T::cast(0.5);
    let mut values = Vec::with_capacity(nrows * ncols);
    for row in 0..nrows {
        let y = bounds.y0 + resolution * (T::cast(row as f64) + half);
        for col in 0..ncols {
            let x = bounds.x0 + resolution * (T::cast(col as f64) + half);
            let probe = Pose::new(x, y, T::zero());
            let heading = match probe_heading {
                ProbeHeading::Fixed(h) => h,
                ProbeHeading::TowardNearest => nearest_person(&probe, persons)
                    .map(|p| probe.angle_to(p))
                    .unwrap_or_else(T::zero),
            };
            let probe = probe.with_heading(heading);
            let mut total = T::zero();
            for person in persons {
                total = total
                    + match pairwise_field(&probe, person, params) {
                        Ok(v) => v,
                        Err(Error::DegenerateDistance { .. }) => T::one(),
                        Err(e) => return Err(e),
                    };
            }
            values.push(total);
        }
    }
    Ok(FieldGrid { x0: bounds.x0, y0: bounds.y0, resolution, ncols, nrows, values })
}

fn nearest_person<'a, T: Scalar>(probe: &Pose<T>, persons: &'a [Pose<T>]) -> Option<&'a Pose<T>> {
    let mut best: Option<(&Pose<T>, T)> = None;
    for p in persons {
        let d = probe.distance_to(p);
        if d == T::zero() {
            continue;
        }
        match best {
            Some((_, bd)) if bd <= d => {}
            _ => best = Some((p, d)),
        }
    }
    best.map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn defaults() -> SlmParams<f64> {
        SlmParams::default()
    }

    #[test]
    fn heading_factor_cases() {
        assert_eq!(heading_factor(0.0), 1.0);
        assert_eq!(heading_factor(PI), 0.0);
        assert!((heading_factor(FRAC_PI_3) - 0.5).abs() < 1e-12);
        // clamped on the whole rear half
        assert_eq!(heading_factor(FRAC_PI_2 + 0.3), 0.0);
        assert_eq!(heading_factor(-2.5), 0.0);
    }

    #[test]
    fn collision_avoidance_axis_values() {
        let p = defaults();
        assert!((collision_avoidance(0.0, &p) - 0.175).abs() < 1e-12);
        assert!((collision_avoidance(FRAC_PI_2, &p) - 0.285).abs() < 1e-12);
        assert!((collision_avoidance(FRAC_PI_4, &p) - 0.21090161835332147).abs() < 1e-12);
        // bounded by the semi-axes everywhere
        for i in 0..100 {
            let theta = -PI + 2.0 * PI * (i as f64) / 100.0;
            let v = collision_avoidance(theta, &p);
            assert!(v >= 0.175 - 1e-12 && v <= 0.285 + 1e-12);
        }
    }

    #[test]
    fn individual_influence_published_constants() {
        let p = defaults();
        // facing along the connecting line, long axis perpendicular to heading
        let v = individual_influence(0.0, 0.0, FRAC_PI_2, p.m_agent, p.n_agent, &p);
        assert!((v - 1.58455).abs() < 1e-12);
        // person params, theta_h = pi/2, ellipse angle pi/2
        let v = individual_influence(FRAC_PI_2, 0.0, FRAC_PI_2, p.m_person, p.n_person, &p);
        assert!((v - 1.03755).abs() < 1e-12);
        // facing directly away with HISC and CAC disabled: every term zero
        let p0 = defaults().without_hisc().without_cac();
        let v = individual_influence(PI, 0.0, FRAC_PI_2, p0.m_agent, p0.n_agent, &p0);
        assert_eq!(v, 0.0);
    }

    /// Mutually facing pair 1 m apart, long axes perpendicular to headings.
    fn facing_pair(d: f64) -> (Pose<f64>, Pose<f64>) {
        (Pose::new(0.0, 0.0, 0.0), Pose::new(d, 0.0, PI))
    }

    #[test]
    fn pairwise_field_frozen_values() {
        let p = defaults();
        // oracle-computed from the published constants:
        // I_agent = 1.58455, I_person = 1.47555, F(d=1) = 2.3380827525
        let (agent, person) = facing_pair(1.0);
        let v = pairwise_field(&agent, &person, &p).unwrap();
        assert!((v - 0.22967414071709238).abs() < 1e-12, "got {v}");
        // inverse-square scaling at d = 10
        let (agent, person) = facing_pair(10.0);
        let v10 = pairwise_field(&agent, &person, &p).unwrap();
        assert!((v10 - v / 100.0).abs() < 1e-12);
        // clamp engages at near-contact range
        let (agent, person) = facing_pair(0.05);
        assert_eq!(pairwise_field(&agent, &person, &p).unwrap(), 1.0);
    }

    #[test]
    fn pairwise_field_rejects_coincident_poses() {
        let p = defaults();
        let a = Pose::new(1.0, 2.0, 0.0);
        let b = Pose::new(1.0, 2.0, 1.0);
        assert!(matches!(
            pairwise_field(&a, &b, &p),
            Err(Error::DegenerateDistance { person_index: None })
        ));
    }

    #[test]
    fn total_field_sums_and_reports_offender() {
        let p = defaults();
        let agent = Pose::new(0.0, 0.0, 0.0);
        assert_eq!(total_field(&agent, &[], &p).unwrap().total, 0.0);

        let one = [Pose::new(1.0, 0.0, PI)];
        let s = total_field(&agent, &one, &p).unwrap();
        assert_eq!(s.total, s.per_person[0]);
        assert_eq!(s.total, pairwise_field(&agent, &one[0], &p).unwrap());

        let bad = [Pose::new(1.0, 0.0, PI), Pose::new(0.0, 0.0, 0.5)];
        assert!(matches!(
            total_field(&agent, &bad, &p),
            Err(Error::DegenerateDistance { person_index: Some(1) })
        ));
    }

    #[test]
    fn mirrored_persons_contribute_equally() {
        let p = defaults();
        // two persons mirror-symmetric about the x axis, mirrored headings
        let agent = Pose::new(0.0, 0.0, 0.0);
        let persons = [Pose::new(2.0, 1.5, -2.0), Pose::new(2.0, -1.5, 2.0)];
        let s = total_field(&agent, &persons, &p).unwrap();
        assert!((s.per_person[0] - s.per_person[1]).abs() < 1e-12);
    }

    #[test]
    fn ablation_switches_equal_zeroed_coefficients() {
        let agent = Pose::new(0.3, -0.2, 0.7);
        let person = Pose::new(1.9, 1.1, -2.4);
        let mut zeroed = defaults();
        zeroed.m_agent = 0.0;
        zeroed.m_person = 0.0;
        let switched = defaults().without_hrsc();
        let a = pairwise_field(&agent, &person, &zeroed).unwrap();
        let b = pairwise_field(&agent, &person, &switched).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rasterize_empty_is_all_zero_and_dimensions_exact() {
        let p = defaults();
        let grid =
            rasterize_field::<f64>(&[], ProbeHeading::Fixed(0.0), Rect::centered_square(15.0), 0.15, &p).unwrap();
        assert_eq!((grid.ncols, grid.nrows), (100, 100));
        assert!(grid.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rasterize_peak_is_attained_next_to_person() {
        let p = defaults();
        let persons = [Pose::new(1.0, 2.0, 0.5)];
        let grid = rasterize_field(
            &persons,
            ProbeHeading::TowardNearest,
            Rect::new(-5.0, -5.0, 10.0, 10.0),
            0.25,
            &p,
        )
        .unwrap();
        // inverse-square decay: the cell nearest the person attains the grid
        // maximum (the cap makes the peak a small plateau, not a point)
        let max = grid.max_value();
        let col = ((1.0 - grid.x0) / grid.resolution) as usize;
        let row = ((2.0 - grid.y0) / grid.resolution) as usize;
        assert!((grid.at(row, col) - max).abs() < 1e-12, "near-person cell {} vs max {max}", grid.at(row, col));
        // far cells sit strictly below the near-person plateau
        assert!(grid.at(0, 0) < max / 10.0);
        // per-pair clamp bounds every cell by the person count
        assert!(grid.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn rasterize_cell_on_person_holds_clamped_maximum() {
        let p = defaults();
        // person exactly on a cell center plus a second person elsewhere
        let persons = [Pose::new(0.5, 0.5, 1.0), Pose::new(-0.5, -0.5, 0.0)];
        let grid =
            rasterize_field(&persons, ProbeHeading::Fixed(0.0), Rect::new(-1.0, -1.0, 2.0, 2.0), 1.0, &p).unwrap();
        // row 1, col 1 is the (0.5, 0.5) cell: 1.0 from the coincident
        // person plus the other person's clamped contribution
        let v = grid.at(1, 1);
        let other = pairwise_field(&Pose::new(0.5, 0.5, 0.0), &persons[1], &p).unwrap();
        assert!((v - (1.0 + other)).abs() < 1e-12, "got {v}, expected {}", 1.0 + other);
    }

    #[test]
    fn rasterize_rejects_bad_bounds() {
        let p = defaults();
        assert!(matches!(
            rasterize_field::<f64>(&[], ProbeHeading::Fixed(0.0), Rect::new(0.0, 0.0, 0.0, 5.0), 0.1, &p),
            Err(Error::InvalidBounds(_))
        ));
        assert!(matches!(
            rasterize_field::<f64>(&[], ProbeHeading::Fixed(0.0), Rect::new(0.0, 0.0, 5.0, 5.0), 0.0, &p),
            Err(Error::InvalidBounds(_))
        ));
    }

    #[test]
    fn grid_csv_header_and_shape() {
        let p = defaults();
        let grid =
            rasterize_field(&[Pose::new(0.0, 0.0, 0.0)], ProbeHeading::Fixed(0.0), Rect::new(-1.0, -1.0, 2.0, 2.0), 0.5, &p)
                .unwrap();
        let mut out = Vec::new();
        grid.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# "));
        assert!(header.ends_with(",4,4"));
        assert_eq!(lines.count(), 4);
    }
}
